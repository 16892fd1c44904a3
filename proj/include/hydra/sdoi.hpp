#pragma once

#include <cstdint>
#include <vector>

#include "hydra/conllu.hpp"
#include "hydra/tensor.hpp"

namespace hydra {

// Binary word-pair relation matrix: symmetric with unit diagonal.
struct SdoiMatrix {
    int n = 0;
    std::vector<std::uint8_t> cells;

    std::uint8_t at(int i, int j) const {
        return cells[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + j];
    }
    std::uint8_t& at(int i, int j) {
        return cells[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + j];
    }
    int ones_count() const;
};

// cells[i][j] = 1 iff i == j, or token i governs token j, or token j governs
// token i (undirected dependency adjacency with self-loops).
SdoiMatrix build_sdoi(const ParsedSentence& s);

// Variant: relate every token to all of its ancestors (and, symmetrically,
// descendants) instead of only its direct governor.
SdoiMatrix build_sdoi_closure(const ParsedSentence& s);

struct AlignedTarget {
    Tensor target;  // seq_len x seq_len, the matrix embedded at rows/cols 1..n
    Tensor mask;    // 1 on the n x n word block, 0 on the CLS row/col and padding
};

// Places the word-indexed matrix on the model's token axis: position 0 is
// CLS, words occupy 1..n. Requires n + 1 <= seq_len.
AlignedTarget align_sdoi_to_tokens(const SdoiMatrix& m, int seq_len);

}  // namespace hydra
