#include "hydra/sdoi.hpp"

#include "hydra/errors.hpp"

namespace hydra {

int SdoiMatrix::ones_count() const {
    int count = 0;
    for (std::uint8_t c : cells) count += c;
    return count;
}

SdoiMatrix build_sdoi(const ParsedSentence& s) {
    const int n = s.size();
    SdoiMatrix m;
    m.n = n;
    m.cells.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    for (int i = 0; i < n; ++i) {
        const int head = s.heads[static_cast<std::size_t>(i)];
        if (head == 0) continue;
        m.at(i, head - 1) = 1;
        m.at(head - 1, i) = 1;
    }
    return m;
}

SdoiMatrix build_sdoi_closure(const ParsedSentence& s) {
    const int n = s.size();
    SdoiMatrix m;
    m.n = n;
    m.cells.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        m.at(i, i) = 1;
        // Walk to the root; the walk terminates because parse_conllu rejects
        // self-governance and heads form a finite chain (cycles would loop
        // forever, so cap at n hops and report).
        int cur = i;
        for (int hops = 0; hops < n; ++hops) {
            const int head = s.heads[static_cast<std::size_t>(cur)];
            if (head == 0) break;
            m.at(i, head - 1) = 1;
            m.at(head - 1, i) = 1;
            cur = head - 1;
            if (hops == n - 1) {
                throw DataError("build_sdoi_closure: dependency heads contain a cycle");
            }
        }
    }
    return m;
}

AlignedTarget align_sdoi_to_tokens(const SdoiMatrix& m, int seq_len) {
    if (m.n + 1 > seq_len) {
        throw DataError("align_sdoi_to_tokens: sentence of " + std::to_string(m.n) +
                        " words does not fit in sequence length " + std::to_string(seq_len) +
                        " (one slot is reserved for CLS)");
    }
    AlignedTarget out;
    out.target = Tensor::zeros({seq_len, seq_len});
    out.mask = Tensor::zeros({seq_len, seq_len});
    for (int i = 0; i < m.n; ++i) {
        for (int j = 0; j < m.n; ++j) {
            out.target.at(1 + i, 1 + j) = static_cast<double>(m.at(i, j));
            out.mask.at(1 + i, 1 + j) = 1.0;
        }
    }
    return out;
}

}  // namespace hydra
