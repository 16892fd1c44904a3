#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hydra {

// One dependency-parsed sentence. heads[i] is the 1-based index of token i's
// governor; 0 marks the root.
struct ParsedSentence {
    std::vector<std::string> tokens;
    std::vector<int> heads;

    int size() const { return static_cast<int>(tokens.size()); }
};

// Reads CoNLL-U: blank-line separated sentences, tab-separated token lines
// with ID in column 1, FORM in column 2 and HEAD in column 7. Comment lines,
// multiword-token ranges ("3-4") and empty nodes ("5.1") are skipped.
// Throws DataError with a line number on malformed input.
std::vector<ParsedSentence> parse_conllu(std::istream& in);
std::vector<ParsedSentence> parse_conllu_file(const std::string& path);

// Minimal round-trip serialization: ID, FORM, HEAD, underscores elsewhere.
void write_conllu(const std::vector<ParsedSentence>& sentences, std::ostream& out);

}  // namespace hydra
