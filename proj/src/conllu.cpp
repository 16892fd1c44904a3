#include "hydra/conllu.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hydra/errors.hpp"

namespace hydra {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

bool parse_int(const std::string& s, int& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

bool is_plain_id(const std::string& id) {
    // Multiword ranges ("3-4") and empty nodes ("5.1") are skipped entirely.
    return id.find('-') == std::string::npos && id.find('.') == std::string::npos;
}

void finish_sentence(std::vector<std::string>& tokens, std::vector<int>& heads,
                     std::vector<ParsedSentence>& out, long first_line) {
    if (tokens.empty()) return;
    const int n = static_cast<int>(tokens.size());
    int roots = 0;
    for (int i = 0; i < n; ++i) {
        if (heads[static_cast<std::size_t>(i)] > n) {
            throw DataError("sentence starting at line " + std::to_string(first_line) +
                            ": head index " + std::to_string(heads[static_cast<std::size_t>(i)]) +
                            " exceeds sentence length " + std::to_string(n));
        }
        if (heads[static_cast<std::size_t>(i)] == i + 1) {
            throw DataError("sentence starting at line " + std::to_string(first_line) +
                            ": token " + std::to_string(i + 1) + " governs itself");
        }
        if (heads[static_cast<std::size_t>(i)] == 0) ++roots;
    }
    if (roots == 0) {
        throw DataError("sentence starting at line " + std::to_string(first_line) +
                        ": no token has head 0");
    }
    ParsedSentence s;
    s.tokens = std::move(tokens);
    s.heads = std::move(heads);
    out.push_back(std::move(s));
    tokens.clear();
    heads.clear();
}

}  // namespace

std::vector<ParsedSentence> parse_conllu(std::istream& in) {
    std::vector<ParsedSentence> out;
    std::vector<std::string> tokens;
    std::vector<int> heads;
    std::string line;
    long line_no = 0;
    long sentence_start = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            finish_sentence(tokens, heads, out, sentence_start);
            sentence_start = line_no + 1;
            continue;
        }
        if (line[0] == '#') continue;
        if (tokens.empty()) sentence_start = line_no;

        const std::vector<std::string> fields = split_tabs(line);
        if (fields.size() < 8) {
            throw DataError("line " + std::to_string(line_no) + ": expected >= 8 tab-separated " +
                            "columns, got " + std::to_string(fields.size()));
        }
        if (!is_plain_id(fields[0])) continue;

        int head = 0;
        if (!parse_int(fields[6], head) || head < 0) {
            throw DataError("line " + std::to_string(line_no) + ": HEAD column is not a " +
                            "non-negative integer: \"" + fields[6] + "\"");
        }
        tokens.push_back(fields[1]);
        heads.push_back(head);
    }
    finish_sentence(tokens, heads, out, sentence_start);
    return out;
}

std::vector<ParsedSentence> parse_conllu_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open CoNLL-U file: " + path);
    try {
        return parse_conllu(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_conllu(const std::vector<ParsedSentence>& sentences, std::ostream& out) {
    for (const ParsedSentence& s : sentences) {
        for (int i = 0; i < s.size(); ++i) {
            out << (i + 1) << '\t' << s.tokens[static_cast<std::size_t>(i)]
                << "\t_\t_\t_\t_\t" << s.heads[static_cast<std::size_t>(i)] << "\t_\t_\t_\n";
        }
        out << '\n';
    }
}

}  // namespace hydra
