#include "hydra/vocab.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "hydra/errors.hpp"

namespace hydra {

std::string lowercase(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) out.push_back(static_cast<char>(std::tolower(c)));
    return out;
}

std::vector<std::string> word_split(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    auto flush = [&]() {
        if (!current.empty()) {
            words.push_back(current);
            current.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (c < 0x80 && std::ispunct(c)) {
            flush();
            words.emplace_back(1, static_cast<char>(c));
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return words;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& documents,
                             int min_count) {
    std::unordered_map<std::string, int> counts;
    for (const auto& doc : documents)
        for (const std::string& tok : doc) ++counts[tok];

    Vocabulary v;
    for (const auto& doc : documents) {
        for (const std::string& tok : doc) {
            if (counts[tok] < min_count) continue;
            if (v.ids_.contains(tok)) continue;
            v.ids_.emplace(tok, static_cast<int>(v.tokens_.size()) + kReserved);
            v.tokens_.push_back(tok);
        }
    }
    return v;
}

Vocabulary Vocabulary::load(std::istream& in) {
    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (v.ids_.contains(line)) {
            throw DataError("vocabulary file: duplicate token \"" + line + "\"");
        }
        v.ids_.emplace(line, static_cast<int>(v.tokens_.size()) + kReserved);
        v.tokens_.push_back(line);
    }
    return v;
}

Vocabulary Vocabulary::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open vocabulary file: " + path);
    return load(in);
}

void Vocabulary::save(std::ostream& out) const {
    for (const std::string& tok : tokens_) out << tok << '\n';
}

void Vocabulary::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write vocabulary file: " + path);
    save(out);
}

int Vocabulary::id(const std::string& token) const {
    const auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    static const std::string kReservedNames[kReserved] = {"[PAD]", "[UNK]", "[CLS]"};
    if (id < kReserved) return kReservedNames[id];
    return tokens_[static_cast<std::size_t>(id - kReserved)];
}

std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab, int max_len,
                          LengthPolicy policy) {
    std::vector<std::string> words = word_split(text);
    if (static_cast<int>(words.size()) > max_len - 1) {
        if (policy == LengthPolicy::kReject) {
            throw DataError("tokenize: " + std::to_string(words.size()) +
                            " words exceed max_len - 1 = " + std::to_string(max_len - 1));
        }
        words.resize(static_cast<std::size_t>(max_len - 1));
    }
    std::vector<int> ids;
    ids.reserve(words.size() + 1);
    ids.push_back(Vocabulary::kCls);
    for (const std::string& w : words) ids.push_back(vocab.id(w));
    return ids;
}

std::vector<int> ids_for_words(const std::vector<std::string>& words, const Vocabulary& vocab) {
    std::vector<int> ids;
    ids.reserve(words.size() + 1);
    ids.push_back(Vocabulary::kCls);
    for (const std::string& w : words) ids.push_back(vocab.id(lowercase(w)));
    return ids;
}

}  // namespace hydra
