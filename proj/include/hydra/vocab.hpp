#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace hydra {

enum class LengthPolicy {
    kReject,    // head pretraining: long sentences are dropped upstream
    kTruncate,  // fine-tuning: sequence-level labels survive truncation
};

// Word-level vocabulary with three reserved ids. Ids are dense; tokens from
// the corpus start at id 3, in order of first appearance.
class Vocabulary {
  public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCls = 2;
    static constexpr int kReserved = 3;

    static Vocabulary build(const std::vector<std::vector<std::string>>& documents,
                            int min_count);
    static Vocabulary load(std::istream& in);
    static Vocabulary load_file(const std::string& path);

    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;

    // Token must already be lowercased; unknown tokens map to kUnk.
    int id(const std::string& token) const;
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(tokens_.size()) + kReserved; }

  private:
    std::vector<std::string> tokens_;  // index = id - kReserved
    std::unordered_map<std::string, int> ids_;
};

std::string lowercase(const std::string& s);

// Lowercased whitespace-and-punctuation split; each punctuation character
// becomes its own token.
std::vector<std::string> word_split(const std::string& text);

// [CLS] + one id per word of `text`. Sequences longer than max_len - 1 words
// are truncated or rejected (DataError) per policy.
std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab, int max_len,
                          LengthPolicy policy);

// [CLS] + one id per pre-split (surface-form) token; forms are lowercased here.
std::vector<int> ids_for_words(const std::vector<std::string>& words, const Vocabulary& vocab);

}  // namespace hydra
