#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hydra {

struct LabeledExample {
    std::string text;
    int class_id = -1;     // dense index in first-seen order
    double value = 0.0;    // numeric label when parseable (regression tasks)
    std::string raw_label;
};

struct LabeledData {
    std::vector<LabeledExample> examples;
    std::vector<std::string> class_names;  // first-seen order

    bool empty() const { return examples.empty(); }
    std::size_t size() const { return examples.size(); }
};

// Two-column UTF-8 TSV with the literal header "text<TAB>label". Duplicate
// rows are kept. Throws DataError with a line number on malformed rows.
LabeledData load_labeled_tsv(std::istream& in);
LabeledData load_labeled_tsv_file(const std::string& path);

void save_labeled_tsv(const LabeledData& data, std::ostream& out);
void save_labeled_tsv_file(const LabeledData& data, const std::string& path);

// Remaps class ids onto the reference split's first-seen order so train and
// dev files agree. A label absent from the reference is a ConfigError.
void align_classes(LabeledData& data, const LabeledData& reference);

}  // namespace hydra
