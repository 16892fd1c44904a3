#include "hydra/dataset.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "hydra/errors.hpp"

namespace hydra {

LabeledData load_labeled_tsv(std::istream& in) {
    LabeledData data;
    std::unordered_map<std::string, int> class_ids;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "text\tlabel") {
                throw DataError("line 1: expected header \"text<TAB>label\", got \"" + line +
                                "\"");
            }
            continue;
        }
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw DataError("line " + std::to_string(line_no) +
                            ": expected exactly 2 tab-separated columns");
        }
        LabeledExample ex;
        ex.text = line.substr(0, tab);
        ex.raw_label = line.substr(tab + 1);
        if (ex.raw_label.empty()) {
            throw DataError("line " + std::to_string(line_no) + ": empty label");
        }
        const auto [it, inserted] =
            class_ids.emplace(ex.raw_label, static_cast<int>(data.class_names.size()));
        if (inserted) data.class_names.push_back(ex.raw_label);
        ex.class_id = it->second;

        char* end = nullptr;
        const double parsed = std::strtod(ex.raw_label.c_str(), &end);
        ex.value = (end != ex.raw_label.c_str() && *end == '\0')
                       ? parsed
                       : std::numeric_limits<double>::quiet_NaN();
        data.examples.push_back(std::move(ex));
    }
    if (line_no == 0) throw DataError("empty file: missing \"text<TAB>label\" header");
    return data;
}

LabeledData load_labeled_tsv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open task TSV: " + path);
    try {
        return load_labeled_tsv(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

void save_labeled_tsv(const LabeledData& data, std::ostream& out) {
    out << "text\tlabel\n";
    for (const LabeledExample& ex : data.examples) out << ex.text << '\t' << ex.raw_label << '\n';
}

void save_labeled_tsv_file(const LabeledData& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write task TSV: " + path);
    save_labeled_tsv(data, out);
}

void align_classes(LabeledData& data, const LabeledData& reference) {
    std::unordered_map<std::string, int> ids;
    for (std::size_t i = 0; i < reference.class_names.size(); ++i) {
        ids.emplace(reference.class_names[i], static_cast<int>(i));
    }
    for (LabeledExample& ex : data.examples) {
        const auto it = ids.find(ex.raw_label);
        if (it == ids.end()) {
            throw ConfigError("label \"" + ex.raw_label +
                              "\" does not occur in the training split");
        }
        ex.class_id = it->second;
    }
    data.class_names = reference.class_names;
}

}  // namespace hydra
