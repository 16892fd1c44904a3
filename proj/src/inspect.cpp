#include "hydra/inspect.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hydra/errors.hpp"
#include "hydra/sdoi.hpp"

namespace hydra {

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_matrix_csv(const Tensor& m, const std::vector<std::string>& labels,
                      const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write CSV: " + path);
    for (const std::string& label : labels) out << ',' << csv_escape(label);
    out << '\n';
    char buf[32];
    for (int i = 0; i < m.dim(0); ++i) {
        out << csv_escape(labels[static_cast<std::size_t>(i)]);
        for (int j = 0; j < m.dim(1); ++j) {
            std::snprintf(buf, sizeof(buf), "%.6f", m.at(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace

double masked_mse(const Tensor& pred, const Tensor& target, const Tensor& mask) {
    double acc = 0.0, mask_sum = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        acc += mask.data[i] * d * d;
        mask_sum += mask.data[i];
    }
    if (mask_sum == 0.0) throw std::invalid_argument("masked_mse: mask selects no cells");
    return acc / mask_sum;
}

InspectionResult write_inspection_csvs(Model& model, const Vocabulary& vocab,
                                       const ParsedSentence& sentence,
                                       const std::string& out_dir) {
    if (!model.hydra) {
        throw ConfigError("inspect: model has no attached layer to read heads from");
    }
    const int n = sentence.size();
    if (n == 0) throw DataError("inspect: empty sentence");
    const std::vector<int> ids = ids_for_words(sentence.tokens, vocab);

    Tape tape(false);
    const Tensor hidden =
        tape.tensor(body_encode(tape, model.body, ids, static_cast<int>(ids.size())));

    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(n) + 1);
    labels.emplace_back("CLS");
    for (const std::string& tok : sentence.tokens) labels.push_back(tok);

    std::filesystem::create_directories(out_dir);
    InspectionResult result;
    result.n = n;

    HydraHeads view;
    view.wq = model.hydra->attn.wq;
    view.wk = model.hydra->attn.wk;
    const int n_heads = model.config().n_heads;
    for (int h = 0; h < n_heads; ++h) {
        const Tensor logits = hydra_logits(view, n_heads, hidden, h);
        const std::string path =
            (std::filesystem::path(out_dir) / ("head_" + std::to_string(h) + ".csv")).string();
        write_matrix_csv(logits, labels, path);
        result.files.push_back(path);
    }

    const AlignedTarget gold = align_sdoi_to_tokens(build_sdoi(sentence), n + 1);
    const std::string gold_path = (std::filesystem::path(out_dir) / "gold.csv").string();
    write_matrix_csv(gold.target, labels, gold_path);
    result.files.push_back(gold_path);
    return result;
}

}  // namespace hydra
