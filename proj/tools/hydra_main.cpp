#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hydra/checkpoint.hpp"
#include "hydra/conllu.hpp"
#include "hydra/dataset.hpp"
#include "hydra/errors.hpp"
#include "hydra/finetune.hpp"
#include "hydra/inspect.hpp"
#include "hydra/model.hpp"
#include "hydra/pretrain.hpp"
#include "hydra/reports.hpp"
#include "hydra/runconfig.hpp"
#include "hydra/vocab.hpp"

namespace fs = std::filesystem;
using namespace hydra;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "run configuration file (key = value lines)");
    cmd->add_option("--set", opts.sets, "override a config key, e.g. --set seed=7")
        ->type_name("KEY=VALUE");
}

std::string trim_copy(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t");
    const std::size_t b = s.find_last_not_of(" \t");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

RunConfig resolve_config(const CommonOpts& opts) {
    RunConfig rc =
        opts.config_path.empty() ? RunConfig{} : RunConfig::from_file(opts.config_path);
    for (const std::string& kv : opts.sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects KEY=VALUE, got \"" + kv + "\"");
        }
        rc.set(trim_copy(kv.substr(0, eq)), trim_copy(kv.substr(eq + 1)));
    }
    return rc;
}

void refuse_overwrite(const std::string& path, bool force) {
    if (!force && fs::exists(path)) {
        throw ConfigError("output already exists: " + path + " (pass --force to overwrite)");
    }
}

std::vector<ParsedSentence> load_corpora(const std::vector<std::string>& paths) {
    std::vector<ParsedSentence> corpus;
    for (const std::string& path : paths) {
        std::vector<ParsedSentence> part = parse_conllu_file(path);
        corpus.insert(corpus.end(), std::make_move_iterator(part.begin()),
                      std::make_move_iterator(part.end()));
    }
    return corpus;
}

Vocabulary build_vocab_from_inputs(const std::vector<std::string>& conllu_paths,
                                   const std::vector<std::string>& tsv_paths, int cutoff) {
    std::vector<std::vector<std::string>> docs;
    for (const std::string& path : conllu_paths) {
        for (const ParsedSentence& s : parse_conllu_file(path)) {
            std::vector<std::string> doc;
            doc.reserve(s.tokens.size());
            for (const std::string& tok : s.tokens) doc.push_back(lowercase(tok));
            docs.push_back(std::move(doc));
        }
    }
    for (const std::string& path : tsv_paths) {
        for (const LabeledExample& ex : load_labeled_tsv_file(path).examples) {
            docs.push_back(word_split(ex.text));
        }
    }
    return Vocabulary::build(docs, cutoff);
}

Vocabulary load_vocab_checked(const std::string& path, const ModelConfig& config) {
    Vocabulary vocab = Vocabulary::load_file(path);
    if (vocab.size() != config.vocab_size) {
        throw ConfigError("vocabulary " + path + " has " + std::to_string(vocab.size()) +
                          " ids but the checkpoint expects " +
                          std::to_string(config.vocab_size));
    }
    return vocab;
}

TaskSpec make_task(const std::string& kind, const LabeledData& train) {
    TaskSpec task;
    if (kind == "classification") {
        task.kind = TaskKind::kClassification;
        task.num_classes = static_cast<int>(train.class_names.size());
    } else if (kind == "regression") {
        task.kind = TaskKind::kRegression;
    } else {
        throw ConfigError("unknown task kind \"" + kind +
                          "\" (expected classification or regression)");
    }
    task.validate();
    return task;
}

// --- subcommands -----------------------------------------------------------

struct InitBodyOpts {
    CommonOpts common;
    std::vector<std::string> corpus;
    std::vector<std::string> tsv;
    std::string vocab_in;
    std::string vocab_out;
    std::string out;
    bool force = false;
};

int cmd_init_body(const InitBodyOpts& o) {
    const RunConfig rc = resolve_config(o.common);
    refuse_overwrite(o.out, o.force);

    Vocabulary vocab;
    if (!o.vocab_in.empty()) {
        vocab = Vocabulary::load_file(o.vocab_in);
    } else {
        if (o.corpus.empty() && o.tsv.empty()) {
            throw ConfigError("init-body needs --vocab, or --corpus/--tsv to build one");
        }
        if (o.vocab_out.empty()) {
            throw ConfigError("init-body builds a vocabulary; give --vocab-out for it");
        }
        refuse_overwrite(o.vocab_out, o.force);
        vocab = build_vocab_from_inputs(o.corpus, o.tsv, rc.vocab_cutoff);
        vocab.save_file(o.vocab_out);
    }

    const ModelConfig mc = rc.model_config(vocab.size());
    mc.validate();
    TransformerBody body = init_body(mc, rc.seed);
    save_checkpoint(checkpoint_from_params("body", mc, collect_parameters(body)), o.out);
    rc.write_resolved(o.out + ".config");
    std::cout << "body checkpoint: " << o.out << " (vocab " << vocab.size() << ", "
              << mc.n_body_layers << " layers)\n";
    return 0;
}

struct PretrainOpts {
    CommonOpts common;
    std::string body_path;
    std::string vocab_path;
    std::vector<std::string> corpus;
    std::string out;
    std::string log_path;
    bool force = false;
};

int cmd_pretrain_heads(const PretrainOpts& o) {
    const RunConfig rc = resolve_config(o.common);
    refuse_overwrite(o.out, o.force);
    const std::string log_path = o.log_path.empty() ? o.out + ".log.jsonl" : o.log_path;

    TransformerBody body = body_from_checkpoint(load_checkpoint(o.body_path));
    const Vocabulary vocab = load_vocab_checked(o.vocab_path, body.config);
    const CorpusSplit split = split_corpus(load_corpora(o.corpus), 0.1);

    PretrainConfig pc = rc.pretrain_config();
    pc.max_len = body.config.max_len;
    auto [heads, report] = pretrain_heads(body, vocab, split, pc);

    export_heads(heads, body.config, o.out);
    write_pretrain_log(report, log_path);
    rc.write_resolved(o.out + ".config");
    std::cout << "heads checkpoint: " << o.out << "\n"
              << "sentences used " << report.sentences_used << ", dropped "
              << report.sentences_dropped << "\n"
              << "initial loss estimate " << report.initial_estimate << ", final val loss "
              << report.epochs.back().val_loss << "\n";
    return 0;
}

struct FinetuneOpts {
    CommonOpts common;
    std::string body_path;
    std::string heads_path;
    std::string vocab_path;
    std::string train_path;
    std::string dev_path;
    std::string task_kind = "classification";
    std::string out;
    std::string report_path;
    bool force = false;
};

int cmd_finetune(const FinetuneOpts& o) {
    const RunConfig rc = resolve_config(o.common);
    refuse_overwrite(o.out, o.force);
    const std::string report_path =
        o.report_path.empty() ? o.out + ".report.json" : o.report_path;

    TransformerBody body = body_from_checkpoint(load_checkpoint(o.body_path));
    const Vocabulary vocab = load_vocab_checked(o.vocab_path, body.config);

    Model model;
    if (o.heads_path.empty()) {
        model = body_only_model(std::move(body));
    } else {
        const HydraHeads heads = heads_from_checkpoint(load_checkpoint(o.heads_path));
        model = attach_hydra(std::move(body), heads, rc.seed);
    }

    LabeledData train = load_labeled_tsv_file(o.train_path);
    LabeledData dev = o.dev_path.empty() ? train : load_labeled_tsv_file(o.dev_path);
    if (!o.dev_path.empty()) align_classes(dev, train);
    const TaskSpec task = make_task(o.task_kind, train);

    FinetuneConfig fc = rc.finetune_config();
    fc.max_len = model.config().max_len;
    EvalReport report = finetune(model, vocab, train, dev, task, fc);
    report.config_fingerprint = rc.fingerprint();

    save_checkpoint(checkpoint_from_params("model", model.config(), collect_parameters(model)),
                    o.out);
    write_eval_report(report, fs::path(o.train_path).filename().string(), model.layer_count(),
                      report_path);
    rc.write_resolved(o.out + ".config");
    std::cout << "model checkpoint: " << o.out << " (" << model.layer_count() << " layers)\n"
              << report.metric_name << ": train " << report.train_metric << ", dev "
              << report.dev_metric << " (best epoch " << report.best_epoch << ")\n";
    return 0;
}

struct EvaluateOpts {
    CommonOpts common;
    std::string model_path;
    std::string vocab_path;
    std::string data_path;
    std::string task_kind = "classification";
    std::string report_path;
};

int cmd_evaluate(const EvaluateOpts& o) {
    const RunConfig rc = resolve_config(o.common);
    Model model = model_from_checkpoint(load_checkpoint(o.model_path));
    if (!model.task_head) {
        throw ConfigError("model checkpoint " + o.model_path + " carries no task head");
    }
    const Vocabulary vocab = load_vocab_checked(o.vocab_path, model.config());
    const LabeledData data = load_labeled_tsv_file(o.data_path);
    TaskSpec task;
    if (o.task_kind == "classification") {
        // The class count is the trained head's output width, not the file's.
        task.kind = TaskKind::kClassification;
        task.num_classes = model.task_head->weight.value.dim(0);
        task.validate();
        for (const LabeledExample& ex : data.examples) {
            if (ex.class_id >= task.num_classes) {
                throw ConfigError("data has more classes than the model's task head (" +
                                  std::to_string(task.num_classes) + ")");
            }
        }
    } else {
        task = make_task(o.task_kind, data);
    }

    EvalReport report = evaluate(model, vocab, data, task, model.config().max_len);
    report.config_fingerprint = rc.fingerprint();
    std::cout << report.metric_name << ": " << report.dev_metric << " on " << data.size()
              << " examples (config " << report.config_fingerprint << ")\n";
    if (!o.report_path.empty()) {
        write_eval_report(report, fs::path(o.data_path).filename().string(),
                          model.layer_count(), o.report_path);
        rc.write_resolved(o.report_path + ".config");
    }
    return 0;
}

struct InspectOpts {
    CommonOpts common;
    std::string model_path;
    std::string heads_path;
    std::string vocab_path;
    std::string conllu_path;
    int index = 0;
    std::string out_dir;
};

int cmd_inspect(const InspectOpts& o) {
    const RunConfig rc = resolve_config(o.common);
    const Checkpoint ckpt = load_checkpoint(o.model_path);

    Model model;
    if (ckpt.kind == "body") {
        TransformerBody body = body_from_checkpoint(ckpt);
        const HydraHeads heads =
            o.heads_path.empty() ? init_hydra_heads(body.config, rc.seed)
                                 : heads_from_checkpoint(load_checkpoint(o.heads_path));
        model = attach_hydra(std::move(body), heads, rc.seed);
    } else {
        model = model_from_checkpoint(ckpt);
        if (!o.heads_path.empty()) {
            const HydraHeads heads = heads_from_checkpoint(load_checkpoint(o.heads_path));
            model = attach_hydra(std::move(model.body), heads, rc.seed);
        } else if (!model.hydra) {
            throw ConfigError("model checkpoint has no appended layer; give --heads");
        }
    }

    const Vocabulary vocab = load_vocab_checked(o.vocab_path, model.config());
    const std::vector<ParsedSentence> sentences = parse_conllu_file(o.conllu_path);
    if (sentences.empty()) throw DataError(o.conllu_path + ": no sentences");
    if (o.index < 0 || o.index >= static_cast<int>(sentences.size())) {
        throw DataError("--index " + std::to_string(o.index) + " outside 0.." +
                        std::to_string(sentences.size() - 1));
    }

    const InspectionResult result = write_inspection_csvs(
        model, vocab, sentences[static_cast<std::size_t>(o.index)], o.out_dir);
    rc.write_resolved((fs::path(o.out_dir) / "run.config").string());
    std::cout << "wrote " << result.files.size() << " CSV files to " << o.out_dir << " ("
              << (result.n + 1) << "x" << (result.n + 1) << " each)\n";
    return 0;
}

struct CompareOpts {
    CommonOpts common;
    std::string body_path;
    std::string heads_path;
    std::string vocab_path;
    std::string train_path;
    std::string dev_path;
    std::string task_kind = "classification";
    std::vector<std::uint64_t> seeds;
    std::string out_json;
    std::string out_text;
    bool force = false;
};

int cmd_compare(const CompareOpts& o) {
    const RunConfig rc = resolve_config(o.common);
    refuse_overwrite(o.out_json, o.force);
    refuse_overwrite(o.out_text, o.force);

    const TransformerBody body = body_from_checkpoint(load_checkpoint(o.body_path));
    const HydraHeads heads = heads_from_checkpoint(load_checkpoint(o.heads_path));
    const Vocabulary vocab = load_vocab_checked(o.vocab_path, body.config);
    LabeledData train = load_labeled_tsv_file(o.train_path);
    LabeledData dev = load_labeled_tsv_file(o.dev_path);
    align_classes(dev, train);
    const TaskSpec task = make_task(o.task_kind, train);

    FinetuneConfig fc = rc.finetune_config();
    fc.max_len = body.config.max_len;
    ComparisonTable table = compare_baseline(body, heads, vocab, train, dev, task, o.seeds, fc);
    table.config_fingerprint = rc.fingerprint();
    write_comparison_table(table, o.out_json, o.out_text);
    rc.write_resolved(o.out_json + ".config");
    std::cout << comparison_table_text(table);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale transformer with dependency-pretrained attention heads"};
    app.require_subcommand(1);

    InitBodyOpts init_opts;
    CLI::App* init = app.add_subcommand("init-body", "initialize and save a transformer body");
    add_common(init, init_opts.common);
    init->add_option("--corpus", init_opts.corpus, "CoNLL-U files to build the vocabulary from");
    init->add_option("--tsv", init_opts.tsv, "task TSVs whose text joins the vocabulary");
    init->add_option("--vocab", init_opts.vocab_in, "existing vocabulary file to reuse");
    init->add_option("--vocab-out", init_opts.vocab_out, "where to write a built vocabulary");
    init->add_option("--out", init_opts.out, "body checkpoint path")->required();
    init->add_flag("--force", init_opts.force, "overwrite existing outputs");

    PretrainOpts pre_opts;
    CLI::App* pre = app.add_subcommand("pretrain-heads",
                                       "train appended-layer W_q/W_k on relation matrices");
    add_common(pre, pre_opts.common);
    pre->add_option("--body", pre_opts.body_path, "body checkpoint")->required();
    pre->add_option("--vocab", pre_opts.vocab_path, "vocabulary file")->required();
    pre->add_option("--corpus", pre_opts.corpus, "CoNLL-U treebank files")->required();
    pre->add_option("--out", pre_opts.out, "heads-only checkpoint path")->required();
    pre->add_option("--log", pre_opts.log_path, "JSONL training log (default <out>.log.jsonl)");
    pre->add_flag("--force", pre_opts.force, "overwrite existing outputs");

    FinetuneOpts ft_opts;
    CLI::App* ft = app.add_subcommand("finetune", "fine-tune on a labeled task");
    add_common(ft, ft_opts.common);
    ft->add_option("--body", ft_opts.body_path, "body checkpoint")->required();
    ft->add_option("--heads", ft_opts.heads_path,
                   "heads-only checkpoint (omit for the plain baseline)");
    ft->add_option("--vocab", ft_opts.vocab_path, "vocabulary file")->required();
    ft->add_option("--train", ft_opts.train_path, "training TSV")->required();
    ft->add_option("--dev", ft_opts.dev_path, "dev TSV (defaults to the training set)");
    ft->add_option("--task", ft_opts.task_kind, "classification|regression");
    ft->add_option("--out", ft_opts.out, "model checkpoint path")->required();
    ft->add_option("--report", ft_opts.report_path, "report JSON (default <out>.report.json)");
    ft->add_flag("--force", ft_opts.force, "overwrite existing outputs");

    EvaluateOpts ev_opts;
    CLI::App* ev = app.add_subcommand("evaluate", "evaluate a fine-tuned model");
    add_common(ev, ev_opts.common);
    ev->add_option("--model", ev_opts.model_path, "model checkpoint")->required();
    ev->add_option("--vocab", ev_opts.vocab_path, "vocabulary file")->required();
    ev->add_option("--data", ev_opts.data_path, "TSV to score")->required();
    ev->add_option("--task", ev_opts.task_kind, "classification|regression");
    ev->add_option("--report", ev_opts.report_path, "report JSON path");

    InspectOpts in_opts;
    CLI::App* ins = app.add_subcommand("inspect",
                                       "dump per-head attention logits and the gold matrix");
    add_common(ins, in_opts.common);
    ins->add_option("--model", in_opts.model_path, "body or model checkpoint")->required();
    ins->add_option("--heads", in_opts.heads_path, "heads-only checkpoint to overlay");
    ins->add_option("--vocab", in_opts.vocab_path, "vocabulary file")->required();
    ins->add_option("--conllu", in_opts.conllu_path, "parsed sentences")->required();
    ins->add_option("--index", in_opts.index, "sentence index (default 0)");
    ins->add_option("--out-dir", in_opts.out_dir, "CSV output directory")->required();

    CompareOpts cmp_opts;
    CLI::App* cmp = app.add_subcommand(
        "compare", "fine-tune baseline, fresh-layer and pretrained variants");
    add_common(cmp, cmp_opts.common);
    cmp->add_option("--body", cmp_opts.body_path, "body checkpoint")->required();
    cmp->add_option("--heads", cmp_opts.heads_path, "heads-only checkpoint")->required();
    cmp->add_option("--vocab", cmp_opts.vocab_path, "vocabulary file")->required();
    cmp->add_option("--train", cmp_opts.train_path, "training TSV")->required();
    cmp->add_option("--dev", cmp_opts.dev_path, "dev TSV")->required();
    cmp->add_option("--task", cmp_opts.task_kind, "classification|regression");
    cmp->add_option("--seeds", cmp_opts.seeds, "at least three seeds")->required();
    cmp->add_option("--out-json", cmp_opts.out_json, "table JSON path")->required();
    cmp->add_option("--out-text", cmp_opts.out_text, "table text path")->required();
    cmp->add_flag("--force", cmp_opts.force, "overwrite existing outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (init->parsed()) return cmd_init_body(init_opts);
        if (pre->parsed()) return cmd_pretrain_heads(pre_opts);
        if (ft->parsed()) return cmd_finetune(ft_opts);
        if (ev->parsed()) return cmd_evaluate(ev_opts);
        if (ins->parsed()) return cmd_inspect(in_opts);
        if (cmp->parsed()) return cmd_compare(cmp_opts);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
