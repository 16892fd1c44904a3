#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hydra/conllu.hpp"
#include "hydra/synthdata.hpp"

using namespace hydra;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

const fs::path& work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "hydra_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

RunResult run_cli(const std::string& args) {
    const fs::path out = work_dir() / "cmd_output.txt";
    const std::string cmd =
        std::string(HYDRA_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    std::stringstream buf;
    buf << in.rdbuf();
    result.output = buf.str();
    return result;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string table1_path() { return std::string(HYDRA_DATA_DIR) + "/table1.tsv"; }

// Writes the shared fixture corpus once.
const std::string& corpus_path() {
    static const std::string path = [] {
        const fs::path p = work_dir() / "corpus.conllu";
        std::ofstream out(p);
        write_conllu(make_dependency_corpus(80, 21), out);
        return p.string();
    }();
    return path;
}

const std::string kSmall =
    " --set model.d_model=32 --set model.d_ff=64 --set model.max_len=32"
    " --set vocab.cutoff=1";

}  // namespace

TEST_CASE("init-body: determinism, refusal, --force") {
    const fs::path dir = work_dir();
    const std::string base = "init-body --corpus " + corpus_path() + " --tsv " + table1_path() +
                             kSmall + " --vocab-out " + (dir / "vocab.txt").string();

    RunResult r1 = run_cli(base + " --out " + (dir / "body.ckpt").string());
    CHECK(r1.exit_code == 0);
    RunResult r2 = run_cli(base + " --force --out " + (dir / "body_b.ckpt").string());
    CHECK(r2.exit_code == 0);
    CHECK(read_file(dir / "body.ckpt") == read_file(dir / "body_b.ckpt"));
    CHECK(fs::exists(dir / "body.ckpt.config"));

    // Existing output without --force is refused with exit 1.
    RunResult r3 = run_cli(base + " --out " + (dir / "body.ckpt").string());
    CHECK(r3.exit_code == 1);
    CHECK(r3.output.find("--force") != std::string::npos);
    RunResult r4 = run_cli(base + " --force --out " + (dir / "body.ckpt").string());
    CHECK(r4.exit_code == 0);
}

TEST_CASE("invalid config keys are named and exit 1") {
    const RunResult r = run_cli("init-body --set nonsense.knob=4 --corpus " + corpus_path() +
                                " --vocab-out /dev/null --out /dev/null");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("nonsense.knob") != std::string::npos);
}

TEST_CASE("pretrain-heads: artifacts, log length, corrupt input") {
    const fs::path dir = work_dir();
    const std::string heads = (dir / "heads.ckpt").string();
    const RunResult r = run_cli("pretrain-heads --body " + (dir / "body.ckpt").string() +
                                " --vocab " + (dir / "vocab.txt").string() + " --corpus " +
                                corpus_path() + kSmall + " --set pretrain.epochs=2 --out " +
                                heads);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(heads));
    REQUIRE(fs::exists(heads + ".log.jsonl"));
    std::ifstream log(heads + ".log.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(log, line)) ++lines;
    CHECK(lines == 2);  // one record per epoch

    // Corrupt CoNLL-U: nonzero exit with file and line in the message.
    const fs::path bad = dir / "bad.conllu";
    std::ofstream(bad) << "1\tword\t_\t_\t_\t_\tnot_a_number\t_\t_\t_\n";
    const RunResult rb = run_cli("pretrain-heads --body " + (dir / "body.ckpt").string() +
                                 " --vocab " + (dir / "vocab.txt").string() + " --corpus " +
                                 bad.string() + kSmall + " --out " + (dir / "x.ckpt").string());
    CHECK(rb.exit_code == 2);
    CHECK(rb.output.find("bad.conllu") != std::string::npos);
    CHECK(rb.output.find("line 1") != std::string::npos);
}

TEST_CASE("finetune: baseline vs attached layer counts and fingerprints") {
    const fs::path dir = work_dir();
    const std::string common = " --vocab " + (dir / "vocab.txt").string() + " --train " +
                               table1_path() + kSmall + " --set finetune.epochs=3";

    const RunResult base = run_cli("finetune --body " + (dir / "body.ckpt").string() + common +
                                   " --out " + (dir / "m_base.ckpt").string());
    CHECK(base.exit_code == 0);
    const RunResult attached =
        run_cli("finetune --body " + (dir / "body.ckpt").string() + " --heads " +
                (dir / "heads.ckpt").string() + common + " --out " +
                (dir / "m_hydra.ckpt").string());
    CHECK(attached.exit_code == 0);

    const auto base_report =
        nlohmann::json::parse(read_file(dir / "m_base.ckpt.report.json"));
    CHECK(base_report.at("layers").get<int>() == 2);
    CHECK(!base_report.at("config_fingerprint").get<std::string>().empty());
    const auto hydra_report =
        nlohmann::json::parse(read_file(dir / "m_hydra.ckpt.report.json"));
    CHECK(hydra_report.at("layers").get<int>() == 3);
    CHECK(hydra_report.at("history").size() == 3);

    // Re-running with identical config reproduces the checkpoint bytes.
    const RunResult again = run_cli("finetune --body " + (dir / "body.ckpt").string() + common +
                                    " --out " + (dir / "m_base2.ckpt").string());
    CHECK(again.exit_code == 0);
    CHECK(read_file(dir / "m_base.ckpt") == read_file(dir / "m_base2.ckpt"));
}

TEST_CASE("evaluate a saved model") {
    const fs::path dir = work_dir();
    const RunResult r = run_cli("evaluate --model " + (dir / "m_hydra.ckpt").string() +
                                " --vocab " + (dir / "vocab.txt").string() + " --data " +
                                table1_path() + " --report " + (dir / "eval.json").string());
    CHECK(r.exit_code == 0);
    const auto report = nlohmann::json::parse(read_file(dir / "eval.json"));
    CHECK(report.at("metric").get<std::string>() == "accuracy");
    CHECK(report.at("predictions").size() == 10);
}

TEST_CASE("inspect: CSV dimensions and gold domain") {
    const fs::path dir = work_dir();
    const fs::path out_dir = dir / "inspect";
    const RunResult r = run_cli("inspect --model " + (dir / "body.ckpt").string() + " --heads " +
                                (dir / "heads.ckpt").string() + " --vocab " +
                                (dir / "vocab.txt").string() + " --conllu " + corpus_path() +
                                " --index 2 --out-dir " + out_dir.string());
    CHECK(r.exit_code == 0);

    const auto corpus = make_dependency_corpus(80, 21);
    const int n = corpus[2].size();
    int heads_seen = 0;
    for (int h = 0;; ++h) {
        const fs::path csv = out_dir / ("head_" + std::to_string(h) + ".csv");
        if (!fs::exists(csv)) break;
        ++heads_seen;
        std::ifstream in(csv);
        std::string line;
        int rows = 0;
        while (std::getline(in, line)) ++rows;
        CHECK(rows == n + 2);  // label row + n+1 data rows
    }
    CHECK(heads_seen == 4);

    std::ifstream gold(out_dir / "gold.csv");
    std::string line;
    std::getline(gold, line);  // header
    while (std::getline(gold, line)) {
        std::stringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');  // label
        while (std::getline(row, cell, ',')) {
            const double v = std::stod(cell);
            CHECK((v == 0.0 || v == 1.0));
        }
    }
}

TEST_CASE("compare produces the full variant-by-seed table") {
    const fs::path dir = work_dir();
    const ConfoundDataset ds = make_agreement_confound_dataset(12, 6, 3);
    save_labeled_tsv_file(ds.train, (dir / "agree_train.tsv").string());
    save_labeled_tsv_file(ds.dev, (dir / "agree_dev.tsv").string());

    const RunResult r = run_cli(
        "compare --body " + (dir / "body.ckpt").string() + " --heads " +
        (dir / "heads.ckpt").string() + " --vocab " + (dir / "vocab.txt").string() +
        " --train " + (dir / "agree_train.tsv").string() + " --dev " +
        (dir / "agree_dev.tsv").string() + kSmall +
        " --set finetune.epochs=1 --seeds 1 2 3 --out-json " + (dir / "cmp.json").string() +
        " --out-text " + (dir / "cmp.txt").string());
    CHECK(r.exit_code == 0);
    const auto table = nlohmann::json::parse(read_file(dir / "cmp.json"));
    CHECK(table.at("rows").size() == 9);
    CHECK(table.at("means").size() == 3);
    CHECK(read_file(dir / "cmp.txt").find("fresh_layer") != std::string::npos);

    // Fewer than three seeds is refused.
    const RunResult rf = run_cli(
        "compare --body " + (dir / "body.ckpt").string() + " --heads " +
        (dir / "heads.ckpt").string() + " --vocab " + (dir / "vocab.txt").string() +
        " --train " + (dir / "agree_train.tsv").string() + " --dev " +
        (dir / "agree_dev.tsv").string() + " --seeds 1 2 --out-json " +
        (dir / "cmp2.json").string() + " --out-text " + (dir / "cmp2.txt").string());
    CHECK(rf.exit_code == 1);
}

TEST_CASE("missing files give the I/O exit code") {
    const RunResult r = run_cli("pretrain-heads --body /nonexistent.ckpt --vocab /none.txt "
                                "--corpus /none.conllu --out /tmp/never.ckpt");
    CHECK(r.exit_code == 3);
}
