// End-to-end tests that drive the installed CLI binary as a subprocess.
// GAMMASCAN_CLI must point at the binary (ctest sets it).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "gammascan/gamma/gamma.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string cli_path() {
    const char* p = std::getenv("GAMMASCAN_CLI");
    REQUIRE_MESSAGE(p != nullptr, "GAMMASCAN_CLI must be set");
    return p;
}

std::string golden_dir() {
    const char* p = std::getenv("GAMMASCAN_GOLDEN_DIR");
    REQUIRE_MESSAGE(p != nullptr, "GAMMASCAN_GOLDEN_DIR must be set");
    return p;
}

fs::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path() /
                         ("gammascan_cli_" + std::to_string(::getpid()) + "_" + tag + "_" +
                          std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

RunResult run_cli(const std::string& args, const fs::path& workdir) {
    const fs::path out = workdir / "stdout.txt";
    const fs::path err = workdir / "stderr.txt";
    // The API key env vars are cleared so provider validation is testable
    // regardless of the invoking environment.
    const std::string cmd = "env -u GAMMA_LLM_API_KEY -u GAMMA_EMBED_API_KEY -u GAMMA_CACHE_DIR " +
                            cli_path() + " " + args + " > " + out.string() + " 2> " +
                            err.string();
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.out = read_file(out);
    res.err = read_file(err);
    return res;
}

constexpr const char* kMockFlags =
    "--llm-provider mock-echo --embed-provider mock-hash --embed-dim 8 ";

void write_corpus(const fs::path& path, int n) {
    std::ofstream out(path);
    for (int i = 0; i < n; ++i) {
        out << json{{"id", "q" + std::to_string(i)},
                    {"question", "question number " + std::to_string(i)}}
                   .dump()
            << "\n";
    }
}

}  // namespace

TEST_CASE("score prints gamma and accepts --json") {
    const auto dir = fresh_dir("score");
    auto res = run_cli(std::string(kMockFlags) + "--seed 5 score \"What is 2+2?\"", dir);
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("gamma=") != std::string::npos);
    CHECK(res.err.find("seed=5") != std::string::npos);  // effective config printed

    res = run_cli(std::string(kMockFlags) + "--seed 5 score --json \"What is 2+2?\"", dir);
    CHECK(res.exit_code == 0);
    const json j = json::parse(res.out);
    const auto record = gammascan::engine::record_from_json(j);
    CHECK(record.prompt == "What is 2+2?");
    CHECK(record.perturbations.size() == 10);
    CHECK(record.gamma >= 0.0);
    CHECK(record.gamma <= 1.0);
}

TEST_CASE("a keyed fixture that answers every perturbation gives gamma exactly 0") {
    const auto dir = fresh_dir("keyed");
    const fs::path keyed = dir / "keyed.json";
    std::ofstream(keyed) << json{{"What is 2+2?", "4"}}.dump();
    const auto res = run_cli("--llm-provider mock-keyed --llm-keyed-file " + keyed.string() +
                                 " --embed-provider mock-hash --embed-dim 8 --seed 1 "
                                 "score \"What is 2+2?\"",
                             dir);
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("gamma=0.000000") != std::string::npos);
}

TEST_CASE("validation failures exit with code 3") {
    const auto dir = fresh_dir("validation");

    SUBCASE("missing corpus file") {
        const auto res = run_cli(std::string(kMockFlags) + "scan " +
                                     (dir / "missing.jsonl").string() + " --out " +
                                     (dir / "run.jsonl").string(),
                                 dir);
        CHECK(res.exit_code == 3);
    }
    SUBCASE("malformed corpus line carries its line number") {
        const fs::path corpus = dir / "bad.jsonl";
        std::ofstream(corpus) << R"({"id":"a","question":"fine"})" << "\n"
                              << "{broken\n";
        const auto res = run_cli(std::string(kMockFlags) + "scan " + corpus.string() + " --out " +
                                     (dir / "run.jsonl").string(),
                                 dir);
        CHECK(res.exit_code == 3);
        CHECK(res.err.find("line 2") != std::string::npos);
    }
    SUBCASE("missing API key for a live backend") {
        const auto res = run_cli("score \"hello\"", dir);
        CHECK(res.exit_code == 3);
        CHECK(res.err.find("GAMMA_LLM_API_KEY") != std::string::npos);
    }
    SUBCASE("unknown kernel choice") {
        const auto res = run_cli(std::string(kMockFlags) + "--kernels turbo score \"hi\"", dir);
        CHECK(res.exit_code == 3);
    }
    SUBCASE("cache-gc without a cache dir") {
        const auto res = run_cli("cache-gc --max-bytes 10", dir);
        CHECK(res.exit_code == 3);
    }
}

TEST_CASE("degenerate embeddings exit with code 4") {
    const auto dir = fresh_dir("degenerate");
    // Whitespace-only prompt: the echoed output has no tokens, so the
    // bag-of-tokens embedding is the zero vector.
    const auto res = run_cli(
        "--llm-provider mock-echo --embed-provider mock-bag --embed-dim 8 --seed 2 score \" \"",
        dir);
    CHECK(res.exit_code == 4);
    CHECK(res.err.find("zero norm") != std::string::npos);
}

TEST_CASE("scan writes a resumable run file and reruns are free") {
    const auto dir = fresh_dir("scan");
    const fs::path corpus = dir / "corpus.jsonl";
    write_corpus(corpus, 3);
    const fs::path run = dir / "run.jsonl";

    const std::string base = std::string(kMockFlags) +
                             "--seed 11 --fixed-time 1720000000 scan " + corpus.string() +
                             " --out " + run.string();
    auto res = run_cli(base, dir);
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("3 new records") != std::string::npos);

    const auto loaded = gammascan::engine::load_run_file(run);
    CHECK(loaded.records.size() == 3);

    res = run_cli(base, dir);
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("0 new records") != std::string::npos);
    CHECK(res.out.find("skipped 3") != std::string::npos);
}

TEST_CASE("report produces histogram-only output without annotations") {
    const auto dir = fresh_dir("report");
    const fs::path corpus = dir / "corpus.jsonl";
    write_corpus(corpus, 4);
    const fs::path run = dir / "run.jsonl";
    auto res = run_cli(std::string(kMockFlags) + "--seed 3 --fixed-time 1 scan " +
                           corpus.string() + " --out " + run.string(),
                       dir);
    REQUIRE(res.exit_code == 0);

    const fs::path out_dir = dir / "report";
    res = run_cli(std::string(kMockFlags) + "report " + run.string() + " --out " +
                      out_dir.string(),
                  dir);
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(out_dir / "report.json"));
    CHECK(fs::exists(out_dir / "histogram.svg"));
    CHECK_FALSE(fs::exists(out_dir / "summary.txt"));

    const json report = json::parse(read_file(out_dir / "report.json"));
    CHECK(report["record_count"] == 4);
    CHECK_FALSE(report.contains("summary"));
}

TEST_CASE("report with annotations renders the uncertainty table") {
    const auto dir = fresh_dir("annotated");
    const fs::path corpus = dir / "corpus.jsonl";
    write_corpus(corpus, 4);
    const fs::path run = dir / "run.jsonl";
    auto res = run_cli(std::string(kMockFlags) + "--seed 3 --fixed-time 1 scan " +
                           corpus.string() + " --out " + run.string(),
                       dir);
    REQUIRE(res.exit_code == 0);

    const fs::path ann = dir / "annotations.csv";
    {
        std::ofstream out(ann);
        out << "record_id,annotator_id,score,rubric\n";
        for (int q = 0; q < 4; ++q) {
            for (int a = 0; a < 2; ++a) {
                out << "q" << q << ",annotator" << a << "," << (4 + (q + a) % 2) << ",qa\n";
            }
        }
    }
    const fs::path out_dir = dir / "report";
    res = run_cli(std::string(kMockFlags) + "report " + run.string() + " --annotations " +
                      ann.string() + " --out " + out_dir.string(),
                  dir);
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(out_dir / "summary.txt"));
    const std::string table = read_file(out_dir / "summary.txt");
    CHECK(table.find('(') != std::string::npos);
    const json report = json::parse(read_file(out_dir / "report.json"));
    CHECK(report.contains("summary"));
    CHECK(report.contains("fleiss_kappa"));
}

TEST_CASE("adversarial table matches the golden rendering") {
    const auto dir = fresh_dir("adversarial");
    const fs::path trace = dir / "trace.json";
    const auto res = run_cli(std::string(kMockFlags) +
                                 "--seed 3 --fixed-time 1720000000 -n 4 adversarial "
                                 "\"tell me about quarks\" --branch-factor 4 "
                                 "--max-iterations 3 --gamma-stop 1.01 --out " +
                                 trace.string(),
                             dir);
    CHECK(res.exit_code == 0);

    const fs::path golden = fs::path(golden_dir()) / "adversarial_table.txt";
    if (!fs::exists(golden)) {
        // First run on a new platform: write the golden next to the test
        // data so it can be committed after review.
        std::ofstream(golden, std::ios::binary) << res.out;
        MESSAGE("golden file created; rerun to compare");
    }
    CHECK(res.out == read_file(golden));

    const json t = json::parse(read_file(trace));
    CHECK(t["seed_prompt"] == "tell me about quarks");
    CHECK(t["steps"].size() >= 1);

    // Suffixes in the rendered table are hex-escaped, never raw.
    for (unsigned char c : res.out) {
        CHECK((c == '\n' || (c >= 0x20 && c < 0x7F)));
    }
}

TEST_CASE("zero-iteration adversarial search renders a single row") {
    const auto dir = fresh_dir("adv0");
    const auto res = run_cli(std::string(kMockFlags) +
                                 "--seed 1 -n 3 adversarial \"prompt\" --max-iterations 0",
                             dir);
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("seed |") != std::string::npos);
    CHECK(res.out.find("max_iterations") != std::string::npos);
}

TEST_CASE("isotropy on a constant backend reports zero cone angles") {
    const auto dir = fresh_dir("isotropy");
    const fs::path corpus = dir / "corpus.jsonl";
    write_corpus(corpus, 2);
    const auto res = run_cli(
        "--llm-provider mock-fixed --llm-fixed-text \"always the same answer\" "
        "--embed-provider mock-hash --embed-dim 8 --seed 4 isotropy " +
            corpus.string() + " --json",
        dir);
    CHECK(res.exit_code == 0);
    const json j = json::parse(res.out);
    // The hash embedding is not exact-arithmetic friendly: normalizing the
    // mean perturbs it by an ulp, so "zero" here is ~1e-15 degrees.
    CHECK(j["mean_deg"].get<double>() <= 1e-12);
    CHECK(j["max_deg"].get<double>() <= 1e-12);
    CHECK(j["prompts"].size() == 2);
}

TEST_CASE("scan run files are byte-identical across reruns with one seed") {
    const auto dir = fresh_dir("deterministic");
    const fs::path corpus = dir / "corpus.jsonl";
    write_corpus(corpus, 5);

    const fs::path run_a = dir / "a.jsonl";
    const fs::path run_b = dir / "b.jsonl";
    const std::string common = std::string(kMockFlags) + "--seed 9 --fixed-time 77 scan " +
                               corpus.string() + " --out ";
    REQUIRE(run_cli(common + run_a.string(), dir).exit_code == 0);
    REQUIRE(run_cli(common + run_b.string(), dir).exit_code == 0);
    const std::string a = read_file(run_a);
    CHECK(!a.empty());
    CHECK(a == read_file(run_b));
}
