// gammascan: black-box stability probe for LLMs. Measures gamma, the sine
// of the angle between a response embedding and the summed embeddings of
// responses to non-semantically perturbed prompts, at temperature 0.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gammascan/adversarial/ascent.hpp"
#include "gammascan/analysis/report.hpp"
#include "gammascan/clients/cache.hpp"
#include "gammascan/clients/http.hpp"
#include "gammascan/clients/mock.hpp"
#include "gammascan/errors.hpp"
#include "gammascan/gamma/gamma.hpp"
#include "gammascan/perturb/perturb.hpp"
#include "gammascan/util/utf8.hpp"
#include "gammascan/vecmath/kernels.hpp"

namespace {

using namespace gammascan;
using nlohmann::json;

struct GlobalConfig {
    std::string llm_provider = "openai";
    std::string llm_endpoint = "https://api.openai.com/v1";
    std::string llm_model = "gpt-4o";
    std::string llm_keyed_file;
    std::string llm_fixed_text;

    std::string embed_provider = "openai";
    std::string embed_endpoint = "https://api.openai.com/v1";
    std::string embed_model = "text-embedding-ada-002";
    std::size_t embed_dim = 1536;
    std::uint64_t embed_hash_seed = 0;

    std::string cache_dir;
    unsigned concurrency = 4;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> fixed_time;
    std::string kernels = "auto";
    bool no_auth = false;

    std::string scheme;  // empty = per-command default
    int count_n = 10;
    int suffix_len_min = 1;
    int suffix_len_max = -1;  // -1 = per-command default
    std::string separator = " ";
    std::vector<std::uint32_t> excludes = {0};

    int retries = 3;
    double rps = 0.0;
    int timeout_seconds = 120;
};

struct Backends {
    std::unique_ptr<clients::CacheStore> cache;
    std::unique_ptr<clients::CompletionClient> base_llm;
    std::unique_ptr<clients::EmbeddingClient> base_embed;
    std::unique_ptr<clients::CompletionClient> cached_llm;
    std::unique_ptr<clients::EmbeddingClient> cached_embed;

    clients::CompletionClient& llm() { return cached_llm ? *cached_llm : *base_llm; }
    clients::EmbeddingClient& embed() { return cached_embed ? *cached_embed : *base_embed; }
};

util::Clock make_clock(const GlobalConfig& cfg) {
    return cfg.fixed_time ? util::fixed_clock(*cfg.fixed_time) : util::system_clock();
}

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? v : "";
}

std::map<std::string, std::string> load_keyed_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open keyed-response file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("keyed-response file " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("keyed-response file must be a JSON object");
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : j.items()) out[k] = v.get<std::string>();
    return out;
}

clients::HttpClientOptions http_options(const GlobalConfig& cfg, const char* key_env) {
    clients::HttpClientOptions opts;
    opts.max_attempts = cfg.retries;
    opts.requests_per_second = cfg.rps;
    opts.api_key = env_or_empty(key_env);
    if (opts.api_key.empty() && !cfg.no_auth) {
        throw ConfigError(std::string("environment variable ") + key_env +
                          " is not set (use --no-auth for keyless endpoints)");
    }
    return opts;
}

Backends build_backends(const GlobalConfig& cfg) {
    Backends b;

    if (cfg.llm_provider == "openai") {
        auto transport =
            std::make_shared<clients::HttplibTransport>(cfg.llm_endpoint, cfg.timeout_seconds);
        b.base_llm = std::make_unique<clients::OpenAiCompletionClient>(
            transport, "openai", cfg.llm_model, http_options(cfg, "GAMMA_LLM_API_KEY"));
    } else if (cfg.llm_provider == "mock-echo") {
        b.base_llm = std::make_unique<clients::EchoCompletionClient>();
    } else if (cfg.llm_provider == "mock-keyed") {
        if (cfg.llm_keyed_file.empty()) {
            throw ConfigError("--llm-keyed-file is required with --llm-provider mock-keyed");
        }
        b.base_llm =
            std::make_unique<clients::KeyedCompletionClient>(load_keyed_file(cfg.llm_keyed_file));
    } else if (cfg.llm_provider == "mock-fixed") {
        if (cfg.llm_fixed_text.empty()) {
            throw ConfigError("--llm-fixed-text is required with --llm-provider mock-fixed");
        }
        b.base_llm = std::make_unique<clients::FnCompletionClient>(
            [text = cfg.llm_fixed_text](const std::string&) { return text; }, "fixed");
    } else {
        throw ConfigError("unknown llm provider '" + cfg.llm_provider + "'");
    }

    if (cfg.embed_provider == "openai") {
        auto transport =
            std::make_shared<clients::HttplibTransport>(cfg.embed_endpoint, cfg.timeout_seconds);
        b.base_embed = std::make_unique<clients::OpenAiEmbeddingClient>(
            transport, "openai", cfg.embed_model, cfg.embed_dim,
            http_options(cfg, "GAMMA_EMBED_API_KEY"));
    } else if (cfg.embed_provider == "mock-hash") {
        b.base_embed =
            std::make_unique<clients::HashEmbeddingClient>(cfg.embed_dim, cfg.embed_hash_seed);
    } else if (cfg.embed_provider == "mock-bag") {
        b.base_embed = std::make_unique<clients::BagOfTokensEmbeddingClient>(cfg.embed_dim);
    } else {
        throw ConfigError("unknown embed provider '" + cfg.embed_provider + "'");
    }

    if (!cfg.cache_dir.empty()) {
        b.cache = std::make_unique<clients::CacheStore>(cfg.cache_dir, make_clock(cfg));
        b.cached_llm = std::make_unique<clients::CachedCompletionClient>(*b.base_llm, *b.cache);
        b.cached_embed = std::make_unique<clients::CachedEmbeddingClient>(*b.base_embed, *b.cache);
    }
    return b;
}

perturb::PerturbationConfig make_perturbation_config(const GlobalConfig& cfg,
                                                     std::uint64_t seed,
                                                     const std::string& default_scheme,
                                                     int default_len_max) {
    perturb::PerturbationConfig p;
    const std::string scheme = cfg.scheme.empty() ? default_scheme : cfg.scheme;
    if (scheme == "control" || scheme == "control_char") {
        p.scheme = perturb::Scheme::ControlChar;
    } else if (scheme == "utf8" || scheme == "utf8_random") {
        p.scheme = perturb::Scheme::Utf8Random;
    } else {
        throw ConfigError("unknown scheme '" + scheme + "' (use control or utf8)");
    }
    p.count_n = cfg.count_n;
    p.suffix_len_min = cfg.suffix_len_min;
    p.suffix_len_max = cfg.suffix_len_max > 0 ? cfg.suffix_len_max : default_len_max;
    p.alphabet_excludes.clear();
    for (std::uint32_t cp : cfg.excludes) p.alphabet_excludes.insert(static_cast<char32_t>(cp));
    p.seed = seed;
    p.separator = cfg.separator;
    p.validate();
    return p;
}

std::uint64_t resolve_seed(const GlobalConfig& cfg) {
    if (cfg.seed) return *cfg.seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void print_effective_config(const GlobalConfig& cfg, const perturb::PerturbationConfig& p,
                            const Backends& b) {
    std::ostringstream out;
    out << "config: llm=" << b.base_llm->provider() << "/" << b.base_llm->model_id()
        << " embed=" << b.base_embed->provider() << "/" << b.base_embed->model_id()
        << " scheme="
        << (p.scheme == perturb::Scheme::ControlChar ? "control_char" : "utf8_random")
        << " n=" << p.count_n << " len=[" << p.suffix_len_min << "," << p.suffix_len_max << "]"
        << " seed=" << p.seed << " cache=" << (cfg.cache_dir.empty() ? "off" : cfg.cache_dir)
        << " concurrency=" << cfg.concurrency
        << " kernels=" << kernels::backend_name(kernels::active_backend());
    if (cfg.fixed_time) out << " fixed_time=" << *cfg.fixed_time;
    std::cerr << out.str() << "\n";
}

void apply_kernel_choice(const std::string& choice) {
    if (choice == "auto") return;
    if (choice == "scalar") {
        kernels::force_backend(kernels::Backend::Scalar);
    } else if (choice == "avx2") {
        kernels::force_backend(kernels::Backend::Avx2);
    } else if (choice == "neon") {
        kernels::force_backend(kernels::Backend::Neon);
    } else {
        throw ConfigError("unknown kernel backend '" + choice + "'");
    }
}

std::string preview(const std::string& text, std::size_t max_chars = 96) {
    const std::string escaped = util::hex_escape(text);
    if (escaped.size() <= max_chars) return escaped;
    return escaped.substr(0, max_chars) + "...";
}

// ---------------------------------------------------------------- score

int cmd_score(const GlobalConfig& cfg, const std::string& prompt, bool as_json,
              const std::string& out_path) {
    const std::uint64_t seed = resolve_seed(cfg);
    const auto p = make_perturbation_config(cfg, seed, "control", 3);
    Backends backends = build_backends(cfg);
    print_effective_config(cfg, p, backends);

    util::ThreadPool pool(cfg.concurrency);
    engine::GammaOptions gopts;
    gopts.pool = &pool;
    gopts.clock = make_clock(cfg);
    const engine::GammaRecord record =
        engine::compute_gamma(prompt, p, backends.llm(), backends.embed(), gopts);

    const json j = engine::record_to_json(record);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + out_path);
        out << j.dump(2) << "\n";
    }
    if (as_json) {
        std::cout << j.dump() << "\n";
        return 0;
    }

    char line[128];
    std::snprintf(line, sizeof line, "gamma=%.6f  (arcsin: %.3f deg)", record.gamma,
                  engine::gamma_degrees(record));
    std::cout << line << "\n";
    if (record.negative_cosine_flag) {
        std::cout << "warning: ball vector points away from the original output "
                     "(cosine < 0); sine folds the angle back below 90 degrees\n";
    }
    std::cout << "original: " << preview(record.original_output) << "\n";
    for (const auto& pert : record.perturbations) {
        std::cout << "P" << (pert.prompt.index + 1) << " +\"" << util::hex_escape(pert.prompt.suffix)
                  << "\" -> " << preview(pert.output) << "\n";
    }
    return 0;
}

// ----------------------------------------------------------------- scan

int cmd_scan(const GlobalConfig& cfg, const std::string& corpus_path, const std::string& out_path,
             std::string corpus_id, std::size_t limit) {
    const std::uint64_t seed = resolve_seed(cfg);
    const auto p = make_perturbation_config(cfg, seed, "control", 3);
    Backends backends = build_backends(cfg);
    print_effective_config(cfg, p, backends);

    const auto corpus = engine::load_corpus_jsonl(corpus_path);
    if (corpus_id.empty()) {
        corpus_id = std::filesystem::path(corpus_path).stem().string();
    }

    util::ThreadPool pool(cfg.concurrency);
    engine::ScanOptions sopts;
    sopts.corpus_id = corpus_id;
    sopts.pool = &pool;
    sopts.clock = make_clock(cfg);
    sopts.limit = limit;
    std::size_t processed = 0;
    sopts.on_record = [&](const std::string& id, double gamma) {
        ++processed;
        std::fprintf(stderr, "[%zu] id=%s gamma=%.6f\n", processed, id.c_str(), gamma);
    };
    sopts.on_error = [&](const std::string& id, const std::string& err) {
        ++processed;
        std::fprintf(stderr, "[%zu] id=%s error: %s\n", processed, id.c_str(), err.c_str());
    };

    const engine::RunManifest manifest = engine::scan_corpus(
        corpus, p, backends.llm(), backends.embed(), out_path, sopts);

    std::cout << processed << " new records (" << manifest.record_count << " ok, "
              << manifest.error_count << " errors in run file); skipped "
              << (corpus.size() - processed) << "\n";

    const engine::RunFile run = engine::load_run_file(out_path);
    if (!run.records.empty()) {
        std::cout << "gamma histogram (bin width 0.05):\n";
        for (const auto& bin : analysis::histogram(run.records, 0.05)) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "  [%.2f,%.2f): %zu", bin.lo, bin.hi, bin.count);
            std::cout << buf << "\n";
        }
    }
    return 0;
}

// ---------------------------------------------------------- adversarial

int cmd_adversarial(const GlobalConfig& cfg, const std::string& prompt, const std::string& out_path,
                    int branch_factor, int max_iterations, double gamma_stop) {
    const std::uint64_t seed = resolve_seed(cfg);
    const auto p = make_perturbation_config(cfg, seed, "utf8", 5);
    Backends backends = build_backends(cfg);
    print_effective_config(cfg, p, backends);

    util::ThreadPool pool(cfg.concurrency);
    adversarial::AscentOptions aopts;
    aopts.pool = &pool;
    aopts.clock = make_clock(cfg);
    const adversarial::AscentTrace trace = adversarial::ascend(
        prompt, p, branch_factor, max_iterations, gamma_stop, backends.llm(), backends.embed(),
        aopts);

    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + out_path);
        out << adversarial::trace_to_json(trace).dump(2) << "\n";
    }

    std::cout << "step | iter | gamma    | prompt\n";
    std::cout << "---- | ---- | -------- | ------\n";
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const auto& step = trace.steps[i];
        char head[64];
        if (step.iteration < 0) {
            std::snprintf(head, sizeof head, "seed |    - | %.6f | ", step.record.gamma);
        } else {
            std::snprintf(head, sizeof head, "%4zu | %4d | %.6f | ", i, step.iteration,
                          step.record.gamma);
        }
        std::cout << head << util::hex_escape(step.prompt) << "\n";
    }
    std::cout << "stop: " << adversarial::stop_reason_name(trace.stop_reason) << " after "
              << trace.iterations.size() << " iterations, "
              << (1 + trace.iterations.size() * static_cast<std::size_t>(trace.branch_factor))
              << " gamma evaluations budgeted\n";
    return 0;
}

// --------------------------------------------------------------- report

int cmd_report(const std::vector<std::string>& run_paths, const std::string& annotations_path,
               const std::string& out_dir, double bin_width, double threshold, bool unweighted,
               bool per_record) {
    std::vector<engine::GammaRecord> records;
    std::size_t error_count = 0;
    for (const auto& path : run_paths) {
        engine::RunFile rf = engine::load_run_file(path);
        error_count += rf.error_count;
        for (auto& r : rf.records) records.push_back(std::move(r));
    }

    std::optional<std::vector<analysis::Annotation>> annotations;
    if (!annotations_path.empty()) {
        annotations = analysis::load_annotations_csv(annotations_path);
    }

    const analysis::ReportBundle report =
        analysis::build_report(records, error_count,
                               annotations ? &*annotations : nullptr, bin_width, threshold,
                               !unweighted);
    const auto written = analysis::write_report_files(report, out_dir);

    if (per_record && annotations) {
        const auto join = analysis::join_annotations(records, *annotations);
        try {
            const auto fit = analysis::per_record_fit(join.joined);
            char buf[96];
            std::snprintf(buf, sizeof buf, "per-record fit: m=%.4f, b=%.4f\n", fit.slope_m,
                          fit.intercept_b);
            std::cout << buf;
        } catch (const InsufficientBins& e) {
            std::cout << "per-record fit: not computed (" << e.what() << ")\n";
        }
    }

    for (const auto& a : report.dangling) {
        std::cerr << "warning: annotation for unknown record_id '" << a.record_id << "' (annotator "
                  << a.annotator_id << ")\n";
    }
    if (!report.unannotated_ids.empty()) {
        std::cerr << "warning: " << report.unannotated_ids.size()
                  << " records have no annotations and were excluded from rating stats\n";
    }
    std::cout << analysis::render_summary_table(report);
    for (const auto& path : written) std::cout << "wrote " << path.string() << "\n";
    return 0;
}

// ------------------------------------------------------------- isotropy

int cmd_isotropy(const GlobalConfig& cfg, const std::string& corpus_path, bool as_json,
                 std::size_t limit) {
    const std::uint64_t seed = resolve_seed(cfg);
    const auto p = make_perturbation_config(cfg, seed, "control", 3);
    Backends backends = build_backends(cfg);
    print_effective_config(cfg, p, backends);

    auto corpus = engine::load_corpus_jsonl(corpus_path);
    if (limit > 0 && corpus.size() > limit) corpus.resize(limit);
    std::vector<std::string> prompts;
    prompts.reserve(corpus.size());
    for (const auto& item : corpus) prompts.push_back(item.question);

    util::ThreadPool pool(cfg.concurrency);
    const perturb::IsotropyStats stats =
        perturb::isotropy_report(prompts, p, backends.llm(), backends.embed(), &pool);

    if (as_json) {
        json per = json::array();
        for (const auto& pp : stats.prompts) {
            per.push_back(json{{"prompt", pp.prompt}, {"cone_deg", pp.cone_deg}});
        }
        std::cout << json{{"prompts", per}, {"mean_deg", stats.mean_deg}, {"max_deg", stats.max_deg}}
                         .dump()
                  << "\n";
        return 0;
    }
    for (const auto& pp : stats.prompts) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%8.3f deg  ", pp.cone_deg);
        std::cout << buf << preview(pp.prompt, 72) << "\n";
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "mean cone angle: %.3f deg, max: %.3f deg over %zu prompts",
                  stats.mean_deg, stats.max_deg, stats.prompts.size());
    std::cout << buf << "\n";
    return 0;
}

// ------------------------------------------------------------- cache-gc

int cmd_cache_gc(const GlobalConfig& cfg, std::optional<std::int64_t> max_age_seconds,
                 std::optional<std::uint64_t> max_bytes) {
    if (cfg.cache_dir.empty()) {
        throw ConfigError("cache-gc requires --cache-dir or GAMMA_CACHE_DIR");
    }
    if (!max_age_seconds && !max_bytes) {
        throw ConfigError("cache-gc requires --max-age-seconds and/or --max-bytes");
    }
    clients::CacheStore store(cfg.cache_dir, make_clock(cfg));
    clients::GcPolicy policy;
    policy.max_age_seconds = max_age_seconds;
    policy.max_bytes = max_bytes;
    const clients::GcReport report = store.gc(policy);

    std::cout << "evicted " << report.evicted_keys.size() << " of " << report.entries_before
              << " entries (" << report.bytes_before << " -> " << report.bytes_after
              << " bytes)\n";
    for (const auto& key : report.evicted_keys) std::cout << "evicted " << key << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gammascan: black-box stability probe for LLM responses"};
    app.set_config("--config", "", "read defaults from a config file");

    GlobalConfig cfg;
    app.add_option("--llm-provider", cfg.llm_provider,
                   "openai | mock-echo | mock-keyed | mock-fixed")
        ->envname("GAMMA_LLM_PROVIDER")
        ->capture_default_str();
    app.add_option("--llm-endpoint", cfg.llm_endpoint, "OpenAI-compatible base URL")
        ->envname("GAMMA_LLM_ENDPOINT")
        ->capture_default_str();
    app.add_option("--llm-model", cfg.llm_model, "completion model id")
        ->envname("GAMMA_LLM_MODEL")
        ->capture_default_str();
    app.add_option("--llm-keyed-file", cfg.llm_keyed_file,
                   "JSON object prompt->response for mock-keyed");
    app.add_option("--llm-fixed-text", cfg.llm_fixed_text, "canned response for mock-fixed");

    app.add_option("--embed-provider", cfg.embed_provider, "openai | mock-hash | mock-bag")
        ->envname("GAMMA_EMBED_PROVIDER")
        ->capture_default_str();
    app.add_option("--embed-endpoint", cfg.embed_endpoint, "OpenAI-compatible base URL")
        ->envname("GAMMA_EMBED_ENDPOINT")
        ->capture_default_str();
    app.add_option("--embed-model", cfg.embed_model, "embedding model id")
        ->envname("GAMMA_EMBED_MODEL")
        ->capture_default_str();
    app.add_option("--embed-dim", cfg.embed_dim, "embedding dimension")->capture_default_str();
    app.add_option("--embed-hash-seed", cfg.embed_hash_seed, "seed for the mock-hash embedding");

    app.add_option("--cache-dir", cfg.cache_dir, "response cache directory (empty = no cache)")
        ->envname("GAMMA_CACHE_DIR");
    app.add_option("--concurrency", cfg.concurrency, "worker pool size")->capture_default_str();
    app.add_option("--seed", cfg.seed, "perturbation RNG seed (default: random, printed)");
    app.add_option("--fixed-time", cfg.fixed_time,
                   "pin timestamps to this unix time for reproducible outputs");
    app.add_option("--kernels", cfg.kernels, "auto | scalar | avx2 | neon")
        ->capture_default_str();
    app.add_flag("--no-auth", cfg.no_auth, "allow openai provider without an API key env var");

    app.add_option("--scheme", cfg.scheme, "perturbation scheme: control | utf8");
    app.add_option("-n,--count-n", cfg.count_n, "perturbations per ball")->capture_default_str();
    app.add_option("--suffix-min", cfg.suffix_len_min, "min suffix code points")
        ->capture_default_str();
    app.add_option("--suffix-max", cfg.suffix_len_max,
                   "max suffix code points (default 3, adversarial 5)");
    app.add_option("--separator", cfg.separator, "string inserted before each suffix")
        ->capture_default_str();
    app.add_option("--exclude", cfg.excludes, "code points excluded from the alphabet")
        ->capture_default_str();

    app.add_option("--retries", cfg.retries, "max HTTP attempts per request")
        ->capture_default_str();
    app.add_option("--rps", cfg.rps, "requests per second cap (0 = unlimited)")
        ->capture_default_str();
    app.add_option("--timeout", cfg.timeout_seconds, "HTTP timeout in seconds")
        ->capture_default_str();

    // score
    std::string score_prompt, score_out;
    bool score_json = false;
    auto* score = app.add_subcommand("score", "compute gamma for one prompt");
    score->add_option("prompt", score_prompt, "prompt text")->required();
    score->add_flag("--json", score_json, "print the record as JSON");
    score->add_option("--out", score_out, "also write the record JSON to a file");

    // scan
    std::string scan_corpus_path, scan_out, scan_corpus_id;
    std::size_t scan_limit = 0;
    auto* scan = app.add_subcommand("scan", "compute gamma for every corpus question");
    scan->add_option("corpus", scan_corpus_path, "JSONL file of {id, question}")->required();
    scan->add_option("--out", scan_out, "run file to write (JSONL)")->required();
    scan->add_option("--corpus-id", scan_corpus_id, "label stored in the manifest");
    scan->add_option("--limit", scan_limit, "process at most this many new records");

    // adversarial
    std::string adv_prompt, adv_out;
    int adv_branch = 8, adv_iters = 10;
    double adv_stop = 0.30;
    auto* adv = app.add_subcommand("adversarial",
                                   "hill-climb gamma with random UTF-8 suffix extensions");
    adv->add_option("prompt", adv_prompt, "seed prompt")->required();
    adv->add_option("--out", adv_out, "trace JSON file");
    adv->add_option("--branch-factor", adv_branch, "candidates per iteration")
        ->capture_default_str();
    adv->add_option("--max-iterations", adv_iters, "iteration budget")->capture_default_str();
    adv->add_option("--gamma-stop", adv_stop, "stop once gamma reaches this")
        ->capture_default_str();

    // report
    std::vector<std::string> report_runs;
    std::string report_annotations, report_out;
    double report_bin_width = 0.05, report_threshold = 0.05;
    bool report_unweighted = false;
    bool report_per_record = false;
    auto* report = app.add_subcommand("report", "histograms, summary stats, and fits from runs");
    report->add_option("runs", report_runs, "run files from scan")->required();
    report->add_option("--annotations", report_annotations,
                       "CSV record_id,annotator_id,score,rubric");
    report->add_option("--out", report_out, "output directory")->required();
    report->add_option("--bin-width", report_bin_width, "gamma bin width")->capture_default_str();
    report->add_option("--threshold", report_threshold, "low-gamma threshold")
        ->capture_default_str();
    report->add_flag("--unweighted-fit", report_unweighted, "do not weight bins by count");
    report->add_flag("--per-record-fit", report_per_record,
                     "also fit rating against per-record gamma, unbinned");

    // isotropy
    std::string iso_corpus;
    bool iso_json = false;
    std::size_t iso_limit = 0;
    auto* iso = app.add_subcommand("isotropy",
                                   "cone-angle statistics of perturbed-output embeddings");
    iso->add_option("corpus", iso_corpus, "JSONL file of {id, question}")->required();
    iso->add_flag("--json", iso_json, "print JSON");
    iso->add_option("--limit", iso_limit, "use at most this many prompts");

    // cache-gc
    std::optional<std::int64_t> gc_max_age_seconds;
    std::optional<double> gc_max_age_days;
    std::optional<std::uint64_t> gc_max_bytes;
    auto* gc = app.add_subcommand("cache-gc", "evict cache entries by age or total size");
    gc->add_option("--max-age-seconds", gc_max_age_seconds, "evict entries older than this");
    gc->add_option("--max-age-days", gc_max_age_days, "evict entries older than this many days");
    gc->add_option("--max-bytes", gc_max_bytes, "evict oldest entries down to this many bytes");

    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
        apply_kernel_choice(cfg.kernels);

        if (score->parsed()) return cmd_score(cfg, score_prompt, score_json, score_out);
        if (scan->parsed())
            return cmd_scan(cfg, scan_corpus_path, scan_out, scan_corpus_id, scan_limit);
        if (adv->parsed())
            return cmd_adversarial(cfg, adv_prompt, adv_out, adv_branch, adv_iters, adv_stop);
        if (report->parsed())
            return cmd_report(report_runs, report_annotations, report_out, report_bin_width,
                              report_threshold, report_unweighted, report_per_record);
        if (iso->parsed()) return cmd_isotropy(cfg, iso_corpus, iso_json, iso_limit);
        if (gc->parsed()) {
            std::optional<std::int64_t> age = gc_max_age_seconds;
            if (gc_max_age_days) {
                const auto days = static_cast<std::int64_t>(*gc_max_age_days * 86400.0);
                age = age ? std::min(*age, days) : days;
            }
            return cmd_cache_gc(cfg, age, gc_max_bytes);
        }
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.error_class());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
