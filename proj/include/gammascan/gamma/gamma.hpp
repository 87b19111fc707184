#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gammascan/clients/clients.hpp"
#include "gammascan/perturb/perturb.hpp"
#include "gammascan/util/clock.hpp"
#include "gammascan/util/thread_pool.hpp"

namespace gammascan::engine {

// One full gamma evaluation: the prompt, the unperturbed output, the N
// perturbed prompt/output pairs, and the resulting sine-of-angle value.
// Everything needed to recompute gamma from scratch is retained.
struct GammaRecord {
    std::string id;  // set by corpus scans, empty for ad-hoc scores
    std::string prompt;
    std::string original_output;
    bool original_truncated = false;

    struct Perturbation {
        perturb::PerturbedPrompt prompt;
        std::string output;
        bool truncated = false;
    };
    std::vector<Perturbation> perturbations;

    double gamma = 0.0;
    bool negative_cosine_flag = false;
    std::string llm_model;
    std::string embed_model;
    perturb::PerturbationConfig config;
    std::int64_t timestamp = 0;
};

struct GammaOptions {
    util::ThreadPool* pool = nullptr;
    util::Clock clock = util::system_clock();
};

// Algorithm: query the model with the prompt and with every ball point,
// embed all N+1 outputs, sum the N perturbed embeddings in index order,
// and take the sine of the angle between the original-output embedding
// and that sum. When every output is byte-identical the sum is exactly
// parallel to the original embedding, so gamma is 0 with no float noise.
GammaRecord compute_gamma(const std::string& prompt, const perturb::PerturbationConfig& cfg,
                          clients::CompletionClient& llm, clients::EmbeddingClient& embed,
                          const GammaOptions& opts = {});

// arcsin(gamma) in degrees: how far, angularly, the ball of responses
// drifted from the original response.
double gamma_degrees(const GammaRecord& record);

nlohmann::json record_to_json(const GammaRecord& record);
GammaRecord record_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const perturb::PerturbationConfig& cfg);
perturb::PerturbationConfig config_from_json(const nlohmann::json& j);

struct CorpusItem {
    std::string id;
    std::string question;
};

// JSONL corpus, one {"id","question"} object per line. Parse failures
// report the 1-based line number.
std::vector<CorpusItem> load_corpus_jsonl(const std::filesystem::path& path);

struct RunManifest {
    std::string corpus_id;
    std::string llm_model;
    std::string embed_model;
    perturb::PerturbationConfig config;
    std::size_t record_count = 0;  // successful records in the run file
    std::size_t error_count = 0;   // error records in the run file
    std::int64_t created_at = 0;
    std::string records_path;
};

nlohmann::json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

std::filesystem::path manifest_path_for(const std::filesystem::path& run_path);

struct ScanOptions {
    std::string corpus_id;
    util::ThreadPool* pool = nullptr;
    util::Clock clock = util::system_clock();
    std::size_t limit = 0;  // stop after this many new records (0 = no limit)
    std::function<void(const std::string& id, double gamma)> on_record;
    std::function<void(const std::string& id, const std::string& error)> on_error;
};

// Streams one JSON record per corpus question to the run file, in corpus
// order, skipping ids already present (resumable). Per-record failures
// become error records in the file rather than aborting the scan. The
// manifest is rewritten at the end with counts taken from the file.
RunManifest scan_corpus(const std::vector<CorpusItem>& corpus,
                        const perturb::PerturbationConfig& cfg, clients::CompletionClient& llm,
                        clients::EmbeddingClient& embed, const std::filesystem::path& run_path,
                        const ScanOptions& opts = {});

struct RunFile {
    std::vector<GammaRecord> records;
    std::size_t error_count = 0;
};

RunFile load_run_file(const std::filesystem::path& path);

}  // namespace gammascan::engine
