#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gammascan/gamma/gamma.hpp"

namespace gammascan::adversarial {

enum class StopReason { MaxIterations, GammaThreshold, NoImprovement };

std::string stop_reason_name(StopReason reason);

// Full history of one hill-climbing run: the accepted path plus every
// evaluated candidate, kept for audit.
struct AscentTrace {
    struct Step {
        std::string prompt;
        engine::GammaRecord record;
        int iteration = -1;  // -1 for the seed
    };

    struct CandidateEval {
        perturb::PerturbedPrompt candidate;
        std::optional<engine::GammaRecord> record;  // absent when evaluation failed
        std::string error;
        bool accepted = false;
    };

    struct Iteration {
        int index = 0;
        std::vector<CandidateEval> candidates;
    };

    std::string seed_prompt;
    std::vector<Step> steps;  // steps[0] is the seed
    std::vector<Iteration> iterations;
    int branch_factor = 0;
    int max_iterations = 0;
    double gamma_stop = 0.0;
    StopReason stop_reason = StopReason::MaxIterations;
};

struct AscentOptions {
    util::ThreadPool* pool = nullptr;
    util::Clock clock = util::system_clock();
    int plateau_limit = 3;  // consecutive non-improving iterations before stopping
};

// Best-of-branch hill climbing on gamma: each iteration extends the
// current prompt with branch_factor random UTF-8 suffix candidates,
// measures gamma for each, and accepts the best candidate only if it
// strictly improves. Candidate suffixes vary per iteration via sub-seeds
// derived from cfg.seed; the measurement ball keeps cfg.seed itself so
// every candidate is scored against the same perturbation draw.
AscentTrace ascend(const std::string& seed_prompt, const perturb::PerturbationConfig& cfg,
                   int branch_factor, int max_iterations, double gamma_stop,
                   clients::CompletionClient& llm, clients::EmbeddingClient& embed,
                   const AscentOptions& opts = {});

nlohmann::json trace_to_json(const AscentTrace& trace);

}  // namespace gammascan::adversarial
