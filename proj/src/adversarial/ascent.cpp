#include "gammascan/adversarial/ascent.hpp"

#include <utility>

#include "gammascan/errors.hpp"
#include "gammascan/util/rng.hpp"

namespace gammascan::adversarial {

using nlohmann::json;

std::string stop_reason_name(StopReason reason) {
    switch (reason) {
        case StopReason::MaxIterations:
            return "max_iterations";
        case StopReason::GammaThreshold:
            return "gamma_threshold";
        case StopReason::NoImprovement:
            return "no_improvement";
    }
    return "unknown";
}

AscentTrace ascend(const std::string& seed_prompt, const perturb::PerturbationConfig& cfg,
                   int branch_factor, int max_iterations, double gamma_stop,
                   clients::CompletionClient& llm, clients::EmbeddingClient& embed,
                   const AscentOptions& opts) {
    if (seed_prompt.empty()) throw EmptyInput("seed prompt must be nonempty");
    if (branch_factor < 1) throw ConfigError("branch_factor must be >= 1");
    if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
    cfg.validate();
    if (cfg.scheme != perturb::Scheme::Utf8Random) {
        throw ConfigError("adversarial search requires the Utf8Random scheme");
    }

    AscentTrace trace;
    trace.seed_prompt = seed_prompt;
    trace.branch_factor = branch_factor;
    trace.max_iterations = max_iterations;
    trace.gamma_stop = gamma_stop;

    engine::GammaOptions gopts;
    gopts.clock = opts.clock;

    engine::GammaRecord current = engine::compute_gamma(seed_prompt, cfg, llm, embed, gopts);
    trace.steps.push_back({seed_prompt, current, -1});

    int no_improvement = 0;
    for (int iter = 0;; ++iter) {
        if (iter >= max_iterations) {
            trace.stop_reason = StopReason::MaxIterations;
            break;
        }
        if (current.gamma >= gamma_stop) {
            trace.stop_reason = StopReason::GammaThreshold;
            break;
        }

        perturb::PerturbationConfig candidate_cfg = cfg;
        candidate_cfg.seed = util::mix_seed(cfg.seed, static_cast<std::uint64_t>(iter) + 1);
        const auto candidates =
            perturb::utf8_suffix_candidates(current.prompt, branch_factor, candidate_cfg);

        auto outcomes = util::parallel_map<engine::GammaRecord>(
            opts.pool, candidates.size(), [&](std::size_t i) {
                return engine::compute_gamma(candidates[i].rendered, cfg, llm, embed, gopts);
            });

        AscentTrace::Iteration iteration;
        iteration.index = iter;
        int best = -1;
        std::size_t failures = 0;
        std::exception_ptr last_error;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            AscentTrace::CandidateEval eval;
            eval.candidate = candidates[i];
            if (outcomes[i].index() == 0) {
                eval.record = std::move(std::get<0>(outcomes[i]));
                if (best < 0 || eval.record->gamma > iteration.candidates[best].record->gamma) {
                    best = static_cast<int>(i);
                }
            } else {
                ++failures;
                last_error = std::get<1>(outcomes[i]);
                try {
                    std::rethrow_exception(std::get<1>(outcomes[i]));
                } catch (const std::exception& e) {
                    eval.error = e.what();
                }
            }
            iteration.candidates.push_back(std::move(eval));
        }
        if (failures == outcomes.size()) {
            std::rethrow_exception(last_error);  // nothing evaluable this iteration
        }

        const bool improved =
            best >= 0 && iteration.candidates[best].record->gamma > current.gamma;
        if (improved) {
            iteration.candidates[best].accepted = true;
            current = *iteration.candidates[best].record;
            trace.steps.push_back({current.prompt, current, iter});
            no_improvement = 0;
        } else {
            ++no_improvement;
        }
        trace.iterations.push_back(std::move(iteration));

        if (!improved && no_improvement >= opts.plateau_limit) {
            trace.stop_reason = StopReason::NoImprovement;
            break;
        }
    }
    return trace;
}

json trace_to_json(const AscentTrace& trace) {
    json steps = json::array();
    for (const auto& step : trace.steps) {
        steps.push_back(json{
            {"prompt", step.prompt},
            {"iteration", step.iteration},
            {"gamma", step.record.gamma},
            {"record", engine::record_to_json(step.record)},
        });
    }
    json iterations = json::array();
    for (const auto& iteration : trace.iterations) {
        json cands = json::array();
        for (const auto& c : iteration.candidates) {
            json cj = json{
                {"suffix", c.candidate.suffix},
                {"rendered", c.candidate.rendered},
                {"accepted", c.accepted},
            };
            if (c.record) {
                cj["gamma"] = c.record->gamma;
            } else {
                cj["error"] = c.error;
            }
            cands.push_back(std::move(cj));
        }
        iterations.push_back(json{{"index", iteration.index}, {"candidates", std::move(cands)}});
    }
    return json{
        {"seed_prompt", trace.seed_prompt},
        {"branch_factor", trace.branch_factor},
        {"max_iterations", trace.max_iterations},
        {"gamma_stop", trace.gamma_stop},
        {"stop_reason", stop_reason_name(trace.stop_reason)},
        {"steps", std::move(steps)},
        {"iterations", std::move(iterations)},
    };
}

}  // namespace gammascan::adversarial
