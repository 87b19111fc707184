#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gammascan/clients/clients.hpp"
#include "gammascan/util/thread_pool.hpp"

namespace gammascan::perturb {

enum class Scheme { ControlChar, Utf8Random };

// Inclusive code-point ranges sampled by the Utf8Random scheme: printable,
// assignable, semantically varied blocks (Latin supplements, Greek through
// CJK symbols, common CJK ideographs).
inline const std::vector<std::pair<char32_t, char32_t>> kDefaultUtf8Ranges = {
    {0x00A0, 0x024F},
    {0x0370, 0x2FFF},
    {0x4E00, 0x9FFF},
};

struct PerturbationConfig {
    Scheme scheme = Scheme::ControlChar;
    int count_n = 10;
    int suffix_len_min = 1;
    int suffix_len_max = 3;
    // U+0000 is excluded by default: NUL is hostile to many HTTP/JSON
    // stacks, and the measurement loses nothing without it.
    std::set<char32_t> alphabet_excludes = {U'\0'};
    std::vector<std::pair<char32_t, char32_t>> utf8_ranges = kDefaultUtf8Ranges;
    std::uint64_t seed = 0;
    std::string separator = " ";

    void validate() const;  // throws ConfigError on violated invariants
};

struct PerturbedPrompt {
    std::string base;
    std::string suffix;    // raw UTF-8 code points, no separator
    std::string rendered;  // base + separator + suffix, byte-level
    int index = 0;
};

// The discrete "ball" around a prompt: count_n prompts with pairwise
// distinct suffixes of 1..3 control characters (alphabet U+0000..U+001F
// minus excludes), fully determined by cfg.seed.
std::vector<PerturbedPrompt> control_char_ball(const std::string& prompt,
                                               const PerturbationConfig& cfg);

// k distinct candidate extensions drawing suffix code points from the
// configured UTF-8 ranges; used by the adversarial search.
std::vector<PerturbedPrompt> utf8_suffix_candidates(const std::string& prompt, int k,
                                                    const PerturbationConfig& cfg);

// Dispatches on cfg.scheme; the gamma engine measures with whichever ball
// the config selects.
std::vector<PerturbedPrompt> make_ball(const std::string& prompt, const PerturbationConfig& cfg);

struct IsotropyStats {
    struct PerPrompt {
        std::string prompt;
        double cone_deg = 0.0;
    };
    std::vector<PerPrompt> prompts;
    double mean_deg = 0.0;
    double max_deg = 0.0;
};

// For each prompt: generate the ball, run every perturbed prompt through
// the completion client, embed the outputs, and measure the cone angle of
// the perturbed-output embeddings. A sanity check that a perturbation
// scheme scatters roughly uniformly in embedding space.
IsotropyStats isotropy_report(std::span<const std::string> prompts, const PerturbationConfig& cfg,
                              clients::CompletionClient& llm, clients::EmbeddingClient& embed,
                              util::ThreadPool* pool = nullptr);

}  // namespace gammascan::perturb
