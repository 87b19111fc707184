#include "gammascan/perturb/perturb.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <unordered_set>

#include "gammascan/errors.hpp"
#include "gammascan/util/rng.hpp"
#include "gammascan/util/utf8.hpp"
#include "gammascan/vecmath/vecmath.hpp"

namespace gammascan::perturb {
namespace {

constexpr int kDistinctRetryCap = 1000;

std::vector<char32_t> control_alphabet(const PerturbationConfig& cfg) {
    std::vector<char32_t> alphabet;
    for (char32_t cp = 0x00; cp <= 0x1F; ++cp) {
        if (!cfg.alphabet_excludes.count(cp)) alphabet.push_back(cp);
    }
    return alphabet;
}

std::vector<char32_t> utf8_alphabet(const PerturbationConfig& cfg) {
    std::vector<char32_t> alphabet;
    for (const auto& [lo, hi] : cfg.utf8_ranges) {
        for (char32_t cp = lo; cp <= hi; ++cp) {
            if (cp >= 0xD800 && cp <= 0xDFFF) continue;          // surrogates
            if ((cp & 0xFFFE) == 0xFFFE) continue;               // xxFFFE / xxFFFF
            if (cp >= 0xFDD0 && cp <= 0xFDEF) continue;          // noncharacters
            if (!cfg.alphabet_excludes.count(cp)) alphabet.push_back(cp);
        }
    }
    return alphabet;
}

// Number of distinct suffixes with lengths in [min,max] over `a` symbols,
// saturating; bounds the distinctness requirement.
std::uint64_t distinct_capacity(std::size_t a, int len_min, int len_max) {
    const std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t total = 0;
    for (int len = len_min; len <= len_max; ++len) {
        std::uint64_t combos = 1;
        for (int i = 0; i < len; ++i) {
            if (combos > cap / a) return cap;
            combos *= a;
        }
        if (total > cap - combos) return cap;
        total += combos;
    }
    return total;
}

std::string sample_suffix(std::mt19937_64& rng, const std::vector<char32_t>& alphabet,
                          int len_min, int len_max) {
    const int len =
        len_min + static_cast<int>(util::uniform_below(rng, static_cast<std::uint64_t>(len_max - len_min + 1)));
    std::string suffix;
    for (int i = 0; i < len; ++i) {
        util::utf8_append(suffix, alphabet[util::uniform_below(rng, alphabet.size())]);
    }
    return suffix;
}

std::vector<PerturbedPrompt> sample_ball(const std::string& prompt, const PerturbationConfig& cfg,
                                         const std::vector<char32_t>& alphabet, int count) {
    if (alphabet.empty()) {
        throw AlphabetEmpty("perturbation alphabet is empty after exclusions");
    }
    if (distinct_capacity(alphabet.size(), cfg.suffix_len_min, cfg.suffix_len_max) <
        static_cast<std::uint64_t>(count)) {
        throw ExhaustedDistinct("requested " + std::to_string(count) +
                                " distinct suffixes but the alphabet admits fewer");
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<PerturbedPrompt> out;
    out.reserve(static_cast<std::size_t>(count));
    std::unordered_set<std::string> seen;
    int retries = 0;
    while (out.size() < static_cast<std::size_t>(count)) {
        std::string suffix = sample_suffix(rng, alphabet, cfg.suffix_len_min, cfg.suffix_len_max);
        if (!seen.insert(suffix).second) {
            if (++retries > kDistinctRetryCap) {
                throw ExhaustedDistinct("gave up finding distinct suffixes after " +
                                        std::to_string(kDistinctRetryCap) + " rejections");
            }
            continue;
        }
        retries = 0;
        PerturbedPrompt p;
        p.base = prompt;
        p.suffix = std::move(suffix);
        p.rendered = prompt + cfg.separator + p.suffix;
        p.index = static_cast<int>(out.size());
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

void PerturbationConfig::validate() const {
    if (count_n < 1) throw ConfigError("count_n must be >= 1");
    if (suffix_len_min < 1) throw ConfigError("suffix_len_min must be >= 1");
    if (suffix_len_min > suffix_len_max) {
        throw ConfigError("suffix_len_min must not exceed suffix_len_max");
    }
    if (scheme == Scheme::Utf8Random) {
        if (utf8_ranges.empty()) throw ConfigError("utf8_ranges must be nonempty");
        for (const auto& [lo, hi] : utf8_ranges) {
            if (lo > hi) throw ConfigError("utf8 range has lo > hi");
        }
    }
}

std::vector<PerturbedPrompt> control_char_ball(const std::string& prompt,
                                               const PerturbationConfig& cfg) {
    cfg.validate();
    if (cfg.scheme != Scheme::ControlChar) {
        throw ConfigError("control_char_ball requires the ControlChar scheme");
    }
    return sample_ball(prompt, cfg, control_alphabet(cfg), cfg.count_n);
}

std::vector<PerturbedPrompt> utf8_suffix_candidates(const std::string& prompt, int k,
                                                    const PerturbationConfig& cfg) {
    cfg.validate();
    if (cfg.scheme != Scheme::Utf8Random) {
        throw ConfigError("utf8_suffix_candidates requires the Utf8Random scheme");
    }
    if (k < 1) throw ConfigError("candidate count must be >= 1");
    return sample_ball(prompt, cfg, utf8_alphabet(cfg), k);
}

std::vector<PerturbedPrompt> make_ball(const std::string& prompt, const PerturbationConfig& cfg) {
    return cfg.scheme == Scheme::ControlChar ? control_char_ball(prompt, cfg)
                                             : utf8_suffix_candidates(prompt, cfg.count_n, cfg);
}

IsotropyStats isotropy_report(std::span<const std::string> prompts, const PerturbationConfig& cfg,
                              clients::CompletionClient& llm, clients::EmbeddingClient& embed,
                              util::ThreadPool* pool) {
    if (prompts.empty()) throw EmptyInput("isotropy_report requires at least one prompt");
    cfg.validate();

    IsotropyStats stats;
    stats.prompts.reserve(prompts.size());
    double sum = 0.0;
    for (const std::string& prompt : prompts) {
        const auto ball = make_ball(prompt, cfg);
        auto outcomes = util::parallel_map<vec::EmbeddingVector>(
            pool, ball.size(), [&](std::size_t i) {
                return embed.embed(llm.complete(ball[i].rendered).text);
            });
        util::rethrow_first_error(outcomes);

        std::vector<vec::EmbeddingVector> vectors;
        vectors.reserve(outcomes.size());
        for (auto& o : outcomes) vectors.push_back(std::move(std::get<0>(o)));

        const double angle = vec::cone_angle_deg(vectors);
        stats.prompts.push_back({prompt, angle});
        sum += angle;
        stats.max_deg = std::max(stats.max_deg, angle);
    }
    stats.mean_deg = sum / static_cast<double>(stats.prompts.size());
    return stats;
}

}  // namespace gammascan::perturb
