#include "gammascan/gamma/gamma.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <utility>

#include "gammascan/errors.hpp"
#include "gammascan/vecmath/vecmath.hpp"

namespace gammascan::engine {

using nlohmann::json;

GammaRecord compute_gamma(const std::string& prompt, const perturb::PerturbationConfig& cfg,
                          clients::CompletionClient& llm, clients::EmbeddingClient& embed,
                          const GammaOptions& opts) {
    if (prompt.empty()) throw EmptyInput("prompt must be nonempty");
    cfg.validate();

    GammaRecord record;
    record.prompt = prompt;
    record.llm_model = llm.model_id();
    record.embed_model = embed.model_id();
    record.config = cfg;
    record.timestamp = opts.clock();

    const auto ball = perturb::make_ball(prompt, cfg);

    // Index 0 is the unperturbed prompt; 1..N follow ball order. Any
    // failure aborts the whole record: gamma from a smaller ball would
    // not be comparable at fixed N.
    auto completions = util::parallel_map<clients::CompletionResult>(
        opts.pool, ball.size() + 1,
        [&](std::size_t i) {
            return llm.complete(i == 0 ? prompt : ball[i - 1].rendered);
        });
    util::rethrow_first_error(completions);

    record.original_output = std::get<0>(completions[0]).text;
    record.original_truncated = std::get<0>(completions[0]).truncated;
    record.perturbations.reserve(ball.size());
    bool all_identical = true;
    for (std::size_t i = 0; i < ball.size(); ++i) {
        const auto& res = std::get<0>(completions[i + 1]);
        if (res.text != record.original_output) all_identical = false;
        record.perturbations.push_back({ball[i], res.text, res.truncated});
    }

    if (all_identical) {
        // The ball sum is a positive multiple of the original embedding;
        // the angle is exactly zero, so skip the embeddings entirely.
        record.gamma = 0.0;
        record.negative_cosine_flag = false;
        return record;
    }

    auto embeddings = util::parallel_map<vec::EmbeddingVector>(
        opts.pool, ball.size() + 1,
        [&](std::size_t i) {
            return embed.embed(i == 0 ? record.original_output
                                      : record.perturbations[i - 1].output);
        });
    util::rethrow_first_error(embeddings);

    const vec::EmbeddingVector& original = std::get<0>(embeddings[0]);
    std::vector<vec::EmbeddingVector> perturbed;
    perturbed.reserve(ball.size());
    for (std::size_t i = 0; i < ball.size(); ++i) {
        perturbed.push_back(std::move(std::get<0>(embeddings[i + 1])));
    }
    const vec::EmbeddingVector ball_vector = vec::sum_vectors(perturbed);

    const vec::SineAngle sa = vec::sine_angle_flagged(original, ball_vector);
    record.gamma = sa.sine;
    record.negative_cosine_flag = sa.negative_cosine;
    return record;
}

double gamma_degrees(const GammaRecord& record) {
    if (record.gamma < 0.0 || record.gamma > 1.0) {
        throw InvalidValue("gamma outside [0,1]");
    }
    return std::asin(record.gamma) * 180.0 / std::numbers::pi;
}

json config_to_json(const perturb::PerturbationConfig& cfg) {
    json excludes = json::array();
    for (char32_t cp : cfg.alphabet_excludes) excludes.push_back(static_cast<std::uint32_t>(cp));
    json ranges = json::array();
    for (const auto& [lo, hi] : cfg.utf8_ranges) {
        ranges.push_back(json::array({static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi)}));
    }
    return json{
        {"scheme", cfg.scheme == perturb::Scheme::ControlChar ? "control_char" : "utf8_random"},
        {"count_n", cfg.count_n},
        {"suffix_len_min", cfg.suffix_len_min},
        {"suffix_len_max", cfg.suffix_len_max},
        {"alphabet_excludes", excludes},
        {"utf8_ranges", ranges},
        {"seed", cfg.seed},
        {"separator", cfg.separator},
    };
}

perturb::PerturbationConfig config_from_json(const json& j) {
    perturb::PerturbationConfig cfg;
    const std::string scheme = j.at("scheme").get<std::string>();
    if (scheme == "control_char") {
        cfg.scheme = perturb::Scheme::ControlChar;
    } else if (scheme == "utf8_random") {
        cfg.scheme = perturb::Scheme::Utf8Random;
    } else {
        throw ConfigError("unknown perturbation scheme '" + scheme + "'");
    }
    cfg.count_n = j.at("count_n").get<int>();
    cfg.suffix_len_min = j.at("suffix_len_min").get<int>();
    cfg.suffix_len_max = j.at("suffix_len_max").get<int>();
    cfg.alphabet_excludes.clear();
    for (const auto& cp : j.at("alphabet_excludes")) {
        cfg.alphabet_excludes.insert(static_cast<char32_t>(cp.get<std::uint32_t>()));
    }
    cfg.utf8_ranges.clear();
    for (const auto& r : j.at("utf8_ranges")) {
        cfg.utf8_ranges.emplace_back(static_cast<char32_t>(r[0].get<std::uint32_t>()),
                                     static_cast<char32_t>(r[1].get<std::uint32_t>()));
    }
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.separator = j.at("separator").get<std::string>();
    return cfg;
}

json record_to_json(const GammaRecord& record) {
    json perts = json::array();
    for (const auto& p : record.perturbations) {
        perts.push_back(json{
            {"index", p.prompt.index},
            {"suffix", p.prompt.suffix},
            {"rendered", p.prompt.rendered},
            {"output", p.output},
            {"truncated", p.truncated},
        });
    }
    json j = json{
        {"prompt", record.prompt},
        {"original_output", record.original_output},
        {"original_truncated", record.original_truncated},
        {"perturbations", perts},
        {"gamma", record.gamma},
        {"negative_cosine_flag", record.negative_cosine_flag},
        {"llm_model", record.llm_model},
        {"embed_model", record.embed_model},
        {"perturbation_config", config_to_json(record.config)},
        {"timestamp", record.timestamp},
    };
    if (!record.id.empty()) j["id"] = record.id;
    return j;
}

GammaRecord record_from_json(const json& j) {
    GammaRecord record;
    record.id = j.value("id", "");
    record.prompt = j.at("prompt").get<std::string>();
    record.original_output = j.at("original_output").get<std::string>();
    record.original_truncated = j.value("original_truncated", false);
    for (const auto& p : j.at("perturbations")) {
        GammaRecord::Perturbation pert;
        pert.prompt.base = record.prompt;
        pert.prompt.index = p.at("index").get<int>();
        pert.prompt.suffix = p.at("suffix").get<std::string>();
        pert.prompt.rendered = p.at("rendered").get<std::string>();
        pert.output = p.at("output").get<std::string>();
        pert.truncated = p.value("truncated", false);
        record.perturbations.push_back(std::move(pert));
    }
    record.gamma = j.at("gamma").get<double>();
    record.negative_cosine_flag = j.at("negative_cosine_flag").get<bool>();
    record.llm_model = j.at("llm_model").get<std::string>();
    record.embed_model = j.at("embed_model").get<std::string>();
    record.config = config_from_json(j.at("perturbation_config"));
    record.timestamp = j.at("timestamp").get<std::int64_t>();
    return record;
}

std::vector<CorpusItem> load_corpus_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open corpus file " + path.string());
    std::vector<CorpusItem> items;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ConfigError("corpus line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("id") || !j.contains("question") || !j["id"].is_string() ||
            !j["question"].is_string()) {
            throw ConfigError("corpus line " + std::to_string(line_no) +
                              ": expected {\"id\": string, \"question\": string}");
        }
        CorpusItem item{j["id"].get<std::string>(), j["question"].get<std::string>()};
        if (item.question.empty()) {
            throw ConfigError("corpus line " + std::to_string(line_no) + ": empty question");
        }
        if (!ids.insert(item.id).second) {
            throw ConfigError("corpus line " + std::to_string(line_no) + ": duplicate id '" +
                              item.id + "'");
        }
        items.push_back(std::move(item));
    }
    return items;
}

json manifest_to_json(const RunManifest& m) {
    return json{
        {"corpus_id", m.corpus_id},
        {"llm_model", m.llm_model},
        {"embed_model", m.embed_model},
        {"config", config_to_json(m.config)},
        {"record_count", m.record_count},
        {"error_count", m.error_count},
        {"created_at", m.created_at},
        {"records_path", m.records_path},
    };
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.corpus_id = j.at("corpus_id").get<std::string>();
    m.llm_model = j.at("llm_model").get<std::string>();
    m.embed_model = j.at("embed_model").get<std::string>();
    m.config = config_from_json(j.at("config"));
    m.record_count = j.at("record_count").get<std::size_t>();
    m.error_count = j.at("error_count").get<std::size_t>();
    m.created_at = j.at("created_at").get<std::int64_t>();
    m.records_path = j.at("records_path").get<std::string>();
    return m;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& run_path) {
    std::filesystem::path p = run_path;
    p += ".manifest.json";
    return p;
}

namespace {

// Scans an existing run file for completed ids (successful or error
// records both count as done) and drops a partially written final line.
std::set<std::string> existing_ids(const std::filesystem::path& path) {
    std::set<std::string> ids;
    std::ifstream in(path, std::ios::binary);
    if (!in) return ids;
    std::string line;
    std::uint64_t good_end = 0;
    bool needs_trim = false;
    while (std::getline(in, line)) {
        if (in.eof() && !line.empty()) {
            // no trailing newline: incomplete write
            needs_trim = true;
            break;
        }
        try {
            const json j = json::parse(line);
            if (j.contains("id")) ids.insert(j["id"].get<std::string>());
            good_end += line.size() + 1;
        } catch (const json::exception&) {
            needs_trim = true;
            break;
        }
    }
    in.close();
    if (needs_trim) std::filesystem::resize_file(path, good_end);
    return ids;
}

std::string error_class_name(ErrorClass cls) {
    switch (cls) {
        case ErrorClass::Transport:
            return "transport";
        case ErrorClass::Validation:
            return "validation";
        case ErrorClass::Math:
            return "math";
        default:
            return "other";
    }
}

}  // namespace

RunManifest scan_corpus(const std::vector<CorpusItem>& corpus,
                        const perturb::PerturbationConfig& cfg, clients::CompletionClient& llm,
                        clients::EmbeddingClient& embed, const std::filesystem::path& run_path,
                        const ScanOptions& opts) {
    if (corpus.empty()) throw EmptyInput("corpus must be nonempty");
    cfg.validate();

    const std::set<std::string> done = existing_ids(run_path);
    std::vector<const CorpusItem*> todo;
    for (const auto& item : corpus) {
        if (!done.count(item.id)) todo.push_back(&item);
    }
    if (opts.limit > 0 && todo.size() > opts.limit) todo.resize(opts.limit);

    std::ofstream out(run_path, std::ios::binary | std::ios::app);
    if (!out) throw ConfigError("cannot open run file " + run_path.string());

    // Records are evaluated in parallel but committed strictly in corpus
    // order, so an interrupted scan resumes into the same byte stream.
    // Per-record measurement failures (Error) become error records; any
    // other exception aborts the scan after the settled prefix is flushed.
    GammaOptions gopts;
    gopts.clock = opts.clock;
    auto evaluate = [&](std::size_t i) -> json {
        const CorpusItem& item = *todo[i];
        try {
            GammaRecord record = compute_gamma(item.question, cfg, llm, embed, gopts);
            record.id = item.id;
            return record_to_json(record);
        } catch (const Error& e) {
            return json{{"id", item.id},
                        {"prompt", item.question},
                        {"error", {{"type", error_class_name(e.error_class())},
                                   {"message", e.what()}}},
                        {"timestamp", opts.clock()}};
        }
    };
    auto write_record = [&](const json& j) {
        out << j.dump() << '\n';
        out.flush();
        if (j.contains("error")) {
            if (opts.on_error) opts.on_error(j["id"], j["error"]["message"]);
        } else if (opts.on_record) {
            opts.on_record(j["id"], j["gamma"].get<double>());
        }
    };

    if (opts.pool == nullptr || opts.pool->size() <= 1 || todo.size() <= 1) {
        for (std::size_t i = 0; i < todo.size(); ++i) write_record(evaluate(i));
    } else {
        std::mutex mu;
        std::condition_variable cv;
        std::map<std::size_t, json> ready;
        std::size_t settled = 0;
        std::exception_ptr hard_error;

        for (std::size_t i = 0; i < todo.size(); ++i) {
            opts.pool->submit([&, i] {
                json j;
                std::exception_ptr err;
                try {
                    j = evaluate(i);
                } catch (...) {
                    err = std::current_exception();
                }
                std::lock_guard lock(mu);
                if (err) {
                    if (!hard_error) hard_error = err;
                } else {
                    ready.emplace(i, std::move(j));
                }
                ++settled;
                cv.notify_all();
            });
        }

        std::unique_lock lock(mu);
        std::size_t next = 0;
        while (next < todo.size()) {
            cv.wait(lock, [&] { return ready.count(next) || settled == todo.size(); });
            auto it = ready.find(next);
            if (it != ready.end()) {
                const json j = std::move(it->second);
                ready.erase(it);
                lock.unlock();
                write_record(j);
                lock.lock();
                ++next;
            } else {
                break;  // a hard error left a gap; stop at the good prefix
            }
        }
        cv.wait(lock, [&] { return settled == todo.size(); });
        if (hard_error) std::rethrow_exception(hard_error);
    }
    out.close();

    // The file is the source of truth for the counts.
    const RunFile loaded = load_run_file(run_path);
    RunManifest manifest;
    manifest.corpus_id = opts.corpus_id;
    manifest.llm_model = llm.model_id();
    manifest.embed_model = embed.model_id();
    manifest.config = cfg;
    manifest.record_count = loaded.records.size();
    manifest.error_count = loaded.error_count;
    manifest.created_at = opts.clock();
    manifest.records_path = run_path.filename().string();

    std::ofstream mout(manifest_path_for(run_path), std::ios::binary | std::ios::trunc);
    mout << manifest_to_json(manifest).dump(2) << '\n';
    return manifest;
}

RunFile load_run_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open run file " + path.string());
    RunFile rf;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ConfigError("run file " + path.string() + " line " + std::to_string(line_no) +
                              ": " + e.what());
        }
        if (j.contains("error")) {
            ++rf.error_count;
        } else {
            rf.records.push_back(record_from_json(j));
        }
    }
    return rf;
}

}  // namespace gammascan::engine
