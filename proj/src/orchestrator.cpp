// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/orchestrator.hpp"

#include <chrono>
#include <ctime>
#include <set>

#include "leti/error.hpp"
#include "leti/fcft.hpp"
#include "leti/postprocess.hpp"
#include "leti/sandbox.hpp"

namespace leti {

using nlohmann::json;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string cache_key(const Problem& problem, const CandidateSolution& solution) {
    std::string key = problem.id;
    key += '\0';
    key += problem.setup_code.value_or("");
    for (const auto& t : problem.tests) {
        key += '\0';
        key += t.source;
    }
    key += '\x01';
    key += solution.text;
    return key;
}

std::map<std::string, const Problem*> index_problems(const std::vector<Problem>& problems) {
    std::map<std::string, const Problem*> out;
    for (const auto& p : problems) out[p.id] = &p;
    return out;
}

const Problem& lookup(const std::map<std::string, const Problem*>& index, const std::string& id) {
    auto it = index.find(id);
    if (it == index.end()) {
        throw ValidationError("solution refers to unknown problem '" + id + "'");
    }
    return *it->second;
}

void write_rows(const std::filesystem::path& path, const std::vector<CandidateSolution>& solutions) {
    std::vector<json> rows(solutions.begin(), solutions.end());
    write_jsonl(path, rows);
}

void write_feedback(const std::filesystem::path& path, const std::vector<CandidateSolution>& solutions,
                    const std::vector<Feedback>& feedback) {
    std::vector<json> rows;
    rows.reserve(solutions.size());
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        rows.push_back(feedback_row(solutions[i], feedback[i]));
    }
    write_jsonl(path, rows);
}

std::string iter_name(int i) {
    return "iter_" + std::to_string(i);
}

}  // namespace

std::string render_prompt(const Problem& problem, bool show_example_test) {
    std::string prompt = problem.instruction;
    if (show_example_test && !problem.tests.empty()) {
        prompt += "\n";
        prompt += problem.tests.front().source;
    }
    return prompt;
}

std::uint64_t round_seed(std::uint64_t base_seed, std::string_view round, int index) {
    std::uint64_t h = base_seed ^ 0x6a09e667f3bcc909ull;
    for (unsigned char c : round) {
        h ^= c;
        h *= 1099511628211ull;
    }
    h ^= static_cast<std::uint64_t>(index) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

std::vector<CandidateSolution> sample_problems(const Generator& generator, const std::vector<Problem>& problems,
                                               const SampleSettings& settings) {
    std::vector<CandidateSolution> out;
    out.reserve(problems.size() * static_cast<std::size_t>(std::max(settings.n, 0)));
    for (const auto& problem : problems) {
        SampleRequest request;
        request.prompt = render_prompt(problem, settings.show_example_test);
        request.n = settings.n;
        request.temperature = settings.temperature;
        request.condition = settings.condition;
        request.seed = settings.seed;
        const auto completions = generator.sample(request);
        for (std::size_t j = 0; j < completions.size(); ++j) {
            CandidateSolution s;
            s.problem_id = problem.id;
            s.sample_index = static_cast<int>(j);
            s.raw_text = completions[j];
            s.text = settings.post_processing ? truncate_at_stop(s.raw_text, settings.stops, true).text : s.raw_text;
            s.conditioned_on = settings.condition;
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<Feedback> EvaluationCache::evaluate(const std::vector<Problem>& problems,
                                                const std::vector<CandidateSolution>& solutions) {
    const auto index = index_problems(problems);
    std::vector<std::string> keys;
    std::vector<std::pair<Problem, CandidateSolution>> misses;
    std::set<std::string> pending;
    keys.reserve(solutions.size());
    for (const auto& s : solutions) {
        const Problem& p = lookup(index, s.problem_id);
        keys.push_back(cache_key(p, s));
        if (!cache_.count(keys.back()) && pending.insert(keys.back()).second) {
            misses.emplace_back(p, s);
        }
    }
    if (!misses.empty()) {
        auto results = evaluate_batch(misses, limits_, options_);
        for (std::size_t i = 0; i < results.size(); ++i) {
            if (!results[i].ok()) {
                throw InfrastructureError("evaluation of " + misses[i].second.problem_id + " failed: " +
                                          results[i].infrastructure_error);
            }
            cache_.emplace(cache_key(misses[i].first, misses[i].second), std::move(*results[i].feedback));
        }
    }
    std::vector<Feedback> out;
    out.reserve(solutions.size());
    for (const auto& k : keys) out.push_back(cache_.at(k));
    return out;
}

double mean_pass_at_1(const std::vector<CandidateSolution>& solutions, const std::vector<Feedback>& feedback) {
    std::vector<std::string> order;
    std::map<std::string, std::pair<int, int>> tally;  // id -> (n, c)
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        auto [it, inserted] = tally.try_emplace(solutions[i].problem_id, 0, 0);
        if (inserted) order.push_back(solutions[i].problem_id);
        ++it->second.first;
        it->second.second += feedback[i].f_binary();
    }
    if (order.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& id : order) {
        const auto [n, c] = tally[id];
        sum += pass_at_k(n, c, 1);
    }
    return sum / static_cast<double>(order.size());
}

std::vector<FcftRecord> build_fcft_dataset(const std::vector<Problem>& problems,
                                           const std::vector<CandidateSolution>& solutions,
                                           const std::vector<Feedback>& feedback, int iteration,
                                           bool show_example_test, bool dedup) {
    if (solutions.size() != feedback.size()) {
        throw ValidationError("solutions and feedback differ in length");
    }
    const auto index = index_problems(problems);
    std::vector<FcftRecord> records;
    records.reserve(solutions.size());
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        const Problem& p = lookup(index, solutions[i].problem_id);
        records.push_back(build_record(p, solutions[i], feedback[i], iteration, render_prompt(p, show_example_test)));
    }
    return dedup ? deduplicate(records) : records;
}

void fit_trigram(TrigramState& state, const std::vector<FcftRecord>& records, int epochs,
                 const std::vector<std::string>* pretrain, std::size_t batch_size) {
    std::vector<std::string> sequences;
    for (const auto& r : records) {
        for (int c = 0; c < r.count; ++c) sequences.push_back(r.sequence);
    }
    if (!pretrain) {
        state.fit(sequences, epochs);
        return;
    }
    for (int e = 0; e < epochs; ++e) {
        const auto epoch = mix_batches(sequences, *pretrain, batch_size);
        for (const auto& batch : epoch.batches) {
            state.fit(batch.items, 1);
        }
    }
}

json feedback_row(const CandidateSolution& solution, const Feedback& feedback) {
    json row = feedback;
    row["problem_id"] = solution.problem_id;
    row["sample_index"] = solution.sample_index;
    return row;
}

std::vector<CandidateSolution> load_samples(const std::filesystem::path& path) {
    std::vector<CandidateSolution> out;
    std::size_t line = 0;
    for (const auto& row : read_jsonl(path)) {
        ++line;
        try {
            out.push_back(row.get<CandidateSolution>());
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed sample: ") + e.what(), line);
        }
    }
    return out;
}

std::map<std::pair<std::string, int>, Feedback> load_feedback(const std::filesystem::path& path) {
    std::map<std::pair<std::string, int>, Feedback> out;
    std::size_t line = 0;
    for (const auto& row : read_jsonl(path)) {
        ++line;
        try {
            out.insert_or_assign({row.at("problem_id").get<std::string>(), row.at("sample_index").get<int>()},
                                 feedback_from_json(row));
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed feedback row: ") + e.what(), line);
        }
    }
    return out;
}

// ------------------------------------------------------------------ reports

json IterationReport::to_json() const {
    json j{{"iteration", iteration},
           {"train_pass_at_1", train_pass_at_1},
           {"train_error_distribution", train_errors.to_json()},
           {"test_pass_at_1", test.pass_at_1},
           {"test_error_distribution", test.errors.to_json()},
           {"fcft_records", fcft_records},
           {"fcft_good", fcft_good},
           {"generator_state_checksum", state_checksum ? json(*state_checksum) : json(nullptr)},
           {"external_train_pending", external_train_pending}};
    if (test.pass_at_1_train_postprocessing) {
        j["test_pass_at_1_train_postprocessing"] = *test.pass_at_1_train_postprocessing;
    }
    return j;
}

std::vector<std::pair<int, double>> RunManifest::train_series() const {
    std::vector<std::pair<int, double>> out;
    for (const auto& it : data.value("iterations", json::array())) {
        out.emplace_back(it.at("iteration").get<int>(), it.at("train_pass_at_1").get<double>());
    }
    if (finished()) {
        out.emplace_back(static_cast<int>(out.size()), data.at("final").at("train_pass_at_1").get<double>());
    }
    return out;
}

std::vector<std::pair<int, double>> RunManifest::test_series() const {
    std::vector<std::pair<int, double>> out;
    if (data.contains("baseline")) {
        out.emplace_back(0, data.at("baseline").at("test_pass_at_1").get<double>());
    }
    for (const auto& it : data.value("iterations", json::array())) {
        out.emplace_back(it.at("iteration").get<int>() + 1, it.at("test_pass_at_1").get<double>());
    }
    return out;
}

int RunManifest::completed_iterations() const {
    return static_cast<int>(data.value("iterations", json::array()).size());
}

bool RunManifest::finished() const {
    return data.contains("final") && !data.at("final").is_null();
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
    try {
        return RunManifest{json::parse(read_file(path))};
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// ------------------------------------------------------------- orchestrator

Orchestrator::Orchestrator(RunConfig config, std::filesystem::path runs_root)
    : config_(std::move(config)),
      runs_root_(std::move(runs_root)),
      cache_(config_.limits, config_.sandbox_options()) {
    config_.validate();
}

void Orchestrator::load_inputs() {
    train_ = load_problems(config_.resolve(config_.problems_path));
    if (train_.empty()) {
        throw ValidationError("no training problems in " + config_.problems_path);
    }
    test_ = config_.test_problems_path ? load_problems(config_.resolve(*config_.test_problems_path)) : train_;
    if (config_.mixing_enabled) {
        pretrain_ = load_pretrain_corpus(config_.resolve(*config_.pretrain_corpus_path));
        if (pretrain_.empty()) {
            throw ValidationError("mixing is enabled but the pretraining corpus is empty");
        }
    }
    generator_ = make_generator(config_.generator, config_.base_dir);
}

void Orchestrator::restore_generator(const RunManifest& manifest) {
    const int done = manifest.completed_iterations();
    if (done == 0 || config_.generator.kind != GeneratorKind::Trigram) {
        return;
    }
    auto& gen = static_cast<TrigramGenerator&>(*generator_);
    gen.state() = load_trigram_state(run_dir() / iter_name(done - 1) / "generator_state.json");
}

EvalReport Orchestrator::evaluate_split(const std::vector<Problem>& problems, std::string_view round, int index,
                                        const std::optional<std::string>& condition,
                                        const std::filesystem::path* dump_dir) {
    const bool eval_pp = config_.eval_post_processing.value_or(config_.post_processing);
    SampleSettings settings{config_.eval_samples,    config_.eval_temperature, condition, eval_pp,
                            config_.stops,           config_.show_example_test,
                            round_seed(config_.seed, round, index)};
    auto solutions = sample_problems(*generator_, problems, settings);
    auto feedback = cache_.evaluate(problems, solutions);
    EvalReport report;
    report.pass_at_1 = mean_pass_at_1(solutions, feedback);
    report.errors = error_distribution(feedback);
    if (eval_pp != config_.post_processing) {
        auto alt = solutions;
        for (auto& s : alt) {
            s.text = config_.post_processing ? truncate_at_stop(s.raw_text, config_.stops, true).text : s.raw_text;
        }
        report.pass_at_1_train_postprocessing = mean_pass_at_1(alt, cache_.evaluate(problems, alt));
    }
    if (dump_dir) {
        write_rows(*dump_dir / "test_samples.jsonl", solutions);
        write_feedback(*dump_dir / "test_feedback.jsonl", solutions, feedback);
    }
    return report;
}

IterationReport Orchestrator::run_iteration(int iteration) {
    if (iteration < 0) {
        throw ValidationError("iteration index must be non-negative");
    }
    if (!generator_) {
        load_inputs();
    }
    const auto dir = run_dir() / iter_name(iteration);
    // Sampling is conditioned on <|good|> once the model has been fitted.
    std::optional<std::string> condition;
    if (iteration >= 1) condition = std::string(vocab::kGood);

    SampleSettings settings{config_.n_samples,    config_.train_temperature, condition, config_.post_processing,
                            config_.stops,        config_.show_example_test,
                            round_seed(config_.seed, "train", iteration)};
    const auto solutions = sample_problems(*generator_, train_, settings);
    const auto feedback = cache_.evaluate(train_, solutions);
    const auto records =
        build_fcft_dataset(train_, solutions, feedback, iteration, config_.show_example_test, config_.dedup);

    IterationReport report;
    report.iteration = iteration;
    report.train_pass_at_1 = mean_pass_at_1(solutions, feedback);
    report.train_errors = error_distribution(feedback);
    report.fcft_records = records.size();
    for (const auto& r : records) report.fcft_good += r.f_binary == 1 ? 1 : 0;

    switch (generator_->kind()) {
        case GeneratorKind::Trigram: {
            auto& gen = static_cast<TrigramGenerator&>(*generator_);
            fit_trigram(gen.state(), records, config_.epochs, config_.mixing_enabled ? &pretrain_ : nullptr,
                        config_.batch_size);
            report.state_checksum = gen.state().checksum();
            save_trigram_state(dir / "generator_state.json", gen.state());
            break;
        }
        case GeneratorKind::Remote:
            report.external_train_pending = true;
            break;
        case GeneratorKind::Mock:
            break;
    }

    report.test = evaluate_split(test_, "test", iteration, std::string(vocab::kGood), nullptr);

    write_rows(dir / "samples.jsonl", solutions);
    write_feedback(dir / "feedback.jsonl", solutions, feedback);
    write_fcft_dataset(dir / "fcft.jsonl", records);
    write_file(dir / "metrics.json", report.to_json().dump(2) + "\n");
    return report;
}

RunManifest Orchestrator::run_loop() {
    load_inputs();
    const auto manifest_path = run_dir() / "manifest.json";
    const json snapshot = config_.to_json();
    if (std::filesystem::exists(manifest_path)) {
        auto existing = RunManifest::load(manifest_path);
        if (existing.data.value("config", json()) != snapshot) {
            throw ValidationError("run '" + config_.run_id +
                                  "' already exists with a different config; choose another run_id");
        }
        manifest_ = existing.data;
        restore_generator(existing);
    } else {
        manifest_ = json{{"run_id", config_.run_id},
                         {"config", snapshot},
                         {"created_at", utc_now()},
                         {"iterations", json::array()},
                         {"final", nullptr},
                         {"external_evaluations", json::object()}};
        write_manifest();
    }

    if (!manifest_.contains("baseline")) {
        // The starting model has not been fitted, so no reward token.
        auto baseline = evaluate_split(test_, "baseline", 0, std::nullopt, nullptr);
        json metrics{{"test_pass_at_1", baseline.pass_at_1}, {"test_error_distribution", baseline.errors.to_json()}};
        write_file(run_dir() / "baseline" / "metrics.json", metrics.dump(2) + "\n");
        manifest_["baseline"] = metrics;
        write_manifest();
    }

    for (int i = RunManifest{manifest_}.completed_iterations(); i < config_.iterations; ++i) {
        const auto report = run_iteration(i);
        const std::string dir = iter_name(i);
        json entry = report.to_json();
        entry["dir"] = dir;
        entry["samples"] = dir + "/samples.jsonl";
        entry["feedback"] = dir + "/feedback.jsonl";
        entry["fcft"] = dir + "/fcft.jsonl";
        entry["metrics"] = dir + "/metrics.json";
        entry["status"] = report.external_train_pending ? "external-train pending"
                          : report.state_checksum          ? "fitted"
                                                           : "static";
        entry["completed_at"] = utc_now();
        manifest_["iterations"].push_back(std::move(entry));
        write_manifest();
        write_metrics_csv();
    }

    if (manifest_["final"].is_null()) {
        const auto dir = run_dir() / "final";
        SampleSettings settings{config_.n_samples,    config_.train_temperature, std::string(vocab::kGood),
                                config_.post_processing, config_.stops,           config_.show_example_test,
                                round_seed(config_.seed, "train", config_.iterations)};
        const auto solutions = sample_problems(*generator_, train_, settings);
        const auto feedback = cache_.evaluate(train_, solutions);
        write_rows(dir / "samples.jsonl", solutions);
        write_feedback(dir / "feedback.jsonl", solutions, feedback);

        json final{{"train_pass_at_1", mean_pass_at_1(solutions, feedback)},
                   {"train_error_distribution", error_distribution(feedback).to_json()}};
        manifest_["final"] = final;
        RunManifest m{manifest_};
        json series = json::array();
        for (const auto& [i, v] : m.train_series()) series.push_back({i, v});
        final["train_pass_at_1_series"] = series;
        final["improvement"] = to_json(improvement_rate(m.train_series()));
        write_file(dir / "metrics.json", final.dump(2) + "\n");
        manifest_["final"] = final;
        manifest_["final"]["completed_at"] = utc_now();
        write_manifest();
        write_metrics_csv();
    }
    return RunManifest{manifest_};
}

void Orchestrator::write_manifest() {
    manifest_["updated_at"] = utc_now();
    write_file(run_dir() / "manifest.json", manifest_.dump(2) + "\n");
}

void Orchestrator::write_metrics_csv() const {
    std::string csv =
        "iteration,train_pass_at_1,test_pass_at_1,fcft_records,fcft_good,Pass,AssertionError,SyntaxError,"
        "IndentationError,NameError,Other\n";
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    auto dist_cols = [](const ErrorDistribution& d) {
        return std::to_string(d.count("Pass")) + "," + std::to_string(d.count("AssertionError")) + "," +
               std::to_string(d.count("SyntaxError")) + "," + std::to_string(d.count("IndentationError")) + "," +
               std::to_string(d.count("NameError")) + "," + std::to_string(d.other_errors());
    };
    for (const auto& it : manifest_.at("iterations")) {
        const auto d = ErrorDistribution::from_json(it.at("train_error_distribution"));
        csv += std::to_string(it.at("iteration").get<int>()) + "," + num(it.at("train_pass_at_1").get<double>()) +
               "," + num(it.at("test_pass_at_1").get<double>()) + "," +
               std::to_string(it.at("fcft_records").get<std::size_t>()) + "," +
               std::to_string(it.at("fcft_good").get<std::size_t>()) + "," + dist_cols(d) + "\n";
    }
    if (!manifest_.at("final").is_null()) {
        const auto& f = manifest_.at("final");
        const auto d = ErrorDistribution::from_json(f.at("train_error_distribution"));
        csv += "final," + num(f.at("train_pass_at_1").get<double>()) + ",,,," + dist_cols(d) + "\n";
    }
    write_file(run_dir() / "metrics.csv", csv);
}

}  // namespace leti
