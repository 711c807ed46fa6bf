// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/toy_benchmark.hpp"

#include <nlohmann/json.hpp>

#include "leti/fcft.hpp"
#include "leti/generator.hpp"
#include "leti/trigram.hpp"

namespace leti {

namespace {

enum class Family { Constant, Plus, Times, Minus };

constexpr int kTestInput = 3;
constexpr double kToyAlpha = 0.001;
// Pretraining documents per problem; exactly one carries the correct body,
// so an unfitted model solves a problem with probability 1/kDocsPerProblem.
constexpr int kDocsPerProblem = 60;

struct ToySpec {
    int number;
    Family family;
};

ToySpec spec_for(int i) {
    return {11 + i, static_cast<Family>(i % 4)};
}

char op_of(Family f) {
    switch (f) {
        case Family::Plus: return '+';
        case Family::Times: return '*';
        case Family::Minus: return '-';
        case Family::Constant: break;
    }
    return '\0';
}

std::string correct_body(const ToySpec& s) {
    const std::string k = std::to_string(s.number);
    return s.family == Family::Constant ? k : k + op_of(s.family) + "x";
}

int expected_value(const ToySpec& s) {
    switch (s.family) {
        case Family::Constant: return s.number;
        case Family::Plus: return s.number + kTestInput;
        case Family::Times: return s.number * kTestInput;
        case Family::Minus: return s.number - kTestInput;
    }
    return s.number;
}

// Bodies of the pretraining documents for one problem. The two choices a
// model makes after the number (operator, then operand) are both taken in
// contexts that contain the number, so they are specific to the problem.
std::vector<std::string> pretrain_bodies(const ToySpec& s) {
    const std::string k = std::to_string(s.number);
    std::vector<std::string> bodies{correct_body(s)};
    auto add = [&](const std::string& body, int times) { bodies.insert(bodies.end(), times, body); };
    constexpr int kWrongOperand = 5;
    constexpr int kWrongOperator = kDocsPerProblem - 1 - kWrongOperand;
    switch (s.family) {
        case Family::Constant:
            add(k + "+1", kDocsPerProblem / 2);           // wrong value
            add(k + "+", kDocsPerProblem / 2 - 1);        // incomplete expression
            break;
        case Family::Plus:
            add(k + "+y", kWrongOperand);   // undefined name
            add(k + "*x", kWrongOperator);  // wrong operator
            break;
        case Family::Times:
            add(k + "*1", kWrongOperand);   // wrong operand
            add(k + "=x", kWrongOperator);  // not an expression
            break;
        case Family::Minus:
            add(k + "-y", kWrongOperand);
            add(k + "+x", kWrongOperator);
            break;
    }
    return bodies;
}

std::string instruction(const ToySpec& s) {
    const std::string k = std::to_string(s.number);
    switch (s.family) {
        case Family::Constant: return "Write f so that it always returns " + k;
        case Family::Plus: return "Write f so that it returns x plus " + k;
        case Family::Times: return "Write f so that it returns x times " + k;
        case Family::Minus: return "Write f so that it returns x subtracted from " + k;
    }
    return k;
}

// Pretraining phrasings differ from the benchmark instructions but keep
// the number in final position.
std::vector<std::string> rephrasings(const ToySpec& s) {
    const std::string k = std::to_string(s.number);
    switch (s.family) {
        case Family::Constant:
            return {"Constant function with value " + k, "The function gives back " + k,
                    "Ignore the input and produce " + k, "Always answer " + k};
        case Family::Plus:
            return {"Add x to " + k, "Sum of x and " + k, "Increase x by " + k, "Offset x by " + k};
        case Family::Times:
            return {"Multiply x by " + k, "Product of x and " + k, "Scale x by " + k, "Repeat x this many times " + k};
        case Family::Minus:
            return {"Subtract x from " + k, "Difference between x and " + k, "Take x away from " + k,
                    "Count down x steps from " + k};
    }
    return {};
}

}  // namespace

std::vector<Problem> toy_problems() {
    std::vector<Problem> problems;
    for (int i = 0; i < kToyProblemCount; ++i) {
        const ToySpec s = spec_for(i);
        Problem p;
        p.id = "toy/" + std::to_string(i);
        p.instruction = instruction(s);
        p.setup_code = std::string(kToySetup);
        p.tests.push_back({0, "assert f(" + std::to_string(kTestInput) + ") == " + std::to_string(expected_value(s))});
        problems.push_back(std::move(p));
    }
    return problems;
}

std::string toy_reference_solution(const Problem& problem) {
    const int i = std::stoi(problem.id.substr(problem.id.find('/') + 1));
    return correct_body(spec_for(i));
}

std::vector<std::string> toy_pretrain_corpus() {
    std::vector<std::string> docs;
    for (int i = 0; i < kToyProblemCount; ++i) {
        const ToySpec s = spec_for(i);
        const auto bodies = pretrain_bodies(s);
        const auto phrases = rephrasings(s);
        for (std::size_t j = 0; j < bodies.size(); ++j) {
            docs.push_back(phrases[j % phrases.size()] + std::string(vocab::kSolution) + bodies[j]);
        }
    }
    return docs;
}

RunConfig write_toy_benchmark(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_problems(dir / "problems.jsonl", toy_problems());

    const auto corpus = toy_pretrain_corpus();
    std::string text;
    for (const auto& doc : corpus) {
        text += doc;
        text += "\n\n";
    }
    write_file(dir / "pretrain.txt", text);

    TrigramState state(kToyAlpha);
    state.fit(corpus, 1);
    save_trigram_state(dir / "initial_state.json", state);

    RunConfig c;
    c.base_dir = dir;
    c.problems_path = "problems.jsonl";
    c.generator.kind = GeneratorKind::Trigram;
    c.generator.state_path = "initial_state.json";
    c.generator.alpha = kToyAlpha;
    c.generator.max_new_tokens = 8;
    c.n_samples = 32;
    c.iterations = 3;
    c.epochs = 3;
    c.mixing_enabled = true;
    c.pretrain_corpus_path = "pretrain.txt";
    c.batch_size = 16;
    c.interpreter = {"python3", "-S"};
    c.limits.wall_clock_timeout = 5.0;
    c.seed = 20260;
    c.run_id = "toy";
    c.validate();
    write_file(dir / "config.json", c.to_json().dump(2) + "\n");
    return c;
}

}  // namespace leti
