// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Rule-based evaluator for event argument extraction posed as code
// generation, plus Arg-I / Arg-C scoring.
//
// A prediction runs through five checks in a fixed order and the first
// violation becomes the feedback:
//   1. every predicted role exists in the ontology
//   2. every entity type is allowed for its role
//   3. every predicted span matches some gold span
//   4. every matched span carries the gold role
//   5. every gold argument was predicted

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "leti/problem.hpp"

namespace leti {

struct RoleSpec {
    std::string name;
    std::vector<std::string> entity_types;

    bool operator==(const RoleSpec&) const = default;
};

struct EventOntology {
    std::string event_type;
    std::vector<RoleSpec> roles;

    /// Throws ValidationError on duplicate role names or an empty type list.
    void validate() const;
    const RoleSpec* find_role(std::string_view name) const;

    bool operator==(const EventOntology&) const = default;
};

struct PredictedArgument {
    std::string role;
    std::string span;
    std::string entity_type;

    bool operator==(const PredictedArgument&) const = default;
};

struct EventPrediction {
    std::vector<PredictedArgument> arguments;

    bool operator==(const EventPrediction&) const = default;
};

struct GoldArgument {
    std::string role;
    std::string span;

    bool operator==(const GoldArgument&) const = default;
};

struct GoldEvent {
    std::vector<GoldArgument> arguments;

    /// Throws ValidationError on an empty span.
    void validate() const;
};

/// Trims and collapses internal whitespace runs to one space.
std::string normalize_span(std::string_view span);

/// Error class names reported for each failed check.
inline constexpr std::string_view kEaeCheckErrors[5] = {
    "UnknownRoleError", "EntityTypeError", "SpuriousArgumentError", "RoleMismatchError", "MissingArgumentError"};

/// per_test holds one outcome per check that ran, so a failure at check k
/// leaves k entries with only the last one failing.
Feedback evaluate_event(const EventPrediction& pred, const EventOntology& ontology, const GoldEvent& gold);

/// The 1-based check that `feedback` reports, or 0 for a pass.
int failed_check(const Feedback& feedback);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EaeScores {
    Prf arg_i;
    Prf arg_c;
};

/// Micro-averaged over aligned instances. Throws ValidationError on a length
/// mismatch.
EaeScores score_eae(const std::vector<EventPrediction>& preds, const std::vector<GoldEvent>& golds);

/// Pulls `Role = [Type("span"), ...]` assignments (also keyword arguments)
/// out of generated code. Unparseable fragments are skipped.
EventPrediction extract_prediction(std::string_view code);

// JSONL formats.
//   ontology:   {"event_type": str, "roles": [{"name": str, "entity_types": [str]}]}
//   instance:   {"id": str, "event_type": str, "gold": [{"role": str, "span": str}]}
//   prediction: {"id": str, "arguments": [{"role", "span", "entity_type"}]} or {"id": str, "code": str}
struct EaeInstance {
    std::string id;
    std::string event_type;
    GoldEvent gold;
};

std::map<std::string, EventOntology> load_ontologies(const std::filesystem::path& path);
std::vector<EaeInstance> load_eae_instances(const std::filesystem::path& path);
std::map<std::string, EventPrediction> load_eae_predictions(const std::filesystem::path& path);

nlohmann::json to_json(const EaeScores& scores);

}  // namespace leti
