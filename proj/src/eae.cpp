// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/eae.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "leti/error.hpp"

namespace leti {

using nlohmann::json;

namespace {

std::string join_types(const std::vector<std::string>& types) {
    std::string out;
    for (std::size_t i = 0; i < types.size(); ++i) {
        if (i > 0) out += i + 1 == types.size() ? " or " : ", ";
        out += types[i];
    }
    return out;
}

std::string role_names(const EventOntology& ontology) {
    std::string out;
    for (const auto& r : ontology.roles) {
        if (!out.empty()) out += ", ";
        out += r.name;
    }
    return out;
}

Feedback fail(int check, std::string text) {
    std::vector<TestOutcome> per_test;
    for (int i = 0; i < check; ++i) {
        per_test.push_back({static_cast<std::size_t>(i), i + 1 == check ? TestStatus::Fail : TestStatus::Pass});
    }
    return Feedback(0, "Check " + std::to_string(check) + " failed: " + text,
                    ErrorClass::other(std::string(kEaeCheckErrors[check - 1])), std::move(per_test));
}

Prf make_prf(double correct_pred, double preds, double recovered, double golds) {
    Prf p;
    p.precision = preds > 0 ? correct_pred / preds : 0.0;
    p.recall = golds > 0 ? recovered / golds : 0.0;
    p.f1 = p.precision + p.recall > 0 ? 2 * p.precision * p.recall / (p.precision + p.recall) : 0.0;
    return p;
}

std::string unescape(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            ++i;
            switch (s[i]) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default: out += s[i];
            }
        } else {
            out += s[i];
        }
    }
    return out;
}

}  // namespace

void EventOntology::validate() const {
    std::set<std::string> seen;
    for (const auto& r : roles) {
        if (!seen.insert(r.name).second) {
            throw ValidationError("ontology for '" + event_type + "' repeats role '" + r.name + "'");
        }
        if (r.entity_types.empty()) {
            throw ValidationError("role '" + r.name + "' of '" + event_type + "' allows no entity types");
        }
    }
}

const RoleSpec* EventOntology::find_role(std::string_view name) const {
    for (const auto& r : roles) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

void GoldEvent::validate() const {
    for (const auto& a : arguments) {
        if (normalize_span(a.span).empty()) {
            throw ValidationError("gold argument for role '" + a.role + "' has an empty span");
        }
    }
}

std::string normalize_span(std::string_view span) {
    std::string out;
    bool pending_space = false;
    for (char c : span) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += c;
        }
    }
    return out;
}

Feedback evaluate_event(const EventPrediction& pred, const EventOntology& ontology, const GoldEvent& gold) {
    for (const auto& a : pred.arguments) {
        if (!ontology.find_role(a.role)) {
            return fail(1, "role '" + a.role + "' (span \"" + a.span + "\") is not defined for event type '" +
                               ontology.event_type + "'; expected one of: " + role_names(ontology) + ".");
        }
    }
    for (const auto& a : pred.arguments) {
        const auto& allowed = ontology.find_role(a.role)->entity_types;
        if (std::find(allowed.begin(), allowed.end(), a.entity_type) == allowed.end()) {
            return fail(2, "role '" + a.role + "' expects an entity of type " + join_types(allowed) + ", but span \"" +
                               a.span + "\" has type '" + a.entity_type + "'.");
        }
    }

    std::multimap<std::string, std::string> gold_roles;  // span -> role
    std::set<std::pair<std::string, std::string>> gold_pairs;
    for (const auto& g : gold.arguments) {
        auto span = normalize_span(g.span);
        gold_roles.emplace(span, g.role);
        gold_pairs.emplace(g.role, std::move(span));
    }
    for (const auto& a : pred.arguments) {
        if (!gold_roles.count(normalize_span(a.span))) {
            return fail(3, "span \"" + a.span + "\" predicted for role '" + a.role +
                               "' does not match any ground-truth argument.");
        }
    }
    std::set<std::pair<std::string, std::string>> predicted;
    for (const auto& a : pred.arguments) {
        auto span = normalize_span(a.span);
        if (!gold_pairs.count({a.role, span})) {
            const auto& expected = gold_roles.find(span)->second;
            return fail(4, "span \"" + a.span + "\" is assigned role '" + a.role + "', but it fills role '" +
                               expected + "'.");
        }
        predicted.emplace(a.role, std::move(span));
    }
    for (const auto& g : gold.arguments) {
        if (!predicted.count({g.role, normalize_span(g.span)})) {
            return fail(5, "role '" + g.role + "' is missing the argument \"" + g.span + "\".");
        }
    }
    std::vector<TestOutcome> all(5);
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i] = {i, TestStatus::Pass};
    }
    return Feedback::passing(std::move(all));
}

int failed_check(const Feedback& feedback) {
    if (feedback.f_binary() == 1) return 0;
    const auto name = feedback.error_class().name();
    for (int i = 0; i < 5; ++i) {
        if (name == kEaeCheckErrors[i]) return i + 1;
    }
    return -1;
}

EaeScores score_eae(const std::vector<EventPrediction>& preds, const std::vector<GoldEvent>& golds) {
    if (preds.size() != golds.size()) {
        throw ValidationError("score_eae: " + std::to_string(preds.size()) + " predictions for " +
                              std::to_string(golds.size()) + " gold instances");
    }
    double n_pred = 0, n_gold = 0;
    double i_correct = 0, i_recovered = 0, c_correct = 0, c_recovered = 0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        std::set<std::string> gold_spans, pred_spans;
        std::set<std::pair<std::string, std::string>> gold_pairs, pred_pairs;
        for (const auto& g : golds[k].arguments) {
            auto span = normalize_span(g.span);
            gold_spans.insert(span);
            gold_pairs.emplace(g.role, span);
        }
        for (const auto& a : preds[k].arguments) {
            auto span = normalize_span(a.span);
            pred_spans.insert(span);
            pred_pairs.emplace(a.role, span);
            i_correct += gold_spans.count(span) ? 1 : 0;
            c_correct += gold_pairs.count({a.role, span}) ? 1 : 0;
        }
        for (const auto& g : golds[k].arguments) {
            auto span = normalize_span(g.span);
            i_recovered += pred_spans.count(span) ? 1 : 0;
            c_recovered += pred_pairs.count({g.role, span}) ? 1 : 0;
        }
        n_pred += static_cast<double>(preds[k].arguments.size());
        n_gold += static_cast<double>(golds[k].arguments.size());
    }
    return {make_prf(i_correct, n_pred, i_recovered, n_gold), make_prf(c_correct, n_pred, c_recovered, n_gold)};
}

EventPrediction extract_prediction(std::string_view code) {
    static const std::regex assignment(R"(([A-Za-z_]\w*)\s*=\s*\[([^\]]*)\])");
    static const std::regex entity(R"re(([A-Za-z_][\w.]*)\s*\(\s*(?:"((?:[^"\\]|\\.)*)"|'((?:[^'\\]|\\.)*)')\s*\))re");
    EventPrediction pred;
    const std::string text(code);
    for (std::sregex_iterator it(text.begin(), text.end(), assignment), end; it != end; ++it) {
        const std::string role = (*it)[1];
        const std::string body = (*it)[2];
        for (std::sregex_iterator e(body.begin(), body.end(), entity); e != end; ++e) {
            std::string type = (*e)[1];
            if (auto dot = type.rfind('.'); dot != std::string::npos) type = type.substr(dot + 1);
            const std::string span = (*e)[2].matched ? (*e)[2].str() : (*e)[3].str();
            pred.arguments.push_back({role, unescape(span), std::move(type)});
        }
    }
    return pred;
}

// ---------------------------------------------------------------------- I/O

std::map<std::string, EventOntology> load_ontologies(const std::filesystem::path& path) {
    std::map<std::string, EventOntology> out;
    std::size_t line = 0;
    for (const auto& row : read_jsonl(path)) {
        ++line;
        EventOntology o;
        try {
            o.event_type = row.at("event_type").get<std::string>();
            for (const auto& r : row.at("roles")) {
                o.roles.push_back({r.at("name").get<std::string>(), r.at("entity_types").get<std::vector<std::string>>()});
            }
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed ontology: ") + e.what(), line);
        }
        o.validate();
        auto name = o.event_type;
        if (!out.emplace(std::move(name), std::move(o)).second) {
            throw ValidationError("duplicate ontology for event type '" + row.at("event_type").get<std::string>() + "'");
        }
    }
    return out;
}

std::vector<EaeInstance> load_eae_instances(const std::filesystem::path& path) {
    std::vector<EaeInstance> out;
    std::size_t line = 0;
    for (const auto& row : read_jsonl(path)) {
        ++line;
        EaeInstance inst;
        try {
            inst.id = row.at("id").get<std::string>();
            inst.event_type = row.at("event_type").get<std::string>();
            for (const auto& g : row.at("gold")) {
                inst.gold.arguments.push_back({g.at("role").get<std::string>(), g.at("span").get<std::string>()});
            }
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed EAE instance: ") + e.what(), line);
        }
        inst.gold.validate();
        out.push_back(std::move(inst));
    }
    return out;
}

std::map<std::string, EventPrediction> load_eae_predictions(const std::filesystem::path& path) {
    std::map<std::string, EventPrediction> out;
    std::size_t line = 0;
    for (const auto& row : read_jsonl(path)) {
        ++line;
        EventPrediction pred;
        std::string id;
        try {
            id = row.at("id").get<std::string>();
            if (row.contains("code")) {
                pred = extract_prediction(row.at("code").get<std::string>());
            } else {
                for (const auto& a : row.at("arguments")) {
                    pred.arguments.push_back({a.at("role").get<std::string>(), a.at("span").get<std::string>(),
                                              a.at("entity_type").get<std::string>()});
                }
            }
        } catch (const json::exception& e) {
            throw ParseError(std::string("malformed EAE prediction: ") + e.what(), line);
        }
        out[id] = std::move(pred);
    }
    return out;
}

json to_json(const EaeScores& scores) {
    auto prf = [](const Prf& p) { return json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; };
    return json{{"arg_i", prf(scores.arg_i)}, {"arg_c", prf(scores.arg_c)}};
}

}  // namespace leti
