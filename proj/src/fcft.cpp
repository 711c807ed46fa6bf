// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/fcft.hpp"

#include <map>
#include <tuple>

#include <nlohmann/json.hpp>

#include "leti/error.hpp"

namespace leti {

namespace vocab {

bool is_reward_token(std::string_view token) {
    return token == kGood || token == kBad;
}

std::string_view reward_token(int f_binary) {
    return f_binary == 1 ? kGood : kBad;
}

std::optional<std::string_view> find_literal(std::string_view text) {
    std::optional<std::string_view> first;
    std::size_t first_pos = std::string_view::npos;
    for (auto lit : kAll) {
        auto pos = text.find(lit);
        if (pos < first_pos) {
            first_pos = pos;
            first = lit;
        }
    }
    return first;
}

}  // namespace vocab

namespace {

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

void reject_literals(std::string_view what, std::string_view text) {
    if (auto lit = vocab::find_literal(text)) {
        throw ValidationError(std::string(what) + " contains reserved literal " + std::string(*lit));
    }
}

}  // namespace

std::string render_feedback(int f_binary, const std::optional<std::string>& f_text) {
    if (f_binary != 0 && f_binary != 1) {
        throw ValidationError("f_binary must be 0 or 1");
    }
    std::string out(vocab::reward_token(f_binary));
    if (f_text && !is_blank(*f_text)) {
        reject_literals("f_text", *f_text);
        out += vocab::kFeedbackOpen;
        out += *f_text;
        out += vocab::kFeedbackClose;
    }
    return out;
}

FcftRecord build_record(const Problem& problem, const CandidateSolution& solution, const Feedback& feedback,
                        int iteration, const std::optional<std::string>& prompt) {
    if (solution.problem_id != problem.id) {
        throw ValidationError("solution for '" + solution.problem_id + "' paired with problem '" + problem.id + "'");
    }
    const std::string& x = prompt ? *prompt : problem.instruction;
    reject_literals("prompt", x);
    reject_literals("solution text", solution.text);

    FcftRecord record;
    record.sequence = render_feedback(feedback.f_binary(), feedback.f_text());
    record.sequence += x;
    record.sequence += vocab::kSolution;
    record.sequence += solution.text;
    record.problem_id = problem.id;
    record.sample_index = solution.sample_index;
    record.f_binary = feedback.f_binary();
    record.iteration = iteration;
    return record;
}

ParsedSequence parse_record(std::string_view sequence) {
    ParsedSequence parsed;
    std::string_view rest = sequence;
    if (starts_with(rest, vocab::kGood)) {
        parsed.f_binary = 1;
        rest.remove_prefix(vocab::kGood.size());
    } else if (starts_with(rest, vocab::kBad)) {
        parsed.f_binary = 0;
        rest.remove_prefix(vocab::kBad.size());
    } else {
        throw ParseError("missing reward token prefix (expected <|good|> or <|bad|>)");
    }

    if (starts_with(rest, vocab::kFeedbackOpen)) {
        rest.remove_prefix(vocab::kFeedbackOpen.size());
        auto close = rest.find(vocab::kFeedbackClose);
        if (close == std::string_view::npos) {
            throw ParseError("unbalanced feedback block: <|text_feedback|> without <|/text_feedback|>");
        }
        std::string_view text = rest.substr(0, close);
        if (text.find(vocab::kFeedbackOpen) != std::string_view::npos) {
            throw ParseError("unbalanced feedback block: nested <|text_feedback|>");
        }
        parsed.f_text = std::string(text);
        rest.remove_prefix(close + vocab::kFeedbackClose.size());
    }

    auto sep = rest.find(vocab::kSolution);
    if (sep == std::string_view::npos) {
        throw ParseError("missing <|sol|> separator between instruction and solution");
    }
    std::string_view instruction = rest.substr(0, sep);
    std::string_view solution = rest.substr(sep + vocab::kSolution.size());
    if (instruction.find(vocab::kFeedbackOpen) != std::string_view::npos ||
        instruction.find(vocab::kFeedbackClose) != std::string_view::npos) {
        throw ParseError("unbalanced feedback block: feedback delimiter outside the leading block");
    }
    if (auto lit = vocab::find_literal(instruction)) {
        throw ParseError("reserved literal " + std::string(*lit) + " inside instruction");
    }
    if (auto lit = vocab::find_literal(solution)) {
        throw ParseError("reserved literal " + std::string(*lit) + " inside solution");
    }
    parsed.instruction = std::string(instruction);
    parsed.solution_text = std::string(solution);
    return parsed;
}

std::vector<FcftRecord> deduplicate(const std::vector<FcftRecord>& records) {
    std::vector<FcftRecord> out;
    std::map<std::tuple<std::string, std::string, int>, std::size_t> seen;
    for (const auto& r : records) {
        // The sequence ends with the solution text; the tail after <|sol|> identifies it.
        auto sep = r.sequence.find(vocab::kSolution);
        std::string solution = sep == std::string::npos ? r.sequence : r.sequence.substr(sep);
        auto key = std::make_tuple(r.problem_id, std::move(solution), r.f_binary);
        auto [it, inserted] = seen.emplace(std::move(key), out.size());
        if (inserted) {
            out.push_back(r);
        } else {
            out[it->second].count += r.count;
        }
    }
    return out;
}

// ------------------------------------------------------------------- mixing

BatchMixer::BatchMixer(std::span<const std::string> fcft, std::span<const std::string> pretrain,
                       std::size_t batch_size)
    : fcft_(fcft), pretrain_(pretrain), batch_size_(batch_size) {
    if (batch_size_ == 0) {
        throw ValidationError("batch_size must be at least 1");
    }
    if (!fcft_.empty() && pretrain_.empty()) {
        throw ValidationError("pretraining stream is empty; disable mixing instead");
    }
}

std::optional<Batch> BatchMixer::next() {
    if (want_pretrain_) {
        Batch batch{BatchKind::Pretrain, {}};
        batch.items.reserve(batch_size_);
        for (std::size_t i = 0; i < batch_size_; ++i) {
            batch.items.push_back(pretrain_[pretrain_pos_]);
            pretrain_pos_ = (pretrain_pos_ + 1) % pretrain_.size();
        }
        want_pretrain_ = false;
        return batch;
    }
    if (fcft_pos_ >= fcft_.size()) {
        return std::nullopt;
    }
    std::size_t end = std::min(fcft_.size(), fcft_pos_ + batch_size_);
    Batch batch{BatchKind::Fcft, {fcft_.begin() + static_cast<std::ptrdiff_t>(fcft_pos_),
                                  fcft_.begin() + static_cast<std::ptrdiff_t>(end)}};
    fcft_pos_ = end;
    want_pretrain_ = true;
    return batch;
}

MixedEpoch mix_batches(std::span<const std::string> fcft, std::span<const std::string> pretrain,
                       std::size_t batch_size) {
    MixedEpoch epoch;
    if (batch_size == 0) {
        throw ValidationError("batch_size must be at least 1");
    }
    if (fcft.empty()) {
        epoch.empty_fcft_warning = true;
        return epoch;
    }
    BatchMixer mixer(fcft, pretrain, batch_size);
    while (auto batch = mixer.next()) {
        epoch.batches.push_back(std::move(*batch));
    }
    return epoch;
}

// ---------------------------------------------------------------------- I/O

std::vector<std::string> parse_pretrain_corpus(std::string_view text) {
    std::vector<std::string> docs;
    std::string current;
    std::size_t start = 0;
    auto flush = [&] {
        while (!current.empty() && current.back() == '\n') {
            current.pop_back();
        }
        if (!current.empty()) {
            docs.push_back(std::move(current));
        }
        current.clear();
    };
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(start, end - start);
        if (is_blank(line)) {
            flush();
        } else {
            current += line;
            current += '\n';
        }
        start = end + 1;
    }
    flush();
    return docs;
}

std::vector<std::string> load_pretrain_corpus(const std::filesystem::path& path) {
    return parse_pretrain_corpus(read_file(path));
}

std::vector<FcftRecord> load_fcft_dataset(const std::filesystem::path& path) {
    std::vector<FcftRecord> records;
    std::size_t line = 0;
    for (const auto& row : read_jsonl(path)) {
        ++line;
        try {
            records.push_back(row.get<FcftRecord>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("malformed FCFT record: ") + e.what(), line);
        }
    }
    return records;
}

void write_fcft_dataset(const std::filesystem::path& path, const std::vector<FcftRecord>& records) {
    std::vector<nlohmann::json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) {
        rows.emplace_back(r);
    }
    write_jsonl(path, rows);
}

}  // namespace leti
