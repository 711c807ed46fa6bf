// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Feedback-conditioned training sequences:
//
//   sequence = reward ⊕ [<|text_feedback|> ⊕ f_text ⊕ <|/text_feedback|>] ⊕ x ⊕ <|sol|> ⊕ y
//
// where reward is <|good|> or <|bad|>, x is the prompt the solution was
// sampled from and y the solution text. The feedback block is present only
// when textual feedback exists.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leti/problem.hpp"

namespace leti {

namespace vocab {
inline constexpr std::string_view kGood = "<|good|>";
inline constexpr std::string_view kBad = "<|bad|>";
inline constexpr std::string_view kFeedbackOpen = "<|text_feedback|>";
inline constexpr std::string_view kFeedbackClose = "<|/text_feedback|>";
/// Boundary between prompt and solution.
inline constexpr std::string_view kSolution = "<|sol|>";

/// The four feedback literals plus the solution boundary.
inline constexpr std::string_view kAll[] = {kGood, kBad, kFeedbackOpen, kFeedbackClose, kSolution};

bool is_reward_token(std::string_view token);
std::string_view reward_token(int f_binary);
/// First vocabulary literal found in `text`, if any.
std::optional<std::string_view> find_literal(std::string_view text);
}  // namespace vocab

/// F = reward [⊕ open ⊕ f_text ⊕ close]. Blank f_text counts as absent.
/// Throws ValidationError when f_text contains a vocabulary literal.
std::string render_feedback(int f_binary, const std::optional<std::string>& f_text);

/// Builds the record for a sampled solution. `prompt` defaults to the
/// problem instruction. Throws ValidationError when the prompt or solution
/// text contains a vocabulary literal (the sequence would not parse back).
FcftRecord build_record(const Problem& problem, const CandidateSolution& solution, const Feedback& feedback,
                        int iteration, const std::optional<std::string>& prompt = std::nullopt);

struct ParsedSequence {
    int f_binary = 0;
    std::optional<std::string> f_text;
    std::string instruction;
    std::string solution_text;

    bool operator==(const ParsedSequence&) const = default;
};

/// Inverse of build_record. Throws ParseError naming the violated rule:
/// missing reward token, unbalanced feedback block, missing separator.
ParsedSequence parse_record(std::string_view sequence);

/// Collapses records sharing (problem_id, solution text, f_binary), keeping
/// the first occurrence and accumulating `count`.
std::vector<FcftRecord> deduplicate(const std::vector<FcftRecord>& records);

enum class BatchKind { Fcft, Pretrain };

struct Batch {
    BatchKind kind = BatchKind::Fcft;
    std::vector<std::string> items;

    bool operator==(const Batch&) const = default;
};

struct MixedEpoch {
    std::vector<Batch> batches;
    bool empty_fcft_warning = false;
};

/// One epoch of strictly alternating F,P,F,P,... batches. The epoch ends
/// when the FCFT stream is exhausted; the pretraining stream is consumed
/// record by record and wraps around when shorter.
class BatchMixer {
public:
    BatchMixer(std::span<const std::string> fcft, std::span<const std::string> pretrain, std::size_t batch_size);

    /// Next batch, or nullopt at end of epoch.
    std::optional<Batch> next();
    bool empty_fcft() const { return fcft_.empty(); }

private:
    std::span<const std::string> fcft_;
    std::span<const std::string> pretrain_;
    std::size_t batch_size_;
    std::size_t fcft_pos_ = 0;
    std::size_t pretrain_pos_ = 0;
    bool want_pretrain_ = false;
};

MixedEpoch mix_batches(std::span<const std::string> fcft, std::span<const std::string> pretrain,
                       std::size_t batch_size);

/// Plain-text pretraining corpus: documents separated by blank lines.
std::vector<std::string> parse_pretrain_corpus(std::string_view text);
std::vector<std::string> load_pretrain_corpus(const std::filesystem::path& path);

std::vector<FcftRecord> load_fcft_dataset(const std::filesystem::path& path);
void write_fcft_dataset(const std::filesystem::path& path, const std::vector<FcftRecord>& records);

}  // namespace leti
