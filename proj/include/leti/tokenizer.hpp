// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace leti {

/// Lossless word-level split: reserved literals (<|good|>, <|bad|>, the two
/// feedback delimiters, <|sol|>) are atomic; runs of [A-Za-z0-9_] and of
/// non-ASCII bytes form words; a newline is its own token; runs of spaces
/// and tabs form one token; any other byte is a single punctuation token.
/// detokenize(tokenize(s)) == s for every s.
std::vector<std::string> tokenize(std::string_view text);

std::string detokenize(std::span<const std::string> tokens);

}  // namespace leti
