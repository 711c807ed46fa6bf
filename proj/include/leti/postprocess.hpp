// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Stop-sequence truncation that keeps only the first generated code block.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace leti {

struct Truncation {
    std::string text;
    bool applied = false;
};

/// Default stops: a new top-level statement or a control-token opener.
const std::vector<std::string>& default_stop_sequences();

/// Cuts `raw` at the earliest occurrence of any stop string. With
/// `skip_first_line`, the search starts after the first newline so a
/// completion that opens with a definition is kept.
Truncation truncate_at_stop(std::string_view raw, const std::vector<std::string>& stops,
                            bool skip_first_line = false);

}  // namespace leti
