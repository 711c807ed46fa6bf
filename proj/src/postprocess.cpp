// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/postprocess.hpp"

namespace leti {

const std::vector<std::string>& default_stop_sequences() {
    static const std::vector<std::string> stops = {
        "\nclass", "\ndef", "\n#", "\nif", "\nprint", "\nassert", "\n\"\"\"", "\n<|",
    };
    return stops;
}

Truncation truncate_at_stop(std::string_view raw, const std::vector<std::string>& stops, bool skip_first_line) {
    std::size_t from = 0;
    if (skip_first_line) {
        auto nl = raw.find('\n');
        if (nl == std::string_view::npos) {
            return {std::string(raw), false};
        }
        from = nl + 1;
    }
    std::size_t cut = std::string_view::npos;
    for (const auto& stop : stops) {
        if (stop.empty()) {
            continue;
        }
        auto pos = raw.find(stop, from);
        if (pos < cut) {
            cut = pos;
        }
    }
    if (cut == std::string_view::npos) {
        return {std::string(raw), false};
    }
    return {std::string(raw.substr(0, cut)), true};
}

}  // namespace leti
