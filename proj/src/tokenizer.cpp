// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0

#include "leti/tokenizer.hpp"

#include "leti/fcft.hpp"

namespace leti {

namespace {

bool is_word_byte(char c) {
    auto u = static_cast<unsigned char>(c);
    return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || (u >= '0' && u <= '9') || u == '_' || u >= 0x80;
}

bool is_blank_byte(char c) {
    return c == ' ' || c == '\t';
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '<') {
            bool matched = false;
            for (auto lit : vocab::kAll) {
                if (text.substr(i, lit.size()) == lit) {
                    tokens.emplace_back(lit);
                    i += lit.size();
                    matched = true;
                    break;
                }
            }
            if (matched) {
                continue;
            }
        }
        std::size_t j = i + 1;
        if (is_word_byte(text[i])) {
            while (j < text.size() && is_word_byte(text[j])) {
                ++j;
            }
        } else if (is_blank_byte(text[i])) {
            while (j < text.size() && is_blank_byte(text[j])) {
                ++j;
            }
        }
        tokens.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return tokens;
}

std::string detokenize(std::span<const std::string> tokens) {
    std::string out;
    for (const auto& t : tokens) {
        out += t;
    }
    return out;
}

}  // namespace leti
