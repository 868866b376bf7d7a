#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ponderlab/errors.hpp"

namespace ponderlab {

using Token = int;
using TokenSeq = std::vector<Token>;

// Toy vocabulary shared by the task generator and the backbone.
namespace tok {
constexpr Token digit0 = 0; // 0..9 occupy ids 0..9
constexpr Token plus = 10;
constexpr Token minus = 11;
constexpr Token times = 12;
constexpr Token pad = 13;
constexpr Token mark_think = 14;  // "work it through" mode marker
constexpr Token mark_direct = 15; // "answer immediately" mode marker
constexpr Token stage_setup = 16;
constexpr Token stage_compute = 17;
constexpr Token stage_verify = 18;
constexpr Token stage_conclude = 19;
constexpr Token eos = 20;
constexpr int vocab_size = 21;

inline bool is_digit(Token t) { return t >= 0 && t <= 9; }
inline bool is_stage_marker(Token t) { return t >= stage_setup && t <= stage_conclude; }
inline bool in_vocab(Token t) { return t >= 0 && t < vocab_size; }
} // namespace tok

enum class Mode { none, think, direct };

// Tokens the decoder may emit: digits, sign, eos, and the four stage markers.
namespace answer_alphabet {
constexpr int size = 16;

// Maps alphabet index -> vocab token id.
constexpr std::array<Token, size> to_vocab = {
    0, 1, 2, 3, 4, 5, 6, 7, 8, 9,
    tok::minus, tok::eos,
    tok::stage_setup, tok::stage_compute, tok::stage_verify, tok::stage_conclude};

inline int index_of(Token t) {
    for (int i = 0; i < size; ++i) {
        if (to_vocab[static_cast<std::size_t>(i)] == t) return i;
    }
    throw DomainError("answer_alphabet: token " + std::to_string(t) + " not in alphabet");
}
} // namespace answer_alphabet

// Renders an integer as digit tokens, e.g. -42 -> [minus, 4, 2].
inline TokenSeq render_integer(long long v) {
    TokenSeq out;
    if (v < 0) {
        out.push_back(tok::minus);
        v = -v;
    }
    std::string s = std::to_string(v);
    for (char c : s) out.push_back(static_cast<Token>(c - '0'));
    return out;
}

inline std::string token_name(Token t) {
    if (tok::is_digit(t)) return std::string(1, static_cast<char>('0' + t));
    switch (t) {
        case tok::plus: return "+";
        case tok::minus: return "-";
        case tok::times: return "*";
        case tok::pad: return "_";
        case tok::mark_think: return "<think>";
        case tok::mark_direct: return "<direct>";
        case tok::stage_setup: return "<setup>";
        case tok::stage_compute: return "<compute>";
        case tok::stage_verify: return "<verify>";
        case tok::stage_conclude: return "<conclude>";
        case tok::eos: return "<eos>";
        default: return "<?" + std::to_string(t) + ">";
    }
}

} // namespace ponderlab
