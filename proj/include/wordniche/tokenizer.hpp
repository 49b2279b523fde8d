#ifndef WORDNICHE_TOKENIZER_HPP
#define WORDNICHE_TOKENIZER_HPP

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wordniche/common.hpp"

namespace wordniche {

struct TokenizerConfig {
  /// Drop lines whose first non-blank character is '>'.
  bool strip_quoted = true;
};

inline TokenizerConfig tokenizer_config_from_json(const nlohmann::json& j) {
  TokenizerConfig c;
  if (j.contains("strip_quoted")) c.strip_quoted = j.at("strip_quoted").get<bool>();
  return c;
}

namespace detail {

// ASCII folding for U+00C0..U+00FF (UTF-8 lead byte 0xC3). Empty = separator.
inline constexpr const char* kLatin1Fold[64] = {
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
    "d", "n", "o", "o", "o", "o", "o", "",  "o", "u", "u", "u", "u", "y", "th", "ss",
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
    "d", "n", "o", "o", "o", "o", "o", "",  "o", "u", "u", "u", "u", "y", "th", "y"};

inline bool is_alnum_lower(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); }

inline bool is_token_char(char c) { return is_alnum_lower(c) || c == '\'' || c == '-'; }

template <class Emit>
void flush_run(std::string& run, Emit&& emit) {
  std::size_t b = 0, e = run.size();
  while (b < e && (run[b] == '\'' || run[b] == '-')) ++b;
  while (e > b && (run[e - 1] == '\'' || run[e - 1] == '-')) --e;
  if (e > b) emit(std::string_view(run).substr(b, e - b));
  run.clear();
}

template <class Emit>
void tokenize_line(std::string_view line, std::string& run, Emit&& emit) {
  const auto n = line.size();
  for (std::size_t i = 0; i < n;) {
    auto c = static_cast<unsigned char>(line[i]);
    if (c < 0x80) {
      char lc = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
      if (is_token_char(lc)) {
        run.push_back(lc);
      } else {
        flush_run(run, emit);
      }
      ++i;
      continue;
    }
    if (c == 0xC3 && i + 1 < n) {
      auto c2 = static_cast<unsigned char>(line[i + 1]);
      if (c2 >= 0x80 && c2 <= 0xBF) {
        std::string_view folded = kLatin1Fold[c2 - 0x80];
        if (folded.empty()) {
          flush_run(run, emit);
        } else {
          run.append(folded);
        }
        i += 2;
        continue;
      }
    }
    // Right single quotation mark, the usual typographic apostrophe.
    if (c == 0xE2 && i + 2 < n && static_cast<unsigned char>(line[i + 1]) == 0x80 &&
        static_cast<unsigned char>(line[i + 2]) == 0x99) {
      run.push_back('\'');
      i += 3;
      continue;
    }
    flush_run(run, emit);
    // Skip the whole UTF-8 sequence.
    std::size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
    i += len;
  }
  flush_run(run, emit);
}

}  // namespace detail

/// Calls emit(std::string_view) for every token of body, in order.
///
/// Tokens are maximal runs of [a-z0-9'-] after lowercasing and Latin-1 ASCII
/// folding, with leading and trailing apostrophes and hyphens stripped. Runs
/// without a letter or digit vanish.
template <class Emit>
void for_each_token(std::string_view body, const TokenizerConfig& config, Emit&& emit) {
  std::string run;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto nl = body.find('\n', pos);
    if (nl == std::string_view::npos) nl = body.size();
    auto line = body.substr(pos, nl - pos);
    bool quoted = false;
    if (config.strip_quoted) {
      auto first = line.find_first_not_of(" \t\r\f\v");
      quoted = first != std::string_view::npos && line[first] == '>';
    }
    if (!quoted) detail::tokenize_line(line, run, emit);
    pos = nl + 1;
  }
}

inline std::vector<std::string> tokenize(std::string_view body, const TokenizerConfig& config = {}) {
  std::vector<std::string> out;
  for_each_token(body, config, [&](std::string_view t) { out.emplace_back(t); });
  return out;
}

}  // namespace wordniche

#endif
