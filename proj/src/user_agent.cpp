#include "takeover/user_agent.hpp"

#include <cctype>
#include <vector>

namespace takeover {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_closer(char c) { return c == ';' || c == ')' || c == ','; }

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t b = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > b) words.push_back(s.substr(b, i - b));
  }
  return words;
}

// Removes every "/<version>" whose version runs to the end of the word or to
// a closing delimiter.
std::string strip_slash_versions(std::string_view word) {
  std::string out;
  std::size_t i = 0;
  while (i < word.size()) {
    if (word[i] == '/') {
      std::size_t j = i + 1;
      while (j < word.size() && !is_closer(word[j]) && word[j] != '/') ++j;
      if (is_version_token(word.substr(i + 1, j - i - 1))) {
        i = j;
        continue;
      }
    }
    out.push_back(word[i]);
    ++i;
  }
  return out;
}

std::string strip_browser(std::string_view s) {
  std::string joined;
  for (const auto word : split_words(s)) {
    std::string w = strip_slash_versions(word);
    std::size_t lead = 0;
    while (lead < w.size() && w[lead] == '(') ++lead;
    std::size_t tail = w.size();
    while (tail > lead && is_closer(w[tail - 1])) --tail;
    if (tail > lead && is_version_token(std::string_view(w).substr(lead, tail - lead))) {
      w.erase(lead, tail - lead);
    }
    if (w.empty()) continue;
    if (!joined.empty()) joined.push_back(' ');
    joined += w;
  }
  // Re-attach punctuation orphaned by removed tokens.
  std::string out;
  out.reserve(joined.size());
  for (std::size_t i = 0; i < joined.size(); ++i) {
    const char c = joined[i];
    if (c == ' ' && ((i + 1 < joined.size() && is_closer(joined[i + 1])) ||
                     (!out.empty() && out.back() == '('))) {
      continue;
    }
    out.push_back(c);
  }
  return out;
}

std::string normalize_step(std::string_view s) {
  bool has_space = false;
  for (char c : s) has_space = has_space || is_space(c);
  if (!has_space) {
    const auto slash = s.find('/');
    if (slash == 0 || slash == std::string_view::npos) return std::string(s);
    return std::string(s.substr(0, slash));
  }
  return strip_browser(s);
}

}  // namespace

bool is_version_token(std::string_view t) {
  std::size_t i = 0;
  if (i >= t.size() || !is_digit(t[i])) return false;
  while (i < t.size() && is_digit(t[i])) ++i;
  while (i < t.size()) {
    if (t[i] != '.' && t[i] != '_') return false;
    ++i;
    const std::size_t b = i;
    while (i < t.size() && is_alnum(t[i])) ++i;
    if (i == b) return false;
  }
  return true;
}

NormalizedUA normalize_ua(std::string_view raw) {
  std::string current;
  for (const auto word : split_words(raw)) {
    if (!current.empty()) current.push_back(' ');
    current += word;
  }
  if (current.empty()) throw EmptyUserAgent();
  // Each step only deletes characters, so this reaches a fixed point. A step
  // that would erase everything leaves the previous value in place.
  while (true) {
    std::string next = normalize_step(current);
    if (next.empty() || next == current) break;
    current = std::move(next);
  }
  return NormalizedUA(std::move(current));
}

}  // namespace takeover
