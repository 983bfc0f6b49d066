#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace aloha::detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Case-insensitive search for `needle` in `hay` bounded by non-word
// characters (or the string ends) on both sides.
inline bool contains_word(std::string_view hay, std::string_view needle) {
  if (needle.empty()) return false;
  const std::string h = lower(hay);
  const std::string n = lower(needle);
  std::size_t pos = 0;
  while ((pos = h.find(n, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(h[pos - 1]) || !is_word_char(n.front());
    const std::size_t end = pos + n.size();
    const bool right_ok = end == h.size() || !is_word_char(h[end]) || !is_word_char(n.back());
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

}  // namespace aloha::detail
