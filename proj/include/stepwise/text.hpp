#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace stepwise {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f';
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (is_space(s.front()) || s.front() == '\n')) s.remove_prefix(1);
  while (!s.empty() && (is_space(s.back()) || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

// Collapses every run of horizontal whitespace inside a line to one space and
// strips each line at both ends. Line breaks are kept; blank lines at the
// start and end of the text are dropped.
inline std::string normalize_goal(std::string_view text) {
  std::vector<std::string> lines;
  std::string cur;
  bool pending_space = false;
  auto flush_line = [&] {
    lines.push_back(std::move(cur));
    cur.clear();
    pending_space = false;
  };
  for (char c : text) {
    if (c == '\n') {
      flush_line();
    } else if (is_space(c)) {
      pending_space = !cur.empty();
    } else {
      if (pending_space) cur.push_back(' ');
      pending_space = false;
      cur.push_back(c);
    }
  }
  flush_line();
  std::size_t first = 0;
  std::size_t last = lines.size();
  while (first < last && lines[first].empty()) ++first;
  while (last > first && lines[last - 1].empty()) --last;
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i != first) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

// Proof steps are single-line commands; newlines count as whitespace.
inline std::string normalize_step_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c) || c == '\n') {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::string_view s) {
  return mix_seed(a, fnv1a64(s));
}

inline std::uint64_t splitmix_hash(std::string_view bytes) {
  std::uint64_t h = bytes.size();
  for (unsigned char c : bytes) h = splitmix64(h ^ c);
  return h;
}

// Digest of a normalized goal: an FNV-1a lane and a splitmix lane, 128 bits.
struct StateKey {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(32, '0');
    for (int i = 0; i < 16; ++i) {
      out[15 - i] = digits[(hi >> (4 * i)) & 0xf];
      out[31 - i] = digits[(lo >> (4 * i)) & 0xf];
    }
    return out;
  }

  friend auto operator<=>(const StateKey&, const StateKey&) = default;
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const noexcept {
    return static_cast<std::size_t>(k.lo ^ splitmix64(k.hi));
  }
};

inline StateKey canonical_state_key(std::string_view goal_text) {
  const std::string norm = normalize_goal(goal_text);
  return StateKey{splitmix_hash(norm), fnv1a64(norm)};
}

} // namespace stepwise
