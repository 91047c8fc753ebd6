#pragma once

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "stepwise/error.hpp"
#include "stepwise/state.hpp"

namespace stepwise {

namespace detail {

// Rounds num/den (den > 0, num >= 0) to the nearest integer, ties to even.
inline std::uint64_t div_round_half_even(std::uint64_t num, std::uint64_t den) {
  const std::uint64_t q = num / den;
  const std::uint64_t r = num % den;
  if (2 * r > den || (2 * r == den && (q & 1))) return q + 1;
  return q;
}

} // namespace detail

// Adaptive beam size at expansion e of E:
//   B_min + (B_max - B_min) * max(1 - lambda * e / E, 0)
// rounded half-to-even and clamped to [B_min, B_max]. When lambda * e is a
// whole number the value is computed in exact integer arithmetic.
inline std::size_t beam_schedule_size(std::size_t e, std::size_t E, std::size_t b_max, std::size_t b_min,
                                      double lambda) {
  if (E == 0) throw Error("E must be positive");
  if (b_min > b_max) throw Error("B_min must not exceed B_max");
  if (lambda < 0.0) throw Error("lambda must be non-negative");
  const double decay = lambda * static_cast<double>(e);
  std::size_t size;
  if (decay == std::floor(decay) && decay < 9.0e15) {
    const auto d = static_cast<std::uint64_t>(decay);
    const std::uint64_t keep = d >= E ? 0 : E - d; // E * max(1 - lambda*e/E, 0)
    const std::uint64_t num = static_cast<std::uint64_t>(b_min) * E + (b_max - b_min) * keep;
    size = detail::div_round_half_even(num, E);
  } else {
    const double frac = std::max(1.0 - decay / static_cast<double>(E), 0.0);
    const double value = static_cast<double>(b_min) + static_cast<double>(b_max - b_min) * frac;
    const int old_mode = std::fegetround();
    std::fesetround(FE_TONEAREST);
    size = static_cast<std::size_t>(std::nearbyint(value));
    std::fesetround(old_mode);
  }
  return std::clamp(size, b_min, b_max);
}

struct FixedBeam {
  std::size_t size = 8;
};

struct AdaptiveBeam {
  std::size_t b_max = 16;
  std::size_t b_min = 4;
  double lambda = 15.0;
};

// Beam size policy for best-first search, optionally followed by a top-p
// filter over the returned beam.
struct BeamSchedule {
  std::variant<FixedBeam, AdaptiveBeam> base = FixedBeam{};
  std::optional<double> top_p;

  std::size_t size_at(std::size_t e, std::size_t E) const {
    if (const auto* f = std::get_if<FixedBeam>(&base)) return f->size;
    const auto& a = std::get<AdaptiveBeam>(base);
    return beam_schedule_size(e, E, a.b_max, a.b_min, a.lambda);
  }

  std::size_t max_size() const {
    if (const auto* f = std::get_if<FixedBeam>(&base)) return f->size;
    return std::get<AdaptiveBeam>(base).b_max;
  }

  void validate() const {
    if (const auto* f = std::get_if<FixedBeam>(&base)) {
      if (f->size < 1) throw Error("beam size must be >= 1");
    } else {
      const auto& a = std::get<AdaptiveBeam>(base);
      if (a.b_min < 1 || a.b_min > a.b_max) throw Error("need 1 <= B_min <= B_max");
      if (!(a.lambda >= 0.0)) throw Error("lambda must be >= 0");
    }
    if (top_p && !(*top_p > 0.0 && *top_p <= 1.0)) throw Error("top-p must be in (0, 1]");
  }

  std::string describe() const {
    std::string out;
    if (const auto* f = std::get_if<FixedBeam>(&base)) {
      out = "fixed " + std::to_string(f->size);
    } else {
      const auto& a = std::get<AdaptiveBeam>(base);
      char buf[96];
      std::snprintf(buf, sizeof buf, "adaptive %zu,%zu,%g", a.b_max, a.b_min, a.lambda);
      out = buf;
    }
    if (top_p) {
      char buf[48];
      std::snprintf(buf, sizeof buf, " top-p %g", *top_p);
      out += buf;
    }
    return out;
  }
};

// Parses "fixed N", "adaptive BMAX,BMIN,LAMBDA" and "top-p P", where top-p may
// follow either base ("adaptive 16,4,15 top-p 0.95"). A bare "top-p P"
// filters a fixed beam of `default_fixed`.
inline BeamSchedule parse_beam_spec(std::string_view text, std::size_t default_fixed = 8) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < text.size();) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t') ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  auto number = [&](const std::string& w) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(w, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != w.size() || w.empty()) throw Error("bad number '" + w + "' in beam spec");
    return v;
  };
  auto count = [&](const std::string& w) {
    const double v = number(w);
    if (v < 1 || v != std::floor(v)) throw Error("beam sizes must be positive integers, got '" + w + "'");
    return static_cast<std::size_t>(v);
  };
  BeamSchedule out;
  out.base = FixedBeam{default_fixed};
  bool have_base = false;
  for (std::size_t i = 0; i < words.size(); i += 2) {
    if (i + 1 >= words.size()) throw Error("beam spec '" + std::string(text) + "': '" + words[i] + "' needs a value");
    const std::string& kind = words[i];
    const std::string& arg = words[i + 1];
    if (kind == "fixed" || kind == "adaptive") {
      if (have_base) throw Error("beam spec has two base schedules");
      have_base = true;
      if (kind == "fixed") {
        out.base = FixedBeam{count(arg)};
      } else {
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (std::size_t c = arg.find(','); c != std::string::npos; c = arg.find(',', start)) {
          parts.push_back(arg.substr(start, c - start));
          start = c + 1;
        }
        parts.push_back(arg.substr(start));
        if (parts.size() != 3) throw Error("adaptive beam needs BMAX,BMIN,LAMBDA");
        out.base = AdaptiveBeam{count(parts[0]), count(parts[1]), number(parts[2])};
      }
    } else if (kind == "top-p") {
      if (out.top_p) throw Error("beam spec has two top-p filters");
      out.top_p = number(arg);
    } else {
      throw Error("unknown beam schedule '" + kind + "'");
    }
  }
  if (words.empty()) throw Error("empty beam spec");
  out.validate();
  return out;
}

// Cumulative-mass comparisons allow this much slack so that masses equal to p
// in exact arithmetic are not lost to rounding.
inline constexpr double kMassTolerance = 1e-9;

// Length of the shortest prefix of `weights` (already sorted descending)
// whose share of the total reaches p. At least 1 for non-empty input.
inline std::size_t nucleus_prefix_length(std::span<const double> weights, double p) {
  if (weights.empty()) return 0;
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return weights.size();
  double cum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (cum / total >= p - kMassTolerance) return i + 1;
  }
  return weights.size();
}

// Normalizes exp(logprob) over the beam and keeps the shortest prefix with
// mass >= p. Candidates must be sorted by logprob descending.
inline std::vector<ScoredCandidate> top_p_filter(std::vector<ScoredCandidate> candidates, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw Error("top-p must be in (0, 1]");
  if (candidates.empty()) return candidates;
  const double top = candidates.front().logprob;
  std::vector<double> weights;
  weights.reserve(candidates.size());
  for (const auto& c : candidates) weights.push_back(std::exp(c.logprob - top));
  candidates.resize(nucleus_prefix_length(weights, p));
  return candidates;
}

} // namespace stepwise
