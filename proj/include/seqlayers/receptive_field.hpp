// SPDX-License-Identifier: Apache-2.0
//
// Receptive-field algebra.
//
// For a layer with output ratio p/q, output step t_o is anchored at input step
// t_i = floor(t_o * q / p). Dependencies repeat with a period of P output steps
// (P a multiple of p). The per-step map stores, for each key k in [0, P), the
// inclusive input interval that output step k depends on, relative to input
// step 0 (the base of the first period). Output step t_o = k + m*P depends on
// that interval shifted by m*P*q/p. A key maps to nullopt when the output does
// not depend on any input.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "seqlayers/error.hpp"
#include "seqlayers/fraction.hpp"

namespace seqlayers {

// An interval endpoint: a finite step offset or a symbolic infinity.
class Bound {
 public:
  enum class Kind : std::uint8_t { kNegInf, kFinite, kPosInf };

  constexpr Bound() = default;
  constexpr Bound(std::int64_t v) : kind_(Kind::kFinite), value_(v) {}  // NOLINT
  static constexpr Bound neg_inf() { return Bound(Kind::kNegInf); }
  static constexpr Bound pos_inf() { return Bound(Kind::kPosInf); }

  constexpr Kind kind() const { return kind_; }
  constexpr bool is_finite() const { return kind_ == Kind::kFinite; }
  constexpr std::int64_t value() const { return value_; }

  friend constexpr Bound operator+(Bound b, std::int64_t shift) {
    return b.is_finite() ? Bound(b.value_ + shift) : b;
  }
  friend constexpr Bound operator-(Bound b, std::int64_t shift) { return b + (-shift); }
  friend constexpr bool operator==(Bound a, Bound b) {
    return a.kind_ == b.kind_ && (!a.is_finite() || a.value_ == b.value_);
  }
  friend constexpr bool operator<(Bound a, Bound b) {
    if (a.kind_ != b.kind_) return static_cast<int>(a.kind_) < static_cast<int>(b.kind_);
    return a.is_finite() && a.value_ < b.value_;
  }
  friend constexpr bool operator<=(Bound a, Bound b) { return !(b < a); }

  std::string str() const {
    switch (kind_) {
      case Kind::kNegInf: return "-inf";
      case Kind::kPosInf: return "inf";
      case Kind::kFinite: break;
    }
    return std::to_string(value_);
  }

 private:
  constexpr explicit Bound(Kind k) : kind_(k) {}
  Kind kind_ = Kind::kFinite;
  std::int64_t value_ = 0;
};

inline constexpr Bound min_bound(Bound a, Bound b) { return b < a ? b : a; }
inline constexpr Bound max_bound(Bound a, Bound b) { return a < b ? b : a; }

struct RFInterval {
  Bound start;
  Bound end;

  friend constexpr bool operator==(const RFInterval&, const RFInterval&) = default;
  RFInterval shifted(std::int64_t by) const { return {start + by, end + by}; }
  bool contains(std::int64_t step) const { return start <= Bound(step) && Bound(step) <= end; }
  bool finite() const { return start.is_finite() && end.is_finite(); }
  std::string str() const { return "(" + start.str() + ", " + end.str() + ")"; }
};

using StepReceptiveField = std::optional<RFInterval>;
using ReceptiveFieldMap = std::map<std::int64_t, StepReceptiveField>;

inline StepReceptiveField union_of(const StepReceptiveField& a, const StepReceptiveField& b) {
  if (!a) return b;
  if (!b) return a;
  return RFInterval{min_bound(a->start, b->start), max_bound(a->end, b->end)};
}

inline StepReceptiveField shifted(const StepReceptiveField& rf, std::int64_t by) {
  if (!rf) return rf;
  return rf->shifted(by);
}

inline std::string to_string(const StepReceptiveField& rf) { return rf ? rf->str() : "None"; }

// Formats like "{0: (-4, 2), 1: None}".
inline std::string to_string(const ReceptiveFieldMap& map) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [k, v] : map) {
    if (!first) os << ", ";
    first = false;
    os << k << ": " << to_string(v);
  }
  os << '}';
  return os.str();
}

inline std::int64_t period_of(const ReceptiveFieldMap& map) {
  return static_cast<std::int64_t>(map.size());
}

// Per-step interval for an arbitrary output step, relative to input step 0.
inline StepReceptiveField receptive_field_at(const ReceptiveFieldMap& map, Fraction ratio,
                                             std::int64_t output_step) {
  const std::int64_t period = period_of(map);
  const std::int64_t key = floor_mod(output_step, period);
  const std::int64_t base = (Fraction(output_step - key) / ratio).floor();
  return shifted(map.at(key), base);
}

// Overall receptive field: union of per-step intervals, each expressed
// relative to its own anchor floor(t_o / ratio).
inline StepReceptiveField overall_receptive_field(const ReceptiveFieldMap& map, Fraction ratio) {
  StepReceptiveField out;
  for (const auto& [k, v] : map) {
    const std::int64_t anchor = (Fraction(k) / ratio).floor();
    out = union_of(out, shifted(v, -anchor));
  }
  return out;
}

// Shrinks a per-step map to its minimal period (a multiple of the ratio's
// numerator that divides the current period).
inline ReceptiveFieldMap canonicalize(const ReceptiveFieldMap& map, Fraction ratio) {
  const std::int64_t period = period_of(map);
  for (std::int64_t p = ratio.num(); p < period; p += ratio.num()) {
    if (period % p != 0) continue;
    bool ok = true;
    for (std::int64_t k = p; ok && k < period; ++k) {
      const std::int64_t shift = (Fraction(k - k % p) / ratio).floor();
      ok = map.at(k) == shifted(map.at(k % p), shift);
    }
    if (ok) {
      ReceptiveFieldMap out;
      for (std::int64_t k = 0; k < p; ++k) out[k] = map.at(k);
      return out;
    }
  }
  return map;
}

// Re-expresses a map over a longer period (a multiple of its own).
inline ReceptiveFieldMap expand_period(const ReceptiveFieldMap& map, Fraction ratio,
                                       std::int64_t period) {
  ReceptiveFieldMap out;
  for (std::int64_t k = 0; k < period; ++k) out[k] = receptive_field_at(map, ratio, k);
  return out;
}

// Per-step union of maps that share one output ratio.
inline ReceptiveFieldMap union_maps(const std::vector<ReceptiveFieldMap>& maps, Fraction ratio) {
  std::int64_t period = ratio.num();
  for (const auto& m : maps) period = std::lcm(period, period_of(m));
  ReceptiveFieldMap out;
  for (std::int64_t k = 0; k < period; ++k) {
    StepReceptiveField acc;
    for (const auto& m : maps) acc = union_of(acc, receptive_field_at(m, ratio, k));
    out[k] = acc;
  }
  return canonicalize(out, ratio);
}

// Receptive field of `second` applied after `first`.
inline ReceptiveFieldMap compose_receptive_fields(const ReceptiveFieldMap& first,
                                                  Fraction first_ratio,
                                                  const ReceptiveFieldMap& second,
                                                  Fraction second_ratio) {
  const Fraction ratio = first_ratio * second_ratio;
  const std::int64_t p1 = period_of(first);
  const std::int64_t p2 = period_of(second);

  // Smallest multiple of p2 that advances the intermediate step by a whole
  // number of first-periods and is a multiple of the composite numerator.
  std::int64_t period = p2;
  for (;;) {
    const Fraction mid = Fraction(period) / second_ratio;
    if (mid.is_integer() && mid.num() % p1 == 0 && period % ratio.num() == 0) break;
    period += p2;
  }

  // Contribution of intermediate step u, relative to input step 0.
  auto first_at = [&](std::int64_t u) { return receptive_field_at(first, first_ratio, u); };

  ReceptiveFieldMap out;
  for (std::int64_t k = 0; k < period; ++k) {
    const StepReceptiveField mid = receptive_field_at(second, second_ratio, k);
    if (!mid) {
      out[k] = std::nullopt;
      continue;
    }
    const Bound lo = mid->start, hi = mid->end;
    StepReceptiveField acc;
    if (lo.is_finite() && hi.is_finite() && hi.value() - lo.value() + 1 <= 2 * p1) {
      for (std::int64_t u = lo.value(); u <= hi.value(); ++u) acc = union_of(acc, first_at(u));
    } else {
      // Dependence of `first` is periodic in u and monotone across periods, so
      // the extreme endpoints come from the outermost period on each side.
      bool any = false;
      for (std::int64_t u = 0; u < p1; ++u) any = any || first_at(u).has_value();
      if (any) {
        Bound start = Bound::neg_inf(), end = Bound::pos_inf();
        if (lo.is_finite()) {
          StepReceptiveField s;
          for (std::int64_t u = lo.value(); u < lo.value() + p1; ++u) s = union_of(s, first_at(u));
          start = s ? s->start : Bound::neg_inf();
          if (!s) {
            // The whole first period is a hole; scan forward to the next hit.
            for (std::int64_t u = lo.value() + p1; !s; ++u) s = first_at(u);
            start = s->start;
          }
        }
        if (hi.is_finite()) {
          StepReceptiveField e;
          for (std::int64_t u = hi.value(); u > hi.value() - p1; --u) e = union_of(e, first_at(u));
          if (!e)
            for (std::int64_t u = hi.value() - p1; !e; --u) e = first_at(u);
          end = e->end;
        }
        // Intervals of `first` may themselves be unbounded.
        for (std::int64_t u = 0; u < p1; ++u) {
          if (auto f = first_at(u)) {
            if (!f->start.is_finite()) start = f->start;
            if (!f->end.is_finite()) end = f->end;
          }
        }
        acc = RFInterval{start, end};
      }
    }
    out[k] = acc;
  }
  return canonicalize(out, ratio);
}

inline ReceptiveFieldMap single_step_map(Bound start, Bound end) {
  return {{0, RFInterval{start, end}}};
}

// Parses the format written by to_string(ReceptiveFieldMap), for example
// "{0: (-4, 2), 1: None}" or "{0: (-inf, 0)}".
inline ReceptiveFieldMap parse_receptive_field_map(std::string_view text) {
  std::size_t i = 0;
  auto fail = [&](const std::string& what) -> Error {
    return Error("receptive field map: " + what + " at offset " + std::to_string(i) + " in '" + std::string(text) + "'");
  };
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  auto expect = [&](char c) {
    skip();
    if (i >= text.size() || text[i] != c) throw fail(std::string("expected '") + c + "'");
    ++i;
  };
  auto word = [&] {
    skip();
    const std::size_t start = i;
    while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '-' || text[i] == '+'))
      ++i;
    return std::string(text.substr(start, i - start));
  };
  auto integer = [&](const std::string& w) -> std::int64_t {
    try {
      std::size_t used = 0;
      const std::int64_t v = std::stoll(w, &used);
      if (used == w.size()) return v;
    } catch (const std::exception&) {
    }
    throw fail("bad integer '" + w + "'");
  };
  auto bound = [&] {
    const std::string w = word();
    if (w == "-inf") return Bound::neg_inf();
    if (w == "inf" || w == "+inf") return Bound::pos_inf();
    return Bound(integer(w));
  };

  ReceptiveFieldMap out;
  expect('{');
  skip();
  if (i < text.size() && text[i] == '}') throw fail("empty map");
  for (;;) {
    const std::int64_t key = integer(word());
    expect(':');
    skip();
    if (i < text.size() && text[i] == '(') {
      ++i;
      const Bound a = bound();
      expect(',');
      const Bound b = bound();
      expect(')');
      if (b < a) throw fail("interval end before start");
      out[key] = RFInterval{a, b};
    } else if (word() == "None") {
      out[key] = std::nullopt;
    } else {
      throw fail("expected an interval or None");
    }
    skip();
    if (i < text.size() && text[i] == ',') {
      ++i;
      continue;
    }
    expect('}');
    break;
  }
  skip();
  if (i != text.size()) throw fail("trailing text");
  const auto n = static_cast<std::int64_t>(out.size());
  if (out.begin()->first != 0 || out.rbegin()->first != n - 1) throw fail("keys must be 0..n-1");
  return out;
}

}  // namespace seqlayers
