#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "ddt/errors.hpp"

namespace ddt {

/// One distinct residue of a modular subset sum multiset.
struct item {
  std::uint64_t value = 0;
  std::uint64_t multiplicity = 1;
  friend bool operator==(const item&, const item&) = default;
};

/// Modular subset sum input in compact form: distinct values in [0, m),
/// sorted ascending, positive multiplicities.
struct instance {
  std::uint64_t m = 1;
  std::vector<item> items;

  std::uint64_t total_count() const {
    std::uint64_t n = 0;
    for (const auto& it : items) n += it.multiplicity;
    return n;
  }

  std::uint64_t multiplicity_of(std::uint64_t value) const {
    auto it = std::lower_bound(items.begin(), items.end(), value,
                               [](const item& a, std::uint64_t v) { return a.value < v; });
    return it != items.end() && it->value == value ? it->multiplicity : 0;
  }
};

inline std::uint64_t reduce_mod(std::int64_t v, std::uint64_t m) {
  const auto sm = static_cast<std::int64_t>(m);
  std::int64_t r = v % sm;
  if (r < 0) r += sm;
  return static_cast<std::uint64_t>(r);
}

/// Normalizes (value, count) pairs: values reduced mod m, repeated values
/// merged, zero counts dropped.
inline instance make_instance(std::uint64_t m,
                              const std::vector<std::pair<std::int64_t, std::uint64_t>>& pairs) {
  if (m < 1) throw invalid_input("modulus must be at least 1");
  std::map<std::uint64_t, std::uint64_t> merged;
  for (const auto& [v, c] : pairs) {
    if (c > 0) merged[reduce_mod(v, m)] += c;
  }
  instance inst{m, {}};
  for (const auto& [v, c] : merged) inst.items.push_back({v, c});
  return inst;
}

/// Values with counts certifying a reachable residue.
struct witness {
  std::vector<item> parts;  // sorted by value; count stored in multiplicity
  friend bool operator==(const witness&, const witness&) = default;
};

/// True iff every part respects the instance multiplicities and the
/// weighted sum is congruent to t mod m.
inline bool verify_witness(const instance& inst, std::uint64_t t, const witness& w) {
  if (t >= inst.m) return false;
  std::map<std::uint64_t, std::uint64_t> used;
  for (const auto& p : w.parts) {
    if (p.value >= inst.m) return false;
    used[p.value] += p.multiplicity;
  }
  unsigned __int128 sum = 0;
  for (const auto& [v, c] : used) {
    if (c > inst.multiplicity_of(v)) return false;
    sum += static_cast<unsigned __int128>(v) * c;
  }
  return static_cast<std::uint64_t>(sum % inst.m) == t;
}

enum class pred_kind : std::uint8_t { unset, origin, value };

/// Entry of the predecessor array: how a residue first became reachable.
struct predecessor {
  pred_kind kind = pred_kind::unset;
  std::uint64_t value = 0;
  friend bool operator==(const predecessor&, const predecessor&) = default;
};

}  // namespace ddt
