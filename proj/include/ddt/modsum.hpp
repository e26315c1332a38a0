#pragma once

// Modular subset sum on a persistent bit string.
//
// The reachable set is kept as a string of m bits where bit j is 1 iff j is
// a subset sum mod m. Adding one copy of value s replaces the string by its
// OR with its circular right shift by s. The OR is computed by repeatedly
// locating the first differing bit of the shifted string and the saved
// previous version (LCP) and fixing it in whichever version holds the 0. Each
// differing bit is found once, and over a whole run there are at most 2m of
// them, so all work is O(m log m) expected.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddt/errors.hpp"
#include "ddt/instance.hpp"
#include "ddt/tree.hpp"

namespace ddt::modsum {

struct solve_options {
  hash_seed seed{0x5EEDULL};
  unsigned fingerprint_bits = 64;
  /// Epoch failures tolerated before giving up.
  std::uint32_t max_restarts = 1000;
};

struct solve_stats {
  std::uint64_t rotations = 0;
  std::uint64_t merge_steps = 0;
  std::uint64_t bit_fixes = 0;
  std::uint64_t skipped_copies = 0;
  std::uint64_t restarts = 0;
  std::uint32_t max_height = 0;
  std::uint64_t nodes_built = 0;
  friend bool operator==(const solve_stats&, const solve_stats&) = default;
};

struct reachability_result {
  std::uint64_t m = 1;
  std::vector<bool> reachable;
  std::vector<predecessor> pred;
  solve_stats stats;
  hash_seed final_seed{};  // seed of the epoch that completed

  std::uint64_t reachable_count() const {
    return static_cast<std::uint64_t>(std::count(reachable.begin(), reachable.end(), true));
  }
};

struct merge_outcome {
  string_handle next;
  std::vector<std::uint64_t> newly_set;
  std::uint64_t bit_fixes = 0;
};

inline hash_seed next_seed(hash_seed s) {
  std::uint64_t z = s.value + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return hash_seed{z ^ (z >> 31)};
}

/// One copy of value s: returns the union of `d` and `d` rotated right by s.
/// Positions that move from unreachable to reachable get pred = s; entries
/// already set are never overwritten.
inline merge_outcome merge_step(collection& c, const string_handle& d, std::uint64_t s,
                                std::vector<predecessor>& pred) {
  DDT_CHECK(s > 0 && s < d.length(), "shift out of range");
  merge_outcome out;
  string_handle before = d;  // persistent snapshot, no copy
  string_handle shifted = c.rotate(d, s);
  while (!c.equal(shifted, before)) {
    const std::uint64_t k = c.lcp(shifted, before);
    if (c.get(shifted, k) == '0') {
      // Reachable before, not produced by the shift.
      shifted = c.set(shifted, k, '1');
    } else {
      DDT_CHECK(c.get(before, k) == '0', "first difference is not a difference");
      DDT_CHECK(pred[k].kind == pred_kind::unset, "predecessor overwritten");
      before = c.set(before, k, '1');
      pred[k] = {pred_kind::value, s};
      out.newly_set.push_back(k);
    }
    ++out.bit_fixes;
  }
  out.next = std::move(shifted);
  return out;
}

namespace detail {

inline reachability_result solve_epoch(const instance& inst, hash_seed seed, unsigned bits) {
  reachability_result res;
  res.m = inst.m;
  collection c(collection_options{.seed = seed, .fingerprint_bits = bits});
  std::string init(inst.m, '0');
  init[0] = '1';
  string_handle d = c.from_symbols(std::string_view(init));
  res.pred.assign(inst.m, predecessor{});
  res.pred[0] = {pred_kind::origin, 0};

  for (const auto& it : inst.items) {
    if (it.value % inst.m == 0) {
      res.stats.skipped_copies += it.multiplicity;
      continue;
    }
    std::uint64_t changed = 0;
    for (std::uint64_t copy = 0; copy < it.multiplicity; ++copy) {
      auto step = merge_step(c, d, it.value, res.pred);
      ++res.stats.rotations;
      ++res.stats.merge_steps;
      res.stats.bit_fixes += step.bit_fixes;
      d = std::move(step.next);
      // A copy that changes nothing proves the set closed under +value.
      if (step.newly_set.empty()) break;
      ++changed;
    }
    res.stats.skipped_copies += it.multiplicity - changed;
  }

  const auto bitsv = c.to_symbols(d);
  res.reachable.resize(inst.m);
  for (std::uint64_t j = 0; j < inst.m; ++j) res.reachable[j] = bitsv[j] == '1';
  res.stats.max_height = c.stats().max_height;
  res.stats.nodes_built = c.stats().nodes_built;
  res.final_seed = seed;
  return res;
}

}  // namespace detail

/// Reachable residues of every target at once, with predecessors for
/// witness reconstruction. Epoch failures restart the whole computation
/// under a fresh seed.
inline reachability_result solve_all(const instance& inst, const solve_options& opts = {}) {
  if (inst.m < 1) throw invalid_input("modulus must be at least 1");
  if (inst.m == 1) {
    reachability_result res;
    res.m = 1;
    res.reachable = {true};
    res.pred = {{pred_kind::origin, 0}};
    res.stats.skipped_copies = inst.total_count();
    res.final_seed = opts.seed;
    return res;
  }
  hash_seed seed = opts.seed;
  std::uint64_t restarts = 0;
  for (;;) {
    try {
      auto res = detail::solve_epoch(inst, seed, opts.fingerprint_bits);
      res.stats.restarts = restarts;
      return res;
    } catch (const collision_detected&) {
    } catch (const rebuild_required&) {
    }
    if (++restarts > opts.max_restarts) {
      throw error("modular subset sum: too many epoch restarts");
    }
    seed = next_seed(seed);
  }
}

/// Follows the predecessor chain from t back to 0. nullopt means no subset.
inline std::optional<witness> reconstruct(const reachability_result& res, const instance& inst,
                                          std::uint64_t t) {
  if (t >= res.m) throw invalid_input("target out of range");
  if (!res.reachable[t]) return std::nullopt;
  std::map<std::uint64_t, std::uint64_t> counts;
  std::uint64_t j = t;
  for (std::uint64_t steps = 0; j != 0; ++steps) {
    const predecessor p = res.pred[j];
    if (steps >= res.m || p.kind != pred_kind::value || p.value == 0 || p.value >= res.m) {
      throw internal_inconsistency("broken predecessor chain at " + std::to_string(j));
    }
    ++counts[p.value];
    j = (j + res.m - p.value) % res.m;
  }
  witness w;
  for (const auto& [v, c] : counts) {
    if (c > inst.multiplicity_of(v)) {
      throw internal_inconsistency("predecessor chain exceeds multiplicity of " +
                                   std::to_string(v));
    }
    w.parts.push_back({v, c});
  }
  return w;
}

struct decision {
  bool reachable = false;
  std::optional<witness> witness_set;
  reachability_result result;
};

inline decision decide(const instance& inst, std::uint64_t t, const solve_options& opts = {}) {
  if (t >= inst.m) throw invalid_input("target out of range");
  decision d;
  d.result = solve_all(inst, opts);
  d.witness_set = reconstruct(d.result, inst, t);
  d.reachable = d.witness_set.has_value();
  return d;
}

}  // namespace ddt::modsum
