#pragma once

// Brute-force reference implementations. Deliberately slow and independent
// of the tree and the solvers; tests run them in lockstep with the real code.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ddt/errors.hpp"
#include "ddt/instance.hpp"

namespace ddt::oracle {

/// Plain-array model of a stored string with the same error behavior as the
/// tree operations.
template <class Symbol = char>
class basic_naive_string {
 public:
  basic_naive_string() = default;
  explicit basic_naive_string(std::vector<Symbol> s) : s_(std::move(s)) {}
  explicit basic_naive_string(std::basic_string_view<Symbol> s) : s_(s.begin(), s.end()) {}

  std::uint64_t length() const { return s_.size(); }
  const std::vector<Symbol>& symbols() const { return s_; }

  Symbol get(std::uint64_t i) const {
    if (i >= s_.size()) throw index_out_of_range(i, s_.size());
    return s_[i];
  }

  basic_naive_string set(std::uint64_t i, Symbol x) const {
    if (i >= s_.size()) throw index_out_of_range(i, s_.size());
    auto t = s_;
    t[i] = x;
    return basic_naive_string(std::move(t));
  }

  std::pair<basic_naive_string, basic_naive_string> split(std::uint64_t i) const {
    if (i > s_.size()) throw index_out_of_range(i, s_.size());
    if (i == 0 || i == s_.size()) throw split_at_boundary(i);
    return {basic_naive_string(std::vector<Symbol>(s_.begin(), s_.begin() + i)),
            basic_naive_string(std::vector<Symbol>(s_.begin() + i, s_.end()))};
  }

  friend basic_naive_string concatenate(const basic_naive_string& a, const basic_naive_string& b) {
    auto t = a.s_;
    t.insert(t.end(), b.s_.begin(), b.s_.end());
    return basic_naive_string(std::move(t));
  }

  basic_naive_string rotate(std::uint64_t k) const {
    if (k >= s_.size()) throw index_out_of_range(k, s_.size());
    std::vector<Symbol> t(s_.size());
    for (std::size_t i = 0; i < s_.size(); ++i) t[(i + k) % s_.size()] = s_[i];
    return basic_naive_string(std::move(t));
  }

  friend std::uint64_t lcp(const basic_naive_string& a, const basic_naive_string& b) {
    std::uint64_t k = 0;
    while (k < a.s_.size() && k < b.s_.size() && a.s_[k] == b.s_[k]) ++k;
    return k;
  }

  friend bool operator==(const basic_naive_string&, const basic_naive_string&) = default;

 private:
  std::vector<Symbol> s_;
};

using naive_string = basic_naive_string<char>;

struct dp_result {
  std::vector<bool> reachable;
  std::vector<predecessor> pred;
};

/// The unaccelerated recurrence S_i = S_{i-1} | (S_{i-1} + s_i), one copy at
/// a time. Each residue remembers the value of the copy that first reached it.
inline dp_result dp_subset_sum(const instance& inst) {
  if (inst.m < 1) throw invalid_input("modulus must be at least 1");
  const std::uint64_t m = inst.m;
  dp_result r;
  r.reachable.assign(m, false);
  r.pred.assign(m, predecessor{});
  r.reachable[0] = true;
  r.pred[0] = {pred_kind::origin, 0};
  for (const auto& it : inst.items) {
    const std::uint64_t s = it.value % m;
    for (std::uint64_t c = 0; c < it.multiplicity; ++c) {
      const auto before = r.reachable;
      for (std::uint64_t j = 0; j < m; ++j) {
        if (!before[j]) continue;
        const std::uint64_t k = (j + s) % m;
        if (!r.reachable[k]) {
          r.reachable[k] = true;
          r.pred[k] = {pred_kind::value, s};
        }
      }
    }
  }
  return r;
}

/// Witness from a predecessor array, or nullopt if t is unreachable.
inline std::optional<witness> chase(const dp_result& r, std::uint64_t m, std::uint64_t t) {
  if (!r.reachable.at(t)) return std::nullopt;
  std::vector<std::uint64_t> counts(m, 0);
  for (std::uint64_t j = t, steps = 0; j != 0; ++steps) {
    if (steps >= m || r.pred[j].kind != pred_kind::value) {
      throw internal_inconsistency("oracle predecessor chain broken");
    }
    ++counts[r.pred[j].value];
    j = (j + m - r.pred[j].value) % m;
  }
  witness w;
  for (std::uint64_t v = 0; v < m; ++v) {
    if (counts[v]) w.parts.push_back({v, counts[v]});
  }
  return w;
}

/// Every sub-multiset, enumerated. Only sensible for tiny instances.
inline std::vector<bool> exhaustive_subset_sums(const instance& inst) {
  std::vector<bool> reach(inst.m, false);
  std::vector<std::uint64_t> take(inst.items.size(), 0);
  for (;;) {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < take.size(); ++i) {
      sum = (sum + (inst.items[i].value % inst.m) * (take[i] % inst.m)) % inst.m;
    }
    reach[sum] = true;
    std::size_t i = 0;
    while (i < take.size() && take[i] == inst.items[i].multiplicity) take[i++] = 0;
    if (i == take.size()) break;
    ++take[i];
  }
  return reach;
}

/// Lexicographically first n-subset of positions whose values sum to 0 mod n.
inline std::optional<std::vector<std::size_t>> exhaustive_egz(
    std::uint64_t n, const std::vector<std::uint64_t>& elements) {
  if (n == 0 || n > 12) throw invalid_input("exhaustive search supports 1 <= n <= 12");
  const std::size_t len = elements.size();
  if (len < n) return std::nullopt;
  std::vector<std::size_t> pick(n);
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  for (;;) {
    std::uint64_t sum = 0;
    for (auto i : pick) sum = (sum + elements[i] % n) % n;
    if (sum == 0) return pick;
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == len - n + i - 1) --i;
    if (i == 0) return std::nullopt;
    ++pick[i - 1];
    for (std::size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
}

/// Largest prime factor of every k in [0, limit], by sieve. Entries 0 and 1
/// are 1.
inline std::vector<std::uint64_t> largest_prime_factors(std::uint64_t limit) {
  std::vector<std::uint64_t> lpf(limit + 1, 1);
  for (std::uint64_t p = 2; p <= limit; ++p) {
    if (lpf[p] != 1) continue;  // composite: already marked by a smaller prime
    for (std::uint64_t k = p; k <= limit; k += p) lpf[k] = p;
  }
  return lpf;
}

}  // namespace ddt::oracle
