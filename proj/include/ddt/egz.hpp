#pragma once

// Zero-sum subsets: n of any 2n-1 residues mod n summing to 0 mod n, and the
// contiguous zero-sum run among any n residues.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "ddt/errors.hpp"
#include "ddt/instance.hpp"
#include "ddt/modsum.hpp"

namespace ddt::egz {

struct egz_input {
  std::uint64_t n = 1;
  std::vector<std::uint64_t> elements;  // residues mod n, length 2n-1
};

/// Reduces values mod n and checks the length.
inline egz_input make_input(std::uint64_t n, const std::vector<std::int64_t>& values) {
  if (n < 1) throw invalid_input("n must be at least 1");
  if (values.size() != 2 * n - 1) {
    throw invalid_input("expected " + std::to_string(2 * n - 1) + " elements, got " +
                        std::to_string(values.size()));
  }
  egz_input in{n, {}};
  in.elements.reserve(values.size());
  for (auto v : values) in.elements.push_back(reduce_mod(v, n));
  return in;
}

struct certificate {
  std::vector<std::size_t> indices;  // ascending positions into the input
  friend bool operator==(const certificate&, const certificate&) = default;
};

struct egz_options {
  hash_seed seed{0x5EEDULL};
  unsigned fingerprint_bits = 64;
  std::uint32_t max_restarts = 1000;
};

struct egz_stats {
  std::uint64_t prime_rounds = 0;
  std::uint64_t equal_runs = 0;  // prime rounds settled without subset sum
  std::uint64_t rotations = 0;
  std::uint64_t bit_fixes = 0;
  std::uint64_t skipped_copies = 0;
  std::uint64_t restarts = 0;
  std::uint32_t max_height = 0;
  std::uint64_t nodes_built = 0;
};

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

inline std::uint64_t largest_prime_factor(std::uint64_t n) {
  if (n < 2) throw invalid_input("largest_prime_factor needs n >= 2");
  std::uint64_t best = 1;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    while (n % d == 0) {
      best = d;
      n /= d;
    }
  }
  return n > 1 ? n : best;
}

inline bool verify_egz(const egz_input& in, const certificate& cert) {
  if (cert.indices.size() != in.n) return false;
  std::vector<bool> seen(in.elements.size(), false);
  std::uint64_t sum = 0;
  for (auto i : cert.indices) {
    if (i >= in.elements.size() || seen[i]) return false;
    seen[i] = true;
    sum = (sum + in.elements[i] % in.n) % in.n;
  }
  return sum == 0;
}

namespace detail {

class solver {
 public:
  solver(const egz_options& opts, egz_stats& stats) : opts_(opts), seed_(opts.seed), stats_(stats) {}

  /// p of the 2p-1 values (residues mod p) summing to 0 mod p, as positions.
  std::vector<std::size_t> prime(std::uint64_t p, const std::vector<std::uint64_t>& values) {
    DDT_CHECK(values.size() == 2 * p - 1, "prime round size");
    ++stats_.prime_rounds;
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
    auto a = [&](std::size_t i) { return values[order[i]]; };

    for (std::size_t i = 0; i + p - 1 < order.size(); ++i) {
      if (a(i) == a(i + p - 1)) {
        ++stats_.equal_runs;
        return {order.begin() + i, order.begin() + i + p};
      }
    }
    // Pigeonhole makes the branch above always fire for p = 2.
    DDT_CHECK(p > 2, "p = 2 without an equal run");

    std::uint64_t c = 0;
    for (std::size_t i = 0; i < p; ++i) c = (c + a(i)) % p;
    const std::uint64_t target = (p - c) % p;

    // Swapping sorted position j out for j+p-1 adds b_j to the sum.
    std::vector<std::uint64_t> b(p, 0);
    std::vector<std::pair<std::int64_t, std::uint64_t>> pairs;
    for (std::size_t j = 1; j < p; ++j) {
      b[j] = a(j + p - 1) - a(j);
      DDT_CHECK(b[j] > 0 && b[j] < p, "difference out of range");
      pairs.emplace_back(static_cast<std::int64_t>(b[j]), 1);
    }
    const instance inst = make_instance(p, pairs);
    auto dec = modsum::decide(inst, target, next_options());
    absorb(dec.result.stats);
    if (!dec.reachable) throw internal_inconsistency("prime round target unreachable");

    std::vector<std::size_t> chosen(p);
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
    for (const auto& part : dec.witness_set->parts) {
      std::uint64_t left = part.multiplicity;
      for (std::size_t j = 1; j < p && left > 0; ++j) {
        if (b[j] == part.value) {
          chosen[j] = j + p - 1;
          --left;
        }
      }
      DDT_CHECK(left == 0, "witness count exceeds difference positions");
    }
    std::vector<std::size_t> out;
    out.reserve(p);
    for (auto j : chosen) out.push_back(order[j]);
    return out;
  }

  /// n of the 2n-1 values summing to 0 mod n, as positions.
  std::vector<std::size_t> solve(std::uint64_t n, const std::vector<std::uint64_t>& values) {
    DDT_CHECK(values.size() == 2 * n - 1, "input size");
    if (n == 1) return {0};
    const std::uint64_t u = largest_prime_factor(n);
    if (u == n) return prime(n, values);
    const std::uint64_t v = n / u;

    std::deque<std::size_t> pool(values.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<std::vector<std::size_t>> rounds;
    std::vector<std::uint64_t> c;
    std::vector<bool> used(values.size(), false);
    for (std::uint64_t r = 0; r < 2 * v - 1; ++r) {
      std::vector<std::size_t> window(pool.begin(), pool.begin() + (2 * u - 1));
      pool.erase(pool.begin(), pool.begin() + (2 * u - 1));
      std::vector<std::uint64_t> wv;
      wv.reserve(window.size());
      for (auto i : window) wv.push_back(values[i] % u);
      auto pick = prime(u, wv);

      std::vector<bool> taken(window.size(), false);
      std::uint64_t sum = 0;
      std::vector<std::size_t> idx;
      for (auto k : pick) {
        taken[k] = true;
        const std::size_t i = window[k];
        DDT_CHECK(!used[i], "rounds overlap");
        used[i] = true;
        idx.push_back(i);
        sum += values[i];
      }
      DDT_CHECK(sum % u == 0, "round sum not divisible by u");
      c.push_back((sum / u) % v);
      rounds.push_back(std::move(idx));
      // Leftovers stay at the front, in input order.
      for (std::size_t k = window.size(); k-- > 0;) {
        if (!taken[k]) pool.push_front(window[k]);
      }
    }
    DDT_CHECK(pool.size() == u - 1, "leftover count");

    std::vector<std::size_t> out;
    out.reserve(n);
    for (auto r : solve(v, c)) out.insert(out.end(), rounds[r].begin(), rounds[r].end());
    return out;
  }

 private:
  modsum::solve_options next_options() {
    modsum::solve_options o{seed_, opts_.fingerprint_bits, opts_.max_restarts};
    seed_ = modsum::next_seed(seed_);
    return o;
  }

  void absorb(const modsum::solve_stats& s) {
    stats_.rotations += s.rotations;
    stats_.bit_fixes += s.bit_fixes;
    stats_.skipped_copies += s.skipped_copies;
    stats_.restarts += s.restarts;
    stats_.max_height = std::max(stats_.max_height, s.max_height);
    stats_.nodes_built += s.nodes_built;
  }

  egz_options opts_;
  hash_seed seed_;
  egz_stats& stats_;
};

}  // namespace detail

/// p of the 2p-1 elements summing to 0 mod p. Values are reduced mod p.
inline certificate egz_prime(std::uint64_t p, const std::vector<std::uint64_t>& elements,
                             const egz_options& opts = {}, egz_stats* stats = nullptr) {
  if (!is_prime(p)) throw not_prime(p);
  if (elements.size() != 2 * p - 1) throw invalid_input("expected 2p-1 elements");
  egz_stats local;
  detail::solver s(opts, stats ? *stats : local);
  std::vector<std::uint64_t> vals;
  vals.reserve(elements.size());
  for (auto e : elements) vals.push_back(e % p);
  certificate cert{s.prime(p, vals)};
  std::sort(cert.indices.begin(), cert.indices.end());
  return cert;
}

inline certificate egz(const egz_input& in, const egz_options& opts = {},
                       egz_stats* stats = nullptr) {
  if (in.n < 1 || in.elements.size() != 2 * in.n - 1) {
    throw invalid_input("expected 2n-1 elements");
  }
  egz_stats local;
  detail::solver s(opts, stats ? *stats : local);
  std::vector<std::uint64_t> vals;
  vals.reserve(in.elements.size());
  for (auto e : in.elements) vals.push_back(e % in.n);
  certificate cert{s.solve(in.n, vals)};
  std::sort(cert.indices.begin(), cert.indices.end());
  DDT_CHECK(verify_egz(in, cert), "certificate does not verify");
  return cert;
}

/// Inclusive range [first, second] of a nonempty run summing to 0 mod n.
inline std::pair<std::size_t, std::size_t> contiguous_zero_sum(
    std::uint64_t n, const std::vector<std::uint64_t>& elements) {
  if (n < 1) throw invalid_input("n must be at least 1");
  if (elements.size() != n) {
    throw invalid_input("expected " + std::to_string(n) + " elements, got " +
                        std::to_string(elements.size()));
  }
  // seen[r] = 1 + (last index of a prefix with sum r), 0 for the empty prefix.
  std::vector<std::int64_t> seen(n, -1);
  seen[0] = 0;
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < elements.size(); ++j) {
    s = (s + elements[j] % n) % n;
    if (seen[s] >= 0) return {static_cast<std::size_t>(seen[s]), j};
    seen[s] = static_cast<std::int64_t>(j + 1);
  }
  throw internal_inconsistency("no zero-sum run among n residues");
}

}  // namespace ddt::egz
