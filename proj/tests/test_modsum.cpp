#include <gtest/gtest.h>

#include <random>

#include "ddt/modsum.hpp"
#include "ddt/oracle.hpp"

namespace {

using namespace ddt;

std::vector<bool> as_bits(std::uint64_t m, std::initializer_list<std::uint64_t> set) {
  std::vector<bool> v(m, false);
  for (auto x : set) v[x] = true;
  return v;
}

std::string as_string(std::uint64_t m, std::initializer_list<std::uint64_t> set) {
  std::string s(m, '0');
  for (auto x : set) s[x] = '1';
  return s;
}

instance random_instance(std::mt19937_64& rng, std::uint64_t max_m, std::uint64_t max_total) {
  const std::uint64_t m = 1 + rng() % max_m;
  std::vector<std::pair<std::int64_t, std::uint64_t>> pairs;
  const std::uint64_t budget = rng() % (max_total + 1);
  for (std::uint64_t total = 0; total < budget;) {
    const std::uint64_t c = 1 + rng() % std::min<std::uint64_t>(8, budget - total);
    pairs.emplace_back(static_cast<std::int64_t>(rng() % (2 * m)), c);
    total += c;
  }
  return make_instance(m, pairs);
}

TEST(SolveAll, SmallExample) {
  const auto res = modsum::solve_all(make_instance(7, {{3, 1}, {5, 1}}));
  EXPECT_EQ(res.reachable, as_bits(7, {0, 1, 3, 5}));
  EXPECT_EQ(res.pred[0].kind, pred_kind::origin);
  EXPECT_EQ(res.reachable_count(), 4u);
}

TEST(SolveAll, ClosedSetSkipsCopies) {
  const auto res = modsum::solve_all(make_instance(4, {{2, 3}}));
  EXPECT_EQ(res.reachable, as_bits(4, {0, 2}));
  EXPECT_EQ(res.stats.skipped_copies, 2u);
  EXPECT_EQ(res.stats.merge_steps, 2u);
}

TEST(SolveAll, EmptyMultiset) {
  const auto res = modsum::solve_all(make_instance(5, {}));
  EXPECT_EQ(res.reachable, as_bits(5, {0}));
  EXPECT_EQ(res.stats.rotations, 0u);
}

TEST(SolveAll, TrivialModulus) {
  const auto res = modsum::solve_all(make_instance(1, {{3, 4}}));
  EXPECT_EQ(res.reachable, std::vector<bool>{true});
  EXPECT_EQ(res.stats.skipped_copies, 4u);
  EXPECT_EQ(res.stats.nodes_built, 0u);
}

TEST(SolveAll, ZeroValuesAreSkipped) {
  const auto res = modsum::solve_all(make_instance(6, {{0, 5}, {12, 2}, {4, 1}}));
  EXPECT_EQ(res.reachable, as_bits(6, {0, 4}));
  EXPECT_EQ(res.stats.skipped_copies, 7u);
}

TEST(SolveAll, DeterministicGivenSeed) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto inst = random_instance(rng, 300, 200);
    const auto a = modsum::solve_all(inst, {.seed = hash_seed{77}});
    const auto b = modsum::solve_all(inst, {.seed = hash_seed{77}});
    ASSERT_EQ(a.reachable, b.reachable);
    ASSERT_EQ(a.pred, b.pred);
    ASSERT_EQ(a.stats, b.stats);
  }
}

TEST(SolveAll, AgreesWithDynamicProgram) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 400; ++i) {
    const auto inst = random_instance(rng, 512, 1024);
    const auto res = modsum::solve_all(inst, {.seed = hash_seed{rng()}});
    const auto dp = oracle::dp_subset_sum(inst);
    ASSERT_EQ(res.reachable, dp.reachable) << "instance " << i;
    ASSERT_LE(res.stats.bit_fixes, 2 * inst.m);
    ASSERT_LE(res.stats.merge_steps, 2 * inst.m);
    for (std::uint64_t t = 0; t < inst.m; ++t) {
      const auto w = modsum::reconstruct(res, inst, t);
      ASSERT_EQ(w.has_value(), dp.reachable[t]);
      if (w) ASSERT_TRUE(verify_witness(inst, t, *w)) << "instance " << i << " t " << t;
    }
  }
}

TEST(SolveAll, BitFixesEqualTwiceNewPositions) {
  // Every differing bit is fixed once on each side, so the total is exactly
  // twice the number of positions that became reachable.
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto inst = random_instance(rng, 256, 300);
    const auto res = modsum::solve_all(inst, {.seed = hash_seed{rng()}});
    ASSERT_EQ(res.stats.bit_fixes, 2 * (res.reachable_count() - 1));
  }
}

TEST(MergeStep, RotateAndFix) {
  collection c;
  std::vector<predecessor> pred(7);
  pred[0] = {pred_kind::origin, 0};
  pred[3] = {pred_kind::value, 3};
  const auto d = c.from_symbols(std::string_view(as_string(7, {0, 3})));
  const auto out = modsum::merge_step(c, d, 3, pred);
  EXPECT_EQ(c.to_string(out.next), as_string(7, {0, 3, 6}));
  EXPECT_EQ(out.bit_fixes, 2u);
  EXPECT_EQ(out.newly_set, std::vector<std::uint64_t>{6});
  EXPECT_EQ(pred[6], (predecessor{pred_kind::value, 3}));
  EXPECT_EQ(c.to_string(d), as_string(7, {0, 3}));
}

TEST(MergeStep, FixedPoint) {
  collection c;
  std::vector<predecessor> pred(4);
  const auto d = c.from_symbols(std::string_view(as_string(4, {0, 2})));
  const auto out = modsum::merge_step(c, d, 2, pred);
  EXPECT_EQ(out.bit_fixes, 0u);
  EXPECT_TRUE(out.newly_set.empty());
  EXPECT_TRUE(c.equal(out.next, d));
}

TEST(MergeStep, RejectsZeroShift) {
  collection c;
  std::vector<predecessor> pred(4);
  const auto d = c.from_symbols(std::string_view(as_string(4, {0})));
  EXPECT_THROW(modsum::merge_step(c, d, 0, pred), internal_inconsistency);
}

TEST(Reconstruct, Examples) {
  const auto inst = make_instance(7, {{3, 1}, {5, 1}});
  const auto res = modsum::solve_all(inst);
  EXPECT_EQ(modsum::reconstruct(res, inst, 0), witness{});
  EXPECT_EQ(modsum::reconstruct(res, inst, 1), (witness{{{3, 1}, {5, 1}}}));
  EXPECT_FALSE(modsum::reconstruct(res, inst, 2).has_value());
  EXPECT_THROW(modsum::reconstruct(res, inst, 7), invalid_input);
}

TEST(Reconstruct, UnreachableTarget) {
  const auto inst = make_instance(5, {{5, 1}});
  EXPECT_FALSE(modsum::reconstruct(modsum::solve_all(inst), inst, 2).has_value());
}

TEST(Reconstruct, BrokenChainIsReported) {
  const auto inst = make_instance(7, {{3, 1}, {5, 1}});
  auto res = modsum::solve_all(inst);
  res.pred[1] = {pred_kind::unset, 0};
  EXPECT_THROW(modsum::reconstruct(res, inst, 1), internal_inconsistency);
  res.pred[1] = {pred_kind::value, 1};  // points to 0 through a value not in the instance
  EXPECT_THROW(modsum::reconstruct(res, inst, 1), internal_inconsistency);
}

TEST(Decide, Examples) {
  const auto inst = make_instance(7, {{3, 1}, {5, 1}});
  const auto a = modsum::decide(inst, 1);
  EXPECT_TRUE(a.reachable);
  EXPECT_EQ(a.witness_set, (witness{{{3, 1}, {5, 1}}}));
  const auto b = modsum::decide(inst, 0);
  EXPECT_TRUE(b.reachable);
  EXPECT_EQ(b.witness_set, witness{});
  const auto c = modsum::decide(inst, 2);
  EXPECT_FALSE(c.reachable);
  EXPECT_FALSE(c.witness_set.has_value());
}

TEST(Restarts, NarrowFingerprintsStillGiveTheRightAnswer) {
  // With 8-bit fingerprints only very small strings finish an epoch.
  std::mt19937_64 rng(5);
  std::uint64_t restarts = 0;
  for (int i = 0; i < 30; ++i) {
    const std::uint64_t m = 2 + rng() % 5;
    std::vector<std::pair<std::int64_t, std::uint64_t>> pairs;
    for (int k = 0; k < 4; ++k) pairs.emplace_back(static_cast<std::int64_t>(rng() % m), 1 + rng() % 2);
    const auto inst = make_instance(m, pairs);
    const auto res = modsum::solve_all(
        inst, {.seed = hash_seed{rng()}, .fingerprint_bits = 8, .max_restarts = 1000000});
    restarts += res.stats.restarts;
    ASSERT_EQ(res.reachable, oracle::dp_subset_sum(inst).reachable);
  }
  EXPECT_GT(restarts, 0u);
}

TEST(Restarts, GivesUpAfterTheLimit) {
  const auto inst = make_instance(64, {{1, 3}, {5, 2}});
  EXPECT_THROW(
      modsum::solve_all(inst, {.seed = hash_seed{1}, .fingerprint_bits = 8, .max_restarts = 5}),
      error);
}

TEST(NextSeed, Changes) {
  const hash_seed s{1};
  EXPECT_NE(modsum::next_seed(s), s);
  EXPECT_EQ(modsum::next_seed(s), modsum::next_seed(s));
}

}  // namespace
