/*
 * Copyright 2026 The speechsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "speechsim/harness.hpp"

using namespace speechsim;

namespace {

const ProcessorProfile& intel() { return builtin_profile("intel-client"); }
const ProcessorProfile& amd() { return builtin_profile("amd-epyc"); }

TestCase meltdown(const std::string& v, CacheLevel level, bool tlb = true) {
  TestCase tc;
  tc.gadgets = {GadgetSpec::slow_load(), GadgetSpec::primitive(v), GadgetSpec::disclosure()};
  tc.env.data_level = level;
  tc.env.secret_tlb = tlb;
  return tc;
}

}  // namespace

TEST(Classify, ThresholdSplitsHitAndMiss) {
  const ProcessorProfile& p = intel();
  EXPECT_GT(channel_threshold(p), p.lat.l1);
  EXPECT_LT(channel_threshold(p), p.lat.llc);
}

TEST(Classify, Total) {
  const ProcessorProfile& p = intel();
  MemEnvironment env = base_environment(layout::kSecretValue, layout::kChannel);
  EXPECT_EQ(classify(env, layout::kChannel, layout::kSecretValue, p), SignalOutcome::None);
  MemEnvironment zero = env;
  preload(zero, layout::kChannel, CacheLevel::L1);
  EXPECT_EQ(classify(zero, layout::kChannel, layout::kSecretValue, p), SignalOutcome::Zero);
  MemEnvironment both = zero;
  preload(both, layout::kChannel + layout::kSecretValue, CacheLevel::L1);
  EXPECT_EQ(classify(both, layout::kChannel, layout::kSecretValue, p), SignalOutcome::Correct);
}

TEST(CovertTest, UserSupervisorDependsOnDataLevel) {
  EXPECT_EQ(run_covert_test(meltdown("pte-us", CacheLevel::L1), intel(), 1), SignalOutcome::Correct);
  EXPECT_EQ(run_covert_test(meltdown("pte-us", CacheLevel::Llc), intel(), 1), SignalOutcome::Zero);
  EXPECT_EQ(run_covert_test(meltdown("pte-us", CacheLevel::L1), amd(), 1), SignalOutcome::None);
}

TEST(CovertTest, NoSpeculationGivesNone) {
  EXPECT_EQ(run_covert_test(meltdown("load-cr4", CacheLevel::L1), amd(), 1), SignalOutcome::None);
}

TEST(CovertTest, ControlRunIsLegal) {
  TestCase tc = meltdown("pte-us", CacheLevel::Mem, false);
  tc.env.control = true;
  EXPECT_EQ(run_covert_test(tc, intel(), 1), SignalOutcome::Correct);
}

TEST(CovertTest, UnsupportedVariant) {
  // Protection keys are absent on the server profile.
  EXPECT_THROW(assemble(meltdown("pkey-user", CacheLevel::L1), amd()), Unsupported);
  EXPECT_THROW(assemble(meltdown("no-such", CacheLevel::L1), intel()), UnknownNameError);
}

TEST(Assemble, DisclosureZeroMatchesPlainDisclosure) {
  TestCase a = meltdown("pte-us", CacheLevel::L1);
  TestCase b = a;
  b.gadgets.back() = GadgetSpec::disclosure(0);
  EXPECT_EQ(format_seq(assemble(a, intel()).seq), format_seq(assemble(b, intel()).seq));
}

TEST(Assemble, SenderIsLastLoadOnChannel) {
  Assembled a = assemble(meltdown("pte-us", CacheLevel::L1), intel());
  const MicroOp& s = a.seq.ops.at(a.sender);
  EXPECT_EQ(s.kind, OpKind::Load);
  EXPECT_EQ(a.seq.live_ins.at(s.mem->base), layout::kChannel);
}

TEST(Assemble, Deterministic) {
  TestCase tc = meltdown("ds-over-limit", CacheLevel::L2);
  Assembled a = assemble(tc, intel());
  Assembled b = assemble(tc, intel());
  EXPECT_EQ(format_seq(a.seq), format_seq(b.seq));
  EXPECT_EQ(a.env, b.env);
}

TEST(Exploitability, InvariantUnderComboOrder) {
  std::mt19937_64 rng(3);
  for (const char* id : {"pte-us", "ds-over-limit", "pte-present", "load-cr4"}) {
    const VariantSpec& v = find_variant(id);
    const Exploit base = exploitability(v, intel(), 1).letter;
    std::vector<EnvCombo> combos = default_combos();
    for (int i = 0; i < 3; ++i) {
      std::shuffle(combos.begin(), combos.end(), rng);
      EXPECT_EQ(exploitability(v, intel(), 1, combos).letter, base) << id;
    }
  }
}

TEST(Window, MonotoneAtSeveralPositions) {
  for (int pos : {0, 40, 70, kFpChainOps}) {
    TestCase tc;
    tc.gadgets = {GadgetSpec::fp_chain(pos), GadgetSpec::primitive("pte-us"), GadgetSpec::disclosure(0)};
    WindowScan w = measure_speculation_window(tc, intel(), 1, 2);
    EXPECT_TRUE(w.monotone) << pos;
    EXPECT_FALSE(w.no_speculation);
  }
}

TEST(Window, ShrinksAsCpuidMovesLater) {
  int prev = 1 << 30;
  for (int pos : {0, 30, 60, 75}) {
    TestCase tc;
    tc.gadgets = {GadgetSpec::fp_chain(pos), GadgetSpec::primitive("pte-us"), GadgetSpec::disclosure(0)};
    int w = measure_speculation_window(tc, intel(), 1, 2).window;
    EXPECT_LE(w, prev) << pos;
    prev = w;
  }
  EXPECT_LT(prev, 10);
}

TEST(Window, SaturationOracle) {
  EXPECT_EQ(window_saturation_oracle(intel()), intel().geo.rename_int_regs - 2);
}

TEST(RelativeP1, DifferentialIdentity) {
  for (auto [level, tlb] : {std::pair{CacheLevel::L1, true}, {CacheLevel::L2, true},
                            {CacheLevel::L1, false}}) {
    RelativeP1 r = measure_relative_p1("ds-over-limit", level, tlb, intel(), 1);
    EXPECT_EQ(r.relative, r.times.t_spec2_prime - r.times.t_spec2);
    EXPECT_EQ(r.times.t_data - r.times.t_p1, r.times.t_spec2 - r.times.t_spec2_prime);
  }
}

TEST(RelativeP1, KnownValues) {
  EXPECT_EQ(measure_relative_p1("pte-us", CacheLevel::L1, true, intel(), 1).relative, 0);
  EXPECT_EQ(measure_relative_p1("ds-over-limit", CacheLevel::L2, true, intel(), 1).relative, -12);
}

TEST(RelativeP1, CapacityError) {
  EXPECT_THROW(measure_relative_p1("ds-over-limit", CacheLevel::Mem, true, intel(), 1), ConfigError);
}

TEST(Branch, CorrectlyPredictedBranchLeaks) {
  EXPECT_EQ(predicted_branch_outcome(intel(), 1), SignalOutcome::Correct);
}

TEST(Branch, WindowMatchesBound) {
  EXPECT_EQ(misprediction_window(intel(), false, 1, 2).window, misprediction_oracle_bound(intel()));
}

TEST(Squash, ThresholdBelowRob) {
  WindowScan w = squash_test(intel(), 1, 2);
  EXPECT_GT(w.first_none(), 0);
  EXPECT_LT(w.first_none(), intel().geo.rob_size);
}

TEST(Independence, WindowSameWithAndWithoutTlb) {
  IndependenceResult r = p1_window_independence(intel(), 1, 2);
  EXPECT_EQ(r.window_tlb_present, r.window_tlb_flushed);
  EXPECT_GT(r.window_tlb_present, 0);
}

TEST(Prefetch, Deterministic) {
  PrefetchResult a = prefetch_experiment("pte-us", CacheLevel::Llc, 50, intel(), 7, 50);
  PrefetchResult b = prefetch_experiment("pte-us", CacheLevel::Llc, 50, intel(), 7, 50);
  EXPECT_EQ(a.histogram, b.histogram);
  EXPECT_EQ(a.correct, b.correct);
  EXPECT_EQ(a.final_level, b.final_level);
}

TEST(ParallelMap, OrderAndErrors) {
  auto out = parallel_map<int>(100, 4, [](std::size_t i) { return static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
  EXPECT_THROW(parallel_map<int>(10, 4,
                                 [](std::size_t i) -> int {
                                   if (i == 7) throw ConfigError("x");
                                   return 0;
                                 }),
               ConfigError);
}

TEST(Profiles, ResolveByNameOrSuggestion) {
  EXPECT_EQ(resolve_profile("amd-epyc").name, "amd-epyc");
  try {
    resolve_profile("intel-clinet");
    FAIL();
  } catch (const UnknownNameError& e) {
    EXPECT_EQ(e.suggestion(), "intel-client");
  }
}
