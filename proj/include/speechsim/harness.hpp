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

#pragma once

// Test-case assembly, Flush+Reload receiver and the measurement procedures.

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "speechsim/isa.hpp"
#include "speechsim/memsys.hpp"
#include "speechsim/pipeline.hpp"
#include "speechsim/profile.hpp"
#include "speechsim/variants.hpp"

namespace speechsim {

// Fixed address map used by every assembled test.
namespace layout {
inline constexpr std::uint64_t kNullPage = 0x0;
inline constexpr std::uint64_t kTwin = 0x00500000;
inline constexpr std::uint64_t kSecret = 0x00600000;
inline constexpr std::uint64_t kSecret2 = 0x00610000;
inline constexpr std::uint64_t kSlow1 = 0x00700000;
inline constexpr std::uint64_t kSlow2 = 0x00701000;
inline constexpr std::uint64_t kSlow3 = 0x00702000;
inline constexpr std::uint64_t kChase = 0x00800000;
inline constexpr int kMaxChase = 64;
inline constexpr std::uint64_t kBranchCond = 0x00900000;
inline constexpr std::uint64_t kBranchValue = 0x00901000;
inline constexpr std::uint64_t kChannel = 0x01000000;
inline constexpr int kSlots = 256;
inline constexpr std::uint64_t kSecretValue = 0x42000;
// Bound-template index and limit.
inline constexpr std::uint64_t kBoundIndex = 0x100;
inline constexpr std::int64_t kBoundUpper = 0x10;
inline constexpr std::uint16_t kSelector = 0x10;
inline constexpr std::uint16_t kLoadSelector = 0x20;
}  // namespace layout

enum class SignalOutcome : std::uint8_t { Correct, Zero, None };
enum class Exploit : std::uint8_t { Y, N, R, NA };

std::string_view to_string(SignalOutcome s);
std::string_view to_string(Exploit e);

enum class GadgetKind : std::uint8_t {
  WindowingSlowLoad,
  WindowingFpChain,
  Suppressing,
  DisclosureI,
  DisclosureII,
  Primitive,
};

struct GadgetSpec {
  GadgetKind kind = GadgetKind::Primitive;
  // WindowingFpChain: CPUID inserted before this FP op (0..75).
  int cpuid_pos = 0;
  int chase_depth = 0;
  int addsub_count = 0;
  std::string variant_id;

  static GadgetSpec slow_load() { return {.kind = GadgetKind::WindowingSlowLoad}; }
  static GadgetSpec fp_chain(int pos) { return {.kind = GadgetKind::WindowingFpChain, .cpuid_pos = pos}; }
  static GadgetSpec suppressing(int depth) { return {.kind = GadgetKind::Suppressing, .chase_depth = depth}; }
  static GadgetSpec disclosure() { return {.kind = GadgetKind::DisclosureI}; }
  static GadgetSpec disclosure(int n) { return {.kind = GadgetKind::DisclosureII, .addsub_count = n}; }
  static GadgetSpec primitive(std::string id) {
    return {.kind = GadgetKind::Primitive, .variant_id = std::move(id)};
  }
};

inline constexpr int kFpChainOps = 75;

struct EnvSetup {
  CacheLevel data_level = CacheLevel::L1;
  bool secret_tlb = true;
  // Legal twin access with the variant's corruption left out.
  bool control = false;
  CacheLevel slow_level = CacheLevel::Mem;
  bool slow_tlb = false;
};

struct TestCase {
  std::vector<GadgetSpec> gadgets;
  std::uint64_t secret_value = layout::kSecretValue;
  EnvSetup env;
  std::uint64_t channel_base = layout::kChannel;
};

struct Assembled {
  InstrSeq seq;
  MemEnvironment env;
  std::uint64_t secret_value = layout::kSecretValue;
  std::uint64_t channel_base = layout::kChannel;
  std::uint64_t secret_addr = layout::kSecret;
  // Static index of the channel-sender load.
  std::size_t sender = 0;
};

// Variant cannot run on this profile or in this experiment.
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Base environment: channel, slow-load, chase and branch pages mapped; the
// secret and its twin hold secret_value. Pages are user pages unless
// cpu_mode is supervisor.
MemEnvironment base_environment(std::uint64_t secret_value, std::uint64_t channel_base,
                                CpuMode mode = CpuMode::User);

// Throws Unsupported (missing feature, bad combination) or ConfigError.
Assembled assemble(const TestCase& tc, const ProcessorProfile& profile);

Cycle channel_threshold(const ProcessorProfile& p);
SignalOutcome classify(const MemEnvironment& after, std::uint64_t channel_base,
                       std::uint64_t secret_value, const ProcessorProfile& p);

SignalOutcome run_covert_test(const Assembled& a, const ProcessorProfile& p, std::uint64_t seed);
SignalOutcome run_covert_test(const TestCase& tc, const ProcessorProfile& p, std::uint64_t seed);

// Runs fn(0..n-1) on up to jobs threads; results are in index order.
template <typename T>
std::vector<T> parallel_map(std::size_t n, unsigned jobs, const std::function<T(std::size_t)>& fn);

int default_jobs();

using Scenario = std::function<Assembled(int k)>;

struct WindowScan {
  // Outcome at k, from k = 0 up to the cap.
  std::vector<SignalOutcome> outcomes;
  // Largest k whose outcome is not NONE; 0 when none is.
  int window = 0;
  bool no_speculation = false;
  bool monotone = true;
  // First k with outcome NONE, or -1.
  int first_none() const;
};

WindowScan scan_window(const Scenario& s, const ProcessorProfile& p, int cap, std::uint64_t seed,
                       unsigned jobs = 1);

// The template's last gadget must be DISCLOSURE_II; its count is swept.
WindowScan measure_speculation_window(const TestCase& tmpl, const ProcessorProfile& p,
                                      std::uint64_t seed, unsigned jobs = 1);

struct SweepPoint {
  int cpuid_pos = 0;
  int effective_size = 0;
  int window = 0;
};

std::vector<SweepPoint> sweep_p2(const std::string& variant, const ProcessorProfile& p,
                                 std::uint64_t seed, unsigned jobs = 1);

// GP-writing uops that hold a rename register between the windowing gadget
// and the sender (primitive result, sender result).
int window_saturation_oracle(const ProcessorProfile& p);

struct DifferentialTimes {
  Cycle t_spec1 = 0;
  Cycle t_spec2 = 0;
  Cycle t_spec2_prime = 0;
  Cycle t_delay = 0;
  Cycle t_p1 = 0;
  Cycle t_data = 0;
  int chase_depth = 0;
};

struct RelativeP1 {
  // T_P1 - T_data, i.e. t_spec2' - t_spec2.
  Cycle relative = 0;
  DifferentialTimes times;
};

RelativeP1 measure_relative_p1(const std::string& variant, CacheLevel data_level, bool tlb_present,
                               const ProcessorProfile& p, std::uint64_t seed);

struct EnvCombo {
  CacheLevel level = CacheLevel::L1;
  bool tlb_present = true;
};

std::vector<EnvCombo> default_combos();

struct ExploitResult {
  Exploit letter = Exploit::NA;
  std::vector<std::pair<EnvCombo, SignalOutcome>> runs;
};

ExploitResult exploitability(const VariantSpec& v, const ProcessorProfile& p, std::uint64_t seed,
                             const std::vector<EnvCombo>& combos = default_combos());

struct PrefetchResult {
  std::map<Cycle, int> histogram;
  int correct = 0;
  int zero = 0;
  int none = 0;
  CacheLevel initial = CacheLevel::Llc;
  CacheLevel final_level = CacheLevel::Llc;
};

PrefetchResult prefetch_experiment(const std::string& variant, CacheLevel initial, int rounds,
                                   const ProcessorProfile& p, std::uint64_t seed,
                                   int samples = 1000);

// Largest k with signal between the first speculative load and the sender.
WindowScan misprediction_window(const ProcessorProfile& p, bool with_slow_windowing,
                                std::uint64_t seed, unsigned jobs = 1);
int misprediction_oracle_bound(const ProcessorProfile& p);
SignalOutcome predicted_branch_outcome(const ProcessorProfile& p, std::uint64_t seed);

std::vector<std::pair<int, SignalOutcome>> dual_primitive_test(bool same_address,
                                                               const ProcessorProfile& p,
                                                               std::uint64_t seed,
                                                               unsigned jobs = 1);

// First chain length at which the sender no longer executes.
WindowScan squash_test(const ProcessorProfile& p, std::uint64_t seed, unsigned jobs = 1);

struct IndependenceResult {
  int window_tlb_present = 0;
  int window_tlb_flushed = 0;
};

IndependenceResult p1_window_independence(const ProcessorProfile& p, std::uint64_t seed,
                                          unsigned jobs = 1);

// Structural lint plus a check that every declared letter is reproduced.
// Throws ConfigError naming the first mismatching variant and its check.
void validate_profile(const ProcessorProfile& p);

// Reads, lints and validates a profile file.
ProcessorProfile load_profile(const std::string& path);

// Builtin name or path to a profile file.
ProcessorProfile resolve_profile(const std::string& name_or_path);

// Template definition.

template <typename T>
std::vector<T> parallel_map(std::size_t n, unsigned jobs, const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(n);
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(jobs, n); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace speechsim
