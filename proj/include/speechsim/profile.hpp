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

// Processor profile: latency table, core geometry, per-check fault timing.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "speechsim/isa.hpp"

namespace speechsim {

// Configuration problems (bad profile, unmapped address, ...). Never a
// simulated fault.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Declaration order is the catalog order used to break P1 ties.
enum class CheckId : std::uint8_t {
  SegNull,
  SegLimit,
  SegExecOnlyRead,
  SegReadOnlyWrite,
  SegNotPresent,
  SegLoadType,
  SegLoadNull,
  SegLoadNotPresent,
  SegLoadDpl,
  PtePresent,
  PteReserved,
  PteUs,
  PteRw,
  Smap,
  Pkey,
  Cr0Ts,
  Bound,
  Cr4Read,
  MsrRead,
};

inline constexpr int kNumChecks = 19;

std::string_view to_string(CheckId c);
std::optional<CheckId> check_from_string(std::string_view s);
std::vector<CheckId> all_checks();

// Ordered nearest to farthest.
enum class CacheLevel : std::uint8_t { L1, L2, Llc, Mem };

std::string_view to_string(CacheLevel l);
std::optional<CacheLevel> level_from_string(std::string_view s);

enum class Anchor : std::uint8_t { PostSegmentation, PostTranslation, AtDispatch };

std::string_view to_string(Anchor a);

// Who wins when P1 and data arrival fall on the same cycle.
enum class TieBreak : std::uint8_t { DataFirst, FaultFirst };

struct CheckTiming {
  bool speculation_allowed = true;
  Anchor anchor = Anchor::AtDispatch;
  Cycle delay = 1;
  TieBreak tie = TieBreak::DataFirst;

  friend bool operator==(const CheckTiming&, const CheckTiming&) = default;
};

struct Latencies {
  Cycle l1 = 4;
  Cycle l2 = 16;
  Cycle llc = 70;
  Cycle mem = 200;
  Cycle stlb = 8;
  Cycle walk = 100;
  Cycle walk_psc = 30;

  friend bool operator==(const Latencies&, const Latencies&) = default;
};

struct ExecLatencies {
  Cycle alu = 1;
  Cycle fp_movapd = 1;
  Cycle fp_addpd = 4;
  Cycle fp_mulpd = 4;
  Cycle cpuid = 1;
  Cycle branch = 1;
  Cycle bound = 1;
  Cycle sysreg = 1;
  Cycle store_forward = 1;

  friend bool operator==(const ExecLatencies&, const ExecLatencies&) = default;
};

struct Geometry {
  int rob_size = 224;
  int issue_width = 4;
  int retire_width = 4;
  int load_ports = 2;
  int alu_ports = 2;
  int fp_ports = 1;
  // In-flight uops writing a general-purpose register, held until retire.
  int rename_int_regs = 147;

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

struct PrefetchPolicy {
  double p_l1 = 0.001;
  double p_terminal_l2 = 0.0;

  friend bool operator==(const PrefetchPolicy&, const PrefetchPolicy&) = default;
};

enum class Feature : std::uint8_t { Tsx, Smap, Pke, LazyFp, Msr1a2, Segmentation32 };

std::string_view to_string(Feature f);
std::optional<Feature> feature_from_string(std::string_view s);

struct ProcessorProfile {
  std::string name;
  Latencies lat;
  ExecLatencies exec;
  Geometry geo;
  PrefetchPolicy prefetch;
  std::set<Feature> features;
  std::map<CheckId, CheckTiming> checks;
  // Declared exploitability letter per variant id, checked by the lint.
  std::map<std::string, std::string> expected;

  bool has(Feature f) const { return features.contains(f); }
  const CheckTiming& timing(CheckId c) const;
  Cycle level_latency(CacheLevel level) const;

  friend bool operator==(const ProcessorProfile&, const ProcessorProfile&) = default;
};

inline constexpr int kProfileSchemaVersion = 1;

// Structural checks only (monotone latencies, positive geometry, complete
// check table). Throws ConfigError.
void lint_profile_structure(const ProcessorProfile& p);

ProcessorProfile profile_from_json(std::string_view text);
std::string profile_to_json(const ProcessorProfile& p);

}  // namespace speechsim
