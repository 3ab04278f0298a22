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

// Memory hierarchy, TLBs, page tables, segmentation and permission checks.
// Residency is tracked per 4 KiB page; a page at level L is also present in
// every farther cache level.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "speechsim/isa.hpp"
#include "speechsim/profile.hpp"

namespace speechsim {

inline constexpr std::uint64_t kPageSize = 4096;

inline constexpr std::uint64_t page_of(std::uint64_t addr) { return addr & ~(kPageSize - 1); }

struct PageTableEntry {
  bool present = true;
  bool rw = true;
  bool us = true;
  bool reserved_set = false;
  bool nx = false;
  std::uint8_t pkey = 0;

  bool terminal() const { return !present || reserved_set; }

  friend bool operator==(const PageTableEntry&, const PageTableEntry&) = default;
};

enum class SegType : std::uint8_t { DataRw, DataRo, CodeXo };

std::string_view to_string(SegType t);
std::optional<SegType> seg_type_from_string(std::string_view s);

struct SegmentDescriptor {
  std::uint64_t base = 0;
  // Size in bytes; offsets in [0, limit) are accessible.
  std::uint64_t limit = 0x100000000ULL;
  SegType seg_type = SegType::DataRw;
  bool present = true;
  std::uint8_t dpl = 3;
  bool null_selector = false;

  friend bool operator==(const SegmentDescriptor&, const SegmentDescriptor&) = default;
};

enum class CpuMode : std::uint8_t { User, Supervisor };
enum class AddrMode : std::uint8_t { Bits32, Bits64 };

struct FeatureState {
  bool smap_enabled = false;
  bool pke_enabled = false;
  bool cr0_ts = false;
  // Two bits per key: bit 2k access-disable, bit 2k+1 write-disable.
  std::uint32_t pkru = 0;

  friend bool operator==(const FeatureState&, const FeatureState&) = default;
};

struct MemEnvironment {
  // Pages absent from the map are in memory only.
  std::map<std::uint64_t, CacheLevel> residency;
  std::set<std::uint64_t> dtlb_present;
  std::set<std::uint64_t> stlb_present;
  std::set<std::uint64_t> psc_present;
  std::map<std::uint64_t, PageTableEntry> page_tables;
  // Descriptor table indexed by selector, and the selector held by each
  // segment register.
  std::map<std::uint16_t, SegmentDescriptor> segments;
  std::map<Segment, std::uint16_t> segment_regs;
  std::map<std::uint64_t, std::uint64_t> mem_values;
  std::map<SysReg, std::uint64_t> system_registers;
  CpuMode cpu_mode = CpuMode::User;
  AddrMode addr_mode = AddrMode::Bits64;
  FeatureState feature_state;

  CacheLevel level(std::uint64_t addr) const;
  std::uint64_t value_at(std::uint64_t addr) const;
  void map_page(std::uint64_t addr, PageTableEntry pte = {});
  bool mapped(std::uint64_t addr) const { return page_tables.contains(page_of(addr)); }
  std::uint8_t cpl() const { return cpu_mode == CpuMode::User ? 3 : 0; }
  // Descriptor currently loaded in a segment register, if any.
  const SegmentDescriptor* descriptor(Segment seg) const;

  friend bool operator==(const MemEnvironment&, const MemEnvironment&) = default;
};

enum class AccessKind : std::uint8_t { Read, Write };

struct CheckOutcome {
  CheckId check_id = CheckId::SegNull;
  bool violated = false;
  Anchor anchor = Anchor::AtDispatch;
  // Cycles after dispatch at which the execution unit learns of the fault.
  Cycle p1_time = 0;
  bool speculation_allowed = true;
  TieBreak tie = TieBreak::DataFirst;
};

struct AccessResult {
  Cycle translation_latency = 0;
  // Cycles after dispatch; empty when no data can be fetched.
  std::optional<Cycle> data_latency;
  // Every evaluated check, in catalog order.
  std::vector<CheckOutcome> checks;
  std::uint64_t value = 0;
  std::uint64_t linear = 0;
  CacheLevel level = CacheLevel::Mem;
  bool terminal = false;

  bool faulted() const;
  // Any violated check forbids speculation.
  bool no_speculation() const;
  // Earliest violated check; ties go to catalog order.
  const CheckOutcome* first_violation() const;
};

std::string_view to_string(AccessKind k);

// Throws ConfigError when the linear address is not mapped.
AccessResult access(const MemEnvironment& env, AccessKind kind, std::uint64_t logical_addr,
                    Segment seg, const ProcessorProfile& profile);

// Checks raised by non-memory ops (BOUND, segment-register loads, FP reads
// under CR0.TS, privileged register reads). src_value is the value of the
// first source register.
std::vector<CheckOutcome> op_checks(const MemEnvironment& env, const MicroOp& op,
                                    std::uint64_t src_value, const ProcessorProfile& profile);

// Environment control, always through a fault-free shadow mapping.
void preload(MemEnvironment& env, std::uint64_t addr, CacheLevel level);
void flush_cache(MemEnvironment& env, std::uint64_t addr);
void preload_tlb(MemEnvironment& env, std::uint64_t addr);
void flush_tlb(MemEnvironment& env, std::uint64_t addr);
void flush_all_tlb(MemEnvironment& env);

// Side effects of a completed access: line filled to L1, translation cached.
void fill_after_access(MemEnvironment& env, std::uint64_t addr);

// Non-destructive reload timing.
Cycle probe_reload(const MemEnvironment& env, std::uint64_t addr, const ProcessorProfile& profile);

void apply_prefetch_side_effect(MemEnvironment& env, std::uint64_t addr, bool terminal,
                                const PrefetchPolicy& policy, std::mt19937_64& rng);

// Structured text form of an environment; round-trips exactly.
std::string env_to_json(const MemEnvironment& env);
MemEnvironment env_from_json(std::string_view text);

}  // namespace speechsim
