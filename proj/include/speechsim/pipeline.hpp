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

// Cycle-stepped out-of-order core with two-phase fault handling.
//
// Each cycle runs, in order: writeback, branch resolution, retirement (and
// P2 at the ROB head), dispatch, issue.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "speechsim/isa.hpp"
#include "speechsim/memsys.hpp"
#include "speechsim/profile.hpp"

namespace speechsim {

inline constexpr Cycle kNever = -1;

enum class EntryStatus : std::uint8_t { Issued, Executing, Completed, Retired, Squashed, Excepted };

std::string_view to_string(EntryStatus s);

struct FaultRecord {
  CheckId check_id = CheckId::SegNull;
  Cycle p1_cycle = kNever;
  bool zero_forwarded = false;
  bool no_speculation = false;
};

// One dynamic instance of a static op.
struct RobEntry {
  std::size_t op_index = 0;
  EntryStatus status = EntryStatus::Issued;
  Cycle issue_cycle = kNever;
  Cycle dispatch_cycle = kNever;
  // Cycle the result was forwarded; kNever if it never was.
  Cycle complete_cycle = kNever;
  Cycle retire_cycle = kNever;
  Cycle squash_cycle = kNever;
  std::optional<FaultRecord> fault;
  std::uint64_t result = 0;
  // Linear address for memory ops, once dispatched.
  std::optional<std::uint64_t> address;
};

struct TraceEvent {
  Cycle cycle = 0;
  std::size_t entry = 0;
  std::size_t op_index = 0;
  std::string what;
};

struct ExecTrace {
  std::vector<RobEntry> entries;
  std::optional<Cycle> p2_cycle;
  // Entries squashed, by P2 or by a branch misprediction.
  std::vector<std::size_t> squash_set;
  std::optional<CheckId> exception;
  std::optional<std::size_t> exception_entry;
  MemEnvironment final_env;
  Cycle cycles = 0;
  std::vector<TraceEvent> events;

  // Latest dynamic entry for a static op, or nullptr.
  const RobEntry* last_instance(std::size_t op_index) const;
};

struct SimOptions {
  Cycle cycle_budget = 100000;
};

class DeadlockError : public std::runtime_error {
 public:
  DeadlockError(const std::string& msg, std::string dump)
      : std::runtime_error(msg), dump_(std::move(dump)) {}
  const std::string& dump() const { return dump_; }

 private:
  std::string dump_;
};

// Throws IsaError for an invalid sequence, ConfigError for an environment
// problem, DeadlockError when the cycle budget runs out.
ExecTrace simulate(const InstrSeq& seq, const MemEnvironment& env, const ProcessorProfile& profile,
                   std::uint64_t seed, const SimOptions& opts = {});

// Line-oriented "cycle op event" dump with a stable field order.
std::string dump_trace(const ExecTrace& trace, const InstrSeq& seq);

// Closed-form event times on a restricted domain, used to cross-check
// simulate().
struct OracleOp {
  bool issued = true;
  Cycle dispatch = kNever;
  Cycle complete = kNever;
  Cycle p1 = kNever;
  bool zero_forwarded = false;
  bool no_speculation = false;
  bool squashed = false;
};

struct OracleResult {
  std::vector<OracleOp> ops;
  std::optional<Cycle> p2_cycle;
  std::vector<std::size_t> squash_set;
};

class OracleDomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Refuses (OracleDomainError) sequences longer than 10 ops, with CPUID or
// branches, with port contention, with prefetch probability > 0, or with
// two memory ops on one page other than a store-to-load forwarding pair.
OracleResult analytic_oracle(const InstrSeq& seq, const MemEnvironment& env,
                             const ProcessorProfile& profile);

}  // namespace speechsim
