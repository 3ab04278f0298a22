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

// Random cross-check of simulate() against the closed-form oracle. Shared
// by the unit test and the acceptance binary.

#include <random>
#include <sstream>
#include <string>

#include "random_seq.hpp"
#include "speechsim/pipeline.hpp"
#include "speechsim/variants.hpp"

namespace speechsim {

// Intel client with prefetch side effects switched off.
inline ProcessorProfile oracle_profile() {
  ProcessorProfile p = intel_client_profile();
  p.prefetch.p_l1 = 0;
  p.prefetch.p_terminal_l2 = 0;
  return p;
}

// Empty string when the trace agrees with the oracle on every op.
inline std::string compare_oracle(const OracleResult& o, const ExecTrace& t) {
  std::ostringstream err;
  auto field = [&](std::size_t i, const char* what, long long want, long long got) {
    if (want != got && err.tellp() == 0)
      err << "op " << i << " " << what << ": oracle " << want << ", simulate " << got;
  };
  for (std::size_t i = 0; i < o.ops.size(); ++i) {
    const OracleOp& w = o.ops[i];
    const RobEntry* e = t.last_instance(i);
    field(i, "issued", w.issued, e != nullptr);
    if (!e) continue;
    const bool squashed = e->status == EntryStatus::Squashed;
    field(i, "squashed", w.squashed, squashed);
    field(i, "dispatch", w.dispatch, e->dispatch_cycle);
    field(i, "complete", w.complete, e->complete_cycle);
    const FaultRecord f = e->fault.value_or(FaultRecord{});
    field(i, "p1", w.p1, e->fault ? f.p1_cycle : kNever);
    field(i, "zero_forwarded", w.zero_forwarded, f.zero_forwarded);
    field(i, "no_speculation", w.no_speculation, f.no_speculation);
  }
  field(0, "p2", o.p2_cycle.value_or(kNever), t.p2_cycle.value_or(kNever));
  if (err.tellp() == 0 && o.squash_set != t.squash_set) err << "squash sets differ";
  return err.str();
}

struct OracleRun {
  int accepted = 0;
  int mismatches = 0;
  std::string first_mismatch;
};

// Draws random cases until `want` are inside the oracle domain.
inline OracleRun run_oracle_equivalence(int want, std::uint64_t seed) {
  const ProcessorProfile p = oracle_profile();
  std::mt19937_64 rng(seed);
  OracleRun r;
  for (int attempts = 0; r.accepted < want && attempts < 1000 * want; ++attempts) {
    MemEnvironment env = gen::random_env(rng);
    InstrSeq seq = gen::random_seq(rng, 10);
    OracleResult o;
    ExecTrace t;
    try {
      o = analytic_oracle(seq, env, p);
      t = simulate(seq, env, p, seed);
    } catch (const OracleDomainError&) {
      continue;
    } catch (const ConfigError&) {
      continue;
    }
    ++r.accepted;
    std::string diff = compare_oracle(o, t);
    if (!diff.empty() && r.mismatches++ == 0)
      r.first_mismatch = diff + "\n" + format_seq(seq);
  }
  return r;
}

}  // namespace speechsim
