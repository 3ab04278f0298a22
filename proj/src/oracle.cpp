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

// Event-time calculation for short straight-line sequences. Without
// structural hazards every op dispatches at
//   max(issue + 1, max over producers of their forward time)
// and retires at max(ready + 1, previous retire, retire[k - width] + 1).

#include <algorithm>
#include <map>

#include "speechsim/pipeline.hpp"

namespace speechsim {

namespace {

constexpr std::size_t kMaxOracleOps = 10;

struct Timed {
  Cycle issue = 0;
  Cycle dispatch = kNever;
  Cycle complete = kNever;
  Cycle ready = kNever;
  Cycle p1 = kNever;
  bool forwards = false;
  bool zero = false;
  bool no_spec = false;
  std::uint64_t value = 0;
  std::optional<std::uint64_t> page;
  bool memory_access = false;
};

int port_class(const MicroOp& op) {
  if (op.is_memory()) return 0;
  if (op.is_fp()) return 2;
  return 1;
}

}  // namespace

OracleResult analytic_oracle(const InstrSeq& seq, const MemEnvironment& env,
                             const ProcessorProfile& p) {
  if (seq.empty() || seq.size() > kMaxOracleOps)
    throw OracleDomainError("oracle handles 1 to 10 ops");
  for (const auto& op : seq.ops)
    if (op.kind == OpKind::Cpuid || op.is_branch())
      throw OracleDomainError("oracle does not handle CPUID or branches");
  if (p.prefetch.p_l1 != 0 || p.prefetch.p_terminal_l2 != 0)
    throw OracleDomainError("oracle requires prefetch probabilities of 0");
  if (static_cast<int>(seq.size()) > p.geo.rob_size)
    throw OracleDomainError("sequence exceeds ROB");

  const DependencyGraph g = build_dependency_graph(seq);
  const std::size_t n = seq.size();
  std::vector<Timed> t(n);

  // Producer of each register as seen by op i (latest writer before i).
  auto producer = [&](std::size_t i, Register r) -> std::optional<std::size_t> {
    for (std::size_t j = i; j-- > 0;)
      if (seq.ops[j].dst == r) return j;
    return std::nullopt;
  };
  auto reg_value = [&](std::size_t i, Register r) -> std::uint64_t {
    if (auto j = producer(i, r)) return t[*j].value;
    auto it = seq.live_ins.find(r);
    return it == seq.live_ins.end() ? 0 : it->second;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const MicroOp& op = seq.ops[i];
    Timed& x = t[i];
    x.issue = static_cast<Cycle>(i) / p.geo.issue_width;

    Cycle start = x.issue + 1;
    bool blocked = false;
    for (std::size_t j : g.deps[i]) {
      if (!t[j].forwards) blocked = true;
      else start = std::max(start, t[j].complete);
    }
    if (blocked) continue;
    x.dispatch = start;

    auto src = [&](std::size_t k) { return reg_value(i, op.srcs.at(k)); };
    std::optional<Cycle> latency;
    std::vector<CheckOutcome> checks;
    switch (op.kind) {
      case OpKind::AluAdd:
      case OpKind::AluSub: {
        std::uint64_t rhs = op.imm ? static_cast<std::uint64_t>(*op.imm) : src(1);
        x.value = op.kind == OpKind::AluAdd ? src(0) + rhs : src(0) - rhs;
        latency = p.exec.alu;
        break;
      }
      case OpKind::FpMovapd:
        x.value = src(0);
        latency = p.exec.fp_movapd;
        checks = op_checks(env, op, 0, p);
        break;
      case OpKind::FpAddpd:
        x.value = src(0) + src(1);
        latency = p.exec.fp_addpd;
        checks = op_checks(env, op, 0, p);
        break;
      case OpKind::FpMulpd:
        x.value = src(0) * src(1);
        latency = p.exec.fp_mulpd;
        checks = op_checks(env, op, 0, p);
        break;
      case OpKind::BoundCheck:
        x.value = src(0);
        latency = p.exec.bound;
        checks = op_checks(env, op, x.value, p);
        break;
      case OpKind::RegPrivRead: {
        auto it = env.system_registers.find(*op.sysreg);
        x.value = it == env.system_registers.end() ? 0 : it->second;
        latency = p.exec.sysreg;
        checks = op_checks(env, op, 0, p);
        break;
      }
      case OpKind::Load:
      case OpKind::Store: {
        const MemOperand& m = *op.mem;
        std::uint64_t addr = reg_value(i, m.base);
        if (m.index) addr += reg_value(i, *m.index) * m.scale;
        addr += static_cast<std::uint64_t>(m.displacement);
        const bool store = op.kind == OpKind::Store;
        auto r = access(env, store ? AccessKind::Write : AccessKind::Read, addr, m.segment, p);
        checks = r.checks;
        x.page = page_of(r.linear);
        if (store) {
          x.value = op.imm ? static_cast<std::uint64_t>(*op.imm) : src(0);
          latency = p.exec.store_forward;
        } else if (g.store_source[i]) {
          x.value = t[*g.store_source[i]].value;
          latency = p.exec.store_forward;
        } else {
          x.value = r.value;
          latency = r.data_latency;
          x.memory_access = true;
        }
        break;
      }
      case OpKind::Cpuid:
      case OpKind::BranchCond:
      case OpKind::BranchIndirect:
        break;
    }

    const CheckOutcome* fv = nullptr;
    for (const auto& c : checks) {
      if (!c.violated) continue;
      if (!fv || c.p1_time < fv->p1_time) fv = &c;
      x.no_spec = x.no_spec || !c.speculation_allowed;
    }
    if (!fv) {
      x.forwards = true;
      x.complete = x.dispatch + *latency;
      x.ready = x.complete;
      continue;
    }
    x.p1 = x.dispatch + fv->p1_time;
    if (x.no_spec) {
      x.ready = x.p1;
      continue;
    }
    x.forwards = true;
    const Cycle data = latency ? x.dispatch + *latency : kNever;
    if (latency && (data < x.p1 || (data == x.p1 && fv->tie == TieBreak::DataFirst))) {
      x.complete = data;
    } else {
      x.complete = x.p1;
      x.value = 0;
      x.zero = true;
    }
    x.ready = std::max(x.complete, x.p1);
  }

  // Retirement and P2.
  OracleResult out;
  std::vector<Cycle> retire(n, kNever);
  std::optional<std::size_t> faulting;
  for (std::size_t k = 0; k < n; ++k) {
    if (t[k].ready == kNever) break;
    Cycle r = t[k].ready + 1;
    if (k > 0) r = std::max(r, retire[k - 1]);
    if (k >= static_cast<std::size_t>(p.geo.retire_width))
      r = std::max(r, retire[k - p.geo.retire_width] + 1);
    retire[k] = r;
    if (t[k].p1 != kNever) {
      faulting = k;
      out.p2_cycle = r;
      break;
    }
  }

  out.ops.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Timed& x = t[i];
    OracleOp& o = out.ops[i];
    o.dispatch = x.dispatch;
    o.complete = x.forwards ? x.complete : kNever;
    o.p1 = x.p1;
    o.zero_forwarded = x.zero;
    o.no_speculation = x.no_spec;
    if (!faulting || i <= *faulting) continue;
    const Cycle p2 = *out.p2_cycle;
    if (x.issue >= p2) {
      o = OracleOp{.issued = false};
      continue;
    }
    o.squashed = true;
    out.squash_set.push_back(i);
    if (o.dispatch != kNever && o.dispatch >= p2) o = OracleOp{.squashed = true};
    if (o.complete > p2) o.complete = kNever;
    if (o.p1 > p2) {
      o.p1 = kNever;
      o.zero_forwarded = false;
      o.no_speculation = false;
    }
  }

  // Domain checks that need the computed schedule.
  std::map<std::pair<Cycle, int>, int> port_use;
  const int ports[3] = {p.geo.load_ports, p.geo.alu_ports, p.geo.fp_ports};
  std::map<std::uint64_t, int> pages;
  for (std::size_t i = 0; i < n; ++i) {
    const OracleOp& o = out.ops[i];
    if (o.dispatch == kNever) continue;
    int cls = port_class(seq.ops[i]);
    if (++port_use[{o.dispatch, cls}] > ports[cls])
      throw OracleDomainError("port contention at cycle " + std::to_string(o.dispatch));
    if (t[i].page && !(seq.ops[i].kind == OpKind::Load && g.store_source[i]) &&
        seq.ops[i].kind != OpKind::Store) {
      if (++pages[*t[i].page] > 1) throw OracleDomainError("two accesses to one page");
    }
  }
  // Stores count as page users too, unless every other access to that page
  // is forwarded from them.
  for (std::size_t i = 0; i < n; ++i) {
    if (seq.ops[i].kind != OpKind::Store || out.ops[i].dispatch == kNever) continue;
    if (pages.contains(*t[i].page)) throw OracleDomainError("store shares a page with a load");
  }
  return out;
}

}  // namespace speechsim
