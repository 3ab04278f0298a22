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

#include "speechsim/pipeline.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace speechsim {

std::string_view to_string(EntryStatus s) {
  switch (s) {
    case EntryStatus::Issued: return "issued";
    case EntryStatus::Executing: return "executing";
    case EntryStatus::Completed: return "completed";
    case EntryStatus::Retired: return "retired";
    case EntryStatus::Squashed: return "squashed";
    case EntryStatus::Excepted: return "excepted";
  }
  return "?";
}

const RobEntry* ExecTrace::last_instance(std::size_t op_index) const {
  for (auto it = entries.rbegin(); it != entries.rend(); ++it)
    if (it->op_index == op_index) return &*it;
  return nullptr;
}

namespace {

enum class Port : std::uint8_t { Mem, Alu, Fp };

Port port_of(const MicroOp& op) {
  if (op.is_memory()) return Port::Mem;
  if (op.is_fp()) return Port::Fp;
  return Port::Alu;
}

bool writes_gp(const MicroOp& op) { return op.dst && op.dst->cls == RegClass::Gp; }

struct Dyn {
  RobEntry e;
  std::vector<std::optional<std::size_t>> src_prod;
  std::optional<std::size_t> base_prod;
  std::optional<std::size_t> index_prod;
  std::optional<std::size_t> store_src;
  bool forwards = false;
  // Retire-eligible from ready + 1.
  Cycle ready = kNever;
  bool prefetch_pending = false;
  bool prefetch_terminal = false;
};

class Core {
 public:
  Core(const InstrSeq& seq, const MemEnvironment& env, const ProcessorProfile& p,
       std::uint64_t seed, const SimOptions& opts)
      : seq_(seq), env_(env), p_(p), rng_(seed), opts_(opts) {}

  ExecTrace run() {
    build_dependency_graph(seq_);  // validates live-ins
    Cycle c = 0;
    for (;;) {
      if (c > opts_.cycle_budget) {
        ExecTrace partial = finish(c);
        throw DeadlockError("cycle budget of " + std::to_string(opts_.cycle_budget) +
                                " exceeded",
                            dump_trace(partial, seq_));
      }
      active_ = false;
      writeback(c);
      resolve_branches(c);
      retire(c);
      dispatch(c);
      issue(c);
      if ((halted_ || pc_ >= seq_.size()) && in_flight_ == 0) return finish(c + 1);
      c = active_ ? c + 1 : next_event(c);
    }
  }

 private:
  void event(Cycle c, std::size_t i, std::string what) {
    events_.push_back({c, i, d_[i].e.op_index, std::move(what)});
  }

  bool live(const Dyn& x) const {
    return x.e.status != EntryStatus::Retired && x.e.status != EntryStatus::Squashed &&
           x.e.status != EntryStatus::Excepted;
  }

  bool available(std::size_t prod, Cycle c) const {
    const Dyn& x = d_[prod];
    return x.forwards && x.e.complete_cycle != kNever && x.e.complete_cycle <= c;
  }

  std::uint64_t value_of(Register r, const std::optional<std::size_t>& prod) const {
    if (prod) return d_[*prod].e.result;
    auto it = seq_.live_ins.find(r);
    return it == seq_.live_ins.end() ? 0 : it->second;
  }

  // Earliest cycle after c at which anything can change.
  Cycle next_event(Cycle c) const {
    Cycle best = std::numeric_limits<Cycle>::max();
    auto consider = [&](Cycle t) {
      if (t != kNever && t > c) best = std::min(best, t);
    };
    for (std::size_t i = head_; i < d_.size(); ++i) {
      const Dyn& x = d_[i];
      if (!live(x)) continue;
      consider(x.e.complete_cycle);
      if (x.e.fault) consider(x.e.fault->p1_cycle);
      if (x.ready != kNever) consider(x.ready + 1);
      if (x.e.status == EntryStatus::Issued) consider(x.e.issue_cycle + 1);
    }
    if (best == std::numeric_limits<Cycle>::max()) return c + 1;
    return best;
  }

  void writeback(Cycle c) {
    for (std::size_t i = head_; i < d_.size(); ++i) {
      Dyn& x = d_[i];
      if (x.e.status != EntryStatus::Executing) continue;
      if (x.prefetch_pending && x.e.fault && x.e.fault->p1_cycle <= c) {
        x.prefetch_pending = false;
        apply_prefetch_side_effect(env_, *x.e.address, x.prefetch_terminal, p_.prefetch, rng_);
      }
      if (x.e.fault && x.e.fault->p1_cycle == c) {
        event(c, i, std::string("p1 ") + std::string(to_string(x.e.fault->check_id)) +
                        (x.e.fault->no_speculation ? " no-speculation"
                         : x.e.fault->zero_forwarded ? " zero" : " data"));
        active_ = true;
      }
      if (x.forwards && x.e.complete_cycle == c) {
        event(c, i, "writeback");
        active_ = true;
      }
      if (x.ready != kNever && x.ready <= c) x.e.status = EntryStatus::Completed;
    }
  }

  void resolve_branches(Cycle c) {
    for (std::size_t i = head_; i < d_.size(); ++i) {
      Dyn& x = d_[i];
      if (!live(x) || x.e.complete_cycle != c) continue;
      const MicroOp& op = seq_.ops[x.e.op_index];
      if (!op.is_branch()) continue;
      std::size_t actual = x.e.result;
      const auto& b = *op.branch;
      std::size_t predicted =
          b.predicted_target.empty() ? x.e.op_index + 1 : seq_.resolve(b.predicted_target);
      if (actual != predicted) {
        event(c, i, "mispredict -> " + std::to_string(actual));
        squash_younger(i, c);
        pc_ = actual;
        active_ = true;
      }
    }
  }

  void retire(Cycle c) {
    int retired = 0;
    while (retired < p_.geo.retire_width) {
      while (head_ < d_.size() && !live(d_[head_])) ++head_;
      if (head_ >= d_.size()) return;
      Dyn& x = d_[head_];
      if (x.e.status == EntryStatus::Issued || x.ready == kNever || x.ready >= c) return;
      active_ = true;
      if (x.e.fault) {
        p2_ = c;
        exception_ = x.e.fault->check_id;
        exception_entry_ = head_;
        x.e.status = EntryStatus::Excepted;
        release(x);
        event(c, head_, "p2 " + std::string(to_string(x.e.fault->check_id)));
        squash_younger(head_, c);
        halted_ = true;
        return;
      }
      x.e.status = EntryStatus::Retired;
      x.e.retire_cycle = c;
      const MicroOp& op = seq_.ops[x.e.op_index];
      if (op.kind == OpKind::Store) env_.mem_values[*x.e.address] = x.e.result;
      release(x);
      event(c, head_, "retire");
      ++retired;
    }
  }

  void release(const Dyn& x) {
    const MicroOp& op = seq_.ops[x.e.op_index];
    --in_flight_;
    if (writes_gp(op)) --regs_used_;
    if (op.kind == OpKind::Cpuid) --cpuid_in_flight_;
  }

  void squash_younger(std::size_t i, Cycle c) {
    for (std::size_t j = i + 1; j < d_.size(); ++j) {
      Dyn& x = d_[j];
      if (!live(x)) continue;
      x.e.status = EntryStatus::Squashed;
      x.e.squash_cycle = c;
      if (x.e.complete_cycle > c) x.e.complete_cycle = kNever;
      if (x.e.fault && x.e.fault->p1_cycle > c) x.e.fault.reset();
      x.prefetch_pending = false;
      release(x);
      squash_set_.push_back(j);
      event(c, j, "squash");
    }
    rat_.clear();
    for (std::size_t j = 0; j < d_.size(); ++j) {
      const Dyn& x = d_[j];
      if (x.e.status == EntryStatus::Squashed || x.e.status == EntryStatus::Excepted) continue;
      if (const auto& dst = seq_.ops[x.e.op_index].dst) rat_[*dst] = j;
    }
  }

  bool operands_ready(std::size_t i, Cycle c) const {
    const Dyn& x = d_[i];
    const MicroOp& op = seq_.ops[x.e.op_index];
    if (op.kind == OpKind::Cpuid) {
      for (std::size_t j = 0; j < i; ++j) {
        const Dyn& y = d_[j];
        if (y.e.status == EntryStatus::Squashed || y.e.status == EntryStatus::Retired) continue;
        if (!available(j, c)) return false;
      }
    }
    for (const auto& p : x.src_prod)
      if (p && !available(*p, c)) return false;
    if (x.base_prod && !available(*x.base_prod, c)) return false;
    if (x.index_prod && !available(*x.index_prod, c)) return false;
    // Ops younger than a CPUID are only issued once it has retired.
    if (x.store_src && !available(*x.store_src, c)) return false;
    return true;
  }

  void dispatch(Cycle c) {
    int ports[3] = {p_.geo.load_ports, p_.geo.alu_ports, p_.geo.fp_ports};
    for (std::size_t i = head_; i < d_.size(); ++i) {
      Dyn& x = d_[i];
      if (x.e.status != EntryStatus::Issued || x.e.issue_cycle >= c) continue;
      int& free = ports[static_cast<int>(port_of(seq_.ops[x.e.op_index]))];
      if (free == 0 || !operands_ready(i, c)) continue;
      --free;
      execute(i, c);
      active_ = true;
    }
  }

  std::uint64_t effective_address(const Dyn& x, const MemOperand& m) const {
    std::uint64_t a = value_of(m.base, x.base_prod);
    if (m.index) a += value_of(*m.index, x.index_prod) * m.scale;
    return a + static_cast<std::uint64_t>(m.displacement);
  }

  void execute(std::size_t i, Cycle c) {
    Dyn& x = d_[i];
    const MicroOp& op = seq_.ops[x.e.op_index];
    x.e.dispatch_cycle = c;
    x.e.status = EntryStatus::Executing;
    event(c, i, "dispatch");

    auto src = [&](std::size_t k) { return value_of(op.srcs.at(k), x.src_prod.at(k)); };
    const auto& ex = p_.exec;
    std::optional<Cycle> latency;
    std::vector<CheckOutcome> checks;
    std::uint64_t value = 0;
    bool is_load_fetch = false;
    bool terminal = false;

    switch (op.kind) {
      case OpKind::AluAdd:
      case OpKind::AluSub: {
        std::uint64_t rhs = op.imm ? static_cast<std::uint64_t>(*op.imm) : src(1);
        value = op.kind == OpKind::AluAdd ? src(0) + rhs : src(0) - rhs;
        latency = ex.alu;
        break;
      }
      case OpKind::FpMovapd:
        value = src(0);
        latency = ex.fp_movapd;
        checks = op_checks(env_, op, 0, p_);
        break;
      case OpKind::FpAddpd:
        value = src(0) + src(1);
        latency = ex.fp_addpd;
        checks = op_checks(env_, op, 0, p_);
        break;
      case OpKind::FpMulpd:
        value = src(0) * src(1);
        latency = ex.fp_mulpd;
        checks = op_checks(env_, op, 0, p_);
        break;
      case OpKind::Cpuid:
        latency = ex.cpuid;
        break;
      case OpKind::BranchCond: {
        const auto& b = *op.branch;
        value = src(0) != 0 ? seq_.resolve(b.taken_target) : x.e.op_index + 1;
        latency = ex.branch;
        break;
      }
      case OpKind::BranchIndirect:
        value = std::min<std::uint64_t>(src(0), seq_.size());
        latency = ex.branch;
        break;
      case OpKind::BoundCheck:
        value = src(0);
        latency = ex.bound;
        checks = op_checks(env_, op, value, p_);
        break;
      case OpKind::RegPrivRead: {
        auto it = env_.system_registers.find(*op.sysreg);
        value = it == env_.system_registers.end() ? 0 : it->second;
        latency = ex.sysreg;
        checks = op_checks(env_, op, 0, p_);
        break;
      }
      case OpKind::Load:
      case OpKind::Store: {
        const bool store = op.kind == OpKind::Store;
        auto r = access(env_, store ? AccessKind::Write : AccessKind::Read,
                        effective_address(x, *op.mem), op.mem->segment, p_);
        x.e.address = r.linear;
        checks = std::move(r.checks);
        if (store) {
          value = op.imm ? static_cast<std::uint64_t>(*op.imm) : src(0);
          latency = ex.store_forward;
        } else if (x.store_src) {
          value = d_[*x.store_src].e.result;
          latency = ex.store_forward;
        } else {
          value = r.value;
          latency = r.data_latency;
          is_load_fetch = true;
          terminal = r.terminal;
        }
        break;
      }
    }

    const CheckOutcome* fv = nullptr;
    bool no_spec = false;
    for (const auto& ch : checks) {
      if (!ch.violated) continue;
      if (!fv || ch.p1_time < fv->p1_time) fv = &ch;
      no_spec = no_spec || !ch.speculation_allowed;
    }

    if (!fv) {
      x.forwards = true;
      x.e.result = value;
      x.e.complete_cycle = c + *latency;
      x.ready = x.e.complete_cycle;
      if (is_load_fetch) fill_after_access(env_, *x.e.address);
      return;
    }

    const Cycle p1 = c + fv->p1_time;
    FaultRecord f{.check_id = fv->check_id, .p1_cycle = p1};
    if (no_spec) {
      f.no_speculation = true;
      x.forwards = false;
      x.ready = p1;
    } else {
      const bool data_first = latency && (c + *latency < p1 ||
                                          (c + *latency == p1 && fv->tie == TieBreak::DataFirst));
      x.forwards = true;
      if (data_first) {
        x.e.result = value;
        x.e.complete_cycle = c + *latency;
      } else {
        f.zero_forwarded = true;
        x.e.result = 0;
        x.e.complete_cycle = p1;
        if (is_load_fetch) {
          x.prefetch_pending = true;
          x.prefetch_terminal = terminal;
        }
      }
      x.ready = std::max(x.e.complete_cycle, p1);
    }
    x.e.fault = f;
  }

  void issue(Cycle c) {
    for (int n = 0; n < p_.geo.issue_width; ++n) {
      if (halted_ || pc_ >= seq_.size() || cpuid_in_flight_ > 0) return;
      if (in_flight_ >= p_.geo.rob_size) return;
      const MicroOp& op = seq_.ops[pc_];
      if (writes_gp(op) && regs_used_ >= p_.geo.rename_int_regs) return;

      Dyn x;
      x.e.op_index = pc_;
      x.e.issue_cycle = c;
      auto producer = [&](Register r) -> std::optional<std::size_t> {
        auto it = rat_.find(r);
        if (it == rat_.end()) return std::nullopt;
        return it->second;
      };
      for (Register r : op.srcs) x.src_prod.push_back(producer(r));
      if (op.mem) {
        x.base_prod = producer(op.mem->base);
        if (op.mem->index) x.index_prod = producer(*op.mem->index);
      }
      if (op.kind == OpKind::Load) {
        for (std::size_t j = d_.size(); j-- > 0;) {
          const Dyn& y = d_[j];
          if (y.e.status == EntryStatus::Squashed || y.e.status == EntryStatus::Excepted) continue;
          const MicroOp& so = seq_.ops[y.e.op_index];
          if (so.kind == OpKind::Store && *so.mem == *op.mem && y.base_prod == x.base_prod &&
              y.index_prod == x.index_prod) {
            x.store_src = j;
            break;
          }
        }
      }
      const std::size_t id = d_.size();
      d_.push_back(std::move(x));
      if (op.dst) rat_[*op.dst] = id;
      ++in_flight_;
      if (writes_gp(op)) ++regs_used_;
      if (op.kind == OpKind::Cpuid) ++cpuid_in_flight_;
      event(c, id, "issue");
      active_ = true;

      std::size_t next = pc_ + 1;
      if (op.is_branch() && !op.branch->predicted_target.empty())
        next = seq_.resolve(op.branch->predicted_target);
      pc_ = next;
    }
  }

  ExecTrace finish(Cycle cycles) {
    ExecTrace t;
    for (const auto& x : d_) t.entries.push_back(x.e);
    t.p2_cycle = p2_;
    t.squash_set = squash_set_;
    t.exception = exception_;
    t.exception_entry = exception_entry_;
    t.final_env = env_;
    t.cycles = cycles;
    t.events = events_;
    return t;
  }

  const InstrSeq& seq_;
  MemEnvironment env_;
  const ProcessorProfile& p_;
  std::mt19937_64 rng_;
  SimOptions opts_;

  std::vector<Dyn> d_;
  std::vector<TraceEvent> events_;
  std::map<Register, std::size_t> rat_;
  std::size_t pc_ = 0;
  std::size_t head_ = 0;
  bool halted_ = false;
  bool active_ = false;
  int in_flight_ = 0;
  int regs_used_ = 0;
  int cpuid_in_flight_ = 0;
  std::optional<Cycle> p2_;
  std::optional<CheckId> exception_;
  std::optional<std::size_t> exception_entry_;
  std::vector<std::size_t> squash_set_;
};

}  // namespace

ExecTrace simulate(const InstrSeq& seq, const MemEnvironment& env, const ProcessorProfile& profile,
                   std::uint64_t seed, const SimOptions& opts) {
  Core core(seq, env, profile, seed, opts);
  return core.run();
}

std::string dump_trace(const ExecTrace& trace, const InstrSeq& seq) {
  std::ostringstream os;
  for (const auto& ev : trace.events)
    os << ev.cycle << ' ' << ev.entry << ' ' << ev.op_index << ' ' << ev.what << " | "
       << format_op(seq.ops.at(ev.op_index)) << '\n';
  if (trace.p2_cycle) os << "p2 " << *trace.p2_cycle << '\n';
  return os.str();
}

}  // namespace speechsim
