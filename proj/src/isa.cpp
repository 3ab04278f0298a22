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

#include "speechsim/isa.hpp"

#include <algorithm>
#include <array>

namespace speechsim {

namespace {

constexpr std::array<std::string_view, 16> kGpNames = {
    "rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rbp", "rsp",
    "r8",  "r9",  "r10", "r11", "r12", "r13", "r14", "r15"};

constexpr std::array<std::pair<OpKind, std::string_view>, 12> kOpNames = {{
    {OpKind::AluAdd, "ALU_ADD"},
    {OpKind::AluSub, "ALU_SUB"},
    {OpKind::Load, "LOAD"},
    {OpKind::Store, "STORE"},
    {OpKind::FpMovapd, "FP_MOVAPD"},
    {OpKind::FpAddpd, "FP_ADDPD"},
    {OpKind::FpMulpd, "FP_MULPD"},
    {OpKind::Cpuid, "CPUID"},
    {OpKind::BranchCond, "BRANCH_COND"},
    {OpKind::BranchIndirect, "BRANCH_INDIRECT"},
    {OpKind::BoundCheck, "BOUND_CHECK"},
    {OpKind::RegPrivRead, "REG_PRIV_READ"},
}};

constexpr std::array<std::pair<Segment, std::string_view>, 5> kSegNames = {{
    {Segment::Ds, "ds"},
    {Segment::Ss, "ss"},
    {Segment::Cs, "cs"},
    {Segment::Es, "es"},
    {Segment::Fs, "fs"},
}};

}  // namespace

std::string Register::name() const {
  if (cls == RegClass::Gp) return std::string(kGpNames.at(index));
  return "xmm" + std::to_string(index);
}

std::string_view to_string(OpKind k) {
  for (const auto& [kind, name] : kOpNames)
    if (kind == k) return name;
  return "?";
}

std::optional<OpKind> op_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kOpNames)
    if (name == s) return kind;
  return std::nullopt;
}

std::string_view to_string(Segment s) {
  for (const auto& [seg, name] : kSegNames)
    if (seg == s) return name;
  return "?";
}

std::optional<Segment> segment_from_string(std::string_view s) {
  for (const auto& [seg, name] : kSegNames)
    if (name == s) return seg;
  return std::nullopt;
}

std::string_view to_string(SysReg r) { return r == SysReg::Cr4 ? "cr4" : "msr1a2"; }

std::optional<SysReg> sysreg_from_string(std::string_view s) {
  if (s == "cr4") return SysReg::Cr4;
  if (s == "msr1a2") return SysReg::Msr1a2;
  return std::nullopt;
}

std::vector<Register> MicroOp::reads() const {
  std::vector<Register> out = srcs;
  if (mem) {
    out.push_back(mem->base);
    if (mem->index) out.push_back(*mem->index);
  }
  return out;
}

ParseError::ParseError(int line, const std::string& msg)
    : IsaError("line " + std::to_string(line) + ": " + msg), line_(line) {}

std::size_t InstrSeq::resolve(const std::string& label) const {
  auto it = labels.find(label);
  if (it == labels.end()) throw IsaError("unknown label '" + label + "'");
  return it->second;
}

// --- builder ---------------------------------------------------------------

MemOperand mem_at(Register base, std::int64_t disp, Segment seg) {
  MemOperand m;
  m.base = base;
  m.displacement = disp;
  m.segment = seg;
  return m;
}

MemOperand mem_at(Register base, Register index, std::uint8_t scale, std::int64_t disp,
                  Segment seg) {
  MemOperand m = mem_at(base, disp, seg);
  m.index = index;
  m.scale = scale;
  return m;
}

SeqBuilder& SeqBuilder::live_in(Register r, std::uint64_t value) {
  seq_.live_ins[r] = value;
  return *this;
}

SeqBuilder& SeqBuilder::label(const std::string& name) {
  if (seq_.labels.contains(name)) throw IsaError("duplicate label '" + name + "'");
  seq_.labels[name] = seq_.ops.size();
  return *this;
}

SeqBuilder& SeqBuilder::op(MicroOp op) {
  seq_.ops.push_back(std::move(op));
  return *this;
}

SeqBuilder& SeqBuilder::add_imm(Register r, std::int64_t imm) {
  return op({.kind = OpKind::AluAdd, .srcs = {r}, .dst = r, .imm = imm});
}

SeqBuilder& SeqBuilder::sub_imm(Register r, std::int64_t imm) {
  return op({.kind = OpKind::AluSub, .srcs = {r}, .dst = r, .imm = imm});
}

SeqBuilder& SeqBuilder::add_reg(Register dst, Register src) {
  return op({.kind = OpKind::AluAdd, .srcs = {dst, src}, .dst = dst});
}

SeqBuilder& SeqBuilder::load(Register dst, MemOperand mem) {
  return op({.kind = OpKind::Load, .dst = dst, .mem = mem});
}

SeqBuilder& SeqBuilder::store_imm(std::int64_t value, MemOperand mem) {
  return op({.kind = OpKind::Store, .mem = mem, .imm = value});
}

SeqBuilder& SeqBuilder::store_reg(Register value, MemOperand mem) {
  return op({.kind = OpKind::Store, .srcs = {value}, .mem = mem});
}

SeqBuilder& SeqBuilder::movapd(Register dst, Register src) {
  return op({.kind = OpKind::FpMovapd, .srcs = {src}, .dst = dst});
}

SeqBuilder& SeqBuilder::addpd(Register dst, Register src) {
  return op({.kind = OpKind::FpAddpd, .srcs = {dst, src}, .dst = dst});
}

SeqBuilder& SeqBuilder::mulpd(Register dst, Register src) {
  return op({.kind = OpKind::FpMulpd, .srcs = {dst, src}, .dst = dst});
}

SeqBuilder& SeqBuilder::cpuid() { return op({.kind = OpKind::Cpuid}); }

SeqBuilder& SeqBuilder::branch_cond(Register cond, const std::string& taken,
                                    const std::string& predicted) {
  return op({.kind = OpKind::BranchCond,
             .srcs = {cond},
             .branch = BranchMeta{.predicted_target = predicted, .taken_target = taken}});
}

SeqBuilder& SeqBuilder::branch_indirect(Register target, const std::string& predicted) {
  return op({.kind = OpKind::BranchIndirect,
             .srcs = {target},
             .branch = BranchMeta{.predicted_target = predicted, .taken_target = {}}});
}

SeqBuilder& SeqBuilder::bound(Register dst, Register index, std::int64_t upper) {
  return op({.kind = OpKind::BoundCheck, .srcs = {index}, .dst = dst, .imm = upper});
}

SeqBuilder& SeqBuilder::load_segment(Register dst, Register passthrough, Segment target,
                                     std::uint16_t selector) {
  return op({.kind = OpKind::BoundCheck,
             .srcs = {passthrough},
             .dst = dst,
             .seg_load = SegmentLoad{.target = target, .selector = selector}});
}

SeqBuilder& SeqBuilder::read_sysreg(Register dst, SysReg which) {
  return op({.kind = OpKind::RegPrivRead, .dst = dst, .sysreg = which});
}

InstrSeq SeqBuilder::build() const {
  for (const auto& op : seq_.ops) {
    if (!op.branch) continue;
    for (const auto* l : {&op.branch->predicted_target, &op.branch->taken_target})
      if (!l->empty() && !seq_.labels.contains(*l))
        throw IsaError("branch references unknown label '" + *l + "'");
  }
  return seq_;
}

// --- dependency graph --------------------------------------------------------

DependencyGraph build_dependency_graph(const InstrSeq& seq) {
  if (seq.empty()) throw IsaError("empty instruction sequence");

  const std::size_t n = seq.size();
  DependencyGraph g;
  g.deps.resize(n);
  g.store_source.resize(n);

  std::map<Register, std::size_t> last_writer;
  // Producer snapshot of each store's address registers, for forwarding.
  struct StoreInfo {
    std::size_t index;
    MemOperand mem;
    std::optional<std::size_t> base_producer;
    std::optional<std::size_t> index_producer;
  };
  std::vector<StoreInfo> stores;
  std::optional<std::size_t> last_cpuid;

  auto producer_of = [&](Register r) -> std::optional<std::size_t> {
    auto it = last_writer.find(r);
    if (it == last_writer.end()) return std::nullopt;
    return it->second;
  };

  for (std::size_t j = 0; j < n; ++j) {
    const MicroOp& op = seq.ops[j];
    auto& deps = g.deps[j];

    for (Register r : op.reads()) {
      if (auto p = producer_of(r)) {
        deps.push_back(*p);
      } else if (!seq.live_ins.contains(r)) {
        throw IsaError("op " + std::to_string(j) + " (" + format_op(op) + ") reads register %" +
                       r.name() + " which is never written and not declared live-in");
      }
    }

    if (op.kind == OpKind::Cpuid) {
      for (std::size_t i = 0; i < j; ++i) deps.push_back(i);
    } else if (last_cpuid) {
      deps.push_back(*last_cpuid);
    }

    if (op.kind == OpKind::Load) {
      auto bp = producer_of(op.mem->base);
      auto ip = op.mem->index ? producer_of(*op.mem->index) : std::nullopt;
      for (auto it = stores.rbegin(); it != stores.rend(); ++it) {
        if (it->mem == *op.mem && it->base_producer == bp && it->index_producer == ip) {
          deps.push_back(it->index);
          g.store_source[j] = it->index;
          break;
        }
      }
    }

    std::sort(deps.begin(), deps.end());
    deps.erase(std::unique(deps.begin(), deps.end()), deps.end());

    if (op.kind == OpKind::Store) {
      stores.push_back({j, *op.mem, producer_of(op.mem->base),
                        op.mem->index ? producer_of(*op.mem->index) : std::nullopt});
    }
    if (op.kind == OpKind::Cpuid) last_cpuid = j;
    if (op.dst) last_writer[*op.dst] = j;
  }
  return g;
}

std::size_t DependencyGraph::longest_path(std::size_t from, std::size_t to) const {
  if (to < from) return 0;
  // dist[k] = longest edge count from `from` to k, or -1 if unreachable.
  std::vector<long> dist(to + 1, -1);
  dist[from] = 0;
  for (std::size_t k = from + 1; k <= to; ++k)
    for (std::size_t p : deps[k])
      if (p >= from && dist[p] >= 0) dist[k] = std::max(dist[k], dist[p] + 1);
  return dist[to] < 0 ? 0 : static_cast<std::size_t>(dist[to]);
}

InstrSeq effective_gadget_after_cpuid(const InstrSeq& seq) {
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < seq.size(); ++i)
    if (seq.ops[i].kind == OpKind::Cpuid) last = i;
  if (!last) return seq;

  InstrSeq out;
  const std::size_t start = *last + 1;
  out.ops.assign(seq.ops.begin() + static_cast<std::ptrdiff_t>(start), seq.ops.end());
  for (const auto& [name, idx] : seq.labels)
    if (idx >= start) out.labels[name] = idx - start;
  out.live_ins = seq.live_ins;
  return out;
}

}  // namespace speechsim
