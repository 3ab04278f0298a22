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

#include "speechsim/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace speechsim {

using namespace reg;

std::string_view to_string(SignalOutcome s) {
  switch (s) {
    case SignalOutcome::Correct: return "CORRECT";
    case SignalOutcome::Zero: return "ZERO";
    case SignalOutcome::None: return "NONE";
  }
  return "?";
}

std::string_view to_string(Exploit e) {
  switch (e) {
    case Exploit::Y: return "Y";
    case Exploit::N: return "N";
    case Exploit::R: return "R";
    case Exploit::NA: return "NA";
  }
  return "?";
}

int default_jobs() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

namespace {

void place(MemEnvironment& env, std::uint64_t addr, CacheLevel level, bool tlb) {
  preload(env, addr, level);
  if (tlb) preload_tlb(env, addr);
  else flush_tlb(env, addr);
}

// Alternating ADD/SUB on r, leaving its value unchanged for even n.
void addsub_chain(SeqBuilder& b, Register r, int n) {
  for (int i = 0; i < n; ++i) {
    if (i % 2 == 0) b.add_imm(r, 1);
    else b.sub_imm(r, 1);
  }
}

bool supervisor_setup(Setup s) { return s == Setup::SmapUserPage || s == Setup::PkeyKernel; }

void require_features(const VariantSpec& v, const ProcessorProfile& p) {
  for (Feature f : v.required_features)
    if (!p.has(f))
      throw Unsupported("variant " + v.id + " needs feature " + std::string(to_string(f)) +
                        " missing from profile " + p.name);
}

// Descriptor corruption for segment-register-based setups.
SegmentDescriptor corrupt_descriptor(Setup s) {
  SegmentDescriptor d;
  switch (s) {
    case Setup::SegOverLimit: d.limit = layout::kSecret; break;
    case Setup::SegNotPresent:
    case Setup::LoadNotPresentStack: d.present = false; break;
    case Setup::SegExecOnly:
    case Setup::LoadExecOnly: d.seg_type = SegType::CodeXo; break;
    case Setup::SegReadOnlyWrite:
    case Setup::LoadReadOnlyStack: d.seg_type = SegType::DataRo; break;
    case Setup::SegNull:
    case Setup::LoadNullStack: d.null_selector = true; break;
    case Setup::LoadDplStack: d.dpl = 0; break;
    default: break;
  }
  return d;
}

bool is_segment_load(Setup s) {
  return s == Setup::LoadExecOnly || s == Setup::LoadReadOnlyStack || s == Setup::LoadNullStack ||
         s == Setup::LoadNotPresentStack || s == Setup::LoadDplStack;
}

void apply_corruption(MemEnvironment& env, const VariantSpec& v, std::uint64_t secret_value) {
  PageTableEntry& pte = env.page_tables.at(layout::kSecret);
  auto& fs = env.feature_state;
  switch (v.setup) {
    case Setup::PteNotPresent: pte.present = false; break;
    case Setup::PteReserved: pte.reserved_set = true; break;
    case Setup::KernelPage: pte.us = false; break;
    case Setup::ReadCr4: env.system_registers[SysReg::Cr4] = secret_value; break;
    case Setup::ReadMsr: env.system_registers[SysReg::Msr1a2] = secret_value; break;
    case Setup::PkeyUser:
    case Setup::PkeyKernel:
      pte.us = true;
      pte.pkey = 1;
      fs.pke_enabled = true;
      fs.pkru = 1u << 2;
      break;
    case Setup::SmapUserPage:
      pte.us = true;
      fs.smap_enabled = true;
      break;
    case Setup::PteReadOnly: pte.rw = false; break;
    case Setup::LazyFp: fs.cr0_ts = true; break;
    case Setup::BoundIndex: break;
    default:
      if (is_segment_load(v.setup)) env.segments[layout::kLoadSelector] = corrupt_descriptor(v.setup);
      else env.segments[layout::kSelector] = corrupt_descriptor(v.setup);
      break;
  }
}

void emit_primitive(SeqBuilder& b, const VariantSpec& v, const TestCase& tc) {
  const Segment seg = v.addr_mode == AddrMode::Bits32 ? v.segment : Segment::Ds;
  switch (v.tmpl) {
    case Template::OneInstrLoad:
      b.load(rax, mem_at(rdi, 0, seg));
      break;
    case Template::TwoInstrStoreLoad:
      b.store_imm(static_cast<std::int64_t>(tc.secret_value), mem_at(rdi, 0, seg));
      b.load(rax, mem_at(rdi, 0, seg));
      break;
    case Template::TwoInstrCheckLoad:
      if (v.setup == Setup::BoundIndex) {
        b.bound(rdx, rdx, layout::kBoundUpper);
        b.load(rax, mem_at(rdi, rdx, 1));
      } else {
        b.load_segment(rdi, rdi, v.segment, layout::kLoadSelector);
        b.load(rax, mem_at(rdi, 0, v.segment));
      }
      break;
    case Template::RegRead:
      b.read_sysreg(rax, v.setup == Setup::ReadCr4 ? SysReg::Cr4 : SysReg::Msr1a2);
      break;
    case Template::FpRegRead:
      b.movapd(rax, xmm0);
      break;
    case Template::Branch:
      throw Unsupported("branch primitives are built by the misprediction experiment");
  }
}

void emit_fp_chain(SeqBuilder& b, int cpuid_pos) {
  if (cpuid_pos < 0 || cpuid_pos > kFpChainOps)
    throw ConfigError("cpuid_pos must be in 0.." + std::to_string(kFpChainOps));
  for (int i = 0; i < kFpChainOps; ++i) {
    if (i == cpuid_pos) b.cpuid();
    switch (i % 3) {
      case 0: b.movapd(xmm1, xmm0); break;
      case 1: b.addpd(xmm0, xmm1); break;
      default: b.mulpd(xmm0, xmm1); break;
    }
  }
  if (cpuid_pos == kFpChainOps) b.cpuid();
}

}  // namespace

MemEnvironment base_environment(std::uint64_t secret_value, std::uint64_t channel_base,
                                CpuMode mode) {
  MemEnvironment env;
  env.cpu_mode = mode;
  const PageTableEntry legal{.us = mode == CpuMode::User};
  for (int i = 0; i < layout::kSlots; ++i) {
    const std::uint64_t a = channel_base + static_cast<std::uint64_t>(i) * kPageSize;
    env.map_page(a, legal);
    preload_tlb(env, a);
  }
  for (std::uint64_t a : {layout::kTwin, layout::kSecret, layout::kSecret2}) {
    env.map_page(a, legal);
    env.mem_values[a] = secret_value;
  }
  for (std::uint64_t a : {layout::kSlow1, layout::kSlow2, layout::kSlow3, layout::kBranchCond})
    env.map_page(a, legal);
  env.map_page(layout::kBranchValue, legal);
  env.mem_values[layout::kBranchValue] = secret_value;
  env.mem_values[layout::kBranchCond] = 1;
  for (int i = 0; i < layout::kMaxChase; ++i)
    env.map_page(layout::kChase + static_cast<std::uint64_t>(i) * kPageSize, legal);
  env.map_page(layout::kNullPage, PageTableEntry{.present = false, .us = legal.us});
  preload_tlb(env, layout::kNullPage);
  return env;
}

Assembled assemble(const TestCase& tc, const ProcessorProfile& p) {
  if ((tc.secret_value >> 12) >= static_cast<std::uint64_t>(layout::kSlots))
    throw ConfigError("secret value " + std::to_string(tc.secret_value) +
                      " does not select a channel slot");
  const VariantSpec* v = nullptr;
  bool fp_chain = false;
  for (const auto& g : tc.gadgets) {
    if (g.kind == GadgetKind::Primitive) v = &find_variant(g.variant_id);
    fp_chain = fp_chain || g.kind == GadgetKind::WindowingFpChain;
  }
  if (v) require_features(*v, p);
  if (v && fp_chain && v->setup == Setup::LazyFp)
    throw Unsupported("the FP windowing gadget cannot run with CR0.TS set");

  const EnvSetup& es = tc.env;
  const CpuMode mode = v && supervisor_setup(v->setup) ? CpuMode::Supervisor : CpuMode::User;
  Assembled a;
  a.secret_value = tc.secret_value;
  a.channel_base = tc.channel_base;
  a.secret_addr = es.control ? layout::kTwin : layout::kSecret;
  a.env = base_environment(tc.secret_value, tc.channel_base, mode);
  MemEnvironment& env = a.env;
  place(env, a.secret_addr, es.data_level, es.secret_tlb);
  place(env, layout::kSlow1, es.slow_level, es.slow_tlb);

  std::uint64_t bound_index = 0;
  if (v) {
    env.addr_mode = v->addr_mode;
    if (v->addr_mode == AddrMode::Bits32 && !is_segment_load(v->setup) &&
        v->setup != Setup::BoundIndex) {
      env.segments[layout::kSelector] = SegmentDescriptor{};
      env.segment_regs[v->segment] = layout::kSelector;
    }
    if (is_segment_load(v->setup)) env.segments[layout::kLoadSelector] = SegmentDescriptor{};
    if (!es.control) {
      apply_corruption(env, *v, tc.secret_value);
      if (v->setup == Setup::BoundIndex) bound_index = layout::kBoundIndex;
    }
  }

  SeqBuilder b;
  b.live_in(rsi, tc.channel_base)
      .live_in(rdi, a.secret_addr - bound_index)
      .live_in(rdx, bound_index)
      .live_in(r9, layout::kSlow1)
      .live_in(r12, layout::kChase)
      .live_in(xmm0, v && v->setup == Setup::LazyFp ? tc.secret_value : 3)
      .live_in(xmm1, 1);

  bool have_sender = false;
  for (const auto& g : tc.gadgets) {
    switch (g.kind) {
      case GadgetKind::WindowingSlowLoad:
        b.load(r8, mem_at(r9));
        break;
      case GadgetKind::WindowingFpChain:
        emit_fp_chain(b, g.cpuid_pos);
        break;
      case GadgetKind::Suppressing: {
        if (g.chase_depth < 1 || g.chase_depth > layout::kMaxChase)
          throw ConfigError("chase depth must be in 1.." + std::to_string(layout::kMaxChase));
        for (int i = 0; i < g.chase_depth; ++i) {
          const std::uint64_t page = layout::kChase + static_cast<std::uint64_t>(i) * kPageSize;
          env.mem_values[page] = i + 1 < g.chase_depth ? page + kPageSize : layout::kNullPage;
          place(env, page, CacheLevel::L2, true);
          b.load(r12, mem_at(r12));
        }
        b.load(r13, mem_at(r12));
        break;
      }
      case GadgetKind::Primitive:
        emit_primitive(b, *v, tc);
        break;
      case GadgetKind::DisclosureI:
      case GadgetKind::DisclosureII:
        if (have_sender) throw ConfigError("test case has two disclosure gadgets");
        addsub_chain(b, rax, g.kind == GadgetKind::DisclosureII ? g.addsub_count : 0);
        a.sender = b.size();
        b.load(rbx, mem_at(rsi, rax, 1));
        have_sender = true;
        break;
    }
  }
  a.seq = b.build();
  return a;
}

Cycle channel_threshold(const ProcessorProfile& p) { return (p.lat.l1 + p.lat.llc) / 2; }

SignalOutcome classify(const MemEnvironment& after, std::uint64_t channel_base,
                       std::uint64_t secret_value, const ProcessorProfile& p) {
  const Cycle th = channel_threshold(p);
  auto hit = [&](std::uint64_t slot) {
    return probe_reload(after, channel_base + slot * kPageSize, p) < th;
  };
  if (hit(secret_value >> 12)) return SignalOutcome::Correct;
  if (hit(0)) return SignalOutcome::Zero;
  return SignalOutcome::None;
}

SignalOutcome run_covert_test(const Assembled& a, const ProcessorProfile& p, std::uint64_t seed) {
  ExecTrace t = simulate(a.seq, a.env, p, seed);
  return classify(t.final_env, a.channel_base, a.secret_value, p);
}

SignalOutcome run_covert_test(const TestCase& tc, const ProcessorProfile& p, std::uint64_t seed) {
  return run_covert_test(assemble(tc, p), p, seed);
}

int WindowScan::first_none() const {
  for (std::size_t k = 0; k < outcomes.size(); ++k)
    if (outcomes[k] == SignalOutcome::None) return static_cast<int>(k);
  return -1;
}

WindowScan scan_window(const Scenario& s, const ProcessorProfile& p, int cap, std::uint64_t seed,
                       unsigned jobs) {
  WindowScan w;
  w.outcomes = parallel_map<SignalOutcome>(
      static_cast<std::size_t>(cap) + 1, jobs,
      [&](std::size_t k) { return run_covert_test(s(static_cast<int>(k)), p, seed); });
  for (std::size_t k = 0; k < w.outcomes.size(); ++k)
    if (w.outcomes[k] != SignalOutcome::None) w.window = static_cast<int>(k);
  w.no_speculation = w.outcomes[0] == SignalOutcome::None;
  const int fn = w.first_none();
  if (fn >= 0)
    w.monotone = std::all_of(w.outcomes.begin() + fn, w.outcomes.end(),
                             [](SignalOutcome o) { return o == SignalOutcome::None; });
  return w;
}

WindowScan measure_speculation_window(const TestCase& tmpl, const ProcessorProfile& p,
                                      std::uint64_t seed, unsigned jobs) {
  if (tmpl.gadgets.empty() || tmpl.gadgets.back().kind != GadgetKind::DisclosureII)
    throw ConfigError("window measurement needs a DISCLOSURE_II gadget last");
  return scan_window(
      [&](int k) {
        TestCase tc = tmpl;
        tc.gadgets.back().addsub_count = k;
        return assemble(tc, p);
      },
      p, p.geo.rob_size, seed, jobs);
}

int window_saturation_oracle(const ProcessorProfile& p) { return p.geo.rename_int_regs - 2; }

std::vector<SweepPoint> sweep_p2(const std::string& variant, const ProcessorProfile& p,
                                 std::uint64_t seed, unsigned jobs) {
  std::vector<SweepPoint> out;
  for (int pos = kFpChainOps; pos >= 0; --pos) {
    TestCase tc;
    tc.gadgets = {GadgetSpec::fp_chain(pos), GadgetSpec::primitive(variant),
                  GadgetSpec::disclosure(0)};
    WindowScan w = measure_speculation_window(tc, p, seed, jobs);
    out.push_back({pos, kFpChainOps - pos, w.window});
  }
  return out;
}

namespace {

// Covert test whose sender may not have issued; reports that separately.
struct Probe {
  SignalOutcome outcome = SignalOutcome::None;
  bool sender_issued = false;
  ExecTrace trace;
};

Probe probe(const Assembled& a, const ProcessorProfile& p, std::uint64_t seed) {
  Probe r;
  r.trace = simulate(a.seq, a.env, p, seed);
  r.outcome = classify(r.trace.final_env, a.channel_base, a.secret_value, p);
  r.sender_issued = r.trace.last_instance(a.sender) != nullptr;
  return r;
}

TestCase suppressed_case(const std::string& variant, int depth, int k, const EnvSetup& es) {
  TestCase tc;
  tc.gadgets = {GadgetSpec::suppressing(depth), GadgetSpec::primitive(variant),
                GadgetSpec::disclosure(k)};
  tc.env = es;
  return tc;
}

// Static index of the primitive's faulting (last) op in a suppressed case.
std::size_t primitive_index(const Assembled& a) { return a.sender - 1; }

}  // namespace

RelativeP1 measure_relative_p1(const std::string& variant, CacheLevel data_level, bool tlb_present,
                               const ProcessorProfile& p, std::uint64_t seed) {
  const VariantSpec& v = find_variant(variant);
  require_features(v, p);
  if (v.terminal())
    throw Unsupported("relative P1 is not defined for terminal-fault variant " + v.id);
  if (v.tmpl != Template::OneInstrLoad)
    throw Unsupported("relative P1 needs a one-instruction load primitive, " + v.id + " is " +
                      std::string(to_string(v.tmpl)));

  const EnvSetup control{.data_level = data_level, .secret_tlb = tlb_present, .control = true};
  const EnvSetup fault{.data_level = CacheLevel::Mem, .secret_tlb = tlb_present};
  const int cap = p.geo.rob_size;

  for (int depth = 1; depth <= layout::kMaxChase; ++depth) {
    auto make = [&](const EnvSetup& es) {
      return [&, es](int k) { return assemble(suppressed_case(variant, depth, k, es), p); };
    };
    if (probe(make(control)(0), p, seed).outcome == SignalOutcome::None) continue;

    WindowScan wc = scan_window(make(control), p, cap, seed);
    WindowScan wf = scan_window(make(fault), p, cap, seed);
    if (wf.no_speculation)
      throw Unsupported("variant " + v.id + " forwards nothing at P1 on profile " + p.name);
    for (const WindowScan* w : {&wc, &wf}) {
      const bool control_run = w == &wc;
      if (w->window >= cap || !probe(make(control_run ? control : fault)(w->window + 1), p, seed)
                                   .sender_issued)
        throw ConfigError("relative P1 for " + v.id + " at " + std::string(to_string(data_level)) +
                          " exceeds the in-flight capacity of profile " + p.name);
    }

    RelativeP1 r;
    const Assembled af = make(fault)(0);
    const Probe pf = probe(af, p, seed);
    const RobEntry* ef = pf.trace.last_instance(primitive_index(af));
    const Assembled ac = make(control)(0);
    const Probe pc = probe(ac, p, seed);
    const RobEntry* ec = pc.trace.last_instance(primitive_index(ac));
    if (!ef || !ef->fault || !ec || ec->complete_cycle == kNever)
      throw ConfigError("relative P1 for " + v.id + ": primitive did not execute as expected");
    r.times.chase_depth = depth;
    r.times.t_delay = ef->dispatch_cycle;
    r.times.t_p1 = ef->fault->p1_cycle - ef->dispatch_cycle;
    r.times.t_data = ec->complete_cycle - ec->dispatch_cycle;
    r.times.t_spec2 = wf.window;
    r.times.t_spec2_prime = wc.window;
    r.times.t_spec1 = r.times.t_delay + r.times.t_p1 + r.times.t_spec2;
    r.relative = r.times.t_spec2_prime - r.times.t_spec2;
    return r;
  }
  throw ConfigError("no chase depth up to " + std::to_string(layout::kMaxChase) +
                    " opens a window for " + v.id);
}

std::vector<EnvCombo> default_combos() {
  std::vector<EnvCombo> out;
  for (CacheLevel l : {CacheLevel::L1, CacheLevel::L2, CacheLevel::Llc, CacheLevel::Mem})
    for (bool tlb : {true, false}) out.push_back({l, tlb});
  return out;
}

ExploitResult exploitability(const VariantSpec& v, const ProcessorProfile& p, std::uint64_t seed,
                             const std::vector<EnvCombo>& combos) {
  ExploitResult r;
  for (Feature f : v.required_features)
    if (!p.has(f)) return r;
  bool correct = false;
  bool zero = false;
  for (const EnvCombo& c : combos) {
    TestCase tc;
    tc.gadgets = {GadgetSpec::slow_load(), GadgetSpec::primitive(v.id), GadgetSpec::disclosure()};
    tc.env.data_level = c.level;
    tc.env.secret_tlb = c.tlb_present;
    SignalOutcome o = run_covert_test(tc, p, seed);
    correct = correct || o == SignalOutcome::Correct;
    zero = zero || o == SignalOutcome::Zero;
    r.runs.emplace_back(c, o);
  }
  r.letter = correct ? Exploit::Y : zero ? Exploit::N : Exploit::R;
  return r;
}

PrefetchResult prefetch_experiment(const std::string& variant, CacheLevel initial, int rounds,
                                   const ProcessorProfile& p, std::uint64_t seed, int samples) {
  if (rounds < 0) throw ConfigError("rounds must be >= 0");
  const VariantSpec& v = find_variant(variant);
  require_features(v, p);
  PrefetchResult r;
  r.initial = initial;
  std::mt19937_64 seeds(seed);
  CacheLevel level = initial;
  for (int i = 0; i < rounds; ++i) {
    TestCase tc;
    tc.gadgets = {GadgetSpec::slow_load(), GadgetSpec::primitive(v.id), GadgetSpec::disclosure()};
    tc.env.data_level = level;
    const Assembled a = assemble(tc, p);
    const ExecTrace t = simulate(a.seq, a.env, p, seeds());
    switch (classify(t.final_env, a.channel_base, a.secret_value, p)) {
      case SignalOutcome::Correct: ++r.correct; break;
      case SignalOutcome::Zero: ++r.zero; break;
      case SignalOutcome::None: ++r.none; break;
    }
    // The probe sweep evicts a line that was L1-resident for the whole round.
    const CacheLevel after = t.final_env.level(a.secret_addr);
    level = level == CacheLevel::L1 && after == CacheLevel::L1 ? CacheLevel::L2 : after;
  }
  MemEnvironment env;
  env.map_page(layout::kSecret);
  preload(env, layout::kSecret, level);
  for (int i = 0; i < samples; ++i) ++r.histogram[probe_reload(env, layout::kSecret, p)];
  r.final_level = level;
  return r;
}

namespace {

Assembled branch_case(const ProcessorProfile& p, bool with_slow, bool taken, int k) {
  (void)p;
  Assembled a;
  a.env = base_environment(a.secret_value, a.channel_base);
  MemEnvironment& env = a.env;
  place(env, layout::kSlow1, CacheLevel::Mem, false);
  place(env, layout::kBranchCond, CacheLevel::Llc, true);
  place(env, layout::kBranchValue, CacheLevel::L1, true);
  env.mem_values[layout::kBranchCond] = taken ? 1 : 0;

  SeqBuilder b;
  b.live_in(rsi, a.channel_base)
      .live_in(r9, layout::kSlow1)
      .live_in(r10, layout::kBranchCond)
      .live_in(r11, layout::kBranchValue)
      .live_in(r13, 0);
  // One full issue group ahead of the branch, with or without the slow load.
  if (with_slow) b.load(r8, mem_at(r9));
  else b.add_imm(r13, 1);
  for (int i = 0; i < 3; ++i) b.add_imm(r13, 1);
  b.load(rdx, mem_at(r10));
  b.branch_cond(rdx, "end", "");
  b.load(rax, mem_at(r11));
  addsub_chain(b, rax, k);
  a.sender = b.size();
  b.load(rbx, mem_at(rsi, rax, 1));
  b.label("end");
  a.seq = b.build();
  return a;
}

}  // namespace

WindowScan misprediction_window(const ProcessorProfile& p, bool with_slow_windowing,
                                std::uint64_t seed, unsigned jobs) {
  return scan_window([&](int k) { return branch_case(p, with_slow_windowing, true, k); }, p,
                     p.geo.rob_size, seed, jobs);
}

int misprediction_oracle_bound(const ProcessorProfile& p) {
  // Condition and value loads dispatch together at cycle d; the branch
  // resolves (and squashes) at d + llc + branch, the value forwards at
  // d + l1, and the sender must dispatch before the squash cycle.
  const Cycle d = 2;
  const Cycle resolve = d + p.lat.llc + p.exec.branch;
  const Cycle value = d + p.lat.l1;
  return static_cast<int>((resolve - 1 - value) / p.exec.alu);
}

SignalOutcome predicted_branch_outcome(const ProcessorProfile& p, std::uint64_t seed) {
  return run_covert_test(branch_case(p, true, false, 0), p, seed);
}

std::vector<std::pair<int, SignalOutcome>> dual_primitive_test(bool same_address,
                                                               const ProcessorProfile& p,
                                                               std::uint64_t seed, unsigned jobs) {
  auto scenario = [&](int k) {
    Assembled a;
    a.env = base_environment(a.secret_value, a.channel_base);
    MemEnvironment& env = a.env;
    const std::uint64_t second = same_address ? layout::kSecret : layout::kSecret2;
    for (std::uint64_t s : {layout::kSecret, second}) {
      env.page_tables.at(s).us = false;
      place(env, s, CacheLevel::L1, true);
    }
    place(env, layout::kSlow1, CacheLevel::L2, false);
    place(env, layout::kSlow2, CacheLevel::L2, true);
    SeqBuilder b;
    b.live_in(rsi, a.channel_base)
        .live_in(rdi, layout::kSecret)
        .live_in(r15, second)
        .live_in(r9, layout::kSlow1)
        .live_in(r10, layout::kSlow2);
    b.load(r8, mem_at(r9));
    b.load(rcx, mem_at(r10));
    b.load(rax, mem_at(rdi, rcx, 1));
    addsub_chain(b, rcx, k);
    // An odd chain leaves rcx one higher.
    b.load(r14, mem_at(r15, rcx, 1, -(k % 2)));
    a.sender = b.size();
    b.load(rbx, mem_at(rsi, r14, 1));
    a.seq = b.build();
    return a;
  };
  WindowScan w = scan_window(scenario, p, p.geo.rob_size, seed, jobs);
  std::vector<std::pair<int, SignalOutcome>> out;
  for (std::size_t k = 0; k < w.outcomes.size(); ++k)
    out.emplace_back(static_cast<int>(k), w.outcomes[k]);
  return out;
}

namespace {

// Slow load feeding the primitive's address, optional pin load, chain on
// the slow register, sender keyed on the same register.
Assembled squash_case(int k, bool pin, bool secret_tlb) {
  Assembled a;
  a.env = base_environment(a.secret_value, a.channel_base);
  MemEnvironment& env = a.env;
  env.page_tables.at(layout::kSecret).us = false;
  place(env, layout::kSecret, CacheLevel::L1, secret_tlb);
  place(env, layout::kSlow1, CacheLevel::Mem, false);
  place(env, layout::kSlow3, CacheLevel::L2, false);
  SeqBuilder b;
  b.live_in(rsi, a.channel_base)
      .live_in(rdi, layout::kSecret)
      .live_in(r9, layout::kSlow1)
      .live_in(r11, layout::kSlow3);
  b.load(rcx, mem_at(r9));
  if (pin) b.load(r8, mem_at(r11, rcx, 1));
  b.load(rax, mem_at(rdi, rcx, 1));
  addsub_chain(b, rcx, k);
  a.sender = b.size();
  b.load(rbx, mem_at(rsi, rcx, 1, static_cast<std::int64_t>(a.secret_value)));
  a.seq = b.build();
  return a;
}

}  // namespace

WindowScan squash_test(const ProcessorProfile& p, std::uint64_t seed, unsigned jobs) {
  return scan_window([](int k) { return squash_case(k, false, true); }, p, p.geo.rob_size, seed,
                     jobs);
}

IndependenceResult p1_window_independence(const ProcessorProfile& p, std::uint64_t seed,
                                          unsigned jobs) {
  IndependenceResult r;
  r.window_tlb_present =
      scan_window([](int k) { return squash_case(k, true, true); }, p, p.geo.rob_size, seed, jobs)
          .window;
  r.window_tlb_flushed =
      scan_window([](int k) { return squash_case(k, true, false); }, p, p.geo.rob_size, seed, jobs)
          .window;
  return r;
}

void validate_profile(const ProcessorProfile& p) {
  lint_profile_structure(p);
  for (const auto& [id, letter] : p.expected) (void)find_variant(id);
  for (const VariantSpec& v : catalog()) {
    auto it = p.expected.find(v.id);
    if (it == p.expected.end()) continue;
    const Exploit got = exploitability(v, p, 1).letter;
    if (to_string(got) != it->second)
      throw ConfigError("profile " + p.name + ": check " + std::string(to_string(v.check_id)) +
                        " gives " + std::string(to_string(got)) + " for variant " + v.id +
                        ", profile declares " + it->second);
  }
}

ProcessorProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read profile file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  ProcessorProfile p = profile_from_json(ss.str());
  validate_profile(p);
  return p;
}

ProcessorProfile resolve_profile(const std::string& name_or_path) {
  for (const auto& p : builtin_profiles())
    if (p.name == name_or_path) return p;
  if (std::filesystem::exists(name_or_path)) return load_profile(name_or_path);
  std::vector<std::string> names;
  for (const auto& p : builtin_profiles()) names.push_back(p.name);
  throw UnknownNameError("profile", name_or_path, nearest_name(name_or_path, names));
}

}  // namespace speechsim
