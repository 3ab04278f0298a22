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

#include "speechsim/memsys.hpp"

#include <sstream>

namespace speechsim {

namespace {

// Width of every modeled load/store.
constexpr std::uint64_t kAccessBytes = 8;

CheckOutcome outcome(CheckId id, bool violated, Cycle translation, const ProcessorProfile& p) {
  const CheckTiming& t = p.timing(id);
  Cycle anchor_time = t.anchor == Anchor::PostTranslation ? translation : 0;
  return {.check_id = id,
          .violated = violated,
          .anchor = t.anchor,
          .p1_time = anchor_time + t.delay,
          .speculation_allowed = t.speculation_allowed,
          .tie = t.tie};
}

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

}  // namespace

std::string_view to_string(SegType t) {
  switch (t) {
    case SegType::DataRw: return "data-rw";
    case SegType::DataRo: return "data-ro";
    case SegType::CodeXo: return "code-xo";
  }
  return "?";
}

std::optional<SegType> seg_type_from_string(std::string_view s) {
  if (s == "data-rw") return SegType::DataRw;
  if (s == "data-ro") return SegType::DataRo;
  if (s == "code-xo") return SegType::CodeXo;
  return std::nullopt;
}

std::string_view to_string(AccessKind k) { return k == AccessKind::Read ? "read" : "write"; }

CacheLevel MemEnvironment::level(std::uint64_t addr) const {
  auto it = residency.find(page_of(addr));
  return it == residency.end() ? CacheLevel::Mem : it->second;
}

std::uint64_t MemEnvironment::value_at(std::uint64_t addr) const {
  auto it = mem_values.find(addr);
  return it == mem_values.end() ? 0 : it->second;
}

void MemEnvironment::map_page(std::uint64_t addr, PageTableEntry pte) {
  page_tables[page_of(addr)] = pte;
}

const SegmentDescriptor* MemEnvironment::descriptor(Segment seg) const {
  auto sel = segment_regs.find(seg);
  if (sel == segment_regs.end()) return nullptr;
  auto it = segments.find(sel->second);
  if (it == segments.end())
    throw ConfigError("segment register " + std::string(to_string(seg)) + " holds selector " +
                      hex(sel->second) + " with no descriptor");
  return &it->second;
}

bool AccessResult::faulted() const { return first_violation() != nullptr; }

bool AccessResult::no_speculation() const {
  for (const auto& c : checks)
    if (c.violated && !c.speculation_allowed) return true;
  return false;
}

const CheckOutcome* AccessResult::first_violation() const {
  const CheckOutcome* best = nullptr;
  for (const auto& c : checks)
    if (c.violated && (!best || c.p1_time < best->p1_time)) best = &c;
  return best;
}

AccessResult access(const MemEnvironment& env, AccessKind kind, std::uint64_t logical_addr,
                    Segment seg, const ProcessorProfile& profile) {
  AccessResult r;
  const bool write = kind == AccessKind::Write;

  // Segmentation: logical -> linear, checks anchored before paging.
  std::uint64_t linear = logical_addr;
  const SegmentDescriptor* desc =
      env.addr_mode == AddrMode::Bits32 ? env.descriptor(seg) : nullptr;
  std::vector<CheckOutcome> seg_checks;
  if (desc) {
    linear = desc->base + logical_addr;
    const bool is_null = desc->null_selector;
    const bool over = logical_addr + kAccessBytes > desc->limit;
    const bool xo_read = !write && desc->seg_type == SegType::CodeXo;
    const bool ro_write = write && desc->seg_type != SegType::DataRw;
    seg_checks = {outcome(CheckId::SegNull, is_null, 0, profile),
                  outcome(CheckId::SegLimit, !is_null && over, 0, profile),
                  outcome(CheckId::SegExecOnlyRead, !is_null && xo_read, 0, profile),
                  outcome(CheckId::SegReadOnlyWrite, !is_null && ro_write, 0, profile),
                  outcome(CheckId::SegNotPresent, !is_null && !desc->present, 0, profile)};
  }
  r.linear = linear;

  const std::uint64_t page = page_of(linear);
  auto pte_it = env.page_tables.find(page);
  if (pte_it == env.page_tables.end())
    throw ConfigError("access to unmapped address " + hex(linear));
  const PageTableEntry& pte = pte_it->second;

  // Translation.
  const auto& lat = profile.lat;
  if (env.dtlb_present.contains(page)) r.translation_latency = 0;
  else if (env.stlb_present.contains(page)) r.translation_latency = lat.stlb;
  else r.translation_latency = lat.stlb + (env.psc_present.contains(page) ? lat.walk_psc : lat.walk);

  r.level = env.level(linear);
  r.terminal = pte.terminal();
  r.value = env.value_at(linear);
  if (!r.terminal) {
    r.data_latency = r.translation_latency + profile.level_latency(r.level);
  } else if (r.level == CacheLevel::L1) {
    // The stale physical address in the PTE still hits a resident L1 line.
    r.data_latency = r.translation_latency + lat.l1;
  }

  r.checks = std::move(seg_checks);
  const Cycle t = r.translation_latency;
  r.checks.push_back(outcome(CheckId::PtePresent, !pte.present, t, profile));
  r.checks.push_back(outcome(CheckId::PteReserved, pte.present && pte.reserved_set, t, profile));
  if (!r.terminal) {
    const bool user = env.cpu_mode == CpuMode::User;
    const auto& fs = env.feature_state;
    const unsigned shift = 2u * (pte.pkey & 0xF);
    const bool pk_ad = (fs.pkru >> shift) & 1u;
    const bool pk_wd = (fs.pkru >> (shift + 1)) & 1u;
    r.checks.push_back(outcome(CheckId::PteUs, user && !pte.us, t, profile));
    r.checks.push_back(outcome(CheckId::PteRw, write && !pte.rw, t, profile));
    r.checks.push_back(outcome(CheckId::Smap, !user && pte.us && fs.smap_enabled, t, profile));
    r.checks.push_back(
        outcome(CheckId::Pkey, fs.pke_enabled && (pk_ad || (write && pk_wd)), t, profile));
  }
  return r;
}

std::vector<CheckOutcome> op_checks(const MemEnvironment& env, const MicroOp& op,
                                    std::uint64_t src_value, const ProcessorProfile& profile) {
  std::vector<CheckOutcome> out;
  switch (op.kind) {
    case OpKind::BoundCheck:
      if (op.seg_load) {
        const auto target = op.seg_load->target;
        auto it = env.segments.find(op.seg_load->selector);
        if (it == env.segments.end())
          throw ConfigError("segment load of unknown selector " + hex(op.seg_load->selector));
        const SegmentDescriptor& d = it->second;
        const bool ss = target == Segment::Ss;
        const bool cs = target == Segment::Cs;
        const bool null = d.null_selector;
        const bool bad_type = !null && ((ss && d.seg_type != SegType::DataRw) ||
                                        (!ss && !cs && d.seg_type == SegType::CodeXo));
        out.push_back(outcome(CheckId::SegLoadType, bad_type, 0, profile));
        out.push_back(outcome(CheckId::SegLoadNull, null && ss, 0, profile));
        out.push_back(outcome(CheckId::SegLoadNotPresent, !null && !d.present, 0, profile));
        out.push_back(outcome(CheckId::SegLoadDpl, !null && ss && d.dpl != env.cpl(), 0, profile));
      } else {
        out.push_back(outcome(CheckId::Bound, src_value > static_cast<std::uint64_t>(*op.imm), 0,
                              profile));
      }
      break;
    case OpKind::FpMovapd:
    case OpKind::FpAddpd:
    case OpKind::FpMulpd: {
      bool reads_fp = false;
      for (Register r : op.srcs) reads_fp = reads_fp || r.cls == RegClass::Fp;
      out.push_back(outcome(CheckId::Cr0Ts, reads_fp && env.feature_state.cr0_ts, 0, profile));
      break;
    }
    case OpKind::RegPrivRead: {
      const bool user = env.cpu_mode == CpuMode::User;
      const CheckId id = *op.sysreg == SysReg::Cr4 ? CheckId::Cr4Read : CheckId::MsrRead;
      out.push_back(outcome(id, user, 0, profile));
      break;
    }
    default:
      break;
  }
  return out;
}

void preload(MemEnvironment& env, std::uint64_t addr, CacheLevel level) {
  if (level == CacheLevel::Mem) env.residency.erase(page_of(addr));
  else env.residency[page_of(addr)] = level;
}

void flush_cache(MemEnvironment& env, std::uint64_t addr) { env.residency.erase(page_of(addr)); }

void preload_tlb(MemEnvironment& env, std::uint64_t addr) {
  const auto page = page_of(addr);
  env.dtlb_present.insert(page);
  env.stlb_present.insert(page);
  env.psc_present.insert(page);
}

void flush_tlb(MemEnvironment& env, std::uint64_t addr) {
  const auto page = page_of(addr);
  env.dtlb_present.erase(page);
  env.stlb_present.erase(page);
  env.psc_present.erase(page);
}

void flush_all_tlb(MemEnvironment& env) {
  env.dtlb_present.clear();
  env.stlb_present.clear();
  env.psc_present.clear();
}

void fill_after_access(MemEnvironment& env, std::uint64_t addr) {
  preload(env, addr, CacheLevel::L1);
  preload_tlb(env, addr);
}

Cycle probe_reload(const MemEnvironment& env, std::uint64_t addr, const ProcessorProfile& profile) {
  return profile.level_latency(env.level(addr));
}

void apply_prefetch_side_effect(MemEnvironment& env, std::uint64_t addr, bool terminal,
                                const PrefetchPolicy& policy, std::mt19937_64& rng) {
  const CacheLevel level = env.level(addr);
  if (terminal) {
    if (level != CacheLevel::L1 && policy.p_terminal_l2 > 0 && unit_draw(rng) < policy.p_terminal_l2)
      preload(env, addr, CacheLevel::L2);
    return;
  }
  if (level != CacheLevel::L2 && level != CacheLevel::Llc) return;
  preload(env, addr, CacheLevel::L2);
  if (policy.p_l1 > 0 && unit_draw(rng) < policy.p_l1) preload(env, addr, CacheLevel::L1);
}

}  // namespace speechsim
