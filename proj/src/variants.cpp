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

#include "speechsim/variants.hpp"

#include <algorithm>
#include <cctype>

namespace speechsim {

std::string_view to_string(Template t) {
  switch (t) {
    case Template::OneInstrLoad: return "one-instr-load";
    case Template::TwoInstrStoreLoad: return "two-instr-store-load";
    case Template::TwoInstrCheckLoad: return "two-instr-check-load";
    case Template::RegRead: return "reg-read";
    case Template::FpRegRead: return "fp-reg-read";
    case Template::Branch: return "branch";
  }
  return "?";
}

namespace {

using F = Feature;
using T = Template;
using C = CheckId;

VariantSpec v(std::string id, std::string name, T t, C c, std::set<Feature> feats, AddrMode am,
              Segment seg, Setup setup, std::string directives) {
  return {std::move(id), std::move(name), t, c, std::move(feats), am, seg, setup,
          std::move(directives)};
}

std::vector<VariantSpec> make_catalog() {
  constexpr auto b64 = AddrMode::Bits64;
  constexpr auto b32 = AddrMode::Bits32;
  const std::set<Feature> seg32 = {F::Segmentation32};
  return {
      v("pte-present", "PTE (Present)", T::OneInstrLoad, C::PtePresent, {F::Tsx}, b64,
        Segment::Ds, Setup::PteNotPresent, "secret page present=0"),
      v("pte-reserved", "PTE (Reserved)", T::OneInstrLoad, C::PteReserved, {F::Tsx}, b64,
        Segment::Ds, Setup::PteReserved, "secret page reserved bit set"),
      v("pte-us", "PTE (US)", T::OneInstrLoad, C::PteUs, {}, b64, Segment::Ds,
        Setup::KernelPage, "secret page us=0, user mode"),
      v("load-cr4", "Load CR4", T::RegRead, C::Cr4Read, {}, b64, Segment::Ds, Setup::ReadCr4,
        "read cr4 from user mode"),
      v("load-msr", "Load MSR", T::RegRead, C::MsrRead, {F::Msr1a2}, b64, Segment::Ds,
        Setup::ReadMsr, "read msr 0x1a2 from user mode"),
      v("pkey-user", "Protection Key (User)", T::OneInstrLoad, C::Pkey, {F::Pke}, b64,
        Segment::Ds, Setup::PkeyUser, "user page with pkey 1, pkru access-disable"),
      v("pkey-kernel", "Protection Key (Kernel)", T::OneInstrLoad, C::Pkey, {F::Pke}, b64,
        Segment::Ds, Setup::PkeyKernel, "supervisor access, user page with pkey 1 disabled"),
      v("smap", "SMAP violation", T::OneInstrLoad, C::Smap, {F::Smap}, b64, Segment::Ds,
        Setup::SmapUserPage, "supervisor mode, smap on, user page"),
      v("pte-rw", "PTE write RW=0", T::TwoInstrStoreLoad, C::PteRw, {}, b64, Segment::Ds,
        Setup::PteReadOnly, "store to rw=0 page, dependent load"),
      v("cr0-ts", "Load xmm0 (CR0.TS)", T::FpRegRead, C::Cr0Ts, {F::LazyFp}, b64, Segment::Ds,
        Setup::LazyFp, "cr0.ts=1, xmm0 holds the secret"),
      v("bound", "BOUND (32-bit)", T::TwoInstrCheckLoad, C::Bound, seg32, b32, Segment::Ds,
        Setup::BoundIndex, "index above bound, dependent load"),
      v("ds-over-limit", "DS Over-Limit", T::OneInstrLoad, C::SegLimit, seg32, b32, Segment::Fs,
        Setup::SegOverLimit, "data segment limit below the secret"),
      v("ss-over-limit", "SS Over-Limit", T::OneInstrLoad, C::SegLimit, seg32, b32, Segment::Ss,
        Setup::SegOverLimit, "stack segment limit below the secret"),
      v("ds-not-present", "DS Not-Present", T::OneInstrLoad, C::SegNotPresent, seg32, b32,
        Segment::Fs, Setup::SegNotPresent, "data segment descriptor present=0"),
      v("ss-not-present", "SS Not-Present", T::TwoInstrCheckLoad, C::SegLoadNotPresent, seg32,
        b32, Segment::Ss, Setup::LoadNotPresentStack, "load ss with a not-present descriptor"),
      v("ds-execute-only", "DS Execute-Only", T::TwoInstrCheckLoad, C::SegLoadType, seg32, b32,
        Segment::Fs, Setup::LoadExecOnly, "load data segment with an execute-only selector"),
      v("cs-execute-only", "CS Execute-Only", T::OneInstrLoad, C::SegExecOnlyRead, seg32, b32,
        Segment::Cs, Setup::SegExecOnly, "read through an execute-only code segment"),
      v("ds-read-only", "DS Read-Only (write)", T::TwoInstrStoreLoad, C::SegReadOnlyWrite, seg32,
        b32, Segment::Fs, Setup::SegReadOnlyWrite, "store through read-only data segment"),
      v("ss-read-only", "SS Read-Only", T::TwoInstrCheckLoad, C::SegLoadType, seg32, b32,
        Segment::Ss, Setup::LoadReadOnlyStack, "load ss with a read-only selector"),
      v("ds-null", "DS Null", T::OneInstrLoad, C::SegNull, seg32, b32, Segment::Fs,
        Setup::SegNull, "access through a null data segment"),
      v("ss-null", "SS Null", T::TwoInstrCheckLoad, C::SegLoadNull, seg32, b32, Segment::Ss,
        Setup::LoadNullStack, "load ss with the null selector"),
      v("ss-dpl", "SS DPL!=CPL", T::TwoInstrCheckLoad, C::SegLoadDpl, seg32, b32, Segment::Ss,
        Setup::LoadDplStack, "load ss with a dpl=0 selector at cpl 3"),
  };
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

CheckTiming allowed(Anchor a, Cycle delay, TieBreak tie = TieBreak::DataFirst) {
  return {.speculation_allowed = true, .anchor = a, .delay = delay, .tie = tie};
}

CheckTiming blocked(Anchor a, Cycle delay) {
  return {.speculation_allowed = false, .anchor = a, .delay = delay, .tie = TieBreak::DataFirst};
}

}  // namespace

const std::vector<VariantSpec>& catalog() {
  static const std::vector<VariantSpec> c = make_catalog();
  return c;
}

UnknownNameError::UnknownNameError(const std::string& kind, const std::string& name,
                                   const std::string& suggestion)
    : ConfigError("unknown " + kind + " '" + name + "'" +
                  (suggestion.empty() ? "" : "; did you mean '" + suggestion + "'?")),
      suggestion_(suggestion) {}

std::string nearest_name(const std::string& query, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& c : candidates) {
    auto d = edit_distance(lower(query), lower(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

const VariantSpec& find_variant(const std::string& id) {
  for (const auto& v : catalog())
    if (v.id == id) return v;
  std::vector<std::string> ids;
  for (const auto& v : catalog()) ids.push_back(v.id);
  throw UnknownNameError("variant", id, nearest_name(id, ids));
}

ProcessorProfile intel_client_profile() {
  constexpr auto PT = Anchor::PostTranslation;
  constexpr auto PS = Anchor::PostSegmentation;
  constexpr auto AD = Anchor::AtDispatch;
  ProcessorProfile p;
  p.name = "intel-client";
  p.features = {F::Tsx, F::Smap, F::LazyFp, F::Msr1a2, F::Segmentation32};
  p.checks = {
      {C::SegNull, allowed(PS, 4, TieBreak::FaultFirst)},
      {C::SegLimit, allowed(PS, 4, TieBreak::FaultFirst)},
      {C::SegExecOnlyRead, blocked(PS, 4)},
      {C::SegReadOnlyWrite, allowed(PS, 4)},
      {C::SegNotPresent, blocked(PS, 4)},
      {C::SegLoadType, blocked(AD, 4)},
      {C::SegLoadNull, blocked(AD, 4)},
      {C::SegLoadNotPresent, blocked(AD, 4)},
      {C::SegLoadDpl, blocked(AD, 4)},
      {C::PtePresent, allowed(PT, 4)},
      {C::PteReserved, allowed(PT, 4)},
      {C::PteUs, allowed(PT, 4)},
      {C::PteRw, allowed(PT, 4)},
      {C::Smap, allowed(PT, 4)},
      {C::Pkey, allowed(PT, 4)},
      {C::Cr0Ts, allowed(AD, 4)},
      {C::Bound, allowed(AD, 40)},
      {C::Cr4Read, blocked(AD, 4)},
      {C::MsrRead, blocked(AD, 4)},
  };
  p.expected = {
      {"pte-present", "Y"},     {"pte-reserved", "Y"},   {"pte-us", "Y"},
      {"load-cr4", "R"},        {"load-msr", "R"},       {"pkey-user", "NA"},
      {"pkey-kernel", "NA"},    {"smap", "Y"},           {"pte-rw", "Y"},
      {"cr0-ts", "Y"},          {"bound", "Y"},          {"ds-over-limit", "N"},
      {"ss-over-limit", "N"},   {"ds-not-present", "R"}, {"ss-not-present", "R"},
      {"ds-execute-only", "R"}, {"cs-execute-only", "R"}, {"ds-read-only", "Y"},
      {"ss-read-only", "R"},    {"ds-null", "N"},        {"ss-null", "R"},
      {"ss-dpl", "R"},
  };
  return p;
}

ProcessorProfile amd_epyc_profile() {
  constexpr auto PT = Anchor::PostTranslation;
  constexpr auto PS = Anchor::PostSegmentation;
  constexpr auto AD = Anchor::AtDispatch;
  ProcessorProfile p;
  p.name = "amd-epyc";
  p.features = {F::Smap, F::Segmentation32};
  p.checks = {
      {C::SegNull, blocked(PS, 4)},
      {C::SegLimit, allowed(PS, 8)},
      {C::SegExecOnlyRead, blocked(PS, 4)},
      {C::SegReadOnlyWrite, blocked(PS, 4)},
      {C::SegNotPresent, blocked(PS, 4)},
      {C::SegLoadType, blocked(AD, 4)},
      {C::SegLoadNull, blocked(AD, 4)},
      {C::SegLoadNotPresent, blocked(AD, 4)},
      {C::SegLoadDpl, blocked(AD, 4)},
      {C::PtePresent, allowed(PT, 4)},
      {C::PteReserved, allowed(PT, 4)},
      {C::PteUs, blocked(PT, 4)},
      {C::PteRw, blocked(PT, 4)},
      {C::Smap, allowed(PT, 4)},
      {C::Pkey, allowed(PT, 4)},
      {C::Cr0Ts, allowed(AD, 4)},
      {C::Bound, allowed(AD, 40)},
      {C::Cr4Read, blocked(AD, 4)},
      {C::MsrRead, blocked(AD, 4)},
  };
  p.expected = {
      {"pte-present", "NA"},    {"pte-reserved", "NA"},  {"pte-us", "R"},
      {"load-cr4", "R"},        {"load-msr", "NA"},      {"pkey-user", "NA"},
      {"pkey-kernel", "NA"},    {"smap", "Y"},           {"pte-rw", "R"},
      {"cr0-ts", "NA"},         {"bound", "Y"},          {"ds-over-limit", "Y"},
      {"ss-over-limit", "Y"},   {"ds-not-present", "R"}, {"ss-not-present", "R"},
      {"ds-execute-only", "R"}, {"cs-execute-only", "R"}, {"ds-read-only", "R"},
      {"ss-read-only", "R"},    {"ds-null", "R"},        {"ss-null", "R"},
      {"ss-dpl", "R"},
  };
  return p;
}

std::vector<ProcessorProfile> builtin_profiles() { return {intel_client_profile(), amd_epyc_profile()}; }

const ProcessorProfile& builtin_profile(const std::string& name) {
  static const std::vector<ProcessorProfile> all = builtin_profiles();
  for (const auto& p : all)
    if (p.name == name) return p;
  std::vector<std::string> names;
  for (const auto& p : all) names.push_back(p.name);
  throw UnknownNameError("profile", name, nearest_name(name, names));
}

}  // namespace speechsim
