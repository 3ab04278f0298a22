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

#include "speechsim/profile.hpp"

#include <array>
#include <initializer_list>
#include <utility>

#include <json.hpp>

namespace speechsim {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<CheckId, std::string_view>, kNumChecks> kCheckNames = {{
    {CheckId::SegNull, "seg-null"},
    {CheckId::SegLimit, "seg-limit"},
    {CheckId::SegExecOnlyRead, "seg-exec-only-read"},
    {CheckId::SegReadOnlyWrite, "seg-read-only-write"},
    {CheckId::SegNotPresent, "seg-not-present"},
    {CheckId::SegLoadType, "seg-load-type"},
    {CheckId::SegLoadNull, "seg-load-null"},
    {CheckId::SegLoadNotPresent, "seg-load-not-present"},
    {CheckId::SegLoadDpl, "seg-load-dpl"},
    {CheckId::PtePresent, "pte-present"},
    {CheckId::PteReserved, "pte-reserved"},
    {CheckId::PteUs, "pte-us"},
    {CheckId::PteRw, "pte-rw"},
    {CheckId::Smap, "smap"},
    {CheckId::Pkey, "pkey"},
    {CheckId::Cr0Ts, "cr0-ts"},
    {CheckId::Bound, "bound"},
    {CheckId::Cr4Read, "cr4-read"},
    {CheckId::MsrRead, "msr-read"},
}};

constexpr std::array<std::pair<Feature, std::string_view>, 6> kFeatureNames = {{
    {Feature::Tsx, "tsx"},
    {Feature::Smap, "smap"},
    {Feature::Pke, "pke"},
    {Feature::LazyFp, "lazy-fp"},
    {Feature::Msr1a2, "msr-1a2"},
    {Feature::Segmentation32, "segmentation-32"},
}};

constexpr std::array<std::pair<CacheLevel, std::string_view>, 4> kLevelNames = {{
    {CacheLevel::L1, "l1"},
    {CacheLevel::L2, "l2"},
    {CacheLevel::Llc, "llc"},
    {CacheLevel::Mem, "mem"},
}};

constexpr std::array<std::pair<Anchor, std::string_view>, 3> kAnchorNames = {{
    {Anchor::PostSegmentation, "post-segmentation"},
    {Anchor::PostTranslation, "post-translation"},
    {Anchor::AtDispatch, "at-dispatch"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
  for (const auto& [e, n] : table)
    if (e == v) return n;
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const std::array<std::pair<E, std::string_view>, N>& table,
                          std::string_view s) {
  for (const auto& [e, n] : table)
    if (n == s) return e;
  return std::nullopt;
}

// Reads a JSON object while rejecting keys outside the allowed set.
class Reader {
 public:
  Reader(const json& j, std::string path, std::initializer_list<std::string_view> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
    for (const auto& [k, _] : j_.items()) {
      bool ok = false;
      for (auto a : allowed) ok = ok || a == k;
      if (!ok) throw ConfigError(path_ + ": unknown field '" + k + "'");
    }
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

  const json& at(const std::string& key) const {
    if (!j_.contains(key)) fail("missing field '" + key + "'");
    return j_.at(key);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) const {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail("field '" + key + "' has the wrong type");
    }
  }

  std::string path(const std::string& key) const { return path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
};

CheckTiming timing_from_json(const json& j, const std::string& path) {
  Reader r(j, path, {"speculation_allowed", "anchor", "delay", "tie"});
  CheckTiming t;
  r.get("speculation_allowed", t.speculation_allowed);
  r.get("delay", t.delay);
  if (r.has("anchor")) {
    auto a = value_of(kAnchorNames, r.at("anchor").get<std::string>());
    if (!a) r.fail("unknown anchor");
    t.anchor = *a;
  }
  if (r.has("tie")) {
    auto s = r.at("tie").get<std::string>();
    if (s == "data-first") t.tie = TieBreak::DataFirst;
    else if (s == "fault-first") t.tie = TieBreak::FaultFirst;
    else r.fail("unknown tie policy '" + s + "'");
  }
  return t;
}

}  // namespace

std::string_view to_string(CheckId c) { return name_of(kCheckNames, c); }
std::optional<CheckId> check_from_string(std::string_view s) { return value_of(kCheckNames, s); }

std::vector<CheckId> all_checks() {
  std::vector<CheckId> out;
  for (const auto& [c, _] : kCheckNames) out.push_back(c);
  return out;
}

std::string_view to_string(CacheLevel l) { return name_of(kLevelNames, l); }
std::optional<CacheLevel> level_from_string(std::string_view s) {
  return value_of(kLevelNames, s);
}

std::string_view to_string(Anchor a) { return name_of(kAnchorNames, a); }

std::string_view to_string(Feature f) { return name_of(kFeatureNames, f); }
std::optional<Feature> feature_from_string(std::string_view s) {
  return value_of(kFeatureNames, s);
}

const CheckTiming& ProcessorProfile::timing(CheckId c) const {
  auto it = checks.find(c);
  if (it == checks.end())
    throw ConfigError("profile '" + name + "' has no timing for check " +
                      std::string(to_string(c)));
  return it->second;
}

Cycle ProcessorProfile::level_latency(CacheLevel level) const {
  switch (level) {
    case CacheLevel::L1: return lat.l1;
    case CacheLevel::L2: return lat.l2;
    case CacheLevel::Llc: return lat.llc;
    case CacheLevel::Mem: return lat.mem;
  }
  return lat.mem;
}

void lint_profile_structure(const ProcessorProfile& p) {
  auto fail = [&](const std::string& m) { throw ConfigError("profile '" + p.name + "': " + m); };
  if (p.name.empty()) throw ConfigError("profile has an empty name");
  if (!(0 < p.lat.l1 && p.lat.l1 < p.lat.l2 && p.lat.l2 < p.lat.llc && p.lat.llc < p.lat.mem))
    fail("cache latencies must satisfy 0 < l1 < l2 < llc < mem");
  if (p.lat.stlb <= 0 || p.lat.walk <= 0 || p.lat.walk_psc <= 0)
    fail("translation latencies must be positive");
  const auto& e = p.exec;
  for (Cycle v : {e.alu, e.fp_movapd, e.fp_addpd, e.fp_mulpd, e.cpuid, e.branch, e.bound,
                  e.sysreg, e.store_forward})
    if (v <= 0) fail("execution latencies must be positive");
  const auto& g = p.geo;
  for (int v : {g.rob_size, g.issue_width, g.retire_width, g.load_ports, g.alu_ports, g.fp_ports,
                g.rename_int_regs})
    if (v <= 0) fail("geometry values must be positive");
  if (p.prefetch.p_l1 < 0 || p.prefetch.p_l1 > 1 || p.prefetch.p_terminal_l2 < 0 ||
      p.prefetch.p_terminal_l2 > 1)
    fail("prefetch probabilities must lie in [0, 1]");
  for (CheckId c : all_checks()) {
    auto it = p.checks.find(c);
    if (it == p.checks.end()) fail("missing timing for check '" + std::string(to_string(c)) + "'");
    if (it->second.delay < 0) fail("negative delay for check '" + std::string(to_string(c)) + "'");
  }
  for (const auto& [variant, letter] : p.expected)
    if (letter != "Y" && letter != "N" && letter != "R" && letter != "NA")
      fail("expected letter for '" + variant + "' must be Y, N, R or NA");
}

namespace {

ProcessorProfile parse_profile(const json& j) {
  Reader root(j, "profile", {"schema_version", "name", "latency", "exec", "geometry", "prefetch",
                             "features", "checks", "expected"});
  int version = 0;
  root.get("schema_version", version);
  if (version != kProfileSchemaVersion)
    root.fail("unsupported schema_version " + std::to_string(version) + " (expected " +
              std::to_string(kProfileSchemaVersion) + ")");

  ProcessorProfile p;
  p.name = root.at("name").get<std::string>();

  if (root.has("latency")) {
    Reader r(root.at("latency"), root.path("latency"),
             {"l1", "l2", "llc", "mem", "stlb", "walk", "walk_psc"});
    r.get("l1", p.lat.l1);
    r.get("l2", p.lat.l2);
    r.get("llc", p.lat.llc);
    r.get("mem", p.lat.mem);
    r.get("stlb", p.lat.stlb);
    r.get("walk", p.lat.walk);
    r.get("walk_psc", p.lat.walk_psc);
  }
  if (root.has("exec")) {
    Reader r(root.at("exec"), root.path("exec"),
             {"alu", "fp_movapd", "fp_addpd", "fp_mulpd", "cpuid", "branch", "bound", "sysreg",
              "store_forward"});
    r.get("alu", p.exec.alu);
    r.get("fp_movapd", p.exec.fp_movapd);
    r.get("fp_addpd", p.exec.fp_addpd);
    r.get("fp_mulpd", p.exec.fp_mulpd);
    r.get("cpuid", p.exec.cpuid);
    r.get("branch", p.exec.branch);
    r.get("bound", p.exec.bound);
    r.get("sysreg", p.exec.sysreg);
    r.get("store_forward", p.exec.store_forward);
  }
  if (root.has("geometry")) {
    Reader r(root.at("geometry"), root.path("geometry"),
             {"rob_size", "issue_width", "retire_width", "load_ports", "alu_ports", "fp_ports",
              "rename_int_regs"});
    r.get("rob_size", p.geo.rob_size);
    r.get("issue_width", p.geo.issue_width);
    r.get("retire_width", p.geo.retire_width);
    r.get("load_ports", p.geo.load_ports);
    r.get("alu_ports", p.geo.alu_ports);
    r.get("fp_ports", p.geo.fp_ports);
    r.get("rename_int_regs", p.geo.rename_int_regs);
  }
  if (root.has("prefetch")) {
    Reader r(root.at("prefetch"), root.path("prefetch"), {"p_l1", "p_terminal_l2"});
    r.get("p_l1", p.prefetch.p_l1);
    r.get("p_terminal_l2", p.prefetch.p_terminal_l2);
  }
  if (root.has("features")) {
    const auto& arr = root.at("features");
    if (!arr.is_array()) root.fail("features must be an array");
    for (const auto& f : arr) {
      auto v = f.is_string() ? feature_from_string(f.get<std::string>()) : std::nullopt;
      if (!v) root.fail("unknown feature " + f.dump());
      p.features.insert(*v);
    }
  }
  const auto& checks = root.at("checks");
  if (!checks.is_object()) root.fail("checks must be an object");
  for (const auto& [k, v] : checks.items()) {
    auto id = check_from_string(k);
    if (!id) root.fail("unknown check '" + k + "'");
    p.checks[*id] = timing_from_json(v, root.path("checks") + "." + k);
  }
  if (root.has("expected")) {
    const auto& ex = root.at("expected");
    if (!ex.is_object()) root.fail("expected must be an object");
    for (const auto& [k, v] : ex.items()) {
      if (!v.is_string()) root.fail("expected." + k + " must be a string");
      p.expected[k] = v.get<std::string>();
    }
  }
  lint_profile_structure(p);
  return p;
}

}  // namespace

ProcessorProfile profile_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("profile is not valid JSON: ") + e.what());
  }
  try {
    return parse_profile(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("profile: ") + e.what());
  }
}

std::string profile_to_json(const ProcessorProfile& p) {
  json j;
  j["schema_version"] = kProfileSchemaVersion;
  j["name"] = p.name;
  j["latency"] = {{"l1", p.lat.l1},     {"l2", p.lat.l2},     {"llc", p.lat.llc},
                  {"mem", p.lat.mem},   {"stlb", p.lat.stlb}, {"walk", p.lat.walk},
                  {"walk_psc", p.lat.walk_psc}};
  j["exec"] = {{"alu", p.exec.alu},
               {"fp_movapd", p.exec.fp_movapd},
               {"fp_addpd", p.exec.fp_addpd},
               {"fp_mulpd", p.exec.fp_mulpd},
               {"cpuid", p.exec.cpuid},
               {"branch", p.exec.branch},
               {"bound", p.exec.bound},
               {"sysreg", p.exec.sysreg},
               {"store_forward", p.exec.store_forward}};
  j["geometry"] = {{"rob_size", p.geo.rob_size},
                   {"issue_width", p.geo.issue_width},
                   {"retire_width", p.geo.retire_width},
                   {"load_ports", p.geo.load_ports},
                   {"alu_ports", p.geo.alu_ports},
                   {"fp_ports", p.geo.fp_ports},
                   {"rename_int_regs", p.geo.rename_int_regs}};
  j["prefetch"] = {{"p_l1", p.prefetch.p_l1}, {"p_terminal_l2", p.prefetch.p_terminal_l2}};
  j["features"] = json::array();
  for (Feature f : p.features) j["features"].push_back(std::string(to_string(f)));
  j["checks"] = json::object();
  for (const auto& [c, t] : p.checks) {
    j["checks"][std::string(to_string(c))] = {
        {"speculation_allowed", t.speculation_allowed},
        {"anchor", std::string(to_string(t.anchor))},
        {"delay", t.delay},
        {"tie", t.tie == TieBreak::DataFirst ? "data-first" : "fault-first"}};
  }
  j["expected"] = p.expected;
  return j.dump(2) + "\n";
}

}  // namespace speechsim
