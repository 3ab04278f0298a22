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

// JSON fixture form of MemEnvironment. Addresses and values are hex strings
// so that 64-bit values survive any JSON reader.

#include <charconv>
#include <sstream>

#include <json.hpp>

#include "speechsim/memsys.hpp"

namespace speechsim {

using nlohmann::json;

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

std::uint64_t parse_hex(const json& j) {
  if (!j.is_string()) throw ConfigError("environment: expected hex string, got " + j.dump());
  auto s = j.get<std::string>();
  std::string_view v = s;
  if (v.starts_with("0x") || v.starts_with("0X")) v.remove_prefix(2);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out, 16);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("environment: bad hex value '" + s + "'");
  return out;
}

std::uint64_t parse_hex_key(const std::string& k) { return parse_hex(json(k)); }

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError("environment: " + where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) throw ConfigError("environment: unknown field '" + k + "' in " + where);
  }
}

json page_set(const std::set<std::uint64_t>& s) {
  json a = json::array();
  for (auto p : s) a.push_back(hex(p));
  return a;
}

std::set<std::uint64_t> page_set_from(const json& j) {
  std::set<std::uint64_t> out;
  for (const auto& v : j) out.insert(parse_hex(v));
  return out;
}

MemEnvironment parse_env(const json& j) {
  reject_unknown(j,
                 {"residency", "dtlb", "stlb", "psc", "page_tables", "segments", "segment_regs",
                  "mem_values", "system_registers", "cpu_mode", "addr_mode", "feature_state"},
                 "root");
  MemEnvironment env;
  const json residency_j = j.value("residency", json::object());
  for (const auto& [k, v] : residency_j.items()) {
    auto lvl = level_from_string(v.get<std::string>());
    if (!lvl) throw ConfigError("environment: bad cache level " + v.dump());
    env.residency[parse_hex_key(k)] = *lvl;
  }
  env.dtlb_present = page_set_from(j.value("dtlb", json::array()));
  env.stlb_present = page_set_from(j.value("stlb", json::array()));
  env.psc_present = page_set_from(j.value("psc", json::array()));
  const json page_tables_j = j.value("page_tables", json::object());
  for (const auto& [k, v] : page_tables_j.items()) {
    reject_unknown(v, {"present", "rw", "us", "reserved", "nx", "pkey"}, "page table entry");
    PageTableEntry e;
    e.present = v.value("present", e.present);
    e.rw = v.value("rw", e.rw);
    e.us = v.value("us", e.us);
    e.reserved_set = v.value("reserved", e.reserved_set);
    e.nx = v.value("nx", e.nx);
    e.pkey = v.value("pkey", e.pkey);
    env.page_tables[parse_hex_key(k)] = e;
  }
  const json segments_j = j.value("segments", json::object());
  for (const auto& [k, v] : segments_j.items()) {
    reject_unknown(v, {"base", "limit", "type", "present", "dpl", "null"}, "segment descriptor");
    SegmentDescriptor d;
    if (v.contains("base")) d.base = parse_hex(v["base"]);
    if (v.contains("limit")) d.limit = parse_hex(v["limit"]);
    if (v.contains("type")) {
      auto t = seg_type_from_string(v["type"].get<std::string>());
      if (!t) throw ConfigError("environment: bad segment type " + v["type"].dump());
      d.seg_type = *t;
    }
    d.present = v.value("present", d.present);
    d.dpl = v.value("dpl", d.dpl);
    d.null_selector = v.value("null", d.null_selector);
    env.segments[static_cast<std::uint16_t>(parse_hex_key(k))] = d;
  }
  const json segment_regs_j = j.value("segment_regs", json::object());
  for (const auto& [k, v] : segment_regs_j.items()) {
    auto seg = segment_from_string(k);
    if (!seg) throw ConfigError("environment: unknown segment register '" + k + "'");
    env.segment_regs[*seg] = static_cast<std::uint16_t>(parse_hex(v));
  }
  const json mem_values_j = j.value("mem_values", json::object());
  for (const auto& [k, v] : mem_values_j.items())
    env.mem_values[parse_hex_key(k)] = parse_hex(v);
  const json system_registers_j = j.value("system_registers", json::object());
  for (const auto& [k, v] : system_registers_j.items()) {
    auto r = sysreg_from_string(k);
    if (!r) throw ConfigError("environment: unknown system register '" + k + "'");
    env.system_registers[*r] = parse_hex(v);
  }
  auto mode = j.value("cpu_mode", std::string("user"));
  if (mode != "user" && mode != "supervisor") throw ConfigError("environment: bad cpu_mode");
  env.cpu_mode = mode == "user" ? CpuMode::User : CpuMode::Supervisor;
  auto amode = j.value("addr_mode", std::string("64"));
  if (amode != "32" && amode != "64") throw ConfigError("environment: bad addr_mode");
  env.addr_mode = amode == "32" ? AddrMode::Bits32 : AddrMode::Bits64;
  if (j.contains("feature_state")) {
    const auto& f = j["feature_state"];
    reject_unknown(f, {"smap", "pke", "cr0_ts", "pkru"}, "feature_state");
    env.feature_state.smap_enabled = f.value("smap", false);
    env.feature_state.pke_enabled = f.value("pke", false);
    env.feature_state.cr0_ts = f.value("cr0_ts", false);
    if (f.contains("pkru")) env.feature_state.pkru = static_cast<std::uint32_t>(parse_hex(f["pkru"]));
  }
  return env;
}

}  // namespace

std::string env_to_json(const MemEnvironment& env) {
  json j;
  j["residency"] = json::object();
  for (const auto& [p, l] : env.residency) j["residency"][hex(p)] = std::string(to_string(l));
  j["dtlb"] = page_set(env.dtlb_present);
  j["stlb"] = page_set(env.stlb_present);
  j["psc"] = page_set(env.psc_present);
  j["page_tables"] = json::object();
  for (const auto& [p, e] : env.page_tables)
    j["page_tables"][hex(p)] = {{"present", e.present}, {"rw", e.rw},   {"us", e.us},
                                {"reserved", e.reserved_set}, {"nx", e.nx}, {"pkey", e.pkey}};
  j["segments"] = json::object();
  for (const auto& [sel, d] : env.segments)
    j["segments"][hex(sel)] = {{"base", hex(d.base)},
                               {"limit", hex(d.limit)},
                               {"type", std::string(to_string(d.seg_type))},
                               {"present", d.present},
                               {"dpl", d.dpl},
                               {"null", d.null_selector}};
  j["segment_regs"] = json::object();
  for (const auto& [s, sel] : env.segment_regs) j["segment_regs"][std::string(to_string(s))] = hex(sel);
  j["mem_values"] = json::object();
  for (const auto& [a, v] : env.mem_values) j["mem_values"][hex(a)] = hex(v);
  j["system_registers"] = json::object();
  for (const auto& [r, v] : env.system_registers)
    j["system_registers"][std::string(to_string(r))] = hex(v);
  j["cpu_mode"] = env.cpu_mode == CpuMode::User ? "user" : "supervisor";
  j["addr_mode"] = env.addr_mode == AddrMode::Bits32 ? "32" : "64";
  j["feature_state"] = {{"smap", env.feature_state.smap_enabled},
                        {"pke", env.feature_state.pke_enabled},
                        {"cr0_ts", env.feature_state.cr0_ts},
                        {"pkru", hex(env.feature_state.pkru)}};
  return j.dump(2) + "\n";
}

MemEnvironment env_from_json(std::string_view text) {
  try {
    return parse_env(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("environment: ") + e.what());
  }
}

}  // namespace speechsim
