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

// Speculation-primitive catalog and builtin processor profiles.

#include <set>
#include <string>
#include <vector>

#include "speechsim/memsys.hpp"
#include "speechsim/profile.hpp"

namespace speechsim {

enum class Template : std::uint8_t {
  OneInstrLoad,
  TwoInstrStoreLoad,
  TwoInstrCheckLoad,
  RegRead,
  FpRegRead,
  Branch,
};

std::string_view to_string(Template t);

// What the environment controller corrupts for a variant.
enum class Setup : std::uint8_t {
  PteNotPresent,
  PteReserved,
  KernelPage,
  ReadCr4,
  ReadMsr,
  PkeyUser,
  PkeyKernel,
  SmapUserPage,
  PteReadOnly,
  LazyFp,
  BoundIndex,
  SegOverLimit,
  SegNotPresent,
  LoadExecOnly,
  SegExecOnly,
  SegReadOnlyWrite,
  LoadReadOnlyStack,
  SegNull,
  LoadNullStack,
  LoadNotPresentStack,
  LoadDplStack,
};

struct VariantSpec {
  std::string id;
  std::string name;
  Template tmpl = Template::OneInstrLoad;
  CheckId check_id = CheckId::PteUs;
  std::set<Feature> required_features;
  AddrMode addr_mode = AddrMode::Bits64;
  // Segment used by the faulting access or segment-register load.
  Segment segment = Segment::Ds;
  Setup setup = Setup::KernelPage;
  std::string directives;

  // Translation fault leaving no usable physical address.
  bool terminal() const { return setup == Setup::PteNotPresent || setup == Setup::PteReserved; }
  bool one_instruction() const {
    return tmpl == Template::OneInstrLoad || tmpl == Template::RegRead ||
           tmpl == Template::FpRegRead;
  }
};

// Table rows in order; ids are stable.
const std::vector<VariantSpec>& catalog();

class UnknownNameError : public ConfigError {
 public:
  UnknownNameError(const std::string& kind, const std::string& name, const std::string& suggestion);
  const std::string& suggestion() const { return suggestion_; }

 private:
  std::string suggestion_;
};

const VariantSpec& find_variant(const std::string& id);

// Closest candidate by edit distance (case-insensitive).
std::string nearest_name(const std::string& query, const std::vector<std::string>& candidates);

ProcessorProfile intel_client_profile();
ProcessorProfile amd_epyc_profile();
std::vector<ProcessorProfile> builtin_profiles();
const ProcessorProfile& builtin_profile(const std::string& name);

}  // namespace speechsim
