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

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "speechsim/harness.hpp"
#include "speechsim/profile.hpp"
#include "speechsim/variants.hpp"

using namespace speechsim;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string profile_path(const std::string& name) {
  return std::string(SPEECHSIM_SOURCE_DIR) + "/profiles/" + name + ".json";
}

}  // namespace

TEST(ProfileJson, RoundTripBuiltins) {
  for (const auto& p : builtin_profiles()) {
    const std::string text = profile_to_json(p);
    EXPECT_EQ(profile_from_json(text), p);
    EXPECT_EQ(profile_to_json(profile_from_json(text)), text);
  }
}

TEST(ProfileJson, ShippedFilesMatchBuiltins) {
  for (const auto& p : builtin_profiles()) {
    EXPECT_EQ(read_file(profile_path(p.name)), profile_to_json(p)) << p.name;
    EXPECT_EQ(load_profile(profile_path(p.name)), p);
  }
}

TEST(ProfileJson, UnknownFieldRejected) {
  std::string text = profile_to_json(intel_client_profile());
  text.insert(text.find('{') + 1, "\"turbo\": true,");
  EXPECT_THROW(profile_from_json(text), ConfigError);
}

TEST(ProfileJson, SchemaVersionChecked) {
  std::string text = profile_to_json(intel_client_profile());
  const auto at = text.find("\"schema_version\": 1");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 19, "\"schema_version\": 9");
  EXPECT_THROW(profile_from_json(text), ConfigError);
}

TEST(ProfileJson, MalformedJsonIsConfigError) {
  EXPECT_THROW(profile_from_json("{ not json"), ConfigError);
}

TEST(ProfileLint, LatencyOrdering) {
  ProcessorProfile p = intel_client_profile();
  p.lat.l2 = p.lat.llc + 1;
  EXPECT_THROW(lint_profile_structure(p), ConfigError);
}

TEST(ProfileLint, MissingCheck) {
  ProcessorProfile p = intel_client_profile();
  p.checks.erase(CheckId::Bound);
  EXPECT_THROW(lint_profile_structure(p), ConfigError);
}

TEST(ProfileLint, NonPositiveGeometry) {
  ProcessorProfile p = intel_client_profile();
  p.geo.rob_size = 0;
  EXPECT_THROW(lint_profile_structure(p), ConfigError);
}

TEST(ProfileValidate, BuiltinsAreSelfConsistent) {
  for (const auto& p : builtin_profiles()) EXPECT_NO_THROW(validate_profile(p));
}

TEST(ProfileValidate, MismatchNamesTheCheck) {
  ProcessorProfile p = intel_client_profile();
  p.checks[CheckId::SegLimit].tie = TieBreak::DataFirst;
  try {
    validate_profile(p);
    FAIL() << "expected a lint failure";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("seg-limit"), std::string::npos) << msg;
    EXPECT_NE(msg.find("ds-over-limit"), std::string::npos) << msg;
  }
}

TEST(ProfileValidate, UnknownExpectedVariant) {
  ProcessorProfile p = intel_client_profile();
  p.expected["pte-bogus"] = "Y";
  EXPECT_THROW(validate_profile(p), ConfigError);
}

TEST(ProfileResolve, UnknownNameSuggests) {
  try {
    resolve_profile("intel-clent");
    FAIL();
  } catch (const UnknownNameError& e) {
    EXPECT_EQ(e.suggestion(), "intel-client");
  }
}
