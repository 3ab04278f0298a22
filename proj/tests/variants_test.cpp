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

#include <set>

#include "speechsim/harness.hpp"
#include "speechsim/variants.hpp"
#include "expected_table.hpp"

using namespace speechsim;
using expected::kTable;
using expected::Row;

namespace {

// Variants built from one instruction versus a two-instruction sequence.
const std::set<std::string> kOneInstr = {"ds-over-limit", "cs-execute-only", "ds-null",
                                         "ss-over-limit", "ds-not-present",  "pkey-user",
                                         "pkey-kernel",   "smap",            "pte-reserved",
                                         "cr0-ts",        "load-cr4",        "load-msr"};
const std::set<std::string> kTwoInstr = {"pte-rw",         "ds-execute-only", "ds-read-only",
                                         "ss-read-only",   "ss-dpl",          "ss-not-present",
                                         "ss-null",        "bound"};

}  // namespace

TEST(Catalog, TwentyTwoUniqueRows) {
  ASSERT_EQ(catalog().size(), 22u);
  std::set<std::string> ids, names;
  for (const auto& v : catalog()) {
    ids.insert(v.id);
    names.insert(v.name);
  }
  EXPECT_EQ(ids.size(), 22u);
  EXPECT_EQ(names.size(), 22u);
  for (std::size_t i = 0; i < catalog().size(); ++i) EXPECT_EQ(catalog()[i].id, kTable[i].id);
}

TEST(Catalog, TemplateMarks) {
  for (const auto& v : catalog()) {
    if (kOneInstr.contains(v.id)) EXPECT_TRUE(v.one_instruction()) << v.id;
    if (kTwoInstr.contains(v.id)) EXPECT_FALSE(v.one_instruction()) << v.id;
  }
  EXPECT_EQ(find_variant("pte-us").tmpl, Template::OneInstrLoad);
  EXPECT_EQ(find_variant("ds-read-only").tmpl, Template::TwoInstrStoreLoad);
  EXPECT_EQ(find_variant("bound").tmpl, Template::TwoInstrCheckLoad);
  EXPECT_EQ(find_variant("pte-us").name, "PTE (US)");
}

TEST(Catalog, EveryCheckHasTimingInEveryProfile) {
  for (const auto& p : builtin_profiles())
    for (const auto& v : catalog()) EXPECT_NO_THROW((void)p.timing(v.check_id)) << p.name << v.id;
}

TEST(Catalog, NearestNameSuggestion) {
  try {
    find_variant("ds-overlimit");
    FAIL();
  } catch (const UnknownNameError& e) {
    EXPECT_EQ(e.suggestion(), "ds-over-limit");
    EXPECT_NE(std::string(e.what()).find("did you mean"), std::string::npos);
  }
}

TEST(ReferenceMatrix, IntelClientColumn) {
  const auto& p = builtin_profile("intel-client");
  for (const Row& r : kTable)
    EXPECT_EQ(to_string(exploitability(find_variant(r.id), p, 1).letter), r.intel) << r.id;
}

TEST(ReferenceMatrix, AmdEpycColumn) {
  const auto& p = builtin_profile("amd-epyc");
  for (const Row& r : kTable)
    EXPECT_EQ(to_string(exploitability(find_variant(r.id), p, 1).letter), r.amd) << r.id;
}

TEST(ReferenceMatrix, ExpectedLettersDeclaredInProfiles) {
  for (const Row& r : kTable) {
    EXPECT_EQ(builtin_profile("intel-client").expected.at(r.id), r.intel);
    EXPECT_EQ(builtin_profile("amd-epyc").expected.at(r.id), r.amd);
  }
}

// Property: a check that forbids speculation gives R for every variant
// using it (when the variant runs at all).
TEST(ReferenceMatrix, NoSpeculationChecksGiveR) {
  for (const auto& p : builtin_profiles())
    for (const auto& v : catalog()) {
      if (p.timing(v.check_id).speculation_allowed) continue;
      Exploit e = exploitability(v, p, 1).letter;
      EXPECT_TRUE(e == Exploit::R || e == Exploit::NA) << p.name << " " << v.id;
    }
}
