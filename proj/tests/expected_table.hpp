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

namespace speechsim::expected {

// Frozen reference letters: id, intel-client, amd-epyc.
struct Row {
  const char* id;
  const char* intel;
  const char* amd;
};

inline const Row kTable[] = {
    {"pte-present", "Y", "NA"},    {"pte-reserved", "Y", "NA"},   {"pte-us", "Y", "R"},
    {"load-cr4", "R", "R"},        {"load-msr", "R", "NA"},       {"pkey-user", "NA", "NA"},
    {"pkey-kernel", "NA", "NA"},   {"smap", "Y", "Y"},            {"pte-rw", "Y", "R"},
    {"cr0-ts", "Y", "NA"},         {"bound", "Y", "Y"},           {"ds-over-limit", "N", "Y"},
    {"ss-over-limit", "N", "Y"},   {"ds-not-present", "R", "R"},  {"ss-not-present", "R", "R"},
    {"ds-execute-only", "R", "R"}, {"cs-execute-only", "R", "R"}, {"ds-read-only", "Y", "R"},
    {"ss-read-only", "R", "R"},    {"ds-null", "N", "R"},         {"ss-null", "R", "R"},
    {"ss-dpl", "R", "R"},
};

}  // namespace speechsim::expected
