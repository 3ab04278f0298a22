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

// Measurement records and their CSV / JSON-lines encodings.

#include <string>
#include <vector>

namespace speechsim {

enum class ReportFormat { Csv, Jsonl };

// One measurement. Empty fields are written as empty CSV cells and
// omitted from JSON records.
struct ReportRow {
  std::string experiment;
  std::string profile;
  std::string variant;
  std::string env;
  std::string outcome;
  std::string value;
};

inline constexpr const char* kCsvHeader = "experiment,profile,variant,env,outcome,value";

std::string to_csv(const std::vector<ReportRow>& rows);
std::string to_jsonl(const std::vector<ReportRow>& rows);
std::string render(const std::vector<ReportRow>& rows, ReportFormat f);

}  // namespace speechsim
