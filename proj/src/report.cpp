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

#include "speechsim/report.hpp"

#include <json.hpp>

namespace speechsim {

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string to_csv(const std::vector<ReportRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows)
    out += csv_cell(r.experiment) + "," + csv_cell(r.profile) + "," + csv_cell(r.variant) + "," +
           csv_cell(r.env) + "," + csv_cell(r.outcome) + "," + csv_cell(r.value) + "\n";
  return out;
}

std::string to_jsonl(const std::vector<ReportRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["experiment"] = r.experiment;
    for (const auto& [k, v] : {std::pair{"profile", &r.profile}, {"variant", &r.variant},
                               {"env", &r.env}, {"outcome", &r.outcome}, {"value", &r.value}})
      if (!v->empty()) j[k] = *v;
    out += j.dump() + "\n";
  }
  return out;
}

std::string render(const std::vector<ReportRow>& rows, ReportFormat f) {
  return f == ReportFormat::Csv ? to_csv(rows) : to_jsonl(rows);
}

}  // namespace speechsim
