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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. The suite runs twice with the same seed and the two
// reports are compared byte for byte.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "expected_table.hpp"
#include "oracle_check.hpp"
#include "speechsim/harness.hpp"
#include "speechsim/report.hpp"

using namespace speechsim;

namespace {

// Pinned tolerances.
constexpr double kTableSeconds = 60.0;
constexpr int kSaturationLo = 130;
constexpr int kSaturationHi = 160;
constexpr Cycle kUsL1Relative = 0;
constexpr Cycle kDsL2Relative = -12;
constexpr Cycle kTlbGapMin = 100;
constexpr int kPrefetchRounds = 1000;
constexpr int kPrefetchCorrectMax = 5;
constexpr double kPrefetchSeconds = 10.0;
const std::vector<std::uint64_t> kPrefetchSeeds = {1, 2, 3, 4, 5};
constexpr int kOracleCases = 1000;
constexpr double kOracleSeconds = 30.0;
constexpr std::uint64_t kSeed = 1;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Suite {
  std::vector<Verdict> verdicts;  // criteria 1..10
  std::vector<ReportRow> rows;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename T>
std::string str(const T& v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string letters(const std::vector<SignalOutcome>& v) {
  std::string s;
  for (auto o : v) s += o == SignalOutcome::Correct ? 'C' : o == SignalOutcome::Zero ? 'Z' : 'N';
  return s;
}

Verdict table(Suite& s, unsigned jobs) {
  const auto t0 = std::chrono::steady_clock::now();
  int mismatches = 0;
  std::string first;
  for (const char* name : {"intel-client", "amd-epyc"}) {
    const ProcessorProfile& p = builtin_profile(name);
    const bool intel = p.name == "intel-client";
    auto res = parallel_map<ExploitResult>(catalog().size(), jobs, [&](std::size_t i) {
      return exploitability(catalog()[i], p, kSeed);
    });
    for (std::size_t i = 0; i < res.size(); ++i) {
      const auto& row = expected::kTable[i];
      const std::string got(to_string(res[i].letter));
      const std::string want = intel ? row.intel : row.amd;
      s.rows.push_back({"exploitability", p.name, row.id, "", got, ""});
      if (got != want && mismatches++ == 0) first = p.name + "/" + row.id + " " + got + "!=" + want;
    }
  }
  const double secs = seconds_since(t0);
  Verdict v{mismatches == 0 && secs < kTableSeconds,
            "44 cells, " + str(mismatches) + " mismatches" + (first.empty() ? "" : " (" + first + ")") +
                ", " + str(static_cast<int>(secs * 1000)) + " ms"};
  return v;
}

Verdict sweep(Suite& s, unsigned jobs) {
  const ProcessorProfile& p = builtin_profile("intel-client");
  auto pts = sweep_p2("pte-us", p, kSeed, jobs);
  std::sort(pts.begin(), pts.end(),
            [](const SweepPoint& a, const SweepPoint& b) { return a.effective_size < b.effective_size; });
  bool monotone = true;
  int sat = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0 && pts[i].window < pts[i - 1].window) monotone = false;
    sat = std::max(sat, pts[i].window);
    s.rows.push_back({"window", p.name, "pte-us", "effective_size=" + str(pts[i].effective_size), "",
                      str(pts[i].window)});
  }
  const int oracle = window_saturation_oracle(p);
  const bool reached = !pts.empty() && pts.back().window == sat;
  return {monotone && reached && sat >= kSaturationLo && sat <= kSaturationHi && sat == oracle,
          "monotone=" + str(monotone) + " saturation=" + str(sat) + " oracle=" + str(oracle) +
              " points=" + str(pts.size())};
}

Verdict p1(Suite& s) {
  const ProcessorProfile& p = builtin_profile("intel-client");
  auto rel = [&](const char* v, CacheLevel l, bool tlb) {
    Cycle r = measure_relative_p1(v, l, tlb, p, kSeed).relative;
    s.rows.push_back({"p1", p.name, v, std::string(to_string(l)) + (tlb ? ";present" : ";flushed"), "",
                      str(r)});
    return r;
  };
  const Cycle us = rel("pte-us", CacheLevel::L1, true);
  const Cycle ds = rel("ds-over-limit", CacheLevel::L2, true);
  const Cycle present = rel("ds-over-limit", CacheLevel::L1, true);
  const Cycle flushed = rel("ds-over-limit", CacheLevel::L1, false);
  const Cycle gap = std::abs(flushed - present);
  return {us == kUsL1Relative && ds == kDsL2Relative && gap > kTlbGapMin,
          "us_l1=" + str(us) + " ds_l2=" + str(ds) + " tlb_gap=" + str(gap)};
}

Verdict current_unit(Suite& s) {
  const ProcessorProfile& p = builtin_profile("intel-client");
  bool ok = true;
  std::string got;
  for (CacheLevel l : {CacheLevel::L1, CacheLevel::L2, CacheLevel::Llc, CacheLevel::Mem}) {
    TestCase tc;
    tc.gadgets = {GadgetSpec::slow_load(), GadgetSpec::primitive("pte-us"), GadgetSpec::disclosure()};
    tc.env.data_level = l;
    const SignalOutcome o = run_covert_test(tc, p, kSeed);
    const SignalOutcome want = l == CacheLevel::L1 ? SignalOutcome::Correct : SignalOutcome::Zero;
    ok = ok && o == want;
    got += std::string(to_string(l)) + "=" + std::string(to_string(o)) + " ";
    s.rows.push_back({"current-unit", p.name, "pte-us", std::string(to_string(l)), std::string(to_string(o)), ""});
  }
  got.pop_back();
  return {ok, got};
}

Verdict dual(Suite& s, unsigned jobs) {
  const ProcessorProfile& p = builtin_profile("intel-client");
  bool ok = true;
  std::string detail;
  for (bool same : {false, true}) {
    std::vector<SignalOutcome> seq;
    for (const auto& [k, o] : dual_primitive_test(same, p, kSeed, jobs)) {
      seq.push_back(o);
      s.rows.push_back({"dual-primitive", p.name, "pte-us", "same_address=" + str(same) + ";k=" + str(k),
                        std::string(to_string(o)), ""});
    }
    const std::string l = letters(seq);
    const std::size_t k = l.find_first_not_of('C');
    const bool shape = k != 0 && l.find('Z') == std::string::npos &&
                       (k == std::string::npos || l.find_first_not_of('N', k) == std::string::npos);
    ok = ok && shape;
    detail += std::string(same ? "same" : "distinct") + ": C^" + str(k == std::string::npos ? l.size() : k) +
              " N^" + str(k == std::string::npos ? 0 : l.size() - k) + (shape ? "" : " (bad shape)") + " ";
  }
  detail.pop_back();
  return {ok, detail};
}

Verdict independence(Suite& s, unsigned jobs) {
  const ProcessorProfile& p = builtin_profile("intel-client");
  IndependenceResult r = p1_window_independence(p, kSeed, jobs);
  s.rows.push_back({"independence", p.name, "pte-us", "tlb=present", "", str(r.window_tlb_present)});
  s.rows.push_back({"independence", p.name, "pte-us", "tlb=flushed", "", str(r.window_tlb_flushed)});
  return {r.window_tlb_present == r.window_tlb_flushed,
          "present=" + str(r.window_tlb_present) + " flushed=" + str(r.window_tlb_flushed)};
}

Verdict squash(Suite& s, unsigned jobs) {
  const ProcessorProfile& p = builtin_profile("intel-client");
  const int t = squash_test(p, kSeed, jobs).first_none();
  s.rows.push_back({"squash", p.name, "pte-us", "", "", str(t)});
  return {t > 0 && t < p.geo.rob_size, "threshold=" + str(t) + " rob_size=" + str(p.geo.rob_size)};
}

Verdict prefetch(Suite& s, unsigned jobs) {
  const ProcessorProfile& p = builtin_profile("intel-client");
  const auto t0 = std::chrono::steady_clock::now();
  struct Job {
    const char* variant;
    CacheLevel level;
    std::uint64_t seed;
  };
  std::vector<Job> js;
  for (auto seed : kPrefetchSeeds) js.push_back({"pte-us", CacheLevel::Llc, seed});
  for (auto seed : kPrefetchSeeds) js.push_back({"pte-us", CacheLevel::Mem, seed});
  for (auto seed : kPrefetchSeeds) js.push_back({"pte-present", CacheLevel::Llc, seed});
  auto res = parallel_map<PrefetchResult>(js.size(), jobs, [&](std::size_t i) {
    return prefetch_experiment(js[i].variant, js[i].level, kPrefetchRounds, p, js[i].seed);
  });
  const double secs = seconds_since(t0);
  bool ok = secs < kPrefetchSeconds;
  std::string us_correct;
  for (std::size_t i = 0; i < js.size(); ++i) {
    const PrefetchResult& r = res[i];
    const std::string env = std::string(to_string(js[i].level)) + ";seed=" + str(js[i].seed);
    s.rows.push_back({"prefetch", p.name, js[i].variant, env, std::string(to_string(r.final_level)),
                      str(r.correct)});
    if (std::string(js[i].variant) == "pte-us" && js[i].level == CacheLevel::Llc) {
      ok = ok && r.final_level == CacheLevel::L2 && r.correct >= 0 && r.correct <= kPrefetchCorrectMax;
      us_correct += str(r.correct) + ",";
    } else if (std::string(js[i].variant) == "pte-us") {
      ok = ok && r.final_level == CacheLevel::Mem;
    } else {
      ok = ok && r.final_level == CacheLevel::Llc && r.correct == 0;
    }
  }
  us_correct.pop_back();
  return {ok, "us_llc correct=[" + us_correct + "] " + str(static_cast<int>(secs * 1000)) + " ms"};
}

Verdict mispredict(Suite& s, unsigned jobs) {
  const ProcessorProfile& p = builtin_profile("intel-client");
  const int without = misprediction_window(p, false, kSeed, jobs).window;
  const int with = misprediction_window(p, true, kSeed, jobs).window;
  const int bound = misprediction_oracle_bound(p);
  s.rows.push_back({"mispredict", p.name, "", "slow=0", "", str(without)});
  s.rows.push_back({"mispredict", p.name, "", "slow=1", "", str(with)});
  return {with == without && with == bound,
          "without=" + str(without) + " with=" + str(with) + " oracle=" + str(bound)};
}

Verdict oracle_eq(Suite& s) {
  const auto t0 = std::chrono::steady_clock::now();
  const OracleRun r = run_oracle_equivalence(kOracleCases, kSeed);
  const double secs = seconds_since(t0);
  s.rows.push_back({"oracle", "intel-client", "", "", "", str(r.mismatches)});
  std::string detail = str(r.accepted) + " cases, " + str(r.mismatches) + " mismatches, " +
                       str(static_cast<int>(secs * 1000)) + " ms";
  if (r.mismatches) detail += " first: " + r.first_mismatch.substr(0, r.first_mismatch.find('\n'));
  return {r.accepted == kOracleCases && r.mismatches == 0 && secs < kOracleSeconds, detail};
}

Suite run_suite(unsigned jobs) {
  Suite s;
  s.verdicts.push_back(table(s, jobs));
  s.verdicts.push_back(sweep(s, jobs));
  s.verdicts.push_back(p1(s));
  s.verdicts.push_back(current_unit(s));
  s.verdicts.push_back(dual(s, jobs));
  s.verdicts.push_back(independence(s, jobs));
  s.verdicts.push_back(squash(s, jobs));
  s.verdicts.push_back(prefetch(s, jobs));
  s.verdicts.push_back(mispredict(s, jobs));
  s.verdicts.push_back(oracle_eq(s));
  return s;
}

Verdict guarded(const std::function<Verdict()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  // At least four workers so the comparison covers the threaded path.
  const unsigned jobs = std::max(4u, static_cast<unsigned>(default_jobs()));
  Suite first;
  Verdict fatal;
  bool ran = true;
  try {
    first = run_suite(jobs);
  } catch (const std::exception& e) {
    ran = false;
    fatal = {false, std::string("exception: ") + e.what()};
  }
  std::vector<Verdict> v = ran ? first.verdicts : std::vector<Verdict>(10, fatal);
  v.push_back(guarded([&]() -> Verdict {
    if (!ran) return fatal;
    const std::string a = render(first.rows, ReportFormat::Csv);
    const std::string b = render(run_suite(1).rows, ReportFormat::Csv);
    return {a == b, str(first.rows.size()) + " rows, " + (a == b ? "identical" : "reports differ") +
                        " (jobs " + str(jobs) + " vs 1)"};
  }));

  int failed = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    failed += !v[i].pass;
    std::cout << (v[i].pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << v[i].detail << "\n";
  }
  std::cout << (v.size() - failed) << "/" << v.size() << " criteria passed\n";
  return failed ? 1 : 0;
}
