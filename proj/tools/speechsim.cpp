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

// speechsim: batch runner for the exploitability matrix and the timing
// experiments. Exit codes: 0 ok, 2 configuration error, 3 all requested
// variants unsupported on the profile.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "speechsim/harness.hpp"
#include "speechsim/report.hpp"
#include "speechsim/variants.hpp"

using namespace speechsim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAllNa = 3;

struct Options {
  std::string profile = "intel-client";
  std::uint64_t seed = 1;
  unsigned jobs = 0;
  std::string out;
  std::string format = "csv";
  std::string variant;
  bool sweep_cpuid = false;
  int cpuid_pos = 0;
  std::string data_level = "l1";
  std::string tlb = "present";
  std::string level = "llc";
  int rounds = 1000;
  bool same_address = false;
  std::string path;
};

std::string level_name(CacheLevel l) { return std::string(to_string(l)); }

CacheLevel parse_level(const std::string& s) {
  auto l = level_from_string(s);
  if (!l) throw ConfigError("unknown cache level '" + s + "' (l1, l2, llc, mem)");
  return *l;
}

std::vector<ReportRow> scan_rows(const std::string& experiment, const std::string& profile,
                                 const std::string& variant, const WindowScan& w) {
  std::vector<ReportRow> rows;
  for (std::size_t k = 0; k < w.outcomes.size(); ++k)
    rows.push_back({experiment, profile, variant, "k=" + std::to_string(k),
                    std::string(to_string(w.outcomes[k])), ""});
  return rows;
}

class Runner {
 public:
  explicit Runner(const Options& o) : o_(o), jobs_(o.jobs ? o.jobs : default_jobs()) {}

  int run(const std::string& cmd) {
    if (cmd == "list-variants") return list_variants();
    if (cmd == "list-profiles") return list_profiles();
    if (cmd == "validate-profile") return validate();
    p_ = resolve_profile(o_.profile);
    if (cmd == "exploitability") return exploit();
    if (cmd == "window") return window();
    if (cmd == "p1") return p1();
    if (cmd == "prefetch") return prefetch();
    if (cmd == "squash") return squash();
    if (cmd == "mispredict") return mispredict();
    if (cmd == "dual-primitive") return dual();
    throw ConfigError("unknown command " + cmd);
  }

  std::vector<ReportRow> rows;

 private:
  int list_variants() {
    for (const auto& v : catalog())
      rows.push_back({"variant", "", v.id, std::string(to_string(v.tmpl)),
                      std::string(to_string(v.check_id)), v.name});
    return 0;
  }

  int list_profiles() {
    for (const auto& p : builtin_profiles())
      rows.push_back({"profile", p.name, "", "", "", std::to_string(p.expected.size())});
    return 0;
  }

  int validate() {
    ProcessorProfile p = load_profile(o_.path);
    rows.push_back({"validate-profile", p.name, "", o_.path, "ok", ""});
    return 0;
  }

  int exploit() {
    std::vector<const VariantSpec*> vs;
    if (o_.variant.empty())
      for (const auto& v : catalog()) vs.push_back(&v);
    else
      vs.push_back(&find_variant(o_.variant));
    auto results = parallel_map<ExploitResult>(vs.size(), jobs_, [&](std::size_t i) {
      return exploitability(*vs[i], p_, o_.seed);
    });
    bool any = false;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      rows.push_back({"exploitability", p_.name, vs[i]->id, vs[i]->name,
                      std::string(to_string(results[i].letter)), ""});
      any = any || results[i].letter != Exploit::NA;
    }
    return any ? 0 : kExitAllNa;
  }

  int window() {
    const std::string v = o_.variant.empty() ? "pte-us" : o_.variant;
    if (o_.sweep_cpuid) {
      for (const auto& pt : sweep_p2(v, p_, o_.seed, jobs_))
        rows.push_back({"window", p_.name, v,
                        "cpuid_pos=" + std::to_string(pt.cpuid_pos) +
                            ";effective_size=" + std::to_string(pt.effective_size),
                        "", std::to_string(pt.window)});
      return 0;
    }
    TestCase tc;
    tc.gadgets = {GadgetSpec::fp_chain(o_.cpuid_pos), GadgetSpec::primitive(v),
                  GadgetSpec::disclosure(0)};
    WindowScan w = measure_speculation_window(tc, p_, o_.seed, jobs_);
    rows.push_back({"window", p_.name, v,
                    "cpuid_pos=" + std::to_string(o_.cpuid_pos) +
                        ";effective_size=" + std::to_string(kFpChainOps - o_.cpuid_pos),
                    w.no_speculation ? "NO_SPECULATION" : "", std::to_string(w.window)});
    return 0;
  }

  int p1() {
    if (o_.tlb != "present" && o_.tlb != "flushed")
      throw ConfigError("--tlb must be present or flushed");
    RelativeP1 r = measure_relative_p1(o_.variant, parse_level(o_.data_level),
                                       o_.tlb == "present", p_, o_.seed);
    rows.push_back({"p1", p_.name, o_.variant,
                    "data_level=" + o_.data_level + ";tlb=" + o_.tlb +
                        ";chase_depth=" + std::to_string(r.times.chase_depth) +
                        ";t_spec2=" + std::to_string(r.times.t_spec2) +
                        ";t_spec2_prime=" + std::to_string(r.times.t_spec2_prime),
                    "", std::to_string(r.relative)});
    return 0;
  }

  int prefetch() {
    PrefetchResult r = prefetch_experiment(o_.variant, parse_level(o_.level), o_.rounds, p_, o_.seed);
    const std::string env = "level=" + o_.level + ";rounds=" + std::to_string(o_.rounds);
    rows.push_back({"prefetch", p_.name, o_.variant, env, "CORRECT", std::to_string(r.correct)});
    rows.push_back({"prefetch", p_.name, o_.variant, env, "ZERO", std::to_string(r.zero)});
    rows.push_back({"prefetch", p_.name, o_.variant, env, "NONE", std::to_string(r.none)});
    rows.push_back({"prefetch", p_.name, o_.variant, env, "final_level", level_name(r.final_level)});
    for (const auto& [lat, n] : r.histogram)
      rows.push_back({"prefetch-histogram", p_.name, o_.variant, env + ";latency=" + std::to_string(lat),
                      "", std::to_string(n)});
    return 0;
  }

  int squash() {
    WindowScan w = squash_test(p_, o_.seed, jobs_);
    rows = scan_rows("squash", p_.name, "pte-us", w);
    rows.push_back({"squash-threshold", p_.name, "pte-us", "rob_size=" + std::to_string(p_.geo.rob_size),
                    "", std::to_string(w.first_none())});
    return 0;
  }

  int mispredict() {
    for (bool slow : {false, true}) {
      WindowScan w = misprediction_window(p_, slow, o_.seed, jobs_);
      rows.push_back({"mispredict", p_.name, "", slow ? "slow_windowing=1" : "slow_windowing=0",
                      "", std::to_string(w.window)});
    }
    rows.push_back({"mispredict-oracle", p_.name, "", "", "",
                    std::to_string(misprediction_oracle_bound(p_))});
    return 0;
  }

  int dual() {
    for (const auto& [k, o] : dual_primitive_test(o_.same_address, p_, o_.seed, jobs_))
      rows.push_back({"dual-primitive", p_.name, "pte-us",
                      std::string("same_address=") + (o_.same_address ? "1" : "0") +
                          ";k=" + std::to_string(k),
                      std::string(to_string(o)), ""});
    return 0;
  }

  const Options& o_;
  unsigned jobs_;
  ProcessorProfile p_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speechsim: two-phase fault-handling out-of-order simulator"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--profile", o.profile, "Builtin profile name or profile file");
  app.add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  app.add_option("--jobs", o.jobs, "Worker threads (0 = all cores)");
  app.add_option("--out", o.out, "Output file (default stdout)");
  app.add_option("--format", o.format, "csv or jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}))
      ->capture_default_str();

  app.add_subcommand("list-variants", "List the variant catalog");
  app.add_subcommand("list-profiles", "List builtin profiles");
  auto* vp = app.add_subcommand("validate-profile", "Load and validate a profile file");
  vp->add_option("path", o.path)->required();
  auto* ex = app.add_subcommand("exploitability", "Exploitability letter per variant");
  ex->add_option("--variant", o.variant);
  auto* wi = app.add_subcommand("window", "Speculation window behind the FP windowing gadget");
  wi->add_option("--variant", o.variant);
  wi->add_flag("--sweep-cpuid", o.sweep_cpuid);
  wi->add_option("--cpuid-pos", o.cpuid_pos)->check(CLI::Range(0, kFpChainOps));
  auto* p1 = app.add_subcommand("p1", "Relative P1 latency (T_P1 - T_data)");
  p1->add_option("--variant", o.variant)->required();
  p1->add_option("--data-level", o.data_level)->check(CLI::IsMember({"l1", "l2", "llc", "mem"}));
  p1->add_option("--tlb", o.tlb)->check(CLI::IsMember({"present", "flushed"}));
  auto* pf = app.add_subcommand("prefetch", "Repeated primitive, final residency and histogram");
  pf->add_option("--variant", o.variant)->required();
  pf->add_option("--level", o.level)->check(CLI::IsMember({"l2", "llc", "mem"}));
  pf->add_option("--rounds", o.rounds)->check(CLI::NonNegativeNumber);
  app.add_subcommand("squash", "Squash threshold behind a pinned P2");
  app.add_subcommand("mispredict", "Branch misprediction window with and without slow windowing");
  auto* du = app.add_subcommand("dual-primitive", "Two primitives, one sender");
  du->add_flag("--same-address", o.same_address);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  Runner runner(o);
  int rc = 0;
  try {
    rc = runner.run(cmd);
  } catch (const Unsupported& e) {
    std::cerr << "speechsim: " << e.what() << "\n";
    return kExitAllNa;
  } catch (const ConfigError& e) {
    std::cerr << "speechsim: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IsaError& e) {
    std::cerr << "speechsim: " << e.what() << "\n";
    return kExitConfig;
  }

  const std::string text =
      render(runner.rows, o.format == "csv" ? ReportFormat::Csv : ReportFormat::Jsonl);
  if (o.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) {
      std::cerr << "speechsim: cannot write " << o.out << "\n";
      return kExitConfig;
    }
    f << text;
  }
  return rc;
}
