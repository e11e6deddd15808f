#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "htpaxos/oracles.hpp"
#include "htpaxos/scenario.hpp"
#include "htpaxos/sim.hpp"

namespace {

htpaxos::Scenario resolve_scenario(const std::string& which) {
  if (which == "reference") return htpaxos::reference_scenario();
  if (which == "agreement") return htpaxos::agreement_scenario();
  if (which == "failover") return htpaxos::failover_scenario();
  for (auto [prefix, mode] : {std::pair{"fuzz-conforming-", htpaxos::FuzzMode::Conforming},
                              std::pair{"fuzz-violating-", htpaxos::FuzzMode::Violating}}) {
    if (which.rfind(prefix, 0) == 0) {
      char* end = nullptr;
      const char* digits = which.c_str() + std::string(prefix).size();
      uint64_t seed = std::strtoull(digits, &end, 10);
      if (end != digits && *end == '\0') return htpaxos::fuzz_scenario(mode, seed);
    }
  }
  return htpaxos::load_scenario_file(which);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out.good()) throw std::runtime_error("write failed: " + path);
}

int cmd_run(const std::string& which, int64_t seed, const std::string& trace_level,
            const std::string& out_path, const std::string& counters_path) {
  htpaxos::Scenario sc = resolve_scenario(which);
  if (seed >= 0) sc.seed = uint64_t(seed);
  if (trace_level == "full") sc.full_trace = true;
  else if (trace_level == "oracle") sc.full_trace = false;
  else if (!trace_level.empty())
    throw std::runtime_error("--trace must be full or oracle");

  htpaxos::Trace t = htpaxos::run_scenario(sc);
  if (!out_path.empty()) write_file(out_path, t.to_text());
  if (!counters_path.empty())
    write_file(counters_path, t.counters_csv(sc.cfg.count_reply_acks));

  std::cout << sc.name << ": seed " << sc.seed << ", " << t.events.size()
            << " events, end " << t.meta.end_time
            << (t.meta.quiescent ? " (quiescent)" : " (horizon)") << "\n";
  bool failed = false;
  for (const htpaxos::Verdict& v : htpaxos::check_all(t)) {
    std::cout << v.to_string() << "\n";
    failed = failed || v.failed();
  }
  return failed ? 1 : 0;
}

int cmd_suite(const std::string& path, int jobs) {
  htpaxos::SuiteReport report = htpaxos::run_suite_file(path, jobs);
  for (const htpaxos::SuiteOutcome& it : report.items)
    if (!it.ok) std::cout << "FAIL " << it.label << ": " << it.detail << "\n";
  std::cout << report.items.size() << " items, " << report.failures()
            << " failures\n";
  return report.failures() ? 1 : 0;
}

int cmd_figures(const std::string& dir) {
  htpaxos::write_figures(dir);
  for (int f = 1; f <= 7; ++f)
    std::cout << dir << "/fig" << f << ".csv\n";
  return 0;
}

int cmd_check(const std::vector<std::string>& paths) {
  bool failed = false;
  for (const std::string& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    htpaxos::Trace t = htpaxos::Trace::from_text(buf.str());
    std::cout << path << ":\n";
    for (const htpaxos::Verdict& v : htpaxos::check_all(t)) {
      std::cout << "  " << v.to_string() << "\n";
      failed = failed || v.failed();
    }
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"replicated agreement simulator and cost model"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one scenario and check it");
  std::string run_which;
  int64_t run_seed = -1;
  std::string run_trace, run_out, run_counters;
  run->add_option("scenario", run_which,
                  "scenario file, or reference|agreement|failover")
      ->required();
  run->add_option("--seed", run_seed, "override the scenario seed");
  run->add_option("--trace", run_trace, "trace detail: full or oracle");
  run->add_option("--out", run_out, "write the trace text here");
  run->add_option("--counters", run_counters, "write per-site counters CSV here");

  auto* suite = app.add_subcommand("suite", "run a suite file");
  std::string suite_path;
  int suite_jobs = 0;
  suite->add_option("file", suite_path, "suite file")->required();
  suite->add_option("--jobs", suite_jobs, "worker threads (default: hardware)");

  auto* figures = app.add_subcommand("figures", "write the cost-model tables");
  std::string fig_dir = "figures";
  figures->add_option("--out", fig_dir, "output directory (default: figures)");

  auto* check = app.add_subcommand("check", "re-check recorded trace files");
  std::vector<std::string> check_paths;
  check->add_option("files", check_paths, "trace files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_which, run_seed, run_trace, run_out, run_counters);
    if (suite->parsed()) return cmd_suite(suite_path, suite_jobs);
    if (figures->parsed()) return cmd_figures(fig_dir);
    return cmd_check(check_paths);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
