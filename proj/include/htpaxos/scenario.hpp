#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "htpaxos/sim.hpp"

namespace htpaxos {

/// Parse a scenario description in flat key=value form.  '#' starts a
/// comment, blank lines are skipped, `crash=` and `drop=` may repeat.
/// Malformed input raises std::runtime_error with "<source>:<line>: ...".
Scenario parse_scenario_text(const std::string& text,
                             const std::string& source_name = "scenario");
Scenario load_scenario_file(const std::string& path);

/// Built-in measurement scenarios (also shipped under scenarios/ as files).
Scenario reference_scenario();  // 3+3+3, one request, unit delays, full trace
Scenario agreement_scenario();  // 10 disseminators, 20 clients, counter window
Scenario failover_scenario();   // scripted leader isolation, crash, re-election

/// Randomized scenarios.  Conforming ones keep crash and loss budgets inside
/// what the liveness check demands; violating ones deliberately break one of
/// those budgets per seed (rotating), so liveness must come back
/// not-applicable while safety still holds.
enum class FuzzMode : uint8_t { Conforming, Violating };
Scenario fuzz_scenario(FuzzMode mode, uint64_t seed);

struct SuiteOutcome {
  std::string label;
  bool ok = false;
  std::string detail;  // empty when ok, else mismatches/errors
};
struct SuiteReport {
  std::vector<SuiteOutcome> items;
  int failures() const;
};

/// Run a suite file.  Lines:
///   run <scenario-file> expect <check>=<status>[,...]
///   fuzz <conforming|violating> count=<k> seed0=<s> expect <check>=<status>[,...]
///   figures out=<dir>
/// Checks: safety, liveness, delays.  Statuses: pass, fail, not-applicable.
/// Scenario paths and output dirs are relative to the suite file.
/// jobs <= 0 uses the hardware thread count.
SuiteReport run_suite_file(const std::string& path, int jobs = 0);

/// Write fig1.csv .. fig7.csv (the canonical cost-model tables) into dir.
void write_figures(const std::string& dir);

}  // namespace htpaxos
