#pragma once

#include <map>
#include <string>
#include <vector>

#include "htpaxos/trace.hpp"

namespace htpaxos {

enum class CheckStatus : uint8_t { Pass, Fail, NotApplicable };

const char* status_label(CheckStatus s);

struct Verdict {
  std::string check;
  CheckStatus status = CheckStatus::Pass;
  std::string witness;  // first counterexample or the unmet precondition
  std::map<std::string, std::string> metrics;

  bool failed() const { return status == CheckStatus::Fail; }
  std::string to_string() const;
};

/// Fault-agnostic: holds on every run, crashed or lossy or otherwise.
///  - executions at any two (site, incarnation) logs are prefix-comparable
///  - executed requests were submitted; decided batch ids were minted
///  - one value per instance, one instance per batch id
///  - no request executes twice within one incarnation
///  - a reply before the decision requires a majority of recorded holders
///  - no two batches were minted under one id
Verdict check_safety(const Trace& t);

/// Requires crash quorums intact (majority of disseminators and sequencers
/// never crashed, some learner never crashed) and a finite gst; otherwise
/// NotApplicable.  Then every submitted request must be answered and be
/// executed by every never-crashed learner.
Verdict check_liveness(const Trace& t);

/// Requires the clean single-request configuration (no loss, no dup, unit
/// delays, batch size 1, no faults, piggyback off); otherwise NotApplicable.
/// The earliest request must be answered in exactly 4 hops and first
/// executed in exactly 6.
Verdict check_delays(const Trace& t);

std::vector<Verdict> check_all(const Trace& t);

}  // namespace htpaxos
