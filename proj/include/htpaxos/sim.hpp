#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "htpaxos/config.hpp"
#include "htpaxos/trace.hpp"

namespace htpaxos {

/// Two independent LANs: index 0 carries request payloads (client requests,
/// batches, batch pulls' replies), index 1 carries the small control plane.
/// Before gst, messages are lost/duplicated with the given probabilities;
/// from gst on the network is reliable.  gst == -1 keeps it adversarial for
/// the whole run.  Delays are uniform per message in [min, max], always >= 1.
struct NetConfig {
  double loss[2] = {0, 0};
  double dup[2] = {0, 0};
  int64_t delay_min[2] = {1, 1};
  int64_t delay_max[2] = {1, 1};
  int64_t gst = 0;

  std::string validate() const;  // empty string when well-formed
};

/// Scripted whole-site crash.  restart_at < 0 means the site stays down.
struct FaultEvent {
  SiteId site = 0;
  Time crash_at = 0;
  Time restart_at = -1;
};

/// Scripted drop of matching messages, checked at delivery time.
/// dst == -1 matches any destination; the window is inclusive.
struct DropRule {
  MsgType type = MsgType::ClientRequest;
  int32_t dst = -1;
  Time from = 0;
  Time to = 0;
};

struct Scenario {
  std::string name = "run";
  Config cfg;
  NetConfig net;
  std::vector<FaultEvent> faults;
  std::vector<DropRule> drops;
  Time horizon = 1000;
  uint64_t seed = 1;
  Time window_start = 0, window_end = 0;  // end <= start disables the window
  bool full_trace = false;

  std::string validate() const;
};

/// Deterministic discrete-event execution of one scenario.  The run stops
/// early once every client is answered, every live learner has executed
/// everything submitted, and no foreground work remains; otherwise it stops
/// at the horizon.
Trace run_scenario(const Scenario& sc);

}  // namespace htpaxos
