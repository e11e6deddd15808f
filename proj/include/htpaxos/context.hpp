#pragma once

#include <compare>
#include <cstdint>
#include <utility>
#include <vector>

#include "htpaxos/ids.hpp"
#include "htpaxos/message.hpp"
#include "htpaxos/rng.hpp"
#include "htpaxos/trace.hpp"

namespace htpaxos {

enum class AgentKind : uint8_t { Disseminator, Sequencer, Learner, Client };

enum class TimerKind : uint8_t {
  NextRequest,    // client: scheduled submission
  ClientRetry,    // client: resubmit outstanding request
  BatchTimeout,   // disseminator: flush a partial batch
  VoteFlush,      // disseminator: coalesced id-vote multicast (end of tick)
  Revote,         // disseminator: re-announce undecided ids
  ReplyRetry,     // disseminator: unacked client reply
  AckMissing,     // disseminator: ack arrived for a batch it never saw
  RelayRetry,     // disseminator: outstanding relayed batch fetch
  PullRetry,      // learner: outstanding batch fetch
  ProposeFlush,   // leader: coalesced proposal multicast (end of tick)
  DecideFlush,    // leader: coalesced decision multicast (end of tick)
  ProposalRetry,  // leader: re-multicast undecided proposals
  Heartbeat,      // leader: liveness signal / decided-log replay
  Suspicion,      // sequencer: leader failure detection
};

// Flush timers run in the tick's second phase so one coalesced message can
// cover everything that arrived during the first.
inline bool timer_is_flush(TimerKind k) {
  return k == TimerKind::VoteFlush || k == TimerKind::ProposeFlush ||
         k == TimerKind::DecideFlush;
}

// Background timers (and the sends they trigger) don't hold the run open.
inline bool timer_is_background(TimerKind k) {
  return k == TimerKind::Heartbeat || k == TimerKind::Suspicion;
}

const char* timer_label(TimerKind k);

struct TimerKey {
  TimerKind kind;
  uint64_t tag = 0;  // packed id or 0 for singleton timers
  auto operator<=>(const TimerKey&) const = default;
};

// Buffered effects of one agent callback. The kernel applies them after the
// callback returns: loopback deliveries run inline, network deliveries are
// scheduled with sampled delay, timer sets/cancels update the registry.
struct Ctx {
  Time now = 0;
  SiteId self = 0;
  Rng* rng = nullptr;
  Trace* trace = nullptr;
  bool full_trace = false;
  uint32_t lifetime = 0;

  struct Send {
    SiteId dst;
    MessageBody body;
    bool background;
  };
  struct Multicast {
    std::vector<SiteId> dsts;
    MessageBody body;
    bool background;
  };
  struct TimerSet {
    TimerKey key;
    Time at;
    bool keep_earliest;  // don't move an already-pending earlier fire later
  };

  std::vector<Send> sends;
  std::vector<Multicast> multicasts;
  std::vector<TimerSet> timer_sets;
  std::vector<TimerKey> timer_cancels;

  void send(SiteId dst, MessageBody body, bool background = false) {
    sends.push_back({dst, std::move(body), background});
  }
  void multicast(std::vector<SiteId> dsts, MessageBody body,
                 bool background = false) {
    multicasts.push_back({std::move(dsts), std::move(body), background});
  }
  void set_timer(TimerKind kind, uint64_t tag, Time at) {
    timer_sets.push_back({{kind, tag}, at, false});
  }
  void set_timer_keep_earliest(TimerKind kind, uint64_t tag, Time at) {
    timer_sets.push_back({{kind, tag}, at, true});
  }
  void cancel_timer(TimerKind kind, uint64_t tag) {
    timer_cancels.push_back({kind, tag});
  }
  void event(TraceEvent ev) {
    ev.time = now;
    if (trace) trace->add(ev);
  }
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual AgentKind kind() const = 0;
  virtual void on_start(Ctx&) = 0;
  virtual void on_message(Ctx&, SiteId from, const MessageBody&) = 0;
  virtual void on_timer(Ctx&, TimerKind, uint64_t tag) = 0;
};

}  // namespace htpaxos
