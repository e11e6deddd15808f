#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "htpaxos/ids.hpp"
#include "htpaxos/message.hpp"

namespace htpaxos {

enum class EvKind : uint8_t {
  Submit,       // client's first transmission of a request
  ClientRetry,  // client retransmission after its retry timeout
  ReplyRecv,    // client received its first matching reply
  ReplySent,    // a disseminator first emitted a reply (flag: 1 tally, 2 decided)
  BatchMint,    // disseminator formed a batch (bytes = content hash)
  BatchHeld,    // a site first recorded a batch in its request store
  Stable,       // a sequencer enqueued an id after a majority of votes
  Proposed,     // the leader assigned an instance to a value
  Accepted,     // an acceptor recorded (instance, ballot, value)
  Decide,       // a site first recorded decided[instance] (flag: 1 = conflict)
  Execute,      // a learner executed one request
  Elected,      // a sequencer won an election
  Crash,
  Restart,
  MsgSend,      // full trace level only
  MsgDeliver,   // full trace level only
  MsgDrop,      // full trace level only (flag: 1 loss, 2 dead dst, 3 drop rule)
};
inline constexpr int kEvKindCount = 17;

const char* ev_label(EvKind k);

// One flat record; unused fields stay zero for a given kind.
struct TraceEvent {
  Time time = 0;
  EvKind kind = EvKind::Submit;
  SiteId site = 0;       // acting site
  SiteId peer = 0;       // counterpart (message src/dst, reply's client, ...)
  uint32_t rid = 0;      // packed RequestId
  uint32_t value = 0;    // packed BatchId or ordered-value word
  Instance instance = 0;
  Ballot ballot = 0;
  uint32_t lifetime = 0; // site incarnation (Execute)
  uint8_t lan = 0;
  uint8_t msg_type = 0;
  uint8_t flag = 0;
  uint64_t bytes = 0;    // message size, or batch content hash

  bool operator==(const TraceEvent&) const = default;
};

// Scenario facts the oracles need, carried alongside the event log.
struct TraceMeta {
  uint32_t disseminators = 0;
  uint32_t sequencers = 0;
  uint32_t learners = 0;
  uint32_t clients = 0;
  bool colocate_sequencers = false;
  bool colocate_learners = false;
  uint32_t batch_max_size = 1;
  uint32_t alpha = 1;
  bool piggyback = false;
  uint32_t requests_per_client = 1;
  double loss[2] = {0, 0};
  double dup[2] = {0, 0};
  int64_t delay_min[2] = {1, 1};
  int64_t delay_max[2] = {1, 1};
  int64_t gst = 0;  // -1: loss/dup never switch off
  int64_t horizon = 0;
  uint64_t seed = 0;
  uint32_t fault_count = 0;  // scheduled crash events
  std::vector<SiteId> disseminator_sites;
  std::vector<SiteId> sequencer_sites;
  std::vector<SiteId> learner_sites;
  std::vector<SiteId> client_sites;
  // outcome
  bool quiescent = false;
  int64_t end_time = 0;

  bool operator==(const TraceMeta&) const = default;
};

// Per-site network counters. Multicast counts once at the sender; each
// network delivery counts at the receiver. Same-site deliveries bypass the
// network and land in the loopback column.
struct SiteCounters {
  uint64_t in_msgs[2][kMsgTypeCount] = {};
  uint64_t out_msgs[2][kMsgTypeCount] = {};
  uint64_t in_bytes[2][kMsgTypeCount] = {};
  uint64_t out_bytes[2][kMsgTypeCount] = {};
  uint64_t loop_msgs[kMsgTypeCount] = {};

  uint64_t total_msgs(bool include_reply_acks) const;
  bool operator==(const SiteCounters&) const = default;
};

struct Trace {
  TraceMeta meta;
  std::vector<TraceEvent> events;
  std::vector<SiteCounters> counters;         // whole run
  std::vector<SiteCounters> window_counters;  // [window_start, window_end)
  int64_t window_start = 0, window_end = 0;

  void add(TraceEvent ev) { events.push_back(ev); }

  // line-oriented text form, format version 1; from_text throws
  // std::runtime_error mentioning the offending line number
  std::string to_text() const;
  static Trace from_text(const std::string& text);
  uint64_t content_hash() const;

  // per-site, per-type CSV; reply-ack rows dropped when excluded
  std::string counters_csv(bool include_reply_acks) const;
};

}  // namespace htpaxos
