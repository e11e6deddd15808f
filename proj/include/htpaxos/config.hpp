#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "htpaxos/ids.hpp"

namespace htpaxos {

enum class AffinityMode : uint8_t {
  Random,  // each submission (and retry) picks a uniformly random disseminator
  Fixed,   // client c always targets disseminator c % D (measurement runs)
};

// Protocol, topology, timer, and workload knobs. Network parameters live in
// NetConfig (sim.hpp); fault schedules in Scenario (scenario.hpp).
struct Config {
  uint32_t num_disseminators = 3;
  uint32_t num_sequencers = 3;
  uint32_t num_learners = 3;
  bool colocate_sequencers = false;  // sequencer i shares disseminator site i
  bool colocate_learners = true;     // first D learners live on disseminator sites
  uint32_t num_clients = 1;

  uint32_t batch_max_size = 1;
  int64_t batch_timeout = 1;  // flush a partial batch after this many ticks
  uint32_t alpha = 16;        // max concurrently undecided proposals at the leader
  bool piggyback = false;
  bool count_reply_acks = true;  // include ClientReplyAck rows in count reports
  AffinityMode affinity = AffinityMode::Random;

  // timers (simulated ticks)
  int64_t client_retry_timeout = 50;
  int64_t revote_timeout = 20;
  int64_t reply_retry_timeout = 20;
  uint32_t reply_retry_limit = 10;
  int64_t ack_missing_timeout = 20;
  int64_t relay_retry_timeout = 20;
  int64_t pull_retry_timeout = 20;
  int64_t proposal_retry_timeout = 20;
  int64_t heartbeat_period = 5;
  uint32_t suspicion_periods = 4;
  int64_t replay_idle_period = 40;  // min gap between decided-log replay sweeps
  uint32_t replay_chunk = 64;       // decision entries per replay message

  // workload
  uint32_t requests_per_client = 1;
  int64_t request_period = 1;       // submissions align to multiples of this
  uint32_t request_size = 32;
  int64_t client_start_stagger = 0; // client c first submits at c * stagger

  // empty string when valid, else a description of the first problem
  std::string validate() const;
};

// Site layout. Sites are numbered: disseminator sites first, then standalone
// sequencer sites (unless co-located), then standalone learner sites, then
// one site per client. Co-located agents share one site and its storage.
struct Topology {
  explicit Topology(const Config& cfg);

  uint32_t num_sites = 0;
  std::vector<SiteId> disseminator_sites;  // index: disseminator id
  std::vector<SiteId> sequencer_sites;     // index: sequencer id
  std::vector<SiteId> learner_sites;       // index: learner id
  std::vector<SiteId> client_sites;        // index: client id

  std::map<SiteId, uint32_t> disseminator_index;
  std::map<SiteId, uint32_t> sequencer_index;
  std::map<SiteId, uint32_t> learner_index;
  std::map<SiteId, uint32_t> client_index;

  // multicast groups (sorted, deduplicated site lists)
  std::vector<SiteId> group_disseminators;
  std::vector<SiteId> group_sequencers;
  std::vector<SiteId> group_disseminators_and_learners;   // ForwardBatch targets
  std::vector<SiteId> group_order_consumers;              // Decision targets

  bool has_disseminator(SiteId s) const { return disseminator_index.count(s) != 0; }
  bool has_sequencer(SiteId s) const { return sequencer_index.count(s) != 0; }
  bool has_learner(SiteId s) const { return learner_index.count(s) != 0; }
  bool has_client(SiteId s) const { return client_index.count(s) != 0; }

  // ballots partition by sequencer: ballot b belongs to sequencer b % S
  uint32_t ballot_owner_index(Ballot b, uint32_t S) const { return b % S; }
};

}  // namespace htpaxos
