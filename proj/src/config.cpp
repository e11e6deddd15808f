#include "htpaxos/config.hpp"

#include <algorithm>
#include <set>

namespace htpaxos {

std::string Config::validate() const {
  if (num_disseminators < 3) return "disseminators must be >= 3";
  if (num_sequencers < 3) return "sequencers must be >= 3";
  if (num_learners < 1) return "learners must be >= 1";
  if (colocate_learners && num_learners < num_disseminators)
    return "co-located learners require learners >= disseminators";
  if (colocate_sequencers && num_sequencers > num_disseminators)
    return "co-located sequencers require sequencers <= disseminators";
  if (alpha < 1) return "alpha must be >= 1";
  if (batch_max_size < 1) return "batch_max_size must be >= 1";
  if (batch_timeout < 1) return "batch_timeout must be >= 1";
  if (client_retry_timeout < 1 || revote_timeout < 1 || reply_retry_timeout < 1 ||
      ack_missing_timeout < 1 || relay_retry_timeout < 1 || pull_retry_timeout < 1 ||
      proposal_retry_timeout < 1 || heartbeat_period < 1 || replay_idle_period < 1)
    return "all timers must be >= 1";
  if (reply_retry_limit < 1) return "reply_retry_limit must be >= 1";
  if (suspicion_periods < 1) return "suspicion_periods must be >= 1";
  if (replay_chunk < 1) return "replay_chunk must be >= 1";
  if (num_clients < 1) return "clients must be >= 1";
  if (requests_per_client < 1) return "requests_per_client must be >= 1";
  if (requests_per_client > kMaxPackedSeq) return "requests_per_client exceeds id space";
  if (request_period < 1) return "request_period must be >= 1";
  if (request_size < 1) return "request_size must be >= 1";
  if (client_start_stagger < 0) return "client_start_stagger must be >= 0";

  const uint64_t standalone_seq = colocate_sequencers ? 0 : num_sequencers;
  const uint64_t standalone_lrn =
      colocate_learners ? num_learners - num_disseminators : num_learners;
  const uint64_t sites =
      uint64_t(num_disseminators) + standalone_seq + standalone_lrn + num_clients;
  if (sites > kMaxPackedNode + 1) return "site count exceeds id space";
  return "";
}

Topology::Topology(const Config& cfg) {
  SiteId next = 0;
  for (uint32_t d = 0; d < cfg.num_disseminators; ++d) {
    disseminator_sites.push_back(next);
    disseminator_index[next] = d;
    ++next;
  }
  for (uint32_t s = 0; s < cfg.num_sequencers; ++s) {
    SiteId site = cfg.colocate_sequencers ? disseminator_sites[s] : next++;
    sequencer_sites.push_back(site);
    sequencer_index[site] = s;
  }
  for (uint32_t l = 0; l < cfg.num_learners; ++l) {
    SiteId site = (cfg.colocate_learners && l < cfg.num_disseminators)
                      ? disseminator_sites[l]
                      : next++;
    learner_sites.push_back(site);
    learner_index[site] = l;
  }
  for (uint32_t c = 0; c < cfg.num_clients; ++c) {
    client_sites.push_back(next);
    client_index[next] = c;
    ++next;
  }
  num_sites = next;

  auto dedup = [](std::vector<SiteId> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  group_disseminators = dedup(disseminator_sites);
  group_sequencers = dedup(sequencer_sites);

  std::vector<SiteId> dl = disseminator_sites;
  dl.insert(dl.end(), learner_sites.begin(), learner_sites.end());
  group_disseminators_and_learners = dedup(std::move(dl));

  std::vector<SiteId> oc = group_disseminators_and_learners;
  oc.insert(oc.end(), sequencer_sites.begin(), sequencer_sites.end());
  group_order_consumers = dedup(std::move(oc));
}

}  // namespace htpaxos
