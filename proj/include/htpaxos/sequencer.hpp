#pragma once

#include <map>
#include <optional>
#include <set>

#include "htpaxos/config.hpp"
#include "htpaxos/context.hpp"
#include "htpaxos/storage.hpp"

namespace htpaxos {

/// Orders stabilized batch ids.  Every sequencer tallies disseminator votes
/// and acts as an acceptor; the current leader assigns consecutive instances
/// to stable ids (at most alpha outstanding) and multicasts decisions.
/// Ballot b belongs to sequencer index b mod S, so competing candidates can
/// never collide on a ballot.
class SequencerAgent : public Agent {
 public:
  SequencerAgent(const Config& cfg, const Topology& topo, uint32_t index,
                 SiteStorage& storage);

  AgentKind kind() const override { return AgentKind::Sequencer; }
  void on_start(Ctx&) override;
  void on_message(Ctx&, SiteId from, const MessageBody&) override;
  void on_timer(Ctx&, TimerKind, uint64_t tag) override;

  bool leading() const { return is_leader_; }

 private:
  void on_votes(Ctx&, SiteId from, const std::vector<BatchId>&);
  void on_phase1a(Ctx&, SiteId from, Ballot);
  void on_phase1b(Ctx&, SiteId from, const Phase1bMsg&);
  void on_phase2a(Ctx&, SiteId from, const Phase2aMsg&);
  void on_phase2b(Ctx&, SiteId from, const Phase2bMsg&);
  void on_decision(Ctx&, const std::vector<DecisionEntry>&);

  void start_candidacy(Ctx&);
  void become_leader(Ctx&);
  void step_down(Ctx&);
  void decide(Ctx&, Instance, OrderedValue);
  void forget_instance(Ctx&, Instance);
  void arm_decide_flush(Ctx&);
  uint32_t seq_majority() const { return cfg_.num_sequencers / 2 + 1; }
  uint32_t dissem_majority() const { return cfg_.num_disseminators / 2 + 1; }
  Time suspicion_threshold() const {
    return (int64_t{cfg_.suspicion_periods} + 2 * int64_t{index_}) *
           cfg_.heartbeat_period;
  }

  const Config& cfg_;
  const Topology& topo_;
  uint32_t index_;
  SiteStorage& st_;

  // vote tallies (volatile; rebuilt by disseminator re-announcements)
  std::map<BatchId, std::set<SiteId>> vote_tally_;

  // leadership
  bool is_leader_ = false;
  bool candidate_ = false;
  Ballot ballot_ = 0;
  Time candidacy_start_ = 0;
  std::map<SiteId, Phase1bMsg> promises_;
  Time last_sign_ = 0;  // last evidence some leader is alive

  // leader proposal state
  Instance next_instance_ = 0;
  std::map<Instance, OrderedValue> in_flight_;  // proposed, not yet decided
  std::map<Instance, std::set<SiteId>> p2b_tally_;
  std::set<Instance> recovery_pending_;  // block fresh ids until re-decided

  // decision dispatch
  std::vector<DecisionEntry> decide_backlog_;
  std::map<Instance, OrderedValue> resend_entries_;  // answers to stale votes
  Time last_decision_sent_ = 0;

  // decided-log replay (leader, idle periods only)
  std::optional<Instance> replay_next_;
  Time last_sweep_start_ = 0;
};

}  // namespace htpaxos
