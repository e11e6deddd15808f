#pragma once

#include <map>
#include <set>

#include "htpaxos/config.hpp"
#include "htpaxos/context.hpp"
#include "htpaxos/storage.hpp"

namespace htpaxos {

/// Batches client requests, spreads batches across the first LAN, votes
/// batch ids to the sequencers, and answers clients once a batch is held by
/// a majority of disseminators (or is decided, whichever is learned first).
/// Also serves batch pulls from learners and peers.
class DisseminatorAgent : public Agent {
 public:
  DisseminatorAgent(const Config& cfg, const Topology& topo, uint32_t index,
                    SiteStorage& storage);

  AgentKind kind() const override { return AgentKind::Disseminator; }
  void on_start(Ctx&) override;
  void on_message(Ctx&, SiteId from, const MessageBody&) override;
  void on_timer(Ctx&, TimerKind, uint64_t tag) override;

 private:
  void on_client_request(Ctx&, SiteId from, const Request&);
  void on_batch(Ctx&, SiteId from, const Batch&, bool acked);
  void on_batch_ack(Ctx&, SiteId from, BatchId);
  void on_resend(Ctx&, SiteId from, BatchId);
  void on_decision_entries(Ctx&, const std::vector<DecisionEntry>&);

  void flush_batch(Ctx&);
  void queue_vote(Ctx&, BatchId, bool loopback);
  void maybe_reply(Ctx&, BatchId);
  void send_reply(Ctx&, RequestId, SiteId client, BatchId, uint8_t path);
  void relay_step(Ctx&, BatchId);
  uint32_t majority() const { return cfg_.num_disseminators / 2 + 1; }

  const Config& cfg_;
  const Topology& topo_;
  uint32_t index_;
  SiteStorage& st_;

  // batch under construction
  std::vector<Request> pending_;
  std::map<RequestId, SiteId> pending_origin_;

  // voting
  std::set<BatchId> vote_backlog_;  // not yet announced
  std::set<BatchId> vote_pending_;  // announced, not yet decided

  // replies
  std::map<BatchId, std::set<SiteId>> ack_tally_;
  std::map<BatchId, std::map<RequestId, SiteId>> origin_;
  std::set<RequestId> replied_;  // client acknowledged the reply
  struct PendingReply {
    SiteId client;
    uint32_t attempts;
  };
  std::map<RequestId, PendingReply> pending_replies_;

  // pull machinery
  std::map<BatchId, SiteId> ack_missing_;  // acked by peer, not held here
  std::map<BatchId, std::set<SiteId>> relay_requesters_;
  std::map<BatchId, uint32_t> relay_cursor_;
};

}  // namespace htpaxos
