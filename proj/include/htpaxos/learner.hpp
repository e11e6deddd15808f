#pragma once

#include <set>

#include "htpaxos/config.hpp"
#include "htpaxos/context.hpp"
#include "htpaxos/storage.hpp"

namespace htpaxos {

/// Applies decided batches in instance order.  Execution state is volatile:
/// a restarted learner replays the whole decided log under a fresh
/// incarnation number, pulling any batch body it does not hold.
class LearnerAgent : public Agent {
 public:
  LearnerAgent(const Config& cfg, const Topology& topo, uint32_t index,
               SiteStorage& storage);

  AgentKind kind() const override { return AgentKind::Learner; }
  void on_start(Ctx&) override;
  void on_message(Ctx&, SiteId from, const MessageBody&) override;
  void on_timer(Ctx&, TimerKind, uint64_t tag) override;

  uint64_t seen_count() const { return seen_.size(); }

 private:
  void execute_ready(Ctx&);
  void ensure_pull(Ctx&, BatchId);
  void pull_step(Ctx&, BatchId);

  const Config& cfg_;
  const Topology& topo_;
  uint32_t index_;
  SiteStorage& st_;

  Instance frontier_ = 0;           // next instance to execute
  std::set<RequestId> seen_;        // executed this incarnation
  std::set<BatchId> missing_;       // decided but not held; pull outstanding
  uint32_t pull_cursor_ = 0;
};

}  // namespace htpaxos
