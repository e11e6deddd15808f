#pragma once

#include <optional>

#include "htpaxos/config.hpp"
#include "htpaxos/context.hpp"

namespace htpaxos {

/// Closed-loop request source.  One request is outstanding at a time; the
/// next is submitted at the later of its period slot and the previous reply.
/// An unanswered request is resubmitted every client_retry_timeout, to a
/// fresh disseminator under random affinity.
class ClientAgent : public Agent {
 public:
  ClientAgent(const Config& cfg, const Topology& topo, uint32_t index);

  AgentKind kind() const override { return AgentKind::Client; }
  void on_start(Ctx&) override;
  void on_message(Ctx&, SiteId from, const MessageBody&) override;
  void on_timer(Ctx&, TimerKind, uint64_t tag) override;

  bool done() const { return seq_ == cfg_.requests_per_client && !outstanding_; }
  uint32_t submitted() const { return seq_; }

 private:
  void submit(Ctx&);
  void transmit(Ctx&, bool first);
  SiteId pick_target(Ctx&);

  const Config& cfg_;
  const Topology& topo_;
  uint32_t index_;
  Time start_offset_;
  uint32_t seq_ = 0;  // requests minted so far
  std::optional<Request> outstanding_;
  std::optional<uint32_t> last_target_;  // disseminator index of last send
};

}  // namespace htpaxos
