#include "htpaxos/client.hpp"

namespace htpaxos {

ClientAgent::ClientAgent(const Config& cfg, const Topology& topo,
                         uint32_t index)
    : cfg_(cfg), topo_(topo), index_(index),
      start_offset_(int64_t{index} * cfg.client_start_stagger) {}

void ClientAgent::on_start(Ctx& ctx) {
  if (cfg_.requests_per_client == 0) return;
  if (start_offset_ <= ctx.now) {
    submit(ctx);
  } else {
    ctx.set_timer(TimerKind::NextRequest, 0, start_offset_);
  }
}

SiteId ClientAgent::pick_target(Ctx& ctx) {
  const uint32_t d = cfg_.num_disseminators;
  uint32_t pick;
  if (cfg_.affinity == AffinityMode::Fixed) {
    pick = index_ % d;
  } else if (last_target_ && d > 1) {
    // retry goes somewhere new: draw from the other d-1 choices
    pick = static_cast<uint32_t>(ctx.rng->below(d - 1));
    if (pick >= *last_target_) ++pick;
  } else {
    pick = static_cast<uint32_t>(ctx.rng->below(d));
  }
  last_target_ = pick;
  return topo_.disseminator_sites[pick];
}

void ClientAgent::submit(Ctx& ctx) {
  RequestId rid{index_, seq_++};
  outstanding_ = Request{rid, make_request_payload(rid, cfg_.request_size)};
  last_target_.reset();
  transmit(ctx, true);
}

void ClientAgent::transmit(Ctx& ctx, bool first) {
  TraceEvent ev;
  ev.kind = first ? EvKind::Submit : EvKind::ClientRetry;
  ev.site = ctx.self;
  ev.rid = pack_request_id(outstanding_->id);
  SiteId target = pick_target(ctx);
  ev.peer = target;
  ctx.event(ev);
  ctx.send(target, ClientRequestMsg{*outstanding_});
  ctx.set_timer(TimerKind::ClientRetry, 0, ctx.now + cfg_.client_retry_timeout);
}

void ClientAgent::on_message(Ctx& ctx, SiteId from, const MessageBody& body) {
  const auto* reply = std::get_if<ClientReplyMsg>(&body);
  if (!reply) return;
  if (!outstanding_ || reply->id != outstanding_->id) {
    // A repeat reply for a request this client already finished means the
    // earlier ack was lost: re-ack so the sender stops retrying.
    if (reply->id.client == index_ && reply->id.seq < seq_)
      ctx.send(from, ClientReplyAckMsg{reply->id});
    return;
  }

  TraceEvent ev;
  ev.kind = EvKind::ReplyRecv;
  ev.site = ctx.self;
  ev.peer = from;
  ev.rid = pack_request_id(reply->id);
  ctx.event(ev);

  ctx.send(from, ClientReplyAckMsg{reply->id});
  ctx.cancel_timer(TimerKind::ClientRetry, 0);
  outstanding_.reset();

  if (seq_ < cfg_.requests_per_client) {
    const Time slot = start_offset_ + int64_t{seq_} * cfg_.request_period;
    if (slot <= ctx.now) {
      submit(ctx);
    } else {
      ctx.set_timer(TimerKind::NextRequest, 0, slot);
    }
  }
}

void ClientAgent::on_timer(Ctx& ctx, TimerKind kind, uint64_t) {
  switch (kind) {
    case TimerKind::NextRequest:
      submit(ctx);
      break;
    case TimerKind::ClientRetry:
      if (outstanding_) transmit(ctx, false);
      break;
    default:
      break;
  }
}

}  // namespace htpaxos
