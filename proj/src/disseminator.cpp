#include "htpaxos/disseminator.hpp"

#include <cassert>

#include "htpaxos/decide.hpp"

namespace htpaxos {

DisseminatorAgent::DisseminatorAgent(const Config& cfg, const Topology& topo,
                                     uint32_t index, SiteStorage& storage)
    : cfg_(cfg), topo_(topo), index_(index), st_(storage) {}

void DisseminatorAgent::on_start(Ctx& ctx) {
  // Recovery: anything held but undecided must be announced again; votes
  // and ack tallies are volatile, so start the cycle from scratch.
  for (const auto& [id, batch] : st_.requests_set) {
    if (!st_.is_decided(id)) queue_vote(ctx, id, /*loopback=*/true);
  }
}

void DisseminatorAgent::queue_vote(Ctx& ctx, BatchId id, bool loopback) {
  vote_backlog_.insert(id);
  ctx.set_timer_keep_earliest(TimerKind::VoteFlush, 0,
                              ctx.now + (loopback ? 1 : 0));
}

void DisseminatorAgent::on_client_request(Ctx& ctx, SiteId from,
                                          const Request& req) {
  auto idx = st_.request_index.find(req.id);
  if (idx != st_.request_index.end()) {
    // Already in some held batch.  Re-answer immediately if an answer is
    // due; otherwise just remember who is waiting.
    BatchId b = idx->second;
    origin_[b][req.id] = from;
    if (replied_.count(req.id) || st_.is_decided(b)) {
      if (!pending_replies_.count(req.id))
        ctx.send(from, ClientReplyMsg{req.id});
      return;
    }
    maybe_reply(ctx, b);
    return;
  }
  if (pending_origin_.count(req.id)) {
    pending_origin_[req.id] = from;
    return;
  }
  pending_.push_back(req);
  pending_origin_[req.id] = from;
  if (pending_.size() == 1)
    ctx.set_timer(TimerKind::BatchTimeout, 0, ctx.now + cfg_.batch_timeout);
  if (pending_.size() >= cfg_.batch_max_size) flush_batch(ctx);
}

void DisseminatorAgent::flush_batch(Ctx& ctx) {
  if (pending_.empty()) return;
  assert(st_.next_batch_seq <= kMaxPackedSeq);
  Batch batch{BatchId{index_, st_.next_batch_seq++}, std::move(pending_)};
  pending_.clear();
  ctx.cancel_timer(TimerKind::BatchTimeout, 0);

  bool fresh = st_.record_batch(batch);
  assert(fresh);
  (void)fresh;

  TraceEvent mint;
  mint.kind = EvKind::BatchMint;
  mint.site = ctx.self;
  mint.value = pack_batch_id(batch.id);
  mint.bytes = batch.content_hash();
  ctx.event(mint);
  TraceEvent held;
  held.kind = EvKind::BatchHeld;
  held.site = ctx.self;
  held.value = pack_batch_id(batch.id);
  ctx.event(held);

  auto& org = origin_[batch.id];
  for (const Request& r : batch.requests) {
    auto it = pending_origin_.find(r.id);
    if (it != pending_origin_.end()) {
      org[r.id] = it->second;
      pending_origin_.erase(it);
    }
  }
  ctx.multicast(topo_.group_disseminators_and_learners,
                ForwardBatchMsg{std::move(batch)});
}

void DisseminatorAgent::on_batch(Ctx& ctx, SiteId from, const Batch& batch,
                                 bool acked) {
  bool fresh = st_.record_batch(batch);
  if (fresh) {
    TraceEvent held;
    held.kind = EvKind::BatchHeld;
    held.site = ctx.self;
    held.value = pack_batch_id(batch.id);
    ctx.event(held);
  }
  if (acked) ctx.send(from, BatchAckMsg{batch.id});
  if (!st_.is_decided(batch.id)) {
    queue_vote(ctx, batch.id, from == ctx.self);
  }
  if (auto it = ack_missing_.find(batch.id); it != ack_missing_.end()) {
    ack_missing_.erase(it);
    ctx.cancel_timer(TimerKind::AckMissing, pack_batch_id(batch.id));
  }
  if (auto it = relay_requesters_.find(batch.id);
      it != relay_requesters_.end()) {
    for (SiteId q : it->second)
      ctx.send(q, ResendReplyMsg{st_.requests_set.at(batch.id)});
    relay_requesters_.erase(it);
    relay_cursor_.erase(batch.id);
    ctx.cancel_timer(TimerKind::RelayRetry, pack_batch_id(batch.id));
  }
  maybe_reply(ctx, batch.id);
}

void DisseminatorAgent::on_batch_ack(Ctx& ctx, SiteId from, BatchId id) {
  if (st_.holds(id)) {
    ack_tally_[id].insert(from);
    maybe_reply(ctx, id);
    return;
  }
  // A peer acknowledged a batch this site never received: pull it.
  ack_missing_[id] = from;
  ctx.set_timer(TimerKind::AckMissing, pack_batch_id(id),
                ctx.now + cfg_.ack_missing_timeout);
}

void DisseminatorAgent::maybe_reply(Ctx& ctx, BatchId id) {
  auto org = origin_.find(id);
  if (org == origin_.end() || org->second.empty()) return;
  uint8_t path;
  if (st_.is_decided(id)) {
    path = 2;
  } else if (ack_tally_[id].size() >= majority()) {
    path = 1;
  } else {
    return;
  }
  for (const auto& [rid, client] : org->second) {
    if (replied_.count(rid) || pending_replies_.count(rid)) continue;
    send_reply(ctx, rid, client, id, path);
  }
}

void DisseminatorAgent::send_reply(Ctx& ctx, RequestId rid, SiteId client,
                                   BatchId id, uint8_t path) {
  TraceEvent ev;
  ev.kind = EvKind::ReplySent;
  ev.site = ctx.self;
  ev.peer = client;
  ev.rid = pack_request_id(rid);
  ev.value = pack_batch_id(id);
  ev.flag = path;
  ctx.event(ev);
  ctx.send(client, ClientReplyMsg{rid});
  pending_replies_[rid] = {client, 1};
  ctx.set_timer(TimerKind::ReplyRetry, pack_request_id(rid),
                ctx.now + cfg_.reply_retry_timeout);
}

void DisseminatorAgent::on_resend(Ctx& ctx, SiteId from, BatchId id) {
  if (st_.holds(id)) {
    ctx.send(from, ResendReplyMsg{st_.requests_set.at(id)});
    return;
  }
  if (st_.is_decided(id)) {
    // Decided but not held here: fetch it from a peer on the requester's
    // behalf and forward once it lands.
    bool first = relay_requesters_[id].insert(from).second &&
                 relay_requesters_[id].size() == 1;
    if (first) relay_step(ctx, id);
  }
  // Neither held nor decided: nothing useful to do; the requester retries.
}

void DisseminatorAgent::relay_step(Ctx& ctx, BatchId id) {
  const auto& sites = topo_.disseminator_sites;
  uint32_t& cur = relay_cursor_[id];
  for (uint32_t probe = 0; probe < sites.size(); ++probe) {
    SiteId target = sites[cur % sites.size()];
    ++cur;
    if (target == ctx.self) continue;
    ctx.send(target, ResendMsg{id});
    break;
  }
  ctx.set_timer(TimerKind::RelayRetry, pack_batch_id(id),
                ctx.now + cfg_.relay_retry_timeout);
}

void DisseminatorAgent::on_decision_entries(
    Ctx& ctx, const std::vector<DecisionEntry>& entries) {
  for (const DecisionEntry& e : entries) {
    apply_decision(ctx, st_, e.instance, e.value);
    if (!e.value) continue;
    BatchId id = *e.value;
    vote_backlog_.erase(id);
    vote_pending_.erase(id);
    maybe_reply(ctx, id);
  }
  if (vote_backlog_.empty() && vote_pending_.empty())
    ctx.cancel_timer(TimerKind::Revote, 0);
}

void DisseminatorAgent::on_message(Ctx& ctx, SiteId from,
                                   const MessageBody& body) {
  if (const auto* m = std::get_if<ClientRequestMsg>(&body)) {
    on_client_request(ctx, from, m->request);
  } else if (const auto* m = std::get_if<ForwardBatchMsg>(&body)) {
    on_batch(ctx, from, m->batch, /*acked=*/true);
  } else if (const auto* m = std::get_if<ResendReplyMsg>(&body)) {
    on_batch(ctx, from, m->batch, /*acked=*/false);
  } else if (const auto* m = std::get_if<BatchAckMsg>(&body)) {
    on_batch_ack(ctx, from, m->id);
  } else if (const auto* m = std::get_if<ClientReplyAckMsg>(&body)) {
    replied_.insert(m->id);
    if (pending_replies_.erase(m->id))
      ctx.cancel_timer(TimerKind::ReplyRetry, pack_request_id(m->id));
  } else if (const auto* m = std::get_if<ResendMsg>(&body)) {
    on_resend(ctx, from, m->id);
  } else if (const auto* m = std::get_if<DecisionMsg>(&body)) {
    on_decision_entries(ctx, m->entries);
  }
}

void DisseminatorAgent::on_timer(Ctx& ctx, TimerKind kind, uint64_t tag) {
  switch (kind) {
    case TimerKind::BatchTimeout:
      flush_batch(ctx);
      break;

    case TimerKind::VoteFlush: {
      if (vote_backlog_.empty()) break;
      std::vector<BatchId> ids(vote_backlog_.begin(), vote_backlog_.end());
      ctx.multicast(topo_.group_sequencers, IdVoteMsg{std::move(ids)});
      vote_pending_.insert(vote_backlog_.begin(), vote_backlog_.end());
      vote_backlog_.clear();
      ctx.set_timer(TimerKind::Revote, 0, ctx.now + cfg_.revote_timeout);
      break;
    }

    case TimerKind::Revote: {
      if (vote_pending_.empty()) break;
      std::vector<BatchId> ids(vote_pending_.begin(), vote_pending_.end());
      ctx.multicast(topo_.group_sequencers, IdVoteMsg{std::move(ids)});
      // Re-spread stuck batches wholesale: the original multicast may have
      // been lost, and a past ack majority may since have crashed, so votes
      // alone can be short of a majority forever.
      for (BatchId id : vote_pending_)
        ctx.multicast(topo_.group_disseminators_and_learners,
                      ForwardBatchMsg{st_.requests_set.at(id)});
      ctx.set_timer(TimerKind::Revote, 0, ctx.now + cfg_.revote_timeout);
      break;
    }

    case TimerKind::ReplyRetry: {
      RequestId rid = unpack_request_id(static_cast<uint32_t>(tag));
      auto it = pending_replies_.find(rid);
      if (it == pending_replies_.end()) break;
      if (it->second.attempts >= cfg_.reply_retry_limit) {
        pending_replies_.erase(it);  // client presumed gone
        break;
      }
      ++it->second.attempts;
      ctx.send(it->second.client, ClientReplyMsg{rid});
      ctx.set_timer(TimerKind::ReplyRetry, tag,
                    ctx.now + cfg_.reply_retry_timeout);
      break;
    }

    case TimerKind::AckMissing: {
      BatchId id = unpack_batch_id(static_cast<uint32_t>(tag));
      auto it = ack_missing_.find(id);
      if (it == ack_missing_.end() || st_.holds(id)) break;
      ctx.send(it->second, ResendMsg{id});
      ctx.set_timer(TimerKind::AckMissing, tag,
                    ctx.now + cfg_.ack_missing_timeout);
      break;
    }

    case TimerKind::RelayRetry: {
      BatchId id = unpack_batch_id(static_cast<uint32_t>(tag));
      if (st_.holds(id) || !relay_requesters_.count(id)) break;
      relay_step(ctx, id);
      break;
    }

    default:
      break;
  }
}

}  // namespace htpaxos
