#include "htpaxos/sequencer.hpp"

#include "htpaxos/decide.hpp"

namespace htpaxos {

SequencerAgent::SequencerAgent(const Config& cfg, const Topology& topo,
                               uint32_t index, SiteStorage& storage)
    : cfg_(cfg), topo_(topo), index_(index), st_(storage) {}

void SequencerAgent::on_start(Ctx& ctx) {
  last_sign_ = ctx.now;
  last_sweep_start_ = ctx.now;
  ctx.set_timer(TimerKind::Suspicion, 0, ctx.now + cfg_.heartbeat_period);
  if (index_ == 0 && ctx.now == 0 && st_.restarts == 0) {
    // Ballot 0 is implicitly promised everywhere, so index 0 starts as
    // leader without a prepare round.
    is_leader_ = true;
    ballot_ = 0;
    next_instance_ = 0;
    last_decision_sent_ = 0;
    TraceEvent ev;
    ev.kind = EvKind::Elected;
    ev.site = ctx.self;
    ev.ballot = 0;
    ctx.event(ev);
    ctx.set_timer(TimerKind::Heartbeat, 0, ctx.now + cfg_.heartbeat_period);
  }
}

void SequencerAgent::arm_decide_flush(Ctx& ctx) {
  ctx.set_timer_keep_earliest(TimerKind::DecideFlush, 0, ctx.now);
}

void SequencerAgent::on_votes(Ctx& ctx, SiteId from,
                              const std::vector<BatchId>& ids) {
  for (BatchId id : ids) {
    if (st_.is_decided(id)) {
      // The voter missed the decision; repeat it with the next flush.
      if (is_leader_) {
        Instance inst = st_.decided_index.at(id);
        resend_entries_.emplace(inst, OrderedValue{id});
        arm_decide_flush(ctx);
      }
      continue;
    }
    if (st_.stable_seen.count(id)) continue;
    auto& tally = vote_tally_[id];
    tally.insert(from);
    if (tally.size() == dissem_majority()) {
      st_.stable_seen.insert(id);
      st_.stable_ids.push_back(id);
      vote_tally_.erase(id);
      TraceEvent ev;
      ev.kind = EvKind::Stable;
      ev.site = ctx.self;
      ev.value = pack_batch_id(id);
      ctx.event(ev);
      if (is_leader_ && recovery_pending_.empty())
        ctx.set_timer_keep_earliest(TimerKind::ProposeFlush, 0, ctx.now);
    }
  }
}

void SequencerAgent::on_phase1a(Ctx& ctx, SiteId from, Ballot b) {
  if (b < st_.promised) return;  // no nacks; the candidate retries
  st_.promised = b;
  if (is_leader_ && b > ballot_) step_down(ctx);
  if (candidate_ && b > ballot_) candidate_ = false;
  last_sign_ = ctx.now;
  Phase1bMsg reply;
  reply.ballot = b;
  reply.promised = st_.promised;
  for (const auto& [inst, e] : st_.accepted) reply.accepted.push_back(e);
  ctx.send(from, std::move(reply));
}

void SequencerAgent::on_phase1b(Ctx& ctx, SiteId from, const Phase1bMsg& m) {
  if (!candidate_ || m.ballot != ballot_) return;
  promises_[from] = m;
  if (promises_.size() >= seq_majority()) become_leader(ctx);
}

void SequencerAgent::become_leader(Ctx& ctx) {
  candidate_ = false;
  is_leader_ = true;
  TraceEvent ev;
  ev.kind = EvKind::Elected;
  ev.site = ctx.self;
  ev.ballot = ballot_;
  ctx.event(ev);

  // Adopt the highest-ballot accepted value per instance; instances below
  // the horizon that nobody reports and nobody decided become no-ops.
  // Recovery bypasses the alpha window: every open instance must close
  // before fresh ids are assigned, or a slow old proposal could interleave.
  std::map<Instance, std::pair<Ballot, OrderedValue>> best;
  for (const auto& [site, p] : promises_)
    for (const AcceptedEntry& e : p.accepted) {
      auto it = best.find(e.instance);
      if (it == best.end() || e.ballot > it->second.first)
        best[e.instance] = {e.ballot, e.value};
    }
  promises_.clear();

  bool any = !best.empty() || !st_.decided.empty();
  Instance top = 0;
  if (!best.empty()) top = best.rbegin()->first;
  if (!st_.decided.empty()) top = std::max(top, st_.decided.rbegin()->first);

  in_flight_.clear();
  p2b_tally_.clear();
  recovery_pending_.clear();
  resend_entries_.clear();
  std::vector<ProposalEntry> rec;
  if (any) {
    for (Instance i = 0; i <= top; ++i) {
      if (st_.decided.count(i)) continue;
      auto it = best.find(i);
      OrderedValue v = (it == best.end()) ? std::nullopt : it->second.second;
      rec.push_back({i, v});
      in_flight_[i] = v;
      recovery_pending_.insert(i);
      TraceEvent p;
      p.kind = EvKind::Proposed;
      p.site = ctx.self;
      p.instance = i;
      p.ballot = ballot_;
      p.value = pack_ordered_value(v);
      ctx.event(p);
    }
    next_instance_ = top + 1;
  } else {
    next_instance_ = 0;
  }

  if (!rec.empty()) {
    ctx.multicast(topo_.group_sequencers, Phase2aMsg{ballot_, std::move(rec)});
    ctx.set_timer(TimerKind::ProposalRetry, 0,
                  ctx.now + cfg_.proposal_retry_timeout);
  } else {
    ctx.set_timer_keep_earliest(TimerKind::ProposeFlush, 0, ctx.now);
  }
  last_decision_sent_ = ctx.now;
  replay_next_.reset();
  last_sweep_start_ = ctx.now;
  ctx.set_timer(TimerKind::Heartbeat, 0, ctx.now + cfg_.heartbeat_period);
}

void SequencerAgent::step_down(Ctx& ctx) {
  is_leader_ = false;
  candidate_ = false;
  in_flight_.clear();
  p2b_tally_.clear();
  recovery_pending_.clear();
  resend_entries_.clear();
  promises_.clear();
  replay_next_.reset();
  ctx.cancel_timer(TimerKind::ProposalRetry, 0);
  ctx.cancel_timer(TimerKind::Heartbeat, 0);
}

void SequencerAgent::on_phase2a(Ctx& ctx, SiteId from, const Phase2aMsg& m) {
  if (m.ballot < st_.promised) return;
  st_.promised = m.ballot;
  if (is_leader_ && m.ballot > ballot_) step_down(ctx);
  if (candidate_ && m.ballot > ballot_) candidate_ = false;
  last_sign_ = ctx.now;
  for (const ProposalEntry& e : m.entries) {
    auto it = st_.accepted.find(e.instance);
    if (it == st_.accepted.end() || it->second.ballot != m.ballot ||
        it->second.value != e.value) {
      st_.accepted[e.instance] = {e.instance, m.ballot, e.value};
      TraceEvent ev;
      ev.kind = EvKind::Accepted;
      ev.site = ctx.self;
      ev.instance = e.instance;
      ev.ballot = m.ballot;
      ev.value = pack_ordered_value(e.value);
      ctx.event(ev);
    }
  }
  // The acknowledgement always goes out, even on redelivery: the previous
  // one may have been lost.
  SiteId owner =
      topo_.sequencer_sites[m.ballot % cfg_.num_sequencers];
  ctx.send(owner, Phase2bMsg{m.ballot, m.entries});
}

void SequencerAgent::on_phase2b(Ctx& ctx, SiteId from, const Phase2bMsg& m) {
  if (!is_leader_ || m.ballot != ballot_) return;
  for (const ProposalEntry& e : m.entries) {
    if (st_.decided.count(e.instance)) continue;
    if (!in_flight_.count(e.instance)) continue;
    auto& tally = p2b_tally_[e.instance];
    tally.insert(from);
    if (tally.size() >= seq_majority()) decide(ctx, e.instance, e.value);
  }
}

void SequencerAgent::decide(Ctx& ctx, Instance inst, OrderedValue value) {
  apply_decision(ctx, st_, inst, value);
  forget_instance(ctx, inst);
  if (value) {
    st_.purge_stable(*value);
    vote_tally_.erase(*value);
  }
  decide_backlog_.push_back({inst, value});
  arm_decide_flush(ctx);
}

// Drop leader bookkeeping for an instance that is no longer open.
void SequencerAgent::forget_instance(Ctx& ctx, Instance inst) {
  in_flight_.erase(inst);
  p2b_tally_.erase(inst);
  if (recovery_pending_.erase(inst) && recovery_pending_.empty() && is_leader_)
    ctx.set_timer_keep_earliest(TimerKind::ProposeFlush, 0, ctx.now);
  if (in_flight_.empty()) ctx.cancel_timer(TimerKind::ProposalRetry, 0);
  // The window just widened; stable ids that missed earlier flushes get
  // another chance now rather than waiting for a fresh stability event.
  if (is_leader_ && recovery_pending_.empty() && !st_.stable_ids.empty())
    ctx.set_timer_keep_earliest(TimerKind::ProposeFlush, 0, ctx.now);
}

void SequencerAgent::on_decision(Ctx& ctx,
                                 const std::vector<DecisionEntry>& entries) {
  last_sign_ = ctx.now;  // even an empty decision proves the leader lives
  for (const DecisionEntry& e : entries) {
    apply_decision(ctx, st_, e.instance, e.value);
    forget_instance(ctx, e.instance);
    if (e.value) {
      st_.purge_stable(*e.value);
      vote_tally_.erase(*e.value);
    }
  }
}

void SequencerAgent::start_candidacy(Ctx& ctx) {
  Ballot base = std::max(st_.promised, st_.highest_own_ballot) + 1;
  Ballot rem = base % cfg_.num_sequencers;
  Ballot b = base + ((index_ + cfg_.num_sequencers - rem) % cfg_.num_sequencers);
  ballot_ = b;
  st_.highest_own_ballot = b;
  st_.promised = b;  // persisted self-promise before anything is sent
  candidate_ = true;
  candidacy_start_ = ctx.now;
  promises_.clear();
  ctx.multicast(topo_.group_sequencers, Phase1aMsg{b});
}

void SequencerAgent::on_message(Ctx& ctx, SiteId from,
                                const MessageBody& body) {
  if (const auto* m = std::get_if<IdVoteMsg>(&body)) {
    on_votes(ctx, from, m->ids);
  } else if (const auto* m = std::get_if<Phase1aMsg>(&body)) {
    on_phase1a(ctx, from, m->ballot);
  } else if (const auto* m = std::get_if<Phase1bMsg>(&body)) {
    on_phase1b(ctx, from, *m);
  } else if (const auto* m = std::get_if<Phase2aMsg>(&body)) {
    on_phase2a(ctx, from, *m);
  } else if (const auto* m = std::get_if<Phase2bMsg>(&body)) {
    on_phase2b(ctx, from, *m);
  } else if (const auto* m = std::get_if<DecisionMsg>(&body)) {
    on_decision(ctx, m->entries);
  }
}

void SequencerAgent::on_timer(Ctx& ctx, TimerKind kind, uint64_t) {
  switch (kind) {
    case TimerKind::ProposeFlush: {
      if (!is_leader_ || !recovery_pending_.empty()) break;
      std::vector<ProposalEntry> entries;
      while (in_flight_.size() < cfg_.alpha && !st_.stable_ids.empty()) {
        BatchId id = st_.stable_ids.front();
        st_.stable_ids.pop_front();
        if (st_.is_decided(id)) continue;
        OrderedValue v{id};
        entries.push_back({next_instance_, v});
        in_flight_[next_instance_] = v;
        TraceEvent ev;
        ev.kind = EvKind::Proposed;
        ev.site = ctx.self;
        ev.instance = next_instance_;
        ev.ballot = ballot_;
        ev.value = pack_ordered_value(v);
        ctx.event(ev);
        ++next_instance_;
      }
      if (!entries.empty()) {
        ctx.multicast(topo_.group_sequencers,
                      Phase2aMsg{ballot_, std::move(entries)});
        ctx.set_timer(TimerKind::ProposalRetry, 0,
                      ctx.now + cfg_.proposal_retry_timeout);
      }
      break;
    }

    case TimerKind::DecideFlush: {
      std::map<Instance, OrderedValue> merged(resend_entries_);
      for (const DecisionEntry& e : decide_backlog_) merged[e.instance] = e.value;
      decide_backlog_.clear();
      resend_entries_.clear();
      if (merged.empty()) break;
      std::vector<DecisionEntry> entries;
      entries.reserve(merged.size());
      for (const auto& [inst, v] : merged) entries.push_back({inst, v});
      ctx.multicast(topo_.group_order_consumers,
                    DecisionMsg{std::move(entries)});
      last_decision_sent_ = ctx.now;
      break;
    }

    case TimerKind::ProposalRetry: {
      if (!is_leader_ || in_flight_.empty()) break;
      std::vector<ProposalEntry> entries;
      entries.reserve(in_flight_.size());
      for (const auto& [inst, v] : in_flight_) entries.push_back({inst, v});
      ctx.multicast(topo_.group_sequencers,
                    Phase2aMsg{ballot_, std::move(entries)});
      ctx.set_timer(TimerKind::ProposalRetry, 0,
                    ctx.now + cfg_.proposal_retry_timeout);
      break;
    }

    case TimerKind::Heartbeat: {
      if (!is_leader_) break;
      ctx.set_timer(TimerKind::Heartbeat, 0, ctx.now + cfg_.heartbeat_period);
      if (last_decision_sent_ >= ctx.now - cfg_.heartbeat_period) break;
      if (!st_.decided.empty() && replay_next_) {
        // Mid-sweep: push the next chunk of the decided log so learners cut
        // off from past decisions eventually see every one of them.
        std::vector<DecisionEntry> chunk;
        auto it = st_.decided.lower_bound(*replay_next_);
        for (; it != st_.decided.end() && chunk.size() < cfg_.replay_chunk; ++it)
          chunk.push_back({it->first, it->second});
        if (it == st_.decided.end()) {
          replay_next_.reset();
          last_sweep_start_ = ctx.now;
        } else {
          replay_next_ = it->first;
        }
        if (!chunk.empty())
          ctx.multicast(topo_.group_order_consumers,
                        DecisionMsg{std::move(chunk)}, /*background=*/true);
        break;
      }
      if (!st_.decided.empty() &&
          ctx.now - last_sweep_start_ >= cfg_.replay_idle_period) {
        std::vector<DecisionEntry> chunk;
        auto it = st_.decided.begin();
        for (; it != st_.decided.end() && chunk.size() < cfg_.replay_chunk; ++it)
          chunk.push_back({it->first, it->second});
        replay_next_ = (it == st_.decided.end()) ? std::nullopt
                                                 : std::optional<Instance>(it->first);
        if (it == st_.decided.end()) last_sweep_start_ = ctx.now;
        ctx.multicast(topo_.group_order_consumers,
                      DecisionMsg{std::move(chunk)}, /*background=*/true);
        break;
      }
      // Nothing to say: bare liveness signal.
      ctx.multicast(topo_.group_order_consumers, DecisionMsg{},
                    /*background=*/true);
      break;
    }

    case TimerKind::Suspicion: {
      ctx.set_timer(TimerKind::Suspicion, 0, ctx.now + cfg_.heartbeat_period);
      if (is_leader_) break;
      const Time threshold = suspicion_threshold();
      if (candidate_) {
        if (ctx.now - candidacy_start_ >= threshold) start_candidacy(ctx);
      } else if (ctx.now - last_sign_ > threshold) {
        start_candidacy(ctx);
      }
      break;
    }

    default:
      break;
  }
}

}  // namespace htpaxos
