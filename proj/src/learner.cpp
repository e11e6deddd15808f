#include "htpaxos/learner.hpp"

#include "htpaxos/decide.hpp"

namespace htpaxos {

LearnerAgent::LearnerAgent(const Config& cfg, const Topology& topo,
                           uint32_t index, SiteStorage& storage)
    : cfg_(cfg), topo_(topo), index_(index), st_(storage) {}

void LearnerAgent::on_start(Ctx& ctx) {
  // After a restart the decided log survives but execution restarts from
  // instance zero under the new incarnation.
  execute_ready(ctx);
  for (const auto& [inst, v] : st_.decided)
    if (v && !st_.holds(*v)) ensure_pull(ctx, *v);
}

void LearnerAgent::execute_ready(Ctx& ctx) {
  for (;;) {
    auto it = st_.decided.find(frontier_);
    if (it == st_.decided.end()) break;
    const OrderedValue& v = it->second;
    if (v) {
      auto held = st_.requests_set.find(*v);
      if (held == st_.requests_set.end()) {
        ensure_pull(ctx, *v);
        break;
      }
      for (const Request& r : held->second.requests) {
        if (!seen_.insert(r.id).second) continue;  // duplicate of older batch
        TraceEvent ev;
        ev.kind = EvKind::Execute;
        ev.site = ctx.self;
        ev.rid = pack_request_id(r.id);
        ev.value = pack_batch_id(*v);
        ev.instance = frontier_;
        ev.lifetime = ctx.lifetime;
        ctx.event(ev);
      }
    }
    ++frontier_;
  }
}

void LearnerAgent::ensure_pull(Ctx& ctx, BatchId id) {
  if (!missing_.insert(id).second) return;
  pull_step(ctx, id);
}

void LearnerAgent::pull_step(Ctx& ctx, BatchId id) {
  const auto& sites = topo_.disseminator_sites;
  for (uint32_t probe = 0; probe < sites.size(); ++probe) {
    SiteId target = sites[pull_cursor_++ % sites.size()];
    if (target == ctx.self) continue;  // this site provably lacks it
    ctx.send(target, ResendMsg{id});
    break;
  }
  ctx.set_timer(TimerKind::PullRetry, pack_batch_id(id),
                ctx.now + cfg_.pull_retry_timeout);
}

void LearnerAgent::on_message(Ctx& ctx, SiteId from, const MessageBody& body) {
  if (const auto* m = std::get_if<ForwardBatchMsg>(&body)) {
    st_.record_batch(m->batch);  // co-located agents share the store
    if (missing_.erase(m->batch.id))
      ctx.cancel_timer(TimerKind::PullRetry, pack_batch_id(m->batch.id));
    execute_ready(ctx);
  } else if (const auto* m = std::get_if<ResendReplyMsg>(&body)) {
    st_.record_batch(m->batch);
    if (missing_.erase(m->batch.id))
      ctx.cancel_timer(TimerKind::PullRetry, pack_batch_id(m->batch.id));
    execute_ready(ctx);
  } else if (const auto* m = std::get_if<DecisionMsg>(&body)) {
    for (const DecisionEntry& e : m->entries) {
      apply_decision(ctx, st_, e.instance, e.value);
      if (e.value && !st_.holds(*e.value)) ensure_pull(ctx, *e.value);
    }
    execute_ready(ctx);
  }
}

void LearnerAgent::on_timer(Ctx& ctx, TimerKind kind, uint64_t tag) {
  if (kind != TimerKind::PullRetry) return;
  BatchId id = unpack_batch_id(static_cast<uint32_t>(tag));
  if (!missing_.count(id)) return;
  if (st_.holds(id)) {
    missing_.erase(id);
    return;
  }
  pull_step(ctx, id);
}

}  // namespace htpaxos
