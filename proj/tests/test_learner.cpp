#include "doctest.h"
#include "drive.hpp"
#include "htpaxos/learner.hpp"

using namespace htpaxos;
using namespace htpaxos::drive;

namespace {

Config base_config() {
  Config cfg;
  cfg.num_disseminators = 3;
  cfg.num_sequencers = 3;
  cfg.num_learners = 3;
  cfg.num_clients = 1;
  return cfg;
}

Request req(uint32_t client, uint32_t seq) {
  return Request{{client, seq}, make_request_payload({client, seq}, 8)};
}

Batch batch(uint32_t dissem, uint32_t seq, std::vector<Request> rs) {
  return Batch{{dissem, seq}, std::move(rs)};
}

MessageBody decide(Instance inst, OrderedValue v) {
  return DecisionMsg{{{inst, v}}};
}

std::vector<uint32_t> executed_rids(const Bench& b) {
  std::vector<uint32_t> out;
  for (const auto& e : b.trace.events)
    if (e.kind == EvKind::Execute) out.push_back(e.rid);
  return out;
}

}  // namespace

TEST_CASE("decided batches execute in instance order only") {
  Bench b(base_config());
  SiteStorage st;
  const Batch a = batch(0, 0, {req(0, 0), req(0, 1)});
  const Batch c2 = batch(1, 0, {req(0, 2)});
  st.record_batch(a);
  st.record_batch(c2);
  LearnerAgent l(b.cfg, b.topo, 0, st);

  // instance 1 lands first: nothing may run ahead of instance 0
  Ctx c = b.ctx(3, 0);
  l.on_message(c, 3, decide(1, OrderedValue{c2.id}));
  CHECK(b.events(EvKind::Execute) == 0);
  CHECK(l.seen_count() == 0);

  Ctx cc = b.ctx(4, 0);
  l.on_message(cc, 3, decide(0, OrderedValue{a.id}));
  CHECK(b.events(EvKind::Execute) == 3);
  CHECK(l.seen_count() == 3);
  CHECK((executed_rids(b) ==
         std::vector<uint32_t>{pack_request_id({0, 0}), pack_request_id({0, 1}),
                               pack_request_id({0, 2})}));
  const TraceEvent* last = b.last(EvKind::Execute);
  CHECK(last->instance == 1);
  CHECK(last->value == pack_batch_id(c2.id));

  // a redelivered decision is idempotent
  Ctx c3 = b.ctx(5, 0);
  l.on_message(c3, 3, decide(0, OrderedValue{a.id}));
  CHECK(b.events(EvKind::Execute) == 3);
}

TEST_CASE("no-op instances advance the frontier silently") {
  Bench b(base_config());
  SiteStorage st;
  const Batch a = batch(0, 0, {req(0, 0)});
  st.record_batch(a);
  LearnerAgent l(b.cfg, b.topo, 0, st);

  Ctx c = b.ctx(1, 0);
  l.on_message(c, 3, MessageBody{DecisionMsg{{{0, std::nullopt},
                                              {1, OrderedValue{a.id}}}}});
  CHECK(b.events(EvKind::Execute) == 1);
  CHECK(b.last(EvKind::Execute)->instance == 1);
}

TEST_CASE("missing batch bodies are pulled from the disseminators") {
  Bench b(base_config());
  SiteStorage st;
  const Batch missing = batch(2, 9, {req(0, 5)});
  LearnerAgent l(b.cfg, b.topo, 0, st);

  Ctx c = b.ctx(0, 0);
  l.on_message(c, 3, decide(0, OrderedValue{missing.id}));
  CHECK(b.events(EvKind::Execute) == 0);
  // the pull probes the first disseminator that is not this site
  CHECK(unicast_to<ResendMsg>(c, 1) != nullptr);
  CHECK(sets_timer(c, TimerKind::PullRetry));

  // an unanswered pull rotates to the next disseminator
  Ctx c2 = b.ctx(20, 0);
  l.on_timer(c2, TimerKind::PullRetry, pack_batch_id(missing.id));
  CHECK(unicast_to<ResendMsg>(c2, 2) != nullptr);

  // the body lands: execute and stop retrying
  Ctx c3 = b.ctx(21, 0);
  l.on_message(c3, 2, MessageBody{ResendReplyMsg{missing}});
  CHECK(cancels_timer(c3, TimerKind::PullRetry));
  CHECK(b.events(EvKind::Execute) == 1);
  CHECK(l.seen_count() == 1);
  Ctx c4 = b.ctx(40, 0);
  l.on_timer(c4, TimerKind::PullRetry, pack_batch_id(missing.id));
  CHECK(effect_count(c4) == 0);
}

TEST_CASE("a spread batch fills the gap without a pull round-trip") {
  Bench b(base_config());
  SiteStorage st;
  const Batch m = batch(1, 4, {req(0, 7)});
  LearnerAgent l(b.cfg, b.topo, 0, st);

  Ctx c = b.ctx(0, 0);
  l.on_message(c, 3, decide(0, OrderedValue{m.id}));
  CHECK(unicasts<ResendMsg>(c) == 1);

  Ctx c2 = b.ctx(1, 0);
  l.on_message(c2, 1, MessageBody{ForwardBatchMsg{m}});
  CHECK(cancels_timer(c2, TimerKind::PullRetry));
  CHECK(b.events(EvKind::Execute) == 1);
}

TEST_CASE("a request appearing in two decided batches executes once") {
  Bench b(base_config());
  SiteStorage st;
  const Request shared = req(0, 1);
  const Batch first = batch(0, 0, {req(0, 0), shared});
  const Batch second = batch(1, 0, {shared, req(0, 2)});
  st.record_batch(first);
  st.record_batch(second);
  LearnerAgent l(b.cfg, b.topo, 0, st);

  Ctx c = b.ctx(1, 0);
  l.on_message(c, 3, decide(0, OrderedValue{first.id}));
  Ctx c2 = b.ctx(2, 0);
  l.on_message(c2, 3, decide(1, OrderedValue{second.id}));
  CHECK(b.events(EvKind::Execute) == 3);
  CHECK((executed_rids(b) ==
         std::vector<uint32_t>{pack_request_id({0, 0}), pack_request_id({0, 1}),
                               pack_request_id({0, 2})}));
}

TEST_CASE("a restarted learner replays the whole log under a new incarnation") {
  Bench b(base_config());
  SiteStorage st;
  const Batch a = batch(0, 0, {req(0, 0)});
  const Batch d = batch(1, 0, {req(0, 1)});
  st.record_batch(a);
  st.record_batch(d);
  st.record_decided(0, OrderedValue{a.id});
  st.record_decided(1, OrderedValue{d.id});

  LearnerAgent before(b.cfg, b.topo, 0, st);
  Ctx c0 = b.ctx(0, 0, /*lifetime=*/0);
  before.on_start(c0);
  CHECK(before.seen_count() == 2);

  st.restarts = 1;
  LearnerAgent after(b.cfg, b.topo, 0, st);
  Ctx c1 = b.ctx(50, 0, /*lifetime=*/1);
  after.on_start(c1);
  CHECK(after.seen_count() == 2);
  CHECK(b.events(EvKind::Execute) == 4);
  CHECK(b.last(EvKind::Execute)->lifetime == 1);
}

TEST_CASE("startup pulls bodies the decided log references but the store lacks") {
  Bench b(base_config());
  SiteStorage st;
  const Batch gone = batch(2, 2, {req(0, 3)});
  st.record_decided(0, OrderedValue{gone.id});
  LearnerAgent l(b.cfg, b.topo, 0, st);

  Ctx c = b.ctx(10, 0);
  l.on_start(c);
  CHECK(unicasts<ResendMsg>(c) == 1);
  CHECK(sets_timer(c, TimerKind::PullRetry));
  CHECK(b.events(EvKind::Execute) == 0);
}
