#include "htpaxos/sim.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "htpaxos/client.hpp"
#include "htpaxos/disseminator.hpp"
#include "htpaxos/learner.hpp"
#include "htpaxos/sequencer.hpp"
#include "htpaxos/storage.hpp"

namespace htpaxos {

const char* timer_label(TimerKind k) {
  switch (k) {
    case TimerKind::NextRequest: return "NextRequest";
    case TimerKind::ClientRetry: return "ClientRetry";
    case TimerKind::BatchTimeout: return "BatchTimeout";
    case TimerKind::VoteFlush: return "VoteFlush";
    case TimerKind::Revote: return "Revote";
    case TimerKind::ReplyRetry: return "ReplyRetry";
    case TimerKind::AckMissing: return "AckMissing";
    case TimerKind::RelayRetry: return "RelayRetry";
    case TimerKind::PullRetry: return "PullRetry";
    case TimerKind::ProposeFlush: return "ProposeFlush";
    case TimerKind::DecideFlush: return "DecideFlush";
    case TimerKind::ProposalRetry: return "ProposalRetry";
    case TimerKind::Heartbeat: return "Heartbeat";
    case TimerKind::Suspicion: return "Suspicion";
  }
  return "?";
}

std::string NetConfig::validate() const {
  for (int lan = 0; lan < 2; ++lan) {
    if (loss[lan] < 0 || loss[lan] > 1) return "loss must be within [0,1]";
    if (dup[lan] < 0 || dup[lan] > 1) return "dup must be within [0,1]";
    if (delay_min[lan] < 1) return "delay_min must be >= 1";
    if (delay_max[lan] < delay_min[lan]) return "delay_max must be >= delay_min";
  }
  if (gst < -1) return "gst must be >= 0, or -1 for never";
  return {};
}

std::string Scenario::validate() const {
  if (std::string err = cfg.validate(); !err.empty()) return err;
  if (std::string err = net.validate(); !err.empty()) return err;
  if (horizon < 1) return "horizon must be >= 1";
  if (window_end > window_start && window_start < 0)
    return "window must not start before 0";
  Topology topo(cfg);
  for (const FaultEvent& f : faults) {
    if (f.site >= topo.num_sites) return "fault site out of range";
    if (!topo.has_disseminator(f.site) && !topo.has_sequencer(f.site) &&
        !topo.has_learner(f.site))
      return "faults may only target protocol sites, not clients";
    if (f.crash_at < 1) return "crash time must be >= 1";
    if (f.restart_at >= 0 && f.restart_at <= f.crash_at)
      return "restart must come after the crash";
  }
  for (const DropRule& d : drops) {
    if (d.to < d.from) return "drop window must not be empty";
    if (d.dst >= 0 && static_cast<uint32_t>(d.dst) >= topo.num_sites)
      return "drop destination out of range";
  }
  return {};
}

namespace {

// Which agent kinds consume each message type, dispatched in this order.
const std::initializer_list<AgentKind>& consumers_of(MsgType t) {
  static const std::initializer_list<AgentKind> dissem = {
      AgentKind::Disseminator};
  static const std::initializer_list<AgentKind> dissem_learner = {
      AgentKind::Disseminator, AgentKind::Learner};
  static const std::initializer_list<AgentKind> seq = {AgentKind::Sequencer};
  static const std::initializer_list<AgentKind> client = {AgentKind::Client};
  static const std::initializer_list<AgentKind> all_order = {
      AgentKind::Disseminator, AgentKind::Sequencer, AgentKind::Learner};
  switch (t) {
    case MsgType::ClientRequest:
    case MsgType::BatchAck:
    case MsgType::ClientReplyAck:
    case MsgType::Resend:
      return dissem;
    case MsgType::ForwardBatch:
    case MsgType::ResendReply:
      return dissem_learner;
    case MsgType::IdVote:
    case MsgType::Phase1a:
    case MsgType::Phase1b:
    case MsgType::Phase2a:
    case MsgType::Phase2b:
      return seq;
    case MsgType::ClientReply:
      return client;
    case MsgType::Decision:
      return all_order;
  }
  return dissem;
}

struct KEvent {
  Time t = 0;
  uint8_t phase = 0;
  uint64_t seq = 0;
  enum Kind : uint8_t { Deliver, Timer, Crash, Restart } kind = Deliver;

  // Deliver
  SiteId dst = 0, src = 0;
  Lan lan = Lan::First;
  uint64_t bytes = 0;
  bool background = false;
  std::shared_ptr<const Message> msg;

  // Timer / Crash / Restart
  SiteId site = 0;
  AgentKind agent = AgentKind::Disseminator;
  TimerKind tkind = TimerKind::NextRequest;
  uint64_t tag = 0;
  uint64_t gen = 0;
};

struct KEventAfter {
  bool operator()(const KEvent& a, const KEvent& b) const {
    if (a.t != b.t) return a.t > b.t;
    if (a.phase != b.phase) return a.phase > b.phase;
    return a.seq > b.seq;
  }
};

struct LiveAgent {
  std::unique_ptr<Agent> agent;
  Rng rng{0};
};

struct Site {
  bool up = true;
  // slot per AgentKind; absent slots stay empty for the whole run
  std::array<std::optional<LiveAgent>, 4> slots;

  LiveAgent* live(AgentKind k) {
    auto& s = slots[static_cast<size_t>(k)];
    return (up && s && s->agent) ? &*s : nullptr;
  }
};

class Kernel {
 public:
  explicit Kernel(const Scenario& sc)
      : sc_(sc), topo_(sc.cfg), net_rng_(Rng(sc.seed).fork(0x6e657477ull)) {}

  Trace run();

 private:
  using TKey = std::tuple<SiteId, AgentKind, TimerKind, uint64_t>;
  struct TimerRec {
    Time at;
    uint64_t gen;
  };

  void build_meta();
  void spawn_agents(SiteId site, uint32_t lifetime, Time now);
  void start_site(SiteId site, Time now);
  void dispatch_body(SiteId site, SiteId from, const MessageBody& body,
                     Time now);
  void run_handler(SiteId site, AgentKind kind, Time now,
                   const std::function<void(Agent&, Ctx&)>& invoke);
  void apply_actions(SiteId site, AgentKind kind, Ctx& ctx);
  void emit_message(SiteId src, AgentKind kind, std::vector<SiteId> dsts,
                    MessageBody body, bool background, Time now);
  void ship(SiteId src, SiteId dst, std::shared_ptr<const Message> msg,
            bool background, Time now, bool count_out);
  void flush_staging(Time now);
  void pop_deliver(const KEvent& ev);
  void pop_timer(const KEvent& ev);
  void pop_crash(const KEvent& ev);
  void pop_restart(const KEvent& ev);
  bool quiescent();
  bool lossy_at(Time t) const {
    return sc_.net.gst < 0 || t < sc_.net.gst;
  }
  bool in_window(Time t) const {
    return trace_.window_end > trace_.window_start &&
           t >= trace_.window_start && t < trace_.window_end;
  }
  void push(KEvent ev) {
    ev.seq = ++seq_;
    if (ev.kind == KEvent::Deliver && !ev.background) ++fg_delivers_;
    if (ev.kind == KEvent::Crash || ev.kind == KEvent::Restart)
      ++pending_control_;
    queue_.push(std::move(ev));
  }

  const Scenario& sc_;
  Topology topo_;
  Rng net_rng_;
  Trace trace_;
  std::vector<SiteStorage> storages_;
  std::vector<Site> sites_;
  std::priority_queue<KEvent, std::vector<KEvent>, KEventAfter> queue_;
  std::map<TKey, TimerRec> timers_;
  uint64_t seq_ = 0;
  uint64_t fg_delivers_ = 0;
  uint64_t pending_control_ = 0;
  Time now_ = 0;

  // piggyback staging: unicast control-plane sends within one tick merge
  struct Staged {
    std::vector<MessageBody> bodies;
    bool background = true;  // stays background only if every part is
  };
  std::map<std::pair<SiteId, SiteId>, Staged> staging_;
};

void Kernel::build_meta() {
  TraceMeta& m = trace_.meta;
  m.disseminators = sc_.cfg.num_disseminators;
  m.sequencers = sc_.cfg.num_sequencers;
  m.learners = sc_.cfg.num_learners;
  m.clients = sc_.cfg.num_clients;
  m.colocate_sequencers = sc_.cfg.colocate_sequencers;
  m.colocate_learners = sc_.cfg.colocate_learners;
  m.batch_max_size = sc_.cfg.batch_max_size;
  m.alpha = sc_.cfg.alpha;
  m.piggyback = sc_.cfg.piggyback;
  m.requests_per_client = sc_.cfg.requests_per_client;
  for (int lan = 0; lan < 2; ++lan) {
    m.loss[lan] = sc_.net.loss[lan];
    m.dup[lan] = sc_.net.dup[lan];
    m.delay_min[lan] = sc_.net.delay_min[lan];
    m.delay_max[lan] = sc_.net.delay_max[lan];
  }
  m.gst = sc_.net.gst;
  m.horizon = sc_.horizon;
  m.seed = sc_.seed;
  m.fault_count = static_cast<uint32_t>(sc_.faults.size());
  m.disseminator_sites = topo_.disseminator_sites;
  m.sequencer_sites = topo_.sequencer_sites;
  m.learner_sites = topo_.learner_sites;
  m.client_sites = topo_.client_sites;
}

void Kernel::spawn_agents(SiteId site, uint32_t lifetime, Time) {
  Site& s = sites_[site];
  Rng site_rng = Rng(sc_.seed).fork(site).fork(lifetime);
  auto make = [&](AgentKind kind, std::unique_ptr<Agent> agent) {
    auto& slot = s.slots[static_cast<size_t>(kind)];
    slot.emplace();
    slot->agent = std::move(agent);
    slot->rng = site_rng.fork(static_cast<uint64_t>(kind) + 1);
  };
  if (auto it = topo_.disseminator_index.find(site);
      it != topo_.disseminator_index.end())
    make(AgentKind::Disseminator,
         std::make_unique<DisseminatorAgent>(sc_.cfg, topo_, it->second,
                                             storages_[site]));
  if (auto it = topo_.sequencer_index.find(site);
      it != topo_.sequencer_index.end())
    make(AgentKind::Sequencer,
         std::make_unique<SequencerAgent>(sc_.cfg, topo_, it->second,
                                          storages_[site]));
  if (auto it = topo_.learner_index.find(site); it != topo_.learner_index.end())
    make(AgentKind::Learner,
         std::make_unique<LearnerAgent>(sc_.cfg, topo_, it->second,
                                        storages_[site]));
  if (auto it = topo_.client_index.find(site); it != topo_.client_index.end())
    make(AgentKind::Client,
         std::make_unique<ClientAgent>(sc_.cfg, topo_, it->second));
}

void Kernel::run_handler(SiteId site, AgentKind kind, Time now,
                         const std::function<void(Agent&, Ctx&)>& invoke) {
  LiveAgent* live = sites_[site].live(kind);
  if (!live) return;
  Ctx ctx;
  ctx.now = now;
  ctx.self = site;
  ctx.rng = &live->rng;
  ctx.trace = &trace_;
  ctx.full_trace = sc_.full_trace;
  ctx.lifetime = storages_[site].restarts;
  invoke(*live->agent, ctx);
  apply_actions(site, kind, ctx);
}

void Kernel::start_site(SiteId site, Time now) {
  for (AgentKind kind :
       {AgentKind::Disseminator, AgentKind::Sequencer, AgentKind::Learner,
        AgentKind::Client}) {
    run_handler(site, kind, now,
                [](Agent& a, Ctx& ctx) { a.on_start(ctx); });
  }
}

void Kernel::apply_actions(SiteId site, AgentKind kind, Ctx& ctx) {
  for (const TimerKey& key : ctx.timer_cancels)
    timers_.erase(TKey{site, kind, key.kind, key.tag});
  for (const Ctx::TimerSet& set : ctx.timer_sets) {
    TKey key{site, kind, set.key.kind, set.key.tag};
    auto it = timers_.find(key);
    if (set.keep_earliest && it != timers_.end() && it->second.at <= set.at)
      continue;
    uint64_t gen = ++seq_;
    timers_[key] = {set.at, gen};
    KEvent ev;
    ev.t = set.at;
    ev.phase = timer_is_flush(set.key.kind) ? 1 : 0;
    ev.kind = KEvent::Timer;
    ev.site = site;
    ev.agent = kind;
    ev.tkind = set.key.kind;
    ev.tag = set.key.tag;
    ev.gen = gen;
    push(std::move(ev));
  }
  // Move the buffers out: inline loopback below reuses the same slots.
  auto sends = std::move(ctx.sends);
  auto multicasts = std::move(ctx.multicasts);
  for (auto& s : sends)
    emit_message(site, kind, {s.dst}, std::move(s.body), s.background,
                 ctx.now);
  for (auto& mc : multicasts)
    emit_message(site, kind, std::move(mc.dsts), std::move(mc.body),
                 mc.background, ctx.now);
}

void Kernel::emit_message(SiteId src, AgentKind, std::vector<SiteId> dsts,
                          MessageBody body, bool background, Time now) {
  const MsgType type = type_of(body);
  const Lan lan = lan_of(type);
  const int lan_i = static_cast<int>(lan);

  std::vector<SiteId> remote;
  bool loop = false;
  for (SiteId d : dsts) {
    if (d == src)
      loop = true;
    else
      remote.push_back(d);
  }

  // Piggyback staging intercepts unicast control-plane sends; everything in
  // the stage for one (src,dst) pair leaves as a single wire message when
  // the tick ends.
  if (sc_.cfg.piggyback && lan == Lan::Second && dsts.size() == 1 && !loop) {
    Staged& st = staging_[{src, remote[0]}];
    st.bodies.push_back(std::move(body));
    st.background = st.background && background;
    return;
  }

  if (!remote.empty()) {
    auto msg = std::make_shared<const Message>(Message{body, {}});
    const uint64_t bytes = size_of(*msg);
    SiteCounters& c = trace_.counters[src];
    c.out_msgs[lan_i][static_cast<int>(type)] += 1;
    c.out_bytes[lan_i][static_cast<int>(type)] += bytes;
    if (in_window(now)) {
      SiteCounters& w = trace_.window_counters[src];
      w.out_msgs[lan_i][static_cast<int>(type)] += 1;
      w.out_bytes[lan_i][static_cast<int>(type)] += bytes;
    }
    if (sc_.full_trace) {
      TraceEvent ev;
      ev.time = now;
      ev.kind = EvKind::MsgSend;
      ev.site = src;
      ev.peer = remote.size() == 1 ? remote[0] : src;
      ev.lan = static_cast<uint8_t>(lan_i);
      ev.msg_type = static_cast<uint8_t>(type);
      ev.flag = static_cast<uint8_t>(std::min<size_t>(remote.size(), 255));
      ev.bytes = bytes;
      trace_.add(ev);
    }
    for (SiteId d : remote) ship(src, d, msg, background, now, false);
  }

  if (loop) {
    trace_.counters[src].loop_msgs[static_cast<int>(type)] += 1;
    if (in_window(now))
      trace_.window_counters[src].loop_msgs[static_cast<int>(type)] += 1;
    // Same-site delivery is immediate, reliable, and invisible to the
    // network: run it inline.
    dispatch_body(src, src, body, now);
  }
}

void Kernel::ship(SiteId src, SiteId dst, std::shared_ptr<const Message> msg,
                  bool background, Time now, bool /*count_out*/) {
  const MsgType type = type_of(*msg);
  const int lan_i = static_cast<int>(lan_of(type));
  const bool lossy = lossy_at(now);
  if (lossy && net_rng_.chance(sc_.net.loss[lan_i])) {
    if (sc_.full_trace) {
      TraceEvent ev;
      ev.time = now;
      ev.kind = EvKind::MsgDrop;
      ev.site = dst;
      ev.peer = src;
      ev.lan = static_cast<uint8_t>(lan_i);
      ev.msg_type = static_cast<uint8_t>(type);
      ev.flag = 1;
      trace_.add(ev);
    }
  } else {
    int copies = 1;
    if (lossy && net_rng_.chance(sc_.net.dup[lan_i])) copies = 2;
    for (int i = 0; i < copies; ++i) {
      KEvent ev;
      ev.t = now + net_rng_.range(sc_.net.delay_min[lan_i],
                                  sc_.net.delay_max[lan_i]);
      ev.phase = 0;
      ev.kind = KEvent::Deliver;
      ev.dst = dst;
      ev.src = src;
      ev.lan = static_cast<Lan>(lan_i);
      ev.bytes = size_of(*msg);
      ev.background = background;
      ev.msg = msg;
      push(std::move(ev));
    }
  }
}

void Kernel::flush_staging(Time now) {
  if (staging_.empty()) return;
  auto staged = std::move(staging_);
  staging_.clear();
  for (auto& [key, st] : staged) {
    auto [src, dst] = key;
    Message m;
    m.body = std::move(st.bodies.front());
    m.piggyback.assign(std::make_move_iterator(st.bodies.begin() + 1),
                       std::make_move_iterator(st.bodies.end()));
    const MsgType type = type_of(m);
    const int lan_i = static_cast<int>(lan_of(type));
    auto msg = std::make_shared<const Message>(std::move(m));
    const uint64_t bytes = size_of(*msg);
    SiteCounters& c = trace_.counters[src];
    c.out_msgs[lan_i][static_cast<int>(type)] += 1;
    c.out_bytes[lan_i][static_cast<int>(type)] += bytes;
    if (in_window(now)) {
      SiteCounters& w = trace_.window_counters[src];
      w.out_msgs[lan_i][static_cast<int>(type)] += 1;
      w.out_bytes[lan_i][static_cast<int>(type)] += bytes;
    }
    if (sc_.full_trace) {
      TraceEvent ev;
      ev.time = now;
      ev.kind = EvKind::MsgSend;
      ev.site = src;
      ev.peer = dst;
      ev.lan = static_cast<uint8_t>(lan_i);
      ev.msg_type = static_cast<uint8_t>(type);
      ev.flag = 1;
      ev.bytes = bytes;
      trace_.add(ev);
    }
    ship(src, dst, msg, st.background, now, false);
  }
}

void Kernel::dispatch_body(SiteId site, SiteId from, const MessageBody& body,
                           Time now) {
  for (AgentKind kind : consumers_of(type_of(body))) {
    run_handler(site, kind, now, [&](Agent& a, Ctx& ctx) {
      a.on_message(ctx, from, body);
    });
  }
}

void Kernel::pop_deliver(const KEvent& ev) {
  const MsgType type = type_of(*ev.msg);
  if (!sites_[ev.dst].up) {
    if (sc_.full_trace) {
      TraceEvent te;
      te.time = ev.t;
      te.kind = EvKind::MsgDrop;
      te.site = ev.dst;
      te.peer = ev.src;
      te.lan = static_cast<uint8_t>(ev.lan);
      te.msg_type = static_cast<uint8_t>(type);
      te.flag = 2;
      trace_.add(te);
    }
    return;
  }
  for (const DropRule& rule : sc_.drops) {
    if (rule.type != type) continue;
    if (rule.dst >= 0 && static_cast<SiteId>(rule.dst) != ev.dst) continue;
    if (ev.t < rule.from || ev.t > rule.to) continue;
    if (sc_.full_trace) {
      TraceEvent te;
      te.time = ev.t;
      te.kind = EvKind::MsgDrop;
      te.site = ev.dst;
      te.peer = ev.src;
      te.lan = static_cast<uint8_t>(ev.lan);
      te.msg_type = static_cast<uint8_t>(type);
      te.flag = 3;
      trace_.add(te);
    }
    return;
  }

  const int lan_i = static_cast<int>(ev.lan);
  SiteCounters& c = trace_.counters[ev.dst];
  c.in_msgs[lan_i][static_cast<int>(type)] += 1;
  c.in_bytes[lan_i][static_cast<int>(type)] += ev.bytes;
  if (in_window(ev.t)) {
    SiteCounters& w = trace_.window_counters[ev.dst];
    w.in_msgs[lan_i][static_cast<int>(type)] += 1;
    w.in_bytes[lan_i][static_cast<int>(type)] += ev.bytes;
  }
  if (sc_.full_trace) {
    TraceEvent te;
    te.time = ev.t;
    te.kind = EvKind::MsgDeliver;
    te.site = ev.dst;
    te.peer = ev.src;
    te.lan = static_cast<uint8_t>(ev.lan);
    te.msg_type = static_cast<uint8_t>(type);
    te.bytes = ev.bytes;
    trace_.add(te);
  }
  dispatch_body(ev.dst, ev.src, ev.msg->body, ev.t);
  for (const MessageBody& extra : ev.msg->piggyback)
    dispatch_body(ev.dst, ev.src, extra, ev.t);
}

void Kernel::pop_timer(const KEvent& ev) {
  TKey key{ev.site, ev.agent, ev.tkind, ev.tag};
  auto it = timers_.find(key);
  if (it == timers_.end() || it->second.gen != ev.gen) return;  // superseded
  timers_.erase(it);
  run_handler(ev.site, ev.agent, ev.t, [&](Agent& a, Ctx& ctx) {
    a.on_timer(ctx, ev.tkind, ev.tag);
  });
}

void Kernel::pop_crash(const KEvent& ev) {
  Site& s = sites_[ev.site];
  if (!s.up) return;
  s.up = false;
  for (auto& slot : s.slots)
    if (slot) slot->agent.reset();
  for (auto it = timers_.begin(); it != timers_.end();)
    it = (std::get<0>(it->first) == ev.site) ? timers_.erase(it)
                                             : std::next(it);
  TraceEvent te;
  te.time = ev.t;
  te.kind = EvKind::Crash;
  te.site = ev.site;
  trace_.add(te);
}

void Kernel::pop_restart(const KEvent& ev) {
  Site& s = sites_[ev.site];
  if (s.up) return;
  s.up = true;
  storages_[ev.site].restarts += 1;
  TraceEvent te;
  te.time = ev.t;
  te.kind = EvKind::Restart;
  te.site = ev.site;
  te.lifetime = storages_[ev.site].restarts;
  trace_.add(te);
  spawn_agents(ev.site, storages_[ev.site].restarts, ev.t);
  start_site(ev.site, ev.t);
}

bool Kernel::quiescent() {
  if (fg_delivers_ != 0 || pending_control_ != 0) return false;
  for (const auto& [key, rec] : timers_)
    if (!timer_is_background(std::get<2>(key))) return false;
  uint64_t submitted = 0;
  for (SiteId cs : topo_.client_sites) {
    LiveAgent* live = sites_[cs].live(AgentKind::Client);
    if (!live) return false;  // cannot happen; clients never crash
    auto* client = static_cast<ClientAgent*>(live->agent.get());
    if (!client->done()) return false;
    submitted += client->submitted();
  }
  for (SiteId ls : topo_.learner_sites) {
    LiveAgent* live = sites_[ls].live(AgentKind::Learner);
    if (!live) continue;  // crashed learners don't hold the run open
    auto* learner = static_cast<LearnerAgent*>(live->agent.get());
    if (learner->seen_count() != submitted) return false;
  }
  return true;
}

Trace Kernel::run() {
  const uint32_t n = topo_.num_sites;
  storages_.resize(n);
  sites_.resize(n);
  trace_.counters.resize(n);
  trace_.window_start = sc_.window_start;
  trace_.window_end = sc_.window_end;
  trace_.window_counters.resize(sc_.window_end > sc_.window_start ? n : 0);
  if (trace_.window_counters.empty()) {
    trace_.window_start = trace_.window_end = 0;
  }
  build_meta();

  for (const FaultEvent& f : sc_.faults) {
    KEvent ev;
    ev.t = f.crash_at;
    ev.kind = KEvent::Crash;
    ev.site = f.site;
    push(std::move(ev));
    if (f.restart_at >= 0) {
      KEvent rs;
      rs.t = f.restart_at;
      rs.kind = KEvent::Restart;
      rs.site = f.site;
      push(std::move(rs));
    }
  }

  for (SiteId site = 0; site < n; ++site) spawn_agents(site, 0, 0);
  for (SiteId site = 0; site < n; ++site) start_site(site, 0);

  bool early = false;
  for (;;) {
    if (queue_.empty()) {
      flush_staging(now_);
      if (queue_.empty()) {
        early = quiescent();
        break;
      }
      continue;
    }
    if (queue_.top().t > now_) {
      flush_staging(now_);
      if (!queue_.empty() && queue_.top().t <= now_) continue;
      if (quiescent()) {
        early = true;
        break;
      }
      if (queue_.empty()) break;
      Time next = queue_.top().t;
      if (next > sc_.horizon) {
        now_ = sc_.horizon;
        break;
      }
      now_ = next;
      continue;
    }
    KEvent ev = queue_.top();
    queue_.pop();
    if (ev.kind == KEvent::Deliver && !ev.background) --fg_delivers_;
    if (ev.kind == KEvent::Crash || ev.kind == KEvent::Restart)
      --pending_control_;
    switch (ev.kind) {
      case KEvent::Deliver: pop_deliver(ev); break;
      case KEvent::Timer: pop_timer(ev); break;
      case KEvent::Crash: pop_crash(ev); break;
      case KEvent::Restart: pop_restart(ev); break;
    }
  }

  trace_.meta.quiescent = early;
  trace_.meta.end_time = now_;
  return std::move(trace_);
}

}  // namespace

Trace run_scenario(const Scenario& sc) {
  if (std::string err = sc.validate(); !err.empty())
    throw std::invalid_argument("invalid scenario: " + err);
  Kernel k(sc);
  return k.run();
}

}  // namespace htpaxos
