#include "htpaxos/oracles.hpp"

#include <algorithm>
#include <set>

#include "htpaxos/ids.hpp"

namespace htpaxos {
namespace {

std::string rid_str(uint32_t w) {
  RequestId r = unpack_request_id(w);
  return "c" + std::to_string(r.client) + "." + std::to_string(r.seq);
}

std::string value_str(uint32_t w) {
  if (w == kNoopWord) return "noop";
  BatchId b = unpack_batch_id(w);
  return "b" + std::to_string(b.disseminator) + "." + std::to_string(b.seq);
}

Verdict fail(std::string check, std::string witness) {
  Verdict v;
  v.check = std::move(check);
  v.status = CheckStatus::Fail;
  v.witness = std::move(witness);
  return v;
}

}  // namespace

const char* status_label(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::NotApplicable: return "not-applicable";
  }
  return "?";
}

std::string Verdict::to_string() const {
  std::string out = check + ": " + status_label(status);
  if (!witness.empty()) out += " (" + witness + ")";
  for (const auto& [k, v] : metrics) out += " " + k + "=" + v;
  return out;
}

Verdict check_safety(const Trace& t) {
  const char* kName = "safety";

  std::set<uint32_t> submitted, minted;
  std::map<uint32_t, uint64_t> mint_hash;            // batch -> content hash
  std::map<Instance, uint32_t> instance_value;       // first decided value
  std::map<uint32_t, std::set<Instance>> value_inst; // batch -> instances
  std::map<std::pair<SiteId, uint32_t>, std::vector<uint32_t>> logs;
  std::map<uint32_t, std::map<SiteId, Time>> held_at; // batch -> site -> first t
  std::map<Instance, Time> first_decide_at;

  for (const TraceEvent& e : t.events) {
    switch (e.kind) {
      case EvKind::Submit:
        submitted.insert(e.rid);
        break;
      case EvKind::BatchMint: {
        auto [it, fresh] = mint_hash.emplace(e.value, e.bytes);
        if (!fresh && it->second != e.bytes)
          return fail(kName, "batch id " + value_str(e.value) +
                                 " minted twice with different contents");
        minted.insert(e.value);
        break;
      }
      case EvKind::BatchHeld: {
        auto& sites = held_at[e.value];
        sites.emplace(e.site, e.time);  // keep the first time
        break;
      }
      case EvKind::Decide: {
        auto [it, fresh] = instance_value.emplace(e.instance, e.value);
        if (!fresh && it->second != e.value)
          return fail(kName, "instance " + std::to_string(e.instance) +
                                 " decided as " + value_str(it->second) +
                                 " and " + value_str(e.value));
        if (fresh) first_decide_at[e.instance] = e.time;
        if (e.value != kNoopWord) value_inst[e.value].insert(e.instance);
        break;
      }
      case EvKind::Execute:
        logs[{e.site, e.lifetime}].push_back(e.rid);
        break;
      default:
        break;
    }
  }

  for (const auto& [value, insts] : value_inst)
    if (insts.size() > 1)
      return fail(kName, "batch " + value_str(value) + " ordered at " +
                             std::to_string(insts.size()) + " instances");

  for (const auto& [value, insts] : value_inst)
    if (!minted.count(value))
      return fail(kName,
                  "decided batch " + value_str(value) + " was never minted");

  // Per-incarnation: no duplicate executions, only submitted requests.
  for (const auto& [key, log] : logs) {
    std::set<uint32_t> seen;
    for (uint32_t rid : log) {
      if (!submitted.count(rid))
        return fail(kName, "site " + std::to_string(key.first) +
                               " executed unsubmitted request " + rid_str(rid));
      if (!seen.insert(rid).second)
        return fail(kName, "site " + std::to_string(key.first) +
                               " executed " + rid_str(rid) + " twice");
    }
  }

  // Pairwise prefix comparability.  Comparing whole logs pointwise is
  // enough: if the shorter log is a prefix of the longer one, every earlier
  // moment of both was comparable too.
  std::vector<const std::vector<uint32_t>*> all;
  all.reserve(logs.size());
  for (const auto& [key, log] : logs) all.push_back(&log);
  for (size_t i = 0; i < all.size(); ++i)
    for (size_t j = i + 1; j < all.size(); ++j) {
      const auto& a = *all[i];
      const auto& b = *all[j];
      size_t n = std::min(a.size(), b.size());
      for (size_t k = 0; k < n; ++k)
        if (a[k] != b[k])
          return fail(kName, "execution logs diverge at position " +
                                 std::to_string(k) + ": " + rid_str(a[k]) +
                                 " vs " + rid_str(b[k]));
    }

  // A reply can precede the decision only on the strength of a majority of
  // batch holders recorded no later than the reply.
  std::set<SiteId> dissem_sites(t.meta.disseminator_sites.begin(),
                                t.meta.disseminator_sites.end());
  const size_t maj = t.meta.disseminators / 2 + 1;
  for (const TraceEvent& e : t.events) {
    if (e.kind != EvKind::ReplySent) continue;
    if (e.flag == 1) {
      size_t holders = 0;
      auto it = held_at.find(e.value);
      if (it != held_at.end())
        for (const auto& [site, when] : it->second)
          if (when <= e.time && dissem_sites.count(site)) ++holders;
      if (holders < maj)
        return fail(kName, "reply for " + rid_str(e.rid) + " at t=" +
                               std::to_string(e.time) + " but only " +
                               std::to_string(holders) +
                               " disseminators held " + value_str(e.value));
    } else {
      bool decided = false;
      for (const auto& [inst, when] : first_decide_at) {
        auto vi = instance_value.find(inst);
        if (vi != instance_value.end() && vi->second == e.value &&
            when <= e.time) {
          decided = true;
          break;
        }
      }
      if (!decided)
        return fail(kName, "reply for " + rid_str(e.rid) +
                               " claims a decision for " + value_str(e.value) +
                               " that had not happened");
    }
  }

  Verdict v;
  v.check = kName;
  v.status = CheckStatus::Pass;
  v.metrics["submitted"] = std::to_string(submitted.size());
  v.metrics["decided_instances"] = std::to_string(instance_value.size());
  v.metrics["execution_logs"] = std::to_string(logs.size());
  return v;
}

Verdict check_liveness(const Trace& t) {
  const char* kName = "liveness";
  Verdict v;
  v.check = kName;

  std::set<SiteId> crashed;
  for (const TraceEvent& e : t.events)
    if (e.kind == EvKind::Crash) crashed.insert(e.site);

  auto overlap = [&](const std::vector<SiteId>& sites) {
    size_t n = 0;
    for (SiteId s : sites) n += crashed.count(s);
    return n;
  };
  const size_t dissem_crashed = overlap(t.meta.disseminator_sites);
  const size_t seq_crashed = overlap(t.meta.sequencer_sites);
  const size_t learner_crashed = overlap(t.meta.learner_sites);

  std::string na;
  if (t.meta.gst < 0)
    na = "network never stabilizes";
  else if (dissem_crashed > t.meta.disseminators / 2)
    na = std::to_string(dissem_crashed) + " of " +
         std::to_string(t.meta.disseminators) + " disseminators crashed";
  else if (seq_crashed > t.meta.sequencers / 2)
    na = std::to_string(seq_crashed) + " of " +
         std::to_string(t.meta.sequencers) + " sequencers crashed";
  else if (learner_crashed >= t.meta.learner_sites.size())
    na = "every learner crashed at least once";
  if (!na.empty()) {
    v.status = CheckStatus::NotApplicable;
    v.witness = na;
    return v;
  }

  std::set<uint32_t> submitted, replied;
  std::map<SiteId, std::set<uint32_t>> executed;
  for (const TraceEvent& e : t.events) {
    if (e.kind == EvKind::Submit) submitted.insert(e.rid);
    if (e.kind == EvKind::ReplyRecv) replied.insert(e.rid);
    if (e.kind == EvKind::Execute) executed[e.site].insert(e.rid);
  }

  v.metrics["submitted"] = std::to_string(submitted.size());
  v.metrics["replied"] = std::to_string(replied.size());

  for (uint32_t rid : submitted)
    if (!replied.count(rid))
      return fail(kName, "request " + rid_str(rid) + " was never answered");

  for (SiteId ls : t.meta.learner_sites) {
    if (crashed.count(ls)) continue;
    const auto& ex = executed[ls];
    for (uint32_t rid : submitted)
      if (!ex.count(rid))
        return fail(kName, "learner site " + std::to_string(ls) +
                               " never executed " + rid_str(rid));
  }
  v.status = CheckStatus::Pass;
  return v;
}

Verdict check_delays(const Trace& t) {
  const char* kName = "delays";
  Verdict v;
  v.check = kName;

  const TraceMeta& m = t.meta;
  std::string na;
  if (m.loss[0] != 0 || m.loss[1] != 0 || m.dup[0] != 0 || m.dup[1] != 0)
    na = "network is lossy";
  else if (m.delay_min[0] != 1 || m.delay_max[0] != 1 || m.delay_min[1] != 1 ||
           m.delay_max[1] != 1)
    na = "delays are not the unit hop";
  else if (m.batch_max_size != 1)
    na = "batching delays the first hop";
  else if (m.fault_count != 0)
    na = "run has scripted faults";
  else if (m.piggyback)
    na = "piggybacking changes hop counts";
  if (!na.empty()) {
    v.status = CheckStatus::NotApplicable;
    v.witness = na;
    return v;
  }

  const TraceEvent* first_submit = nullptr;
  for (const TraceEvent& e : t.events)
    if (e.kind == EvKind::Submit && !first_submit) first_submit = &e;
  if (!first_submit) return fail(kName, "no request was submitted");

  Time reply_at = -1, exec_at = -1;
  for (const TraceEvent& e : t.events) {
    if (e.kind == EvKind::ReplyRecv && e.rid == first_submit->rid &&
        reply_at < 0)
      reply_at = e.time;
    if (e.kind == EvKind::Execute && e.rid == first_submit->rid && exec_at < 0)
      exec_at = e.time;
  }
  if (reply_at < 0) return fail(kName, "first request was never answered");
  if (exec_at < 0) return fail(kName, "first request was never executed");

  const Time reply_delay = reply_at - first_submit->time;
  const Time exec_delay = exec_at - first_submit->time;
  v.metrics["reply_delay"] = std::to_string(reply_delay);
  v.metrics["execution_delay"] = std::to_string(exec_delay);
  if (reply_delay != 4)
    return fail(kName,
                "reply took " + std::to_string(reply_delay) + " hops, not 4");
  if (exec_delay != 6)
    return fail(kName, "first execution took " + std::to_string(exec_delay) +
                           " hops, not 6");
  v.status = CheckStatus::Pass;
  return v;
}

std::vector<Verdict> check_all(const Trace& t) {
  return {check_safety(t), check_liveness(t), check_delays(t)};
}

}  // namespace htpaxos
