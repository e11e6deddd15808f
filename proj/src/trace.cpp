#include "htpaxos/trace.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace htpaxos {
namespace {

constexpr const char* kEvLabels[kEvKindCount] = {
    "Submit",    "ClientRetry", "ReplyRecv", "ReplySent", "BatchMint",
    "BatchHeld", "Stable",      "Proposed",  "Accepted",  "Decide",
    "Execute",   "Elected",     "Crash",     "Restart",   "MsgSend",
    "MsgDeliver", "MsgDrop",
};

int ev_index(const std::string& label) {
  for (int i = 0; i < kEvKindCount; ++i)
    if (label == kEvLabels[i]) return i;
  return -1;
}

void put_sites(std::string& out, const char* key,
               const std::vector<SiteId>& sites) {
  out += "m ";
  out += key;
  for (SiteId s : sites) {
    out += ' ';
    out += std::to_string(s);
  }
  out += '\n';
}

struct LineReader {
  std::istringstream in;
  size_t lineno;
  explicit LineReader(const std::string& line, size_t n) : in(line), lineno(n) {}

  [[noreturn]] void fail(const std::string& what) {
    throw std::runtime_error("trace parse error at line " +
                             std::to_string(lineno) + ": " + what);
  }
  std::string word(const char* what) {
    std::string w;
    if (!(in >> w)) fail(std::string("missing ") + what);
    return w;
  }
  uint64_t u64(const char* what) {
    std::string w = word(what);
    try {
      size_t pos = 0;
      uint64_t v = std::stoull(w, &pos);
      if (pos != w.size()) throw std::invalid_argument(w);
      return v;
    } catch (const std::exception&) {
      fail(std::string("bad number for ") + what + ": " + w);
    }
  }
  int64_t i64(const char* what) {
    std::string w = word(what);
    try {
      size_t pos = 0;
      int64_t v = std::stoll(w, &pos);
      if (pos != w.size()) throw std::invalid_argument(w);
      return v;
    } catch (const std::exception&) {
      fail(std::string("bad number for ") + what + ": " + w);
    }
  }
  double f64(const char* what) {
    std::string w = word(what);
    try {
      size_t pos = 0;
      double v = std::stod(w, &pos);
      if (pos != w.size()) throw std::invalid_argument(w);
      return v;
    } catch (const std::exception&) {
      fail(std::string("bad number for ") + what + ": " + w);
    }
  }
  bool done() {
    std::string w;
    return !(in >> w);
  }
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void put_counter_rows(std::string& out, const char* prefix,
                      const std::vector<SiteCounters>& banks) {
  for (size_t site = 0; site < banks.size(); ++site) {
    const SiteCounters& c = banks[site];
    for (int lan = 0; lan < 2; ++lan)
      for (int t = 0; t < kMsgTypeCount; ++t) {
        if (c.in_msgs[lan][t] | c.in_bytes[lan][t]) {
          out += prefix;
          out += ' ' + std::to_string(site) + ' ' + std::to_string(lan) +
                 " in " + std::to_string(t) + ' ' +
                 std::to_string(c.in_msgs[lan][t]) + ' ' +
                 std::to_string(c.in_bytes[lan][t]) + '\n';
        }
        if (c.out_msgs[lan][t] | c.out_bytes[lan][t]) {
          out += prefix;
          out += ' ' + std::to_string(site) + ' ' + std::to_string(lan) +
                 " out " + std::to_string(t) + ' ' +
                 std::to_string(c.out_msgs[lan][t]) + ' ' +
                 std::to_string(c.out_bytes[lan][t]) + '\n';
        }
      }
    for (int t = 0; t < kMsgTypeCount; ++t)
      if (c.loop_msgs[t]) {
        out += prefix;
        out += "l " + std::to_string(site) + ' ' + std::to_string(t) + ' ' +
               std::to_string(c.loop_msgs[t]) + '\n';
      }
  }
}

}  // namespace

const char* ev_label(EvKind k) { return kEvLabels[static_cast<int>(k)]; }

uint64_t SiteCounters::total_msgs(bool include_reply_acks) const {
  uint64_t n = 0;
  for (int lan = 0; lan < 2; ++lan)
    for (int t = 0; t < kMsgTypeCount; ++t) {
      if (!include_reply_acks &&
          t == static_cast<int>(MsgType::ClientReplyAck))
        continue;
      n += in_msgs[lan][t] + out_msgs[lan][t];
    }
  return n;
}

std::string Trace::to_text() const {
  std::string out = "htpaxos-trace v1\n";
  const TraceMeta& m = meta;
  out += "m disseminators " + std::to_string(m.disseminators) + '\n';
  out += "m sequencers " + std::to_string(m.sequencers) + '\n';
  out += "m learners " + std::to_string(m.learners) + '\n';
  out += "m clients " + std::to_string(m.clients) + '\n';
  out += "m colocate_sequencers " + std::to_string(m.colocate_sequencers) + '\n';
  out += "m colocate_learners " + std::to_string(m.colocate_learners) + '\n';
  out += "m batch_max_size " + std::to_string(m.batch_max_size) + '\n';
  out += "m alpha " + std::to_string(m.alpha) + '\n';
  out += "m piggyback " + std::to_string(m.piggyback) + '\n';
  out += "m requests_per_client " + std::to_string(m.requests_per_client) + '\n';
  out += "m loss " + fmt_double(m.loss[0]) + ' ' + fmt_double(m.loss[1]) + '\n';
  out += "m dup " + fmt_double(m.dup[0]) + ' ' + fmt_double(m.dup[1]) + '\n';
  out += "m delay_min " + std::to_string(m.delay_min[0]) + ' ' +
         std::to_string(m.delay_min[1]) + '\n';
  out += "m delay_max " + std::to_string(m.delay_max[0]) + ' ' +
         std::to_string(m.delay_max[1]) + '\n';
  out += "m gst " + std::to_string(m.gst) + '\n';
  out += "m horizon " + std::to_string(m.horizon) + '\n';
  out += "m seed " + std::to_string(m.seed) + '\n';
  out += "m fault_count " + std::to_string(m.fault_count) + '\n';
  put_sites(out, "disseminator_sites", m.disseminator_sites);
  put_sites(out, "sequencer_sites", m.sequencer_sites);
  put_sites(out, "learner_sites", m.learner_sites);
  put_sites(out, "client_sites", m.client_sites);
  out += "m quiescent " + std::to_string(m.quiescent) + '\n';
  out += "m end_time " + std::to_string(m.end_time) + '\n';
  if (window_end > window_start)
    out += "w " + std::to_string(window_start) + ' ' +
           std::to_string(window_end) + '\n';
  for (const TraceEvent& e : events) {
    out += "e " + std::to_string(e.time) + ' ' + ev_label(e.kind) + ' ' +
           std::to_string(e.site) + ' ' + std::to_string(e.peer) + ' ' +
           std::to_string(e.rid) + ' ' + std::to_string(e.value) + ' ' +
           std::to_string(e.instance) + ' ' + std::to_string(e.ballot) + ' ' +
           std::to_string(e.lifetime) + ' ' + std::to_string(e.lan) + ' ' +
           std::to_string(e.msg_type) + ' ' + std::to_string(e.flag) + ' ' +
           std::to_string(e.bytes) + '\n';
  }
  put_counter_rows(out, "c", counters);
  put_counter_rows(out, "wc", window_counters);
  return out;
}

Trace Trace::from_text(const std::string& text) {
  Trace tr;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  bool header_seen = false;
  size_t num_sites = 0;

  auto counters_at = [&](std::vector<SiteCounters>& bank,
                         size_t site) -> SiteCounters& {
    if (bank.size() <= site) bank.resize(std::max(num_sites, site + 1));
    return bank[site];
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "htpaxos-trace v1")
        throw std::runtime_error(
            "trace parse error at line 1: unsupported header '" + line + "'");
      header_seen = true;
      continue;
    }
    LineReader r(line, lineno);
    std::string tag = r.word("tag");
    if (tag == "m") {
      std::string key = r.word("meta key");
      TraceMeta& m = tr.meta;
      auto sites = [&](std::vector<SiteId>& dst) {
        dst.clear();
        int64_t v;
        while (r.in >> v) dst.push_back(static_cast<SiteId>(v));
        for (SiteId s : dst) num_sites = std::max<size_t>(num_sites, s + 1);
      };
      if (key == "disseminators") m.disseminators = (uint32_t)r.u64(key.c_str());
      else if (key == "sequencers") m.sequencers = (uint32_t)r.u64(key.c_str());
      else if (key == "learners") m.learners = (uint32_t)r.u64(key.c_str());
      else if (key == "clients") m.clients = (uint32_t)r.u64(key.c_str());
      else if (key == "colocate_sequencers") m.colocate_sequencers = r.u64(key.c_str()) != 0;
      else if (key == "colocate_learners") m.colocate_learners = r.u64(key.c_str()) != 0;
      else if (key == "batch_max_size") m.batch_max_size = (uint32_t)r.u64(key.c_str());
      else if (key == "alpha") m.alpha = (uint32_t)r.u64(key.c_str());
      else if (key == "piggyback") m.piggyback = r.u64(key.c_str()) != 0;
      else if (key == "requests_per_client") m.requests_per_client = (uint32_t)r.u64(key.c_str());
      else if (key == "loss") { m.loss[0] = r.f64("loss"); m.loss[1] = r.f64("loss"); }
      else if (key == "dup") { m.dup[0] = r.f64("dup"); m.dup[1] = r.f64("dup"); }
      else if (key == "delay_min") { m.delay_min[0] = r.i64("delay"); m.delay_min[1] = r.i64("delay"); }
      else if (key == "delay_max") { m.delay_max[0] = r.i64("delay"); m.delay_max[1] = r.i64("delay"); }
      else if (key == "gst") m.gst = r.i64(key.c_str());
      else if (key == "horizon") m.horizon = r.i64(key.c_str());
      else if (key == "seed") m.seed = r.u64(key.c_str());
      else if (key == "fault_count") m.fault_count = (uint32_t)r.u64(key.c_str());
      else if (key == "disseminator_sites") sites(m.disseminator_sites);
      else if (key == "sequencer_sites") sites(m.sequencer_sites);
      else if (key == "learner_sites") sites(m.learner_sites);
      else if (key == "client_sites") sites(m.client_sites);
      else if (key == "quiescent") m.quiescent = r.u64(key.c_str()) != 0;
      else if (key == "end_time") m.end_time = r.i64(key.c_str());
      else r.fail("unknown meta key '" + key + "'");
    } else if (tag == "w") {
      tr.window_start = r.i64("window start");
      tr.window_end = r.i64("window end");
    } else if (tag == "e") {
      TraceEvent e;
      e.time = r.i64("time");
      std::string label = r.word("event kind");
      int idx = ev_index(label);
      if (idx < 0) r.fail("unknown event kind '" + label + "'");
      e.kind = static_cast<EvKind>(idx);
      e.site = (SiteId)r.u64("site");
      e.peer = (SiteId)r.u64("peer");
      e.rid = (uint32_t)r.u64("rid");
      e.value = (uint32_t)r.u64("value");
      e.instance = (Instance)r.u64("instance");
      e.ballot = (Ballot)r.u64("ballot");
      e.lifetime = (uint32_t)r.u64("lifetime");
      e.lan = (uint8_t)r.u64("lan");
      e.msg_type = (uint8_t)r.u64("msg_type");
      e.flag = (uint8_t)r.u64("flag");
      e.bytes = r.u64("bytes");
      if (!r.done()) r.fail("trailing fields on event line");
      tr.events.push_back(e);
    } else if (tag == "c" || tag == "wc") {
      auto& bank = (tag == "c") ? tr.counters : tr.window_counters;
      size_t site = r.u64("site");
      int lan = (int)r.u64("lan");
      if (lan != 0 && lan != 1) r.fail("lan must be 0 or 1");
      std::string dir = r.word("direction");
      int type = (int)r.u64("msg type");
      if (type >= kMsgTypeCount) r.fail("msg type out of range");
      uint64_t msgs = r.u64("msgs"), bytes = r.u64("bytes");
      SiteCounters& c = counters_at(bank, site);
      if (dir == "in") {
        c.in_msgs[lan][type] = msgs;
        c.in_bytes[lan][type] = bytes;
      } else if (dir == "out") {
        c.out_msgs[lan][type] = msgs;
        c.out_bytes[lan][type] = bytes;
      } else {
        r.fail("direction must be in or out");
      }
    } else if (tag == "cl" || tag == "wcl") {
      auto& bank = (tag == "cl") ? tr.counters : tr.window_counters;
      size_t site = r.u64("site");
      int type = (int)r.u64("msg type");
      if (type >= kMsgTypeCount) r.fail("msg type out of range");
      counters_at(bank, site).loop_msgs[type] = r.u64("msgs");
    } else {
      r.fail("unknown line tag '" + tag + "'");
    }
  }
  if (!header_seen)
    throw std::runtime_error("trace parse error at line 1: empty input");
  if (!tr.counters.empty() && tr.counters.size() < num_sites)
    tr.counters.resize(num_sites);
  if (!tr.window_counters.empty() && tr.window_counters.size() < num_sites)
    tr.window_counters.resize(num_sites);
  return tr;
}

uint64_t Trace::content_hash() const {
  std::string text = to_text();
  return fnv1a(kFnvBasis, text.data(), text.size());
}

std::string Trace::counters_csv(bool include_reply_acks) const {
  std::string out = "site,scope,dir,type,msgs,bytes\n";
  for (size_t site = 0; site < counters.size(); ++site) {
    const SiteCounters& c = counters[site];
    for (int lan = 0; lan < 2; ++lan)
      for (int t = 0; t < kMsgTypeCount; ++t) {
        if (!include_reply_acks &&
            t == static_cast<int>(MsgType::ClientReplyAck))
          continue;
        const char* scope = lan ? "lan2" : "lan1";
        const char* label = label_of(static_cast<MsgType>(t));
        if (c.in_msgs[lan][t])
          out += std::to_string(site) + ',' + scope + ",in," + label + ',' +
                 std::to_string(c.in_msgs[lan][t]) + ',' +
                 std::to_string(c.in_bytes[lan][t]) + '\n';
        if (c.out_msgs[lan][t])
          out += std::to_string(site) + ',' + scope + ",out," + label + ',' +
                 std::to_string(c.out_msgs[lan][t]) + ',' +
                 std::to_string(c.out_bytes[lan][t]) + '\n';
      }
    for (int t = 0; t < kMsgTypeCount; ++t) {
      if (!include_reply_acks && t == static_cast<int>(MsgType::ClientReplyAck))
        continue;
      if (c.loop_msgs[t])
        out += std::to_string(site) + ",loop,in," +
               label_of(static_cast<MsgType>(t)) + ',' +
               std::to_string(c.loop_msgs[t]) + ",0\n";
    }
  }
  return out;
}

}  // namespace htpaxos
