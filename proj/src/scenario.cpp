#include "htpaxos/scenario.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "htpaxos/cost.hpp"
#include "htpaxos/oracles.hpp"
#include "htpaxos/rng.hpp"

namespace htpaxos {
namespace {

[[noreturn]] void fail_at(const std::string& src, int line, const std::string& msg) {
  throw std::runtime_error(src + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t at = 0;
  while (true) {
    size_t next = s.find(sep, at);
    if (next == std::string::npos) {
      out.push_back(trim(s.substr(at)));
      return out;
    }
    out.push_back(trim(s.substr(at, next - at)));
    at = next + 1;
  }
}

long long to_int(const std::string& src, int line, const std::string& key,
                 const std::string& val) {
  if (val.empty()) fail_at(src, line, key + ": empty value");
  char* end = nullptr;
  long long v = std::strtoll(val.c_str(), &end, 10);
  if (end != val.c_str() + val.size())
    fail_at(src, line, key + ": not an integer: '" + val + "'");
  return v;
}

double to_double(const std::string& src, int line, const std::string& key,
                 const std::string& val) {
  if (val.empty()) fail_at(src, line, key + ": empty value");
  char* end = nullptr;
  double v = std::strtod(val.c_str(), &end);
  if (end != val.c_str() + val.size())
    fail_at(src, line, key + ": not a number: '" + val + "'");
  return v;
}

bool to_bool(const std::string& src, int line, const std::string& key,
             const std::string& val) {
  if (val == "true" || val == "1" || val == "yes") return true;
  if (val == "false" || val == "0" || val == "no") return false;
  fail_at(src, line, key + ": expected true/false, got '" + val + "'");
}

MsgType to_msg_type(const std::string& src, int line, const std::string& val) {
  for (int i = 0; i < kMsgTypeCount; ++i) {
    MsgType t = static_cast<MsgType>(i);
    if (val == label_of(t)) return t;
  }
  fail_at(src, line, "unknown message type '" + val + "'");
}

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& source_name) {
  Scenario sc;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    std::string s = trim(raw);
    if (s.empty()) continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos) fail_at(source_name, line, "expected key=value: '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    auto iv = [&] { return to_int(source_name, line, key, val); };
    auto dv = [&] { return to_double(source_name, line, key, val); };
    auto bv = [&] { return to_bool(source_name, line, key, val); };

    if (key == "name") sc.name = val;
    else if (key == "disseminators") sc.cfg.num_disseminators = uint32_t(iv());
    else if (key == "sequencers") sc.cfg.num_sequencers = uint32_t(iv());
    else if (key == "learners") sc.cfg.num_learners = uint32_t(iv());
    else if (key == "colocate_sequencers") sc.cfg.colocate_sequencers = bv();
    else if (key == "colocate_learners") sc.cfg.colocate_learners = bv();
    else if (key == "clients") sc.cfg.num_clients = uint32_t(iv());
    else if (key == "batch_max_size") sc.cfg.batch_max_size = uint32_t(iv());
    else if (key == "batch_timeout") sc.cfg.batch_timeout = iv();
    else if (key == "alpha") sc.cfg.alpha = uint32_t(iv());
    else if (key == "piggyback") sc.cfg.piggyback = bv();
    else if (key == "count_reply_acks") sc.cfg.count_reply_acks = bv();
    else if (key == "affinity") {
      if (val == "random") sc.cfg.affinity = AffinityMode::Random;
      else if (val == "fixed") sc.cfg.affinity = AffinityMode::Fixed;
      else fail_at(source_name, line, "affinity: expected random or fixed");
    }
    else if (key == "client_retry_timeout") sc.cfg.client_retry_timeout = iv();
    else if (key == "revote_timeout") sc.cfg.revote_timeout = iv();
    else if (key == "reply_retry_timeout") sc.cfg.reply_retry_timeout = iv();
    else if (key == "reply_retry_limit") sc.cfg.reply_retry_limit = uint32_t(iv());
    else if (key == "ack_missing_timeout") sc.cfg.ack_missing_timeout = iv();
    else if (key == "relay_retry_timeout") sc.cfg.relay_retry_timeout = iv();
    else if (key == "pull_retry_timeout") sc.cfg.pull_retry_timeout = iv();
    else if (key == "proposal_retry_timeout") sc.cfg.proposal_retry_timeout = iv();
    else if (key == "heartbeat_period") sc.cfg.heartbeat_period = iv();
    else if (key == "suspicion_periods") sc.cfg.suspicion_periods = uint32_t(iv());
    else if (key == "replay_idle_period") sc.cfg.replay_idle_period = iv();
    else if (key == "replay_chunk") sc.cfg.replay_chunk = uint32_t(iv());
    else if (key == "requests_per_client") sc.cfg.requests_per_client = uint32_t(iv());
    else if (key == "request_period") sc.cfg.request_period = iv();
    else if (key == "request_size") sc.cfg.request_size = uint32_t(iv());
    else if (key == "client_start_stagger") sc.cfg.client_start_stagger = iv();
    else if (key == "loss") sc.net.loss[0] = sc.net.loss[1] = dv();
    else if (key == "loss1") sc.net.loss[0] = dv();
    else if (key == "loss2") sc.net.loss[1] = dv();
    else if (key == "dup") sc.net.dup[0] = sc.net.dup[1] = dv();
    else if (key == "dup1") sc.net.dup[0] = dv();
    else if (key == "dup2") sc.net.dup[1] = dv();
    else if (key == "delay") {
      sc.net.delay_min[0] = sc.net.delay_min[1] = iv();
      sc.net.delay_max[0] = sc.net.delay_max[1] = sc.net.delay_min[0];
    }
    else if (key == "delay_min") sc.net.delay_min[0] = sc.net.delay_min[1] = iv();
    else if (key == "delay_max") sc.net.delay_max[0] = sc.net.delay_max[1] = iv();
    else if (key == "delay_min1") sc.net.delay_min[0] = iv();
    else if (key == "delay_max1") sc.net.delay_max[0] = iv();
    else if (key == "delay_min2") sc.net.delay_min[1] = iv();
    else if (key == "delay_max2") sc.net.delay_max[1] = iv();
    else if (key == "gst") sc.net.gst = iv();
    else if (key == "horizon") sc.horizon = iv();
    else if (key == "seed") sc.seed = uint64_t(iv());
    else if (key == "window") {
      auto parts = split(val, ',');
      if (parts.size() != 2) fail_at(source_name, line, "window: expected start,end");
      sc.window_start = to_int(source_name, line, key, parts[0]);
      sc.window_end = to_int(source_name, line, key, parts[1]);
    }
    else if (key == "trace") {
      if (val == "full") sc.full_trace = true;
      else if (val == "oracle") sc.full_trace = false;
      else fail_at(source_name, line, "trace: expected full or oracle");
    }
    else if (key == "crash") {
      auto parts = split(val, ',');
      if (parts.size() != 2 && parts.size() != 3)
        fail_at(source_name, line, "crash: expected site,time[,restart]");
      FaultEvent f;
      f.site = SiteId(to_int(source_name, line, key, parts[0]));
      f.crash_at = to_int(source_name, line, key, parts[1]);
      if (parts.size() == 3) f.restart_at = to_int(source_name, line, key, parts[2]);
      sc.faults.push_back(f);
    }
    else if (key == "drop") {
      auto parts = split(val, ',');
      if (parts.size() != 4) fail_at(source_name, line, "drop: expected type,dst,from,to");
      DropRule d;
      d.type = to_msg_type(source_name, line, parts[0]);
      d.dst = parts[1] == "*" ? -1 : int32_t(to_int(source_name, line, key, parts[1]));
      d.from = to_int(source_name, line, key, parts[2]);
      d.to = to_int(source_name, line, key, parts[3]);
      sc.drops.push_back(d);
    }
    else fail_at(source_name, line, "unknown key '" + key + "'");
  }
  std::string err = sc.validate();
  if (!err.empty()) fail_at(source_name, line, err);
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path);
}

Scenario reference_scenario() {
  Scenario sc;
  sc.name = "reference";
  sc.cfg.num_disseminators = 3;
  sc.cfg.num_sequencers = 3;
  sc.cfg.num_learners = 3;
  sc.cfg.colocate_sequencers = false;
  sc.cfg.colocate_learners = true;
  sc.cfg.num_clients = 1;
  sc.cfg.requests_per_client = 1;
  sc.cfg.batch_max_size = 1;
  sc.cfg.request_size = 64;
  sc.cfg.affinity = AffinityMode::Fixed;
  sc.horizon = 50;
  sc.seed = 1;
  sc.full_trace = true;
  return sc;
}

Scenario agreement_scenario() {
  Scenario sc;
  sc.name = "agreement";
  sc.cfg.num_disseminators = 10;
  sc.cfg.num_sequencers = 3;
  sc.cfg.num_learners = 11;
  sc.cfg.colocate_sequencers = false;
  sc.cfg.colocate_learners = true;
  sc.cfg.num_clients = 20;
  sc.cfg.requests_per_client = 5;
  sc.cfg.request_period = 12;
  sc.cfg.batch_max_size = 2;
  sc.cfg.request_size = 32;
  sc.cfg.alpha = 16;
  sc.cfg.heartbeat_period = 15;
  sc.cfg.affinity = AffinityMode::Fixed;
  sc.horizon = 100;
  sc.seed = 1;
  sc.window_start = 48;
  sc.window_end = 60;
  return sc;
}

Scenario failover_scenario() {
  Scenario sc;
  sc.name = "failover";
  sc.cfg.num_disseminators = 5;
  sc.cfg.num_sequencers = 3;
  sc.cfg.num_learners = 5;
  sc.cfg.colocate_sequencers = false;
  sc.cfg.colocate_learners = true;
  sc.cfg.num_clients = 8;
  sc.cfg.requests_per_client = 1;
  sc.cfg.client_start_stagger = 1;
  sc.cfg.batch_max_size = 1;
  sc.cfg.alpha = 8;
  sc.cfg.heartbeat_period = 5;
  sc.cfg.suspicion_periods = 4;
  sc.cfg.affinity = AffinityMode::Fixed;
  sc.horizon = 100;
  sc.seed = 1;
  // Cut the initial leader (site 5) off from acceptor acks, make two of its
  // last proposals vanish on one acceptor each, then kill it for good.
  sc.drops.push_back({MsgType::Phase2b, 5, 7, 30});
  sc.drops.push_back({MsgType::Phase2a, 6, 10, 10});
  sc.drops.push_back({MsgType::Phase2a, 7, 10, 10});
  sc.drops.push_back({MsgType::Phase2a, 7, 11, 11});
  sc.faults.push_back({5, 12, -1});
  return sc;
}

Scenario fuzz_scenario(FuzzMode mode, uint64_t seed) {
  Rng g = Rng(seed).fork(0x7363656eull);
  Scenario sc;
  sc.seed = seed;
  sc.horizon = 3000;
  sc.full_trace = false;
  Config& c = sc.cfg;
  c.num_disseminators = 5;
  c.num_sequencers = 3;
  c.num_learners = 5;
  c.colocate_sequencers = true;
  c.colocate_learners = true;
  c.num_clients = 3;
  c.requests_per_client = 20;
  c.request_period = 3;
  c.request_size = 8;
  c.batch_max_size = 4;
  c.batch_timeout = 2;
  c.alpha = 4;
  c.affinity = AffinityMode::Random;
  NetConfig& n = sc.net;
  for (int lan = 0; lan < 2; ++lan) {
    n.loss[lan] = double(g.below(21)) / 100.0;
    n.dup[lan] = double(g.below(11)) / 100.0;
    n.delay_min[lan] = 1;
    n.delay_max[lan] = 1 + int64_t(g.below(5));
  }
  n.gst = 100 + int64_t(g.below(301));

  if (mode == FuzzMode::Conforming) {
    sc.name = "fuzz-conforming-" + std::to_string(seed);
    // Liveness budget: at most two sites ever crash, at most one of them
    // hosting a sequencer, and the sequencer host always comes back.
    int slots = 2;
    if (g.below(10) < 7) {
      Time at = 10 + Time(g.below(191));
      sc.faults.push_back({0, at, at + 5 + Time(g.below(96))});
      --slots;
    }
    uint64_t want = g.below(3);
    bool used[2] = {false, false};
    for (uint64_t i = 0; i < want && slots > 0; ++i, --slots) {
      uint64_t pick = g.below(2);
      if (used[pick]) pick ^= 1;
      used[pick] = true;
      Time at = 10 + Time(g.below(491));
      Time restart = g.below(10) < 7 ? at + 5 + Time(g.below(96)) : Time(-1);
      sc.faults.push_back({SiteId(3 + pick), at, restart});
    }
  } else {
    sc.name = "fuzz-violating-" + std::to_string(seed);
    switch (seed % 3) {
      case 0:  // majority of disseminator hosts gone for good
        for (SiteId s : {2u, 3u, 4u})
          sc.faults.push_back({s, Time(20 + g.below(100)), -1});
        break;
      case 1:  // majority of sequencer hosts gone for good
        for (SiteId s : {1u, 2u})
          sc.faults.push_back({s, Time(20 + g.below(100)), -1});
        break;
      default:  // the network never stabilizes
        n.gst = -1;
        n.loss[0] = n.loss[1] = 0.15;
        break;
    }
  }
  return sc;
}

namespace {

struct Expectation {
  std::string check;
  CheckStatus status;
};

CheckStatus to_status(const std::string& src, int line, const std::string& s) {
  if (s == "pass") return CheckStatus::Pass;
  if (s == "fail") return CheckStatus::Fail;
  if (s == "not-applicable") return CheckStatus::NotApplicable;
  fail_at(src, line, "unknown status '" + s + "'");
}

std::vector<Expectation> parse_expect(const std::string& src, int line,
                                      const std::string& spec) {
  std::vector<Expectation> out;
  for (const std::string& tok : split(spec, ',')) {
    size_t eq = tok.find('=');
    if (eq == std::string::npos) fail_at(src, line, "expected check=status: '" + tok + "'");
    std::string check = trim(tok.substr(0, eq));
    if (check != "safety" && check != "liveness" && check != "delays")
      fail_at(src, line, "unknown check '" + check + "'");
    out.push_back({check, to_status(src, line, trim(tok.substr(eq + 1)))});
  }
  if (out.empty()) fail_at(src, line, "empty expectation list");
  return out;
}

Verdict run_check(const std::string& name, const Trace& t) {
  if (name == "safety") return check_safety(t);
  if (name == "liveness") return check_liveness(t);
  return check_delays(t);
}

SuiteOutcome eval_scenario(const std::string& label, const Scenario& sc,
                           const std::vector<Expectation>& expects) {
  SuiteOutcome out;
  out.label = label;
  try {
    Trace t = run_scenario(sc);
    std::string bad;
    for (const Expectation& ex : expects) {
      Verdict v = run_check(ex.check, t);
      if (v.status != ex.status) {
        if (!bad.empty()) bad += "; ";
        bad += ex.check + ": expected " + status_label(ex.status) + ", got " +
               status_label(v.status);
        if (!v.witness.empty()) bad += " (" + v.witness + ")";
      }
    }
    out.ok = bad.empty();
    out.detail = bad;
  } catch (const std::exception& e) {
    out.ok = false;
    out.detail = std::string("error: ") + e.what();
  }
  return out;
}

}  // namespace

int SuiteReport::failures() const {
  int n = 0;
  for (const auto& it : items)
    if (!it.ok) ++n;
  return n;
}

SuiteReport run_suite_file(const std::string& path, int jobs) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open suite file: " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  std::vector<std::function<SuiteOutcome()>> tasks;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    std::string s = trim(raw);
    if (s.empty()) continue;
    std::istringstream ls(s);
    std::string verb;
    ls >> verb;
    if (verb == "run") {
      std::string file, kw, spec;
      ls >> file >> kw >> spec;
      if (file.empty() || kw != "expect" || spec.empty())
        fail_at(path, line, "usage: run <scenario-file> expect <check>=<status>,...");
      auto expects = parse_expect(path, line, spec);
      std::string full = (base / file).string();
      tasks.push_back([full, file, expects] {
        try {
          Scenario sc = load_scenario_file(full);
          return eval_scenario("run " + file, sc, expects);
        } catch (const std::exception& e) {
          return SuiteOutcome{"run " + file, false, std::string("error: ") + e.what()};
        }
      });
    } else if (verb == "fuzz") {
      std::string mode_s, count_kv, seed_kv, kw, spec;
      ls >> mode_s >> count_kv >> seed_kv >> kw >> spec;
      if (kw != "expect" || spec.empty() || count_kv.rfind("count=", 0) != 0 ||
          seed_kv.rfind("seed0=", 0) != 0)
        fail_at(path, line, "usage: fuzz <mode> count=<k> seed0=<s> expect <check>=<status>,...");
      FuzzMode mode;
      if (mode_s == "conforming") mode = FuzzMode::Conforming;
      else if (mode_s == "violating") mode = FuzzMode::Violating;
      else fail_at(path, line, "unknown fuzz mode '" + mode_s + "'");
      long long count = to_int(path, line, "count", count_kv.substr(6));
      long long seed0 = to_int(path, line, "seed0", seed_kv.substr(6));
      if (count < 1) fail_at(path, line, "count must be >= 1");
      auto expects = parse_expect(path, line, spec);
      for (long long i = 0; i < count; ++i) {
        uint64_t seed = uint64_t(seed0 + i);
        tasks.push_back([mode, mode_s, seed, expects] {
          return eval_scenario("fuzz " + mode_s + " seed " + std::to_string(seed),
                               fuzz_scenario(mode, seed), expects);
        });
      }
    } else if (verb == "figures") {
      std::string out_kv;
      ls >> out_kv;
      if (out_kv.rfind("out=", 0) != 0) fail_at(path, line, "usage: figures out=<dir>");
      std::string dir = (base / out_kv.substr(4)).string();
      tasks.push_back([dir] {
        SuiteOutcome out;
        out.label = "figures " + dir;
        try {
          write_figures(dir);
          out.ok = true;
        } catch (const std::exception& e) {
          out.detail = std::string("error: ") + e.what();
        }
        return out;
      });
    } else {
      fail_at(path, line, "unknown verb '" + verb + "'");
    }
  }

  SuiteReport report;
  report.items.resize(tasks.size());
  unsigned jn = jobs > 0 ? unsigned(jobs) : std::thread::hardware_concurrency();
  if (jn == 0) jn = 1;
  if (jn > tasks.size()) jn = unsigned(tasks.size() ? tasks.size() : 1);
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      report.items[i] = tasks[i]();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < jn; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return report;
}

void write_figures(const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (int f = 1; f <= 7; ++f) {
    std::string file = dir + "/fig" + std::to_string(f) + ".csv";
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file);
    out << figure_csv(f, CostParams{});
    if (!out.good()) throw std::runtime_error("write failed: " + file);
  }
}

}  // namespace htpaxos
