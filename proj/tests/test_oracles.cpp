#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "htpaxos/oracles.hpp"
#include "htpaxos/trace.hpp"

using namespace htpaxos;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Trace load(const std::string& path) { return Trace::from_text(slurp(path)); }

Verdict verdict_of(const Trace& t, const std::string& name) {
  for (Verdict& v : check_all(t))
    if (v.check == name) return v;
  FAIL("no verdict named ", name);
  return {};
}

TraceEvent ev(Time time, EvKind kind) {
  TraceEvent e;
  e.time = time;
  e.kind = kind;
  return e;
}

// The minimal healthy trace used as the mutation base for violation tests:
// one request, one batch b0.0 at instance 0, three identical learner logs.
Trace healthy() { return load("traces/reference_minimal.trace"); }

}  // namespace

TEST_CASE("the bundled reference fixture passes every check") {
  Trace t = healthy();
  for (const Verdict& v : check_all(t)) {
    CHECK(v.status == CheckStatus::Pass);
    CHECK(v.witness.empty());
  }
  Verdict safety = verdict_of(t, "safety");
  CHECK(safety.metrics.at("submitted") == "1");
  CHECK(safety.metrics.at("decided_instances") == "1");
  CHECK(safety.metrics.at("execution_logs") == "3");
  Verdict delays = verdict_of(t, "delays");
  CHECK(delays.metrics.at("reply_delay") == "4");
  CHECK(delays.metrics.at("execution_delay") == "6");
}

TEST_CASE("the bundled divergent fixture fails safety and nothing else") {
  Trace t = load("traces/adversarial_divergent.trace");
  Verdict safety = verdict_of(t, "safety");
  CHECK(safety.status == CheckStatus::Fail);
  CHECK(safety.witness ==
        "execution logs diverge at position 0: c0.0 vs c0.1");
  CHECK(verdict_of(t, "liveness").status == CheckStatus::Pass);
  CHECK(verdict_of(t, "delays").status == CheckStatus::Pass);
}

TEST_CASE("the bundled missing-reply fixture fails liveness and nothing else") {
  Trace t = load("traces/adversarial_missing_reply.trace");
  Verdict liveness = verdict_of(t, "liveness");
  CHECK(liveness.status == CheckStatus::Fail);
  CHECK(liveness.witness == "request c0.1 was never answered");
  CHECK(verdict_of(t, "safety").status == CheckStatus::Pass);
  CHECK(verdict_of(t, "delays").status == CheckStatus::Pass);
}

TEST_CASE("the bundled slow-reply fixture fails the delay bound alone") {
  Trace t = load("traces/adversarial_slow_reply.trace");
  Verdict delays = verdict_of(t, "delays");
  CHECK(delays.status == CheckStatus::Fail);
  CHECK(delays.witness == "reply took 5 hops, not 4");
  CHECK(delays.metrics.empty());  // failed verdicts carry the witness alone
  CHECK(verdict_of(t, "safety").status == CheckStatus::Pass);
  CHECK(verdict_of(t, "liveness").status == CheckStatus::Pass);
}

TEST_CASE("the bundled fixtures survive a parse round-trip") {
  for (const char* name :
       {"traces/reference_minimal.trace", "traces/adversarial_divergent.trace",
        "traces/adversarial_missing_reply.trace",
        "traces/adversarial_slow_reply.trace"}) {
    Trace a = load(name);
    Trace b = Trace::from_text(a.to_text());
    CHECK(b.meta == a.meta);
    CHECK(b.events == a.events);
    CHECK(b.to_text() == a.to_text());
    CHECK(b.content_hash() == a.content_hash());
  }
}

TEST_CASE("two decisions for one instance are a safety violation") {
  Trace t = healthy();
  TraceEvent e = ev(8, EvKind::Decide);
  e.site = 4;
  e.instance = 0;
  e.value = pack_batch_id({1, 0});
  t.add(e);
  Verdict v = check_safety(t);
  CHECK(v.status == CheckStatus::Fail);
  CHECK(v.witness == "instance 0 decided as b0.0 and b1.0");
}

TEST_CASE("one batch ordered at two instances is a safety violation") {
  Trace t = healthy();
  TraceEvent e = ev(8, EvKind::Decide);
  e.site = 4;
  e.instance = 1;
  e.value = pack_batch_id({0, 0});
  t.add(e);
  Verdict v = check_safety(t);
  CHECK(v.status == CheckStatus::Fail);
  CHECK(v.witness == "batch b0.0 ordered at 2 instances");
}

TEST_CASE("deciding a batch nobody minted is a safety violation") {
  Trace t = healthy();
  TraceEvent e = ev(8, EvKind::Decide);
  e.site = 4;
  e.instance = 1;
  e.value = pack_batch_id({2, 7});
  t.add(e);
  Verdict v = check_safety(t);
  CHECK(v.status == CheckStatus::Fail);
  CHECK(v.witness == "decided batch b2.7 was never minted");
}

TEST_CASE("reminting a batch id with different contents is a safety violation") {
  Trace t = healthy();
  TraceEvent e = ev(8, EvKind::BatchMint);
  e.site = 0;
  e.value = pack_batch_id({0, 0});
  e.bytes = 999;  // the original fixture minted it with hash 111
  t.add(e);
  Verdict v = check_safety(t);
  CHECK(v.status == CheckStatus::Fail);
  CHECK(v.witness == "batch id b0.0 minted twice with different contents");

  // an identical re-mint (same hash) is a harmless replay
  Trace ok = healthy();
  TraceEvent same = ev(8, EvKind::BatchMint);
  same.value = pack_batch_id({0, 0});
  same.bytes = 111;
  ok.add(same);
  CHECK(check_safety(ok).status == CheckStatus::Pass);
}

TEST_CASE("executing a request nobody submitted is a safety violation") {
  Trace t = healthy();
  TraceEvent e = ev(8, EvKind::Execute);
  e.site = 1;
  e.rid = pack_request_id({9, 0});
  t.add(e);
  Verdict v = check_safety(t);
  CHECK(v.status == CheckStatus::Fail);
  CHECK(v.witness == "site 1 executed unsubmitted request c9.0");
}

TEST_CASE("executing a request twice in one incarnation is a safety violation") {
  Trace t = healthy();
  TraceEvent e = ev(8, EvKind::Execute);
  e.site = 2;
  e.rid = 0;  // c0.0 again, same lifetime 0
  t.add(e);
  Verdict v = check_safety(t);
  CHECK(v.status == CheckStatus::Fail);
  CHECK(v.witness == "site 2 executed c0.0 twice");

  // the same replay under a fresh incarnation is the restart path: legal
  Trace ok = healthy();
  TraceEvent restart = ev(8, EvKind::Execute);
  restart.site = 2;
  restart.rid = 0;
  restart.lifetime = 1;
  ok.add(restart);
  CHECK(check_safety(ok).status == CheckStatus::Pass);
}

TEST_CASE("a tally reply without a recorded majority is a safety violation") {
  Trace t = healthy();
  // move the third copy's arrival past the reply: only site 0 held b0.0
  // by t=3, and the majority of 3 disseminators needs 2
  for (TraceEvent& e : t.events)
    if (e.kind == EvKind::BatchHeld && e.site != 0) e.time = 9;
  Verdict v = check_safety(t);
  CHECK(v.status == CheckStatus::Fail);
  CHECK(v.witness == "reply for c0.0 at t=3 but only 1 disseminators held b0.0");
}

TEST_CASE("a decided-path reply before any decision is a safety violation") {
  Trace t = healthy();
  for (TraceEvent& e : t.events)
    if (e.kind == EvKind::ReplySent) e.flag = 2;  // claims the decided path
  Verdict v = check_safety(t);
  CHECK(v.status == CheckStatus::Fail);
  CHECK(v.witness ==
        "reply for c0.0 claims a decision for b0.0 that had not happened");

  // once the reply follows the first decision it is fine again
  Trace ok = healthy();
  for (TraceEvent& e : ok.events) {
    if (e.kind == EvKind::ReplySent) {
      e.flag = 2;
      e.time = 5;  // the sequencer's first decide lands at t=5
    }
  }
  std::sort(ok.events.begin(), ok.events.end(),
            [](const TraceEvent& a, const TraceEvent& b) {
              return a.time < b.time;
            });
  CHECK(check_safety(ok).status == CheckStatus::Pass);
}

TEST_CASE("liveness steps aside when its fault assumptions are broken") {
  Trace base = healthy();

  SUBCASE("a network that never stabilizes") {
    base.meta.gst = -1;
    Verdict v = check_liveness(base);
    CHECK(v.status == CheckStatus::NotApplicable);
    CHECK(v.witness == "network never stabilizes");
  }
  SUBCASE("a crashed majority of disseminators") {
    TraceEvent c = ev(2, EvKind::Crash);
    c.site = 0;
    base.add(c);
    c.site = 1;
    base.add(c);
    Verdict v = check_liveness(base);
    CHECK(v.status == CheckStatus::NotApplicable);
    CHECK(v.witness == "2 of 3 disseminators crashed");
  }
  SUBCASE("a crashed majority of sequencers") {
    TraceEvent c = ev(2, EvKind::Crash);
    c.site = 3;
    base.add(c);
    c.site = 4;
    base.add(c);
    Verdict v = check_liveness(base);
    CHECK(v.status == CheckStatus::NotApplicable);
    CHECK(v.witness == "2 of 3 sequencers crashed");
  }
  SUBCASE("every learner crashed at least once") {
    // learners are colocated with the three disseminator sites here, so
    // point the meta at two standalone learner sites instead and crash both
    base.meta.learner_sites = {7, 8};
    TraceEvent c = ev(2, EvKind::Crash);
    c.site = 7;
    base.add(c);
    c.site = 8;
    base.add(c);
    Verdict v = check_liveness(base);
    CHECK(v.status == CheckStatus::NotApplicable);
    CHECK(v.witness == "every learner crashed at least once");
  }
  SUBCASE("a single crash keeps the check in force") {
    TraceEvent c = ev(2, EvKind::Crash);
    c.site = 0;
    base.add(c);
    CHECK(check_liveness(base).status == CheckStatus::Pass);
  }
}

TEST_CASE("a never-crashed learner that misses an execution fails liveness") {
  Trace t = healthy();
  // erase site 2's execution; it never crashed, so it has no excuse
  std::erase_if(t.events, [](const TraceEvent& e) {
    return e.kind == EvKind::Execute && e.site == 2;
  });
  Verdict v = check_liveness(t);
  CHECK(v.status == CheckStatus::Fail);
  CHECK(v.witness == "learner site 2 never executed c0.0");

  // but a crashed learner is excused from the obligation
  TraceEvent c = ev(7, EvKind::Crash);
  c.site = 2;
  t.add(c);
  CHECK(check_liveness(t).status == CheckStatus::Pass);
}

TEST_CASE("the delay check lists its unmet precondition") {
  auto reason = [](void (*tweak)(TraceMeta&)) {
    Trace t = load("traces/reference_minimal.trace");
    tweak(t.meta);
    Verdict v = check_delays(t);
    REQUIRE(v.status == CheckStatus::NotApplicable);
    return v.witness;
  };
  CHECK(reason([](TraceMeta& m) { m.loss[0] = 0.1; }) == "network is lossy");
  CHECK(reason([](TraceMeta& m) { m.dup[1] = 0.1; }) == "network is lossy");
  CHECK(reason([](TraceMeta& m) { m.delay_max[1] = 3; }) ==
        "delays are not the unit hop");
  CHECK(reason([](TraceMeta& m) { m.batch_max_size = 8; }) ==
        "batching delays the first hop");
  CHECK(reason([](TraceMeta& m) { m.fault_count = 1; }) ==
        "run has scripted faults");
  CHECK(reason([](TraceMeta& m) { m.piggyback = true; }) ==
        "piggybacking changes hop counts");
}

TEST_CASE("the delay check needs a request to measure") {
  Trace t = healthy();
  t.events.clear();
  Verdict v = check_delays(t);
  CHECK(v.status == CheckStatus::Fail);
  CHECK(v.witness == "no request was submitted");
}

TEST_CASE("verdicts print their label, witness, and metrics") {
  CHECK(std::string(status_label(CheckStatus::Pass)) == "pass");
  CHECK(std::string(status_label(CheckStatus::Fail)) == "fail");
  CHECK(std::string(status_label(CheckStatus::NotApplicable)) ==
        "not-applicable");

  std::string s =
      check_delays(load("traces/adversarial_slow_reply.trace")).to_string();
  CHECK(s == "delays: fail (reply took 5 hops, not 4)");
  std::string ok =
      check_delays(load("traces/reference_minimal.trace")).to_string();
  CHECK(ok == "delays: pass execution_delay=6 reply_delay=4");
}

TEST_CASE("trace parsing reports the offending line") {
  auto throws_with = [](const std::string& text, const std::string& msg) {
    try {
      Trace::from_text(text);
      FAIL_CHECK("no exception for ", msg);
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == msg);
    }
  };
  const std::string h = "htpaxos-trace v1\n";

  throws_with("", "trace parse error at line 1: empty input");
  throws_with("nope v9\n",
              "trace parse error at line 1: unsupported header 'nope v9'");
  throws_with(h + "m frobnicate 3\n",
              "trace parse error at line 2: unknown meta key 'frobnicate'");
  throws_with(h + "e 0 Quux 0 0 0 0 0 0 0 0 0 0 0\n",
              "trace parse error at line 2: unknown event kind 'Quux'");
  throws_with(h + "x 1 2 3\n",
              "trace parse error at line 2: unknown line tag 'x'");
  throws_with(h + "c 0 2 in 0 1 64\n",
              "trace parse error at line 2: lan must be 0 or 1");
  throws_with(h + "c 0 1 in 13 1 64\n",
              "trace parse error at line 2: msg type out of range");
  throws_with(h + "c 0 1 sideways 0 1 64\n",
              "trace parse error at line 2: direction must be in or out");
  throws_with(h + "c abc 1 in 0 1 64\n",
              "trace parse error at line 2: bad number for site: abc");
  throws_with(h + "e 0 Submit 6 0 0 0 0 0 0 0 0 0 0 99\n",
              "trace parse error at line 2: trailing fields on event line");
  throws_with(h + "e 0 Submit 6\n",
              "trace parse error at line 2: missing peer");
  throws_with(h + "cl 0 13 5\n",
              "trace parse error at line 2: msg type out of range");
}

TEST_CASE("window rows parse back into window state") {
  const std::string text =
      "htpaxos-trace v1\n"
      "m disseminators 1\n"
      "w 5 9\n"
      "wc 0 1 out 12 3 24192\n"
      "wcl 0 2 4\n"
      "c 0 0 in 1 2 20696\n";
  Trace t = Trace::from_text(text);
  CHECK(t.window_start == 5);
  CHECK(t.window_end == 9);
  REQUIRE(t.window_counters.size() == 1);
  CHECK(t.window_counters[0].out_msgs[1][12] == 3);
  CHECK(t.window_counters[0].out_bytes[1][12] == 24192);
  CHECK(t.window_counters[0].loop_msgs[2] == 4);
  REQUIRE(t.counters.size() == 1);
  CHECK(t.counters[0].in_msgs[0][1] == 2);
  CHECK(t.counters[0].in_bytes[0][1] == 20696);

  // and the writer emits them back out
  const std::string round = t.to_text();
  CHECK(round.find("w 5 9\n") != std::string::npos);
  CHECK(round.find("wc 0 1 out 12 3 24192\n") != std::string::npos);
  CHECK(round.find("wcl 0 2 4\n") != std::string::npos);
  CHECK(round.find("c 0 0 in 1 2 20696\n") != std::string::npos);
}
