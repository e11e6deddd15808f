#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "htpaxos/cost.hpp"

using namespace htpaxos;

namespace {

const CostParams kBase;  // n=1e6, m=1000, s=20, r=1024

Rat total(Protocol p, CostRole r, const CostParams& pr) {
  return bytes_at(p, r, pr).total();
}

std::string csv_row(const std::string& csv, const std::string& prefix) {
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(prefix, 0) == 0) return line;
  return "";
}

}  // namespace

TEST_CASE("exact rational arithmetic") {
  CHECK(Rat(1, 3) + Rat(1, 6) == Rat(1, 2));
  CHECK(Rat(10, 4) == Rat(5, 2));
  CHECK(Rat(-6, 4) == Rat(-3, 2));
  CHECK(Rat(7, 2) * Rat(2, 7) == Rat(1));
  CHECK(Rat(1, 3) < Rat(34, 100));
  CHECK(Rat(1000000, 300).str() == "10000/3");
  CHECK(Rat(8).str() == "8");
  CHECK(Rat(8).is_integer());
  CHECK(!Rat(1, 3).is_integer());
  CHECK_THROWS_AS(Rat(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(Rat(1) / Rat(0), std::invalid_argument);
}

TEST_CASE("per-role message counts at the baseline operating point") {
  // n=1e6 requests, m=1000 consensus rounds, s=20 sequencers:
  //   disseminator 3m + n/m + 3            = 3000 + 1000 + 3    = 4003
  //   leader       m + floor(s/2) + 2      = 1000 + 10 + 2      = 1012
  //   sequencer    m + 3                                        = 1003
  //   learner      m + 1                                        = 1001
  CHECK(messages_at(Protocol::HT, CostRole::Disseminator, kBase) == Rat(4003));
  CHECK(messages_at(Protocol::HT, CostRole::Leader, kBase) == Rat(1012));
  CHECK(messages_at(Protocol::HT, CostRole::Sequencer, kBase) == Rat(1003));
  CHECK(messages_at(Protocol::HT, CostRole::Learner, kBase) == Rat(1001));
  // baselines, same point:
  //   ring      2(n+m) + 1                                  = 2002001
  //   competing m^2 + 2(n/m) + 2m + floor(m/2) + 4          = 1004504
  //   classical 2(n+m) + m*floor(m/2)                       = 2502000
  CHECK(messages_at(Protocol::Ring, CostRole::Leader, kBase) == Rat(2002001));
  CHECK(messages_at(Protocol::SPaxos, CostRole::Leader, kBase) == Rat(1004504));
  CHECK(messages_at(Protocol::Classical, CostRole::Leader, kBase) == Rat(2502000));
  // combined deployment: one site carrying disseminator plus leader
  CHECK(messages_at(Protocol::HTFT, CostRole::Leader, kBase) == Rat(4003 + 1012));
}

TEST_CASE("message counts stay exact off the integer grid") {
  CostParams pr = kBase;
  pr.m = 300;  // 1e6/300 is not integral
  CHECK(messages_at(Protocol::HT, CostRole::Disseminator, pr) ==
        Rat(900 + 3) + Rat(1000000, 300));
  CHECK(messages_at(Protocol::HT, CostRole::Disseminator, pr) == Rat(12709, 3));
}

TEST_CASE("roles outside a protocol's model are rejected") {
  for (Protocol p : {Protocol::SPaxos, Protocol::Ring, Protocol::Classical}) {
    CHECK_THROWS_AS(messages_at(p, CostRole::Disseminator, kBase), std::invalid_argument);
    CHECK_THROWS_AS(messages_at(p, CostRole::Sequencer, kBase), std::invalid_argument);
    CHECK_THROWS_AS(messages_at(p, CostRole::Learner, kBase), std::invalid_argument);
    CHECK_THROWS_AS(bytes_at(p, CostRole::Learner, kBase), std::invalid_argument);
  }
  CHECK_THROWS_AS(messages_at(Protocol::HTFT, CostRole::Sequencer, kBase),
                  std::invalid_argument);
  CHECK_THROWS_AS(bytes_at(Protocol::HTFT, CostRole::Disseminator, kBase),
                  std::invalid_argument);
}

TEST_CASE("leader byte totals at the baseline operating point") {
  // in:  1000 id votes * 68 + 10 accept acks * 76 = 68760
  // out: one id proposal (64+4+8*1000) + one decision (64+8*1000) = 16132
  ByteBreakdown b = bytes_at(Protocol::HT, CostRole::Leader, kBase);
  CHECK(b.in_total == Rat(68760));
  CHECK(b.out_total == Rat(8068 + 8064));
  CHECK(b.total() == Rat(84892));
}

TEST_CASE("disseminator byte totals at the baseline operating point") {
  // in:  1000*(68+1024) + 1000*(68+1000*1028) + 1000*68 + (64+8000)
  // out: (68+1000*1028) + 1000*68 + 68 + 68
  ByteBreakdown b = bytes_at(Protocol::HT, CostRole::Disseminator, kBase);
  Rat batch_msg(68 + 1000 * 1028);
  CHECK(b.in_total == Rat(1000) * Rat(68 + 1024) + Rat(1000) * batch_msg +
                          Rat(1000 * 68) + Rat(64 + 8000));
  CHECK(b.out_total == batch_msg + Rat(1000 * 68) + Rat(68) + Rat(68));
  CHECK(b.total() == Rat(1030332268));
}

TEST_CASE("combined role is the exact componentwise sum") {
  for (long long n : {100000LL, 400000LL, 1000000LL}) {
    CostParams pr = kBase;
    pr.n = n;
    CHECK(messages_at(Protocol::HTFT, CostRole::Leader, pr) ==
          messages_at(Protocol::HT, CostRole::Disseminator, pr) +
              messages_at(Protocol::HT, CostRole::Leader, pr));
    CHECK(total(Protocol::HTFT, CostRole::Leader, pr) ==
          total(Protocol::HT, CostRole::Disseminator, pr) +
              total(Protocol::HT, CostRole::Leader, pr));
  }
}

TEST_CASE("byte ordering holds across the sweep for both request sizes") {
  // At r=512 the rivals' fixed control overhead only clears the ring's
  // payload echo from n=2e5 upward, so the pinned grid starts there.
  for (long long r : {512LL, 1024LL}) {
    for (long long n = 200000; n <= 1000000; n += 200000) {
      CostParams pr = kBase;
      pr.n = n;
      pr.request_size = r;
      Rat classical = total(Protocol::Classical, CostRole::Leader, pr);
      Rat ring = total(Protocol::Ring, CostRole::Leader, pr);
      Rat spaxos = total(Protocol::SPaxos, CostRole::Leader, pr);
      Rat dissem = total(Protocol::HT, CostRole::Disseminator, pr);
      Rat leader = total(Protocol::HT, CostRole::Leader, pr);
      CHECK(classical > ring);
      CHECK(ring > spaxos);
      CHECK(spaxos > dissem);
      CHECK(dissem > leader);
    }
  }
  // at the larger request size the full chain already holds from n=1e5
  for (long long n = 100000; n <= 1000000; n += 100000) {
    CostParams pr = kBase;
    pr.n = n;
    CHECK(total(Protocol::Classical, CostRole::Leader, pr) >
          total(Protocol::Ring, CostRole::Leader, pr));
    CHECK(total(Protocol::Ring, CostRole::Leader, pr) >
          total(Protocol::SPaxos, CostRole::Leader, pr));
    CHECK(total(Protocol::SPaxos, CostRole::Leader, pr) >
          total(Protocol::HT, CostRole::Disseminator, pr));
  }
}

TEST_CASE("message-count ordering at high load") {
  // ring overtakes the competing design in message counts only past
  // n ~ 5e5; check the high end where the ordering is strict.
  for (long long n : {600000LL, 800000LL, 1000000LL}) {
    CostParams pr = kBase;
    pr.n = n;
    Rat classical = messages_at(Protocol::Classical, CostRole::Leader, pr);
    Rat ring = messages_at(Protocol::Ring, CostRole::Leader, pr);
    Rat spaxos = messages_at(Protocol::SPaxos, CostRole::Leader, pr);
    Rat dissem = messages_at(Protocol::HT, CostRole::Disseminator, pr);
    CHECK(classical > ring);
    CHECK(ring > spaxos);
    CHECK(spaxos > dissem);
  }
}

TEST_CASE("the relative byte gap to the closest rival widens at smaller requests") {
  // The absolute gap is nearly m^2 * 68 at any n, so relative to the useful
  // payload n*r it must be strictly larger when r shrinks.
  for (long long n = 100000; n <= 1000000; n += 100000) {
    CostParams big = kBase, small = kBase;
    big.n = small.n = n;
    big.request_size = 1024;
    small.request_size = 512;
    Rat gap_big = total(Protocol::SPaxos, CostRole::Leader, big) -
                  total(Protocol::HT, CostRole::Disseminator, big);
    Rat gap_small = total(Protocol::SPaxos, CostRole::Leader, small) -
                    total(Protocol::HT, CostRole::Disseminator, small);
    CHECK(gap_small / (Rat(n) * Rat(512)) > gap_big / (Rat(n) * Rat(1024)));
  }
}

TEST_CASE("compact decision pricing shrinks exactly the decision lines") {
  CostParams compact = kBase;
  compact.compact_decisions = true;
  // every decision recipient saves 4 bytes per round on the one decision msg
  CHECK(total(Protocol::HT, CostRole::Leader, kBase) -
            total(Protocol::HT, CostRole::Leader, compact) ==
        Rat(4 * kBase.m));
  CHECK(total(Protocol::HT, CostRole::Learner, kBase) -
            total(Protocol::HT, CostRole::Learner, compact) ==
        Rat(4 * kBase.m));
}

TEST_CASE("hop counts to learning and to the client reply") {
  CHECK(delay_count(Protocol::HT, 1000).learning == 6);
  CHECK(delay_count(Protocol::HT, 1000).response == 4);
  CHECK(delay_count(Protocol::HTFT, 8).learning == 6);
  CHECK(delay_count(Protocol::HTFT, 8).response == 4);
  CHECK(delay_count(Protocol::SPaxos, 1000).learning == 6);
  CHECK(delay_count(Protocol::SPaxos, 1000).response == 6);
  CHECK(delay_count(Protocol::Classical, 1000).learning == 4);
  CHECK(delay_count(Protocol::Classical, 1000).response == 4);
  for (long long m : {3LL, 5LL, 1000LL}) {
    CHECK(delay_count(Protocol::Ring, m).learning == m + 2);
    CHECK(delay_count(Protocol::Ring, m).response == m + 2);
  }
}

TEST_CASE("figure tables carry the pinned golden rows") {
  CostParams base;
  std::string fig1 = figure_csv(1, base);
  CHECK(csv_row(fig1, "n,") == "n,classical,ring,spaxos,ht_disseminator");
  CHECK(csv_row(fig1, "1000000,") == "1000000,2502000,2002001,1004504,4003");
  CHECK(csv_row(fig1, "100000,") == "100000,702000,202001,1002704,3103");

  std::string fig2 = figure_csv(2, base);
  CHECK(csv_row(fig2, "1000000,") == "1000000,4003,1012");

  std::string fig3 = figure_csv(3, base);
  CHECK(csv_row(fig3, "1000000,") == "1000000,2502000,2002001,1004504,5015");

  std::string fig5 = figure_csv(5, base);
  CHECK(csv_row(fig5, "1000000,") ==
        "1000000,3254144000,2188152064,1098386264,1030332268,84892");

  // fig4 is the same pricing on a low-load sweep; the shared point must agree
  std::string fig4 = figure_csv(4, base);
  CHECK(csv_row(fig4, "100000,") == csv_row(fig5, "100000,"));

  // fig6/fig7 are the 512-byte sweeps; the combined column is the exact sum
  std::string fig6 = figure_csv(6, base);
  std::string fig7 = figure_csv(7, base);
  CostParams r512 = base;
  r512.request_size = 512;
  CHECK(total(Protocol::HTFT, CostRole::Leader, r512) == Rat(517393160));
  CHECK(csv_row(fig6, "1000000,") ==
        "1000000," + total(Protocol::Classical, CostRole::Leader, r512).str() + "," +
            total(Protocol::Ring, CostRole::Leader, r512).str() + "," +
            total(Protocol::SPaxos, CostRole::Leader, r512).str() + "," +
            total(Protocol::HT, CostRole::Disseminator, r512).str() + "," +
            total(Protocol::HT, CostRole::Leader, r512).str());
  CHECK(csv_row(fig7, "1000000,") ==
        "1000000," + total(Protocol::Classical, CostRole::Leader, r512).str() + "," +
            total(Protocol::Ring, CostRole::Leader, r512).str() + "," +
            total(Protocol::SPaxos, CostRole::Leader, r512).str() + "," +
            total(Protocol::HTFT, CostRole::Leader, r512).str());

  CHECK_THROWS_AS(figure_csv(0, base), std::invalid_argument);
  CHECK_THROWS_AS(figure_csv(8, base), std::invalid_argument);
}

TEST_CASE("figure tables print rationals exactly when off-grid") {
  CostParams pr;
  pr.m = 300;
  std::string fig1 = figure_csv(1, pr);
  std::string row = csv_row(fig1, "1000000,");
  CHECK(row.find("12709/3") != std::string::npos);
}
