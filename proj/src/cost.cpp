#include "htpaxos/cost.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

namespace htpaxos {
namespace {

long long reduce128(__int128 n, __int128 d, bool want_num, const char* what) {
  if (d == 0) throw std::invalid_argument("rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  __int128 a = n < 0 ? -n : n;
  __int128 b = d;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a == 0) a = 1;
  n /= a;
  d /= a;
  __int128 v = want_num ? n : d;
  if (v > __int128(9223372036854775807LL) || v < -__int128(9223372036854775807LL) - 1)
    throw std::overflow_error(what);
  return static_cast<long long>(v);
}

Rat make(__int128 n, __int128 d) {
  Rat r;
  r.num = reduce128(n, d, true, "rational overflow");
  r.den = reduce128(n, d, false, "rational overflow");
  return r;
}

}  // namespace

Rat::Rat(long long n, long long d) { *this = make(n, d); }

Rat Rat::operator+(const Rat& o) const {
  return make(__int128(num) * o.den + __int128(o.num) * den, __int128(den) * o.den);
}
Rat Rat::operator-(const Rat& o) const {
  return make(__int128(num) * o.den - __int128(o.num) * den, __int128(den) * o.den);
}
Rat Rat::operator*(const Rat& o) const {
  return make(__int128(num) * o.num, __int128(den) * o.den);
}
Rat Rat::operator/(const Rat& o) const {
  if (o.num == 0) throw std::invalid_argument("rational division by zero");
  return make(__int128(num) * o.den, __int128(den) * o.num);
}
bool Rat::operator<(const Rat& o) const {
  return __int128(num) * o.den < __int128(o.num) * den;
}
bool Rat::operator<=(const Rat& o) const {
  return __int128(num) * o.den <= __int128(o.num) * den;
}

std::string Rat::str() const {
  std::string s = std::to_string(num);
  if (den != 1) {
    s += '/';
    s += std::to_string(den);
  }
  return s;
}

const char* protocol_label(Protocol p) {
  switch (p) {
    case Protocol::HT: return "ht";
    case Protocol::HTFT: return "htft";
    case Protocol::SPaxos: return "spaxos";
    case Protocol::Ring: return "ring";
    case Protocol::Classical: return "classical";
  }
  return "?";
}

namespace {

[[noreturn]] void bad_role(Protocol p, CostRole) {
  throw std::invalid_argument(std::string("cost model does not define that role for ") +
                              protocol_label(p));
}

// Wire sizes mirrored from the simulator's message layer: 64 bytes of
// overhead per message, 4-byte counts and ids, 4-byte length prefix per
// request inside a batch.
struct Sizes {
  Rat req_msg;        // client request: o + 4 + r
  Rat batch_msg;      // full batch: o + 4 + (n/m)(4 + r)
  Rat id_msg;         // any single-id control message: o + 4
  Rat p2b_msg;        // single-entry acceptor ack: o + 4 + 8
  Rat p2a_ids;        // id-only proposal covering the interval: o + 4 + 8m
  Rat decision;       // coalesced decision: o + (8 or 4) per batch
  Rat classical_val;  // value-carrying round message: o + 8 + (n/m)(4 + r)
};

Sizes sizes_of(const CostParams& pr) {
  const Rat o = 64;
  const Rat r = pr.request_size;
  const Rat per_batch = Rat(pr.n, pr.m) * (Rat(4) + r);
  Sizes z;
  z.req_msg = o + Rat(4) + r;
  z.batch_msg = o + Rat(4) + per_batch;
  z.id_msg = o + Rat(4);
  z.p2b_msg = o + Rat(12);
  z.p2a_ids = o + Rat(4) + Rat(8 * pr.m);
  z.decision = o + Rat((pr.compact_decisions ? 4 : 8) * pr.m);
  z.classical_val = o + Rat(8) + per_batch;
  return z;
}

void line(std::vector<ByteLine>& dst, Rat& total, const char* label, Rat count, Rat each) {
  Rat t = count * each;
  dst.push_back({label, count, each, t});
  total = total + t;
}

ByteBreakdown dissem_bytes(const CostParams& pr) {
  const Sizes z = sizes_of(pr);
  ByteBreakdown b;
  Rat npm(pr.n, pr.m);
  line(b.in, b.in_total, "requests", npm, z.req_msg);
  line(b.in, b.in_total, "batches", pr.m, z.batch_msg);
  line(b.in, b.in_total, "batch_acks", pr.m, z.id_msg);
  line(b.in, b.in_total, "decision", 1, z.decision);
  line(b.out, b.out_total, "batch", 1, z.batch_msg);
  line(b.out, b.out_total, "batch_acks", pr.m, z.id_msg);
  line(b.out, b.out_total, "id_vote", 1, z.id_msg);
  line(b.out, b.out_total, "reply", 1, z.id_msg);
  return b;
}

ByteBreakdown ht_leader_bytes(const CostParams& pr) {
  const Sizes z = sizes_of(pr);
  ByteBreakdown b;
  line(b.in, b.in_total, "id_votes", pr.m, z.id_msg);
  line(b.in, b.in_total, "accept_acks", pr.s / 2, z.p2b_msg);
  line(b.out, b.out_total, "proposal", 1, z.p2a_ids);
  line(b.out, b.out_total, "decision", 1, z.decision);
  return b;
}

ByteBreakdown ht_sequencer_bytes(const CostParams& pr) {
  const Sizes z = sizes_of(pr);
  ByteBreakdown b;
  line(b.in, b.in_total, "id_votes", pr.m, z.id_msg);
  line(b.in, b.in_total, "proposal", 1, z.p2a_ids);
  line(b.in, b.in_total, "decision", 1, z.decision);
  line(b.out, b.out_total, "accept_ack", 1, z.p2b_msg);
  return b;
}

ByteBreakdown ht_learner_bytes(const CostParams& pr) {
  const Sizes z = sizes_of(pr);
  ByteBreakdown b;
  line(b.in, b.in_total, "batches", pr.m, z.batch_msg);
  line(b.in, b.in_total, "decision", 1, z.decision);
  return b;
}

ByteBreakdown ring_leader_bytes(const CostParams& pr) {
  const Sizes z = sizes_of(pr);
  ByteBreakdown b;
  line(b.in, b.in_total, "requests", pr.n, z.req_msg);
  line(b.in, b.in_total, "ring_acks", pr.m, z.p2b_msg);
  line(b.out, b.out_total, "replies", pr.n, z.id_msg);
  line(b.out, b.out_total, "batches", pr.m, z.batch_msg);
  line(b.out, b.out_total, "decision", 1, z.decision);
  return b;
}

ByteBreakdown spaxos_leader_bytes(const CostParams& pr) {
  const Sizes z = sizes_of(pr);
  ByteBreakdown b;
  Rat npm(pr.n, pr.m);
  line(b.in, b.in_total, "requests", npm, z.req_msg);
  line(b.in, b.in_total, "batches", pr.m, z.batch_msg);
  line(b.in, b.in_total, "batch_acks", Rat(pr.m) * Rat(pr.m), z.id_msg);
  line(b.in, b.in_total, "accept_acks", pr.m / 2, z.p2b_msg);
  line(b.in, b.in_total, "decision", 1, z.decision);
  line(b.out, b.out_total, "replies", npm, z.id_msg);
  line(b.out, b.out_total, "batch_acks", pr.m, z.id_msg);
  line(b.out, b.out_total, "batch", 1, z.batch_msg);
  line(b.out, b.out_total, "proposal", 1, z.p2a_ids);
  line(b.out, b.out_total, "decision", 1, z.decision);
  return b;
}

ByteBreakdown classical_leader_bytes(const CostParams& pr) {
  const Sizes z = sizes_of(pr);
  ByteBreakdown b;
  line(b.in, b.in_total, "requests", pr.n, z.req_msg);
  line(b.in, b.in_total, "accept_acks", pr.m * (pr.m / 2), z.p2b_msg);
  line(b.out, b.out_total, "replies", pr.n, z.id_msg);
  line(b.out, b.out_total, "proposals", pr.m, z.classical_val);
  line(b.out, b.out_total, "decisions", pr.m, z.classical_val);
  return b;
}

ByteBreakdown merge(ByteBreakdown a, const ByteBreakdown& c) {
  for (const auto& l : c.in) a.in.push_back(l);
  for (const auto& l : c.out) a.out.push_back(l);
  a.in_total = a.in_total + c.in_total;
  a.out_total = a.out_total + c.out_total;
  return a;
}

}  // namespace

Rat messages_at(Protocol p, CostRole role, const CostParams& pr) {
  const Rat npm(pr.n, pr.m);
  switch (p) {
    case Protocol::HT:
      switch (role) {
        case CostRole::Disseminator: return Rat(3 * pr.m) + npm + Rat(3);
        case CostRole::Leader: return Rat(pr.m + pr.s / 2 + 2);
        case CostRole::Sequencer: return Rat(pr.m + 3);
        case CostRole::Learner: return Rat(pr.m + 1);
      }
      break;
    case Protocol::HTFT:
      if (role == CostRole::Leader)
        return messages_at(Protocol::HT, CostRole::Disseminator, pr) +
               messages_at(Protocol::HT, CostRole::Leader, pr);
      break;
    case Protocol::Ring:
      if (role == CostRole::Leader) return Rat(2 * (pr.n + pr.m) + 1);
      break;
    case Protocol::SPaxos:
      if (role == CostRole::Leader)
        return Rat(pr.m * pr.m) + Rat(2) * npm + Rat(2 * pr.m + pr.m / 2 + 4);
      break;
    case Protocol::Classical:
      if (role == CostRole::Leader) return Rat(2 * (pr.n + pr.m) + pr.m * (pr.m / 2));
      break;
  }
  bad_role(p, role);
}

ByteBreakdown bytes_at(Protocol p, CostRole role, const CostParams& pr) {
  switch (p) {
    case Protocol::HT:
      switch (role) {
        case CostRole::Disseminator: return dissem_bytes(pr);
        case CostRole::Leader: return ht_leader_bytes(pr);
        case CostRole::Sequencer: return ht_sequencer_bytes(pr);
        case CostRole::Learner: return ht_learner_bytes(pr);
      }
      break;
    case Protocol::HTFT:
      if (role == CostRole::Leader) return merge(dissem_bytes(pr), ht_leader_bytes(pr));
      break;
    case Protocol::Ring:
      if (role == CostRole::Leader) return ring_leader_bytes(pr);
      break;
    case Protocol::SPaxos:
      if (role == CostRole::Leader) return spaxos_leader_bytes(pr);
      break;
    case Protocol::Classical:
      if (role == CostRole::Leader) return classical_leader_bytes(pr);
      break;
  }
  bad_role(p, role);
}

DelayCounts delay_count(Protocol p, long long m) {
  switch (p) {
    case Protocol::HT:
    case Protocol::HTFT: return {6, 4};
    case Protocol::SPaxos: return {6, 6};
    case Protocol::Classical: return {4, 4};
    case Protocol::Ring: return {m + 2, m + 2};
  }
  throw std::invalid_argument("unknown protocol");
}

namespace {

struct Column {
  std::string header;
  Protocol protocol;
  CostRole role;
};

std::string sweep_csv(const std::vector<Column>& cols, const CostParams& base, bool bytes,
                      long long n_from, long long n_to, long long n_step) {
  std::ostringstream out;
  out << "n";
  for (const auto& c : cols) out << ',' << c.header;
  out << '\n';
  for (long long n = n_from; n <= n_to; n += n_step) {
    CostParams pr = base;
    pr.n = n;
    out << n;
    for (const auto& c : cols) {
      Rat v = bytes ? bytes_at(c.protocol, c.role, pr).total()
                    : messages_at(c.protocol, c.role, pr);
      out << ',' << v.str();
    }
    out << '\n';
  }
  return out.str();
}

const std::vector<Column> kBaselinesVsDissem = {
    {"classical", Protocol::Classical, CostRole::Leader},
    {"ring", Protocol::Ring, CostRole::Leader},
    {"spaxos", Protocol::SPaxos, CostRole::Leader},
    {"ht_disseminator", Protocol::HT, CostRole::Disseminator},
};
const std::vector<Column> kHtRoles = {
    {"ht_disseminator", Protocol::HT, CostRole::Disseminator},
    {"ht_leader", Protocol::HT, CostRole::Leader},
};
const std::vector<Column> kBaselinesVsCombined = {
    {"classical", Protocol::Classical, CostRole::Leader},
    {"ring", Protocol::Ring, CostRole::Leader},
    {"spaxos", Protocol::SPaxos, CostRole::Leader},
    {"htft_leader", Protocol::HTFT, CostRole::Leader},
};
const std::vector<Column> kByteColumns = {
    {"classical", Protocol::Classical, CostRole::Leader},
    {"ring", Protocol::Ring, CostRole::Leader},
    {"spaxos", Protocol::SPaxos, CostRole::Leader},
    {"ht_disseminator", Protocol::HT, CostRole::Disseminator},
    {"ht_leader", Protocol::HT, CostRole::Leader},
};

}  // namespace

std::string figure_csv(int figure, const CostParams& base) {
  CostParams pr = base;
  switch (figure) {
    case 1: return sweep_csv(kBaselinesVsDissem, pr, false, 100000, 1000000, 100000);
    case 2: return sweep_csv(kHtRoles, pr, false, 100000, 1000000, 100000);
    case 3: return sweep_csv(kBaselinesVsCombined, pr, false, 100000, 1000000, 100000);
    case 4:
      pr.request_size = 1024;
      return sweep_csv(kByteColumns, pr, true, 10000, 200000, 10000);
    case 5:
      pr.request_size = 1024;
      return sweep_csv(kByteColumns, pr, true, 100000, 1000000, 100000);
    case 6:
      pr.request_size = 512;
      return sweep_csv(kByteColumns, pr, true, 100000, 1000000, 100000);
    case 7:
      pr.request_size = 512;
      return sweep_csv(kBaselinesVsCombined, pr, true, 100000, 1000000, 100000);
    default: throw std::invalid_argument("figure index must be 1..7");
  }
}

}  // namespace htpaxos
