#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace htpaxos {

/// Exact rational arithmetic for the closed-form cost model, so figures and
/// pinned expectations never wobble with floating point.  Intermediate
/// products go through 128-bit math; the reduced value must fit in 64 bits.
struct Rat {
  long long num = 0;
  long long den = 1;  // invariant: den > 0, gcd(|num|, den) == 1

  Rat() = default;
  Rat(long long n) : num(n) {}  // NOLINT: implicit by design
  Rat(long long n, long long d);

  Rat operator+(const Rat& o) const;
  Rat operator-(const Rat& o) const;
  Rat operator*(const Rat& o) const;
  Rat operator/(const Rat& o) const;
  bool operator==(const Rat& o) const = default;
  bool operator<(const Rat& o) const;
  bool operator<=(const Rat& o) const;
  bool operator>(const Rat& o) const { return o < *this; }
  bool operator>=(const Rat& o) const { return o <= *this; }

  bool is_integer() const { return den == 1; }
  std::string str() const;  // "p" or "p/q"
};

/// Model inputs: n requests arriving over an interval that the protocol
/// groups into m batches (n/m requests each), an ordering group of s
/// sequencers, and fixed-size request payloads.
struct CostParams {
  long long n = 1000000;
  long long m = 1000;
  long long s = 20;
  long long request_size = 1024;
  // Decision entries priced at 4 bytes (id only) instead of the simulator's
  // 8 bytes per (instance, value) pair.
  bool compact_decisions = false;
};

enum class Protocol : uint8_t { HT, HTFT, SPaxos, Ring, Classical };
enum class CostRole : uint8_t { Disseminator, Leader, Sequencer, Learner };

const char* protocol_label(Protocol p);

/// Messages in plus messages out at the given role over the whole interval.
/// Multicasts count once at the sender.  Throws std::invalid_argument for
/// role/protocol pairs the model does not define (the three baselines only
/// expose their leader; the combined deployment only its leader site).
Rat messages_at(Protocol p, CostRole role, const CostParams& pr);

struct ByteLine {
  std::string label;
  Rat count;
  Rat each;
  Rat total;
};
struct ByteBreakdown {
  std::vector<ByteLine> in, out;
  Rat in_total, out_total;
  Rat total() const { return in_total + out_total; }
};

ByteBreakdown bytes_at(Protocol p, CostRole role, const CostParams& pr);

/// Hops from a client's send until (a) every learner has executed the
/// request and (b) the client holds the reply, in the failure-free,
/// contention-free case.
struct DelayCounts {
  long long learning;
  long long response;
};
DelayCounts delay_count(Protocol p, long long m);

/// Canonical comparison tables, one per figure index 1..7, as CSV text.
std::string figure_csv(int figure, const CostParams& base);

}  // namespace htpaxos
