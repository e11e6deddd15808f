#pragma once

#include <cassert>
#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "htpaxos/rng.hpp"

namespace htpaxos {

using SiteId = uint32_t;
using Time = int64_t;
using Ballot = uint32_t;
using Instance = uint32_t;

/// Identifies one client request: (issuing client, per-client counter).
/// Packs into a single 32-bit word for size accounting (12-bit client,
/// 20-bit sequence), so clients are capped at 4094 and sequences at ~1M.
struct RequestId {
  uint32_t client = 0;
  uint32_t seq = 0;

  auto operator<=>(const RequestId&) const = default;
};

/// Identifies one batch: (minting disseminator site, per-site counter).
/// Same 12/20 packing as RequestId.
struct BatchId {
  uint32_t disseminator = 0;
  uint32_t seq = 0;

  auto operator<=>(const BatchId&) const = default;
};

constexpr uint32_t kMaxPackedNode = 0xffe;   // 0xfff is reserved
constexpr uint32_t kMaxPackedSeq = 0xfffff;  // 20 bits

inline uint32_t pack_request_id(RequestId r) {
  assert(r.client <= kMaxPackedNode && r.seq <= kMaxPackedSeq);
  return (r.client << 20) | r.seq;
}

inline RequestId unpack_request_id(uint32_t w) {
  return RequestId{w >> 20, w & kMaxPackedSeq};
}

inline uint32_t pack_batch_id(BatchId b) {
  assert(b.disseminator <= kMaxPackedNode && b.seq <= kMaxPackedSeq);
  return (b.disseminator << 20) | b.seq;
}

inline BatchId unpack_batch_id(uint32_t w) {
  return BatchId{w >> 20, w & kMaxPackedSeq};
}

/// A value ordered by the sequencers: a batch id, or nothing (a gap filler
/// decided when a new leader must close out an instance it knows nothing
/// about).  Encoded as the reserved word 0xffffffff.
using OrderedValue = std::optional<BatchId>;

constexpr uint32_t kNoopWord = 0xffffffffu;

inline uint32_t pack_ordered_value(const OrderedValue& v) {
  return v ? pack_batch_id(*v) : kNoopWord;
}

inline OrderedValue unpack_ordered_value(uint32_t w) {
  if (w == kNoopWord) return std::nullopt;
  return unpack_batch_id(w);
}

struct Request {
  RequestId id;
  std::vector<uint8_t> value;  // opaque payload; size is what costs bytes

  bool operator==(const Request&) const = default;
};

struct Batch {
  BatchId id;
  std::vector<Request> requests;

  bool operator==(const Batch&) const = default;

  uint64_t content_hash() const {
    uint64_t h = kFnvBasis;
    for (const auto& r : requests) {
      const uint32_t w = pack_request_id(r.id);
      h = fnv1a(h, &w, sizeof w);
      if (!r.value.empty()) h = fnv1a(h, r.value.data(), r.value.size());
    }
    return h;
  }
};

/// Deterministic filler payload so request bytes are reproducible from ids.
inline std::vector<uint8_t> make_request_payload(RequestId id, uint32_t size) {
  std::vector<uint8_t> v(size);
  Rng rng(0x5eedull ^ (uint64_t{id.client} << 32) ^ id.seq);
  for (auto& b : v) b = static_cast<uint8_t>(rng.next_u64());
  return v;
}

}  // namespace htpaxos
