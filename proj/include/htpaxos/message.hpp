#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "htpaxos/ids.hpp"

namespace htpaxos {

// ---------------------------------------------------------------------------
// Protocol vocabulary.
//
// Two LANs separate the heavy traffic from the control traffic:
//   first LAN  — request/batch payloads (ForwardBatch, ResendReply, and the
//                raw client submissions)
//   second LAN — everything id-sized: acks, votes, replies, pulls, the whole
//                ordering exchange, and decisions.
//
// Id-sized control messages that address the same destination set may carry
// several entries at once (a vote listing many batch ids, a proposal or
// decision covering many instances).  A one-entry message is the degenerate
// case, so per-message sizes stay additive in the entry count.
// ---------------------------------------------------------------------------

enum class MsgType : uint8_t {
  ClientRequest,
  ForwardBatch,
  BatchAck,
  IdVote,
  ClientReply,
  ClientReplyAck,
  Resend,
  ResendReply,
  Phase1a,
  Phase1b,
  Phase2a,
  Phase2b,
  Decision,
};

constexpr int kMsgTypeCount = 13;

enum class Lan : uint8_t { First = 0, Second = 1 };

struct ClientRequestMsg {
  Request request;
  bool operator==(const ClientRequestMsg&) const = default;
};

struct ForwardBatchMsg {
  Batch batch;
  bool operator==(const ForwardBatchMsg&) const = default;
};

struct BatchAckMsg {
  BatchId id;
  bool operator==(const BatchAckMsg&) const = default;
};

/// One disseminator's endorsement of batches it has durably stored.  All ids
/// that become vote-pending within the same tick ride one message.
struct IdVoteMsg {
  std::vector<BatchId> ids;
  bool operator==(const IdVoteMsg&) const = default;
};

struct ClientReplyMsg {
  RequestId id;
  bool operator==(const ClientReplyMsg&) const = default;
};

struct ClientReplyAckMsg {
  RequestId id;
  bool operator==(const ClientReplyAckMsg&) const = default;
};

/// Pull request: "send me the batch with this id".
struct ResendMsg {
  BatchId id;
  bool operator==(const ResendMsg&) const = default;
};

struct ResendReplyMsg {
  Batch batch;
  bool operator==(const ResendReplyMsg&) const = default;
};

struct Phase1aMsg {
  Ballot ballot;
  bool operator==(const Phase1aMsg&) const = default;
};

/// One acceptor's report of everything it has ever accepted.  The candidate
/// needs per-instance ballots to pick the highest-ballot value, so entries
/// are (instance, ballot, value) triples.
struct AcceptedEntry {
  Instance instance = 0;
  Ballot ballot = 0;
  OrderedValue value;
  bool operator==(const AcceptedEntry&) const = default;
};

struct Phase1bMsg {
  Ballot ballot = 0;    // the prepare being answered
  Ballot promised = 0;  // acceptor's promise after processing (> ballot means refusal)
  std::vector<AcceptedEntry> accepted;
  bool operator==(const Phase1bMsg&) const = default;
};

struct ProposalEntry {
  Instance instance = 0;
  OrderedValue value;
  bool operator==(const ProposalEntry&) const = default;
};

struct Phase2aMsg {
  Ballot ballot = 0;
  std::vector<ProposalEntry> entries;
  bool operator==(const Phase2aMsg&) const = default;
};

struct Phase2bMsg {
  Ballot ballot = 0;
  std::vector<ProposalEntry> entries;
  bool operator==(const Phase2bMsg&) const = default;
};

struct DecisionEntry {
  Instance instance = 0;
  OrderedValue value;
  bool operator==(const DecisionEntry&) const = default;
};

/// Chosen (instance, value) pairs.  An empty Decision is the leader's
/// heartbeat.
struct DecisionMsg {
  std::vector<DecisionEntry> entries;
  bool operator==(const DecisionMsg&) const = default;
};

using MessageBody =
    std::variant<ClientRequestMsg, ForwardBatchMsg, BatchAckMsg, IdVoteMsg,
                 ClientReplyMsg, ClientReplyAckMsg, ResendMsg, ResendReplyMsg,
                 Phase1aMsg, Phase1bMsg, Phase2aMsg, Phase2bMsg, DecisionMsg>;

/// A wire message: a primary body plus any id-sized bodies piggybacked on it
/// (only produced when the piggyback optimization is on; cargo shares the
/// carrier's fixed overhead).
struct Message {
  MessageBody body;
  std::vector<MessageBody> piggyback;

  bool operator==(const Message&) const = default;
};

MsgType type_of(const MessageBody& body);
inline MsgType type_of(const Message& m) { return type_of(m.body); }

const char* label_of(MsgType t);

/// Which LAN a message variant travels on.  Total over all variants.
Lan lan_of(MsgType t);

/// Accounted size in bytes: a fixed 64-byte network overhead plus the payload
/// bytes listed below.  Framing metadata (variant tags, counts, lengths) is
/// treated as part of the overhead budget and not itemized.
///
///   ClientRequest            4 + value_size
///   ForwardBatch/ResendReply 4 + sum(4 + value_size) over requests
///   BatchAck/ClientReply/
///   ClientReplyAck/Resend    4
///   IdVote                   4 per id
///   Phase1a                  4
///   Phase1b                  4 + 12 per reported entry
///   Phase2a/Phase2b          4 + 8 per entry
///   Decision                 8 per entry
///
/// Piggybacked bodies add their payload bytes but no second overhead.
constexpr uint64_t kMsgOverheadBytes = 64;

uint64_t payload_size(const MessageBody& body);
uint64_t size_of(const Message& m);

inline bool is_heartbeat(const Message& m) {
  if (const auto* d = std::get_if<DecisionMsg>(&m.body)) {
    return d->entries.empty() && m.piggyback.empty();
  }
  return false;
}

/// Layout-v1 serialization.  Used for the trace digest and the round-trip
/// guarantees; the simulator itself passes structured messages around.
std::vector<uint8_t> encode(const Message& m);
Message decode(const std::vector<uint8_t>& bytes);  // throws std::runtime_error

}  // namespace htpaxos
