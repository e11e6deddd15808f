#include "htpaxos/message.hpp"

#include <stdexcept>

namespace htpaxos {

MsgType type_of(const MessageBody& body) {
  return static_cast<MsgType>(body.index());
}

const char* label_of(MsgType t) {
  switch (t) {
    case MsgType::ClientRequest: return "ClientRequest";
    case MsgType::ForwardBatch: return "ForwardBatch";
    case MsgType::BatchAck: return "BatchAck";
    case MsgType::IdVote: return "IdVote";
    case MsgType::ClientReply: return "ClientReply";
    case MsgType::ClientReplyAck: return "ClientReplyAck";
    case MsgType::Resend: return "Resend";
    case MsgType::ResendReply: return "ResendReply";
    case MsgType::Phase1a: return "Phase1a";
    case MsgType::Phase1b: return "Phase1b";
    case MsgType::Phase2a: return "Phase2a";
    case MsgType::Phase2b: return "Phase2b";
    case MsgType::Decision: return "Decision";
  }
  return "?";
}

Lan lan_of(MsgType t) {
  switch (t) {
    case MsgType::ClientRequest:
    case MsgType::ForwardBatch:
    case MsgType::ResendReply:
      return Lan::First;
    default:
      return Lan::Second;
  }
}

namespace {

uint64_t batch_payload(const Batch& b) {
  uint64_t sz = 4;  // batch id
  for (const auto& r : b.requests) sz += 4 + r.value.size();
  return sz;
}

}  // namespace

uint64_t payload_size(const MessageBody& body) {
  struct Visitor {
    uint64_t operator()(const ClientRequestMsg& m) const {
      return 4 + m.request.value.size();
    }
    uint64_t operator()(const ForwardBatchMsg& m) const { return batch_payload(m.batch); }
    uint64_t operator()(const BatchAckMsg&) const { return 4; }
    uint64_t operator()(const IdVoteMsg& m) const { return 4 * m.ids.size(); }
    uint64_t operator()(const ClientReplyMsg&) const { return 4; }
    uint64_t operator()(const ClientReplyAckMsg&) const { return 4; }
    uint64_t operator()(const ResendMsg&) const { return 4; }
    uint64_t operator()(const ResendReplyMsg& m) const { return batch_payload(m.batch); }
    uint64_t operator()(const Phase1aMsg&) const { return 4; }
    uint64_t operator()(const Phase1bMsg& m) const { return 4 + 12 * m.accepted.size(); }
    uint64_t operator()(const Phase2aMsg& m) const { return 4 + 8 * m.entries.size(); }
    uint64_t operator()(const Phase2bMsg& m) const { return 4 + 8 * m.entries.size(); }
    uint64_t operator()(const DecisionMsg& m) const { return 8 * m.entries.size(); }
  };
  return std::visit(Visitor{}, body);
}

uint64_t size_of(const Message& m) {
  uint64_t sz = kMsgOverheadBytes + payload_size(m.body);
  for (const auto& extra : m.piggyback) sz += payload_size(extra);
  return sz;
}

// --- layout v1 --------------------------------------------------------------

namespace {

constexpr uint8_t kLayoutVersion = 1;

struct Writer {
  std::vector<uint8_t> out;

  void u8(uint8_t v) { out.push_back(v); }
  void u32(uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
  }
  void bytes(const std::vector<uint8_t>& v) {
    u32(static_cast<uint32_t>(v.size()));
    out.insert(out.end(), v.begin(), v.end());
  }
  void request(const Request& r) {
    u32(pack_request_id(r.id));
    bytes(r.value);
  }
  void batch(const Batch& b) {
    u32(pack_batch_id(b.id));
    u32(static_cast<uint32_t>(b.requests.size()));
    for (const auto& r : b.requests) request(r);
  }
};

struct Reader {
  const std::vector<uint8_t>& in;
  size_t pos = 0;

  uint8_t u8() {
    if (pos + 1 > in.size()) throw std::runtime_error("truncated message");
    return in[pos++];
  }
  uint32_t u32() {
    if (pos + 4 > in.size()) throw std::runtime_error("truncated message");
    uint32_t v = in[pos] | (in[pos + 1] << 8) | (in[pos + 2] << 16) |
                 (static_cast<uint32_t>(in[pos + 3]) << 24);
    pos += 4;
    return v;
  }
  std::vector<uint8_t> bytes() {
    const uint32_t n = u32();
    if (pos + n > in.size()) throw std::runtime_error("truncated message");
    std::vector<uint8_t> v(in.begin() + pos, in.begin() + pos + n);
    pos += n;
    return v;
  }
  Request request() {
    Request r;
    r.id = unpack_request_id(u32());
    r.value = bytes();
    return r;
  }
  Batch batch() {
    Batch b;
    b.id = unpack_batch_id(u32());
    const uint32_t n = u32();
    b.requests.reserve(n);
    for (uint32_t i = 0; i < n; ++i) b.requests.push_back(request());
    return b;
  }
};

void encode_body(Writer& w, const MessageBody& body) {
  w.u8(static_cast<uint8_t>(type_of(body)));
  struct Visitor {
    Writer& w;
    void operator()(const ClientRequestMsg& m) const { w.request(m.request); }
    void operator()(const ForwardBatchMsg& m) const { w.batch(m.batch); }
    void operator()(const BatchAckMsg& m) const { w.u32(pack_batch_id(m.id)); }
    void operator()(const IdVoteMsg& m) const {
      w.u32(static_cast<uint32_t>(m.ids.size()));
      for (auto id : m.ids) w.u32(pack_batch_id(id));
    }
    void operator()(const ClientReplyMsg& m) const { w.u32(pack_request_id(m.id)); }
    void operator()(const ClientReplyAckMsg& m) const { w.u32(pack_request_id(m.id)); }
    void operator()(const ResendMsg& m) const { w.u32(pack_batch_id(m.id)); }
    void operator()(const ResendReplyMsg& m) const { w.batch(m.batch); }
    void operator()(const Phase1aMsg& m) const { w.u32(m.ballot); }
    void operator()(const Phase1bMsg& m) const {
      w.u32(m.ballot);
      w.u32(m.promised);
      w.u32(static_cast<uint32_t>(m.accepted.size()));
      for (const auto& e : m.accepted) {
        w.u32(e.instance);
        w.u32(e.ballot);
        w.u32(pack_ordered_value(e.value));
      }
    }
    void operator()(const Phase2aMsg& m) const {
      w.u32(m.ballot);
      w.u32(static_cast<uint32_t>(m.entries.size()));
      for (const auto& e : m.entries) {
        w.u32(e.instance);
        w.u32(pack_ordered_value(e.value));
      }
    }
    void operator()(const Phase2bMsg& m) const {
      w.u32(m.ballot);
      w.u32(static_cast<uint32_t>(m.entries.size()));
      for (const auto& e : m.entries) {
        w.u32(e.instance);
        w.u32(pack_ordered_value(e.value));
      }
    }
    void operator()(const DecisionMsg& m) const {
      w.u32(static_cast<uint32_t>(m.entries.size()));
      for (const auto& e : m.entries) {
        w.u32(e.instance);
        w.u32(pack_ordered_value(e.value));
      }
    }
  };
  std::visit(Visitor{w}, body);
}

MessageBody decode_body(Reader& r) {
  const auto t = static_cast<MsgType>(r.u8());
  switch (t) {
    case MsgType::ClientRequest: return ClientRequestMsg{r.request()};
    case MsgType::ForwardBatch: return ForwardBatchMsg{r.batch()};
    case MsgType::BatchAck: return BatchAckMsg{unpack_batch_id(r.u32())};
    case MsgType::IdVote: {
      IdVoteMsg m;
      const uint32_t n = r.u32();
      m.ids.reserve(n);
      for (uint32_t i = 0; i < n; ++i) m.ids.push_back(unpack_batch_id(r.u32()));
      return m;
    }
    case MsgType::ClientReply: return ClientReplyMsg{unpack_request_id(r.u32())};
    case MsgType::ClientReplyAck: return ClientReplyAckMsg{unpack_request_id(r.u32())};
    case MsgType::Resend: return ResendMsg{unpack_batch_id(r.u32())};
    case MsgType::ResendReply: return ResendReplyMsg{r.batch()};
    case MsgType::Phase1a: return Phase1aMsg{r.u32()};
    case MsgType::Phase1b: {
      Phase1bMsg m;
      m.ballot = r.u32();
      m.promised = r.u32();
      const uint32_t n = r.u32();
      m.accepted.reserve(n);
      for (uint32_t i = 0; i < n; ++i) {
        AcceptedEntry e;
        e.instance = r.u32();
        e.ballot = r.u32();
        e.value = unpack_ordered_value(r.u32());
        m.accepted.push_back(e);
      }
      return m;
    }
    case MsgType::Phase2a: {
      Phase2aMsg m;
      m.ballot = r.u32();
      const uint32_t n = r.u32();
      m.entries.reserve(n);
      for (uint32_t i = 0; i < n; ++i) {
        ProposalEntry e;
        e.instance = r.u32();
        e.value = unpack_ordered_value(r.u32());
        m.entries.push_back(e);
      }
      return m;
    }
    case MsgType::Phase2b: {
      Phase2bMsg m;
      m.ballot = r.u32();
      const uint32_t n = r.u32();
      m.entries.reserve(n);
      for (uint32_t i = 0; i < n; ++i) {
        ProposalEntry e;
        e.instance = r.u32();
        e.value = unpack_ordered_value(r.u32());
        m.entries.push_back(e);
      }
      return m;
    }
    case MsgType::Decision: {
      DecisionMsg m;
      const uint32_t n = r.u32();
      m.entries.reserve(n);
      for (uint32_t i = 0; i < n; ++i) {
        DecisionEntry e;
        e.instance = r.u32();
        e.value = unpack_ordered_value(r.u32());
        m.entries.push_back(e);
      }
      return m;
    }
  }
  throw std::runtime_error("unknown message type");
}

}  // namespace

std::vector<uint8_t> encode(const Message& m) {
  Writer w;
  w.u8(kLayoutVersion);
  w.u32(static_cast<uint32_t>(m.piggyback.size()));
  encode_body(w, m.body);
  for (const auto& extra : m.piggyback) encode_body(w, extra);
  return std::move(w.out);
}

Message decode(const std::vector<uint8_t>& bytes) {
  Reader r{bytes};
  if (r.u8() != kLayoutVersion) throw std::runtime_error("unsupported layout version");
  const uint32_t extras = r.u32();
  Message m;
  m.body = decode_body(r);
  m.piggyback.reserve(extras);
  for (uint32_t i = 0; i < extras; ++i) m.piggyback.push_back(decode_body(r));
  if (r.pos != bytes.size()) throw std::runtime_error("trailing bytes");
  return m;
}

}  // namespace htpaxos
