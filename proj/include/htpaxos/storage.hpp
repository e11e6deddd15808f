#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>

#include "htpaxos/ids.hpp"
#include "htpaxos/message.hpp"

namespace htpaxos {

enum class DecideOutcome : uint8_t { New, Duplicate, Conflict };

// Per-site stable storage. Survives crashes; agents are rebuilt on restart
// over whatever is recorded here. All colocated agents at a site share one
// instance, so a disseminator's batch store doubles as the local learner's
// request source and the decided log is written once per site.
struct SiteStorage {
  // dissemination
  std::map<BatchId, Batch> requests_set;
  std::map<RequestId, BatchId> request_index;  // first batch seen holding rid
  uint32_t next_batch_seq = 0;

  // ordering (sequencer)
  std::set<BatchId> stable_seen;   // ever enqueued here; never removed
  std::deque<BatchId> stable_ids;  // pending FIFO; decided entries purged
  Ballot promised = 0;
  Ballot highest_own_ballot = 0;  // highest ballot this index ever owned
  std::map<Instance, AcceptedEntry> accepted;

  // decided log, shared by every agent on the site
  std::map<Instance, OrderedValue> decided;
  std::map<BatchId, Instance> decided_index;  // non-noop reverse map

  uint32_t restarts = 0;

  bool holds(BatchId id) const { return requests_set.count(id) != 0; }

  // true when the batch was not held before
  bool record_batch(const Batch& b) {
    auto [it, fresh] = requests_set.emplace(b.id, b);
    if (!fresh) return false;
    for (const Request& r : b.requests) request_index.emplace(r.id, b.id);
    return true;
  }

  DecideOutcome record_decided(Instance inst, OrderedValue value) {
    auto it = decided.find(inst);
    if (it != decided.end())
      return it->second == value ? DecideOutcome::Duplicate
                                 : DecideOutcome::Conflict;
    decided.emplace(inst, value);
    if (value) decided_index.emplace(*value, inst);
    return DecideOutcome::New;
  }

  bool is_decided(BatchId id) const { return decided_index.count(id) != 0; }

  void purge_stable(BatchId id) {
    for (auto it = stable_ids.begin(); it != stable_ids.end();)
      it = (*it == id) ? stable_ids.erase(it) : it + 1;
  }
};

}  // namespace htpaxos
