#pragma once

#include "htpaxos/context.hpp"
#include "htpaxos/storage.hpp"

namespace htpaxos {

/// Record one decided (instance, value) in the site's shared log.  The first
/// agent dispatched at the site does the write and emits the event; a
/// conflicting redecision keeps the stored value and surfaces as a flagged
/// second Decide event for the checkers.
inline DecideOutcome apply_decision(Ctx& ctx, SiteStorage& st, Instance inst,
                                    OrderedValue value) {
  DecideOutcome out = st.record_decided(inst, value);
  if (out != DecideOutcome::Duplicate) {
    TraceEvent ev;
    ev.kind = EvKind::Decide;
    ev.site = ctx.self;
    ev.instance = inst;
    ev.value = pack_ordered_value(value);
    ev.flag = out == DecideOutcome::Conflict ? 1 : 0;
    ctx.event(ev);
  }
  return out;
}

}  // namespace htpaxos
