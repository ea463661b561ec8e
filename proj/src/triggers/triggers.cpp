#include "colonies/triggers/triggers.hpp"

#include <spdlog/spdlog.h>

#include "colonies/core/dag.hpp"
#include "colonies/triggers/cron.hpp"
#include "colonies/workflow/workflow.hpp"

namespace colonies::triggers {

Nanos next_deadline(const CronDef& c, Nanos previous, Nanos now) {
  if (c.interval > 0) {
    Nanos step = c.interval * kNanosPerSecond;
    if (previous > now) return previous;
    Nanos missed = (now - previous) / step + 1;
    return previous + missed * step;
  }
  return CronSchedule::parse(c.cron_expr).next_after(now);
}

CronDef add_cron(store::Tx& tx, CronDef def, IdSource& ids, Nanos now) {
  bool has_interval = def.interval != 0;
  bool has_expr = !def.cron_expr.empty();
  if (has_interval == has_expr) {
    throw Error(Errc::kInvalidSchedule,
                "a cron needs exactly one of interval or cronexpr");
  }
  if (has_interval && def.interval < 0) {
    throw Error(Errc::kInvalidSchedule, "cron interval must be positive");
  }
  if (has_expr) CronSchedule::parse(def.cron_expr);
  if (def.workflow.empty()) {
    throw Error(Errc::kInvalidSchedule, "cron workflow must not be empty");
  }
  validate_workflow(def.workflow);
  for (const auto& spec : def.workflow) validate_spec(spec);
  if (tx.find_colony(def.colony_id) == std::nullopt) {
    throw Error(Errc::kNotFound, "colony " + def.colony_id + " not found");
  }
  def.cron_id = ids.next();
  def.last_run = 0;
  def.next_deadline = has_interval ? now + def.interval * kNanosPerSecond
                                   : CronSchedule::parse(def.cron_expr).next_after(now);
  tx.insert_cron(def);
  return def;
}

void wake_roots(store::Store& store, const std::vector<std::string>& workflow_ids,
                assign::WakeupHub* hub) {
  if (hub == nullptr || workflow_ids.empty()) return;
  store.read([&](store::Tx& tx) {
    for (const auto& wf : workflow_ids) {
      for (const auto& id : tx.workflow_processes(wf)) {
        auto p = tx.get_process(id);
        if (!p.wait_for_parents) {
          hub->notify_queue(p.spec.conditions.colony_id,
                            p.spec.conditions.executor_type);
        }
      }
    }
  });
}

std::vector<std::string> cron_scan(store::Store& store, Nanos now,
                                   std::int64_t term, IdSource& ids,
                                   assign::WakeupHub* hub) {
  auto due = store.read([&](store::Tx& tx) { return tx.due_crons(now); });
  std::vector<std::string> fired;
  for (const auto& cron_id : due) {
    try {
      auto wf = store.write([&](store::Tx& tx) -> std::string {
        tx.fence(term);
        auto c = tx.find_cron(cron_id);
        if (!c || c->next_deadline > now) return {};
        auto sub = workflow::submit_workflow(tx, c->workflow, c->colony_id, ids, now);
        c->last_run = now;
        c->next_deadline = next_deadline(*c, c->next_deadline, now);
        tx.update_cron(*c);
        return sub.workflow_id;
      });
      if (!wf.empty()) fired.push_back(wf);
    } catch (const store::StaleTermError&) {
      throw;
    } catch (const Error& e) {
      if (e.code() == Errc::kStorageFailure) throw;
      spdlog::warn("cron {} failed to fire: {}", cron_id, e.what());
    }
  }
  wake_roots(store, fired, hub);
  return fired;
}

GeneratorDef add_generator(store::Tx& tx, GeneratorDef def, IdSource& ids) {
  if (def.trigger_count <= 0) {
    throw Error(Errc::kInvalidArgument, "generator triggercount must be positive");
  }
  if (def.timeout == 0 || def.timeout < kUnbounded) {
    throw Error(Errc::kInvalidArgument, "generator timeout must be positive or -1");
  }
  if (def.workflow.empty()) {
    throw Error(Errc::kInvalidArgument, "generator workflow must not be empty");
  }
  validate_workflow(def.workflow);
  for (const auto& spec : def.workflow) validate_spec(spec);
  if (tx.find_colony(def.colony_id) == std::nullopt) {
    throw Error(Errc::kNotFound, "colony " + def.colony_id + " not found");
  }
  def.generator_id = ids.next();
  tx.insert_generator(def);
  return def;
}

std::int64_t pack(store::Tx& tx, const std::string& generator_id,
                  const Json& payload, Nanos now) {
  if (!tx.find_generator(generator_id)) {
    throw Error(Errc::kUnknownGenerator, "generator " + generator_id + " not found");
  }
  if (canonical(payload).size() > kMaxPackBytes) {
    throw Error(Errc::kPayloadTooLarge, "pack payload exceeds 1 MiB");
  }
  PackRow row;
  row.generator_id = generator_id;
  row.payload = payload;
  row.arrival = now;
  return tx.insert_pack(row);
}

std::vector<std::string> generator_scan(store::Store& store, Nanos now,
                                        std::int64_t term, IdSource& ids,
                                        assign::WakeupHub* hub) {
  auto gens = store.read([&](store::Tx& tx) { return tx.all_generator_ids(); });
  std::vector<std::string> fired;
  for (const auto& gen_id : gens) {
    for (;;) {
      std::string wf;
      try {
        wf = store.write([&](store::Tx& tx) -> std::string {
          tx.fence(term);
          auto g = tx.find_generator(gen_id);
          if (!g) return {};
          auto pending = tx.unconsumed_packs(gen_id, g->trigger_count);
          if (pending.empty()) return {};
          bool full = static_cast<std::int64_t>(pending.size()) >= g->trigger_count;
          if (!full) {
            if (g->timeout <= 0) return {};
            if (now - pending.back().arrival < g->timeout * kNanosPerSecond) {
              return {};
            }
          }
          Json input = Json::array();
          for (const auto& p : pending) input.push_back(p.payload);
          auto sub = workflow::submit_workflow(tx, g->workflow, g->colony_id, ids,
                                               now, input);
          for (const auto& p : pending) tx.mark_consumed(p.seq, sub.workflow_id);
          return sub.workflow_id;
        });
      } catch (const store::StaleTermError&) {
        throw;
      } catch (const Error& e) {
        if (e.code() == Errc::kStorageFailure) throw;
        spdlog::warn("generator {} failed to fire: {}", gen_id, e.what());
      }
      if (wf.empty()) break;
      fired.push_back(wf);
    }
  }
  wake_roots(store, fired, hub);
  return fired;
}

}  // namespace colonies::triggers
