#include "colonies/cluster/duties.hpp"

#include <spdlog/spdlog.h>

#include "colonies/triggers/triggers.hpp"

namespace colonies::cluster {

LeaderDuties::LeaderDuties(store::Store& store, const Clock& clock, IdSource& ids,
                           api::Leadership& leadership, assign::WakeupHub* hub)
    : store_(store), clock_(clock), ids_(ids), leadership_(leadership), hub_(hub) {}

DutyReport LeaderDuties::run_once() {
  DutyReport report;
  try {
    if (!leadership_.is_leader()) {
      fenced_ = -1;
      store_.read([](store::Tx& tx) { tx.fenced_term(); });
      leadership_.store_health(true);
      return report;
    }
    std::int64_t term = leadership_.term();
    if (fenced_ != term) {
      // Claim the term at the store before doing anything else, so that a
      // deposed leader's late claims are rejected.
      store_.write([&](store::Tx& tx) { tx.fence(term); });
      fenced_ = term;
    }
    Nanos now = clock_.now();
    report.ran = true;
    report.reaped = lifecycle::reap_once(store_, now, term, hub_);
    report.cron_workflows = triggers::cron_scan(store_, now, term, ids_, hub_);
    report.generator_workflows = triggers::generator_scan(store_, now, term, ids_, hub_);
    leadership_.store_health(true);
  } catch (const store::StaleTermError& e) {
    spdlog::warn("leader term fenced by the store: {}", e.what());
    fenced_ = -1;
    leadership_.stale_term(e.highest());
  } catch (const Error& e) {
    if (e.code() != Errc::kStorageFailure) throw;
    spdlog::warn("store unreachable: {}", e.what());
    fenced_ = -1;
    leadership_.store_health(false);
  }
  return report;
}

}  // namespace colonies::cluster
