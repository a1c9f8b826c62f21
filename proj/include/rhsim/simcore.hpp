#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <unordered_map>
#include <vector>

#include "rhsim/config.hpp"
#include "rhsim/mitigations.hpp"
#include "rhsim/oracle.hpp"
#include "rhsim/trace.hpp"

namespace rhsim {

inline constexpr picos kNever = std::numeric_limits<picos>::max();

struct BankState {
  std::optional<std::uint64_t> open_row;
  picos last_act = 0;
  bool ever_activated = false;
  picos busy_until = 0;
};

/// Rolling four-activation window per rank.
class FawWindow {
 public:
  explicit FawWindow(picos t_faw) : t_faw_(t_faw) { ring_.fill(0); }
  bool ok(picos now) const { return count_ < 4 || ring_[idx_] + t_faw_ <= now; }
  picos next_ok() const { return count_ < 4 ? 0 : ring_[idx_] + t_faw_; }
  void push(picos now) {
    ring_[idx_] = now;
    idx_ = (idx_ + 1) % 4;
    if (count_ < 4) ++count_;
  }

 private:
  picos t_faw_;
  std::array<picos, 4> ring_;
  std::size_t idx_ = 0;
  std::uint32_t count_ = 0;
};

enum class CommandKind : std::uint8_t { kActivate, kColumnHit, kRefresh };

struct Command {
  picos at = 0;
  CommandKind kind = CommandKind::kActivate;
  std::uint32_t thread = 0;
  std::uint32_t bank = 0;
  std::uint64_t row = 0;
};

struct BlockedDelay {
  picos delay = 0;
  bool false_positive = false;
};

struct ThreadStats {
  std::uint64_t served = 0;
  std::uint64_t unserved = 0;
  std::uint64_t latency_sum = 0;
  picos latency_max = 0;
  picos first_ready = kNever;
  picos last_completion = 0;
};

struct SimMetrics {
  std::vector<ThreadStats> threads;
  std::uint64_t served_total = 0;
  std::uint64_t unserved_total = 0;
  std::uint64_t acts = 0;
  std::uint64_t refreshes = 0;
  std::uint64_t rb_hits = 0;
  std::uint64_t rb_misses = 0;
  std::uint64_t rb_conflicts = 0;

  std::vector<BlockedDelay> blocked_delays;
  std::uint64_t fp_count = 0;       // blocked ACTs whose exact lifetime count < n_bl
  double fp_rate = 0.0;             // fp_count / acts

  std::uint64_t oracle_max_window = 0;
  std::uint64_t oracle_rows_tracked = 0;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> oracle_per_row;  // key -> max
  bool bound_exceeded = false;     // raw fact: some row beat the window bound
  bool safety_violation = false;   // bound_exceeded under a safety-claiming mechanism
  std::uint64_t window_bound = 0;

  std::uint64_t weighted_max = 0;   // many-sided oracle, units of 1/weighted_scale
  std::uint64_t weighted_scale = 1;
  bool weighted_overdrive = false;

  std::uint64_t para_max_exposure = 0;
  bool para_failure = false;

  std::vector<std::vector<double>> rhli_epochs;  // per epoch: thread*banks matrix
  std::uint32_t rhli_banks = 0;

  std::uint64_t command_hash = 0xcbf29ce484222325ULL;  // FNV-1a over the command stream
  std::vector<Command> commands;                       // only when recording

  picos end_time = 0;

  picos delay_percentile(double q) const {
    if (blocked_delays.empty()) return 0;
    std::vector<picos> d;
    d.reserve(blocked_delays.size());
    for (const auto& b : blocked_delays) d.push_back(b.delay);
    std::sort(d.begin(), d.end());
    std::size_t i = static_cast<std::size_t>(q * (d.size() - 1) + 0.5);
    return d[std::min(i, d.size() - 1)];
  }
  picos delay_max() const {
    picos m = 0;
    for (const auto& b : blocked_delays) m = std::max(m, b.delay);
    return m;
  }
};

struct RunOptions {
  std::optional<picos> horizon;
  bool record_commands = false;
  // Closed-loop replay: a thread's next request becomes eligible no earlier
  // than its previous request's completion (trace gaps act as think time).
  bool closed_loop = false;
  // Per-thread outstanding-request windows; empty means unlimited. A single
  // entry applies to every thread.
  std::vector<std::uint32_t> thread_windows;

  std::uint32_t window_for(std::uint32_t thread) const {
    if (thread_windows.empty()) return std::numeric_limits<std::uint32_t>::max();
    if (thread_windows.size() == 1) return thread_windows[0];
    return thread < thread_windows.size()
               ? thread_windows[thread]
               : std::numeric_limits<std::uint32_t>::max();
  }
};

/// Trace-driven, event-ordered controller simulation. Single rank; per-bank
/// t_RC, rank t_FAW, open-row policy with FR-FCFS-style arbitration (hits
/// first, then oldest; unsafe ACT candidates are skipped, not stalled
/// behind). Deterministic for a fixed (trace, config, mechanism state).
class Simulator {
 public:
  Simulator(const SimConfig& cfg, const Trace& trace, Mechanism& mech)
      : cfg_(cfg),
        mech_(mech),
        banks_(cfg.timings.banks_per_rank),
        faw_(cfg.timings.t_faw),
        oracle_(cfg.timings.t_refw),
        col_service_(cfg.timings.t_rc / 4),
        epoch_len_(cfg.derived.epoch_len),
        next_epoch_snapshot_(cfg.derived.epoch_len) {
    validate_trace(trace, cfg.timings);
    per_thread_.resize(cfg.timings.threads);
    next_idx_.assign(cfg.timings.threads, 0);
    for (const MemRequest& r : trace) per_thread_[r.thread].push_back(r);
    inflight_.assign(static_cast<std::size_t>(cfg.timings.threads) *
                         cfg.timings.banks_per_rank,
                     0);
    shadow_.resize(cfg.timings.banks_per_rank);
    if (cfg.bh.blast.blast_radius > 1) {
      blast_oracle_.emplace(cfg.bh.blast, cfg.timings.t_refw,
                            cfg.timings.rows_per_bank);
    }
    if (mech.kind() == MechanismKind::kPara) {
      para_oracle_.emplace(cfg.derived.n_rh_star, cfg.timings.rows_per_bank,
                           cfg.timings.t_refw);
    }
  }

  SimMetrics run(const RunOptions& opts) {
    SimMetrics m;
    m.threads.resize(per_thread_.size());
    m.rhli_banks = cfg_.timings.banks_per_rank;
    m.window_bound = cfg_.window_bound_floor();
    for (std::size_t t = 0; t < per_thread_.size(); ++t) {
      if (!per_thread_[t].empty())
        m.threads[t].first_ready = per_thread_[t].front().ready_at;
    }

    opts_ = opts;
    outstanding_.assign(per_thread_.size(), 0);
    thread_free_at_.assign(per_thread_.size(), 0);

    picos now = 0;
    const picos horizon = opts.horizon.value_or(kNever);
    while (true) {
      advance_epochs(now, m);
      pop_completions(now, m);
      admit(now);

      picos wake = kNever;
      while (issue_one(now, m, opts, wake)) {
        wake = kNever;
      }

      bool drained = queue_.empty() && completions_.empty() && all_admitted() &&
                     pending_refreshes_.empty();
      if (drained) break;

      // Wake on whichever state change comes first. A head request that is
      // ready but quota- or window-blocked unblocks via a completion or an
      // epoch clear, never by time alone.
      for (std::size_t t = 0; t < per_thread_.size(); ++t) {
        if (next_idx_[t] < per_thread_[t].size()) {
          picos ready = effective_ready(static_cast<std::uint32_t>(t),
                                        per_thread_[t][next_idx_[t]]);
          if (ready > now) wake = std::min(wake, ready);
        }
      }
      if (!completions_.empty())
        wake = std::min(wake, std::max(completions_.top().at, now + 1));
      picos mech_ev = mech_.next_event_after(now);
      if (mech_ev != 0) wake = std::min(wake, mech_ev);
      if (next_epoch_snapshot_ > now) wake = std::min(wake, next_epoch_snapshot_);
      if (wake == kNever) {
        // Queue is non-empty but nothing can ever issue: broken invariant.
        throw std::logic_error("simulator stalled with pending requests");
      }
      if (wake > horizon) {
        now = horizon;
        break;
      }
      now = wake;
    }

    finalize(now, m);
    return m;
  }

 private:
  struct Queued {
    MemRequest req;
    bool ever_blocked = false;
    bool fp_latched = false;
    picos blocked_since = 0;
    picos release_at = 0;  // latest mechanism release hint while blocked
  };

  struct Completion {
    picos at;
    std::uint64_t order;
    std::uint32_t thread;
    std::uint32_t bank;
    bool operator>(const Completion& o) const {
      return at != o.at ? at > o.at : order > o.order;
    }
  };

  std::size_t slot(std::uint32_t thread, std::uint32_t bank) const {
    return static_cast<std::size_t>(thread) * cfg_.timings.banks_per_rank + bank;
  }

  bool all_admitted() const {
    for (std::size_t t = 0; t < per_thread_.size(); ++t)
      if (next_idx_[t] < per_thread_[t].size()) return false;
    return true;
  }

  void advance_epochs(picos now, SimMetrics& m) {
    // Snapshot RHLI just before each boundary the mechanism is about to
    // process, then let it clear. The shadow maps mirror the D-CBF swap.
    while (next_epoch_snapshot_ <= now) {
      auto rhli = mech_.rhli_matrix();
      if (!rhli.empty()) m.rhli_epochs.push_back(std::move(rhli));
      mech_.on_time_advance(next_epoch_snapshot_);
      for (auto& bank_shadow : shadow_) {
        bank_shadow.counts[bank_shadow.active].clear();
        bank_shadow.active ^= 1;
      }
      next_epoch_snapshot_ += epoch_len_;
    }
    mech_.on_time_advance(now);
  }

  void pop_completions(picos now, SimMetrics& m) {
    while (!completions_.empty() && completions_.top().at <= now) {
      const Completion c = completions_.top();
      completions_.pop();
      --inflight_[slot(c.thread, c.bank)];
      --outstanding_[c.thread];
      thread_free_at_[c.thread] = std::max(thread_free_at_[c.thread], c.at);
      m.threads[c.thread].last_completion =
          std::max(m.threads[c.thread].last_completion, c.at);
    }
  }

  picos effective_ready(std::uint32_t thread, const MemRequest& r) const {
    if (!opts_.closed_loop) return r.ready_at;
    return std::max(r.ready_at, thread_free_at_[thread]);
  }

  void admit(picos now) {
    for (std::size_t t = 0; t < per_thread_.size(); ++t) {
      while (next_idx_[t] < per_thread_[t].size()) {
        const MemRequest& r = per_thread_[t][next_idx_[t]];
        if (effective_ready(static_cast<std::uint32_t>(t), r) > now) break;
        if (outstanding_[t] >= opts_.window_for(static_cast<std::uint32_t>(t)))
          break;
        if (inflight_[slot(r.thread, r.bank)] >=
            mech_.admission_quota(r.thread, r.bank))
          break;
        ++inflight_[slot(r.thread, r.bank)];
        ++outstanding_[t];
        queue_.push_back(Queued{r});
        ++next_idx_[t];
      }
    }
  }

  void record_command(SimMetrics& m, const RunOptions& opts, picos at,
                      CommandKind kind, std::uint32_t thread, std::uint32_t bank,
                      std::uint64_t row) {
    auto fnv = [&m](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        m.command_hash ^= (v >> (8 * i)) & 0xff;
        m.command_hash *= 0x100000001b3ULL;
      }
    };
    fnv(at);
    fnv(static_cast<std::uint64_t>(kind));
    fnv(bank);
    fnv(row);
    if (opts.record_commands)
      m.commands.push_back(Command{at, kind, thread, bank, row});
  }

  void note_activation(SimMetrics& m, std::uint32_t bank, std::uint64_t row,
                       picos now) {
    ++m.acts;
    oracle_.record(RowBlocker::row_key(bank, row), now);
    if (blast_oracle_) blast_oracle_->record_act(bank, row, now);
    if (para_oracle_) para_oracle_->record_act(bank, row, now);
    auto& sh = shadow_[bank];
    ++sh.counts[0][row];
    ++sh.counts[1][row];
  }

  std::uint64_t shadow_active_count(std::uint32_t bank, std::uint64_t row) const {
    const auto& sh = shadow_[bank];
    auto it = sh.counts[sh.active].find(row);
    return it == sh.counts[sh.active].end() ? 0 : it->second;
  }

  /// A refresh is an activation of the neighbor row: it occupies the bank for
  /// t_rc, counts toward the four-activation window, and its own row close is
  /// eligible for the next coin flip, so the refreshed row's outer neighbors
  /// stay protected too. Chained coins queue behind the bank timing.
  void issue_refresh_command(const RefreshCommand& rc, picos now, SimMetrics& m,
                             const RunOptions& opts) {
    BankState& bank = banks_[rc.bank];
    bank.open_row.reset();
    bank.last_act = now;
    bank.ever_activated = true;
    bank.busy_until = now + cfg_.timings.t_rc;
    faw_.push(now);
    ++m.refreshes;
    oracle_.record(RowBlocker::row_key(rc.bank, rc.row), now);
    if (blast_oracle_) blast_oracle_->record_act(rc.bank, rc.row, now);
    if (para_oracle_) para_oracle_->record_refresh(rc.bank, rc.row, now);
    record_command(m, opts, now, CommandKind::kRefresh, 0, rc.bank, rc.row);
    if (auto next = mech_.on_row_close(rc.bank, rc.row, now))
      pending_refreshes_.push_back(*next);
  }

  /// Issues the oldest pending chained refresh if its bank and the rank
  /// timing allow.
  bool issue_refresh(picos now, SimMetrics& m, const RunOptions& opts, picos& wake) {
    if (pending_refreshes_.empty()) return false;
    const RefreshCommand rc = pending_refreshes_.front();
    BankState& bank = banks_[rc.bank];
    if (bank.busy_until > now) {
      wake = std::min(wake, bank.busy_until);
      return false;
    }
    if (bank.ever_activated && bank.last_act + cfg_.timings.t_rc > now) {
      wake = std::min(wake, bank.last_act + cfg_.timings.t_rc);
      return false;
    }
    if (!faw_.ok(now)) {
      wake = std::min(wake, faw_.next_ok());
      return false;
    }
    pending_refreshes_.pop_front();
    issue_refresh_command(rc, now, m, opts);
    return true;
  }

  /// Issues at most one command at `now`. Returns true if something issued;
  /// otherwise leaves the earliest wake hint in `wake`.
  bool issue_one(picos now, SimMetrics& m, const RunOptions& opts, picos& wake) {
    if (issue_refresh(now, m, opts, wake)) return true;
    std::size_t best_hit = queue_.size();
    std::size_t best_act = queue_.size();
    bool best_act_blacklisted = false;

    for (std::size_t i = 0; i < queue_.size(); ++i) {
      Queued& q = queue_[i];
      BankState& bank = banks_[q.req.bank];
      if (bank.busy_until > now) {
        wake = std::min(wake, bank.busy_until);
        continue;
      }
      if (bank.open_row && *bank.open_row == q.req.row) {
        if (best_hit == queue_.size() || q.req.seq < queue_[best_hit].req.seq)
          best_hit = i;
        continue;
      }
      // Needs an activation.
      if (bank.ever_activated && bank.last_act + cfg_.timings.t_rc > now) {
        wake = std::min(wake, bank.last_act + cfg_.timings.t_rc);
        continue;
      }
      if (!faw_.ok(now)) {
        wake = std::min(wake, faw_.next_ok());
        continue;
      }
      ActDecision d = mech_.act_check(q.req.bank, q.req.row, now);
      if (!d.safe) {
        if (!q.ever_blocked) {
          q.ever_blocked = true;
          q.blocked_since = now;
          q.fp_latched = shadow_active_count(q.req.bank, q.req.row) < cfg_.bh.n_bl;
        }
        q.release_at = std::max(q.release_at, d.retry_at);
        if (d.retry_at > now) wake = std::min(wake, d.retry_at);
        picos mech_ev = mech_.next_event_after(now);
        if (mech_ev != 0) wake = std::min(wake, mech_ev);
        continue;
      }
      if (best_act == queue_.size() || q.req.seq < queue_[best_act].req.seq) {
        best_act = i;
        best_act_blacklisted = d.blacklisted;
      }
    }

    if (best_hit != queue_.size()) {
      serve_hit(best_hit, now, m, opts);
      return true;
    }
    if (best_act != queue_.size()) {
      return serve_act(best_act, best_act_blacklisted, now, m, opts);
    }
    return false;
  }

  void serve_hit(std::size_t i, picos now, SimMetrics& m, const RunOptions& opts) {
    Queued q = queue_[i];
    queue_.erase(queue_.begin() + i);
    BankState& bank = banks_[q.req.bank];
    bank.busy_until = now + col_service_;
    ++m.rb_hits;
    record_command(m, opts, now, CommandKind::kColumnHit, q.req.thread, q.req.bank,
                   q.req.row);
    complete(q, now + col_service_, m);
  }

  /// Serves the selected activation candidate, or a reactive refresh if the
  /// mechanism injects one on the row close. Returns true if any command was
  /// issued.
  bool serve_act(std::size_t i, bool blacklisted, picos now, SimMetrics& m,
                 const RunOptions& opts) {
    Queued& q = queue_[i];
    BankState& bank = banks_[q.req.bank];

    bool conflict = bank.open_row.has_value();
    if (conflict) {
      auto refresh = mech_.on_row_close(q.req.bank, *bank.open_row, now);
      bank.open_row.reset();  // the close itself happens either way
      if (refresh) {
        issue_refresh_command(*refresh, now, m, opts);
        return true;  // the demand request re-arbitrates behind the refresh
      }
    }

    if (conflict) ++m.rb_conflicts; else ++m.rb_misses;
    bank.open_row = q.req.row;
    bank.last_act = now;
    bank.ever_activated = true;
    bank.busy_until = now + cfg_.timings.t_rc;
    faw_.push(now);
    note_activation(m, q.req.bank, q.req.row, now);
    mech_.on_act_issued(q.req.thread, q.req.bank, q.req.row, now, blacklisted);
    record_command(m, opts, now, CommandKind::kActivate, q.req.thread, q.req.bank,
                   q.req.row);
    if (q.ever_blocked) {
      // Mechanism-attributable delay: from the first unsafe verdict until the
      // mechanism released the row (history expiry or an epoch clear), not
      // counting arbitration slack after the release.
      picos released = std::max(q.blocked_since, std::min(now, q.release_at));
      m.blocked_delays.push_back(BlockedDelay{released - q.blocked_since, q.fp_latched});
      if (q.fp_latched) ++m.fp_count;
    }
    Queued done = q;
    queue_.erase(queue_.begin() + i);
    complete(done, now + cfg_.timings.t_rc, m);
    return true;
  }

  void complete(const Queued& q, picos at, SimMetrics& m) {
    ThreadStats& ts = m.threads[q.req.thread];
    ++ts.served;
    picos lat = at - q.req.ready_at;
    ts.latency_sum += lat;
    ts.latency_max = std::max(ts.latency_max, lat);
    completions_.push(Completion{at, completion_order_++, q.req.thread, q.req.bank});
  }

  void finalize(picos now, SimMetrics& m) {
    m.end_time = now;
    for (std::size_t t = 0; t < per_thread_.size(); ++t) {
      m.threads[t].unserved +=
          per_thread_[t].size() - next_idx_[t];
      m.unserved_total += per_thread_[t].size() - next_idx_[t];
    }
    for (const Queued& q : queue_) {
      ++m.threads[q.req.thread].unserved;
      ++m.unserved_total;
    }
    for (const ThreadStats& ts : m.threads) m.served_total += ts.served;

    m.oracle_max_window = oracle_.max_over_all_keys();
    m.oracle_rows_tracked = oracle_.keys_tracked();
    m.oracle_per_row = oracle_.per_key_max();
    m.fp_rate = m.acts == 0 ? 0.0
                            : static_cast<double>(m.fp_count) /
                                  static_cast<double>(m.acts);
    if (blast_oracle_) {
      m.weighted_max = blast_oracle_->max_weighted();
      m.weighted_scale = blast_oracle_->scale();
      m.weighted_overdrive = blast_oracle_->overdrives(cfg_.bh.n_rh);
    }
    if (para_oracle_) {
      m.para_max_exposure = para_oracle_->max_exposure();
      m.para_failure = para_oracle_->any_failure();
    }
    auto final_rhli = mech_.rhli_matrix();
    if (!final_rhli.empty()) m.rhli_epochs.push_back(std::move(final_rhli));
    m.bound_exceeded = cfg_.exceeds_window_bound(m.oracle_max_window);
    if (mech_.claims_safety() && m.bound_exceeded) m.safety_violation = true;
  }

  SimConfig cfg_;
  Mechanism& mech_;
  std::vector<BankState> banks_;
  FawWindow faw_;
  SlidingWindowOracle oracle_;
  std::optional<WeightedBlastOracle> blast_oracle_;
  std::optional<ParaExposureOracle> para_oracle_;
  picos col_service_;   // column access occupancy; row-cycle cost is folded into t_rc
  picos epoch_len_;
  picos next_epoch_snapshot_;

  RunOptions opts_;
  std::vector<std::vector<MemRequest>> per_thread_;
  std::vector<std::size_t> next_idx_;
  std::vector<Queued> queue_;
  std::vector<std::uint32_t> inflight_;
  std::vector<std::uint32_t> outstanding_;  // per thread, all banks
  std::vector<picos> thread_free_at_;       // last completion per thread
  std::priority_queue<Completion, std::vector<Completion>, std::greater<>> completions_;
  std::uint64_t completion_order_ = 0;
  std::deque<RefreshCommand> pending_refreshes_;

  struct BankShadow {
    std::array<std::unordered_map<std::uint64_t, std::uint64_t>, 2> counts;
    int active = 0;
  };
  std::vector<BankShadow> shadow_;
};

inline SimMetrics run(const SimConfig& cfg, const Trace& trace, Mechanism& mech,
                      const RunOptions& opts = {}) {
  Simulator sim(cfg, trace, mech);
  return sim.run(opts);
}

}  // namespace rhsim
