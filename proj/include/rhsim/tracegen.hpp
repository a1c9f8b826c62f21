#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "rhsim/config.hpp"
#include "rhsim/trace.hpp"

namespace rhsim {

enum class AttackKind { kDoubleSided, kManySided, kEpochStraddle, kRandom };
enum class BenignCategory { kL, kM, kH };

/// Maximal-rate double-sided attack: two aggressor rows flanking a victim in
/// each bank, alternated on every request and paced at the per-bank ACT
/// limit.
inline Trace gen_double_sided(const SimConfig& cfg, picos horizon,
                              std::uint32_t thread = 0,
                              std::uint32_t banks_used = 0) {
  const DramTimings& t = cfg.timings;
  if (banks_used == 0 || banks_used > t.banks_per_rank)
    banks_used = t.banks_per_rank;
  picos step = t.t_rc;
  Trace out;
  std::uint64_t base = t.rows_per_bank / 2;
  for (picos at = 0; at < horizon; at += step) {
    for (std::uint32_t b = 0; b < banks_used; ++b) {
      MemRequest r;
      r.ready_at = at;
      r.thread = thread;
      r.bank = b;
      r.row = base + ((at / step) % 2 == 0 ? 0 : 2);  // aggressors flank base+1
      r.seq = out.size();
      out.push_back(r);
    }
  }
  return out;
}

/// Round-robins n aggressor rows laid out consecutively in one bank.
inline Trace gen_many_sided(const SimConfig& cfg, std::uint32_t n, picos horizon,
                            std::uint32_t thread = 0, std::uint32_t bank = 0) {
  const DramTimings& t = cfg.timings;
  if (n < 1) throw ConfigError("many_sided needs n >= 1");
  if (n > 2 * cfg.bh.blast.blast_radius)
    throw ConfigError("many_sided n must be at most 2 * blast_radius");
  if (n + 2 > t.rows_per_bank) throw ConfigError("not enough rows for many_sided");
  std::uint64_t base = t.rows_per_bank / 2;
  Trace out;
  std::uint64_t i = 0;
  for (picos at = 0; at < horizon; at += t.t_rc, ++i) {
    MemRequest r;
    r.ready_at = at;
    r.thread = thread;
    r.bank = bank;
    r.row = base + (i % n);
    r.seq = out.size();
    out.push_back(r);
  }
  return out;
}

/// The worst case the time-interleaved clears admit: a burst just below the
/// blacklisting threshold at the end of one epoch, an idle epoch (so the
/// filter that saw the burst retires), a fresh full-speed burst right after
/// the next boundary, and sustained demand through the following epoch.
/// Two rows alternate so every request forces a fresh activation; the cycle
/// repeats every six epochs so the rows re-enter unblacklisted.
inline Trace gen_epoch_straddle(const SimConfig& cfg, picos horizon,
                                std::uint32_t thread = 0, std::uint32_t bank = 0) {
  const DramTimings& t = cfg.timings;
  const picos ep = cfg.derived.epoch_len;
  const std::uint64_t n_bl = cfg.bh.n_bl;
  std::uint64_t base = t.rows_per_bank / 2;
  Trace out;
  picos last_at = 0;
  std::uint64_t flip = 0;
  auto push = [&](picos at) {
    if (at >= horizon) return false;
    MemRequest r;
    r.ready_at = std::max(at, last_at);  // keep per-thread ordering
    last_at = r.ready_at;
    r.thread = thread;
    r.bank = bank;
    r.row = base + 2 * (flip++ % 2);
    r.seq = out.size();
    out.push_back(r);
    return true;
  };
  for (picos cycle = 0; cycle + 4 * ep <= horizon; cycle += 6 * ep) {
    // Sub-threshold burst (n_bl - 1 per row) finishing flush with the first
    // boundary.
    std::uint64_t burst1 = 2 * (n_bl - 1);
    picos b1 = cycle + ep - (burst1 + 1) * t.t_rc;
    for (std::uint64_t i = 0; i < burst1; ++i)
      if (!push(b1 + i * t.t_rc)) break;
    // Idle epoch, then a fresh burst plus demand through the next epoch.
    for (picos at = cycle + 2 * ep; at < cycle + 4 * ep; at += t.t_rc)
      if (!push(at)) break;
  }
  return out;
}

/// Seeded random adversarial trace: a few hot rows on one or two banks,
/// hammered in randomized bursts with random pauses. Demand always oversteps
/// the window bound, so an unmitigated run must trip the oracle.
inline Trace gen_random_adversarial(const SimConfig& cfg, picos horizon,
                                    std::uint64_t seed, std::uint32_t thread = 0) {
  const DramTimings& t = cfg.timings;
  std::mt19937_64 rng(seed);
  std::uint32_t n_banks = 1 + static_cast<std::uint32_t>(rng() % 2);
  // At least two rows per bank, so consecutive requests conflict instead of
  // coasting on the open row.
  std::uint32_t n_rows = 2 + static_cast<std::uint32_t>(rng() % 3);
  std::uint64_t base = rng() % (t.rows_per_bank - 8);
  Trace out;
  picos at = 0;
  // Request budget that exceeds the sliding-window bound per row even after
  // discounting the share lost to row-buffer hits.
  std::uint64_t need = (cfg.window_bound_floor() + 2) * n_rows * n_banks * 4;
  std::uint64_t i_req = 0;
  while (out.size() < need && at < horizon) {
    std::uint64_t burst = 8 + rng() % 64;
    for (std::uint64_t i = 0; i < burst && at < horizon; ++i) {
      MemRequest r;
      r.ready_at = at;
      r.thread = thread;
      r.bank = static_cast<std::uint32_t>(i_req % n_banks);
      r.row = base + (i_req / n_banks) % n_rows;  // round robin: all conflicts
      ++i_req;
      if (rng() % 8 == 0) r.row = base + rng() % n_rows;  // occasional repeat
      r.seq = out.size();
      out.push_back(r);
      at += t.t_rc + rng() % (2 * t.t_rc);
    }
    if ((rng() % 4) == 0) at += rng() % (t.t_faw * 32);
  }
  return out;
}

/// Single entry point over the attack generators. `n` is only meaningful for
/// the many-sided kind; `seed` only for the randomized one.
inline Trace gen_attack_trace(AttackKind kind, const SimConfig& cfg, picos horizon,
                              std::uint32_t n = 0, std::uint64_t seed = 0) {
  switch (kind) {
    case AttackKind::kDoubleSided: return gen_double_sided(cfg, horizon);
    case AttackKind::kManySided: return gen_many_sided(cfg, n, horizon);
    case AttackKind::kEpochStraddle: return gen_epoch_straddle(cfg, horizon);
    case AttackKind::kRandom: return gen_random_adversarial(cfg, horizon, seed);
  }
  throw ConfigError("unknown attack kind");
}

/// Per-row activation caps benign traffic honors within any refresh window,
/// scaled from the 64 ms measurement envelope (95th/99th/100th percentile
/// depending on category).
inline std::uint64_t benign_row_cap(BenignCategory cat, picos t_refw) {
  std::uint64_t cap64;
  switch (cat) {
    case BenignCategory::kL: cap64 = 78; break;
    case BenignCategory::kM: cap64 = 109; break;
    case BenignCategory::kH: cap64 = 314; break;
    default: cap64 = 78;
  }
  u128 scaled = static_cast<u128>(cap64) * t_refw / (64 * kPsPerMs);
  std::uint64_t cap = static_cast<std::uint64_t>(scaled);
  return cap < 1 ? 1 : cap;
}

/// Synthetic benign workload: per-thread arrivals with geometric hit runs and
/// a Zipf-like row popularity draw, capped so no row's activation count can
/// leave the benign envelope within any t_refw window. Deterministic in the
/// seed. `focus_bank`/`focus_prob` skew the bank choice toward one bank (for
/// contention studies); by default banks are uniform.
inline Trace gen_benign(const SimConfig& cfg, BenignCategory cat, picos horizon,
                        std::uint64_t seed, std::uint32_t first_thread = 0,
                        std::uint32_t num_threads = 0, std::uint32_t focus_bank = 0,
                        double focus_prob = 0.0) {
  const DramTimings& t = cfg.timings;
  if (num_threads == 0) num_threads = t.threads - first_thread;
  std::uint64_t cap = benign_row_cap(cat, t.t_refw);

  // Category knobs: mean inter-arrival (as a multiple of t_rc) and how long a
  // thread stays on the row it last touched (row-buffer hit runs).
  double ia_trc;
  double p_stay;
  std::uint32_t hot_rows_per_bank;
  switch (cat) {
    case BenignCategory::kL: ia_trc = 200.0; p_stay = 0.92; hot_rows_per_bank = 48; break;
    case BenignCategory::kM: ia_trc = 18.0; p_stay = 0.90; hot_rows_per_bank = 64; break;
    case BenignCategory::kH: ia_trc = 7.0;  p_stay = 0.70; hot_rows_per_bank = 96; break;
    default: ia_trc = 200.0; p_stay = 0.92; hot_rows_per_bank = 48;
  }
  hot_rows_per_bank = static_cast<std::uint32_t>(
      std::min<std::uint64_t>(hot_rows_per_bank, t.rows_per_bank));

  std::vector<Trace> parts;
  for (std::uint32_t th = 0; th < num_threads; ++th) {
    std::mt19937_64 rng(seed * 0x100000001b3ULL + th + 1);
    std::exponential_distribution<double> gap(1.0 / (ia_trc * t.t_rc));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    // Zipf-ish popularity over the thread's working set via inverse-power
    // transform of a uniform draw.
    auto draw_row = [&](std::uint32_t bank) -> std::uint64_t {
      double u = uni(rng);
      double z = std::pow(u, 2.0);  // density ~ rank^-0.5 flavor
      std::uint64_t slot = static_cast<std::uint64_t>(z * hot_rows_per_bank);
      if (slot >= hot_rows_per_bank) slot = hot_rows_per_bank - 1;
      // Spread each thread's working set to its own region of the bank.
      std::uint64_t region =
          (static_cast<std::uint64_t>(th) * 131 + bank * 17) % (t.rows_per_bank - hot_rows_per_bank + 1);
      return region + slot;
    };

    // Sliding per-row reference budget within t_refw. Every emitted request
    // is charged; references upper-bound activations, so the envelope holds
    // regardless of how many turn into row-buffer hits.
    std::unordered_map<std::uint64_t, std::deque<picos>> row_times;
    auto row_allows = [&](std::uint32_t bank, std::uint64_t row, picos at) {
      auto& dq = row_times[(static_cast<std::uint64_t>(bank) << 40) | row];
      while (!dq.empty() && at - dq.front() >= t.t_refw) dq.pop_front();
      if (dq.size() >= cap) return false;
      dq.push_back(at);
      return true;
    };

    auto draw_bank = [&]() -> std::uint32_t {
      if (focus_prob > 0.0 && uni(rng) < focus_prob) return focus_bank;
      return static_cast<std::uint32_t>(rng() % t.banks_per_rank);
    };

    Trace part;
    picos at = 0;
    std::uint32_t bank = draw_bank();
    std::uint64_t row = draw_row(bank);
    auto emit = [&](std::uint32_t b, std::uint64_t r_, picos when) {
      MemRequest r;
      r.ready_at = when;
      r.thread = first_thread + th;
      r.bank = b;
      r.row = r_;
      part.push_back(r);
    };
    while (true) {
      at += static_cast<picos>(gap(rng)) + 1;
      if (at >= horizon) break;

      // Occasionally cycle between two buffers at a microsecond-scale period
      // (strided copy flavor); each buffer row stays well inside its budget.
      if (uni(rng) < 0.15) {
        std::uint32_t pb = draw_bank();
        std::uint64_t r1 = draw_row(pb);
        std::uint64_t r2 = draw_row(pb);
        if (r1 != r2) {
          picos half_period = 2 * kPsPerUs +
                              static_cast<picos>(uni(rng) * 13.0 * kPsPerUs);
          std::uint32_t rounds =
              2 + static_cast<std::uint32_t>(rng() % std::min<std::uint64_t>(cap, 4));
          for (std::uint32_t k = 0; k < 2 * rounds && at < horizon; ++k) {
            std::uint64_t pr = (k % 2 == 0) ? r1 : r2;
            if (row_allows(pb, pr, at)) emit(pb, pr, at);
            at += half_period;
          }
          bank = pb;
          row = r2;
        }
        continue;
      }

      bool emitted = false;
      if (uni(rng) < p_stay && row_allows(bank, row, at)) {
        emitted = true;
      } else {
        for (int tries = 0; tries < 8; ++tries) {
          std::uint32_t nb = draw_bank();
          std::uint64_t nr = draw_row(nb);
          if (row_allows(nb, nr, at)) {
            bank = nb;
            row = nr;
            emitted = true;
            break;
          }
        }
      }
      if (!emitted) continue;  // envelope saturated, drop the reference
      emit(bank, row, at);
    }
    parts.push_back(std::move(part));
  }
  return merge_traces(std::move(parts));
}

/// One attack thread plus streaming benign threads, all contending on bank 0.
/// The attack is the timing-limited double-sided pair. Each benign thread
/// scans its own residue class of the bank's rows round-robin, paced so that
/// no row sees more than its envelope budget per refresh window; combined
/// benign demand sits just under the bank's activation capacity, so the share
/// the attack consumes is directly visible in benign serving.
inline Trace gen_mixed(const SimConfig& cfg, picos horizon, std::uint64_t seed,
                       BenignCategory cat = BenignCategory::kH) {
  const DramTimings& t = cfg.timings;
  std::vector<Trace> parts;

  Trace attack;
  std::uint64_t base = t.rows_per_bank / 2;
  for (picos at = 0; at < horizon; at += t.t_rc) {
    MemRequest r;
    r.ready_at = at;
    r.thread = 0;
    r.bank = 0;
    r.row = base + ((at / t.t_rc) % 2 == 0 ? 0 : 2);
    attack.push_back(r);
  }
  parts.push_back(std::move(attack));

  // Scan pace per thread: slow enough that a full sweep of the thread's row
  // class keeps every row within its per-window budget.
  const std::uint32_t scanners = t.threads - 1;
  const std::uint64_t cap = benign_row_cap(cat, t.t_refw);
  std::uint64_t rows_per_class = t.rows_per_bank / scanners;
  // Revisit period rows_per_class * pace must exceed t_refw / cap so a row
  // sees at most cap activations in any window.
  picos pace = t.t_rc;
  while (static_cast<u128>(rows_per_class) * pace * cap <= t.t_refw)
    pace += t.t_rc / 4;
  std::mt19937_64 jitter_rng(seed);
  for (std::uint32_t th = 1; th <= scanners; ++th) {
    Trace scan;
    picos at = jitter_rng() % pace;
    std::uint64_t i = 0;
    while (at < horizon) {
      std::uint64_t row = (th - 1) + scanners * (i % rows_per_class);
      // keep clear of the aggressor pair and its victims
      if (row + 8 < base || row > base + 8) {
        MemRequest r;
        r.ready_at = at;
        r.thread = th;
        r.bank = 0;
        r.row = row;
        scan.push_back(r);
      }
      ++i;
      at += pace;
    }
    parts.push_back(std::move(scan));
  }
  return merge_traces(std::move(parts));
}

}  // namespace rhsim
