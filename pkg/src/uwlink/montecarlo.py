"""Monte-Carlo harness: chunked, counter-seeded simulation of the underwater
and relayed links, empirical metric estimation with confidence intervals,
and analytic-vs-empirical comparison reports.

Reproducibility contract: substreams are derived per fixed-size chunk from a
Philox counter generator, and chunk partials merge in chunk order, so results
are bitwise identical for a given (seed, trials) regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import mixed_link as ml
from . import turbulence as tb
from .cascade import UwocStack, sample_combined, snr_cdf_grid
from .metrics import (DetectionKind, IMDD, ModulationScheme, OOK,
                      conditional_ber)

__all__ = [
    "SimPlan", "ComparisonReport", "UwocSimResult", "MixedSimResult",
    "simulate_uwoc", "simulate_mixed", "sample_uwoc_h2", "compare",
    "substream", "REQUIRED_ANALYTIC_OPS", "registered_comparisons",
]

_CHUNK = 1_000_000


@dataclass(frozen=True)
class SimPlan:
    """Trial count, seed, worker count, and reporting grid (dB)."""

    trials: int = 10_000_000
    seed: int = 20260809
    workers: int = 1
    histogram_bins: int = 200
    snr_grid: tuple[float, ...] = ()

    def __post_init__(self):
        if self.trials < 10_000:
            raise ValueError("plans below 1e4 trials are not meaningful")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.histogram_bins < 2:
            raise ValueError("histogram_bins must be >= 2")
        grid = tuple(float(g) for g in self.snr_grid)
        if list(grid) != sorted(grid):
            raise ValueError("snr_grid must be sorted")
        object.__setattr__(self, "snr_grid", grid)


def substream(seed: int, chunk_index: int) -> np.random.Generator:
    """Independent counter-based stream for one chunk."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(chunk_index,))
    return np.random.Generator(np.random.Philox(ss))


def _chunk_sizes(trials: int) -> list[int]:
    full, rem = divmod(trials, _CHUNK)
    return [_CHUNK] * full + ([rem] if rem else [])


def _run_chunks(worker_fn, n_chunks: int, workers: int) -> list:
    if workers <= 1:
        return [worker_fn(i) for i in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker_fn, range(n_chunks)))


@dataclass(frozen=True)
class UwocSimResult:
    grid_db: tuple[float, ...]
    trials: int
    outage: np.ndarray
    outage_lo: np.ndarray
    outage_hi: np.ndarray
    ber: np.ndarray
    ber_lo: np.ndarray
    ber_hi: np.ndarray
    capacity: np.ndarray
    capacity_lo: np.ndarray
    capacity_hi: np.ndarray


def _mean_ci(total: np.ndarray, total_sq: np.ndarray, n: int):
    mean = total / n
    var = np.maximum(total_sq / n - mean ** 2, 0.0)
    half = 1.96 * np.sqrt(var / n)
    return mean, mean - half, mean + half


def _prop_ci(count: np.ndarray, n: int):
    p = count / n
    half = 1.96 * np.sqrt(np.maximum(p * (1.0 - p), 0.0) / n)
    return p, np.maximum(p - half, 0.0), np.minimum(p + half, 1.0)


def simulate_uwoc(stack: UwocStack, gamma_bar_grid_db, plan: SimPlan,
                  gamma_th: float = 1.0, mod: ModulationScheme = OOK,
                  det: DetectionKind = IMDD) -> UwocSimResult:
    """Empirical outage / average BER / capacity over an average-SNR grid.

    One channel draw serves every grid point: gamma = gamma_bar * h^2.
    """
    grid_db = tuple(float(g) for g in gamma_bar_grid_db)
    gbar = 10.0 ** (np.asarray(grid_db) / 10.0)
    sizes = _chunk_sizes(plan.trials)
    kappa = det.kappa

    def one_chunk(i: int):
        rng = substream(plan.seed, i)
        h2 = np.asarray(sample_combined(stack, rng, sizes[i])) ** 2
        out = np.empty(len(gbar))
        ber = np.empty(len(gbar))
        ber2 = np.empty(len(gbar))
        cap = np.empty(len(gbar))
        cap2 = np.empty(len(gbar))
        for j, g in enumerate(gbar):
            gam = g * h2
            out[j] = np.count_nonzero(gam < gamma_th)
            k = conditional_ber(mod, gam)
            ber[j] = k.sum()
            ber2[j] = (k * k).sum()
            c = np.log2(1.0 + kappa * gam)
            cap[j] = c.sum()
            cap2[j] = (c * c).sum()
        return out, ber, ber2, cap, cap2

    parts = _run_chunks(one_chunk, len(sizes), plan.workers)
    tot = [np.sum([p[k] for p in parts], axis=0) for k in range(5)]
    n = plan.trials
    o, o_lo, o_hi = _prop_ci(tot[0], n)
    b, b_lo, b_hi = _mean_ci(tot[1], tot[2], n)
    c, c_lo, c_hi = _mean_ci(tot[3], tot[4], n)
    return UwocSimResult(grid_db, n, o, o_lo, o_hi, b, b_lo, b_hi,
                         c, c_lo, c_hi)


def sample_mixed_snr(cfg_link: ml.MixedLinkConfig, gamma_bar_pair,
                     plan: SimPlan) -> np.ndarray:
    """Sorted end-to-end SNR draws of the relayed link at one sweep point."""
    gt, gu = float(gamma_bar_pair[0]), float(gamma_bar_pair[1])
    sizes = _chunk_sizes(plan.trials)
    p = cfg_link.towc
    C = cfg_link.C

    def one_chunk(i: int):
        rng = substream(plan.seed, i)
        n = sizes[i]
        h_t = (tb.sample_fog_gain(p.k_fog, p.z_fog, rng, n)
               * tb.sample_malaga(p, rng, n)
               * tb.sample_pointing(tb.PointingError(p.rho2, p.A0), rng, n))
        gam_t = gt * h_t ** 2
        gam_u = gu * np.asarray(sample_combined(cfg_link.stack, rng, n)) ** 2
        return gam_t * gam_u / (gam_u + C)

    parts = _run_chunks(one_chunk, len(sizes), plan.workers)
    return np.sort(np.concatenate(parts))


def sample_uwoc_h2(stack: UwocStack, plan: SimPlan) -> np.ndarray:
    """Sorted draws of h^2 = (h_p * prod h_i)^2 for distribution-level tests."""
    sizes = _chunk_sizes(plan.trials)

    def one_chunk(i: int):
        rng = substream(plan.seed, i)
        return np.asarray(sample_combined(stack, rng, sizes[i])) ** 2

    parts = _run_chunks(one_chunk, len(sizes), plan.workers)
    return np.sort(np.concatenate(parts))


@dataclass(frozen=True)
class MixedSimResult:
    grid: tuple
    trials: int
    outage: np.ndarray
    outage_lo: np.ndarray
    outage_hi: np.ndarray
    ber: np.ndarray
    ber_lo: np.ndarray
    ber_hi: np.ndarray


def simulate_mixed(cfg_link: ml.MixedLinkConfig, gamma_bar_pairs,
                   plan: SimPlan, gamma_th: float = 1.0,
                   mod: ModulationScheme = OOK) -> MixedSimResult:
    """Empirical outage and BER of the relayed link for a list of
    (towc_gamma_bar, uwoc_gamma_bar) sweep points.

    Fog is sampled at the exact (possibly non-integer) shape ``k_fog``.
    """
    pairs = [(float(a), float(b)) for a, b in gamma_bar_pairs]
    sizes = _chunk_sizes(plan.trials)
    p = cfg_link.towc
    C = cfg_link.C

    def one_chunk(i: int):
        rng = substream(plan.seed, i)
        n = sizes[i]
        h_t = (tb.sample_fog_gain(p.k_fog, p.z_fog, rng, n)
               * tb.sample_malaga(p, rng, n)
               * tb.sample_pointing(tb.PointingError(p.rho2, p.A0), rng, n))
        ht2 = h_t ** 2
        hu2 = np.asarray(sample_combined(cfg_link.stack, rng, n)) ** 2
        out = np.empty(len(pairs))
        ber = np.empty(len(pairs))
        ber2 = np.empty(len(pairs))
        for j, (gt, gu) in enumerate(pairs):
            gam_t = gt * ht2
            gam_u = gu * hu2
            gam = gam_t * gam_u / (gam_u + C)
            out[j] = np.count_nonzero(gam < gamma_th)
            k = conditional_ber(mod, gam)
            ber[j] = k.sum()
            ber2[j] = (k * k).sum()
        return out, ber, ber2

    parts = _run_chunks(one_chunk, len(sizes), plan.workers)
    tot = [np.sum([pt[k] for pt in parts], axis=0) for k in range(3)]
    n = plan.trials
    o, o_lo, o_hi = _prop_ci(tot[0], n)
    b, b_lo, b_hi = _mean_ci(tot[1], tot[2], n)
    return MixedSimResult(tuple(pairs), n, o, o_lo, o_hi, b, b_lo, b_hi)


# ----------------------------------------------------------------------
# comparison reporting
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonReport:
    metric: str
    analytic: tuple[float, ...]
    empirical: tuple[float, ...]
    ci_low: tuple[float, ...]
    ci_high: tuple[float, ...]
    max_rel_error: float
    tolerance: float
    passed: bool
    failing_indices: tuple[int, ...] = ()
    ks_statistic: float | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        ks = f" ks={self.ks_statistic:.2e}" if self.ks_statistic is not None else ""
        return (f"[{status}] {self.metric}: max_rel_err={self.max_rel_error:.3e} "
                f"tol={self.tolerance:.2e}{ks}")


def compare(metric: str, analytic, empirical, tolerance: float,
            ci=None, prob_floor: float = 0.0,
            ks_statistic: float | None = None,
            ks_tolerance: float | None = None) -> ComparisonReport:
    """Point-wise relative comparison; entries below ``prob_floor`` are
    excluded (rare-event floor for Monte-Carlo estimates)."""
    a = np.atleast_1d(np.asarray(analytic, dtype=float))
    e = np.atleast_1d(np.asarray(empirical, dtype=float))
    if a.shape != e.shape:
        raise ValueError("series length mismatch")
    lo, hi = (ci if ci is not None
              else (np.full_like(e, np.nan), np.full_like(e, np.nan)))
    mask = np.maximum(np.abs(a), np.abs(e)) >= prob_floor
    rel = np.zeros_like(a)
    rel[mask] = np.abs(e[mask] - a[mask]) / np.maximum(np.abs(a[mask]), 1e-300)
    max_rel = float(rel.max()) if mask.any() else 0.0
    bad = tuple(int(i) for i in np.nonzero(rel > tolerance)[0])
    ks_ok = (ks_statistic is None
             or ks_statistic <= (ks_tolerance if ks_tolerance is not None
                                 else tolerance))
    passed = not bad and ks_ok
    return ComparisonReport(metric, tuple(a), tuple(e), tuple(lo), tuple(hi),
                            max_rel, tolerance, passed, bad, ks_statistic)


def ks_distance(sorted_samples: np.ndarray, cdf_values: np.ndarray,
                grid: np.ndarray) -> float:
    """Max deviation between an empirical CDF (pre-sorted samples) and
    analytic CDF values on a grid."""
    emp = np.searchsorted(sorted_samples, grid, side="right") / sorted_samples.size
    return float(np.abs(emp - cdf_values).max())


# ----------------------------------------------------------------------
# registered analytic-vs-MC checks (one entry minimum per analytic op)
# ----------------------------------------------------------------------

REQUIRED_ANALYTIC_OPS = frozenset({
    "cascaded_pdf", "snr_pdf", "snr_cdf",
    "outage", "outage_asymptotic", "diversity_order",
    "avg_ber", "avg_ber_asymptotic", "ergodic_capacity",
    "towc_snr_pdf", "mixed_pdf", "mixed_cdf", "mixed_outage", "mixed_avg_ber",
})


def registered_comparisons():
    """(op_name, label, runner) triples; runners take a profile dict with
    keys trials/seed/tol_scale and return a ComparisonReport.  Defined in
    ``uwlink.validation`` to keep this module free of scenario constants."""
    from . import validation
    return validation.COMPARISONS
