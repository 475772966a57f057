"""Registered analytic-vs-Monte-Carlo comparisons.

Every analytic operation of the cascade / metrics / mixed-link layers has at
least one entry here; the CLI ``validate`` command executes the registry and
fails when an operation is uncovered or a comparison misses its tolerance.
Profiles: ``strict`` runs the full trial counts, ``fast`` is a smoke profile
with scaled tolerances.
"""

from __future__ import annotations

import math

import numpy as np

from . import metrics as mx
from . import mixed_link as ml
from . import montecarlo as mc
from . import scenarios as sc
from . import special_fn as sf
from . import turbulence as tb
from .cascade import UwocStack, snr_cdf_grid, snr_pdf_grid, cascaded_pdf

PROFILES = {
    "strict": {"trials": 10_000_000, "tol_scale": 1.0},
    "fast": {"trials": 200_000, "tol_scale": 4.0},
}


def _plan(profile, seed_shift=0, workers=1):
    return mc.SimPlan(trials=profile["trials"], seed=20260809 + seed_shift,
                      workers=workers)


def _floor(profile):
    return 100.0 / profile["trials"]


def _quad():
    return sf.DEFAULT_QUADRATURE


_GAUSS8_X, _GAUSS8_W = np.polynomial.legendre.leggauss(8)


def _hist_check(name, samples, pdf_fn, tol, lo_q=0.02, hi_q=0.98, bins=14):
    """Quantile-binned mass comparison between samples and a density; the
    analytic mass integrates the density inside each bin (8-point Gauss)."""
    edges = np.unique(np.quantile(samples, np.linspace(lo_q, hi_q, bins + 1)))
    counts, edges = np.histogram(samples, edges)
    emp = counts / samples.size
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GAUSS8_X[None, :]).ravel()
    dens = np.asarray(pdf_fn(nodes)).reshape(mid.size, -1)
    ana = (dens @ _GAUSS8_W) * half
    return mc.compare(name, ana, emp, tol)


def _gg1_stack():
    return sc.uwoc_stack([tb.GGParams(*[sc.GG5_A[0], sc.GG5_D[0], sc.GG5_P[0]])],
                         rho2=1.0, with_path=False)


def _check_cascaded_pdf(profile):
    rng = mc.substream(7001, 0)
    n = min(profile["trials"], 2_000_000)
    layers = (tb.GGParams(1, 1, 1), tb.GGParams(1, 1, 1))
    draws = tb.sample_layer(layers[0], rng, n) * tb.sample_layer(layers[1], rng, n)
    tol = 0.05 * profile["tol_scale"]
    return _hist_check("cascaded_pdf vs product-sample histogram", draws,
                       lambda x: cascaded_pdf(layers, x, _quad()), tol)


def _check_snr_pdf(profile):
    stack = sc.uwoc_stack([tb.GGParams(sc.GG5_A[0], sc.GG5_D[0], sc.GG5_P[0])],
                          rho2=6.0, with_path=False)
    gbar = 1e6
    rng = mc.substream(7002, 0)
    n = min(profile["trials"], 2_000_000)
    gam = gbar * np.asarray(mc.sample_combined(stack, rng, n)) ** 2
    tol = 0.05 * profile["tol_scale"]
    return _hist_check("snr_pdf vs SNR-sample histogram", gam,
                       lambda g: snr_pdf_grid(stack, g, gbar, _quad()), tol)


def _check_snr_cdf(profile):
    stack = sc.uwoc_stack(sc.gg_layers(), rho2=1.0, with_path=False)
    plan = _plan(profile, 2)
    h2 = mc.sample_uwoc_h2(stack, plan)
    probs = np.linspace(0.02, 0.98, 25)
    grid = np.quantile(h2, probs)
    ana = snr_cdf_grid(stack, grid, 1.0, _quad())
    ks = mc.ks_distance(h2, ana, grid)
    tol = 0.02 * profile["tol_scale"]
    return mc.compare("snr_cdf vs empirical CDF (5-layer)", probs,
                      ana, tol, ks_statistic=ks,
                      ks_tolerance=3.0 / math.sqrt(plan.trials))


def _check_outage(profile):
    stack = _gg1_stack()
    grid_db = [40.0, 50.0, 60.0, 70.0]
    plan = _plan(profile, 3)
    sim = mc.simulate_uwoc(stack, grid_db, plan, gamma_th=1.0)
    ana = mx.outage_grid(stack, 10 ** (np.asarray(grid_db) / 10), 1.0, _quad())
    return mc.compare("outage vs MC", ana, sim.outage,
                      0.05 * profile["tol_scale"], prob_floor=_floor(profile))


def _check_outage_asymptotic(profile):
    stack = _gg1_stack()
    gbar_db = 110.0
    plan = _plan(profile, 4)
    sim = mc.simulate_uwoc(stack, [gbar_db], plan, gamma_th=1.0)
    asym = mx.outage_asymptotic(stack, 10 ** (gbar_db / 10), 1.0)
    return mc.compare("outage_asymptotic vs MC at high SNR", [asym],
                      sim.outage, 0.06 * profile["tol_scale"],
                      prob_floor=_floor(profile))


def _check_diversity_order(profile):
    stack = _gg1_stack()
    grid_db = [95.0, 105.0, 115.0]
    plan = _plan(profile, 5)
    sim = mc.simulate_uwoc(stack, grid_db, plan, gamma_th=1.0)
    mask = sim.outage > _floor(profile)
    x = np.asarray(grid_db)[mask] / 10.0
    y = np.log10(sim.outage[mask])
    slope = -np.polyfit(x, y, 1)[0]
    do = mx.diversity_order(stack)
    # the window is pre-asymptotic; the subleading pole is only ~z^0.18 away
    return mc.compare("diversity_order vs MC outage slope", [do], [slope],
                      0.15 * profile["tol_scale"])


def _check_avg_ber(profile):
    stack = _gg1_stack()
    grid_db = [40.0, 60.0, 80.0]
    plan = _plan(profile, 6)
    sim = mc.simulate_uwoc(stack, grid_db, plan)
    ana = mx.avg_ber_grid(stack, 10 ** (np.asarray(grid_db) / 10))
    return mc.compare("avg_ber vs MC", ana, sim.ber,
                      0.05 * profile["tol_scale"], prob_floor=_floor(profile))


def _check_avg_ber_asymptotic(profile):
    stack = _gg1_stack()
    gbar_db = 110.0
    plan = _plan(profile, 7)
    sim = mc.simulate_uwoc(stack, [gbar_db], plan)
    asym = mx.avg_ber_asymptotic(stack, 10 ** (gbar_db / 10))
    return mc.compare("avg_ber_asymptotic vs MC at high SNR", [asym],
                      sim.ber, 0.06 * profile["tol_scale"],
                      prob_floor=_floor(profile))


def _check_capacity(profile):
    stack = _gg1_stack()
    grid_db = [40.0, 60.0, 80.0]
    plan = _plan(profile, 8)
    sim = mc.simulate_uwoc(stack, grid_db, plan)
    ana = mx.ergodic_capacity_grid(stack, 10 ** (np.asarray(grid_db) / 10))
    return mc.compare("ergodic_capacity vs MC", ana, sim.capacity,
                      0.02 * profile["tol_scale"])


def _check_towc_pdf(profile):
    p = sc.malaga_fog(setting=1, fog=0, rho2=1.0)
    gbar = 1e10
    rng = mc.substream(7009, 0)
    n = min(profile["trials"], 2_000_000)
    h = (tb.sample_fog_gain(p.k_fog, p.z_fog, rng, n)
         * tb.sample_malaga(p, rng, n)
         * tb.sample_pointing(tb.PointingError(p.rho2, p.A0), rng, n))
    gam = gbar * h ** 2
    tol = 0.05 * profile["tol_scale"]
    return _hist_check("towc_snr_pdf vs sample histogram", gam,
                       lambda g: ml.towc_snr_pdf_grid(p, g, gbar, _quad()), tol)


def _mixed_cfg():
    stack = sc.uwoc_stack([tb.GGParams(sc.GG5_A[0], sc.GG5_D[0], sc.GG5_P[0])],
                          rho2=1.0, with_path=False)
    return ml.MixedLinkConfig(sc.malaga_fog(setting=1, fog=0, rho2=1.0),
                              1e10, stack, 1e8, C=1.0)


def _check_mixed_cdf(profile):
    link = _mixed_cfg()
    gammas = [1e2, 1e4, 1e6]
    plan = _plan(profile, 10)
    draws = mc.sample_mixed_snr(link, (link.towc_gamma_bar,
                                       link.uwoc_gamma_bar), plan)
    emp = [float(np.searchsorted(draws, g) / draws.size) for g in gammas]
    ana = [ml.mixed_cdf(link, g, _quad()) for g in gammas]
    return mc.compare("mixed_cdf vs MC", ana, emp,
                      0.05 * profile["tol_scale"], prob_floor=_floor(profile))


def _check_mixed_pdf(profile):
    link = _mixed_cfg()
    gammas = np.array([3e2, 1e4, 3e5])
    width = 0.04
    plan = _plan(profile, 11)
    draws = mc.sample_mixed_snr(link, (link.towc_gamma_bar,
                                       link.uwoc_gamma_bar), plan)
    ana, emp = [], []
    for g in gammas:
        lo, hi = g * (1 - width), g * (1 + width)
        mass = (np.searchsorted(draws, hi)
                - np.searchsorted(draws, lo)) / draws.size
        emp.append(mass / (hi - lo))
        ana.append(ml.mixed_pdf(link, g, _quad()))
    return mc.compare("mixed_pdf vs MC bin density", ana, emp,
                      0.07 * profile["tol_scale"])


def _check_mixed_outage(profile):
    link = _mixed_cfg()
    plan = _plan(profile, 12)
    sim = mc.simulate_mixed(link, [(link.towc_gamma_bar,
                                    link.uwoc_gamma_bar)], plan, gamma_th=1e3)
    ana = ml.mixed_outage(link, 1e3, _quad())
    return mc.compare("mixed_outage vs MC", [ana], sim.outage,
                      0.05 * profile["tol_scale"], prob_floor=_floor(profile))


def _check_mixed_ber(profile):
    link = _mixed_cfg()
    plan = _plan(profile, 13)
    sim = mc.simulate_mixed(link, [(link.towc_gamma_bar,
                                    link.uwoc_gamma_bar)], plan)
    ana = ml.mixed_avg_ber(link, mx.OOK, _quad())
    return mc.compare("mixed_avg_ber vs MC", [ana], sim.ber,
                      0.05 * profile["tol_scale"], prob_floor=_floor(profile))


def _check_sampler_moments(profile):
    """Pure sampler check (no contour integration anywhere in the path)."""
    rng = mc.substream(7014, 0)
    n = min(profile["trials"], 2_000_000)
    models = [tb.GGParams(sc.GG5_A[0], sc.GG5_D[0], sc.GG5_P[0]),
              tb.EWParams(**sc.EW_SET), tb.GammaGammaParams(**sc.GAMMAGAMMA_SET)]
    ana = [tb.moment_layer(m, 1.0) for m in models]
    emp = [float(np.mean(tb.sample_layer(m, rng, n))) for m in models]
    return mc.compare("sampler first moments", ana, emp,
                      0.01 * profile["tol_scale"])


COMPARISONS = [
    ("cascaded_pdf", _check_cascaded_pdf),
    ("snr_pdf", _check_snr_pdf),
    ("snr_cdf", _check_snr_cdf),
    ("outage", _check_outage),
    ("outage_asymptotic", _check_outage_asymptotic),
    ("diversity_order", _check_diversity_order),
    ("avg_ber", _check_avg_ber),
    ("avg_ber_asymptotic", _check_avg_ber_asymptotic),
    ("ergodic_capacity", _check_capacity),
    ("towc_snr_pdf", _check_towc_pdf),
    ("mixed_cdf", _check_mixed_cdf),
    ("mixed_pdf", _check_mixed_pdf),
    ("mixed_outage", _check_mixed_outage),
    ("mixed_avg_ber", _check_mixed_ber),
    ("sampler_moments", _check_sampler_moments),
]
