"""Per-layer oceanic fading models (generalized Gamma, exponential-GG
mixture, exponentiated Weibull, Gamma-Gamma), zero-boresight pointing errors,
deterministic path gain, and the terrestrial Malaga + fog + pointing model.

Each family exposes a closed-form PDF, exact fractional moments, an exact
sampler, and a "branch table" describing its Mellin transform

    E[h^n] = sum_j  w_j * prod Gamma(b + B*n) * E_j**(-n)

which is what the product-channel machinery consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.special import comb, gammaln, gammasgn, kve

__all__ = [
    "GGParams", "EGGParams", "EWParams", "GammaGammaParams", "LayerModel",
    "PointingError", "PathGain", "MalagaFogParams",
    "UnifiedTerm", "UnifiedExpansion", "ExpansionSizeError",
    "pdf_layer", "moment_layer", "sample_layer",
    "sample_pointing", "sample_fog_gain", "sample_malaga",
    "malaga_constants", "malaga_irradiance_pdf", "fog_scale_from_attenuation",
    "layer_branches", "unified_expansion", "diversity_candidates",
]


class ExpansionSizeError(Exception):
    """Multi-index expansion would exceed the configured term cap."""


def _require(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class GGParams:
    """Generalized Gamma fading: scale a, shape pair (d, p)."""

    a: float
    d: float
    p: float

    def __post_init__(self):
        _require(self.a > 0 and self.d > 0 and self.p > 0,
                 f"GG parameters must be positive, got {self}")


@dataclass(frozen=True)
class EGGParams:
    """Mixture of an exponential and a generalized-Gamma component."""

    omega: float
    lam: float
    a: float
    d: float
    p: float

    def __post_init__(self):
        _require(0.0 <= self.omega <= 1.0,
                 f"mixture weight omega must lie in [0, 1], got {self.omega}")
        _require(self.lam > 0 and self.a > 0 and self.d > 0 and self.p > 0,
                 f"EGG scale/shape parameters must be positive, got {self}")


@dataclass(frozen=True)
class EWParams:
    """Exponentiated Weibull fading: extra shape alpha, shape beta, scale eta."""

    alpha: float
    beta: float
    eta: float

    def __post_init__(self):
        _require(self.alpha > 0 and self.beta > 0 and self.eta > 0,
                 f"EW parameters must be positive, got {self}")


@dataclass(frozen=True)
class GammaGammaParams:
    """Gamma-Gamma fading with large/small-scale shapes (alpha, beta)."""

    alpha: float
    beta: float

    def __post_init__(self):
        _require(self.alpha > 0 and self.beta > 0,
                 f"Gamma-Gamma shapes must be positive, got {self}")


LayerModel = Union[GGParams, EGGParams, EWParams, GammaGammaParams]


@dataclass(frozen=True)
class PointingError:
    """Zero-boresight misalignment: rho2 = (equivalent beam width / twice the
    jitter sigma)^2, A0 = maximum collected power fraction."""

    rho2: float
    A0: float

    def __post_init__(self):
        _require(self.rho2 > 0, f"rho2 must be positive, got {self.rho2}")
        _require(0.0 < self.A0 <= 1.0, f"A0 must lie in (0, 1], got {self.A0}")


@dataclass(frozen=True)
class PathGain:
    """Deterministic extinction: gain = exp(-alpha_ext * length)."""

    alpha_ext: float
    length: float

    def __post_init__(self):
        _require(self.alpha_ext >= 0 and self.length >= 0,
                 "extinction coefficient and length must be nonnegative")

    @property
    def gain(self) -> float:
        return math.exp(-self.alpha_ext * self.length)


@dataclass(frozen=True)
class MalagaFogParams:
    """Terrestrial channel: Malaga atmospheric turbulence (finite beta-term
    mixture), Gamma-exponent fog gain, and its own pointing error pair.

    ``amg``/``b_m`` may come straight from a fitted table or from
    :func:`malaga_constants`.  ``k_fog`` must be an integer for the analytic
    path; samplers accept the real-valued shape.
    """

    alpha_m: float
    beta_m: int
    g_m: float
    omega_m: float
    amg: float
    b_m: tuple[float, ...]
    k_fog: float
    z_fog: float
    rho2: float
    A0: float

    def __post_init__(self):
        _require(self.alpha_m > 0, "Malaga alpha must be positive")
        _require(int(self.beta_m) == self.beta_m and self.beta_m >= 1,
                 "Malaga beta must be a positive integer")
        _require(self.g_m > 0 and self.omega_m >= 0, "Malaga g > 0, Omega >= 0")
        _require(len(self.b_m) == self.beta_m,
                 f"need beta_m={self.beta_m} mixture constants, got {len(self.b_m)}")
        _require(all(b > 0 for b in self.b_m), "Malaga constants must be positive")
        _require(self.amg > 0, "Malaga normalization constant must be positive")
        _require(self.k_fog > 0 and self.z_fog > 0, "fog shape and scale must be positive")
        _require(self.rho2 > 0, "pointing rho2 must be positive")
        _require(0.0 < self.A0 <= 1.0, "pointing A0 must lie in (0, 1]")
        object.__setattr__(self, "b_m", tuple(float(b) for b in self.b_m))


def malaga_constants(alpha: float, beta: int, g: float, omega: float
                     ) -> tuple[float, tuple[float, ...]]:
    """Normalization constant and mixture constants of the Malaga irradiance
    model from (alpha, beta, g, Omega').  Validated downstream purely by PDF
    normalization."""
    beta = int(beta)
    gbo = g * beta + omega
    amg = (2.0 * alpha ** (alpha / 2.0)
           / (g ** (1.0 + alpha / 2.0) * math.gamma(alpha))
           * (g * beta / gbo) ** (beta + alpha / 2.0))
    b = []
    for m in range(1, beta + 1):
        a_m = (comb(beta - 1, m - 1, exact=True)
               * gbo ** (1.0 - m / 2.0) / math.gamma(m)
               * (omega / g) ** (m - 1)
               * (alpha / beta) ** (m / 2.0))
        b.append(a_m * (gbo / (alpha * beta)) ** ((alpha + m) / 2.0))
    return amg, tuple(b)


def fog_scale_from_attenuation(beta_f_db_per_km: float, length_m: float) -> float:
    """Fog gain exponent z from an attenuation coefficient in dB/km.

    Uses z = 4.343 / (beta_f * l_km); this follows the usual fog-channel
    convention and is convention-dependent, so the CLI also accepts z
    directly.
    """
    _require(beta_f_db_per_km > 0 and length_m > 0,
             "attenuation and length must be positive")
    return 4.343 / (beta_f_db_per_km * length_m / 1000.0)


# ----------------------------------------------------------------------
# closed-form PDFs
# ----------------------------------------------------------------------

def _gg_logpdf(x: np.ndarray, a: float, d: float, p: float) -> np.ndarray:
    return (math.log(p) - d * math.log(a) - gammaln(d / p)
            + (d - 1.0) * np.log(x) - (x / a) ** p)


def pdf_layer(model: LayerModel, x) -> np.ndarray | float:
    """Closed-form density of one fading layer, evaluated directly (not via
    the contour machinery) so it can serve as an independent cross-check."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    _require(bool((x > 0).all()), "pdf_layer requires x > 0")
    if isinstance(model, GGParams):
        out = np.exp(_gg_logpdf(x, model.a, model.d, model.p))
    elif isinstance(model, EGGParams):
        out = (model.omega / model.lam * np.exp(-x / model.lam)
               + (1.0 - model.omega)
               * np.exp(_gg_logpdf(x, model.a, model.d, model.p)))
    elif isinstance(model, EWParams):
        u = (x / model.eta) ** model.beta
        base = -np.expm1(-u)  # 1 - exp(-u), accurate for small u
        out = (model.alpha * model.beta / model.eta
               * (x / model.eta) ** (model.beta - 1.0)
               * np.exp(-u) * base ** (model.alpha - 1.0))
    elif isinstance(model, GammaGammaParams):
        al, be = model.alpha, model.beta
        arg = 2.0 * np.sqrt(al * be * x)
        logk = np.log(kve(al - be, arg)) - arg
        out = np.exp(math.log(2.0) + 0.5 * (al + be) * math.log(al * be)
                     - gammaln(al) - gammaln(be)
                     + (0.5 * (al + be) - 1.0) * np.log(x) + logk)
    else:
        raise TypeError(f"unknown layer model {type(model)!r}")
    return float(out[0]) if scalar else out


# ----------------------------------------------------------------------
# Mellin branch tables:  E[h^n] = sum_j w_j * prod Gamma(b+B n) * E_j^(-n)
# ----------------------------------------------------------------------

def _ew_weights(alpha: float, j: np.ndarray) -> np.ndarray:
    """Series weights Gamma(alpha+1)*(-1)^j / (j! Gamma(alpha-j) (j+1)).

    Uses the reflection form, which is stable for large j; for integer alpha
    the series terminates and the binomial form applies.
    """
    if abs(alpha - round(alpha)) < 1e-12:
        al = int(round(alpha))
        w = np.zeros_like(j, dtype=float)
        mask = j <= al - 1
        jm = j[mask]
        w[mask] = (math.gamma(al + 1) * (-1.0) ** jm
                   / (np.exp(gammaln(jm + 1) + gammaln(al - jm)) * (jm + 1)))
        return w
    pref = math.sin(math.pi * alpha) / math.pi
    return (math.gamma(alpha + 1) * pref * gammasgn(j + 1.0 - alpha)
            * np.exp(gammaln(j + 1.0 - alpha) - gammaln(j + 1)) / (j + 1.0))


def layer_branches(model: LayerModel, ew_trunc: int = 60
                   ) -> tuple[list[tuple[float, tuple[tuple[float, float], ...], float]], float]:
    """Branch table of one layer plus the truncation bound of its weight sum.

    Returns ([(weight, ((b, B), ...), scale), ...], bound) with
    E[h^n] = sum weight * prod Gamma(b + B n) * scale^(-n).  The bound is the
    exact defect of the zeroth moment (zero for the closed families).
    """
    if isinstance(model, GGParams):
        return ([(1.0 / math.gamma(model.d / model.p),
                  ((model.d / model.p, 1.0 / model.p),), 1.0 / model.a)], 0.0)
    if isinstance(model, EGGParams):
        return ([(model.omega, ((1.0, 1.0),), 1.0 / model.lam),
                 ((1.0 - model.omega) / math.gamma(model.d / model.p),
                  ((model.d / model.p, 1.0 / model.p),), 1.0 / model.a)], 0.0)
    if isinstance(model, GammaGammaParams):
        al, be = model.alpha, model.beta
        return ([(1.0 / (math.gamma(al) * math.gamma(be)),
                  ((al, 1.0), (be, 1.0)), al * be)], 0.0)
    if isinstance(model, EWParams):
        j = np.arange(ew_trunc)
        w = _ew_weights(model.alpha, j)
        scales = (j + 1.0) ** (1.0 / model.beta) / model.eta
        bound = abs(1.0 - float(w.sum()))  # weights of a density sum to one
        table = [(float(wj), ((1.0, 1.0 / model.beta),), float(sj))
                 for wj, sj in zip(w, scales) if wj != 0.0]
        return table, bound
    raise TypeError(f"unknown layer model {type(model)!r}")


def moment_layer(model: LayerModel, n: float) -> float:
    """Exact n-th moment (n real, >= 0)."""
    _require(n >= 0, "moment order must be nonnegative")
    if n == 0:
        return 1.0
    if isinstance(model, GGParams):
        return model.a ** n * math.exp(
            gammaln((n + model.d) / model.p) - gammaln(model.d / model.p))
    if isinstance(model, EGGParams):
        gg = GGParams(model.a, model.d, model.p)
        return (model.omega * model.lam ** n * math.gamma(1.0 + n)
                + (1.0 - model.omega) * moment_layer(gg, n))
    if isinstance(model, GammaGammaParams):
        al, be = model.alpha, model.beta
        return (al * be) ** (-n) * math.exp(
            gammaln(al + n) + gammaln(be + n) - gammaln(al) - gammaln(be))
    if isinstance(model, EWParams):
        # polynomially convergent series; extend until the estimated tail is
        # negligible against the running sum
        total = 0.0
        j0, block = 0, 4096
        gfac = math.gamma(1.0 + n / model.beta) * model.eta ** n
        r = model.alpha + 1.0 + n / model.beta
        for _ in range(64):
            j = np.arange(j0, j0 + block)
            w = _ew_weights(model.alpha, j)
            terms = w * gfac * (j + 1.0) ** (-n / model.beta)
            total += float(terms.sum())
            j0 += block
            tail = abs(terms[-1]) * j0 / max(r - 1.0, 0.25)
            if tail <= 1e-12 * max(abs(total), 1e-300):
                return total
            if abs(terms[-1]) == 0.0:
                return total
        raise ArithmeticError(
            f"EW moment series did not converge for {model} at n={n}")
    raise TypeError(f"unknown layer model {type(model)!r}")


# ----------------------------------------------------------------------
# samplers (exact laws; caller supplies an exclusive numpy Generator)
# ----------------------------------------------------------------------

def sample_layer(model: LayerModel, rng: np.random.Generator,
                 size: int | None = None) -> np.ndarray | float:
    if isinstance(model, GGParams):
        g = rng.gamma(model.d / model.p, 1.0, size)
        return model.a * g ** (1.0 / model.p)
    if isinstance(model, EGGParams):
        n = 1 if size is None else size
        pick_exp = rng.random(n) < model.omega
        out = np.where(pick_exp,
                       rng.exponential(model.lam, n),
                       model.a * rng.gamma(model.d / model.p, 1.0, n)
                       ** (1.0 / model.p))
        return float(out[0]) if size is None else out
    if isinstance(model, EWParams):
        u = rng.random(size)
        return model.eta * (-np.log1p(-u ** (1.0 / model.alpha))) ** (1.0 / model.beta)
    if isinstance(model, GammaGammaParams):
        y = rng.gamma(model.alpha, 1.0 / model.alpha, size)
        z = rng.gamma(model.beta, 1.0 / model.beta, size)
        return y * z
    raise TypeError(f"unknown layer model {type(model)!r}")


def sample_pointing(pe: PointingError, rng: np.random.Generator,
                    size: int | None = None) -> np.ndarray | float:
    """h_p = A0 * U^(1/rho2), the inverse CDF of the power-law density."""
    u = rng.random(size)
    return pe.A0 * u ** (1.0 / pe.rho2)


def sample_fog_gain(k: float, z: float, rng: np.random.Generator,
                    size: int | None = None) -> np.ndarray | float:
    """h_f = exp(-t) with t ~ Gamma(shape k, scale 1/z)."""
    _require(k > 0 and z > 0, "fog shape and scale must be positive")
    return np.exp(-rng.gamma(k, 1.0 / z, size))


# ----------------------------------------------------------------------
# Malaga irradiance: analytic PDF and tabulated inverse-CDF sampler
# ----------------------------------------------------------------------

def malaga_irradiance_pdf(params: MalagaFogParams, x) -> np.ndarray:
    """Finite Gamma-Bessel mixture density of the Malaga irradiance."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    al = params.alpha_m
    c = al * params.beta_m / (params.g_m * params.beta_m + params.omega_m)
    out = np.zeros_like(x)
    arg = 2.0 * np.sqrt(c * x)
    for m1, b in enumerate(params.b_m, start=1):
        a_m = b * c ** ((al + m1) / 2.0)
        order = al - m1
        logterm = (np.log(kve(order, arg)) - arg
                   + (0.5 * (al + m1) - 1.0) * np.log(x))
        out += a_m * np.exp(logterm)
    return params.amg * out


@lru_cache(maxsize=8)
def _malaga_table(params: MalagaFogParams) -> tuple[np.ndarray, np.ndarray]:
    """Inverse-CDF table (cdf, x) on a log-spaced grid; fails loudly if the
    analytic density does not normalize."""
    c = params.alpha_m * params.beta_m / (
        params.g_m * params.beta_m + params.omega_m)
    x_hi = (40.0 ** 2) / c
    for _ in range(30):
        tail = float(malaga_irradiance_pdf(params, x_hi)[0]) * x_hi
        if tail < 1e-15:
            break
        x_hi *= 2.0
    x = np.geomspace(x_hi * 1e-14, x_hi, 2 ** 16)
    pdf = malaga_irradiance_pdf(params, x)
    cdf = np.concatenate([[0.0], np.cumsum(
        0.5 * (pdf[1:] + pdf[:-1]) * np.diff(x))])
    norm = cdf[-1]
    if abs(norm - 1.0) > 1e-6:
        raise ArithmeticError(
            f"Malaga PDF normalizes to {norm:.8f}, not 1; check amg/b_m")
    cdf = cdf / norm
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return cdf[keep], x[keep]


def sample_malaga(params: MalagaFogParams, rng: np.random.Generator,
                  size: int | None = None) -> np.ndarray | float:
    """Numeric inverse-CDF draw from the tabulated Malaga irradiance law."""
    cdf, x = _malaga_table(params)
    u = rng.random(size)
    return np.interp(u, cdf, x)


# ----------------------------------------------------------------------
# multi-layer unified expansion
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class UnifiedTerm:
    """One multi-index term of the product-channel Mellin expansion."""

    coefficient: float
    factors: tuple[tuple[float, float], ...]  # (b, B) pairs, length m
    scale: float                              # E, moment ~ E^(-n)

    @property
    def m(self) -> int:
        return len(self.factors)

    @property
    def q(self) -> int:
        return len(self.factors)


@dataclass(frozen=True)
class UnifiedExpansion:
    terms: tuple[UnifiedTerm, ...]
    truncation_error_bound: float


def unified_expansion(layers, ew_trunc: int = 60,
                      max_terms: int = 20000) -> UnifiedExpansion:
    """Full multi-index expansion across layers (mixed families allowed).

    Exponential-GG mixtures contribute two branches per layer, exponentiated
    Weibull layers ``ew_trunc`` truncated-series branches; the recorded bound
    is the exact weight-sum defect accumulated over layers.
    """
    layers = list(layers)
    _require(len(layers) >= 1, "need at least one layer")
    tables, bound = [], 0.0
    n_terms = 1
    for model in layers:
        table, b = layer_branches(model, ew_trunc)
        tables.append(table)
        bound += b
        n_terms *= len(table)
        if n_terms > max_terms:
            raise ExpansionSizeError(
                f"expansion needs {n_terms}+ terms, cap is {max_terms}")
    terms = [UnifiedTerm(1.0, (), 1.0)]
    for table in tables:
        new = []
        for t in terms:
            for w, facs, scale in table:
                new.append(UnifiedTerm(t.coefficient * w,
                                       t.factors + facs,
                                       t.scale * scale))
        terms = new
    return UnifiedExpansion(tuple(terms), bound)


def diversity_candidates(model: LayerModel) -> tuple[float, ...]:
    """Shape sums entering the high-SNR slope rule, one entry per pole family."""
    if isinstance(model, GGParams):
        return (model.d,)
    if isinstance(model, EGGParams):
        return (1.0, model.d)
    if isinstance(model, EWParams):
        return (model.beta,)
    if isinstance(model, GammaGammaParams):
        return (model.alpha, model.beta)
    raise TypeError(f"unknown layer model {type(model)!r}")
