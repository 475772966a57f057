"""Numerical Mellin-Barnes engine: complex log-Gamma, Meijer-G, Fox-H and
bivariate Fox-H evaluated by adaptive Gauss-Kronrod quadrature along vertical
contours.

Conventions
-----------
A Fox-H function is the contour integral

    H(z) = (1/2*pi*i) * integral over Re(s)=c of  Theta(s) * z**(-s) ds

with

    Theta(s) =  prod Gamma(b + B*s)        over ``lower_left``
              * prod Gamma(1 - a - A*s)    over ``upper_left``
              / prod Gamma(a + A*s)        over ``upper_right``
              / prod Gamma(1 - b - B*s)    over ``lower_right``

``lower_left`` factors carry poles extending left from -b/B; ``upper_left``
factors carry poles extending right from (1-a)/A.  The contour separates the
two families.  All evaluation happens in the log-Gamma domain and is
exponentiated once per node, so shape parameters of order fifty stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.special import loggamma as _scipy_loggamma

__all__ = [
    "SpecialFunctionError",
    "PoleError",
    "PoleSeparationError",
    "ConvergenceError",
    "GammaFactor",
    "FoxHSpec",
    "JointFactor",
    "BivariateFoxHSpec",
    "QuadratureConfig",
    "DEFAULT_QUADRATURE",
    "log_gamma_complex",
    "choose_contour",
    "foxh",
    "foxh_grid",
    "meijerg",
    "bivariate_foxh",
    "mellin_value",
    "mellin_value_grid",
    "bivariate_mellin_value",
    "set_result_perturbation",
]


class SpecialFunctionError(Exception):
    """Base class for numerical failures in this module."""


class PoleError(SpecialFunctionError):
    """Argument sits on a pole of the Gamma function."""


class PoleSeparationError(SpecialFunctionError):
    """No vertical contour separates the left and right pole families."""

    def __init__(self, message: str, lower_index: int | None = None,
                 upper_index: int | None = None):
        super().__init__(message)
        self.lower_index = lower_index
        self.upper_index = upper_index


class ConvergenceError(SpecialFunctionError):
    """Quadrature failed to reach the requested tolerance."""


# Multiplier applied to every Fox-H/Meijer-G result.  Only the validation
# suite touches this, to confirm that a corrupted kernel produces targeted
# failures and nothing else.
_result_perturbation = 1.0


def set_result_perturbation(factor: float) -> None:
    global _result_perturbation
    _result_perturbation = float(factor)


@dataclass(frozen=True)
class GammaFactor:
    """One (shift, slope) pair of a Gamma factor Gamma(b + B*s)."""

    b: float
    B: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.b):
            raise ValueError(f"Gamma factor shift must be finite, got {self.b}")
        if not (self.B > 0 and math.isfinite(self.B)):
            raise ValueError(f"Gamma factor slope must be positive, got {self.B}")


def _as_factors(items: Sequence) -> tuple[GammaFactor, ...]:
    out = []
    for it in items:
        if isinstance(it, GammaFactor):
            out.append(it)
        else:
            b, B = it
            out.append(GammaFactor(float(b), float(B)))
    return tuple(out)


@dataclass(frozen=True)
class FoxHSpec:
    """Gamma-factor lists of a single-variate Fox-H integrand.

    upper_left  -> Gamma(1 - a - A*s)   (right pole family)
    upper_right -> 1 / Gamma(a + A*s)
    lower_left  -> Gamma(b + B*s)       (left pole family)
    lower_right -> 1 / Gamma(1 - b - B*s)
    """

    upper_left: tuple[GammaFactor, ...] = ()
    upper_right: tuple[GammaFactor, ...] = ()
    lower_left: tuple[GammaFactor, ...] = ()
    lower_right: tuple[GammaFactor, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "upper_left", _as_factors(self.upper_left))
        object.__setattr__(self, "upper_right", _as_factors(self.upper_right))
        object.__setattr__(self, "lower_left", _as_factors(self.lower_left))
        object.__setattr__(self, "lower_right", _as_factors(self.lower_right))

    @property
    def decay_rate(self) -> float:
        """Slope sum controlling exponential decay along the contour.

        Positive means the integrand decays like exp(-rate*pi*|Im s|/2);
        non-positive specs are outside the numerically tractable sector.
        """
        return (sum(f.B for f in self.upper_left)
                + sum(f.B for f in self.lower_left)
                - sum(f.B for f in self.upper_right)
                - sum(f.B for f in self.lower_right))

    def log_kernel(self, s: np.ndarray) -> np.ndarray:
        out = np.zeros_like(s, dtype=complex)
        for f in self.lower_left:
            out += _scipy_loggamma(f.b + f.B * s)
        for f in self.upper_left:
            out += _scipy_loggamma(1.0 - f.b - f.B * s)
        for f in self.upper_right:
            out -= _scipy_loggamma(f.b + f.B * s)
        for f in self.lower_right:
            out -= _scipy_loggamma(1.0 - f.b - f.B * s)
        return out

    def all_slopes_one(self, tol: float = 1e-12) -> bool:
        return all(abs(f.B - 1.0) <= tol for f in
                   self.upper_left + self.upper_right
                   + self.lower_left + self.lower_right)


@dataclass(frozen=True)
class JointFactor:
    """Gamma factor coupling both axes of a bivariate integrand.

    Contributes Gamma(c0 + w1*s1 + w2*s2)**sign with sign +1 (numerator)
    or -1 (denominator).
    """

    c0: float
    w1: float
    w2: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("joint factor sign must be +1 or -1")
        for w in (self.c0, self.w1, self.w2):
            if not math.isfinite(w):
                raise ValueError("joint factor weights must be finite")


@dataclass(frozen=True)
class BivariateFoxHSpec:
    """Double Mellin-Barnes integrand: per-axis Gamma lists, joint factors
    coupling the two integration variables, the two arguments, and explicit
    contour abscissae (the caller owns the strip choice)."""

    axis1: FoxHSpec
    axis2: FoxHSpec
    joint_factors: tuple[JointFactor, ...]
    args: tuple[float, float]
    contour1: float
    contour2: float

    def __post_init__(self):
        object.__setattr__(self, "joint_factors", tuple(self.joint_factors))
        z1, z2 = self.args
        if not (z1 > 0 and z2 > 0):
            raise ValueError("bivariate arguments must be positive")


@dataclass(frozen=True)
class QuadratureConfig:
    """Contour-quadrature knobs.

    contour_height: initial symmetric truncation of |Im s| (extended
    automatically while the tail estimate exceeds budget).
    """

    rel_tol: float = 1e-8
    contour_height: float = 80.0
    max_nodes: int = 2 ** 16
    pole_margin: float = 1e-3

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1.0):
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.contour_height <= 0:
            raise ValueError("contour_height must be positive")
        if self.max_nodes < 15:
            raise ValueError("max_nodes too small for a single panel")
        if self.pole_margin <= 0:
            raise ValueError("pole_margin must be positive")


DEFAULT_QUADRATURE = QuadratureConfig()


def log_gamma_complex(z: complex) -> complex:
    """Principal-branch log Gamma; rejects the poles at 0, -1, -2, ..."""
    zc = complex(z)
    if zc.imag == 0.0 and zc.real <= 0.0 and zc.real == int(zc.real):
        raise PoleError(f"log Gamma pole at z = {zc.real:g}")
    return complex(_scipy_loggamma(zc))


def _pole_bounds(spec: FoxHSpec) -> tuple[float, int | None, float, int | None]:
    """(rightmost left pole, its index, leftmost right pole, its index)."""
    left, li = -math.inf, None
    for i, f in enumerate(spec.lower_left):
        p = -f.b / f.B
        if p > left:
            left, li = p, i
    right, ri = math.inf, None
    for i, f in enumerate(spec.upper_left):
        p = (1.0 - f.b) / f.B
        if p < right:
            right, ri = p, i
    return left, li, right, ri


def choose_contour(spec: FoxHSpec, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Abscissa strictly between the left and right pole families.

    Midpoint of the admissible strip when both ends are finite; half a unit
    inside the single finite bound otherwise.
    """
    left, li, right, ri = _pole_bounds(spec)
    if right - left <= 2.0 * cfg.pole_margin:
        raise PoleSeparationError(
            f"no separating contour: rightmost lower pole {left:g} (factor {li}) "
            f"vs leftmost upper pole {right:g} (factor {ri})",
            lower_index=li, upper_index=ri)
    if math.isfinite(left) and math.isfinite(right):
        return 0.5 * (left + right)
    if math.isfinite(left):
        return left + 0.5
    if math.isfinite(right):
        return right - 0.5
    return 0.0


# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK dqk15 constants).
_XGK = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
])

# 15 nodes per panel in a fixed order: +x0..+x6, -x0..-x6, 0.
_NODES = np.concatenate([_XGK[:7], -_XGK[:7], [0.0]])
_W_KRONROD = np.concatenate([_WGK[:7], _WGK[:7], [_WGK[7]]])
_W_GAUSS = np.zeros(15)
for _i, _g in ((1, 0), (3, 1), (5, 2)):
    _W_GAUSS[_i] = _WG[_g]
    _W_GAUSS[7 + _i] = _WG[_g]
_W_GAUSS[14] = _WG[3]


def _panel_nodes(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return mid[:, None] + half[:, None] * _NODES[None, :]


class _LinePanels:
    """Adaptive Gauss-Kronrod panel set along one vertical contour.

    Holds the cached log-kernel values per node so that refinement only pays
    for new panels.  The kernel is shared across every z in the batch.
    """

    def __init__(self, log_kernel: Callable[[np.ndarray], np.ndarray],
                 contour: float, t_lo: float, t_hi: float, n_init: int):
        self.log_kernel = log_kernel
        self.contour = contour
        edges = _initial_edges(t_lo, t_hi, n_init)
        self.lo = edges[:-1]
        self.hi = edges[1:]
        self.logk = self._eval(self.lo, self.hi)
        self.n_nodes = self.logk.size

    def _eval(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        t = _panel_nodes(lo, hi)
        s = self.contour + 1j * t
        return self.log_kernel(s.ravel()).reshape(t.shape)

    @property
    def t_max(self) -> float:
        return float(self.hi.max())

    def node_t(self) -> np.ndarray:
        return _panel_nodes(self.lo, self.hi)

    def split(self, mask: np.ndarray) -> None:
        keep_lo, keep_hi, keep_k = self.lo[~mask], self.hi[~mask], self.logk[~mask]
        mid = 0.5 * (self.lo[mask] + self.hi[mask])
        new_lo = np.concatenate([self.lo[mask], mid])
        new_hi = np.concatenate([mid, self.hi[mask]])
        new_k = self._eval(new_lo, new_hi)
        self.lo = np.concatenate([keep_lo, new_lo])
        self.hi = np.concatenate([keep_hi, new_hi])
        self.logk = np.concatenate([keep_k, new_k], axis=0)
        self.n_nodes += new_k.size

    def extend(self, new_t_hi: float, n_panels: int) -> None:
        t0 = self.t_max
        edges = np.geomspace(t0, new_t_hi, n_panels + 1)
        lo, hi = edges[:-1], edges[1:]
        k = self._eval(lo, hi)
        self.lo = np.concatenate([self.lo, lo])
        self.hi = np.concatenate([self.hi, hi])
        self.logk = np.concatenate([self.logk, k], axis=0)
        self.n_nodes += k.size


def _initial_edges(t_lo: float, t_hi: float, n: int) -> np.ndarray:
    """Geometric-ish partition refined near t=0 where the integrand peaks."""
    if t_lo == 0.0:
        base = np.geomspace(min(0.25, t_hi / 8), t_hi, n)
        return np.concatenate([[0.0], base])
    if t_lo < 0.0 < t_hi:
        pos = _initial_edges(0.0, t_hi, n // 2 + 1)
        neg = -_initial_edges(0.0, -t_lo, n // 2 + 1)[::-1]
        return np.unique(np.concatenate([neg, pos]))
    return np.linspace(t_lo, t_hi, n + 1)


def _line_integral_batch(log_kernel, contour: float, lnz: np.ndarray,
                         decay_rate: float, cfg: QuadratureConfig,
                         label: str = "contour integral",
                         scale_floor: float = 0.0) -> np.ndarray:
    """Integral over t in [0, T] of exp(log_kernel(c+it) - (c+it)*lnz) dt,
    vectorised over the lnz batch.

    Panel Kronrod/Gauss contributions are cached per panel so refinement only
    pays for new panels.  ``scale_floor`` (a fraction of the largest batch
    magnitude) relaxes the per-point relative target for entries that are
    vanishingly small next to the rest of the batch; grid callers use it for
    deep-tail points whose cancellation floor sits below float64 resolution.
    """
    lnz = np.atleast_1d(np.asarray(lnz, dtype=float))
    if decay_rate <= 1e-12:
        raise ConvergenceError(
            f"{label}: slope sum {decay_rate:g} is outside the convergence "
            "sector (needs a positive exponential decay rate)")
    rate = 0.5 * math.pi * decay_rate
    t_hi = min(cfg.contour_height, max(6.0, 35.0 / rate))

    shift = None
    for _restart in range(4):
        try:
            return _line_integral_attempt(log_kernel, contour, lnz, rate, cfg,
                                          t_hi, label, scale_floor, shift)
        except _ShiftRestart as r:
            shift = r.shift  # retry with the exponent scale discovered late
    raise ConvergenceError(f"{label}: exponent scaling failed to settle")


class _ShiftRestart(Exception):
    def __init__(self, shift):
        self.shift = shift


def _line_integral_attempt(log_kernel, contour, lnz, rate, cfg, t_hi, label,
                           scale_floor, shift=None):
    edges = _initial_edges(0.0, t_hi, 12)
    lo, hi = edges[:-1], edges[1:]

    def contrib(lo_arr, hi_arr, shift_vec):
        t = _panel_nodes(lo_arr, hi_arr)
        s = contour + 1j * t
        logk = log_kernel(s.ravel()).reshape(t.shape)
        expo = logk[:, :, None] - s[:, :, None] * lnz[None, None, :]
        if shift_vec is None:
            shift_vec = expo.real.max(axis=(0, 1))
        overshoot = expo.real.max(axis=(0, 1)) - shift_vec
        if (overshoot > 60.0).any():
            raise _ShiftRestart(shift_vec + np.maximum(overshoot, 0.0))
        w = np.exp(expo - shift_vec[None, None, :])
        half = (0.5 * (hi_arr - lo_arr))[:, None]
        k = half * np.einsum("n,pnz->pz", _W_KRONROD, w)
        g = half * np.einsum("n,pnz->pz", _W_GAUSS, w)
        mx = np.abs(w).max(axis=1)
        return k, g, mx, shift_vec

    K, G, MX, shift = contrib(lo, hi, shift)
    n_nodes = lo.size * 15
    for _ in range(200):
        total = K.sum(axis=0)
        scale = np.maximum(np.abs(total), 1e-290)
        if scale_floor > 0.0:
            scale = np.maximum(scale, scale_floor * scale.max())
        rel_err_panel = np.abs(K - G) / scale[None, :]
        outer = int(np.argmax(hi))
        tail = MX[outer] / rate
        tail_bad = (tail > cfg.rel_tol * scale / 10.0).any()
        err_bad = (rel_err_panel.sum(axis=0) > cfg.rel_tol / 3.0).any()
        if not err_bad and not tail_bad:
            return total * np.exp(shift + 0j)
        if n_nodes >= cfg.max_nodes:
            raise ConvergenceError(
                f"{label}: tolerance {cfg.rel_tol:g} not reached within "
                f"{cfg.max_nodes} nodes")
        if tail_bad:
            t0 = float(hi.max())
            new_edges = np.geomspace(t0, 2.0 * t0, 5)
            nlo, nhi = new_edges[:-1], new_edges[1:]
            nK, nG, nMX, shift = contrib(nlo, nhi, shift)
            lo = np.concatenate([lo, nlo]); hi = np.concatenate([hi, nhi])
            K = np.concatenate([K, nK]); G = np.concatenate([G, nG])
            MX = np.concatenate([MX, nMX])
            n_nodes += nlo.size * 15
        else:
            worst = rel_err_panel.max(axis=1)
            thresh = max(float(np.sort(worst)[-max(1, worst.size // 4)]),
                         cfg.rel_tol / (12.0 * max(worst.size, 1)))
            mask = worst >= thresh
            mid = 0.5 * (lo[mask] + hi[mask])
            nlo = np.concatenate([lo[mask], mid])
            nhi = np.concatenate([mid, hi[mask]])
            nK, nG, nMX, shift = contrib(nlo, nhi, shift)
            lo = np.concatenate([lo[~mask], nlo])
            hi = np.concatenate([hi[~mask], nhi])
            K = np.concatenate([K[~mask], nK])
            G = np.concatenate([G[~mask], nG])
            MX = np.concatenate([MX[~mask], nMX])
            n_nodes += nlo.size * 15
    raise ConvergenceError(f"{label}: refinement loop failed to settle")


def mellin_value_grid(log_kernel, z, contour: float, decay_rate: float,
                      cfg: QuadratureConfig = DEFAULT_QUADRATURE,
                      label: str = "mellin",
                      scale_floor: float = 0.0) -> np.ndarray:
    """Real inverse-Mellin values (1/pi) * Re integral for a batch of z > 0.

    ``log_kernel`` must be conjugate-symmetric (real parameters), which makes
    the full line integral twice the real part of the half line.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if (z <= 0).any():
        raise ValueError("argument z must be positive")
    vals = _line_integral_batch(log_kernel, contour, np.log(z), decay_rate,
                                cfg, label=label, scale_floor=scale_floor)
    return vals.real / math.pi


def mellin_value(log_kernel, z: float, contour: float, decay_rate: float,
                 cfg: QuadratureConfig = DEFAULT_QUADRATURE,
                 label: str = "mellin") -> float:
    return float(mellin_value_grid(log_kernel, [z], contour, decay_rate, cfg,
                                   label=label)[0])


def _validated_contour(spec: FoxHSpec, cfg: QuadratureConfig,
                       contour: float | None) -> float:
    if contour is None:
        return choose_contour(spec, cfg)
    left, li, right, ri = _pole_bounds(spec)
    if not (left < contour < right):
        raise PoleSeparationError(
            f"contour {contour:g} outside admissible strip ({left:g}, {right:g})",
            lower_index=li, upper_index=ri)
    return contour


def foxh(spec: FoxHSpec, z: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE,
         contour: float | None = None) -> float:
    """Single-variate Fox-H at positive real argument."""
    return float(foxh_grid(spec, [z], cfg, contour=contour)[0])


def foxh_grid(spec: FoxHSpec, z, cfg: QuadratureConfig = DEFAULT_QUADRATURE,
              contour: float | None = None,
              scale_floor: float = 0.0) -> np.ndarray:
    c = _validated_contour(spec, cfg, contour)
    vals = mellin_value_grid(spec.log_kernel, z, c, spec.decay_rate, cfg,
                             label="foxh", scale_floor=scale_floor)
    return vals * _result_perturbation


def meijerg(spec: FoxHSpec, z: float,
            cfg: QuadratureConfig = DEFAULT_QUADRATURE,
            contour: float | None = None) -> float:
    """Meijer-G: a Fox-H whose slopes are all one."""
    if not spec.all_slopes_one():
        raise ValueError("meijerg requires every Gamma-factor slope equal to 1")
    return foxh(spec, z, cfg, contour=contour)


def _joint_log(joint: Sequence[JointFactor], s1, s2) -> np.ndarray:
    out = 0.0
    for f in joint:
        term = _scipy_loggamma(f.c0 + f.w1 * s1 + f.w2 * s2)
        out = out + (term if f.sign > 0 else -term)
    return out


def bivariate_mellin_value(log_kernel1, log_kernel2,
                           joint: Sequence[JointFactor],
                           z1: float, z2: float, c1: float, c2: float,
                           decay1: float, decay2: float,
                           cfg: QuadratureConfig = DEFAULT_QUADRATURE,
                           node_budget: int = 2 ** 22) -> float:
    """Nested double Mellin-Barnes integral

        (1/(2*pi*i))**2 * II  K1(s1) K2(s2) J(s1,s2) z1^(-s1) z2^(-s2) ds2 ds1

    evaluated on a tensor grid: axis panels adapt on single-axis proxies, the
    joint factor is evaluated on the outer product, and the whole tensor is
    refined (panel doubling) until the value settles within rel_tol.
    """
    if z1 <= 0 or z2 <= 0:
        raise ValueError("bivariate arguments must be positive")
    lnz1, lnz2 = math.log(z1), math.log(z2)

    def proxy1(s):
        return log_kernel1(s) + _joint_log(joint, s, c2 + 0j * s)

    def proxy2(s):
        return log_kernel2(s) + _joint_log(joint, c1 + 0j * s, s)

    # Proxy runs fix the panel layout (and tail truncation) per axis.
    ax1 = _adapted_panels(proxy1, c1, lnz1, decay1, cfg, half=True)
    ax2 = _adapted_panels(proxy2, c2, lnz2, decay2, cfg, half=False)

    prev = None
    for _ in range(8):
        t1 = _panel_nodes(ax1["lo"], ax1["hi"])
        t2 = _panel_nodes(ax2["lo"], ax2["hi"])
        n1, n2 = t1.size, t2.size
        if n1 * n2 > node_budget:
            raise ConvergenceError(
                f"bivariate quadrature budget exceeded ({n1}x{n2} nodes)")
        s1 = (c1 + 1j * t1).ravel()
        s2 = (c2 + 1j * t2).ravel()
        f1 = log_kernel1(s1) - s1 * lnz1
        f2 = log_kernel2(s2) - s2 * lnz2
        jmat = _joint_log(joint, s1[:, None], s2[None, :])
        expo = f1[:, None] + f2[None, :] + jmat
        shift = expo.real.max()
        w = np.exp(expo - shift)
        w1 = (0.5 * (ax1["hi"] - ax1["lo"]))[:, None] * _W_KRONROD[None, :]
        w2 = (0.5 * (ax2["hi"] - ax2["lo"]))[:, None] * _W_KRONROD[None, :]
        inner = w.reshape(n1, n2) @ w2.ravel()
        total = w1.ravel() @ inner
        # full-plane value: reflect the half line in t1 and take the real part
        value = (total * np.exp(shift)).real / (2.0 * math.pi ** 2)
        if prev is not None and abs(value - prev) <= cfg.rel_tol * max(abs(value), 1e-290):
            return value
        prev = value
        ax1 = _halve(ax1)
        ax2 = _halve(ax2)
    raise ConvergenceError("bivariate quadrature did not settle")


def _adapted_panels(log_kernel, contour: float, lnz: float, decay: float,
                    cfg: QuadratureConfig, half: bool) -> dict:
    """Run the scalar adaptive integrator to learn a good panel layout."""
    probe_cfg = replace(cfg, rel_tol=max(cfg.rel_tol, 1e-7),
                        max_nodes=min(cfg.max_nodes, 2 ** 13))
    panels = _LinePanels(log_kernel, contour, 0.0, min(
        probe_cfg.contour_height, max(6.0, 35.0 / (0.5 * math.pi * max(decay, 1e-2)))),
        n_init=10)
    try:
        _refine_for_panels(panels, contour, lnz, decay, probe_cfg)
    except ConvergenceError:
        pass  # keep whatever layout was reached; the doubling loop checks it
    lo, hi = panels.lo, panels.hi
    if not half:
        lo, hi = np.concatenate([lo, -hi]), np.concatenate([hi, -lo])
    order = np.argsort(lo)
    return {"lo": lo[order], "hi": hi[order]}


def _refine_for_panels(panels: _LinePanels, contour: float, lnz: float,
                       decay: float, cfg: QuadratureConfig) -> None:
    rate = 0.5 * math.pi * max(decay, 1e-6)
    shift = None
    for _ in range(40):
        t = panels.node_t()
        s = contour + 1j * t
        expo = panels.logk - s * lnz
        if shift is None:
            shift = expo.real.max()
        w = np.exp(expo - shift)
        half = (0.5 * (panels.hi - panels.lo))[:, None]
        k = (half * w * _W_KRONROD[None, :]).sum(axis=1)
        g = (half * w * _W_GAUSS[None, :]).sum(axis=1)
        total = k.sum()
        scale = max(abs(total), 1e-290)
        rel = np.abs(k - g) / scale
        edge = np.abs(w[np.argmax(panels.hi)]).max()
        if edge / rate > cfg.rel_tol * scale / 10.0:
            panels.extend(2.0 * panels.t_max, n_panels=4)
            continue
        if rel.sum() <= cfg.rel_tol / 3.0:
            return
        if panels.n_nodes >= cfg.max_nodes:
            raise ConvergenceError("panel probe budget exhausted")
        thresh = max(np.sort(rel)[-max(1, rel.size // 4)], cfg.rel_tol / 40.0)
        panels.split(rel >= thresh)
    raise ConvergenceError("panel probe failed to settle")


def _halve(ax: dict) -> dict:
    mid = 0.5 * (ax["lo"] + ax["hi"])
    lo = np.concatenate([ax["lo"], mid])
    hi = np.concatenate([mid, ax["hi"]])
    order = np.argsort(lo)
    return {"lo": lo[order], "hi": hi[order]}


def bivariate_foxh(spec: BivariateFoxHSpec,
                   cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Bivariate Fox-H built from per-axis Gamma lists and joint factors."""
    d1 = spec.axis1.decay_rate
    d2 = spec.axis2.decay_rate
    for f in spec.joint_factors:
        d1 += f.sign * abs(f.w1)
        d2 += f.sign * abs(f.w2)
    val = bivariate_mellin_value(
        spec.axis1.log_kernel, spec.axis2.log_kernel, spec.joint_factors,
        spec.args[0], spec.args[1], spec.contour1, spec.contour2,
        d1, d2, cfg)
    return val * _result_perturbation
