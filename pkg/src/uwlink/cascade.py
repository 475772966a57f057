"""Statistics of the N-layer product channel with pointing errors: the
cascaded-fade PDF, the SNR PDF/CDF under the square-law detection mapping
gamma = gamma_bar * (h_c * h_p)^2, and the combined-channel sampler.

Two evaluation paths produce identical values:

* ``terms``   - the explicit multi-index expansion, one Fox-H per term;
* ``grouped`` - a single contour integral whose kernel multiplies per-layer
  Mellin factors node by node.  This is the only tractable route for
  exponentiated-Weibull stacks, whose expansion is a truncated power series
  per layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import loggamma as _lgamma

from . import special_fn as sf
from . import turbulence as tb

__all__ = [
    "UwocStack", "SnrPoint",
    "cascaded_pdf", "snr_pdf", "snr_cdf", "snr_pdf_grid", "snr_cdf_grid",
    "sample_combined",
    "stack_mellin_kernel", "stack_pole_bound", "stack_decay_rate",
]

_TERM_PATH_CAP = 64
_EW_INNER_TRUNC = 30000


@dataclass(frozen=True)
class UwocStack:
    """Vertical link: fading layers, one pointing-error hop, path extinction."""

    layers: tuple[tb.LayerModel, ...]
    pe: tb.PointingError
    path: tb.PathGain = tb.PathGain(0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if len(self.layers) < 1:
            raise ValueError("a stack needs at least one layer")


@dataclass(frozen=True)
class SnrPoint:
    """Instantaneous / average electrical SNR pair, both linear scale."""

    gamma: float
    gamma_bar: float

    def __post_init__(self):
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")
        if not (self.gamma_bar > 0 and math.isfinite(self.gamma_bar)):
            raise ValueError(f"gamma_bar must be positive, got {self.gamma_bar}")


# ----------------------------------------------------------------------
# grouped-path kernel: product of per-layer Mellin factors
# ----------------------------------------------------------------------

def _layer_key(model):
    return model


def _small_table_log_value(table, s):
    exps = []
    weights = []
    for w, facs, scale in table:
        e = -s * math.log(scale)
        for b, B in facs:
            e = e + _lgamma(b + B * s)
        exps.append(e)
        weights.append(w)
    mat = np.stack(exps, axis=0)
    ref = mat.real.max(axis=0)
    acc = np.zeros_like(s)
    for w, e in zip(weights, exps):
        acc = acc + w * np.exp(e - ref)
    return ref + np.log(acc + 0j)


def _ew_log_value(model: tb.EWParams, s, trunc: int = _EW_INNER_TRUNC):
    """Per-layer Mellin factor of an EW layer: shared Gamma factor times a
    truncated Dirichlet-type series with a power-law tail correction."""
    j = np.arange(trunc)
    w = tb._ew_weights(model.alpha, j)
    ln_scale = (np.log(j + 1.0) / model.beta) - math.log(model.eta)
    acc = np.zeros_like(s)
    block = 8192
    for k0 in range(0, trunc, block):
        sl = slice(k0, min(k0 + block, trunc))
        acc = acc + np.exp(-np.multiply.outer(s, ln_scale[sl])) @ w[sl]
    last = w[-1] * np.exp(-s * ln_scale[-1])
    r = model.alpha + 1.0 + s / model.beta
    acc = acc + last * trunc / (r - 1.0)
    return _lgamma(1.0 + s / model.beta) + np.log(acc + 0j)


def stack_mellin_kernel(layers: Sequence[tb.LayerModel],
                        ew_inner: int = _EW_INNER_TRUNC):
    """log of  prod_i E[h_i^s]-kernel  as a vectorised callable of complex s.

    Per-layer factors are the branch sums  sum_j w_j Gamma(b+Bs) E_j^(-s);
    identical layers are evaluated once and raised to their multiplicity.
    """
    groups: dict = {}
    order = []
    for model in layers:
        key = _layer_key(model)
        if key not in groups:
            groups[key] = 0
            order.append(model)
        groups[key] += 1

    def log_kernel(s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        for model in order:
            count = groups[_layer_key(model)]
            if isinstance(model, tb.EWParams):
                val = _ew_log_value(model, s, ew_inner)
            else:
                table, _ = tb.layer_branches(model)
                val = _small_table_log_value(table, s)
            out = out + count * val
        return out

    return log_kernel


def stack_pole_bound(layers: Sequence[tb.LayerModel]) -> float:
    """Rightmost pole of the product kernel (a negative number)."""
    bound = -math.inf
    for model in layers:
        table, _ = tb.layer_branches(model, ew_trunc=2)
        for _, facs, _ in table:
            for b, B in facs:
                bound = max(bound, -b / B)
    return bound


def stack_decay_rate(layers: Sequence[tb.LayerModel]) -> float:
    """Exponential decay slope sum; each layer counts its slowest branch."""
    total = 0.0
    for model in layers:
        table, _ = tb.layer_branches(model, ew_trunc=2)
        total += min(sum(B for _, B in facs) for _, facs, _ in table)
    return total


def _expansion(layers, ew_trunc):
    return tb.unified_expansion(layers, ew_trunc=ew_trunc,
                                max_terms=_TERM_PATH_CAP * 16)


def _pick_method(layers, method):
    if method != "auto":
        return method
    if any(isinstance(m, tb.EWParams) for m in layers):
        return "grouped"
    n_terms = 1
    for m in layers:
        n_terms *= len(tb.layer_branches(m)[0])
    return "terms" if n_terms <= _TERM_PATH_CAP else "grouped"


# ----------------------------------------------------------------------
# cascaded fade PDF (no pointing): f(h) = sum_t c_t (1/h) H[ E_t h ]
# ----------------------------------------------------------------------

def cascaded_pdf(layers: Sequence[tb.LayerModel], h,
                 cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE,
                 method: str = "auto", ew_trunc: int = 60) -> np.ndarray | float:
    h_arr = np.atleast_1d(np.asarray(h, dtype=float))
    if (h_arr <= 0).any():
        raise ValueError("cascaded_pdf requires h > 0")
    method = _pick_method(layers, method)
    if method == "terms":
        out = np.zeros_like(h_arr)
        for t in _expansion(layers, ew_trunc).terms:
            spec = sf.FoxHSpec(lower_left=t.factors)
            out += t.coefficient * sf.foxh_grid(spec, t.scale * h_arr, cfg)
        out /= h_arr
    else:
        ker = stack_mellin_kernel(layers)
        c = stack_pole_bound(layers) + 0.5
        vals = sf.mellin_value_grid(ker, h_arr, c, stack_decay_rate(layers),
                                    cfg, label="cascaded_pdf",
                                    scale_floor=1e-8)
        out = vals / h_arr
    return float(out[0]) if np.isscalar(h) or np.ndim(h) == 0 else out


# ----------------------------------------------------------------------
# SNR statistics under gamma = gamma_bar * (h_c h_p)^2
# ----------------------------------------------------------------------

def _snr_contour(stack: UwocStack, lo_extra: float, hi: float) -> float:
    lo = max(stack_pole_bound(stack.layers), -stack.pe.rho2, lo_extra)
    if hi == math.inf:
        return lo + 0.5
    if hi - lo <= 2e-3:
        raise sf.PoleSeparationError(
            f"no admissible contour in ({lo:g}, {hi:g})")
    return 0.5 * (lo + hi)


def _pointing_log(rho2: float, s):
    return _lgamma(rho2 + s) - _lgamma(1.0 + rho2 + s)


def snr_pdf_grid(stack: UwocStack, gammas, gamma_bar: float,
                 cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE,
                 method: str = "auto", ew_trunc: int = 60) -> np.ndarray:
    """Density of the instantaneous SNR on a grid of gamma > 0."""
    g = np.atleast_1d(np.asarray(gammas, dtype=float))
    if (g <= 0).any():
        raise ValueError("snr_pdf requires gamma > 0")
    rho2, a0 = stack.pe.rho2, stack.pe.A0
    method = _pick_method(stack.layers, method)
    root = np.sqrt(g / gamma_bar)
    if method == "terms":
        out = np.zeros_like(g)
        for t in _expansion(stack.layers, ew_trunc).terms:
            spec = sf.FoxHSpec(upper_right=((1.0 + rho2, 1.0),),
                               lower_left=t.factors + ((rho2, 1.0),))
            out += t.coefficient * sf.foxh_grid(spec, (t.scale / a0) * root,
                                                cfg, scale_floor=1e-6)
    else:
        base = stack_mellin_kernel(stack.layers)

        def ker(s):
            return base(s) + _pointing_log(rho2, s)

        c = _snr_contour(stack, -math.inf, math.inf)
        out = sf.mellin_value_grid(ker, root / a0, c,
                                   stack_decay_rate(stack.layers), cfg,
                                   label="snr_pdf")
    return 0.5 * rho2 * out / g


def snr_cdf_grid(stack: UwocStack, gammas, gamma_bar: float,
                 cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE,
                 method: str = "auto", ew_trunc: int = 60,
                 clamp: bool = True) -> np.ndarray:
    """CDF of the instantaneous SNR; values are clamped into [0, 1] only when
    the excess is within quadrature noise, otherwise the excess is an error."""
    g = np.atleast_1d(np.asarray(gammas, dtype=float))
    if (g < 0).any():
        raise ValueError("snr_cdf requires gamma >= 0")
    out = np.zeros_like(g)
    pos = g > 0
    if pos.any():
        rho2, a0 = stack.pe.rho2, stack.pe.A0
        method = _pick_method(stack.layers, method)
        root = np.sqrt(g[pos] / gamma_bar)
        vals = np.zeros_like(root)
        if method == "terms":
            for t in _expansion(stack.layers, ew_trunc).terms:
                spec = sf.FoxHSpec(
                    upper_left=((1.0, 1.0),),
                    upper_right=((1.0 + rho2, 1.0),),
                    lower_left=t.factors + ((rho2, 1.0),),
                    lower_right=((0.0, 1.0),))
                vals += t.coefficient * sf.foxh_grid(
                    spec, (t.scale / a0) * root, cfg, scale_floor=1e-6)
        else:
            base = stack_mellin_kernel(stack.layers)

            def ker(s):
                return (base(s) + _pointing_log(rho2, s)
                        + _lgamma(-s) - _lgamma(1.0 - s))

            c = _snr_contour(stack, -math.inf, 0.0)
            vals = sf.mellin_value_grid(ker, root / a0, c,
                                        stack_decay_rate(stack.layers), cfg,
                                        label="snr_cdf", scale_floor=1e-6)
        vals = rho2 * vals
        if clamp:
            slack = 10.0 * cfg.rel_tol
            if (vals < -slack).any() or (vals > 1.0 + slack).any():
                bad = vals[(vals < -slack) | (vals > 1.0 + slack)]
                raise sf.ConvergenceError(
                    f"snr_cdf out of [0,1] beyond tolerance: {bad[:3]}")
            vals = np.clip(vals, 0.0, 1.0)
        out[pos] = vals
    return out


def snr_pdf(stack: UwocStack, pt: SnrPoint,
            cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE,
            method: str = "auto") -> float:
    return float(snr_pdf_grid(stack, [pt.gamma], pt.gamma_bar, cfg, method)[0])


def snr_cdf(stack: UwocStack, pt: SnrPoint,
            cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE,
            method: str = "auto") -> float:
    return float(snr_cdf_grid(stack, [pt.gamma], pt.gamma_bar, cfg, method)[0])


def sample_combined(stack: UwocStack, rng: np.random.Generator,
                    size: int | None = None) -> np.ndarray | float:
    """One draw of h = h_p * prod_i h_i (path gain folds into gamma_bar)."""
    h = tb.sample_pointing(stack.pe, rng, size)
    for model in stack.layers:
        h = h * tb.sample_layer(model, rng, size)
    return h
