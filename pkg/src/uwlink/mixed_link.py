"""End-to-end statistics of the fixed-gain relayed terrestrial-to-underwater
link: terrestrial SNR statistics under Malaga turbulence, fog-induced random
path gain and pointing errors; the relayed PDF/CDF/outage/BER through a
bivariate contour integral; and a direct composition-integral oracle.

The end-to-end SNR is gamma = gamma_T * gamma_U / (gamma_U + C).  Evaluation
splits every relayed statistic into the first-hop marginal plus a bivariate
correction,

    F(gamma) = F_T(gamma) + II ... Gamma((s1-s2)/2) ... ds1 ds2,

with the second axis continued into the strip Re(s2) in (-2, 0).  The split
is an exact contour rearrangement of the double Mellin-Barnes form; it keeps
F >= F_T manifest and the correction numerically small where the first hop
dominates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma as _lgamma

from . import special_fn as sf
from . import turbulence as tb
from .cascade import (UwocStack, snr_pdf_grid, stack_mellin_kernel,
                      stack_pole_bound, stack_decay_rate, _pointing_log)
from .metrics import ModulationScheme, OOK

__all__ = [
    "MixedLinkConfig",
    "towc_snr_pdf", "towc_snr_pdf_grid", "towc_snr_cdf", "towc_snr_cdf_grid",
    "towc_avg_ber",
    "mixed_pdf", "mixed_cdf", "mixed_outage", "mixed_avg_ber",
    "composition_pdf", "composition_cdf",
    "terrestrial_argument_scale",
]


@dataclass(frozen=True)
class MixedLinkConfig:
    """Dual-hop description: terrestrial channel and its average SNR, the
    underwater stack and its average SNR, the fixed relay gain constant C,
    and the terrestrial span (kept for the fog-scale convention)."""

    towc: tb.MalagaFogParams
    towc_gamma_bar: float
    stack: UwocStack
    uwoc_gamma_bar: float
    C: float = 1.0
    l_T: float = 400.0

    def __post_init__(self):
        if not (self.towc_gamma_bar > 0 and self.uwoc_gamma_bar > 0):
            raise ValueError("average SNRs must be positive")
        if self.C <= 0:
            raise ValueError("fixed-gain constant C must be positive")


def terrestrial_argument_scale(p: tb.MalagaFogParams) -> float:
    """W_T = alpha*beta / ((g*beta + Omega') * A_T); the first-hop contour
    argument is W_T * sqrt(gamma/gamma_bar)."""
    return (p.alpha_m * p.beta_m
            / ((p.g_m * p.beta_m + p.omega_m) * p.A0))


def _towc_prefactor(p: tb.MalagaFogParams) -> float:
    return p.z_fog ** p.k_fog * p.rho2 * p.amg / 4.0


def _towc_log_kernel(p: tb.MalagaFogParams):
    """log of the first-hop Mellin kernel, with the Malaga mixture summed
    inside so one contour integral covers all beta_m terms."""
    k = int(round(p.k_fog))
    if abs(k - p.k_fog) > 1e-9:
        raise ValueError(
            f"analytic terrestrial path needs integer fog shape, got {p.k_fog}; "
            "round it explicitly (the samplers accept the real value)")
    b = np.asarray(p.b_m)
    m_idx = np.arange(1, p.beta_m + 1, dtype=float)

    def log_kernel(s):
        s = np.asarray(s, dtype=complex)
        mix = _lgamma(m_idx[None, :] + s[:, None])
        ref = mix.real.max(axis=1)
        mixed = np.log((np.exp(mix - ref[:, None]) @ b) + 0j) + ref
        return (mixed
                + _lgamma(p.rho2 + s) - _lgamma(1.0 + p.rho2 + s)
                + _lgamma(p.alpha_m + s)
                + k * (_lgamma(p.z_fog + s) - _lgamma(1.0 + p.z_fog + s)))

    return log_kernel


def _towc_pole_bound(p: tb.MalagaFogParams) -> float:
    return -min(p.rho2, p.alpha_m, 1.0, p.z_fog)


_TOWC_DECAY = 2.0  # slope sum of the first-hop kernel (independent of k)


def towc_snr_pdf_grid(p: tb.MalagaFogParams, gammas, gamma_bar: float,
                      cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE
                      ) -> np.ndarray:
    g = np.atleast_1d(np.asarray(gammas, dtype=float))
    if (g <= 0).any():
        raise ValueError("towc_snr_pdf requires gamma > 0")
    ker = _towc_log_kernel(p)
    c = _towc_pole_bound(p) + 0.5
    z = terrestrial_argument_scale(p) * np.sqrt(g / gamma_bar)
    vals = sf.mellin_value_grid(ker, z, c, _TOWC_DECAY, cfg,
                                label="towc_snr_pdf", scale_floor=1e-8)
    return _towc_prefactor(p) * vals / g


def towc_snr_pdf(p: tb.MalagaFogParams, gamma: float, gamma_bar: float,
                 cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE) -> float:
    return float(towc_snr_pdf_grid(p, [gamma], gamma_bar, cfg)[0])


def towc_snr_cdf_grid(p: tb.MalagaFogParams, gammas, gamma_bar: float,
                      cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE
                      ) -> np.ndarray:
    g = np.atleast_1d(np.asarray(gammas, dtype=float))
    if (g < 0).any():
        raise ValueError("towc_snr_cdf requires gamma >= 0")
    out = np.zeros_like(g)
    pos = g > 0
    if pos.any():
        base = _towc_log_kernel(p)

        def ker(s):
            return base(s) + _lgamma(-0.5 * s) - _lgamma(1.0 - 0.5 * s)

        c = 0.5 * max(_towc_pole_bound(p), -1.9)
        z = terrestrial_argument_scale(p) * np.sqrt(g[pos] / gamma_bar)
        vals = sf.mellin_value_grid(ker, z, c, _TOWC_DECAY, cfg,
                                    label="towc_snr_cdf", scale_floor=1e-6)
        out[pos] = np.clip(_towc_prefactor(p) * vals, 0.0, 1.0)
    return out


def towc_snr_cdf(p: tb.MalagaFogParams, gamma: float, gamma_bar: float,
                 cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE) -> float:
    return float(towc_snr_cdf_grid(p, [gamma], gamma_bar, cfg)[0])


def towc_avg_ber(p: tb.MalagaFogParams, gamma_bar: float,
                 mod: ModulationScheme = OOK,
                 cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE) -> float:
    base = _towc_log_kernel(p)

    def ker(s):
        return (base(s) + _lgamma(-0.5 * s) - _lgamma(1.0 - 0.5 * s)
                + _lgamma(mod.phi - 0.5 * s))

    c = 0.5 * max(_towc_pole_bound(p), -1.9)
    total = 0.0
    for qn in mod.q:
        z = terrestrial_argument_scale(p) / math.sqrt(qn * gamma_bar)
        total += sf.mellin_value(ker, z, c, _TOWC_DECAY + 0.5, cfg,
                                 label="towc_avg_ber")
    return mod.delta * _towc_prefactor(p) / (2.0 * math.gamma(mod.phi)) * total


# ----------------------------------------------------------------------
# relayed statistics: first-hop marginal + bivariate correction
# ----------------------------------------------------------------------

_JOINT = (sf.JointFactor(0.0, 0.5, -0.5, 1),)


def _contours(cfg_link: MixedLinkConfig) -> tuple[float, float]:
    """Abscissae (c1, c2) with lo2 < c2 < c1 < 0; axis 2 runs in the
    continued strip Re(s2) > -2 where the relay beta-integral identity holds."""
    lo2 = max(-2.0, stack_pole_bound(cfg_link.stack.layers),
              -cfg_link.stack.pe.rho2)
    lo1 = max(_towc_pole_bound(cfg_link.towc), lo2)
    c1 = 0.3 * lo1
    c2 = lo2 + 0.5 * (c1 - lo2)
    if not (lo2 < c2 < c1 < 0.0):
        raise sf.PoleSeparationError(
            f"no admissible bivariate contour pair (lo2={lo2:g}, c1={c1:g})")
    return c1, c2


def _axis2_kernel(cfg_link: MixedLinkConfig):
    stack = cfg_link.stack
    base = stack_mellin_kernel(stack.layers)

    def ker(s):
        return (base(s) + _pointing_log(stack.pe.rho2, s)
                + _lgamma(0.5 * s))

    return ker


def _axis2_arg(cfg_link: MixedLinkConfig) -> float:
    return math.sqrt(cfg_link.C / cfg_link.uwoc_gamma_bar) / cfg_link.stack.pe.A0


def _bracket(cfg_link: MixedLinkConfig, ker1, z1: float,
             decay1: float, cfg: sf.QuadratureConfig) -> float:
    c1, c2 = _contours(cfg_link)
    ker2 = _axis2_kernel(cfg_link)
    d2 = stack_decay_rate(cfg_link.stack.layers) + 0.5
    val = sf.bivariate_mellin_value(ker1, ker2, _JOINT, z1,
                                    _axis2_arg(cfg_link), c1, c2,
                                    decay1 + 0.5, d2 + 0.5, cfg)
    pref = (_towc_prefactor(cfg_link.towc)
            * 0.5 * cfg_link.stack.pe.rho2)
    return pref * val


def mixed_cdf(cfg_link: MixedLinkConfig, gamma: float,
              cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE) -> float:
    """CDF of the end-to-end SNR (Lemma-2-type bivariate closed form)."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if gamma == 0.0:
        return 0.0
    p = cfg_link.towc
    base = _towc_log_kernel(p)

    def ker1(s):
        return (base(s) + _lgamma(-0.5 * s) - _lgamma(1.0 - 0.5 * s)
                - _lgamma(0.5 * s))

    z1 = terrestrial_argument_scale(p) * math.sqrt(
        gamma / cfg_link.towc_gamma_bar)
    marginal = towc_snr_cdf(p, gamma, cfg_link.towc_gamma_bar, cfg)
    corr = _bracket(cfg_link, ker1, z1, _TOWC_DECAY + 1.0, cfg)
    val = marginal + corr
    slack = max(1e-6, 10.0 * cfg.rel_tol)
    if val > 1.0 + slack or val < -slack:
        raise sf.ConvergenceError(f"mixed_cdf out of range: {val}")
    return min(max(val, 0.0), 1.0)


def mixed_pdf(cfg_link: MixedLinkConfig, gamma: float,
              cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE) -> float:
    """Density of the end-to-end SNR."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    p = cfg_link.towc
    base = _towc_log_kernel(p)

    def ker1(s):
        return base(s) - _lgamma(0.5 * s)

    z1 = terrestrial_argument_scale(p) * math.sqrt(
        gamma / cfg_link.towc_gamma_bar)
    marginal = towc_snr_pdf(p, gamma, cfg_link.towc_gamma_bar, cfg)
    corr = _bracket(cfg_link, ker1, z1, _TOWC_DECAY + 1.0, cfg) / gamma
    return marginal + corr


def mixed_outage(cfg_link: MixedLinkConfig, gamma_th: float,
                 cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE) -> float:
    return mixed_cdf(cfg_link, gamma_th, cfg)


def mixed_avg_ber(cfg_link: MixedLinkConfig, mod: ModulationScheme = OOK,
                  cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE) -> float:
    """Average BER of the relayed link via the bivariate closed form."""
    p = cfg_link.towc
    base = _towc_log_kernel(p)

    def ker1(s):
        return (base(s) + _lgamma(-0.5 * s) - _lgamma(1.0 - 0.5 * s)
                - _lgamma(0.5 * s) + _lgamma(mod.phi - 0.5 * s))

    total = 0.0
    for qn in mod.q:
        total += towc_avg_ber_single_q(p, cfg_link.towc_gamma_bar, mod, qn, cfg)
        z1 = terrestrial_argument_scale(p) / math.sqrt(
            qn * cfg_link.towc_gamma_bar)
        corr = _bracket(cfg_link, ker1, z1, _TOWC_DECAY + 1.5, cfg)
        total += mod.delta / (2.0 * math.gamma(mod.phi)) * corr
    return total


def towc_avg_ber_single_q(p: tb.MalagaFogParams, gamma_bar: float,
                          mod: ModulationScheme, qn: float,
                          cfg: sf.QuadratureConfig) -> float:
    base = _towc_log_kernel(p)

    def ker(s):
        return (base(s) + _lgamma(-0.5 * s) - _lgamma(1.0 - 0.5 * s)
                + _lgamma(mod.phi - 0.5 * s))

    c = 0.5 * max(_towc_pole_bound(p), -1.9)
    z = terrestrial_argument_scale(p) / math.sqrt(qn * gamma_bar)
    val = sf.mellin_value(ker, z, c, _TOWC_DECAY + 0.5, cfg,
                          label="towc_avg_ber")
    return mod.delta * _towc_prefactor(p) / (2.0 * math.gamma(mod.phi)) * val


# ----------------------------------------------------------------------
# composition-integral oracle (independent of the bivariate reduction)
# ----------------------------------------------------------------------

def _uwoc_log_grid(cfg_link: MixedLinkConfig, n: int) -> np.ndarray:
    center = math.log(cfg_link.uwoc_gamma_bar * cfg_link.stack.pe.A0 ** 2)
    return np.linspace(center - 50.0, center + 32.0, n)


def composition_cdf(cfg_link: MixedLinkConfig, gamma: float,
                    cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE,
                    n_grid: int = 1600) -> float:
    """F(gamma) = E_x[ F_T(gamma (x+C)/x) ] against the underwater SNR law,
    by direct log-grid quadrature."""
    if gamma == 0.0:
        return 0.0
    u = _uwoc_log_grid(cfg_link, n_grid)
    x = np.exp(u)
    fU = snr_pdf_grid(cfg_link.stack, x, cfg_link.uwoc_gamma_bar, cfg)
    ft_arg = gamma * (x + cfg_link.C) / x
    FT = towc_snr_cdf_grid(cfg_link.towc, ft_arg, cfg_link.towc_gamma_bar, cfg)
    return float(np.trapezoid(FT * fU * x, u))


def composition_pdf(cfg_link: MixedLinkConfig, gamma: float,
                    cfg: sf.QuadratureConfig = sf.DEFAULT_QUADRATURE,
                    n_grid: int = 1600) -> float:
    """f(gamma) = integral f_T(gamma (x+C)/x) f_U(x) (x+C)/x dx."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    u = _uwoc_log_grid(cfg_link, n_grid)
    x = np.exp(u)
    fU = snr_pdf_grid(cfg_link.stack, x, cfg_link.uwoc_gamma_bar, cfg)
    ratio = (x + cfg_link.C) / x
    fT = towc_snr_pdf_grid(cfg_link.towc, gamma * ratio,
                           cfg_link.towc_gamma_bar, cfg)
    return float(np.trapezoid(fT * fU * ratio * x, u))
