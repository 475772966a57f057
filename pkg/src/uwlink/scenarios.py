"""Measured channel parameter sets used by the presets, the validation
registry, and the test-suite.  Values are the fitted constants of the
measurement campaigns behind the four fading families, the Malaga
atmospheric sets, and the fog conditions.
"""

from __future__ import annotations

import math

from . import turbulence as tb
from .cascade import UwocStack

# five-layer generalized Gamma fit (one entry per 10 m layer)
GG5_A = (0.6302, 1.0750, 1.0173, 0.7598, 1.0990)
GG5_D = (1.1780, 3.2048, 1.6668, 2.3270, 4.5550)
GG5_P = (0.8444, 2.9222, 1.0380, 1.4353, 4.6208)

# variant with the first layer refit at a higher shape d
GG5_D_MOD = (2.6108,) + GG5_D[1:]

# five-layer exponential-GG mixture fit
EGG5_OMEGA = (0.2130, 0.2108, 0.1807, 0.1665, 0.4589)
EGG5_LAMBDA = (0.3291, 0.2694, 0.1641, 0.1207, 0.3449)
EGG5_DP = (1.4299, 0.6020, 0.2334, 0.1559, 1.0421)
EGG5_A = (1.1817, 1.2795, 1.4201, 1.5216, 1.5768)
EGG5_PP = (17.1984, 21.1611, 22.5924, 22.8754, 35.9424)

# single-layer mixture fits (the second pairs with the fifth layer above;
# the first keeps the published mixture weights, branch shared by convention)
EGG1_SETS = (
    {"omega": 0.1770, "lam": 0.4687, "a": 1.5768, "d": 1.0421 * 35.9424,
     "p": 35.9424},
    {"omega": 0.4589, "lam": 0.3449, "a": 1.5768, "d": 1.0421 * 35.9424,
     "p": 35.9424},
)

EW_SET = {"alpha": 2.50, "beta": 0.70, "eta": 0.50}
GAMMAGAMMA_SET = {"alpha": 5.0, "beta": 1.18}

POINTING_A0 = 0.0032
TOWC_A0 = 0.9

# (alpha, beta) Malaga pairs for weak / moderate / strong turbulence;
# beta floors to an integer for the finite mixture form
MALAGA_SETS = ((4.5916, 7), (2.3378, 4), (1.4321, 3))
MALAGA_G = 0.0872        # 2*b0*(1-rho) with b0=0.1079, rho=0.596
MALAGA_OMEGA = 1.4551    # Omega' at Omega=1.3265, theta=pi/2

# fog shape k and attenuation beta_f (dB/km): light and moderate
FOG_SETS = ({"k": 13.0, "beta_f": 2.0}, {"k": 12.0, "beta_f": 5.0})
FOG_K_EXACT = (13.12, 12.06)

NOISE_VAR = 1e-14
EXTINCTION = 0.056
L_UW = 50.0
L_TERR = 400.0


def gg_layers(d_set=GG5_D) -> tuple[tb.GGParams, ...]:
    return tuple(tb.GGParams(a, d, p) for a, d, p in zip(GG5_A, d_set, GG5_P))


def egg_layers() -> tuple[tb.EGGParams, ...]:
    return tuple(
        tb.EGGParams(w, lam, a, dp * p, p)
        for w, lam, dp, a, p in zip(EGG5_OMEGA, EGG5_LAMBDA, EGG5_DP,
                                    EGG5_A, EGG5_PP))


def ew_layers(n: int = 5) -> tuple[tb.EWParams, ...]:
    return (tb.EWParams(**EW_SET),) * n


def gammagamma_layers(n: int = 5) -> tuple[tb.GammaGammaParams, ...]:
    return (tb.GammaGammaParams(**GAMMAGAMMA_SET),) * n


def uwoc_stack(layers, rho2: float = 1.0, a0: float = POINTING_A0,
               with_path: bool = True) -> UwocStack:
    path = tb.PathGain(EXTINCTION, L_UW) if with_path else tb.PathGain(0.0, 0.0)
    return UwocStack(tuple(layers), tb.PointingError(rho2, a0), path)


def malaga_fog(setting: int = 1, fog: int = 0, rho2: float = 1.0,
               a0: float = TOWC_A0, k_override: float | None = None
               ) -> tb.MalagaFogParams:
    alpha, beta = MALAGA_SETS[setting]
    amg, b_m = tb.malaga_constants(alpha, beta, MALAGA_G, MALAGA_OMEGA)
    f = FOG_SETS[fog]
    z = tb.fog_scale_from_attenuation(f["beta_f"], L_TERR)
    k = f["k"] if k_override is None else k_override
    return tb.MalagaFogParams(alpha, beta, MALAGA_G, MALAGA_OMEGA, amg, b_m,
                              k, z, rho2, a0)
