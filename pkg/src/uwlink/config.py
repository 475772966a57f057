"""Run configuration: JSON schema mirroring the run options, validation that
collects every violation with a field path, preset loading, and resolution
into the analytic / Monte-Carlo objects the CLI drives.
"""

from __future__ import annotations

import copy
import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

import numpy as np

from . import turbulence as tb
from .cascade import UwocStack
from .metrics import (DetectionKind, ModulationScheme, OOK,
                      gamma_bar_from_power_dbm)
from .mixed_link import MixedLinkConfig
from .montecarlo import SimPlan

__all__ = ["ConfigError", "RunConfig", "ResolvedVariant", "parse_config",
           "parse_config_dict", "preset_names", "load_preset",
           "serialize_config"]

PRESET_NAMES = ("fig2a", "fig2b", "fig3a", "fig3b",
                "fig4a", "fig4b", "fig5a", "fig5b")

_METRIC_NAMES = ("outage", "ber", "capacity")


class ConfigError(Exception):
    """Carries every violation found while validating a configuration."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  "
                         + "\n  ".join(self.violations))


class _Checker:
    def __init__(self):
        self.errors: list[str] = []

    def require(self, cond: bool, path: str, msg: str):
        if not cond:
            self.errors.append(f"{path}: {msg}")
        return cond

    def number(self, obj: dict, path: str, key: str, lo=None, hi=None,
               lo_open=False, required=True):
        if key not in obj:
            if required:
                self.errors.append(f"{path}.{key}: missing")
            return None
        v = obj[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            self.errors.append(f"{path}.{key}: must be a number")
            return None
        v = float(v)
        if lo is not None and (v <= lo if lo_open else v < lo):
            bound = f"> {lo}" if lo_open else f">= {lo}"
            self.errors.append(f"{path}.{key}: must be {bound}, got {v:g}")
            return None
        if hi is not None and v > hi:
            self.errors.append(f"{path}.{key}: must be <= {hi}, got {v:g}")
            return None
        return v


def _validate_layer(ch: _Checker, spec: dict, path: str):
    fam = spec.get("family")
    if fam == "gg":
        a = ch.number(spec, path, "a", lo=0, lo_open=True)
        d = ch.number(spec, path, "d", lo=0, lo_open=True)
        p = ch.number(spec, path, "p", lo=0, lo_open=True)
        if None not in (a, d, p):
            return tb.GGParams(a, d, p)
    elif fam == "egg":
        w = ch.number(spec, path, "omega", lo=0.0, hi=1.0)
        lam = ch.number(spec, path, "lam", lo=0, lo_open=True)
        a = ch.number(spec, path, "a", lo=0, lo_open=True)
        d = ch.number(spec, path, "d", lo=0, lo_open=True)
        p = ch.number(spec, path, "p", lo=0, lo_open=True)
        if w is None and "omega" in spec:
            # keep the message explicit about the admissible interval
            pass
        if None not in (w, lam, a, d, p):
            return tb.EGGParams(w, lam, a, d, p)
    elif fam == "ew":
        al = ch.number(spec, path, "alpha", lo=0, lo_open=True)
        be = ch.number(spec, path, "beta", lo=0, lo_open=True)
        eta = ch.number(spec, path, "eta", lo=0, lo_open=True)
        if None not in (al, be, eta):
            return tb.EWParams(al, be, eta)
    elif fam == "gamma_gamma":
        al = ch.number(spec, path, "alpha", lo=0, lo_open=True)
        be = ch.number(spec, path, "beta", lo=0, lo_open=True)
        if None not in (al, be):
            return tb.GammaGammaParams(al, be)
    else:
        ch.errors.append(
            f"{path}.family: must be one of gg, egg, ew, gamma_gamma "
            f"(got {fam!r})")
    return None


@dataclass(frozen=True)
class ResolvedVariant:
    """One curve of a run: fully constructed model objects plus sweeps."""

    name: str
    stack: UwocStack
    sweep_kind: str                   # "snr_db" or "power_dbm"
    sweep_values: tuple[float, ...]   # axis values as written to the CSV
    gamma_bars: tuple[float, ...]     # underwater average SNR per point
    gamma_th: float
    modulation: ModulationScheme
    detection: DetectionKind
    metrics: tuple[str, ...]
    mixed_analytic: MixedLinkConfig | None = None
    mixed_mc: MixedLinkConfig | None = None
    towc_gamma_bars: tuple[float, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    raw: dict
    variants: tuple[ResolvedVariant, ...]
    plan: SimPlan
    outputs: tuple[str, ...]


def _apply_overrides(base: dict, overrides: dict) -> dict:
    out = copy.deepcopy(base)
    for dotted, value in overrides.items():
        node = out
        parts = []
        for token in dotted.split("."):
            if "[" in token:
                name, idx = token[:-1].split("[")
                parts.append((name, int(idx)))
            else:
                parts.append((token, None))
        for name, idx in parts[:-1]:
            node = node[name] if idx is None else node[name][idx]
        name, idx = parts[-1]
        if idx is None:
            node[name] = value
        else:
            node[name][idx] = value
    return out


def _resolve_sweep(ch: _Checker, cfg: dict) -> tuple[str, np.ndarray] | None:
    has_snr = "snr_sweep" in cfg
    has_power = "power_sweep" in cfg
    if has_snr == has_power:
        ch.errors.append(
            "sweep: exactly one of power_sweep, snr_sweep must be present")
        return None
    key = "snr_sweep" if has_snr else "power_sweep"
    sw = cfg[key]
    start = ch.number(sw, key, "start_db" if has_snr else "start_dbm")
    stop = ch.number(sw, key, "stop_db" if has_snr else "stop_dbm")
    pts = sw.get("points")
    if not ch.require(isinstance(pts, int) and pts >= 2, f"{key}.points",
                      "must be an integer >= 2"):
        return None
    if start is None or stop is None or not ch.require(
            stop > start, key, "stop must exceed start"):
        return None
    return key, np.linspace(start, stop, pts)


def _resolve_mixed(ch: _Checker, cfg: dict, rho2_default: float):
    mx_cfg = cfg.get("mixed")
    if mx_cfg is None:
        ch.errors.append("mixed: section required for the mixed scenario")
        return None
    mal = mx_cfg.get("malaga", {})
    alpha = ch.number(mal, "mixed.malaga", "alpha", lo=0, lo_open=True)
    beta_raw = ch.number(mal, "mixed.malaga", "beta", lo=1)
    g = ch.number(mal, "mixed.malaga", "g", lo=0, lo_open=True)
    omega = ch.number(mal, "mixed.malaga", "omega", lo=0)
    fog = mx_cfg.get("fog", {})
    k = ch.number(fog, "mixed.fog", "k", lo=0, lo_open=True)
    if "z" in fog:
        z = ch.number(fog, "mixed.fog", "z", lo=0, lo_open=True)
    else:
        bf = ch.number(fog, "mixed.fog", "beta_f_db_per_km", lo=0,
                       lo_open=True)
        lt = ch.number(mx_cfg, "mixed", "l_T", lo=0, lo_open=True)
        z = (tb.fog_scale_from_attenuation(bf, lt)
             if None not in (bf, lt) else None)
    pt = mx_cfg.get("pointing", {})
    rho2 = ch.number(pt, "mixed.pointing", "rho2", lo=0, lo_open=True,
                     required=False)
    a0 = ch.number(pt, "mixed.pointing", "A0", lo=0, hi=1.0, lo_open=True,
                   required=False)
    c_gain = ch.number(mx_cfg, "mixed", "C", lo=0, lo_open=True,
                       required=False)
    if ch.errors or None in (alpha, beta_raw, g, omega, k, z):
        return None
    rho2 = rho2 if rho2 is not None else rho2_default
    a0 = a0 if a0 is not None else 0.9
    beta = int(beta_raw)
    if beta != beta_raw:
        warnings.warn(f"Malaga beta {beta_raw:g} floored to {beta} for the "
                      "finite mixture form")
    k_int = float(int(k))
    if k_int != k:
        warnings.warn(f"fog shape k={k:g} floored to {k_int:g} on the "
                      "analytic path; samplers keep the exact value")
    amg, b_m = tb.malaga_constants(alpha, beta, g, omega)
    mk = lambda kk: tb.MalagaFogParams(alpha, beta, g, omega, amg, b_m,
                                       kk, z, rho2, a0)
    return {"analytic": mk(k_int), "mc": mk(k),
            "C": c_gain if c_gain is not None else 1.0,
            "l_T": float(mx_cfg.get("l_T", 400.0))}


def parse_config_dict(cfg: dict) -> RunConfig:
    """Validate and resolve a configuration mapping; raises ConfigError with
    the full violation list."""
    ch = _Checker()
    scenario = cfg.get("scenario")
    ch.require(scenario in ("uwoc", "mixed"), "scenario",
               f"must be 'uwoc' or 'mixed', got {scenario!r}")

    plan_cfg = cfg.get("plan", {})
    trials = plan_cfg.get("trials", 10_000_000)
    seed = plan_cfg.get("seed", 20260809)
    workers = plan_cfg.get("workers", 1)
    ch.require(isinstance(trials, int) and trials >= 0, "plan.trials",
               "must be a nonnegative integer")
    ch.require(isinstance(seed, int), "plan.seed", "must be an integer")
    ch.require(isinstance(workers, int) and workers >= 1, "plan.workers",
               "must be a positive integer")

    metrics = tuple(cfg.get("metrics", ["outage", "ber", "capacity"]))
    for m in metrics:
        ch.require(m in _METRIC_NAMES, "metrics",
                   f"unknown metric {m!r} (choose from {_METRIC_NAMES})")

    variants_cfg = cfg.get("variants", [{"name": "default", "overrides": {}}])
    if not isinstance(variants_cfg, list) or not variants_cfg:
        ch.errors.append("variants: must be a nonempty list")
        variants_cfg = []

    resolved: list[ResolvedVariant] = []
    for i, var in enumerate(variants_cfg):
        name = var.get("name", f"variant{i}")
        try:
            merged = _apply_overrides(cfg, var.get("overrides", {}))
        except (KeyError, IndexError, TypeError) as exc:
            ch.errors.append(f"variants[{i}].overrides: cannot apply ({exc})")
            continue
        rv = _resolve_variant(ch, merged, name, metrics)
        if rv is not None:
            resolved.append(rv)

    if ch.errors:
        raise ConfigError(ch.errors)
    plan = SimPlan(trials=max(trials, 10_000), seed=seed, workers=workers)
    if trials == 0:
        plan = None
    return RunConfig(scenario=scenario, raw=copy.deepcopy(cfg),
                     variants=tuple(resolved),
                     plan=plan if plan is not None else SimPlan(
                         trials=10_000, seed=seed, workers=workers),
                     outputs=metrics if trials else metrics)


def _resolve_variant(ch: _Checker, cfg: dict, name: str, metrics) \
        -> ResolvedVariant | None:
    start_errors = len(ch.errors)
    scenario = cfg.get("scenario")

    stack_cfg = cfg.get("stack", {})
    layer_specs = stack_cfg.get("layers")
    layers = []
    if not isinstance(layer_specs, list) or not layer_specs:
        ch.errors.append("stack.layers: must be a nonempty list")
    else:
        for j, ls in enumerate(layer_specs):
            model = _validate_layer(ch, ls, f"stack.layers[{j}]")
            if model is not None:
                layers.append(model)
    pt = stack_cfg.get("pointing", {})
    rho2 = ch.number(pt, "stack.pointing", "rho2", lo=0, lo_open=True)
    a0 = ch.number(pt, "stack.pointing", "A0", lo=0, hi=1.0, lo_open=True)
    path_cfg = stack_cfg.get("path", {"alpha_ext": 0.0, "length": 0.0})
    aext = ch.number(path_cfg, "stack.path", "alpha_ext", lo=0)
    lng = ch.number(path_cfg, "stack.path", "length", lo=0)

    noise = ch.number(cfg, "", "noise_var", lo=0, lo_open=True,
                      required=False) or 1e-14
    gamma_th_db = ch.number(cfg, "", "gamma_th_db", required=False)
    gamma_th = 10.0 ** ((gamma_th_db or 0.0) / 10.0)

    mod_cfg = cfg.get("modulation")
    if mod_cfg is None:
        mod = OOK
    else:
        mm = mod_cfg.get("M", 1)
        dd = ch.number(mod_cfg, "modulation", "delta", lo=0, lo_open=True)
        pp = ch.number(mod_cfg, "modulation", "phi", lo=0, lo_open=True)
        qq = mod_cfg.get("q", [])
        ok = ch.require(isinstance(mm, int) and mm >= 1 and len(qq) == mm,
                        "modulation", "M must match the length of q")
        mod = (ModulationScheme(mm, dd, pp, tuple(float(x) for x in qq))
               if ok and None not in (dd, pp) else OOK)

    det_name = cfg.get("detection", "imdd")
    ch.require(det_name in ("imdd", "hd"), "detection",
               f"must be 'imdd' or 'hd', got {det_name!r}")

    sweep = _resolve_sweep(ch, cfg)
    mixed = _resolve_mixed(ch, cfg, rho2 or 1.0) if scenario == "mixed" else None

    if len(ch.errors) > start_errors:
        return None

    stack = UwocStack(tuple(layers), tb.PointingError(rho2, a0),
                      tb.PathGain(aext, lng))
    sweep_key, values = sweep
    if sweep_key == "snr_sweep":
        normalize = bool(cfg["snr_sweep"].get("normalize_pointing", False))
        gbars = 10.0 ** (values / 10.0)
        if normalize:
            gbars = gbars / a0 ** 2
        towc_gbars = gbars
        kind = "snr_db"
    else:
        path = tb.PathGain(aext, lng)
        gbars = np.array([gamma_bar_from_power_dbm(p, path, noise)
                          for p in values])
        towc_gbars = np.array([gamma_bar_from_power_dbm(
            p, tb.PathGain(0.0, 0.0), noise) for p in values])
        kind = "power_dbm"

    mixed_analytic = mixed_mc = None
    if mixed is not None:
        mk = lambda p: MixedLinkConfig(p, 1.0, stack, 1.0, C=mixed["C"],
                                       l_T=mixed["l_T"])
        mixed_analytic = mk(mixed["analytic"])
        mixed_mc = mk(mixed["mc"])

    det = DetectionKind(det_name)
    return ResolvedVariant(
        name=name, stack=stack, sweep_kind=kind,
        sweep_values=tuple(float(v) for v in values),
        gamma_bars=tuple(float(g) for g in gbars),
        gamma_th=gamma_th, modulation=mod, detection=det,
        metrics=tuple(metrics), mixed_analytic=mixed_analytic,
        mixed_mc=mixed_mc,
        towc_gamma_bars=tuple(float(g) for g in towc_gbars))


def parse_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"<file>: not valid JSON ({exc})"]) from exc
    return parse_config_dict(cfg)


def serialize_config(raw: dict) -> str:
    return json.dumps(raw, indent=2, sort_keys=True) + "\n"


def preset_names() -> tuple[str, ...]:
    return PRESET_NAMES


def load_preset(name: str) -> dict:
    if name not in PRESET_NAMES:
        raise ConfigError([f"preset: unknown name {name!r} "
                           f"(available: {', '.join(PRESET_NAMES)})"])
    text = resources.files("uwlink.presets").joinpath(f"{name}.json").read_text()
    return json.loads(text)
