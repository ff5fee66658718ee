"""Declarative experiment configs and the runners that turn them into tables.

A config is one JSON document::

    {"experiment": "QuenchHomo",
     "chain": {"N": 256, "alpha": 1.5},
     "profile": {"h_c": 1.0, "C": 3.0},
     "grids": {"N": [64, 128, 256], "tau_Q": [1, 2, 4, 8]},
     "integrator": {"method": "cfet4"},
     "fits": {"window": [2, 32]},
     "output": {"dir": "out", "name": "homo"},
     "seed": 0}

Each runner returns an :class:`ExperimentResult` holding the table (columns,
units, rows) and a list of fit records.  Nothing here touches the file system;
see :func:`write_artifacts`.
"""
from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bdg_dynamics import IntegratorControl, run_homogeneous_sweep, run_inhomogeneous_sweep
from .bdg_static import build_matrices, diagonalize, fwhm, mode_density, static_record
from .ed_oracle import dynamical_exponent, finite_size_fit, scan_minimum_gaps
from .errors import ConfigError, DomainError, LrquenchError
from .model import ChainSpec, FieldProfile, ModelKind, default_margin
from .scaling import (
    CriticalExponents,
    collapse_score,
    crossover_velocity_fit,
    margin_from_epsilon,
    powerlaw_fit,
    shortcut_plan,
)

__all__ = [
    "Experiment",
    "ExperimentConfig",
    "ExperimentResult",
    "parse_config",
    "load_config",
    "default_window",
    "run_experiment",
    "write_artifacts",
]


class Experiment(str, enum.Enum):
    STATIC_GAP = "StaticGap"
    MODE_PROFILE = "ModeProfile"
    QUENCH_HOMO = "QuenchHomo"
    QUENCH_INHOMO = "QuenchInhomo"
    ED_CRITICAL = "EdCritical"
    SHORTCUT = "Shortcut"
    COLLAPSE = "Collapse"


_SECTIONS = ("chain", "profile", "grids", "integrator", "fits", "output")


@dataclass
class ExperimentConfig:
    experiment: Experiment
    chain: dict = field(default_factory=dict)
    profile: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)
    integrator: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    seed: int = 0

    def to_dict(self):
        d = {"experiment": self.experiment.value}
        for name in _SECTIONS:
            d[name] = json.loads(json.dumps(getattr(self, name)))
        d["seed"] = self.seed
        return d

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @property
    def name(self):
        return self.output.get("name", self.experiment.value.lower())

    def chain_spec(self, N=None):
        c = self.chain
        return ChainSpec(N if N is not None else c["N"], c["alpha"], c["normalized"],
                         c["model_kind"], c.get("r_max"))

    def control(self):
        return IntegratorControl(**self.integrator)


@dataclass
class ExperimentResult:
    columns: list
    units: list
    rows: list
    fits: list = field(default_factory=list)


# --- parsing -----------------------------------------------------------------


def _need(section, key, where):
    if key not in section:
        raise ConfigError(f"missing required field {where}.{key}", f"{where}.{key}")
    return section[key]


def _positive_list(values, where, integer=False, minimum=None):
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{where} must be a non-empty list", where)
    out = []
    for i, v in enumerate(values):
        ok = isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v) and v > 0
        if integer:
            ok = ok and int(v) == v
        if minimum is not None:
            ok = ok and v >= minimum
        if not ok:
            kind = "an integer" if integer else "a number"
            bound = f" >= {minimum}" if minimum is not None else " > 0"
            raise ConfigError(f"{where}[{i}] must be {kind}{bound}, got {v!r}", f"{where}[{i}]")
        out.append(int(v) if integer else v)
    return out


def _window(value, where):
    if value is None or value == "auto":
        return value
    if (not isinstance(value, list) or len(value) != 2
            or not all(isinstance(v, (int, float)) for v in value) or not 0 < value[0] < value[1]):
        raise ConfigError(f"{where} must be \"auto\" or [lo, hi] with 0 < lo < hi", where)
    return value


_GRID_RULES = {
    Experiment.STATIC_GAP: {"N": "sizes", "theta": "pos"},
    Experiment.MODE_PROFILE: {"theta": "pos"},
    Experiment.QUENCH_HOMO: {"N": "sizes", "tau_Q": "pos"},
    Experiment.QUENCH_INHOMO: {"theta": "pos"},
    Experiment.ED_CRITICAL: {"N": "sizes"},
    Experiment.SHORTCUT: {"N": "sizes"},
    Experiment.COLLAPSE: {},
}


def parse_config(doc) -> ExperimentConfig:
    """Validate a config mapping and fill every default explicitly.

    Errors raise :class:`ConfigError` whose ``field`` names the offending entry.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", "<root>")
    unknown = set(doc) - {"experiment", "seed", *_SECTIONS}
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown top-level field {key!r}", key)
    try:
        exp = Experiment(_need(doc, "experiment", "<root>"))
    except ValueError:
        raise ConfigError(f"unknown experiment {doc['experiment']!r}; choose from "
                          f"{[e.value for e in Experiment]}", "experiment") from None
    sections = {}
    for name in _SECTIONS:
        sec = doc.get(name, {})
        if not isinstance(sec, dict):
            raise ConfigError(f"{name} must be an object", name)
        sections[name] = dict(sec)
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer", "seed")

    chain = sections["chain"]
    lri = exp is Experiment.ED_CRITICAL
    chain.setdefault("alpha", 2.0 if lri else 1.5)
    chain.setdefault("normalized", not lri)
    chain.setdefault("model_kind", ModelKind.LRI.value if lri else ModelKind.EXTENDED.value)
    chain.setdefault("r_max", None)
    grids = sections["grids"]
    for key, rule in _GRID_RULES[exp].items():
        if key == "N" and key not in grids and "N" in chain:
            grids["N"] = [chain["N"]]
        vals = _need(grids, key, "grids")
        grids[key] = _positive_list(vals, f"grids.{key}", integer=rule == "sizes",
                                    minimum=2 if rule == "sizes" else None)
    if "N" not in chain and exp is not Experiment.COLLAPSE:
        if "N" in grids:
            chain["N"] = grids["N"][-1]
        else:
            raise ConfigError("missing required field chain.N", "chain.N")
    try:
        if exp is not Experiment.COLLAPSE:
            ChainSpec(chain["N"], chain["alpha"], chain["normalized"], chain["model_kind"], chain["r_max"])
            chain["model_kind"] = ModelKind(chain["model_kind"]).value
    except (DomainError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid chain: {exc}", "chain") from None

    prof = sections["profile"]
    prof.setdefault("h_c", 1.0)
    prof.setdefault("C", default_margin(chain.get("model_kind", "extended")))
    for key in prof:
        if key not in ("h_c", "C"):
            raise ConfigError(f"unknown profile field {key!r}; protocol parameters belong in grids",
                              f"profile.{key}")
    for key in ("h_c", "C"):
        v = prof[key]
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            raise ConfigError(f"profile.{key} must be positive, got {v!r}", f"profile.{key}")

    integ = sections["integrator"]
    integ.setdefault("method", "cfet4")
    integ.setdefault("dt", None)
    integ.setdefault("tolerance", 1e-8)
    allowed = {"method", "dt", "tolerance", "renormalize", "samples", "max_steps"}
    for key in integ:
        if key not in allowed:
            raise ConfigError(f"unknown integrator field {key!r}", f"integrator.{key}")
    for key in ("dt", "tolerance"):
        v = integ[key]
        if v is not None and (not isinstance(v, (int, float)) or not v > 0):
            raise ConfigError(f"integrator.{key} must be positive, got {v!r}", f"integrator.{key}")
    try:
        IntegratorControl(**integ)
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"invalid integrator: {exc}", "integrator") from None

    fits = sections["fits"]
    fits.setdefault("window", "auto")
    fits["window"] = _window(fits["window"], "fits.window")
    _experiment_defaults(exp, chain, grids, fits)
    out = sections["output"]
    out.setdefault("dir", ".")
    out.setdefault("name", exp.value.lower())
    if not isinstance(out["name"], str) or not out["name"] or "/" in out["name"]:
        raise ConfigError("output.name must be a plain file stem", "output.name")
    return ExperimentConfig(exp, chain, prof, grids, integ, fits, out, seed)


def _experiment_defaults(exp, chain, grids, fits):
    if exp is Experiment.STATIC_GAP:
        fits.setdefault("collapse_window", None)
    elif exp is Experiment.MODE_PROFILE:
        grids.setdefault("mode", 1)
        fits.setdefault("collapse_range", 5.0)
        if not isinstance(grids["mode"], int) or grids["mode"] < 0:
            raise ConfigError("grids.mode must be a non-negative integer", "grids.mode")
    elif exp is Experiment.QUENCH_HOMO:
        fits.setdefault("collapse_window", None)
        fits["collapse_window"] = _window(fits["collapse_window"], "fits.collapse_window")
    elif exp is Experiment.QUENCH_INHOMO:
        fits.setdefault("vtilde_exponent", -0.407)
        fits.setdefault("s_bounds", [0.05, 0.8])
        fits.setdefault("plateau_window", None)
        fits["plateau_window"] = _window(fits["plateau_window"], "fits.plateau_window")
        fits.setdefault("adiabatic_ratio", 0.125)
        has_v, has_x = "v" in grids, "v_over_vtilde" in grids
        if has_v == has_x:
            raise ConfigError("give exactly one of grids.v or grids.v_over_vtilde", "grids.v")
        key = "v" if has_v else "v_over_vtilde"
        grids[key] = _positive_list(grids[key], f"grids.{key}")
    elif exp is Experiment.ED_CRITICAL:
        grids.setdefault("h_range", [0.5, 3.5])
        grids.setdefault("n_scan", 50)
        grids.setdefault("z_sizes", None)
        hr = grids["h_range"]
        if not isinstance(hr, list) or len(hr) != 2 or not 0 < hr[0] < hr[1]:
            raise ConfigError("grids.h_range must be [lo, hi] with 0 < lo < hi", "grids.h_range")
    elif exp is Experiment.SHORTCUT:
        fits.setdefault("exponents", "extended")
        has_A, has_eps = "A" in grids, "eps0" in grids
        if has_A == has_eps:
            raise ConfigError("give exactly one of grids.A or grids.eps0", "grids.A")
        key = "A" if has_A else "eps0"
        v = grids[key]
        if not isinstance(v, (int, float)) or not v > 0 or (key == "eps0" and not v < 1):
            raise ConfigError(f"grids.{key} out of range: {v!r}", f"grids.{key}")
        src = fits["exponents"]
        if src != "extended":
            if not isinstance(src, dict) or not {"z", "nu"} <= set(src):
                raise ConfigError('fits.exponents must be "extended" or {"z": .., "nu": ..}',
                                  "fits.exponents")
    elif exp is Experiment.COLLAPSE:
        _need(grids, "input", "grids")
        grids.setdefault("kind", "inhomogeneous")
        if grids["kind"] not in ("homogeneous", "inhomogeneous"):
            raise ConfigError("grids.kind must be homogeneous or inhomogeneous", "grids.kind")
        fits.setdefault("s_bounds", [0.05, 0.8])
        chain.setdefault("N", None)


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}: invalid JSON ({exc.msg})", "<json>") from None
    return parse_config(doc)


# --- helpers -----------------------------------------------------------------


def default_window(x):
    """Fit window dropping the extreme ends of a sweep in log space.

    One decade is removed at each end when the sweep spans more than four
    decades; shorter sweeps lose a quarter of their log span at each end.
    """
    lx = np.log10(np.asarray(x, dtype=float))
    lo, hi = lx.min(), lx.max()
    trim = min(1.0, 0.25 * (hi - lo))
    return [float(10 ** (lo + trim)), float(10 ** (hi - trim))]


def _resolve_window(window, x):
    return default_window(x) if window in (None, "auto") else list(window)


def _fit_record(fit, quantity, theory=None, **extra):
    d = fit.to_dict()
    d["quantity"] = quantity
    d["theory_exponent"] = theory
    d.update(extra)
    return d


def _xi_tilde_exponent(alpha):
    return -1.0 / alpha


# --- runners -----------------------------------------------------------------


def _static_gap(cfg, jobs):
    rows = []
    hc = cfg.profile["h_c"]
    for N in cfg.grids["N"]:
        spec = cfg.chain_spec(N)
        for th in cfg.grids["theta"]:
            prof = FieldProfile.static_front(th, (N + 1) / 2.0, h_c=hc)
            rows.append(static_record(spec, prof))
    cols = ["N", "alpha", "theta", "omega0", "omega1", "gap", "fwhm"]
    units = ["sites", "1", "1/site", "J", "J", "J", "sites"]
    fits = []
    alpha = cfg.chain["alpha"]
    for N in cfg.grids["N"]:
        pts = [(r["theta"], r["gap"]) for r in rows if r["N"] == N]
        if len(pts) >= 3:
            win = _resolve_window(cfg.fits["window"], [p[0] for p in pts])
            try:
                f = powerlaw_fit(pts, win)
                fits.append(_fit_record(f, f"gap_vs_theta[N={N}]", (alpha - 1) / alpha))
            except LrquenchError as exc:
                fits.append({"quantity": f"gap_vs_theta[N={N}]", "error": str(exc)})
    if len(cfg.grids["N"]) >= 3:
        th0 = min(cfg.grids["theta"])
        pts = [(r["N"], r["gap"]) for r in rows if r["theta"] == th0]
        f = powerlaw_fit(pts)
        fits.append(_fit_record(f, f"gap_vs_N[theta={th0:g}]", -(alpha - 1)))
    return ExperimentResult(cols, units, [[r[c] for c in cols] for r in rows], fits)


def _mode_profile(cfg, jobs):
    N = cfg.chain["N"]
    spec = cfg.chain_spec()
    alpha = cfg.chain["alpha"]
    n_c = (N + 1) / 2.0
    n = np.arange(1, N + 1)
    rows, curves, widths = [], [], []
    R = cfg.fits["collapse_range"]
    for th in cfg.grids["theta"]:
        modes = diagonalize(build_matrices(spec, FieldProfile.static_front(th, n_c, h_c=cfg.profile["h_c"])))
        d = mode_density(modes, cfg.grids["mode"])
        xi = th ** _xi_tilde_exponent(alpha)
        x, y = (n - n_c) / xi, xi * d
        rows.extend([th, int(k), float(dk), float(xk), float(yk)] for k, dk, xk, yk in zip(n, d, x, y))
        keep = np.abs(x) <= R
        curves.append((x[keep], y[keep]))
        try:
            widths.append((th, fwhm(d)))
        except DomainError:
            pass
    cols = ["theta", "n", "density", "x_scaled", "density_scaled"]
    units = ["1/site", "site", "1/site", "1", "1"]
    fits = []
    if len(widths) >= 3:
        win = _resolve_window(cfg.fits["window"], [w[0] for w in widths])
        try:
            f = powerlaw_fit(widths, win)
            fits.append(_fit_record(f, "fwhm_vs_theta", -1.0 / alpha,
                                    fwhm=[[float(a), float(b)] for a, b in widths]))
        except LrquenchError as exc:
            fits.append({"quantity": "fwhm_vs_theta", "error": str(exc)})
    if len(curves) >= 2:
        fits.append({"quantity": "density_collapse_score",
                     "score": collapse_score(curves, log_x=False),
                     "x_range": [-R, R], "xi_tilde_exponent": _xi_tilde_exponent(alpha)})
    return ExperimentResult(cols, units, rows, fits)


_QUENCH_COLS = ["N", "alpha", "tau_Q", "theta", "v", "d_ex", "E_r", "E_f", "E_gs", "norm_drift", "dt"]
_QUENCH_UNITS = ["sites", "1", "1/J", "1/site", "sites*J", "1/site", "J", "J", "J", "1", "1/J"]


def _quench_rows(results):
    return [[r.to_row().get(c) for c in _QUENCH_COLS] for r in results]


def _homo_collapse(rows, alpha, window=None):
    curves = []
    for N in sorted({r["N"] for r in rows}):
        sub = sorted((r for r in rows if r["N"] == N), key=lambda r: r["tau_Q"])
        x = np.array([r["tau_Q"] for r in sub]) / N ** (2 * (alpha - 1))
        y = np.array([r["d_ex"] for r in sub]) * N
        if window is not None:
            keep = (x >= window[0]) & (x <= window[1])
            x, y = x[keep], y[keep]
        curves.append((x, y))
    return collapse_score(curves)


def _quench_homo(cfg, jobs):
    ctrl = cfg.control()
    alpha = cfg.chain["alpha"]
    results = []
    for N in cfg.grids["N"]:
        results += run_homogeneous_sweep(cfg.chain_spec(N), cfg.grids["tau_Q"], ctrl,
                                         C=cfg.profile["C"], h_c=cfg.profile["h_c"], jobs=jobs)
    table = _quench_rows(results)
    rows = [r.to_row() for r in results]
    fits = []
    theory = -1.0 / (2.0 * (alpha - 1.0))
    for N in cfg.grids["N"]:
        pts = [(r["tau_Q"], r["d_ex"]) for r in rows if r["N"] == N]
        if len(pts) >= 3:
            win = _resolve_window(cfg.fits["window"], [p[0] for p in pts])
            try:
                fits.append(_fit_record(powerlaw_fit(pts, win), f"d_ex_vs_tau_Q[N={N}]", theory))
            except LrquenchError as exc:
                fits.append({"quantity": f"d_ex_vs_tau_Q[N={N}]", "error": str(exc)})
    if len(cfg.grids["N"]) >= 2:
        cw = cfg.fits["collapse_window"]
        fits.append({"quantity": "homogeneous_collapse_score", "score": _homo_collapse(rows, alpha, cw),
                     "x": "tau_Q/N^(2(alpha-1))", "y": "d_ex*N", "window": cw})
    return ExperimentResult(_QUENCH_COLS, _QUENCH_UNITS, table, fits)


def inhomogeneous_analysis(rows, alpha, vtilde_exponent, s_bounds=(0.05, 0.8), plateau_window=None,
                           adiabatic_ratio=0.125):
    """Collapse score, crossover fit, fast-front slope and adiabatic check for front sweeps."""
    fits = []
    y_exp = -1.0 / alpha
    curves = []
    for th in sorted({r["theta"] for r in rows}):
        sub = sorted((r for r in rows if r["theta"] == th), key=lambda r: r["v"])
        vt = th ** vtilde_exponent
        curves.append((np.array([r["v"] for r in sub]) / vt, np.array([r["d_ex"] for r in sub]) * th**y_exp))
    if len(curves) >= 2:
        fits.append({"quantity": "front_collapse_score", "score": collapse_score(curves),
                     "vtilde_exponent": vtilde_exponent})
    try:
        f = crossover_velocity_fit(rows, alpha=alpha, s_bounds=tuple(s_bounds))
        fits.append(_fit_record(f, "v_tilde_exponent_s", f.theory_exponent))
    except LrquenchError as exc:
        fits.append({"quantity": "v_tilde_exponent_s", "error": str(exc)})
    xs = np.concatenate([c[0] for c in curves])
    ys = np.concatenate([c[1] for c in curves])
    if plateau_window is not None:
        try:
            f = powerlaw_fit(np.column_stack([xs, ys]), plateau_window)
            fits.append(_fit_record(f, "fast_front_slope", 1.0 / (2.0 * (alpha - 1.0))))
        except LrquenchError as exc:
            fits.append({"quantity": "fast_front_slope", "error": str(exc)})
    slow = [r["d_ex"] for r in rows if r["v"] <= adiabatic_ratio * r["theta"] ** vtilde_exponent * (1 + 1e-12)]
    fits.append({"quantity": "adiabatic_max_d_ex", "value": max(slow) if slow else None,
                 "v_over_vtilde_max": adiabatic_ratio, "n_points": len(slow)})
    return fits


def _quench_inhomo(cfg, jobs):
    ctrl = cfg.control()
    alpha = cfg.chain["alpha"]
    g, f = cfg.grids, cfg.fits
    if "v" in g:
        v_grid = g["v"]
    else:
        v_grid = {th: [x * th ** f["vtilde_exponent"] for x in g["v_over_vtilde"]] for th in g["theta"]}
    results = run_inhomogeneous_sweep(cfg.chain_spec(), g["theta"], v_grid, ctrl,
                                      C=cfg.profile["C"], h_c=cfg.profile["h_c"], jobs=jobs)
    rows = [r.to_row() for r in results]
    fits = inhomogeneous_analysis(rows, alpha, f["vtilde_exponent"], f["s_bounds"],
                                  f["plateau_window"], f["adiabatic_ratio"])
    return ExperimentResult(_QUENCH_COLS, _QUENCH_UNITS, _quench_rows(results), fits)


def _ed_critical(cfg, jobs):
    c, g = cfg.chain, cfg.grids
    minima = scan_minimum_gaps(g["N"], c["alpha"], tuple(g["h_range"]), c["model_kind"],
                               c["normalized"], n_scan=g["n_scan"])
    cols = ["N", "h_min", "gap_min"]
    units = ["sites", "J", "J"]
    fits = []
    if len(minima) >= 3:
        est = finite_size_fit(minima)
        if g["z_sizes"]:
            est.z, _ = dynamical_exponent(g["z_sizes"], est.h_c_infinity, c["alpha"], c["model_kind"],
                                          c["normalized"])
        d = est.to_dict()
        d["quantity"] = "finite_size_critical_point"
        d["reference"] = {"h_c": 2.528, "nu": 1.3, "z": 0.48}
        fits.append(d)
    return ExperimentResult(cols, units, [list(r) for r in minima], fits)


def _shortcut(cfg, jobs):
    g, src = cfg.grids, cfg.fits["exponents"]
    if src == "extended":
        exp = CriticalExponents.extended(cfg.chain["alpha"])
    else:
        exp = CriticalExponents(z=src["z"], nu=src["nu"])
    A = g["A"] if "A" in g else margin_from_epsilon(g["eps0"])
    cols = ["N", "A", "theta_opt", "N_theta_opt", "T_opt", "tau_Q_adiab", "T_opt_over_tau_Q_adiab"]
    units = ["sites", "1", "1/site", "1", "1/J", "1/J", "1"]
    rows, plans = [], []
    for N in g["N"]:
        p = shortcut_plan(exp, N, A)
        plans.append(p)
        rows.append([N, A, p.theta_opt, N * p.theta_opt, p.T_opt, p.tau_Q_adiab, p.T_opt / p.tau_Q_adiab])
    p = plans[0]
    fits = [{"quantity": "shortcut_exponents", "z": float(exp.z), "nu": float(exp.nu),
             "slope_coefficient": float(p.slope_coefficient), "speedup_exponent": float(p.speedup_exponent),
             "T_opt_exponent": float(p.T_opt_exponent), "tau_adiab_exponent": float(p.tau_adiab_exponent)}]
    return ExperimentResult(cols, units, rows, fits)


def read_table(path):
    """Rows of a CSV written by :func:`write_artifacts`, as dicts of floats."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return [{k: (float(v) if v not in ("", "None") else None) for k, v in row.items()} for row in reader]


def _collapse(cfg, jobs):
    g, f = cfg.grids, cfg.fits
    rows = read_table(g["input"])
    if not rows:
        raise ConfigError("input table is empty", "grids.input")
    alpha = rows[0]["alpha"]
    if g["kind"] == "homogeneous":
        fits = [{"quantity": "homogeneous_collapse_score", "score": _homo_collapse(rows, alpha)}]
    else:
        fits = inhomogeneous_analysis(rows, alpha, f.get("vtilde_exponent", -0.407), f["s_bounds"],
                                      f.get("plateau_window"))
    return ExperimentResult(["quantity", "value"], ["-", "-"],
                            [[d["quantity"], d.get("score", d.get("exponent", d.get("value")))] for d in fits],
                            fits)


_RUNNERS = {
    Experiment.STATIC_GAP: _static_gap,
    Experiment.MODE_PROFILE: _mode_profile,
    Experiment.QUENCH_HOMO: _quench_homo,
    Experiment.QUENCH_INHOMO: _quench_inhomo,
    Experiment.ED_CRITICAL: _ed_critical,
    Experiment.SHORTCUT: _shortcut,
    Experiment.COLLAPSE: _collapse,
}


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    return _RUNNERS[cfg.experiment](cfg, jobs)


# --- artifacts ---------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_artifacts(cfg: ExperimentConfig, result: ExperimentResult, out_dir=None) -> dict:
    """Write ``<name>.csv``, ``<name>.fits.json`` and ``<name>.manifest.json``; return their paths."""
    import scipy
    import sklearn

    out = Path(out_dir if out_dir is not None else cfg.output["dir"])
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write("# units: " + ", ".join(f"{c} [{u}]" for c, u in zip(result.columns, result.units)) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([_fmt(v) for v in row])
    data_path = out / f"{cfg.name}.csv"
    data_path.write_text(buf.getvalue())
    fits_path = out / f"{cfg.name}.fits.json"
    fits_path.write_text(json.dumps(_jsonable(result.fits), indent=2, sort_keys=True) + "\n")
    manifest = {
        "config": cfg.to_dict(),
        "package": "lrquench",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
        "files": {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in (data_path, fits_path)
        },
    }
    man_path = out / f"{cfg.name}.manifest.json"
    man_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return {"data": data_path, "fits": fits_path, "manifest": man_path}
