"""Kibble-Zurek scaling algebra, power-law fits, data collapse and the shortcut plan.

All scales are proportionalities with unit prefactor; only exponents carry
physics.  Exponent helpers are written with plain arithmetic so they accept
:class:`fractions.Fraction` inputs and then return exact rationals.

The fitting tools follow the scikit-learn estimator protocol (``fit`` returns
``self``, learned attributes end in ``_``, ``get_params``/``set_params`` come
from :class:`~sklearn.base.BaseEstimator`) so they can be cloned, grid-searched
or dropped into pipelines.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import curve_fit, golden
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_consistent_length, check_is_fitted

from .errors import DomainError, FitError

__all__ = [
    "ExponentSource",
    "CriticalExponents",
    "KzScales",
    "ScalingFit",
    "ShortcutPlan",
    "kz_exponents",
    "kz_scales",
    "PowerLawFit",
    "powerlaw_fit",
    "collapse_score",
    "FiniteSizeScaling",
    "CollapseExponentSearch",
    "crossover_velocity_fit",
    "shortcut_plan",
    "shortcut_total_time",
    "margin_from_epsilon",
]


class ExponentSource(str, enum.Enum):
    EXACT_EXTENDED = "exact_extended"
    FITTED_ED = "fitted_ed"
    USER = "user"


@dataclass(frozen=True)
class CriticalExponents:
    z: object
    nu: object
    alpha: object = None
    h_c: float = 1.0
    source: ExponentSource = ExponentSource.USER

    def __post_init__(self):
        if not self.z > 0 or not self.nu > 0:
            raise DomainError(f"z and nu must be positive, got z={self.z}, nu={self.nu}")
        object.__setattr__(self, "source", ExponentSource(self.source))
        if self.source is ExponentSource.EXACT_EXTENDED:
            a = self.alpha
            if a is None or self.z != a - 1 or self.nu != 1 / (a - 1) or self.h_c != 1:
                raise DomainError("exact extended exponents need z = alpha-1, nu = 1/(alpha-1), h_c = 1")

    @classmethod
    def extended(cls, alpha):
        """Exact exponents of the extended chain, valid for ``1 < alpha < 3``."""
        if not 1 < alpha < 3:
            raise DomainError(f"extended-chain exponents need 1 < alpha < 3, got {alpha}")
        return cls(z=alpha - 1, nu=1 / (alpha - 1), alpha=alpha, h_c=1,
                   source=ExponentSource.EXACT_EXTENDED)


def kz_exponents(z, nu) -> dict:
    """Exponents of the six KZ scales; homogeneous ones in ``tau_Q``, spatial ones in ``theta``."""
    return {
        "xi_hat": nu / (1 + z * nu),
        "t_hat": z * nu / (1 + z * nu),
        "v_hat": (1 - z) * nu / (1 + z * nu),
        "xi_tilde": -nu / (1 + nu),
        "delta_tilde": z * nu / (1 + nu),
        "v_tilde": (z - 1) * nu / (1 + nu),
    }


@dataclass
class KzScales:
    exponents: dict
    tau_Q: float | None = None
    theta: float | None = None
    xi_hat: float | None = None
    t_hat: float | None = None
    v_hat: float | None = None
    xi_tilde: float | None = None
    delta_tilde: float | None = None
    v_tilde: float | None = None
    flags: list = field(default_factory=list)


def kz_scales(exp: CriticalExponents, tau_Q: float | None = None, theta: float | None = None) -> KzScales:
    """Numeric KZ scales (unit prefactors) at a quench time and/or front slope."""
    if tau_Q is None and theta is None:
        raise DomainError("give tau_Q, theta or both")
    for name, val in (("tau_Q", tau_Q), ("theta", theta)):
        if val is not None and not val > 0:
            raise DomainError(f"{name} must be positive, got {val}")
    ex = kz_exponents(exp.z, exp.nu)
    out = KzScales(exponents=ex, tau_Q=tau_Q, theta=theta)
    if tau_Q is not None:
        for key in ("xi_hat", "t_hat", "v_hat"):
            setattr(out, key, float(tau_Q) ** float(ex[key]))
    if theta is not None:
        for key in ("xi_tilde", "delta_tilde", "v_tilde"):
            setattr(out, key, float(theta) ** float(ex[key]))
    if exp.z >= 1:
        out.flags.append("z >= 1: v_tilde does not decrease with theta")
    return out


# --- power laws --------------------------------------------------------------


@dataclass
class ScalingFit:
    exponent: float
    prefactor: float
    window: tuple
    residual: float
    covariance: np.ndarray | None = None
    quantity: str = ""
    theory_exponent: float | None = None
    n_points: int = 0

    def to_dict(self):
        d = asdict(self)
        d["covariance"] = None if self.covariance is None else np.asarray(self.covariance).tolist()
        d["window"] = [float(w) for w in self.window]
        return d


def _positive_pair(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    check_consistent_length(x, y)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("power-law data must be finite")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("power-law data must be strictly positive")
    return x, y


class PowerLawFit(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``y = prefactor * x**exponent`` in log-log space.

    Parameters
    ----------
    window : (lo, hi) or None
        Only points with ``lo <= x <= hi`` enter the fit.
    """

    def __init__(self, window=None):
        self.window = window

    def fit(self, X, y):
        x, y = _positive_pair(np.asarray(X, dtype=float).ravel(), y)
        lo, hi = self.window if self.window is not None else (x.min(), x.max())
        keep = (x >= lo) & (x <= hi)
        if keep.sum() < 3:
            raise FitError(f"need at least 3 points inside window ({lo}, {hi}), got {keep.sum()}")
        lx, ly = np.log(x[keep]), np.log(y[keep])
        design = np.column_stack([lx, np.ones_like(lx)])
        coef, _, rank, _ = np.linalg.lstsq(design, ly, rcond=None)
        if rank < 2:
            raise FitError("degenerate power-law fit: all x values coincide")
        resid = ly - design @ coef
        dof = max(keep.sum() - 2, 1)
        s2 = float(resid @ resid) / dof
        self.covariance_ = s2 * np.linalg.inv(design.T @ design)
        self.exponent_ = float(coef[0])
        self.prefactor_ = float(np.exp(coef[1]))
        self.residual_ = float(np.sqrt(np.mean(resid**2)))
        self.window_ = (float(lo), float(hi))
        self.n_points_ = int(keep.sum())
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        return self.prefactor_ * np.asarray(X, dtype=float).ravel() ** self.exponent_

    def to_fit(self, quantity="", theory_exponent=None) -> ScalingFit:
        check_is_fitted(self, "exponent_")
        return ScalingFit(self.exponent_, self.prefactor_, self.window_, self.residual_,
                          self.covariance_, quantity, theory_exponent, self.n_points_)


def powerlaw_fit(points, window=None, quantity="", theory_exponent=None) -> ScalingFit:
    """Fit ``[(x, y), ...]`` to a power law; see :class:`PowerLawFit`."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("points must be a sequence of (x, y) pairs")
    est = PowerLawFit(window=window).fit(pts[:, 0], pts[:, 1])
    return est.to_fit(quantity, theory_exponent)


# --- data collapse -----------------------------------------------------------


def collapse_score(curves, log_x: bool = True, n_grid: int = 64) -> float:
    """Spread between rescaled curves; 0 means perfect collapse.

    Each curve is an ``(x, y)`` pair of arrays.  All curves are linearly
    interpolated onto a common grid over their overlapping x range (uniform in
    ``log x`` by default); the score is the root-mean-square of the across-curve
    standard deviation, divided by the mean ``|y|`` on the grid.
    """
    if len(curves) < 2:
        raise DomainError("collapse needs at least two curves")
    prepared = []
    for x, y in curves:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        check_consistent_length(x, y)
        if log_x:
            if np.any(x <= 0):
                raise DomainError("log-x collapse needs positive x")
            x = np.log(x)
        order = np.argsort(x)
        prepared.append((x[order], y[order]))
    lo = max(x[0] for x, _ in prepared)
    hi = min(x[-1] for x, _ in prepared)
    if not hi > lo:
        raise DomainError("curves have no overlapping x range")
    grid = np.linspace(lo, hi, n_grid)
    Y = np.array([np.interp(grid, x, y) for x, y in prepared])
    scale = np.mean(np.abs(Y))
    if scale == 0:
        return 0.0
    spread = np.sqrt(np.mean(np.var(Y, axis=0)))
    return float(spread / scale)


class CollapseExponentSearch(BaseEstimator):
    """Find the velocity-scale exponent that best collapses moving-front sweeps.

    Rescales each slope's curve to ``x = v / theta**(-s)`` and
    ``y = d_ex * theta**(-y_exponent)``, then minimizes :func:`collapse_score`
    over ``s`` by a coarse scan followed by golden-section refinement.

    ``fit(X, y)`` takes ``X`` with columns ``(theta, v)`` and ``y = d_ex``.
    """

    def __init__(self, y_exponent=2.0 / 3.0, s_bounds=(0.0, 1.0), n_scan=41, xtol=1e-5,
                 min_contrast=0.05, log_x=True):
        self.y_exponent = y_exponent
        self.s_bounds = s_bounds
        self.n_scan = n_scan
        self.xtol = xtol
        self.min_contrast = min_contrast
        self.log_x = log_x

    def _curves(self, X, y, s):
        curves = []
        for th in np.unique(X[:, 0]):
            sel = X[:, 0] == th
            curves.append((X[sel, 1] * th**s, y[sel] * th ** (-self.y_exponent)))
        return curves

    def score_at(self, X, y, s):
        return collapse_score(self._curves(np.asarray(X, float), np.asarray(y, float), s),
                              log_x=self.log_x)

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        check_consistent_length(X, y)
        if X.ndim != 2 or X.shape[1] != 2:
            raise DomainError("X must have columns (theta, v)")
        if len(np.unique(X[:, 0])) < 2:
            raise DomainError("need curves for at least two slopes")

        def score(s):
            try:
                return self.score_at(X, y, s)
            except DomainError:
                return np.inf

        s_grid = np.linspace(*self.s_bounds, self.n_scan)
        scores = np.array([score(s) for s in s_grid])
        finite = np.isfinite(scores)
        if finite.sum() < 3:
            raise FitError("curves overlap for too few trial exponents")
        lo, hi = scores[finite].min(), scores[finite].max()
        if hi - lo < self.min_contrast * hi:
            raise FitError(f"inconclusive collapse: score varies only {lo:.4g}..{hi:.4g}")
        i = int(np.argmin(np.where(finite, scores, np.inf)))
        if i == 0 or i == len(s_grid) - 1:
            raise FitError(f"best exponent {s_grid[i]:.4g} lies on the search boundary")
        s_best = golden(score, brack=(s_grid[i - 1], s_grid[i], s_grid[i + 1]), tol=self.xtol)
        self.s_ = float(s_best)
        self.score_ = float(score(s_best))
        self.landscape_ = np.column_stack([s_grid, scores])
        return self


def crossover_velocity_fit(records, alpha=None, y_exponent=None, s_bounds=(0.0, 1.0),
                           theory_exponent=None, **kwargs) -> ScalingFit:
    """Exponent ``s`` of ``v_tilde ~ theta**(-s)`` from moving-front sweep records.

    ``records`` are mappings (or QuenchResult rows) with ``theta``, ``v`` and
    ``d_ex``.  For the extended chain pass ``alpha``: the density is then scaled
    by ``theta**(-1/alpha)`` and the theory value ``(2-alpha)/alpha`` is reported.
    """
    rows = [r.to_row() if hasattr(r, "to_row") else r for r in records]
    thetas = sorted({r["theta"] for r in rows})
    if len(thetas) < 4:
        raise DomainError(f"crossover fit needs sweeps over at least 4 slopes, got {len(thetas)}")
    if y_exponent is None:
        if alpha is None:
            raise DomainError("give alpha or y_exponent")
        y_exponent = 1.0 / alpha
    if theory_exponent is None and alpha is not None:
        theory_exponent = (2.0 - alpha) / alpha
    X = np.array([[r["theta"], r["v"]] for r in rows], dtype=float)
    y = np.array([r["d_ex"] for r in rows], dtype=float)
    est = CollapseExponentSearch(y_exponent=y_exponent, s_bounds=s_bounds, **kwargs).fit(X, y)
    return ScalingFit(exponent=est.s_, prefactor=1.0, window=tuple(s_bounds), residual=est.score_,
                      quantity="v_tilde_exponent_s", theory_exponent=theory_exponent,
                      n_points=len(rows))


# --- finite-size scaling -----------------------------------------------------


def _shifted_power(N, h_inf, c, nu):
    return h_inf + c * N ** (-1.0 / nu)


class FiniteSizeScaling(RegressorMixin, BaseEstimator):
    """Weighted fit of ``h(N) = h_inf + c * N**(-1/nu)``, weight of each point proportional to N.

    The starting point comes from a scan over ``nu`` with the linear parameters
    solved exactly; the nonlinear least squares then refines all three.
    """

    def __init__(self, p0=None, nu_scan=(0.2, 6.0), n_scan=200):
        self.p0 = p0
        self.nu_scan = nu_scan
        self.n_scan = n_scan

    def _initial(self, N, h, w):
        best = None
        for nu in np.geomspace(*self.nu_scan, self.n_scan):
            design = np.column_stack([np.ones_like(N), N ** (-1.0 / nu)]) * np.sqrt(w)[:, None]
            coef, *_ = np.linalg.lstsq(design, h * np.sqrt(w), rcond=None)
            r = np.sum((design @ coef - h * np.sqrt(w)) ** 2)
            if best is None or r < best[0]:
                best = (r, coef[0], coef[1], nu)
        return best[1:]

    def fit(self, X, y):
        N = np.asarray(X, dtype=float).ravel()
        h = np.asarray(y, dtype=float).ravel()
        check_consistent_length(N, h)
        if len(np.unique(N)) < 3:
            raise DomainError("finite-size fit needs at least 3 distinct sizes")
        if np.any(N <= 0) or not np.all(np.isfinite(h)):
            raise DomainError("sizes must be positive and values finite")
        w = N / N.sum()
        p0 = self.p0 if self.p0 is not None else self._initial(N, h, w)
        try:
            popt, pcov = curve_fit(_shifted_power, N, h, p0=p0, sigma=1.0 / np.sqrt(w),
                                   maxfev=20000, xtol=1e-15, ftol=1e-15)
        except (RuntimeError, ValueError) as exc:
            raise FitError(f"finite-size fit did not converge: {exc}") from exc
        jac = np.column_stack([
            np.ones_like(N),
            N ** (-1.0 / popt[2]),
            popt[1] * N ** (-1.0 / popt[2]) * np.log(N) / popt[2] ** 2,
        ]) * np.sqrt(w)[:, None]
        cond = np.linalg.cond(jac)
        if not np.all(np.isfinite(pcov)) and len(N) > 3:
            raise FitError(f"singular finite-size fit (Jacobian condition number {cond:.3e})")
        self.h_inf_, self.c_, self.nu_ = map(float, popt)
        self.covariance_ = pcov
        self.condition_ = float(cond)
        r = (h - _shifted_power(N, *popt)) * np.sqrt(w)
        self.residual_ = float(np.sqrt(np.sum(r**2)))
        return self

    def predict(self, X):
        check_is_fitted(self, "nu_")
        return _shifted_power(np.asarray(X, dtype=float).ravel(), self.h_inf_, self.c_, self.nu_)


# --- shortcut to adiabaticity -----------------------------------------------


@dataclass
class ShortcutPlan:
    A: float
    N: int
    theta_opt: float
    T_opt: float
    tau_Q_adiab: float
    speedup_exponent: object
    T_opt_exponent: object
    tau_adiab_exponent: object
    slope_coefficient: object

    def to_dict(self):
        return {k: (float(v) if isinstance(v, (int, float)) or hasattr(v, "numerator") else v)
                for k, v in asdict(self).items()}


def margin_from_epsilon(eps0: float) -> float:
    """Overhead constant ``A = 2 atanh(eps0)`` for a tanh front started at ``h = 1 + eps0``."""
    if not 0 < eps0 < 1:
        raise DomainError("eps0 must lie in (0, 1)")
    return 2.0 * math.atanh(eps0)


def shortcut_total_time(theta, N, A, exp: CriticalExponents):
    """Adiabatic crossing time ``N/v_tilde + A/(theta v_tilde)`` with ``v_tilde = theta**((z-1) nu/(1+nu))``."""
    theta = np.asarray(theta, dtype=float)
    v_tilde = theta ** float((exp.z - 1) * exp.nu / (1 + exp.nu))
    return N / v_tilde + A / (theta * v_tilde)


def shortcut_plan(exp: CriticalExponents, N: int, A: float) -> ShortcutPlan:
    """Optimal front slope and the resulting speed-up over a homogeneous ramp."""
    z, nu = exp.z, exp.nu
    if z >= 1:
        raise DomainError(f"no interior optimum of the crossing time for z >= 1 (z={z})")
    if not N > 0 or not A > 0:
        raise DomainError("N and A must be positive")
    coeff = (1 + z * nu) / ((1 - z) * nu)
    theta_opt = A * float(coeff) / N
    return ShortcutPlan(
        A=A,
        N=N,
        theta_opt=theta_opt,
        T_opt=float(shortcut_total_time(theta_opt, N, A, exp)),
        tau_Q_adiab=float(N) ** float((1 + z * nu) / nu),
        speedup_exponent=-(1 + z * nu) / (nu * (1 + nu)),
        T_opt_exponent=(1 + z * nu) / (1 + nu),
        tau_adiab_exponent=(1 + z * nu) / nu,
        slope_coefficient=coeff,
    )
