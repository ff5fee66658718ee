"""Brute-force many-body reference for small chains.

Spin configurations are stored as integers; bit ``n-1`` set means site ``n``
points down (``sz = -1``).  The parity ``prod_n sz_n`` is then ``(-1)**popcount``.
Both the extended chain (with its ``sz`` strings) and the plain long-range Ising
chain are supported, in the full space or in either parity sector.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import golden
from scipy.sparse.linalg import eigsh

from .bdg_static import resolve_fields
from .errors import AmbiguousMinimumError, DomainError, IntegrationError, NumericError, ResourceError
from .model import ChainSpec, FieldProfile, ModelKind, ProtocolWindow, fields

__all__ = [
    "Sector",
    "ManyBodyHamiltonian",
    "CriticalEstimate",
    "ExactEvolution",
    "build_hamiltonian",
    "spectrum",
    "sector_gap",
    "locate_minimum",
    "minimum_gap_location",
    "scan_minimum_gaps",
    "finite_size_fit",
    "dynamical_exponent",
    "evolve_exact",
    "parity_expectation",
    "DEFAULT_SIZE_CAP",
    "DEFAULT_EVOLUTION_CAP",
]

log = logging.getLogger(__name__)

DEFAULT_SIZE_CAP = 14
DEFAULT_EVOLUTION_CAP = 12
_DENSE_LIMIT = 1024


class Sector(str, enum.Enum):
    FULL = "full"
    EVEN = "even"
    ODD = "odd"


@dataclass(frozen=True)
class ManyBodyHamiltonian:
    N: int
    model_kind: ModelKind
    sector: Sector
    matrix: sp.csr_matrix
    basis: np.ndarray

    @property
    def dim(self):
        return self.matrix.shape[0]

    def dense(self):
        return self.matrix.toarray()

    def parity_diagonal(self):
        return 1.0 - 2.0 * (np.bitwise_count(self.basis) % 2)


def _basis(N, sector):
    states = np.arange(2**N, dtype=np.int64)
    if sector is Sector.FULL:
        return states
    odd = np.bitwise_count(states) % 2
    return states[odd == (1 if sector is Sector.ODD else 0)]


def _full_operator_parts(spec):
    """Field part (per-site diagonal) and coupling part as sparse matrices."""
    N = spec.N
    states = np.arange(2**N, dtype=np.int64)
    J = spec.couplings()
    rows, cols, vals = [], [], []
    for n in range(N):
        for m in range(n + 1, N):
            Jr = J[m - n - 1]
            if Jr == 0.0:
                continue
            flipped = states ^ ((1 << n) | (1 << m))
            amp = np.full(states.shape, -Jr)
            if spec.model_kind is ModelKind.EXTENDED and m - n > 1:
                between = ((1 << m) - 1) ^ ((1 << (n + 1)) - 1)
                amp = amp * (1.0 - 2.0 * (np.bitwise_count(states & between) % 2))
            rows.append(flipped)
            cols.append(states)
            vals.append(amp)
    dim = 2**N
    if rows:
        coupling = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
        )
    else:
        coupling = sp.csr_matrix((dim, dim))
    sz = 1.0 - 2.0 * ((states[:, None] >> np.arange(N)) & 1)
    return sz, coupling


class _HamiltonianFamily:
    """Caches the field-independent parts so ``H(h)`` is cheap to rebuild."""

    def __init__(self, spec, sector):
        self.spec = spec
        self.sector = Sector(sector)
        self.basis = _basis(spec.N, self.sector)
        sz, coupling = _full_operator_parts(spec)
        self.sz = sz[self.basis]
        self.coupling = coupling[self.basis][:, self.basis].tocsr()
        self._coupling_dense = None

    def diagonal(self, h):
        return -(self.sz @ h)

    def sparse(self, h):
        return (self.coupling + sp.diags(self.diagonal(h))).tocsr()

    def dense(self, h):
        if self._coupling_dense is None:
            self._coupling_dense = self.coupling.toarray()
        H = self._coupling_dense.copy()
        H[np.diag_indices_from(H)] += self.diagonal(h)
        return H


def _check_cap(N, cap, what):
    if N > cap:
        raise ResourceError(f"{what} limited to N <= {cap}, got N={N}")


def build_hamiltonian(spec: ChainSpec, profile, t: float = 0.0, sector="full",
                      size_cap: int = DEFAULT_SIZE_CAP) -> ManyBodyHamiltonian:
    """Spin-basis Hamiltonian; ``profile`` may be a FieldProfile, scalar or field array."""
    _check_cap(spec.N, size_cap, "exact diagonalization")
    fam = _HamiltonianFamily(spec, sector)
    h = resolve_fields(spec, profile, t)
    return ManyBodyHamiltonian(spec.N, spec.model_kind, fam.sector, fam.sparse(h), fam.basis)


def _lowest(H, k, dim):
    if dim <= _DENSE_LIMIT or k >= dim - 1:
        dense = H.toarray() if sp.issparse(H) else H
        return np.linalg.eigvalsh(dense)[:k]
    try:
        vals = eigsh(H, k=k, which="SA", tol=1e-13, return_eigenvectors=False)
    except Exception as exc:
        raise NumericError(f"Lanczos failed for dim={dim}: {exc}") from exc
    return np.sort(vals)


def spectrum(h: ManyBodyHamiltonian, k: int | None = None) -> np.ndarray:
    """The ``k`` lowest eigenvalues (all of them when ``k`` is None), ascending."""
    k = h.dim if k is None else int(k)
    if not 1 <= k <= h.dim:
        raise DomainError(f"k must be in [1, {h.dim}], got {k}")
    return _lowest(h.matrix, k, h.dim)


def sector_gap(spec: ChainSpec, profile, t: float = 0.0, sector="even") -> float:
    """``E_1 - E_0`` inside one parity sector."""
    E = spectrum(build_hamiltonian(spec, profile, t, sector), 2)
    return float(E[1] - E[0])


def locate_minimum(g, x_range, n_scan: int = 50, xtol: float = 1e-5):
    """Minimum of a scalar function: coarse scan, then golden section.

    Returns ``(x_min, g_min)``.  Raises AmbiguousMinimumError unless the scan
    sees exactly one interior local minimum.
    """
    lo, hi = map(float, x_range)
    if not hi > lo:
        raise DomainError("search range must be increasing")
    xs = np.linspace(lo, hi, n_scan)
    gs = np.array([g(x) for x in xs])
    interior = [i for i in range(1, n_scan - 1) if gs[i] <= gs[i - 1] and gs[i] <= gs[i + 1]]
    if len(interior) != 1:
        raise AmbiguousMinimumError(
            f"expected one interior minimum on [{lo}, {hi}], found {len(interior)}",
            minima=[(float(xs[i]), float(gs[i])) for i in interior]
            or [(float(xs[np.argmin(gs)]), float(gs.min()))],
        )
    i = interior[0]
    x_min = golden(g, brack=(xs[i - 1], xs[i], xs[i + 1]), tol=xtol / max(abs(xs[i]), 1.0) / 4)
    return float(x_min), float(g(x_min))


def minimum_gap_location(spec: ChainSpec, h_range, sector="even", n_scan: int = 50,
                         xtol: float = 1e-5):
    """Uniform field minimizing the sector gap; see :func:`locate_minimum`.

    Returns ``(h_min, gap_min)``.
    """
    _check_cap(spec.N, DEFAULT_SIZE_CAP, "exact diagonalization")
    fam = _HamiltonianFamily(spec, sector)
    ones = np.ones(spec.N)

    def g(x):
        E = _lowest(fam.sparse(x * ones), 2, len(fam.basis))
        return float(E[1] - E[0])

    return locate_minimum(g, h_range, n_scan, xtol)


def scan_minimum_gaps(sizes, alpha=2.0, h_range=(0.5, 3.5), model_kind="lri",
                      normalized=False, **kwargs):
    """``[(N, h_min, gap_min), ...]`` for uniform-field chains of several sizes."""
    rows = []
    for N in sizes:
        spec = ChainSpec(N, alpha, normalized=normalized, model_kind=model_kind)
        h_min, g_min = minimum_gap_location(spec, h_range, **kwargs)
        log.info("N=%d  h_min=%.6f  gap=%.6f", N, h_min, g_min)
        rows.append((N, h_min, g_min))
    return rows


@dataclass
class CriticalEstimate:
    h_c_infinity: float
    nu: float
    c: float
    per_size_minima: list
    covariance: np.ndarray
    residual: float
    z: float | None = None

    def to_dict(self):
        return {
            "h_c_infinity": self.h_c_infinity,
            "nu": self.nu,
            "c": self.c,
            "z": self.z,
            "residual": self.residual,
            "covariance": np.asarray(self.covariance).tolist(),
            "per_size_minima": [list(map(float, row)) for row in self.per_size_minima],
        }


def finite_size_fit(minima, p0=None) -> CriticalEstimate:
    """Weighted fit of ``h_c(N) = h_c_inf + c N**(-1/nu)`` with weights proportional to N.

    ``minima`` holds ``(N, h_c(N))`` or ``(N, h_c(N), gap)`` rows.
    """
    from .scaling import FiniteSizeScaling

    rows = [tuple(r) for r in minima]
    if len(rows) < 3:
        raise DomainError("finite-size fit needs at least 3 sizes")
    N = np.array([r[0] for r in rows], dtype=float)
    h = np.array([r[1] for r in rows], dtype=float)
    est = FiniteSizeScaling(p0=p0).fit(N, h)
    return CriticalEstimate(
        h_c_infinity=est.h_inf_,
        nu=est.nu_,
        c=est.c_,
        per_size_minima=rows,
        covariance=est.covariance_,
        residual=est.residual_,
    )


def dynamical_exponent(sizes, h_c, alpha=2.0, model_kind="lri", normalized=False, sector="even"):
    """``z`` from the slope of log(gap at ``h_c``) against log N; returns ``(z, fit)``."""
    from .scaling import powerlaw_fit

    pts = []
    for N in sizes:
        spec = ChainSpec(N, alpha, normalized=normalized, model_kind=model_kind)
        pts.append((N, sector_gap(spec, h_c, sector=sector)))
    fit = powerlaw_fit(pts)
    return -fit.exponent, fit


# --- exact unitary evolution -------------------------------------------------


def _expm_apply(H, psi, dt, norm):
    """``exp(-i dt H) psi`` by a Taylor series on sub-steps with ``|dt| ||H|| <= 1``."""
    n_sub = max(1, int(np.ceil(abs(dt) * norm)))
    tau = dt / n_sub
    for _ in range(n_sub):
        term = psi
        out = psi.copy()
        for k in range(1, 40):
            term = (-1j * tau / k) * (H @ term)
            out += term
            if np.linalg.norm(term) < 1e-17 * np.linalg.norm(out):
                break
        else:
            raise IntegrationError("Taylor series for the step propagator did not converge")
        psi = out
    return psi


@dataclass
class ExactEvolution:
    psi: np.ndarray
    basis: np.ndarray
    t: float
    parity_drift: float
    norm_drift: float
    E_f: float
    E_gs: float
    E_gs_even: float

    @property
    def E_r(self):
        return self.E_f - self.E_gs


def parity_expectation(psi, basis):
    parity = 1.0 - 2.0 * (np.bitwise_count(basis) % 2)
    return float(np.real(np.vdot(psi, parity * psi)) / np.real(np.vdot(psi, psi)))


def _midpoint_run(fam, spec, profile, window, n_steps, psi, energy_tol):
    dt = window.duration / n_steps
    t = window.t_i
    parity = 1.0 - 2.0 * (np.bitwise_count(fam.basis) % 2)
    worst_parity = 0.0
    for _ in range(n_steps):
        H = fam.sparse(fields(profile, spec.N, t + 0.5 * dt))
        norm = float(abs(H).sum(axis=0).max())
        e_before = np.real(np.vdot(psi, H @ psi))
        psi = _expm_apply(H, psi, dt, norm)
        e_after = np.real(np.vdot(psi, H @ psi))
        if abs(e_after - e_before) > energy_tol * max(1.0, abs(e_before)):
            raise IntegrationError(
                f"frozen-H energy changed by {abs(e_after - e_before):.3e} at t={t:.4f}; "
                "step too large"
            )
        t += dt
        worst_parity = max(worst_parity, abs(np.real(np.vdot(psi, parity * psi)) - 1.0))
    return psi, worst_parity


def evolve_exact(spec: ChainSpec, profile: FieldProfile, window: ProtocolWindow | None = None,
                 dt: float = 0.01, sector="full", richardson: bool = True,
                 energy_tol: float = 1e-9, size_cap: int = DEFAULT_EVOLUTION_CAP) -> ExactEvolution:
    """Propagate the even ground state of ``H(t_i)`` through the protocol.

    The Hamiltonian is frozen at the midpoint of each step and applied exactly.
    The midpoint rule is time-symmetric, so combining runs with steps ``dt`` and
    ``dt/2`` as ``(4 psi_{dt/2} - psi_dt)/3`` removes the ``dt**2`` error.
    """
    _check_cap(spec.N, size_cap, "exact evolution")
    window = window or ProtocolWindow.for_profile(profile, spec.N)
    fam = _HamiltonianFamily(spec, sector)
    even = _HamiltonianFamily(spec, "even") if fam.sector is not Sector.EVEN else fam

    H0 = even.dense(fields(profile, spec.N, window.t_i))
    _, vecs = np.linalg.eigh(H0)
    psi0 = np.zeros(len(fam.basis), dtype=complex)
    psi0[np.searchsorted(fam.basis, even.basis)] = vecs[:, 0]

    n_steps = max(1, int(np.ceil(window.duration / dt)))
    psi, drift = _midpoint_run(fam, spec, profile, window, n_steps, psi0, energy_tol)
    if richardson:
        fine, drift_fine = _midpoint_run(fam, spec, profile, window, 2 * n_steps, psi0, energy_tol)
        psi = (4.0 * fine - psi) / 3.0
        drift = max(drift, drift_fine)
    norm_drift = abs(np.linalg.norm(psi) - 1.0)
    psi = psi / np.linalg.norm(psi)

    h_f = fields(profile, spec.N, window.t_f)
    H_f = fam.sparse(h_f)
    E_f = float(np.real(np.vdot(psi, H_f @ psi)))
    full = fam if fam.sector is Sector.FULL else _HamiltonianFamily(spec, "full")
    E_gs = float(_lowest(full.sparse(h_f), 1, len(full.basis))[0])
    E_gs_even = float(_lowest(even.sparse(h_f), 1, len(even.basis))[0])
    return ExactEvolution(
        psi=psi,
        basis=fam.basis,
        t=window.t_f,
        parity_drift=max(drift, abs(parity_expectation(psi, fam.basis) - 1.0)),
        norm_drift=norm_drift,
        E_f=E_f,
        E_gs=E_gs,
        E_gs_even=E_gs_even,
    )
