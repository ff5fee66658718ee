"""Stationary Bogoliubov-de Gennes problem of the extended long-range chain.

After the Jordan-Wigner map the extended chain is the quadratic form

    H = sum c+_n A_nm c_m + 1/2 sum (c+_n B_nm c+_m + h.c.)

with ``A_nn = 2 h_n``, ``A_{n,n+r} = -J_r`` and ``B_{n,n+r} = -B_{n+r,n} = J_r``.
Its quasiparticle modes ``(u_m, v_m)`` solve

    A u + B v = w u,    -B u - A v = w v.

With ``phi = u + v`` and ``psi = u - v`` this becomes ``(A+B) phi = w psi`` and
``(A-B) psi = w phi``, i.e. the singular value decomposition of ``A + B``.
That route is used here: it returns the N non-negative frequencies directly
and stays well conditioned for the near-zero edge modes of the ordered phase.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.linalg import toeplitz

from .errors import DomainError, NumericError, UnsupportedModelError
from .model import ChainSpec, FieldProfile, ModelKind, fields

__all__ = [
    "BdgMatrices",
    "ModeSet",
    "resolve_fields",
    "build_matrices",
    "bdg_hamiltonian",
    "diagonalize",
    "gap",
    "mode_density",
    "fwhm",
    "ground_energy",
    "vacuum_parity",
    "many_body_energies",
    "static_record",
]


@dataclass(frozen=True)
class BdgMatrices:
    A: np.ndarray
    B: np.ndarray

    @property
    def N(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class ModeSet:
    """Positive-frequency modes; column ``m`` of ``U``/``V`` pairs with ``omega[m]``."""

    omega: np.ndarray
    U: np.ndarray
    V: np.ndarray

    @property
    def N(self):
        return self.omega.shape[0]

    @property
    def negative(self):
        """Partners ``(U, V) -> (V, U)`` with frequencies ``-omega``."""
        return self.V, self.U

    def orthonormality_error(self):
        G = self.U.conj().T @ self.U + self.V.conj().T @ self.V
        return float(np.max(np.abs(G - np.eye(self.N))))

    def residuals(self, m: BdgMatrices):
        """Per-mode residual of the stationary equations."""
        A, B, U, V, w = m.A, m.B, self.U, self.V, self.omega
        r1 = np.linalg.norm(A @ U + B @ V - U * w, axis=0)
        r2 = np.linalg.norm(-B @ U - A @ V - V * w, axis=0)
        return r1 + r2


def resolve_fields(spec: ChainSpec, profile, t: float = 0.0) -> np.ndarray:
    """Site fields from a profile, a scalar (uniform field) or an explicit array."""
    if isinstance(profile, FieldProfile):
        return fields(profile, spec.N, t)
    h = np.asarray(profile, dtype=float)
    if h.ndim == 0:
        return np.full(spec.N, float(h))
    if h.shape != (spec.N,):
        raise DomainError(f"expected {spec.N} site fields, got shape {h.shape}")
    return h.copy()


def build_matrices(spec: ChainSpec, profile, t: float = 0.0) -> BdgMatrices:
    """Quadratic-fermion matrices of the extended chain at time ``t``."""
    if spec.model_kind is not ModelKind.EXTENDED:
        raise UnsupportedModelError(
            f"{spec.model_kind.value} chain has no free-fermion form; use ed_oracle"
        )
    h = resolve_fields(spec, profile, t)
    T = toeplitz(np.concatenate(([0.0], spec.couplings())))
    A = np.diag(2.0 * h) - T
    upper = np.triu(T, 1)
    B = upper - upper.T
    assert np.array_equal(A, A.T) and np.array_equal(B, -B.T)
    return BdgMatrices(A, B)


def bdg_hamiltonian(m: BdgMatrices) -> np.ndarray:
    """The full ``2N x 2N`` real symmetric matrix ``[[A, B], [-B, -A]]``."""
    return np.block([[m.A, m.B], [-m.B, -m.A]])


def _fix_signs(U, V):
    W = np.vstack([U, V])
    scale = np.max(np.abs(W), axis=0)
    first = np.argmax(np.abs(W) > 1e-10 * scale, axis=0)
    s = np.sign(W[first, np.arange(W.shape[1])])
    s[s == 0] = 1.0
    return U * s, V * s


def _zero_tolerance(sigma):
    return 10.0 * sigma.size * np.finfo(float).eps * max(float(np.max(sigma)), 1.0)


def diagonalize(m: BdgMatrices) -> ModeSet:
    """Modes sorted by ascending frequency, first significant component positive.

    When the lowest frequency is zero to working precision (a Majorana pair deep
    in the ordered phase) the vacuum is chosen in the even-parity sector.
    """
    K = m.A + m.B
    try:
        left, sigma, right_t = np.linalg.svd(K)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"SVD of A+B failed (N={m.N}, cond~{np.linalg.cond(K, 1):.3e}): {exc}"
        ) from exc
    zero = sigma <= _zero_tolerance(sigma)
    if np.any(zero) and np.linalg.det(left) * np.linalg.det(right_t) < 0:
        # a numerically zero mode has no preferred orientation; take the even vacuum
        left[:, np.argmin(sigma)] *= -1.0
    order = np.argsort(sigma, kind="stable")
    omega = sigma[order]
    phi = right_t[order].T
    psi = left[:, order]
    U, V = _fix_signs(0.5 * (phi + psi), 0.5 * (phi - psi))
    if not np.all(np.isfinite(omega)):
        raise NumericError(f"non-finite frequencies (cond~{np.linalg.cond(K):.3e})")
    return ModeSet(omega, U, V)


def gap(modes: ModeSet) -> float:
    """Lowest relevant excitation energy ``w_0 + w_1``."""
    if modes.N < 2:
        raise DomainError("gap needs at least two modes")
    return float(modes.omega[0] + modes.omega[1])


def mode_density(modes: ModeSet, m: int) -> np.ndarray:
    """Site density ``|u_nm|^2 + |v_nm|^2`` of mode ``m`` (0-based)."""
    if int(m) != m or not 0 <= m < modes.N:
        raise DomainError(f"mode index must be in [0, {modes.N}), got {m!r}")
    return np.abs(modes.U[:, m]) ** 2 + np.abs(modes.V[:, m]) ** 2


def fwhm(density) -> float:
    """Full width at half maximum with linear interpolation between sites.

    A single-site spike has width 1.  The maximum must not sit on either end of
    the array.
    """
    d = np.asarray(density, dtype=float)
    if d.ndim != 1 or d.size < 3:
        raise DomainError("density must be a 1-d array of at least 3 sites")
    if np.any(d < 0):
        raise DomainError("density must be non-negative")
    k = int(np.argmax(d))
    if k in (0, d.size - 1) or d[k] <= 0:
        raise DomainError("density has no interior maximum")
    half = 0.5 * d[k]
    above = np.flatnonzero(d >= half)
    lo, hi = above[0], above[-1]
    if lo == 0:
        left = 0.0
    else:
        left = lo - 1 + (half - d[lo - 1]) / (d[lo] - d[lo - 1])
    if hi == d.size - 1:
        right = float(hi)
    else:
        right = hi + (d[hi] - half) / (d[hi] - d[hi + 1])
    return float(right - left)


def ground_energy(modes: ModeSet) -> float:
    """Energy of the Bogoliubov vacuum, ``-1/2 sum_m w_m``.

    The ``1/2 tr A`` left over from normal ordering cancels the ``-sum h_n``
    produced by ``sz = 1 - 2 c+ c``, so this is directly the spin-chain energy.
    """
    return float(-0.5 * np.sum(modes.omega))


def vacuum_parity(m: BdgMatrices) -> int:
    """Eigenvalue of ``prod_n sz_n`` on the Bogoliubov vacuum of :func:`diagonalize`."""
    K = m.A + m.B
    sigma = np.linalg.svd(K, compute_uv=False)
    if np.min(sigma) <= _zero_tolerance(sigma):
        return 1
    sign, _ = np.linalg.slogdet(K)
    return int(sign)


def many_body_energies(modes: ModeSet, parity_of_vacuum: int | None = None, sector=None):
    """All ``2**N`` energies from quasiparticle occupations, ascending.

    With ``sector`` in ``{"even", "odd"}`` and the vacuum parity supplied, only
    states of that total parity are returned.
    """
    N = modes.N
    if N > 16:
        raise DomainError("occupation enumeration limited to N <= 16")
    occ = np.array(list(product((0, 1), repeat=N)), dtype=float)
    E = ground_energy(modes) + occ @ modes.omega
    if sector is not None:
        if parity_of_vacuum is None:
            raise DomainError("sector selection needs the vacuum parity")
        want = 1 if sector == "even" else -1
        count_parity = 1 - 2 * (occ.sum(axis=1) % 2)
        E = E[count_parity * parity_of_vacuum == want]
    return np.sort(E)


def static_record(spec: ChainSpec, profile: FieldProfile, mode_index: int = 1) -> dict:
    """One row of the static-gap table for a static front."""
    modes = diagonalize(build_matrices(spec, profile))
    rec = {
        "N": spec.N,
        "alpha": spec.alpha,
        "theta": profile.theta,
        "omega0": float(modes.omega[0]),
        "omega1": float(modes.omega[1]),
        "gap": gap(modes),
    }
    try:
        rec["fwhm"] = fwhm(mode_density(modes, mode_index))
    except DomainError:
        rec["fwhm"] = float("nan")
    return rec
