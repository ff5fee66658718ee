"""Chain definitions, power-law couplings and transverse-field protocols.

Two chains share the same lattice and coupling law,

    H = -sum_n ( h_n sz_n + sum_{r=1}^{N-n} J_r sx_n S_{n,r} sx_{n+r} ),

where the string ``S_{n,r}`` is the product of ``sz`` strictly between the two
coupled sites for the *extended* chain (free-fermion solvable) and the identity
for the plain long-range Ising chain.  Couplings decay as ``J_r = K / r**alpha``
with ``K = 1/zeta(alpha)`` when normalized.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit, zeta

from .errors import DomainError

__all__ = [
    "ModelKind",
    "ProfileKind",
    "ChainSpec",
    "FieldProfile",
    "ProtocolWindow",
    "coupling_strength",
    "field_at",
    "fields",
    "linearized_epsilon",
    "default_margin",
]


class ModelKind(str, enum.Enum):
    EXTENDED = "extended"
    LRI = "lri"


class ProfileKind(str, enum.Enum):
    HOMOGENEOUS = "homogeneous"
    STATIC_FRONT = "static_front"
    MOVING_FRONT = "moving_front"


def default_margin(kind):
    """Protocol margin ``C``: 3 for the extended chain, 4 for long-range Ising."""
    return 3.0 if ModelKind(kind) is ModelKind.EXTENDED else 4.0


@dataclass(frozen=True)
class ChainSpec:
    """Open chain of ``N`` spins with power-law couplings.

    ``r_max`` truncates the couplings to ranges ``r <= r_max`` (``r_max=1`` is
    the nearest-neighbour chain, ``r_max=0`` switches couplings off).  ``None``
    keeps every range allowed by the open boundary.
    """

    N: int
    alpha: float = 1.5
    normalized: bool = True
    model_kind: ModelKind = ModelKind.EXTENDED
    r_max: int | None = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N must be an integer >= 2, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "model_kind", ModelKind(self.model_kind))
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise DomainError(f"alpha must be positive and finite, got {self.alpha!r}")
        if self.normalized and self.alpha <= 1:
            raise DomainError(f"normalized couplings need alpha > 1, got {self.alpha!r}")
        if self.r_max is not None and self.r_max < 0:
            raise DomainError(f"r_max must be >= 0, got {self.r_max!r}")

    @property
    def normalization(self):
        return 1.0 / float(zeta(self.alpha)) if self.normalized else 1.0

    def couplings(self):
        """Array ``J[r-1] = J_r`` for ``r = 1..N-1`` (zero beyond ``r_max``)."""
        r = np.arange(1, self.N, dtype=float)
        J = self.normalization / r**self.alpha
        if self.r_max is not None:
            J[self.r_max:] = 0.0
        return J

    def to_dict(self):
        d = asdict(self)
        d["model_kind"] = self.model_kind.value
        return d


def coupling_strength(spec: ChainSpec, r: int) -> float:
    """Coupling ``J_r`` between spins ``r`` sites apart."""
    if int(r) != r or not 1 <= r <= spec.N - 1:
        raise DomainError(f"r must be an integer in [1, {spec.N - 1}], got {r!r}")
    if spec.r_max is not None and r > spec.r_max:
        return 0.0
    return spec.normalization / float(r) ** spec.alpha


@dataclass(frozen=True)
class FieldProfile:
    """One of the three driving protocols for the transverse field ``h_n(t)``.

    Build instances with :meth:`homogeneous`, :meth:`static_front` or
    :meth:`moving_front`; unused parameters stay ``None``.
    """

    kind: ProfileKind
    h_c: float = 1.0
    tau_Q: float | None = None
    theta: float | None = None
    v: float | None = None
    n_c: float | None = None
    C: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if not self.h_c > 0:
            raise DomainError(f"h_c must be positive, got {self.h_c!r}")
        if not self.C > 0:
            raise DomainError(f"C must be positive, got {self.C!r}")
        required = {
            ProfileKind.HOMOGENEOUS: ("tau_Q",),
            ProfileKind.STATIC_FRONT: ("theta", "n_c"),
            ProfileKind.MOVING_FRONT: ("theta", "v"),
        }[self.kind]
        for name in required:
            value = getattr(self, name)
            if value is None or not np.isfinite(value):
                raise DomainError(f"{self.kind.value} profile needs a finite {name}")
            if name != "n_c" and not value > 0:
                raise DomainError(f"{name} must be positive, got {value!r}")

    @classmethod
    def homogeneous(cls, tau_Q, h_c=1.0, C=3.0):
        return cls(ProfileKind.HOMOGENEOUS, h_c=h_c, tau_Q=tau_Q, C=C)

    @classmethod
    def static_front(cls, theta, n_c, h_c=1.0, C=3.0):
        return cls(ProfileKind.STATIC_FRONT, h_c=h_c, theta=theta, n_c=n_c, C=C)

    @classmethod
    def moving_front(cls, theta, v, h_c=1.0, C=3.0):
        return cls(ProfileKind.MOVING_FRONT, h_c=h_c, theta=theta, v=v, C=C)

    @property
    def is_static(self):
        return self.kind is ProfileKind.STATIC_FRONT

    @property
    def local_tau_Q(self):
        """Quench time seen by a single site: ``tau_Q`` or ``1/(v theta)`` for a moving front."""
        if self.kind is ProfileKind.HOMOGENEOUS:
            return self.tau_Q
        if self.kind is ProfileKind.MOVING_FRONT:
            return 1.0 / (self.v * self.theta)
        raise DomainError("a static front has no quench time")

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if v is not None}
        d["kind"] = self.kind.value
        return d


def _field(profile, n, t):
    hc = profile.h_c
    # h_c (1 +- tanh x) == 2 h_c expit(+-2x); the expit form keeps the tails positive
    if profile.kind is ProfileKind.HOMOGENEOUS:
        x = np.asarray(t, dtype=float) / (hc * profile.tau_Q)
        return 2.0 * hc * expit(-2.0 * x) + 0.0 * np.asarray(n, dtype=float)
    if profile.kind is ProfileKind.STATIC_FRONT:
        x = (np.asarray(n, dtype=float) - profile.n_c) * profile.theta / hc
        return 2.0 * hc * expit(2.0 * x) + 0.0 * np.asarray(t, dtype=float)
    x = profile.theta * (np.asarray(n, dtype=float) - profile.v * np.asarray(t, dtype=float)) / hc
    return 2.0 * hc * expit(2.0 * x)


def field_at(profile: FieldProfile, n, t) -> float:
    """Transverse field on site ``n`` (1-based) at time ``t``."""
    return float(_field(profile, n, t))


def fields(profile: FieldProfile, N: int, t: float = 0.0) -> np.ndarray:
    """Fields ``h_1..h_N`` at time ``t``."""
    return np.asarray(_field(profile, np.arange(1, N + 1, dtype=float), t), dtype=float)


def linearized_epsilon(profile: FieldProfile, n, t) -> float:
    """Linearized distance from the critical point, positive on the ordered side."""
    if profile.kind is ProfileKind.HOMOGENEOUS:
        return t / profile.tau_Q
    if profile.kind is ProfileKind.STATIC_FRONT:
        return profile.theta * (profile.n_c - n)
    return profile.theta * (profile.v * t - n)


@dataclass(frozen=True)
class ProtocolWindow:
    t_i: float
    t_f: float

    def __post_init__(self):
        if not self.t_f > self.t_i:
            raise DomainError(f"window needs t_f > t_i, got ({self.t_i}, {self.t_f})")

    @property
    def duration(self):
        return self.t_f - self.t_i

    @classmethod
    def for_profile(cls, profile: FieldProfile, N: int) -> "ProtocolWindow":
        """Start and stop times so the chain begins and ends deep in either phase."""
        C, hc = profile.C, profile.h_c
        if profile.kind is ProfileKind.HOMOGENEOUS:
            return cls(-C * profile.tau_Q * hc, C * profile.tau_Q * hc)
        if profile.kind is ProfileKind.MOVING_FRONT:
            margin = C * hc / (profile.theta * profile.v)
            return cls(-margin, N / profile.v + margin)
        raise DomainError("a static front has no protocol window")

