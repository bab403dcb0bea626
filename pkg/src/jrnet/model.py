"""Multi-population Jansen-Rit model: parameters, coupling and displacement.

State layout convention used throughout the package: the 6N-dimensional
state is split into a position block Q = (X1^1, X2^1, X3^1, ..., X1^N,
X2^N, X3^N) and a momentum block P = (X4^1, X5^1, X6^1, ...).  Population
indices are 0-based in code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "PopulationParams",
    "PowerDecay",
    "Uniform",
    "TwoLevel",
    "HemispherePower",
    "Explicit",
    "Adjacency",
    "ModelParams",
    "Slot",
    "ThetaLayout",
    "sigmoid",
    "coupling_strength",
    "coupling_matrix",
    "displacement",
    "apply_theta",
    "read_theta",
]


@dataclass(frozen=True)
class PopulationParams:
    """Physiological constants of one neural population.

    Defaults are the standard values (A, B, a, b, C, nu_max, v0, gamma)
    with deterministic input mu = 90, input noise sigma = 500 and weak
    noise eps = 1 on the X4/X6 components.
    """

    A: float = 3.25      # excitatory gain, mV
    B: float = 22.0      # inhibitory gain, mV
    a: float = 100.0     # excitatory rate, 1/s
    b: float = 50.0      # inhibitory rate, 1/s
    C1: float = 135.0
    C2: float = 0.8 * 135.0
    C3: float = 0.25 * 135.0
    C4: float = 0.25 * 135.0
    nu_max: float = 5.0  # 1/s
    v0: float = 6.0      # mV
    gamma: float = 0.56  # 1/mV
    mu: float = 90.0
    sigma: float = 500.0
    eps: float = 1.0

    def __post_init__(self):
        for name in ("A", "B", "a", "b", "C1", "C2", "C3", "C4",
                     "nu_max", "gamma", "sigma", "eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def with_connectivity(cls, C: float, **kw) -> "PopulationParams":
        """Build params from the total synapse count C (C1=C, C2=0.8C, C3=C4=0.25C)."""
        return cls(C1=C, C2=0.8 * C, C3=0.25 * C, C4=0.25 * C, **kw)


def _check_positive(name, value):
    if value <= 0:
        raise ValueError(f"{name} must be strictly positive")


def _check_c(c):
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")


@dataclass(frozen=True)
class PowerDecay:
    """K_jk = c^{|j-k|-1} * L: strength decays with population distance."""

    L: float
    c: float = 1.0

    def __post_init__(self):
        _check_positive("L", self.L)
        _check_c(self.c)

    def strength(self, j: int, k: int) -> float:
        return self.c ** (abs(j - k) - 1) * self.L


@dataclass(frozen=True)
class Uniform:
    """Identical strength L between every ordered pair."""

    L: float

    def __post_init__(self):
        _check_positive("L", self.L)

    def strength(self, j: int, k: int) -> float:
        return self.L


@dataclass(frozen=True)
class TwoLevel:
    """L1 within hemisphere pairs {0,1} and {2,3}, L2 across (requires N=4)."""

    L1: float
    L2: float

    def __post_init__(self):
        _check_positive("L1", self.L1)
        _check_positive("L2", self.L2)

    def strength(self, j: int, k: int) -> float:
        same = (j < 2) == (k < 2)
        return self.L1 if same else self.L2


@dataclass(frozen=True)
class HemispherePower:
    """4x4 hemisphere-aware structure (requires N=4).

    Within a hemisphere the pair strength is L; across hemispheres it is
    c^2 L or c^3 L depending on the electrode distance:

        [ -    L    c^2 L  c^3 L ]
        [ L    -    c L    c^2 L ]
        [ c^2L cL   -      L     ]
        [ c^3L c^2L L      -     ]
    """

    L: float
    c: float = 1.0

    _EXPONENTS = (
        (0, 0, 2, 3),
        (0, 0, 1, 2),
        (2, 1, 0, 0),
        (3, 2, 0, 0),
    )

    def __post_init__(self):
        _check_positive("L", self.L)
        _check_c(self.c)

    def strength(self, j: int, k: int) -> float:
        if not (0 <= j < 4 and 0 <= k < 4):
            raise ValueError("HemispherePower requires N = 4")
        return self.c ** self._EXPONENTS[j][k] * self.L


@dataclass(frozen=True)
class Explicit:
    """Dense user-supplied strength matrix; diagonal ignored."""

    K: tuple

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("K must be a square matrix")
        off = K[~np.eye(K.shape[0], dtype=bool)]
        if np.any(off <= 0):
            raise ValueError("off-diagonal strengths must be strictly positive")
        object.__setattr__(self, "K", tuple(map(tuple, K)))

    def strength(self, j: int, k: int) -> float:
        return self.K[j][k]


CouplingStructure = PowerDecay | Uniform | TwoLevel | HemispherePower | Explicit


def coupling_strength(cs: CouplingStructure, j: int, k: int) -> float:
    """Strength of the directed connection j -> k (0-based, j != k)."""
    if j == k:
        raise ValueError("coupling_strength is undefined for j == k")
    return cs.strength(j, k)


def coupling_matrix(cs: CouplingStructure, N: int) -> np.ndarray:
    """N x N matrix of K_jk with zero diagonal."""
    K = np.zeros((N, N))
    for j in range(N):
        for k in range(N):
            if j != k:
                K[j, k] = cs.strength(j, k)
    return K


@dataclass(frozen=True)
class Adjacency:
    """Binary directed-connection indicators rho_jk; diagonal unused."""

    rho: tuple

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=int)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError("rho must be a square matrix")
        off = r[~np.eye(r.shape[0], dtype=bool)]
        if not np.isin(off, (0, 1)).all():
            raise ValueError("off-diagonal entries must be 0 or 1")
        object.__setattr__(self, "rho", tuple(map(tuple, r)))

    @classmethod
    def zeros(cls, N: int) -> "Adjacency":
        return cls(tuple(tuple(0 for _ in range(N)) for _ in range(N)))

    @classmethod
    def from_edges(cls, N: int, edges) -> "Adjacency":
        r = np.zeros((N, N), dtype=int)
        for j, k in edges:
            r[j, k] = 1
        return cls(tuple(map(tuple, r)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rho, dtype=int)


@dataclass(frozen=True)
class ModelParams:
    """Full parameterization of the coupled N-population system."""

    pops: tuple
    coupling: CouplingStructure | None = None
    adjacency: Adjacency | None = None

    def __post_init__(self):
        if len(self.pops) < 1:
            raise ValueError("need at least one population")
        object.__setattr__(self, "pops", tuple(self.pops))
        if self.N > 1:
            if self.coupling is None or self.adjacency is None:
                raise ValueError("coupling and adjacency required for N > 1")
            if len(self.adjacency.rho) != self.N:
                raise ValueError("adjacency size does not match N")

    @property
    def N(self) -> int:
        return len(self.pops)

    def effective_coupling(self) -> np.ndarray:
        """rho_jk * K_jk, zero matrix for N = 1."""
        if self.N == 1:
            return np.zeros((1, 1))
        return self.adjacency.as_array() * coupling_matrix(self.coupling, self.N)


def sigmoid(x, p: PopulationParams):
    """Firing-rate nonlinearity: nu_max / (1 + exp(gamma (v0 - x)))."""
    return p.nu_max / (1.0 + np.exp(p.gamma * (p.v0 - x)))


def displacement(Q: np.ndarray, m: ModelParams) -> np.ndarray:
    """Nonlinear displacement-and-coupling term G(Q), a 3N-vector.

    Block k is (A_k a_k sig(X2-X3),
                A_k a_k (mu_k + C2_k sig(C1_k X1) + sum_j rho_jk K_jk X1^j),
                B_k b_k C4_k sig(C3_k X1)).
    """
    Q = np.asarray(Q, dtype=float)
    N = m.N
    if Q.shape != (3 * N,):
        raise ValueError(f"Q must have shape ({3 * N},), got {Q.shape}")
    x1 = Q[0::3]
    x2 = Q[1::3]
    x3 = Q[2::3]
    W = m.effective_coupling()
    out = np.empty(3 * N)
    for k, p in enumerate(m.pops):
        afferent = float(W[:, k] @ x1)
        out[3 * k] = p.A * p.a * sigmoid(x2[k] - x3[k], p)
        out[3 * k + 1] = p.A * p.a * (p.mu + p.C2 * sigmoid(p.C1 * x1[k], p) + afferent)
        out[3 * k + 2] = p.B * p.b * p.C4 * sigmoid(p.C3 * x1[k], p)
    return out


_SLOT_KINDS = {"A", "mu", "sigma", "L", "c", "L1", "L2"}


@dataclass(frozen=True)
class Slot:
    """One addressable continuous parameter target.

    kind "A", "mu", "sigma" act on the populations listed in ``pops``
    (several indices fan the same value out to a group, e.g. one sigma
    per hemisphere); "L", "c", "L1", "L2" act on the coupling structure.
    """

    kind: str
    pops: tuple = ()

    def __post_init__(self):
        if self.kind not in _SLOT_KINDS:
            raise ValueError(f"unknown slot kind {self.kind!r}")
        object.__setattr__(self, "pops", tuple(self.pops))
        if self.kind in ("A", "mu", "sigma") and not self.pops:
            raise ValueError(f"slot {self.kind!r} needs target populations")
        if self.kind not in ("A", "mu", "sigma") and self.pops:
            raise ValueError(f"slot {self.kind!r} takes no populations")

    @property
    def name(self) -> str:
        if self.pops:
            return self.kind + "_" + "".join(str(i + 1) for i in self.pops)
        return self.kind


@dataclass(frozen=True)
class ThetaLayout:
    """Mapping from a (theta_c, theta_b) vector pair onto ModelParams."""

    continuous: tuple = ()
    binary: tuple = ()  # ordered (j, k) adjacency positions, 0-based

    def __post_init__(self):
        object.__setattr__(self, "continuous", tuple(self.continuous))
        object.__setattr__(self, "binary", tuple(tuple(e) for e in self.binary))
        if len(set(self.continuous)) != len(self.continuous):
            raise ValueError("duplicate continuous slot")
        if len(set(self.binary)) != len(self.binary):
            raise ValueError("duplicate binary slot")
        for j, k in self.binary:
            if j == k:
                raise ValueError("binary slots must be off-diagonal")

    @property
    def c_n(self) -> int:
        return len(self.continuous)

    @property
    def b_n(self) -> int:
        return len(self.binary)

    def continuous_names(self) -> list:
        return [s.name for s in self.continuous]

    def binary_names(self) -> list:
        return [f"rho_{j + 1}{k + 1}" for j, k in self.binary]

    @classmethod
    def all_pairs(cls, N: int, continuous=()) -> "ThetaLayout":
        """Layout with every ordered off-diagonal pair as a binary slot."""
        pairs = [(j, k) for j in range(N) for k in range(N) if j != k]
        return cls(continuous=continuous, binary=pairs)


def _validate_slot_against(layout: ThetaLayout, base: ModelParams):
    cs = base.coupling
    for slot in layout.continuous:
        if slot.kind in ("A", "mu", "sigma"):
            for i in slot.pops:
                if not 0 <= i < base.N:
                    raise ValueError(f"slot {slot.name}: population out of range")
        elif slot.kind == "L" and not isinstance(cs, (PowerDecay, Uniform, HemispherePower)):
            raise ValueError("slot L requires a PowerDecay/Uniform/HemispherePower coupling")
        elif slot.kind == "c" and not isinstance(cs, (PowerDecay, HemispherePower)):
            raise ValueError("slot c requires a PowerDecay/HemispherePower coupling")
        elif slot.kind in ("L1", "L2") and not isinstance(cs, TwoLevel):
            raise ValueError(f"slot {slot.kind} requires a TwoLevel coupling")
    for j, k in layout.binary:
        if not (0 <= j < base.N and 0 <= k < base.N):
            raise ValueError("binary slot out of range")


def apply_theta(layout: ThetaLayout, theta_c, theta_b, base: ModelParams) -> ModelParams:
    """Return a copy of ``base`` with the layout slots overwritten."""
    theta_c = np.asarray(theta_c, dtype=float)
    theta_b = np.asarray(theta_b, dtype=int)
    if theta_c.shape != (layout.c_n,):
        raise ValueError(f"theta_c must have length {layout.c_n}")
    if theta_b.shape != (layout.b_n,):
        raise ValueError(f"theta_b must have length {layout.b_n}")
    _validate_slot_against(layout, base)

    pops = list(base.pops)
    cs = base.coupling
    for slot, value in zip(layout.continuous, theta_c):
        v = float(value)
        if slot.kind in ("A", "mu", "sigma"):
            for i in slot.pops:
                pops[i] = replace(pops[i], **{slot.kind: v})
        else:
            cs = replace(cs, **{slot.kind: v})

    adjacency = base.adjacency
    if layout.b_n:
        rho = adjacency.as_array() if adjacency is not None else np.zeros((base.N, base.N), int)
        for (j, k), value in zip(layout.binary, theta_b):
            rho[j, k] = int(value)
        adjacency = Adjacency(tuple(map(tuple, rho)))

    return ModelParams(pops=tuple(pops), coupling=cs, adjacency=adjacency)


def read_theta(layout: ThetaLayout, m: ModelParams):
    """Inverse of apply_theta: read the slot values back out of ``m``."""
    theta_c = np.empty(layout.c_n)
    for i, slot in enumerate(layout.continuous):
        if slot.kind in ("A", "mu", "sigma"):
            theta_c[i] = getattr(m.pops[slot.pops[0]], slot.kind)
        else:
            theta_c[i] = getattr(m.coupling, slot.kind)
    rho = m.adjacency.as_array() if m.adjacency is not None else None
    theta_b = np.array([rho[j, k] for j, k in layout.binary], dtype=int)
    return theta_c, theta_b
