"""Two-level system coupled to M two-level sites: parameters and Hamiltonian action.

Basis convention (fixed across the whole package):
  * global index = s * 2^M + nu, with s = 0 for the first pointer state
    |phi_1> and s = 1 for |phi_2>;
  * nu is an M-bit environment configuration, bit (l-1) encodes site l
    (little-endian site order), bit value 0 = up, 1 = down.

All couplings are real, hbar = 1, so times are in inverse-energy units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np

__all__ = [
    "DistSpec",
    "ModelParams",
    "build_params",
    "sample_params",
    "apply_h",
    "h_i_diag",
    "dense_h",
    "h_scale",
]

DENSE_M_MAX = 8  # 512 x 512 matrix; keeps the dense oracle desk-scale

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_I2 = np.eye(2)


@dataclass(frozen=True)
class DistSpec:
    """Sampling distribution for random model parameters.

    omega_l ~ Uniform[omega_low, omega_high], v ~ Uniform[-g, g] + v_shift,
    E fixed.  The scale g multiplies a seed-determined unit draw, so params
    sampled with the same seed but different g share the same unit noise.
    """

    g: float = 0.1
    E: float = 1.0
    omega_low: float = 0.5
    omega_high: float = 1.5
    v_shift: float = 0.0

    def to_json(self) -> dict:
        return {
            "g": self.g,
            "E": self.E,
            "omega_low": self.omega_low,
            "omega_high": self.omega_high,
            "v_shift": self.v_shift,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DistSpec":
        return cls(**doc)


@dataclass(frozen=True)
class ModelParams:
    """Validated model coefficients.  Immutable, safe to share across threads.

    omega has shape (M,); v has shape (M, 2, 2) indexed [site, pointer i,
    site spin sigma] with sigma 0 = up, 1 = down.
    """

    M: int
    E: float
    omega: np.ndarray
    v: np.ndarray
    seed: int | None = None
    dist: DistSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))

    @property
    def n_env(self) -> int:
        return 1 << self.M

    @property
    def dim(self) -> int:
        return 2 << self.M

    @cached_property
    def interaction_diagonal(self) -> np.ndarray:
        """Diagonal of the interaction Hamiltonian over the full basis."""
        nu = np.arange(self.n_env)
        diag = np.empty((2, self.n_env))
        for s in range(2):
            acc = np.zeros(self.n_env)
            for l in range(self.M):
                bit = (nu >> l) & 1
                acc += self.v[l, s][bit]
            diag[s] = acc
        return diag.reshape(self.dim)

    def to_json(self) -> dict:
        return {
            "M": self.M,
            "E": self.E,
            "omega": self.omega.tolist(),
            "v": self.v.tolist(),
            "seed": self.seed,
            "dist": self.dist.to_json() if self.dist is not None else None,
        }

    @classmethod
    def from_json(cls, doc: dict | str) -> "ModelParams":
        if isinstance(doc, str):
            doc = json.loads(doc)
        dist = doc.get("dist")
        return build_params(
            M=doc["M"],
            E=doc["E"],
            omega=doc["omega"],
            v=doc["v"],
            seed=doc.get("seed"),
            dist=DistSpec.from_json(dist) if dist is not None else None,
        )


def build_params(M, E, omega, v, seed=None, dist=None) -> ModelParams:
    """Validate raw coefficients and return ModelParams.

    Rejects dimension mismatches and non-finite entries.
    """
    if not isinstance(M, (int, np.integer)) or M < 1:
        raise ValueError(f"M must be a positive integer, got {M!r}")
    omega = np.asarray(omega, dtype=float)
    v = np.asarray(v, dtype=float)
    if omega.shape != (M,):
        raise ValueError(f"omega must have shape ({M},), got {omega.shape}")
    if v.shape != (M, 2, 2):
        raise ValueError(f"v must have shape ({M}, 2, 2), got {v.shape}")
    if not np.isfinite(E):
        raise ValueError("E must be finite")
    if not np.all(np.isfinite(omega)):
        raise ValueError("omega contains non-finite entries")
    if not np.all(np.isfinite(v)):
        raise ValueError("v contains non-finite entries")
    return ModelParams(M=int(M), E=float(E), omega=omega, v=v, seed=seed, dist=dist)


def sample_params(seed: int, M: int, dist: DistSpec | None = None) -> ModelParams:
    """Draw random model parameters; deterministic given (seed, M, dist)."""
    if dist is None:
        dist = DistSpec()
    rng = np.random.default_rng(seed)
    omega = rng.uniform(dist.omega_low, dist.omega_high, size=M)
    # unit draw scaled by g so runs with the same seed share noise across g
    v = dist.g * rng.uniform(-1.0, 1.0, size=(M, 2, 2)) + dist.v_shift
    return build_params(M=M, E=dist.E, omega=omega, v=v, seed=seed, dist=dist)


def h_scale(params: ModelParams) -> float:
    """Upper bound on the spectral norm; sets the default integrator step."""
    return abs(params.E) + float(
        np.sum(np.abs(params.omega)) + np.sum(np.max(np.abs(params.v), axis=(1, 2)))
    )


def h_i_diag(params: ModelParams, s: int, nu: int) -> float:
    """Diagonal interaction matrix element on basis state |phi_s>|eps_nu>."""
    if s not in (0, 1):
        raise ValueError(f"s must be 0 or 1, got {s}")
    if not 0 <= nu < params.n_env:
        raise ValueError(f"nu out of range: {nu}")
    bits = (nu >> np.arange(params.M)) & 1
    return float(np.sum(params.v[np.arange(params.M), s, bits]))


def _apply_self(params: ModelParams, psi: np.ndarray, out: np.ndarray) -> None:
    M = params.M
    n_env = params.n_env
    p2 = psi.reshape(2, n_env)
    o2 = out.reshape(2, n_env)
    o2 += params.E * p2[::-1]
    for l in range(M):
        w = params.omega[l]
        if w == 0.0:
            continue
        shape = (2, 1 << (M - 1 - l), 2, 1 << l)
        out.reshape(shape)[:, :, ::-1, :] += w * psi.reshape(shape)


def apply_h(params: ModelParams, psi: np.ndarray, part: str = "full") -> np.ndarray:
    """Matrix-free H|psi> for the full, self-only or interaction-only part.

    O(M * 2^M) time; never materializes a matrix.  `full` is computed as the
    elementwise sum of the two parts so the decomposition is bit-exact.
    """
    psi = np.asarray(psi)
    if psi.shape != (params.dim,):
        raise ValueError(f"psi must have shape ({params.dim},), got {psi.shape}")
    if part == "interaction_only":
        return params.interaction_diagonal * psi
    if part == "self_only":
        out = np.zeros(params.dim, dtype=complex)
        _apply_self(params, psi, out)
        return out
    if part == "full":
        return apply_h(params, psi, "self_only") + apply_h(params, psi, "interaction_only")
    raise ValueError(f"unknown part {part!r}")


def _kron_chain(ops) -> np.ndarray:
    return reduce(np.kron, ops)


def dense_h(params: ModelParams) -> np.ndarray:
    """Dense Hermitian oracle built independently of apply_h (kron products).

    Restricted to M <= 8.  Real symmetric by construction, so H == H.T holds
    exactly.  Kron order: system (most significant) then sites M..1.
    """
    M = params.M
    if M > DENSE_M_MAX:
        raise ValueError(f"dense_h limited to M <= {DENSE_M_MAX}, got M={M}")
    n = params.dim
    H = np.zeros((n, n))

    def embedded(site_idx: int | None, system_op: np.ndarray, site_op: np.ndarray) -> np.ndarray:
        # site_idx is 0-based (bit position); kron chain runs high to low
        ops = [system_op] + [_I2] * M
        if site_idx is not None:
            ops[1 + (M - 1 - site_idx)] = site_op
        return _kron_chain(ops)

    H += params.E * embedded(None, _SX, _I2)
    for l in range(M):
        H += params.omega[l] * embedded(l, _I2, _SX)
    proj = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    for l in range(M):
        for i in range(2):
            for sigma in range(2):
                H += params.v[l, i, sigma] * embedded(l, proj[i], proj[sigma])
    return H
