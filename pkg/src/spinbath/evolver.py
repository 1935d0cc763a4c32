"""Exact propagation of the full state vector and the reduced-system observables."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, apply_h, dense_h, h_scale, DENSE_M_MAX

__all__ = [
    "TimeGrid",
    "Trajectory",
    "NormDriftError",
    "propagate",
    "reduced_density",
    "decoherence_factor",
    "expectation_system_op",
]

NORM_ABORT = 1e-6  # rk4 aborts when the norm drifts beyond this
ENV_NORM_FLOOR = 1e-12  # below this the decoherence factor is undefined

TRAJECTORY_COLUMNS = [
    "t", "norm", "energy",
    "re_rho11", "re_rho22", "re_rho12", "im_rho12",
    "re_r", "im_r", "abs_r",
]


class NormDriftError(RuntimeError):
    """Norm left its tolerance band: the integration step is too large."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform output grid; n_steps must be even (Simpson-compatible)."""

    t0: float
    t1: float
    n_steps: int

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("t1 must exceed t0")
        if self.n_steps <= 0 or self.n_steps % 2 != 0:
            raise ValueError("n_steps must be a positive even integer")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        k = round((t - self.t0) / self.dt)
        if not 0 <= k <= self.n_steps or abs(self.t0 + k * self.dt - t) > tol:
            raise ValueError(f"t={t} is not on the grid")
        return int(k)


@dataclass
class Trajectory:
    """Observables on the output grid; optionally the state snapshots."""

    times: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    rho: np.ndarray  # (n_t, 2, 2) complex
    r: np.ndarray    # (n_t,) complex, NaN where undefined
    states: list[np.ndarray] | None = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(TRAJECTORY_COLUMNS)
            for k in range(len(self.times)):
                rho = self.rho[k]
                w.writerow(
                    f"{x:.17g}"
                    for x in (
                        self.times[k], self.norm[k], self.energy[k],
                        rho[0, 0].real, rho[1, 1].real, rho[0, 1].real, rho[0, 1].imag,
                        self.r[k].real, self.r[k].imag, abs(self.r[k]),
                    )
                )


def reduced_density(psi: np.ndarray) -> np.ndarray:
    """Partial trace over the environment: rho_ss' = sum_nu psi(s,nu) psi*(s',nu)."""
    p2 = np.asarray(psi).reshape(2, -1)
    return p2 @ p2.conj().T


def decoherence_factor(psi: np.ndarray):
    """Normalized overlap of the two pointer-conditioned environment vectors.

    Returns None when either conditional environment vector has norm below
    ENV_NORM_FLOOR (the factor is undefined, not fabricated).  Convention:
    r = rho_12 / (|E_1| |E_2|), so rho_12 = |E_1| |E_2| r holds exactly.
    """
    p2 = np.asarray(psi).reshape(2, -1)
    n1 = np.linalg.norm(p2[0])
    n2 = np.linalg.norm(p2[1])
    if n1 < ENV_NORM_FLOOR or n2 < ENV_NORM_FLOOR:
        return None
    return complex(np.vdot(p2[1], p2[0]) / (n1 * n2))


def expectation_system_op(psi: np.ndarray, Q: np.ndarray) -> float:
    """<Q> for a system-only operator Q, including the coherent cross terms."""
    Q = np.asarray(Q)
    if Q.shape != (2, 2) or not np.allclose(Q, Q.conj().T, atol=1e-12):
        raise ValueError("Q must be a 2x2 Hermitian matrix")
    return float(np.trace(reduced_density(psi) @ Q).real)


def _observables(psi: np.ndarray, params: ModelParams):
    norm = float(np.linalg.norm(psi))
    energy = float(np.vdot(psi, apply_h(params, psi)).real)
    rho = reduced_density(psi)
    r = decoherence_factor(psi)
    return norm, energy, rho, (complex(np.nan, np.nan) if r is None else r)


def _rk4_step(params: ModelParams, psi: np.ndarray, h: float, part: str) -> np.ndarray:
    k1 = -1j * apply_h(params, psi, part)
    k2 = -1j * apply_h(params, psi + 0.5 * h * k1, part)
    k3 = -1j * apply_h(params, psi + 0.5 * h * k2, part)
    k4 = -1j * apply_h(params, psi + h * k3, part)
    return psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def propagate(
    psi0: np.ndarray,
    params: ModelParams,
    grid: TimeGrid,
    method: str = "rk4",
    step_scale: float = 0.01,
    part: str = "full",
    store_states: bool = False,
) -> Trajectory:
    """Integrate the Schroedinger equation on the output grid.

    rk4: fixed-step classical Runge-Kutta with internal step
    dt = min(grid.dt, step_scale / h_scale).  The norm is monitored and never
    renormalized; drift beyond NORM_ABORT raises NormDriftError.
    eig: dense diagonalization, exact up to rounding, M <= 8 only.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (params.dim,):
        raise ValueError(f"psi0 must have shape ({params.dim},)")
    if method == "eig":
        return _propagate_eig(psi0, params, grid, store_states)
    if method != "rk4":
        raise ValueError(f"unknown method {method!r}")

    scale = h_scale(params)
    dt_target = grid.dt if scale == 0.0 else min(grid.dt, step_scale / scale)
    n_sub = max(1, int(np.ceil(grid.dt / dt_target - 1e-12)))
    h = grid.dt / n_sub

    n_t = grid.n_steps + 1
    traj = Trajectory(
        times=grid.times,
        norm=np.empty(n_t),
        energy=np.empty(n_t),
        rho=np.empty((n_t, 2, 2), dtype=complex),
        r=np.empty(n_t, dtype=complex),
        states=[] if store_states else None,
    )
    psi = psi0.copy()
    for k in range(n_t):
        if k > 0:
            for _ in range(n_sub):
                psi = _rk4_step(params, psi, h, part)
        norm, energy, rho, r = _observables(psi, params)
        if abs(norm - 1.0) > NORM_ABORT:
            raise NormDriftError(
                f"norm drifted to {norm:.3e} at t={traj.times[k]:.6g}: "
                "step size too large"
            )
        traj.norm[k] = norm
        traj.energy[k] = energy
        traj.rho[k] = rho
        traj.r[k] = r
        if store_states:
            traj.states.append(psi.copy())
    return traj


def _propagate_eig(psi0, params, grid, store_states):
    if params.M > DENSE_M_MAX:
        raise ValueError(f"method='eig' requires M <= {DENSE_M_MAX}")
    H = dense_h(params)
    evals, vecs = np.linalg.eigh(H)
    coeff0 = vecs.conj().T @ psi0
    n_t = grid.n_steps + 1
    traj = Trajectory(
        times=grid.times,
        norm=np.empty(n_t),
        energy=np.empty(n_t),
        rho=np.empty((n_t, 2, 2), dtype=complex),
        r=np.empty(n_t, dtype=complex),
        states=[] if store_states else None,
    )
    for k, t in enumerate(grid.times):
        psi = vecs @ (np.exp(-1j * evals * (t - grid.t0)) * coeff0)
        norm, energy, rho, r = _observables(psi, params)
        traj.norm[k] = norm
        traj.energy[k] = energy
        traj.rho[k] = rho
        traj.r[k] = r
        if store_states:
            traj.states.append(psi)
    return traj
