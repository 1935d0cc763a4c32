"""Interaction-picture branches: phase dynamics, matrix elements, scaling laws.

A branch is one nu-labeled unit (c1 |phi_1(t)> + c2 |phi_2(t)>) |eps_nu(t)>.
Under the diagonal approximation each branch only accumulates the phase
Lambda_nu(t), the time integral of its interaction energy.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .evolver import TimeGrid
from .model import ModelParams

__all__ = [
    "Branch",
    "BranchEnsemble",
    "PhaseRecordSet",
    "ScalingSummary",
    "make_ensemble",
    "system_amps",
    "lambda_nu",
    "offdiag_elements",
    "scaling_stats",
    "evolve_diagonal",
    "assemble_state",
    "branch_state",
    "ensemble_state0",
    "apply_self_evolution",
    "cumulative_simpson",
]

FULL_ENSEMBLE_M_MAX = 14  # beyond this an explicit K-sampled ensemble is required

PHASES_COLUMNS = ["nu", "t", "lambda", "Lambda", "re_alpha", "im_alpha"]


@dataclass(frozen=True)
class Branch:
    nu: int
    c1: complex
    c2: complex
    alpha0: complex = 1.0 + 0.0j


@dataclass(frozen=True)
class BranchEnsemble:
    """Distinct-nu branch collection; sampled=True marks a strict subset of 2^M."""

    M: int
    nus: np.ndarray        # (n,) int64, distinct
    c: np.ndarray          # (n, 2) complex, rows normalized
    alpha0: np.ndarray     # (n,) complex, sum |alpha0|^2 = 1
    mode: str = "custom"
    sampled: bool = False

    def __post_init__(self):
        if len(np.unique(self.nus)) != len(self.nus):
            raise ValueError("branch labels nu must be distinct")
        if np.max(np.abs(np.sum(np.abs(self.c) ** 2, axis=1) - 1.0)) > 1e-12:
            raise ValueError("branch system amplitudes must be normalized")
        if abs(np.sum(np.abs(self.alpha0) ** 2) - 1.0) > 1e-12:
            raise ValueError("branch weights must satisfy sum |alpha0|^2 = 1")

    @property
    def n(self) -> int:
        return len(self.nus)

    def branch(self, i: int) -> Branch:
        return Branch(
            nu=int(self.nus[i]),
            c1=complex(self.c[i, 0]),
            c2=complex(self.c[i, 1]),
            alpha0=complex(self.alpha0[i]),
        )


def make_ensemble(
    M: int,
    mode: str = "bloch-random",
    seed: int = 0,
    k: int | None = None,
) -> BranchEnsemble:
    """Build a seeded branch ensemble.

    mode 'bloch-random': (c1, c2) independent per nu, uniform on the Bloch
    sphere; 'product': one Bloch draw shared by every branch (the degenerate
    case where the random-phase mechanism cannot discriminate); 'polarized':
    each branch is exactly |phi_1> or |phi_2> (random half and half).
    k=None uses all 2^M configurations (M <= FULL_ENSEMBLE_M_MAX), otherwise
    k distinct nus are drawn uniformly and the weights renormalized.
    """
    rng = np.random.default_rng(seed)
    n_full = 1 << M
    if k is None:
        if M > FULL_ENSEMBLE_M_MAX:
            raise ValueError(
                f"full ensemble needs M <= {FULL_ENSEMBLE_M_MAX}; pass k for larger M"
            )
        nus = np.arange(n_full, dtype=np.int64)
        sampled = False
    else:
        if not 1 <= k <= n_full:
            raise ValueError(f"k must be in [1, 2^M], got {k}")
        nus = np.sort(rng.choice(n_full, size=k, replace=False)).astype(np.int64)
        sampled = k < n_full
    n = len(nus)

    if mode == "bloch-random":
        c = _bloch_uniform(rng, n)
    elif mode == "product":
        c = np.repeat(_bloch_uniform(rng, 1), n, axis=0)
    elif mode == "polarized":
        which = rng.integers(0, 2, size=n)
        c = np.zeros((n, 2), dtype=complex)
        c[np.arange(n), which] = 1.0
    else:
        raise ValueError(f"unknown ensemble mode {mode!r}")

    alpha0 = np.full(n, 1.0 / np.sqrt(n), dtype=complex)
    return BranchEnsemble(M=M, nus=nus, c=c, alpha0=alpha0, mode=mode, sampled=sampled)


def _bloch_uniform(rng, n: int) -> np.ndarray:
    u = rng.uniform(-1.0, 1.0, size=n)          # cos(theta)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    c = np.empty((n, 2), dtype=complex)
    c[:, 0] = np.sqrt((1.0 + u) / 2.0)
    c[:, 1] = np.sqrt((1.0 - u) / 2.0) * np.exp(1j * phi)
    return c


def system_amps(t: float, E: float, c1, c2):
    """Pointer-basis amplitudes of the self-evolved system state.

    a1 = c1 cos(Et) - i c2 sin(Et),  a2 = c2 cos(Et) - i c1 sin(Et).
    Accepts scalars or aligned arrays for (c1, c2).
    """
    ct = np.cos(E * t)
    st = np.sin(E * t)
    return c1 * ct - 1j * c2 * st, c2 * ct - 1j * c1 * st


def _site_bits(nus: np.ndarray, M: int) -> np.ndarray:
    """(n, M) array of site spins: 0 = up, 1 = down; column l is site l+1."""
    return (np.asarray(nus)[:, None] >> np.arange(M)[None, :]) & 1


def lambda_nu(params: ModelParams, branch: Branch, t: float) -> float:
    """Interaction energy of one branch, <nu(t)| h_I |nu(t)>, in closed form."""
    a1, a2 = system_amps(t, params.E, branch.c1, branch.c2)
    u = np.array([abs(a1) ** 2, abs(a2) ** 2])
    pc = np.cos(params.omega * t) ** 2
    ps = np.sin(params.omega * t) ** 2
    bits = _site_bits([branch.nu], params.M)[0]
    p_up = np.where(bits == 0, pc, ps)          # weight on the up coupling
    site_sum = params.v[:, :, 0] * p_up[:, None] + params.v[:, :, 1] * (1.0 - p_up)[:, None]
    return float(u @ site_sum.sum(axis=0))


def offdiag_elements(params: ModelParams, branch: Branch, t: float) -> np.ndarray:
    """Coupling of branch nu to each single-spin-flip neighbor nu ^ (1 << l).

    Entry l is <nu(t)| h_I |nu'(t)> with the branch's own system state on both
    sides.  Direct evaluation of the evolved single-site overlaps gives the
    combination (v_down - v_up), with the sign set by the spin at site l:

        entry_l = +/- i sin(w_l t) cos(w_l t) * sum_i |a_i|^2 (v_{i,down} - v_{i,up})

    (+ when site l of nu is up).  The brute-force sandwich oracle in the test
    suite pins this sign.
    """
    a1, a2 = system_amps(t, params.E, branch.c1, branch.c2)
    u = np.array([abs(a1) ** 2, abs(a2) ** 2])
    bits = _site_bits([branch.nu], params.M)[0]
    sgn = np.where(bits == 0, 1.0, -1.0)
    vdiff = params.v[:, :, 1] - params.v[:, :, 0]   # (M, 2): v_down - v_up
    sc = np.sin(params.omega * t) * np.cos(params.omega * t)
    return 1j * sc * sgn * (vdiff @ u)


@dataclass
class PhaseRecordSet:
    """Per-branch phase history on a shared grid.

    lam and Lambda have shape (n_branch, n_t); alpha(t) = alpha0 e^{-i Lambda}.
    """

    M: int
    grid: TimeGrid
    nus: np.ndarray
    alpha0: np.ndarray
    lam: np.ndarray
    Lambda: np.ndarray

    @property
    def alpha(self) -> np.ndarray:
        return self.alpha0[:, None] * np.exp(-1j * self.Lambda)

    def at(self, t: float):
        k = self.grid.index_of(t)
        return self.lam[:, k], self.Lambda[:, k], self.alpha0 * np.exp(-1j * self.Lambda[:, k])

    def to_csv(self, path) -> None:
        alpha = self.alpha
        times = self.grid.times
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(PHASES_COLUMNS)
            for i, nu in enumerate(self.nus):
                for k, t in enumerate(times):
                    w.writerow(
                        [str(int(nu))]
                        + [
                            f"{x:.17g}"
                            for x in (
                                t, self.lam[i, k], self.Lambda[i, k],
                                alpha[i, k].real, alpha[i, k].imag,
                            )
                        ]
                    )


def _lambda_matrix(params: ModelParams, ensemble: BranchEnsemble, times: np.ndarray) -> np.ndarray:
    """lambda_nu over (branch, time) without any 2^M-sized intermediate."""
    M = params.M
    bits = _site_bits(ensemble.nus, M).astype(float)   # (n, M)
    vdiff_updown = params.v[:, :, 1] - params.v[:, :, 0]  # (M, 2)
    out = np.empty((ensemble.n, len(times)))
    for k, t in enumerate(times):
        a1, a2 = system_amps(t, params.E, ensemble.c[:, 0], ensemble.c[:, 1])
        u = np.stack([np.abs(a1) ** 2, np.abs(a2) ** 2], axis=1)  # (n, 2)
        pc = np.cos(params.omega * t) ** 2                         # (M,)
        # site sum with every site up, plus per-branch correction for downs
        base = params.v[:, :, 0] * pc[:, None] + params.v[:, :, 1] * (1.0 - pc)[:, None]
        corr = vdiff_updown * (2.0 * pc - 1.0)[:, None]            # (M, 2)
        s = base.sum(axis=0)[None, :] + bits @ corr                # (n, 2)
        out[:, k] = np.sum(u * s, axis=1)
    return out


def cumulative_simpson(y: np.ndarray, dt: float) -> np.ndarray:
    """Composite-Simpson running integral along the last axis (O(dt^4)).

    Interior odd points use the quadratic through their three surrounding
    samples; requires an even number of intervals.
    """
    n = y.shape[-1] - 1
    if n % 2 != 0:
        raise ValueError("cumulative_simpson needs an even number of intervals")
    out = np.zeros_like(y, dtype=float)
    for k in range(2, n + 1, 2):
        out[..., k] = out[..., k - 2] + dt / 3.0 * (
            y[..., k - 2] + 4.0 * y[..., k - 1] + y[..., k]
        )
    for k in range(1, n + 1, 2):
        out[..., k] = out[..., k - 1] + dt / 12.0 * (
            5.0 * y[..., k - 1] + 8.0 * y[..., k] - y[..., k + 1]
        )
    return out


def evolve_diagonal(params: ModelParams, ensemble: BranchEnsemble, grid: TimeGrid) -> PhaseRecordSet:
    """Accumulate each branch's phase Lambda_nu(t) on the grid.

    The branch weight magnitude never changes: the diagonal approximation is
    pure phase, alpha_nu(t) = alpha0 exp(-i Lambda_nu(t)).
    """
    lam = _lambda_matrix(params, ensemble, grid.times)
    Lambda = cumulative_simpson(lam, grid.dt)
    return PhaseRecordSet(
        M=params.M,
        grid=grid,
        nus=ensemble.nus.copy(),
        alpha0=ensemble.alpha0.copy(),
        lam=lam,
        Lambda=Lambda,
    )


def _apply_env_rotation(omega: np.ndarray, t: float, W: np.ndarray) -> None:
    """In-place self-evolution of every site: |s(t)> = cos wt |s> - i sin wt |flip s>.

    W has shape (k, 2^M); the environment axis is the last one.
    """
    M = len(omega)
    for l in range(M):
        ct = np.cos(omega[l] * t)
        st = np.sin(omega[l] * t)
        if st == 0.0 and ct == 1.0:
            continue
        v4 = W.reshape(-1, 1 << (M - 1 - l), 2, 1 << l)
        up = v4[:, :, 0, :].copy()
        dn = v4[:, :, 1, :].copy()
        v4[:, :, 0, :] = ct * up - 1j * st * dn
        v4[:, :, 1, :] = ct * dn - 1j * st * up


def assemble_state(
    params: ModelParams,
    ensemble: BranchEnsemble,
    phases: PhaseRecordSet,
    t: float,
) -> np.ndarray:
    """Approximate full state: sum_nu alpha_nu(t) |nu(t)>.

    Branch coefficients are scattered onto the computational basis first and
    the single-site self-rotations applied once, so the cost is O(M 2^M)
    regardless of the ensemble size.  t must lie on the phase grid.
    """
    _, _, alpha_t = phases.at(t)
    a1, a2 = system_amps(t, params.E, ensemble.c[:, 0], ensemble.c[:, 1])
    W = np.zeros((2, params.n_env), dtype=complex)
    W[0, ensemble.nus] = alpha_t * a1
    W[1, ensemble.nus] = alpha_t * a2
    _apply_env_rotation(params.omega, t, W)
    return W.reshape(params.dim)


def ensemble_state0(params: ModelParams, ensemble: BranchEnsemble) -> np.ndarray:
    """The t = t0 state of the ensemble (no self-evolution applied)."""
    W = np.zeros((2, params.n_env), dtype=complex)
    W[0, ensemble.nus] = ensemble.alpha0 * ensemble.c[:, 0]
    W[1, ensemble.nus] = ensemble.alpha0 * ensemble.c[:, 1]
    return W.reshape(params.dim)


def branch_state(params: ModelParams, branch: Branch, t: float, weight: complex = 1.0) -> np.ndarray:
    """Explicit full vector of a single branch |nu(t)> (times an optional weight)."""
    a1, a2 = system_amps(t, params.E, branch.c1, branch.c2)
    W = np.zeros((2, params.n_env), dtype=complex)
    W[0, branch.nu] = weight * a1
    W[1, branch.nu] = weight * a2
    _apply_env_rotation(params.omega, t, W)
    return W.reshape(params.dim)


def apply_self_evolution(params: ModelParams, psi: np.ndarray, t: float) -> np.ndarray:
    """Closed-form exp(-i h_0 t) |psi>: system rotation times site rotations."""
    W = np.array(psi, dtype=complex).reshape(2, params.n_env)
    ct = np.cos(params.E * t)
    st = np.sin(params.E * t)
    top = W[0].copy()
    W[0] = ct * top - 1j * st * W[1]
    W[1] = ct * W[1] - 1j * st * top
    _apply_env_rotation(params.omega, t, W)
    return W.reshape(params.dim)


@dataclass
class ScalingSummary:
    """Element statistics versus bath size, with fitted log-log slopes.

    diag_mean uses couplings shifted to mean diag_shift (the macroscopic O(M)
    regime); diag_std and offdiag_std use the symmetric +/-g distribution.
    """

    m_list: list[int]
    diag_mean: np.ndarray
    diag_std: np.ndarray
    offdiag_std: np.ndarray
    diag_slope: float
    diag_slope_ci: float
    offdiag_slope: float
    offdiag_slope_ci: float
    g: float
    t: float
    samples: int
    seed: int

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["M", "diag_mean", "diag_std", "offdiag_std"])
            for i, m in enumerate(self.m_list):
                w.writerow(
                    [str(m)]
                    + [
                        f"{x:.17g}"
                        for x in (self.diag_mean[i], self.diag_std[i], self.offdiag_std[i])
                    ]
                )

    def to_json(self) -> dict:
        return {
            "m_list": list(self.m_list),
            "diag_slope": self.diag_slope,
            "diag_slope_ci95": self.diag_slope_ci,
            "offdiag_slope": self.offdiag_slope,
            "offdiag_slope_ci95": self.offdiag_slope_ci,
            "g": self.g,
            "t": self.t,
            "samples": self.samples,
            "seed": self.seed,
        }


def scaling_stats(
    m_list,
    seed: int,
    t: float,
    samples: int,
    g: float = 0.1,
    omega_low: float = 0.5,
    omega_high: float = 1.5,
    diag_shift: float | None = None,
) -> ScalingSummary:
    """Monte-Carlo statistics of the closed-form matrix elements versus M.

    Cost O(M * samples) per bath size; no 2^M-sized object is ever built.
    diag_shift (default 0.5 g) is the common mean added to every coupling for
    the diagonal-mean fit; a shift leaves the off-diagonal combination
    (v_down - v_up) untouched, so one sampling pass serves both fits.
    """
    m_list = [int(m) for m in m_list]
    if len(m_list) < 3:
        raise ValueError("need at least 3 bath sizes to fit a slope")
    if min(m_list) < 8:
        raise ValueError("bath sizes below 8 are outside the scaling regime")
    if diag_shift is None:
        diag_shift = 0.5 * g

    rng = np.random.default_rng(seed)
    diag_mean = np.empty(len(m_list))
    diag_std = np.empty(len(m_list))
    offdiag_std = np.empty(len(m_list))
    for i, m in enumerate(m_list):
        omega = rng.uniform(omega_low, omega_high, size=(samples, m))
        v = g * rng.uniform(-1.0, 1.0, size=(samples, m, 2, 2))
        bits = rng.integers(0, 2, size=(samples, m))
        u1 = rng.uniform(0.0, 1.0, size=samples)  # |a_1|^2, Bloch-uniform
        u = np.stack([u1, 1.0 - u1], axis=1)      # (samples, 2)

        pc = np.cos(omega * t) ** 2
        p_up = np.where(bits == 0, pc, 1.0 - pc)  # (samples, m)
        site = v[..., 0] * p_up[..., None] + v[..., 1] * (1.0 - p_up)[..., None]
        diag = np.sum(u * site.sum(axis=1), axis=1)  # (samples,)

        sc = np.sin(omega * t) * np.cos(omega * t)
        sgn = np.where(bits == 0, 1.0, -1.0)
        vdiff = v[..., 1] - v[..., 0]                # (samples, m, 2)
        offsum = np.sum(sc * sgn * np.einsum("smi,si->sm", vdiff, u), axis=1)

        diag_mean[i] = np.mean(diag) + m * diag_shift
        diag_std[i] = np.std(diag)
        offdiag_std[i] = np.std(offsum)

    logm = np.log(np.asarray(m_list, dtype=float))
    fit_d = stats.linregress(logm, np.log(diag_mean))
    fit_o = stats.linregress(logm, np.log(offdiag_std))
    return ScalingSummary(
        m_list=m_list,
        diag_mean=diag_mean,
        diag_std=diag_std,
        offdiag_std=offdiag_std,
        diag_slope=float(fit_d.slope),
        diag_slope_ci=float(1.96 * fit_d.stderr),
        offdiag_slope=float(fit_o.slope),
        offdiag_slope_ci=float(1.96 * fit_o.stderr),
        g=g,
        t=t,
        samples=samples,
        seed=seed,
    )
