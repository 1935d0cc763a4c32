"""Phase landscape over branch labels: extremal selection, surviving weights,
two-branch decoherence reconstruction, and the pure-dephasing closed form.

Discrete stationarity is read as single-bit-flip (Hamming-1) extremality:
single flips are exactly the transitions the interaction mediates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .branches import BranchEnsemble, PhaseRecordSet, _apply_env_rotation, system_amps
from .evolver import TimeGrid
from .model import ModelParams

__all__ = [
    "Landscape",
    "SelectionResult",
    "TwoBranchResult",
    "landscape_at",
    "select_extremal",
    "survival_weights",
    "reconstruct_two_branch",
    "notice_check",
    "dephasing_closed_form",
    "landscape_to_csv",
]

POLARIZATION_TIE_TOL = 1e-9  # |c1|^2 this close to 1/2 is neither group

LANDSCAPE_COLUMNS = ["nu", "Lambda", "weight", "is_min", "is_max", "plateau_id"]


@dataclass(frozen=True)
class Landscape:
    """Snapshot of the branch phases at one time, with Hamming-1 adjacency."""

    M: int
    t: float
    nus: np.ndarray      # (n,) distinct labels
    Lambda: np.ndarray   # (n,) real
    alpha: np.ndarray    # (n,) complex weights at t
    c: np.ndarray        # (n, 2) branch system amplitudes

    def __post_init__(self):
        if len(np.unique(self.nus)) != len(self.nus):
            raise ValueError("landscape entries must have distinct nu")
        if not np.all(np.isfinite(self.Lambda)):
            raise ValueError("Lambda values must be finite")

    @property
    def n(self) -> int:
        return len(self.nus)

    def index(self) -> dict:
        return {int(nu): i for i, nu in enumerate(self.nus)}


@dataclass
class SelectionResult:
    minima: set[int]
    maxima: set[int]
    plateaus: list[set[int]]
    participation_ratio: float


@dataclass
class TwoBranchResult:
    ok: bool
    reason: str = ""
    alpha1: float = 0.0
    Lambda1: float = 0.0
    alpha2: float = 0.0
    Lambda2: float = 0.0
    r_pred: complex = 0.0 + 0.0j
    n_group1: int = 0
    n_group2: int = 0
    n_excluded: int = 0


def landscape_at(ensemble: BranchEnsemble, phases: PhaseRecordSet, t: float) -> Landscape:
    _, Lambda_t, alpha_t = phases.at(t)
    return Landscape(
        M=ensemble.M,
        t=t,
        nus=ensemble.nus.copy(),
        Lambda=np.asarray(Lambda_t, dtype=float),
        alpha=alpha_t,
        c=ensemble.c.copy(),
    )


def _neighbor_lists(landscape: Landscape) -> list[list[int]]:
    idx = landscape.index()
    out = []
    for nu in landscape.nus:
        nbrs = []
        for l in range(landscape.M):
            j = idx.get(int(nu) ^ (1 << l))
            if j is not None:
                nbrs.append(j)
        out.append(nbrs)
    return out


def select_extremal(landscape: Landscape, tol: float | None = None) -> SelectionResult:
    """Hamming-1 extrema of the phase landscape.

    nu is a minimum iff Lambda_nu < Lambda_nu' - tol for every in-set
    single-flip neighbor nu' (maxima symmetric).  Mutually adjacent entries
    within tol of each other form plateaus, reported whole.  Entries with no
    in-set neighbor are reported in neither set.  Default tol is
    1e-12 * max|Lambda|.
    """
    if landscape.n == 0:
        raise ValueError("empty landscape")
    if tol is None:
        tol = 1e-12 * float(np.max(np.abs(landscape.Lambda))) if landscape.n else 0.0
    L = landscape.Lambda
    nbrs = _neighbor_lists(landscape)

    minima: set[int] = set()
    maxima: set[int] = set()
    for i, nu in enumerate(landscape.nus):
        if not nbrs[i]:
            continue
        vals = L[list(nbrs[i])]
        if np.all(L[i] < vals - tol):
            minima.add(int(nu))
        if np.all(L[i] > vals + tol):
            maxima.add(int(nu))

    # plateaus: connected components of the |dLambda| <= tol adjacency
    parent = list(range(landscape.n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(landscape.n):
        for j in nbrs[i]:
            if abs(L[i] - L[j]) <= tol:
                parent[find(i)] = find(j)
    comps: dict[int, set[int]] = {}
    for i in range(landscape.n):
        comps.setdefault(find(i), set()).add(int(landscape.nus[i]))
    plateaus = sorted((c for c in comps.values() if len(c) > 1), key=min)

    weights = _neighborhood_weights(landscape, nbrs)
    ssq = float(np.sum(weights**2))
    pr = float(np.sum(weights)) ** 2 / ssq if ssq > 0.0 else float(landscape.n)
    return SelectionResult(minima=minima, maxima=maxima, plateaus=plateaus, participation_ratio=pr)


def _neighborhood_weights(landscape: Landscape, nbrs: list[list[int]]) -> np.ndarray:
    phasor = landscape.alpha  # weight at t, phase e^{-i Lambda} included
    mags = np.abs(landscape.alpha)
    w = np.empty(landscape.n)
    for i in range(landscape.n):
        ball = [i] + nbrs[i]
        denom = float(np.sum(mags[ball]))
        w[i] = abs(np.sum(phasor[ball])) / denom if denom > 0.0 else 0.0
    return w


def survival_weights(phases: PhaseRecordSet, t: float, smoothing: int = 1) -> np.ndarray:
    """Effective weight of each branch under neighborhood phase cancellation.

    weight(nu) = |sum_ball alpha e^{-i Lambda}| / sum_ball |alpha| over the
    Hamming ball of radius `smoothing` (in-set members only).  Near-stationary
    branches keep weight near 1; rapidly varying regions cancel.
    """
    _, _, alpha_t = phases.at(t)
    idx = {int(nu): i for i, nu in enumerate(phases.nus)}
    phasor = alpha_t  # alpha at t already carries the phase e^{-i Lambda}
    mags = np.abs(alpha_t)
    masks = [0]
    for r in range(1, smoothing + 1):
        for bitset in combinations(range(phases.M), r):
            masks.append(sum(1 << b for b in bitset))
    w = np.empty(len(phases.nus))
    for i, nu in enumerate(phases.nus):
        ball = [idx[int(nu) ^ m] for m in masks if (int(nu) ^ m) in idx]
        denom = float(np.sum(mags[ball]))
        w[i] = abs(np.sum(phasor[ball])) / denom if denom > 0.0 else 0.0
    return w


def reconstruct_two_branch(
    params: ModelParams,
    ensemble: BranchEnsemble,
    phases: PhaseRecordSet,
    t: float,
) -> TwoBranchResult:
    """Coherently merge the branches into two pointer-dominated groups.

    Branches are grouped by |c1|^2 >= 1/2 (ties within POLARIZATION_TIE_TOL
    are excluded); each group's environment vectors are summed with their
    phases into one effective (alpha, eps) pair, and r_pred is the normalized
    overlap of the two group environment vectors, comparable with the exact
    decoherence factor of the same run.
    """
    _, Lambda_t, alpha_t = phases.at(t)
    pol = np.abs(ensemble.c[:, 0]) ** 2
    tie = np.abs(pol - 0.5) <= POLARIZATION_TIE_TOL
    g1 = (pol >= 0.5) & ~tie
    g2 = (pol < 0.5) & ~tie
    if not np.any(g1) or not np.any(g2):
        return TwoBranchResult(ok=False, reason="no two-branch structure", n_excluded=int(np.sum(tie)))

    a1, a2 = system_amps(t, params.E, ensemble.c[:, 0], ensemble.c[:, 1])
    env = []
    for mask, amp in ((g1, a1), (g2, a2)):
        W = np.zeros((1, params.n_env), dtype=complex)
        np.add.at(W[0], ensemble.nus[mask], (alpha_t * amp)[mask])
        _apply_env_rotation(params.omega, t, W)
        env.append(W.reshape(params.n_env))
    n1 = float(np.linalg.norm(env[0]))
    n2 = float(np.linalg.norm(env[1]))
    if n1 < 1e-12 or n2 < 1e-12:
        return TwoBranchResult(ok=False, reason="a group carries no weight", n_excluded=int(np.sum(tie)))

    def group_phase(mask):
        wts = np.abs(alpha_t[mask]) ** 2
        return float(np.sum(wts * Lambda_t[mask]) / np.sum(wts))

    # convention matches decoherence_factor: r = rho_12 / (|E_1| |E_2|)
    r_pred = complex(np.vdot(env[1], env[0]) / (n1 * n2))
    return TwoBranchResult(
        ok=True,
        alpha1=n1,
        Lambda1=group_phase(g1),
        alpha2=n2,
        Lambda2=group_phase(g2),
        r_pred=r_pred,
        n_group1=int(np.sum(g1)),
        n_group2=int(np.sum(g2)),
        n_excluded=int(np.sum(tie)),
    )


def notice_check(
    ensemble: BranchEnsemble,
    phases: PhaseRecordSet,
    t: float,
    tol: float = 1e-10,
) -> dict:
    """Test whether the branch system states are all equal up to global phase.

    When they are (product-type initial data), phase selection cannot prefer
    any system state: every selected branch carries the same one, and the
    report flags selection as blind.  Otherwise the dispersion (population
    variance of |c1|^2) across the selected branches is measured.
    """
    c = ensemble.c
    overlap = np.abs(c @ c[0].conj())
    max_dev = float(np.max(1.0 - overlap))
    degenerate = max_dev <= tol

    landscape = landscape_at(ensemble, phases, t)
    sel = select_extremal(landscape)
    selected = sorted(sel.minima | sel.maxima)
    idx = landscape.index()
    sel_rows = [idx[nu] for nu in selected]
    if sel_rows:
        pol = np.abs(c[sel_rows, 0]) ** 2
        dispersion = float(np.var(pol))
        sel_c = c[sel_rows]
        sel_overlap = np.abs(sel_c @ sel_c[0].conj())
        selection_blind = bool(np.max(1.0 - sel_overlap) <= tol)
    else:
        dispersion = 0.0
        selection_blind = degenerate
    return {
        "degenerate": bool(degenerate),
        "max_deviation": max_dev,
        "n_selected": len(selected),
        "selected": [int(nu) for nu in selected],
        "dispersion": dispersion,
        "selection_blind": selection_blind,
    }


def dephasing_closed_form(
    params: ModelParams,
    c1: complex,
    c2: complex,
    site_amps: np.ndarray,
    grid: TimeGrid,
) -> np.ndarray:
    """Exact decoherence factor in the pure-dephasing limit (E = 0, omega = 0).

    For the initial product state (c1|phi_1> + c2|phi_2>) prod_l (a_l|up> +
    b_l|down>):

        r(t) = phase(c1 c2*) prod_l (|a_l|^2 e^{-i d_up,l t} + |b_l|^2 e^{-i d_dn,l t})

    with d_sigma,l = v_{1,sigma}^l - v_{2,sigma}^l.  |r(t)| <= 1 always.
    """
    if params.E != 0.0 or np.any(params.omega != 0.0):
        raise ValueError("closed form requires E = 0 and omega identically 0")
    site_amps = np.asarray(site_amps, dtype=complex)
    if site_amps.shape != (params.M, 2):
        raise ValueError(f"site_amps must have shape ({params.M}, 2)")
    norms = np.sum(np.abs(site_amps) ** 2, axis=1)
    if np.max(np.abs(norms - 1.0)) > 1e-9:
        raise ValueError("site amplitudes must be normalized")
    if abs(c1) < 1e-15 or abs(c2) < 1e-15:
        raise ValueError("both system amplitudes must be nonzero")

    d = params.v[:, 0, :] - params.v[:, 1, :]  # (M, 2)
    w = np.abs(site_amps) ** 2                 # (M, 2)
    times = grid.times
    factors = w[None, :, 0] * np.exp(-1j * np.outer(times, d[:, 0])) + w[None, :, 1] * np.exp(
        -1j * np.outer(times, d[:, 1])
    )
    phase = c1 * np.conj(c2) / (abs(c1) * abs(c2))
    return phase * np.prod(factors, axis=1)


def landscape_to_csv(
    landscape: Landscape,
    selection: SelectionResult,
    weights: np.ndarray,
    path,
) -> None:
    plateau_id = {}
    for pid, plat in enumerate(selection.plateaus):
        for nu in plat:
            plateau_id[nu] = pid
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(LANDSCAPE_COLUMNS)
        for i, nu in enumerate(landscape.nus):
            nu = int(nu)
            w.writerow(
                [
                    str(nu),
                    f"{landscape.Lambda[i]:.17g}",
                    f"{weights[i]:.17g}",
                    str(int(nu in selection.minima)),
                    str(int(nu in selection.maxima)),
                    str(plateau_id.get(nu, -1)),
                ]
            )
