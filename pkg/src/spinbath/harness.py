"""Reproducible experiment runner: config -> CSV/JSON artifacts + manifest.

Artifacts are written atomically (temp file + rename); the manifest, written
last, records the config echo, package version, wall clock and a sha256 per
output file.  Identical configs reproduce byte-identical artifacts.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from .branches import (
    assemble_state,
    ensemble_state0,
    evolve_diagonal,
    make_ensemble,
    scaling_stats,
)
from .evolver import TimeGrid, propagate
from .model import DistSpec, ModelParams, build_params, sample_params
from .stationary import (
    dephasing_closed_form,
    landscape_at,
    landscape_to_csv,
    notice_check,
    select_extremal,
    survival_weights,
)

__all__ = [
    "ConfigError",
    "ResourceGuardError",
    "RunConfig",
    "load_config",
    "run",
    "fidelity",
]

EXACT_M_MAX = 16  # 2^17 amplitudes is the largest exact-propagation register

FIDELITY_COLUMNS = ["t", "fidelity"]
DEPHASING_COLUMNS = [
    "t",
    "re_r_exact", "im_r_exact", "abs_r_exact",
    "re_r_closed", "im_r_closed", "abs_r_closed",
]

DEFAULT_CONFIG = {
    "method": "rk4",
    "step_scale": 0.01,
    "jobs": 1,
    "model": {"sample": {"M": 6, "g": 0.1}},
    "ensemble": {"mode": "bloch-random", "k": None},
    "grid": {"t0": 0.0, "t1": 5.0, "n_steps": 100},
}


class ConfigError(ValueError):
    """Invalid run configuration (schema violation or inconsistent fields)."""


class ResourceGuardError(RuntimeError):
    """The requested run exceeds the desk-scale resource limits."""


def _schema() -> dict:
    text = resources.files("spinbath").joinpath("schemas/run_config.schema.json").read_text()
    return json.loads(text)


def load_config(path) -> "RunConfig":
    with open(path) as f:
        doc = json.load(f)
    return RunConfig.from_dict(doc)


@dataclass
class RunConfig:
    raw: dict

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        try:
            jsonschema.validate(doc, _schema())
        except jsonschema.ValidationError as e:
            raise ConfigError(f"config invalid at {e.json_path}: {e.message}") from e
        merged = copy.deepcopy(DEFAULT_CONFIG)
        for key, val in doc.items():
            if isinstance(val, dict) and isinstance(merged.get(key), dict):
                merged[key].update(val)
            else:
                merged[key] = val
        return cls(raw=merged)

    @property
    def experiment(self) -> str:
        return self.raw["experiment"]

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    def grid(self) -> TimeGrid:
        g = self.raw["grid"]
        try:
            return TimeGrid(t0=g["t0"], t1=g["t1"], n_steps=g["n_steps"])
        except ValueError as e:
            raise ConfigError(f"config invalid at $.grid: {e}") from e

    def model(self, g_override: float | None = None) -> ModelParams:
        m = self.raw["model"]
        if "sample" in m and "omega" not in m:
            s = m["sample"]
            zurek = s.get("zurek", False)
            dist = DistSpec(
                g=g_override if g_override is not None else s.get("g", 0.1),
                E=0.0 if zurek else s.get("E", 1.0),
                omega_low=0.0 if zurek else s.get("omega_low", 0.5),
                omega_high=0.0 if zurek else s.get("omega_high", 1.5),
                v_shift=s.get("v_shift", 0.0),
            )
            return sample_params(seed=self.seed, M=s["M"], dist=dist)
        if "omega" in m:
            try:
                return ModelParams.from_json(m)
            except ValueError as e:
                raise ConfigError(f"config invalid at $.model: {e}") from e
        raise ConfigError("config invalid at $.model: need explicit coefficients or a sample spec")

    def ensemble(self, params: ModelParams):
        e = self.raw["ensemble"]
        return make_ensemble(params.M, mode=e.get("mode", "bloch-random"), seed=self.seed, k=e.get("k"))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 for same-dimension state vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(abs(np.vdot(a, b)) ** 2)


def _atomic_write(path: str, writer) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _write_csv(path: str, columns, rows) -> None:
    def w(tmp):
        with open(tmp, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(columns)
            for row in rows:
                writer.writerow(
                    str(x) if isinstance(x, (int, str)) else f"{x:.17g}" for x in row
                )

    _atomic_write(path, w)


def _write_json(path: str, doc: dict) -> None:
    def w(tmp):
        with open(tmp, "w") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")

    _atomic_write(path, w)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _guard_exact(M: int) -> None:
    if M > EXACT_M_MAX:
        raise ResourceGuardError(
            f"exact propagation is limited to M <= {EXACT_M_MAX} "
            f"(2^{EXACT_M_MAX + 1} amplitudes); got M={M}. "
            "Use the analytic scaling experiment or a sampled ensemble instead."
        )


def run(config: RunConfig, out_dir: str | None = None) -> dict:
    """Execute one experiment; returns the manifest dictionary."""
    t_start = time.monotonic()
    out_dir = out_dir or config.raw.get("out", ".")
    os.makedirs(out_dir, exist_ok=True)

    runner = {
        "exact": _run_exact,
        "diag": _run_diag,
        "compare": _run_compare,
        "scaling": _run_scaling,
        "dephasing": _run_dephasing,
        "landscape": _run_landscape,
        "notice": _run_notice,
    }[config.experiment]
    files = runner(config, out_dir)

    manifest = {
        "config": config.raw,
        "version": __version__,
        "wall_clock_s": time.monotonic() - t_start,
        "files": {name: _sha256(os.path.join(out_dir, name)) for name in sorted(files)},
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return manifest


def _run_exact(config: RunConfig, out_dir: str) -> list[str]:
    params = config.model()
    _guard_exact(params.M)
    ensemble = config.ensemble(params)
    psi0 = ensemble_state0(params, ensemble)
    traj = propagate(
        psi0, params, config.grid(),
        method=config.raw["method"], step_scale=config.raw["step_scale"],
    )
    _atomic_write(os.path.join(out_dir, "trajectory.csv"), traj.to_csv)
    return ["trajectory.csv"]


def _run_diag(config: RunConfig, out_dir: str) -> list[str]:
    params = config.model()
    ensemble = config.ensemble(params)
    phases = evolve_diagonal(params, ensemble, config.grid())
    _atomic_write(os.path.join(out_dir, "phases.csv"), phases.to_csv)
    return ["phases.csv"]


def _compare_sweep_task(args) -> tuple[float, int, float]:
    raw, g, seed, step_scale = args
    config = RunConfig(raw=copy.deepcopy(raw))
    config.raw["seed"] = seed
    params = config.model(g_override=g)
    ensemble = config.ensemble(params)
    grid = config.grid()
    phases = evolve_diagonal(params, ensemble, grid)
    psi_exact = propagate(
        ensemble_state0(params, ensemble), params,
        TimeGrid(grid.t0, grid.t1, 2),
        step_scale=step_scale, store_states=True,
    ).states[-1]
    fid = fidelity(assemble_state(params, ensemble, phases, grid.t1), psi_exact)
    return g, seed, fid


def _run_compare(config: RunConfig, out_dir: str) -> list[str]:
    params = config.model()
    _guard_exact(params.M)
    ensemble = config.ensemble(params)
    grid = config.grid()
    phases = evolve_diagonal(params, ensemble, grid)
    traj = propagate(
        ensemble_state0(params, ensemble), params, grid,
        method=config.raw["method"], step_scale=config.raw["step_scale"],
        store_states=True,
    )
    rows = []
    for k, t in enumerate(grid.times):
        rows.append((t, fidelity(assemble_state(params, ensemble, phases, t), traj.states[k])))
    files = ["fidelity.csv"]
    _write_csv(os.path.join(out_dir, "fidelity.csv"), FIDELITY_COLUMNS, rows)

    sweep = config.raw.get("compare", {})
    g_sweep = sweep.get("g_sweep")
    if g_sweep:
        n_seeds = sweep.get("n_seeds", 20)
        step_scale = sweep.get("sweep_step_scale", 0.04)
        tasks = [
            (config.raw, g, config.seed + i, step_scale)
            for g in g_sweep
            for i in range(n_seeds)
        ]
        jobs = config.raw.get("jobs", 1)
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_compare_sweep_task, tasks))
        else:
            results = [_compare_sweep_task(t) for t in tasks]
        by_g: dict[float, list[float]] = {g: [] for g in g_sweep}
        for g, _seed, fid in sorted(results, key=lambda r: (r[0], r[1])):
            by_g[g].append(fid)
        _write_json(
            os.path.join(out_dir, "sweep.json"),
            {
                "g_sweep": list(g_sweep),
                "n_seeds": n_seeds,
                "mean_fidelity": [float(np.mean(by_g[g])) for g in g_sweep],
                "fidelity_per_seed": {f"{g:g}": by_g[g] for g in g_sweep},
            },
        )
        files.append("sweep.json")
    return files


def _run_scaling(config: RunConfig, out_dir: str) -> list[str]:
    s = config.raw.get("scaling", {})
    summary = scaling_stats(
        s.get("m_list", [64, 256, 1024, 4096, 16384]),
        seed=config.seed,
        t=s.get("t", 1.0),
        samples=s.get("samples", 200),
        g=s.get("g", 0.1),
    )
    _atomic_write(os.path.join(out_dir, "scaling.csv"), summary.to_csv)
    _write_json(os.path.join(out_dir, "scaling.json"), summary.to_json())
    return ["scaling.csv", "scaling.json"]


def _run_dephasing(config: RunConfig, out_dir: str) -> list[str]:
    m = config.raw["model"]
    if "sample" in m and "omega" not in m:
        if not m["sample"].get("zurek", True):
            raise ConfigError("dephasing requires the Zurek limit (zurek: true)")
        m["sample"]["zurek"] = True
    params = config.model()
    if params.E != 0.0 or np.any(params.omega != 0.0):
        raise ConfigError("dephasing requires E = 0 and omega identically 0")
    _guard_exact(params.M)
    grid = config.grid()
    rng = np.random.default_rng(config.seed)
    mode = config.raw.get("dephasing", {}).get("site_amps", "random")
    if mode == "uniform":
        site_amps = np.full((params.M, 2), 1.0 / np.sqrt(2.0), dtype=complex)
    else:
        theta = rng.uniform(0.0, np.pi, size=params.M)
        site_amps = np.stack([np.cos(theta / 2.0), np.sin(theta / 2.0)], axis=1).astype(complex)
    c1, c2 = 1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)

    env = np.array([1.0 + 0.0j])
    for l in range(params.M - 1, -1, -1):  # site M down to 1: little-endian nu
        env = np.kron(env, site_amps[l])
    psi0 = np.concatenate([c1 * env, c2 * env])
    traj = propagate(psi0, params, grid, step_scale=config.raw["step_scale"])
    r_closed = dephasing_closed_form(params, c1, c2, site_amps, grid)
    rows = []
    for k, t in enumerate(grid.times):
        re = traj.r[k]
        rc = r_closed[k]
        rows.append((t, re.real, re.imag, abs(re), rc.real, rc.imag, abs(rc)))
    _write_csv(os.path.join(out_dir, "dephasing.csv"), DEPHASING_COLUMNS, rows)
    return ["dephasing.csv"]


def _run_landscape(config: RunConfig, out_dir: str) -> list[str]:
    params = config.model()
    ensemble = config.ensemble(params)
    grid = config.grid()
    phases = evolve_diagonal(params, ensemble, grid)
    t = config.raw.get("landscape", {}).get("t", grid.t1)
    smoothing = config.raw.get("landscape", {}).get("smoothing", 1)
    landscape = landscape_at(ensemble, phases, t)
    selection = select_extremal(landscape)
    weights = survival_weights(phases, t, smoothing=smoothing)
    _atomic_write(
        os.path.join(out_dir, "landscape.csv"),
        lambda p: landscape_to_csv(landscape, selection, weights, p),
    )
    _write_json(
        os.path.join(out_dir, "selection.json"),
        {
            "minima": sorted(selection.minima),
            "maxima": sorted(selection.maxima),
            "plateaus": [sorted(p) for p in selection.plateaus],
            "participation_ratio": selection.participation_ratio,
        },
    )
    return ["landscape.csv", "selection.json"]


def _run_notice(config: RunConfig, out_dir: str) -> list[str]:
    params = config.model()
    ensemble = config.ensemble(params)
    grid = config.grid()
    phases = evolve_diagonal(params, ensemble, grid)
    report = notice_check(ensemble, phases, grid.t1)
    _write_json(os.path.join(out_dir, "notice.json"), report)
    return ["notice.json"]
