"""Figure rendering from simulator artifacts.

Every number plotted traces to a CSV/JSON field produced by the simulator;
nothing is recomputed here (in particular the scaling slopes are read from
the fitted-values JSON, never refit).  Input schemas mirror the CSV/JSON
layouts published by the simulator package.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = ["FigureSpec", "SchemaError", "KINDS", "render", "data_check"]

KINDS = ["decoherence", "landscape", "fidelity", "scaling"]

# columns/keys required by each figure kind (extra columns are allowed)
CSV_SCHEMAS = {
    "decoherence": ["t", "abs_r"],
    "landscape": ["nu", "Lambda", "weight", "is_min", "is_max", "plateau_id"],
    "fidelity": ["t", "fidelity"],
    "scaling": ["M", "diag_mean", "diag_std", "offdiag_std"],
}
SCALING_JSON_KEYS = ["diag_slope", "diag_slope_ci95", "offdiag_slope", "offdiag_slope_ci95"]

# full artifact registry for data checks (everything the simulator writes)
ARTIFACT_CSV_SCHEMAS = {
    "trajectory.csv": [
        "t", "norm", "energy", "re_rho11", "re_rho22",
        "re_rho12", "im_rho12", "re_r", "im_r", "abs_r",
    ],
    "phases.csv": ["nu", "t", "lambda", "Lambda", "re_alpha", "im_alpha"],
    "fidelity.csv": ["t", "fidelity"],
    "landscape.csv": ["nu", "Lambda", "weight", "is_min", "is_max", "plateau_id"],
    "scaling.csv": ["M", "diag_mean", "diag_std", "offdiag_std"],
    "dephasing.csv": [
        "t", "re_r_exact", "im_r_exact", "abs_r_exact",
        "re_r_closed", "im_r_closed", "abs_r_closed",
    ],
}
ARTIFACT_JSON_KEYS = {
    "scaling.json": SCALING_JSON_KEYS + ["m_list"],
    "sweep.json": ["g_sweep", "n_seeds", "mean_fidelity", "fidelity_per_seed"],
    "selection.json": ["minima", "maxima", "plateaus", "participation_ratio"],
    "notice.json": ["degenerate", "max_deviation", "n_selected", "selected",
                    "dispersion", "selection_blind"],
    "manifest.json": ["config", "version", "wall_clock_s", "files"],
}

FIGSIZE = (6.4, 4.2)
DPI = 150


class SchemaError(ValueError):
    """Input artifact does not match the published schema."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list[str]
    out: str = ""
    title: str = ""
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise SchemaError("at least one input file is required")

    @classmethod
    def from_json(cls, path: str) -> "FigureSpec":
        with open(path) as f:
            doc = json.load(f)
        unknown = set(doc) - {"kind", "inputs", "out", "title", "labels"}
        if unknown:
            raise SchemaError(f"unknown spec fields: {sorted(unknown)}")
        inputs = doc.get("inputs", [])
        if isinstance(inputs, str):
            inputs = [inputs]
        return cls(
            kind=doc.get("kind", ""),
            inputs=inputs,
            out=doc.get("out", ""),
            title=doc.get("title", ""),
            labels=doc.get("labels", {}),
        )


def _read_csv(path: str, required: list[str]) -> dict[str, np.ndarray]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return {c: np.array([float(r[c]) for r in rows]) for c in required}


def _read_json(path: str, required: list[str]) -> dict:
    with open(path) as f:
        doc = json.load(f)
    missing = [k for k in required if k not in doc]
    if missing:
        raise SchemaError(f"{path}: missing key(s) {', '.join(missing)}")
    return doc


def _scaling_inputs(spec: FigureSpec) -> tuple[str, str]:
    csv_path = spec.inputs[0]
    if len(spec.inputs) > 1:
        json_path = spec.inputs[1]
    else:
        json_path = os.path.join(os.path.dirname(csv_path) or ".", "scaling.json")
    return csv_path, json_path


def _load(spec: FigureSpec):
    """Parse and schema-check every input; returns the plot-ready data."""
    if spec.kind == "scaling":
        csv_path, json_path = _scaling_inputs(spec)
        return (
            _read_csv(csv_path, CSV_SCHEMAS["scaling"]),
            _read_json(json_path, SCALING_JSON_KEYS),
        )
    return _read_csv(spec.inputs[0], CSV_SCHEMAS[spec.kind])


def data_check(spec: FigureSpec) -> None:
    """Validate the spec's inputs against the published schemas; no rendering."""
    _load(spec)


def check_artifact(path: str) -> None:
    """Validate any simulator artifact by its file name."""
    name = os.path.basename(path)
    if name in ARTIFACT_CSV_SCHEMAS:
        _read_csv(path, ARTIFACT_CSV_SCHEMAS[name])
    elif name in ARTIFACT_JSON_KEYS:
        _read_json(path, ARTIFACT_JSON_KEYS[name])
    else:
        raise SchemaError(f"{path}: not a recognized simulator artifact")


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    if not spec.out:
        raise SchemaError("an output image path is required for rendering")
    data = _load(spec)
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    if spec.kind == "decoherence":
        _draw_decoherence(ax, data)
    elif spec.kind == "fidelity":
        _draw_fidelity(ax, data)
    elif spec.kind == "landscape":
        _draw_landscape(ax, data)
    else:
        _draw_scaling(ax, *data)
    if spec.title:
        ax.set_title(spec.title)
    if "x" in spec.labels:
        ax.set_xlabel(spec.labels["x"])
    if "y" in spec.labels:
        ax.set_ylabel(spec.labels["y"])
    fig.tight_layout()
    fig.savefig(spec.out)
    plt.close(fig)
    return spec.out


def _draw_decoherence(ax, d):
    ax.plot(d["t"], d["abs_r"], lw=1.5)
    ax.set_xlabel("t")
    ax.set_ylabel("|r(t)|")
    ax.set_ylim(-0.05, 1.05)


def _draw_fidelity(ax, d):
    ax.plot(d["t"], d["fidelity"], lw=1.5, marker="o", ms=3)
    ax.axhline(0.99, color="0.6", ls="--", lw=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("fidelity(diagonal, exact)")


def _draw_landscape(ax, d):
    nu = d["nu"]
    plain = (d["is_min"] == 0) & (d["is_max"] == 0)
    ax.scatter(nu[plain], d["Lambda"][plain], s=8, c="0.7", label="branches")
    mins = d["is_min"] == 1
    maxs = d["is_max"] == 1
    if np.any(mins):
        ax.scatter(nu[mins], d["Lambda"][mins], s=30, c="tab:blue", marker="v", label="minima")
    if np.any(maxs):
        ax.scatter(nu[maxs], d["Lambda"][maxs], s=30, c="tab:red", marker="^", label="maxima")
    ax.set_xlabel(r"branch label $\nu$")
    ax.set_ylabel(r"$\Lambda_\nu$")
    ax.legend(loc="best", fontsize=8)


def _draw_scaling(ax, d, fit):
    m = d["M"]
    ax.errorbar(m, np.abs(d["diag_mean"]), yerr=d["diag_std"], fmt="o-", ms=4,
                label=f"diagonal mean: slope {fit['diag_slope']:.3f} "
                      f"$\\pm$ {fit['diag_slope_ci95']:.3f}")
    ax.plot(m, d["offdiag_std"], "s-", ms=4,
            label=f"off-diagonal std: slope {fit['offdiag_slope']:.3f} "
                  f"$\\pm$ {fit['offdiag_slope_ci95']:.3f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("bath size M")
    ax.set_ylabel("matrix-element scale")
    ax.legend(loc="best", fontsize=8)
