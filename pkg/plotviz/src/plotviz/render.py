"""Publication-style figures from experiment CSV files.

Four figure kinds, one per documented CSV schema:

* ``fit``      - fit.csv (x, teacher, output): teacher dots and model curve.
* ``boundary`` - boundary.csv (x1, x2, output) grid as a heatmap with the 0.5
  decision contour; an optional points.csv (x1, x2, label, predicted) is
  scattered on top.
* ``fidelity`` - fidelity.csv (gamma, chirality_ratio, gate_kind, fidelity):
  one curve per gate kind and chirality ratio against the decay rate.
* ``curve``    - learning_curve.csv (epoch, cost) on a log cost axis.

Rendering is a pure view: every number drawn comes from the file, nothing is
recomputed, and identical inputs produce identical images.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["FigureJob", "SchemaError", "render", "FIGURE_KINDS"]

FIGURE_KINDS = ("fit", "boundary", "fidelity", "curve")

_SCHEMAS = {
    "fit": ("x", "teacher", "output"),
    "boundary": ("x1", "x2", "output"),
    "fidelity": ("gamma", "chirality_ratio", "gate_kind", "fidelity"),
    "curve": ("epoch", "cost"),
    "points": ("x1", "x2", "label", "predicted"),
}

_NUMERIC = {
    "fit": ("x", "teacher", "output"),
    "boundary": ("x1", "x2", "output"),
    "fidelity": ("gamma", "chirality_ratio", "fidelity"),
    "curve": ("epoch", "cost"),
    "points": ("x1", "x2", "label", "predicted"),
}

_SAVE_OPTS = {"dpi": 120, "metadata": {"Software": "plotviz"}}


class SchemaError(ValueError):
    """The input CSV does not match the documented schema."""


@dataclass(frozen=True)
class FigureJob:
    """One rendering request: input CSV path(s), figure kind, output image."""

    inputs: tuple[str, ...]
    kind: str
    output: str
    title: str = ""

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(
                f"unknown figure kind {self.kind!r}; choose from {FIGURE_KINDS}"
            )
        if isinstance(self.inputs, str):
            object.__setattr__(self, "inputs", (self.inputs,))
        else:
            object.__setattr__(self, "inputs", tuple(self.inputs))
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


def load_columns(path: str, schema: str) -> dict[str, np.ndarray]:
    """Read one CSV against a named schema, reporting offending row/column."""
    header = _SCHEMAS[schema]
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise SchemaError(f"{path}: file is empty")
    got = tuple(lines[0].split(","))
    if got != header:
        raise SchemaError(
            f"{path}: header {got} does not match the {schema} schema {header}"
        )
    if len(lines) == 1:
        raise SchemaError(f"{path}: no data rows")
    columns: dict[str, list] = {name: [] for name in header}
    for row_no, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise SchemaError(
                f"{path}: row {row_no} has {len(cells)} cells, expected {len(header)}"
            )
        for name, cell in zip(header, cells):
            if name in _NUMERIC[schema]:
                try:
                    columns[name].append(float(cell))
                except ValueError as exc:
                    raise SchemaError(
                        f"{path}: row {row_no}, column {name!r}: "
                        f"{cell!r} is not numeric"
                    ) from exc
            else:
                columns[name].append(cell)
    return {
        name: np.asarray(vals) if name in _NUMERIC[schema] else tuple(vals)
        for name, vals in columns.items()
    }


def _render_fit(ax, job: FigureJob) -> None:
    data = load_columns(job.inputs[0], "fit")
    order = np.argsort(data["x"])
    ax.plot(data["x"][order], data["output"][order], "-", color="tab:blue", label="model")
    ax.plot(data["x"], data["teacher"], "o", color="tab:red", ms=4, label="teacher")
    ax.set_xlabel("x")
    ax.set_ylabel("f(x)")
    ax.legend()


def _render_boundary(ax, fig, job: FigureJob) -> None:
    data = load_columns(job.inputs[0], "boundary")
    x1 = np.unique(data["x1"])
    x2 = np.unique(data["x2"])
    if len(x1) * len(x2) != len(data["output"]):
        raise SchemaError(
            f"{job.inputs[0]}: rows do not form a complete x1-x2 grid "
            f"({len(x1)}x{len(x2)} vs {len(data['output'])} rows)"
        )
    key = np.lexsort((data["x2"], data["x1"]))
    grid = data["output"][key].reshape(len(x1), len(x2))
    mesh = ax.pcolormesh(x1, x2, grid.T, cmap="RdBu_r", vmin=0.0, vmax=1.0, shading="nearest")
    ax.contour(x1, x2, grid.T, levels=[0.5], colors="k", linewidths=1.2)
    fig.colorbar(mesh, ax=ax, label="output")
    if len(job.inputs) > 1:
        pts = load_columns(job.inputs[1], "points")
        zero = pts["label"] < 0.5
        ax.plot(pts["x1"][zero], pts["x2"][zero], "o", color="tab:blue", ms=4, label="class 0")
        ax.plot(pts["x1"][~zero], pts["x2"][~zero], "^", color="tab:red", ms=4, label="class 1")
        ax.legend(loc="upper right")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")


def _render_fidelity(ax, job: FigureJob) -> None:
    data = load_columns(job.inputs[0], "fidelity")
    kinds = sorted(set(data["gate_kind"]))
    ratios = np.unique(data["chirality_ratio"])
    for kind in kinds:
        for ratio in ratios:
            sel = (np.asarray(data["gate_kind"]) == kind) & (
                data["chirality_ratio"] == ratio
            )
            if not np.any(sel):
                continue
            order = np.argsort(data["gamma"][sel])
            ax.plot(
                data["gamma"][sel][order],
                data["fidelity"][sel][order],
                marker="o",
                ms=3,
                label=f"{kind}, ratio {ratio:g}",
            )
    ax.set_xlabel("decay rate")
    ax.set_ylabel("fidelity")
    ax.set_ylim(top=1.005)
    ax.legend(fontsize=7)


def _render_curve(ax, job: FigureJob) -> None:
    data = load_columns(job.inputs[0], "curve")
    ax.plot(data["epoch"], data["cost"], "-", color="tab:blue")
    ax.set_xlabel("epoch")
    ax.set_ylabel("cost")
    if np.all(data["cost"] > 0):
        ax.set_yscale("log")


def render(job: FigureJob) -> str:
    """Render one figure job to its PNG path; returns the path written."""
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    try:
        if job.kind == "fit":
            _render_fit(ax, job)
        elif job.kind == "boundary":
            _render_boundary(ax, fig, job)
        elif job.kind == "fidelity":
            _render_fidelity(ax, job)
        else:
            _render_curve(ax, job)
        if job.title:
            ax.set_title(job.title)
        fig.tight_layout()
        fig.savefig(job.output, **_SAVE_OPTS)
    finally:
        plt.close(fig)
    return job.output
