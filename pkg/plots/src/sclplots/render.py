"""Render one figure from one CSV artifact.

Each figure kind is bound to the exact column schema of the CSV that the
solver package's command line tool writes:

- ``snapshot``     <- x, u1, u2                     (solution snapshot)
- ``decay_curve``  <- time, functional, mean, variance, stderr, n_paths
- ``selection``    <- sigma, dist_to_u1, dist_to_u2, stderr
- ``crossval``     <- x, fd_value, fk_value, fk_stderr

Output is vector SVG with the embedded date suppressed, so re-rendering
the same input produces the same bytes.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
# fixed salt for SVG element ids, so re-rendering is byte-identical
matplotlib.rcParams["svg.hashsalt"] = "sclplots"
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["FigureSpec", "SchemaError", "render", "KINDS"]


class SchemaError(Exception):
    """Input CSV is missing, unreadable, or has the wrong columns."""


SCHEMAS = {
    "snapshot": ["x", "u1", "u2"],
    "decay_curve": ["time", "functional", "mean", "variance", "stderr",
                    "n_paths"],
    "selection": ["sigma", "dist_to_u1", "dist_to_u2", "stderr"],
    "crossval": ["x", "fd_value", "fk_value", "fk_stderr"],
}
KINDS = tuple(sorted(SCHEMAS))


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    csv_path: str
    out_path: str
    time: float | None = None     # snapshot only: t for the support edges
    logy: bool = False
    extra: dict = field(default_factory=dict)


def load_table(path: str, kind: str) -> list[dict]:
    if kind not in SCHEMAS:
        raise SchemaError(f"unknown figure kind {kind!r}; one of {KINDS}")
    expected = SCHEMAS[kind]
    if not os.path.exists(path):
        raise SchemaError(
            f"{path}: no such CSV (expected columns {expected})")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != expected:
            raise SchemaError(
                f"{path}: columns {reader.fieldnames} do not match the "
                f"{kind!r} schema {expected}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows under columns {expected}")
    return rows


def floats(rows, key):
    return [float(r[key]) for r in rows]


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _draw_snapshot(rows, spec: FigureSpec, ax):
    x = floats(rows, "x")
    ax.plot(x, floats(rows, "u1"), label="solution 1", lw=1.5)
    ax.plot(x, floats(rows, "u2"), label="solution 2", lw=1.5, ls="--")
    if spec.time is not None:
        t = spec.time
        left, right = -((t / 2.0) ** 2), (t / 2.0 + 1.0) ** 2
        ax.axvline(left, color="k", lw=0.8, ls=":",
                   label=f"support edges at t={t:g}")
        ax.axvline(right, color="k", lw=0.8, ls=":")


def _draw_decay_curve(rows, spec: FigureSpec, ax):
    labels = sorted({r["functional"] for r in rows})
    for lab in labels:
        sub = [r for r in rows if r["functional"] == lab]
        sub.sort(key=lambda r: float(r["time"]))
        t = floats(sub, "time")
        m = floats(sub, "mean")
        se = floats(sub, "stderr")
        ax.plot(t, m, lw=1.5, label=lab)
        ax.fill_between(t, [a - b for a, b in zip(m, se)],
                        [a + b for a, b in zip(m, se)], alpha=0.25)
    if spec.logy:
        ax.set_yscale("log")


def _draw_selection(rows, spec: FigureSpec, ax):
    rows = sorted(rows, key=lambda r: float(r["sigma"]))
    s = floats(rows, "sigma")
    se = floats(rows, "stderr")
    for key, label in (("dist_to_u1", "distance to reference 1"),
                       ("dist_to_u2", "distance to reference 2")):
        ax.errorbar(s, floats(rows, key), yerr=se, marker="o", capsize=3,
                    label=label)


def _draw_crossval(rows, spec: FigureSpec, ax):
    fd = floats(rows, "fd_value")
    fk = floats(rows, "fk_value")
    se = floats(rows, "fk_stderr")
    ax.errorbar(fd, fk, yerr=[3 * e for e in se], fmt="o", capsize=3,
                label="Monte Carlo vs grid solve (3 s.e.)")
    lo, hi = min(fd + fk), max(fd + fk)
    pad = 0.05 * (hi - lo) if hi > lo else 0.1
    ax.plot([lo - pad, hi + pad], [lo - pad, hi + pad], "k--", lw=0.8,
            label="exact agreement")


_DRAWERS = {
    "snapshot": (_draw_snapshot, "x", "u"),
    "decay_curve": (_draw_decay_curve, "time", "ensemble mean"),
    "selection": (_draw_selection, "noise amplitude", "L1 distance"),
    "crossval": (_draw_crossval, "grid-solve value", "Monte Carlo value"),
}


def render(spec: FigureSpec) -> str:
    """Draw the figure for `spec` and write it as SVG; returns the path."""
    rows = load_table(spec.csv_path, spec.kind)
    drawer, xlabel, ylabel = _DRAWERS[spec.kind]
    fig, ax = _new_axes(xlabel, ylabel)
    try:
        drawer(rows, spec, ax)
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        # suppress the embedded creation date so reruns are byte-identical
        fig.savefig(spec.out_path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return spec.out_path
