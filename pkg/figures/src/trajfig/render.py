"""Render paper-style plots from trajectory CSV files.

Reads the fixed-column CSV contract (t, q*, qd*, theta*, u*, H, P_in,
P_damp) plus the optional backbone CSV (t, point, x, y, z); never
recomputes dynamics.  Output images are deterministic for identical
inputs.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CSV_SCHEMA_VERSION = 1

KINDS = ("elongation", "configuration", "inputs", "snapshots")


class SchemaError(RuntimeError):
    """The input file does not match the trajectory CSV contract."""


@dataclass(frozen=True)
class PlotSpec:
    """What to render: input files, time windows, series, output path."""

    kind: str
    csv: str
    out: str
    windows: tuple = ((0.0, 1.0), (2.0, 3.0), (4.0, 5.0))
    metadata: Optional[str] = None
    backbone_csv: Optional[str] = None
    references: tuple = ()
    reference_times: tuple = ()
    frames_per_window: int = 3
    dpi: int = 110

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown plot kind {self.kind!r}")
        object.__setattr__(
            self, "windows", tuple((float(a), float(b)) for a, b in self.windows)
        )

    @classmethod
    def from_file(cls, path) -> "PlotSpec":
        with open(path) as handle:
            doc = json.load(handle)
        doc.pop("schema", None)
        doc["references"] = tuple(
            tuple(float(x) for x in row) for row in doc.get("references", ())
        )
        doc["reference_times"] = tuple(doc.get("reference_times", ()))
        return cls(**doc)


def read_trajectory(path):
    """Read a trajectory CSV into (header, columns-by-name)."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    data = np.asarray(rows)
    if data.size == 0:
        raise SchemaError(f"{path}: empty trajectory")
    return header, {name: data[:, i] for i, name in enumerate(header)}


def read_backbone(path):
    """Read the backbone CSV into {t: (points, 3) array}."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["t", "point", "x", "y", "z"]:
            raise SchemaError(f"{path}: expected backbone columns t,point,x,y,z")
        rows = [[float(x) for x in row] for row in reader]
    data = np.asarray(rows)
    frames = {}
    for t in np.unique(data[:, 0]):
        sel = data[data[:, 0] == t]
        frames[float(t)] = sel[np.argsort(sel[:, 1]), 2:]
    return frames


def _series_columns(header, prefix):
    cols = [name for name in header if name.startswith(prefix) and name[len(prefix):].isdigit()]
    if not cols:
        raise SchemaError(f"missing columns with prefix {prefix!r}")
    return sorted(cols, key=lambda s: int(s[len(prefix):]))


def _window_mask(t, window):
    lo, hi = window
    if lo < t[0] - 1e-9 or hi > t[-1] + 1e-9:
        raise SchemaError(
            f"window [{lo}, {hi}] outside trajectory span [{t[0]}, {t[-1]}]"
        )
    mask = (t >= lo) & (t <= hi)
    if not np.any(mask):
        raise SchemaError(f"window [{lo}, {hi}] selects no samples")
    return mask


def _active_reference(spec, t_mid, index):
    if not spec.references:
        return None
    if spec.reference_times:
        idx = int(np.searchsorted(np.asarray(spec.reference_times), t_mid + 1e-12) - 1)
        idx = max(idx, 0)
    else:
        idx = min(index, len(spec.references) - 1)
    return spec.references[idx]


def _render_windowed_series(spec, prefix, label, series_count=None):
    header, cols = read_trajectory(spec.csv)
    t = cols["t"]
    names = _series_columns(header, prefix)
    if series_count is not None:
        names = names[:series_count]
    n_win = len(spec.windows)
    fig, axes = plt.subplots(
        1, n_win, figsize=(4.2 * n_win, 3.4), sharey=True, squeeze=False
    )
    for w, window in enumerate(spec.windows):
        ax = axes[0, w]
        mask = _window_mask(t, window)
        for name in names:
            ax.plot(t[mask], cols[name][mask], lw=1.2, label=name)
        ref = _active_reference(spec, 0.5 * (window[0] + window[1]), w)
        if ref is not None:
            for j, val in enumerate(ref[: len(names)]):
                ax.axhline(val, ls="--", lw=0.9, color=f"C{j}", alpha=0.8)
        ax.set_xlabel("t [s]")
        ax.set_title(f"t in [{window[0]:g}, {window[1]:g}] s")
        ax.grid(alpha=0.3)
    axes[0, 0].set_ylabel(label)
    axes[0, -1].legend(loc="best", fontsize=8)
    fig.tight_layout()
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.dpi)
    plt.close(fig)
    return [out]


def _render_inputs(spec):
    header, cols = read_trajectory(spec.csv)
    t = cols["t"]
    names = _series_columns(header, "u")
    fig, ax = plt.subplots(figsize=(7.0, 3.4))
    for name in names:
        ax.plot(t, cols[name], lw=1.0, label=name)
    for window in spec.windows:
        _window_mask(t, window)
        ax.axvspan(*window, alpha=0.08, color="gray")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("input [N]")
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=8, ncol=min(len(names), 4))
    fig.tight_layout()
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.dpi)
    plt.close(fig)
    return [out]


def _render_snapshots(spec):
    if spec.backbone_csv is None:
        raise SchemaError("snapshot rendering needs backbone_csv")
    frames = read_backbone(spec.backbone_csv)
    times = np.array(sorted(frames))
    written = []
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    for w, window in enumerate(spec.windows):
        lo, hi = window
        in_window = times[(times >= lo - 1e-9) & (times <= hi + 1e-9)]
        if in_window.size < spec.frames_per_window:
            raise SchemaError(
                f"window [{lo}, {hi}] holds {in_window.size} frames, "
                f"need {spec.frames_per_window}"
            )
        picks = in_window[
            np.linspace(0, in_window.size - 1, spec.frames_per_window).astype(int)
        ]
        fig = plt.figure(figsize=(4.6, 4.2))
        ax = fig.add_subplot(projection="3d")
        for k, tf in enumerate(picks):
            pts = frames[float(tf)]
            shade = 0.15 + 0.7 * k / max(len(picks) - 1, 1)
            color = (0.2, 0.3, 0.8, shade) if k == len(picks) - 1 else (
                0.5, 0.5, 0.5, shade)
            ax.plot(pts[:, 0], pts[:, 1], pts[:, 2], lw=2.0, color=color)
        ax.set_title(f"t in [{lo:g}, {hi:g}] s")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_zlabel("z [m]")
        path = out.with_name(f"{out.stem}_w{w + 1}{out.suffix or '.png'}")
        fig.savefig(path, dpi=spec.dpi)
        plt.close(fig)
        written.append(path)
    return written


def render(spec: PlotSpec):
    """Render the spec; returns the list of written image paths."""
    if spec.metadata is not None:
        with open(spec.metadata) as handle:
            meta = json.load(handle)
        if meta.get("schema") != CSV_SCHEMA_VERSION:
            raise SchemaError(
                f"metadata schema {meta.get('schema')!r} != {CSV_SCHEMA_VERSION}"
            )
    if spec.kind == "elongation":
        return _render_windowed_series(spec, "theta", "actuator elongation [m]")
    if spec.kind == "configuration":
        return _render_windowed_series(spec, "q", "configuration")
    if spec.kind == "inputs":
        return _render_inputs(spec)
    return _render_snapshots(spec)
