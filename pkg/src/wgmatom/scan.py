"""Parameter-sweep engine: grids over any numeric parameter, CSV/JSON/SVG.

Each grid cell is an independent steady-state problem solved from immutable
inputs, so cells parallelize over a thread pool (the heavy lifting happens
in BLAS/LAPACK which releases the GIL; per-worker BLAS threading is capped
at one to avoid oversubscription).  Results are deterministic and identical
for any worker count; cell failures are recorded per row instead of
aborting the sweep.

CSV layout: ``#``-prefixed metadata lines (the timestamp line is the only
non-deterministic one), then a header row, then one row per cell with axis
values first, observables in declaration order, and the solver residual
last.  Files are written atomically (temp file + rename).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields as dc_fields, replace

import numpy as np

from . import __version__
from . import ae_solver, fockspace, observables, params as params_mod, th_solver
from .errors import InvalidAxis, IoFailure, UnsatisfiableSpec, WgmAtomError
from .params import PhysicalParams

__all__ = ["Axis", "ScanSpec", "ResultTable", "run_scan", "emit"]

METHODS = ("th", "ae", "both", "no_atom")

FLUX_OBSERVABLES = ("F1_a1", "F1_b1", "F1_a2", "F1_b2")
POPULATION_OBSERVABLES = ("P1", "P2", "P3")
G2_OBSERVABLES = ("g2_a1a1", "g2_a2a2", "g2_a1a2")

_NUMERIC_PARAMS = tuple(
    f.name for f in dc_fields(PhysicalParams) if f.type in ("float", "complex")
)


@dataclass(frozen=True)
class Axis:
    """One scan axis: parameter name and an inclusive start/stop/step grid."""

    name: str
    start: float
    stop: float
    step: float

    def values(self) -> np.ndarray:
        if self.step <= 0:
            raise UnsatisfiableSpec(f"axis {self.name}: step must be > 0, got {self.step}")
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        if n < 1:
            raise UnsatisfiableSpec(f"axis {self.name}: empty grid")
        return self.start + self.step * np.arange(n)


@dataclass(frozen=True)
class ScanSpec:
    """Validated description of a sweep."""

    method: str
    axes: tuple[Axis, ...]
    observables: tuple[str, ...]
    overrides: dict = field(default_factory=dict)
    mode_caps: tuple[int, int, int, int] = (1, 1, 1, 1)
    workers: int = 1
    solver: str = "auto"

    def __post_init__(self):
        if self.method not in METHODS:
            raise UnsatisfiableSpec(f"unknown method {self.method!r}; use one of {METHODS}")
        if len(self.axes) not in (1, 2):
            raise UnsatisfiableSpec(f"need 1 or 2 axes, got {len(self.axes)}")
        for axis in self.axes:
            if axis.name not in _NUMERIC_PARAMS:
                raise InvalidAxis(
                    f"axis parameter {axis.name!r} is not a numeric physical parameter"
                )
            axis.values()  # raises on empty/invalid grids
        wants_g2 = any(obs in G2_OBSERVABLES for obs in self.observables)
        if wants_g2 and self.method not in ("ae", "both"):
            raise UnsatisfiableSpec(
                "g2 observables need the adiabatic-elimination backend "
                "(method 'ae' or 'both'); the one-photon truncated backend "
                "cannot produce two-photon correlations"
            )
        known = set(FLUX_OBSERVABLES) | set(POPULATION_OBSERVABLES) | set(G2_OBSERVABLES)
        unknown = [obs for obs in self.observables if obs not in known]
        if unknown:
            raise UnsatisfiableSpec(f"unknown observables {unknown}; known: {sorted(known)}")

    def columns(self) -> list[str]:
        cols = [axis.name for axis in self.axes]
        for obs in self.observables:
            if self.method == "both":
                if obs in G2_OBSERVABLES:
                    cols.append(f"{obs}_ae")
                else:
                    cols.extend([f"{obs}_th", f"{obs}_ae"])
            else:
                cols.append(obs)
        cols.append("residual")
        return cols


def default_observables(method: str, with_g2: bool = False) -> tuple[str, ...]:
    obs = FLUX_OBSERVABLES + (POPULATION_OBSERVABLES if method != "no_atom" else ())
    if with_g2 and method in ("ae", "both"):
        obs = obs + G2_OBSERVABLES
    return obs


@dataclass
class ResultTable:
    """Ordered rows plus run metadata; rows align with spec.columns()."""

    spec: ScanSpec
    columns: list[str]
    rows: list[list]
    errors: list[str]
    metadata: dict

    @property
    def ok(self) -> bool:
        return not any(self.errors)

    def column(self, name: str) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array(
            [row[idx] if row[idx] is not None else np.nan for row in self.rows],
            dtype=float,
        )


def _grid_points(spec: ScanSpec):
    axes_values = [axis.values() for axis in spec.axes]
    if len(axes_values) == 1:
        return [(v,) for v in axes_values[0]]
    return [(v1, v2) for v1 in axes_values[0] for v2 in axes_values[1]]


def _evaluate_cell(spec: ScanSpec, base: PhysicalParams, point) -> tuple[list, str]:
    values: dict[str, float | None] = {}
    residual = 0.0
    overrides = {axis.name: float(v) for axis, v in zip(spec.axes, point)}
    params = params_mod.validate(replace(base, **overrides))

    need_th = spec.method in ("th", "both")
    need_ae = spec.method in ("ae", "both")

    if spec.method == "no_atom":
        for obs in spec.observables:
            if obs in FLUX_OBSERVABLES:
                values[obs] = observables.no_atom_flux(params, obs.split("_")[1])
    if need_th:
        space = fockspace.build_space(spec.mode_caps)
        system = th_solver.build_liouvillian(space, params)
        state = th_solver.solve_steady_state(
            system, method=spec.solver, fallback="nullspace"
        )
        residual = max(residual, state.residual)
        pops = state.atomic_populations()
        for obs in spec.observables:
            key = obs if spec.method != "both" else f"{obs}_th"
            if obs in FLUX_OBSERVABLES:
                values[key] = observables.flux_th(state, params, obs.split("_")[1])
            elif obs in POPULATION_OBSERVABLES:
                values[key] = pops[int(obs[1]) - 1]
    if need_ae:
        dm = ae_solver.steady_state(params)
        coeffs = observables.output_coefficients(params)
        residual = max(residual, dm.residual)
        pops = dm.populations
        for obs in spec.observables:
            key = obs if spec.method != "both" else f"{obs}_ae"
            if obs in FLUX_OBSERVABLES:
                values[key] = observables.flux_ae(dm, coeffs, obs.split("_")[1], params)
            elif obs in POPULATION_OBSERVABLES:
                values[key] = pops[int(obs[1]) - 1]
            elif obs in G2_OBSERVABLES:
                mi, mj = obs[3:5], obs[5:7]
                values[key] = float(observables.g2(dm, coeffs, mi, mj))

    row = list(point)
    for col in spec.columns()[len(point):-1]:
        row.append(values.get(col))
    row.append(residual)
    return row, ""


def run_scan(spec: ScanSpec, base_params: PhysicalParams) -> ResultTable:
    """Evaluate every grid cell; failures become row tags, not aborts."""
    base = params_mod.apply_overrides(base_params, spec.overrides)
    params_mod.validate(base)
    points = _grid_points(spec)
    columns = spec.columns()
    n_cols = len(columns)

    def cell(point):
        try:
            return _evaluate_cell(spec, base, point)
        except WgmAtomError as exc:
            row = list(point) + [None] * (n_cols - len(point))
            return row, f"{type(exc).__name__}: {exc}"

    t0 = time.perf_counter()
    if spec.workers > 1:
        try:
            from threadpoolctl import threadpool_limits
        except ImportError:  # pragma: no cover
            threadpool_limits = None
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            if threadpool_limits is not None:
                with threadpool_limits(limits=1):
                    results = list(pool.map(cell, points))
            else:
                results = list(pool.map(cell, points))
    else:
        results = [cell(point) for point in points]
    elapsed = time.perf_counter() - t0

    rows = [row for row, _ in results]
    errors = [err for _, err in results]
    residuals = [row[-1] for row, err in results if not err and row[-1] is not None]
    metadata = {
        "version": __version__,
        "method": spec.method,
        "axes": [f"{a.name}:{a.start}:{a.stop}:{a.step}" for a in spec.axes],
        "observables": list(spec.observables),
        "overrides": {k: repr(v) for k, v in sorted(spec.overrides.items())},
        "mode_caps": list(spec.mode_caps),
        "workers": spec.workers,
        "cells": len(points),
        "cell_errors": sum(1 for e in errors if e),
        "elapsed_seconds": round(elapsed, 3),
        "residual_max": max(residuals) if residuals else None,
    }
    return ResultTable(spec=spec, columns=columns, rows=rows, errors=errors, metadata=metadata)


# ---------------------------------------------------------------------------
# emitters
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return "nan"
    return format(float(value), ".17g")


def _atomic_write(path, writer) -> None:
    path = str(path)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                writer(fh)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"could not write {path}: {exc}") from exc


def emit_csv(table: ResultTable, path, timestamp: bool = True) -> None:
    def write(fh):
        for key, value in table.metadata.items():
            if key == "elapsed_seconds":
                continue  # varies run to run; kept on the timestamp line
            fh.write(f"# {key} = {value}\n")
        if timestamp:
            fh.write(f"# timestamp = {time.strftime('%Y-%m-%dT%H:%M:%S%z')} "
                     f"elapsed = {table.metadata['elapsed_seconds']}s\n")
        fh.write(",".join(table.columns + ["error"]) + "\n")
        for row, err in zip(table.rows, table.errors):
            fh.write(",".join(_fmt(v) for v in row) + f",{err}\n")

    _atomic_write(path, write)


def emit_json(table: ResultTable, path) -> None:
    payload = {
        "schema_version": 1,
        "metadata": table.metadata,
        "columns": table.columns,
        "rows": [
            [None if v is None else float(v) for v in row] for row in table.rows
        ],
        "errors": table.errors,
    }
    _atomic_write(path, lambda fh: json.dump(payload, fh, indent=1))


def emit_svg(table: ResultTable, path) -> None:
    """Line plot for 1D scans, heatmap panels for 2D scans."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    spec = table.spec
    data_cols = [c for c in table.columns if c not in ("residual",)
                 and c not in [a.name for a in spec.axes]]
    if len(spec.axes) == 1:
        x = table.column(spec.axes[0].name)
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        for col in data_cols:
            y = table.column(col)
            if np.all(np.isnan(y)):
                continue
            ax.plot(x, y, label=col, linewidth=1.2)
        ax.set_xlabel(f"{spec.axes[0].name} [gamma]")
        ax.set_ylabel("observable")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
    else:
        xvals = spec.axes[0].values()
        yvals = spec.axes[1].values()
        panels = [c for c in data_cols if not np.all(np.isnan(table.column(c)))]
        ncols = min(3, max(1, len(panels)))
        nrows = max(1, (len(panels) + ncols - 1) // ncols)
        fig, axes = plt.subplots(
            nrows, ncols, figsize=(4.2 * ncols, 3.4 * nrows), squeeze=False
        )
        for k, col in enumerate(panels):
            ax = axes[k // ncols][k % ncols]
            z = table.column(col).reshape(len(xvals), len(yvals))
            im = ax.pcolormesh(xvals, yvals, z.T, shading="auto", cmap="viridis")
            fig.colorbar(im, ax=ax)
            ax.set_xlabel(spec.axes[0].name)
            ax.set_ylabel(spec.axes[1].name)
            ax.set_title(col, fontsize=9)
        for k in range(len(panels), nrows * ncols):
            axes[k // ncols][k % ncols].axis("off")
    fig.tight_layout()

    def write(fh):
        fig.savefig(fh, format="svg")

    try:
        _atomic_write(path, write)
    finally:
        plt.close(fig)


def emit(table: ResultTable, prefix, formats=("csv",)) -> list[str]:
    """Write the table in the requested formats; returns written paths."""
    written = []
    for fmt in formats:
        path = f"{prefix}.{fmt}"
        if fmt == "csv":
            emit_csv(table, path)
        elif fmt == "json":
            emit_json(table, path)
        elif fmt == "svg":
            emit_svg(table, path)
        else:
            raise IoFailure(f"unknown output format {fmt!r}")
        written.append(path)
    return written
