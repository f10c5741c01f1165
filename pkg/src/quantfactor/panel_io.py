"""Panel CSV ingestion and result persistence.

Panel files are long format with header "unit,period,y,x1,...,xp"; units and
periods map to dense indices by first appearance, so arbitrary labels work.
All numeric text uses 17 significant digits, which round-trips doubles
exactly.  Files are UTF-8, comma-delimited, '.' decimal.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DuplicateCell, EmptyFile, ParseError, UnbalancedPanel
from .factors import FactorDecomposition
from .panel import ColumnScales, PanelData, QuantileFit
from .simulate import RNG_ALGORITHM, SimInstance


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def read_panel_csv(path) -> PanelData:
    """Read a balanced long-format panel into dense arrays.

    Every (unit, period) pair must appear exactly once and every unit must
    cover every period.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[:3] != ["unit", "period", "y"]:
            raise ParseError(
                f"{path}: header must start with 'unit,period,y', got {header[:3]}"
            )
        p = len(header) - 3
        expected_x = [f"x{j}" for j in range(1, p + 1)]
        if header[3:] != expected_x:
            raise ParseError(f"{path}: covariate columns must be x1..x{p}")

        units: dict[str, int] = {}
        periods: dict[str, int] = {}
        cells: dict[tuple[int, int], tuple[float, list[float]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3 + p:
                raise ParseError(
                    f"{path}:{lineno}: expected {3 + p} fields, got {len(row)}"
                )
            unit, period = row[0], row[1]
            ui = units.setdefault(unit, len(units))
            ti = periods.setdefault(period, len(periods))
            if (ui, ti) in cells:
                raise DuplicateCell(
                    f"{path}:{lineno}: duplicate cell (unit={unit!r}, period={period!r})"
                )
            try:
                yval = float(row[2])
                xvals = [float(c) for c in row[3:]]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric value") from exc
            cells[(ui, ti)] = (yval, xvals)

    if not cells:
        raise EmptyFile(f"{path} has a header but no data rows")
    n, t_len = len(units), len(periods)
    if len(cells) != n * t_len:
        raise UnbalancedPanel(
            f"{path}: {len(cells)} cells for {n} units x {t_len} periods"
        )
    y = np.empty((n, t_len))
    x = np.empty((n, t_len, p))
    for (ui, ti), (yval, xvals) in cells.items():
        y[ui, ti] = yval
        x[ui, ti, :] = xvals
    return PanelData(y, x)


def write_panel_csv(data: PanelData, path, units=None, periods=None):
    """Write a panel in long format; default labels are 1..n and 1..T."""
    path = Path(path)
    if units is None:
        units = [str(i) for i in range(1, data.n + 1)]
    if periods is None:
        periods = [str(t) for t in range(1, data.t_len + 1)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["unit", "period", "y"] + [f"x{j}" for j in range(1, data.p + 1)])
        for i in range(data.n):
            for t in range(data.t_len):
                row = [units[i], periods[t], _fmt(data.y[i, t])]
                row += [_fmt(v) for v in data.x[i, t, :]]
                writer.writerow(row)
    return path


def write_matrix_csv(matrix, path):
    """Dense numeric matrix, one CSV row per matrix row, no header."""
    path = Path(path)
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in matrix:
            writer.writerow([_fmt(v) for v in row])
    return path


def read_matrix_csv(path) -> np.ndarray:
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric value") from exc
    if not rows:
        raise EmptyFile(f"{path} is empty")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError(f"{path}: ragged rows with widths {sorted(widths)}")
    return np.asarray(rows)


def write_sim_instance(inst: SimInstance, out_dir, seed: int, design: str):
    """Panel CSV plus a JSON sidecar holding the generative truth."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    panel_path = write_panel_csv(inst.data, out_dir / "panel.csv")
    truth = {
        "design": design,
        "n": inst.data.n,
        "t_len": inst.data.t_len,
        "p": inst.data.p,
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "theta_true": [float(v) for v in inst.theta_true],
        "scale_coef": None
        if inst.scale_coef is None
        else [float(v) for v in inst.scale_coef],
        "pi_true": [[float(v) for v in row] for row in inst.pi_true],
    }
    truth_path = out_dir / "truth.json"
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump(truth, fh, sort_keys=True, indent=2)
    return panel_path, truth_path


def write_fit(
    fit_result: QuantileFit,
    decomposition: FactorDecomposition | None,
    out_dir,
    scales: ColumnScales | None = None,
    config_echo: dict | None = None,
):
    """Persist one fit: theta.csv, pi.csv, factors.csv, loadings.csv, summary.json.

    theta.csv carries the penalty weight sigma_hat_j next to each coefficient.
    A rank-zero fit writes empty factor and loading files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    theta_path = out_dir / "theta.csv"
    with open(theta_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "value", "scale"])
        for j, value in enumerate(fit_result.theta, start=1):
            scale = scales.sigma_hat[j - 1] if scales is not None else 1.0
            writer.writerow([j, _fmt(value), _fmt(scale)])
    paths["theta"] = theta_path

    paths["pi"] = write_matrix_csv(fit_result.pi, out_dir / "pi.csv")
    if decomposition is not None:
        paths["factors"] = write_matrix_csv(decomposition.factors, out_dir / "factors.csv")
        paths["loadings"] = write_matrix_csv(decomposition.loadings, out_dir / "loadings.csv")
    else:
        for name in ("factors", "loadings"):
            path = out_dir / f"{name}.csv"
            path.write_text("", encoding="utf-8")
            paths[name] = path

    echo = config_echo or {}
    summary = {
        "tau": fit_result.tau,
        "nu1": echo.get("nu1"),
        "nu2": echo.get("nu2"),
        "rank": fit_result.rank_estimate,
        "sparsity": fit_result.sparsity_estimate,
        "objective": fit_result.objective,
        "iterations": fit_result.iterations,
        "converged": fit_result.converged,
        "primal_residual": fit_result.primal_residual,
        "dual_residual": fit_result.dual_residual,
        "singular_values": [float(v) for v in fit_result.singular_values],
        "rng": RNG_ALGORITHM,
        "config": echo,
    }
    summary_path = out_dir / "summary.json"
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
    paths["summary"] = summary_path
    return paths


def read_theta_csv(path):
    """Read theta.csv back as (values, scales)."""
    path = Path(path)
    values, weights = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path} is empty")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values.append(float(row[1]))
                weights.append(float(row[2]))
            except (IndexError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: bad theta row") from exc
    return np.asarray(values), np.asarray(weights)


@dataclass(frozen=True)
class RunConfig:
    """Canonical record of one CLI invocation; round-trips through JSON."""

    command: str
    panel: str | None = None
    out: str = "."
    taus: tuple = (0.5,)
    nu1: float = 0.0
    nu2: float = 0.0
    eta: float = 1.0
    max_iter: int = 5000
    tol_abs: float = 1e-6
    tol_rel: float = 1e-5
    loss: str = "quantile"
    fix_pi_zero: bool = False
    pi_inf_bound: float | None = None
    grid_nu1: tuple | None = None
    grid_nu2: tuple | None = None
    c1: float | None = None
    design: str = "D1"
    n: int = 100
    t_len: int = 100
    p: int = 5
    seed: int = 0
    reps: int = 20
    methods: tuple = ("l1nnqr",)
    oracle: bool = False
    pi_path: str | None = None
    rank: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        raw = json.loads(text)
        for key in ("taus", "grid_nu1", "grid_nu2", "methods"):
            if raw.get(key) is not None:
                raw[key] = tuple(raw[key])
        return cls(**raw)
