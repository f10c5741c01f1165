"""Tuning-parameter selection: grid search scored by a modified BIC.

The score adds the unnormalized pinball loss to log(nT)/2 times an effective
parameter count, c1 * s_hat for the coefficients plus (1 + n + T) * r_hat for
the low-rank part.  c1 defaults to log^2(nT), which balances the otherwise
dominating rank term.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .admm import AdmmState, GramCache, estimate_rank, estimate_sparsity, fit
from .errors import AllFitsFailed
from .panel import (
    ColumnScales,
    PanelData,
    QuantileFit,
    SolverConfig,
    compute_column_scales,
    pinball_loss,
)

__all__ = [
    "TuningGrid",
    "SelectionRow",
    "SelectionReport",
    "bic_score",
    "default_c1",
    "grid_search",
    "estimate_sparsity",
    "estimate_rank",
]

log = logging.getLogger(__name__)


def _default_nu1():
    # 10^-4, 10^-4.5, ..., 10^-8
    return 10.0 ** -(np.arange(8, 17) / 2.0)


def _default_nu2():
    # 10^-3, 10^-4, ..., 10^-9
    return 10.0 ** -np.arange(3.0, 10.0)


@dataclass(frozen=True)
class TuningGrid:
    """Penalty grids, sorted descending so warm starts relax gradually."""

    nu1_values: np.ndarray = field(default_factory=_default_nu1)
    nu2_values: np.ndarray = field(default_factory=_default_nu2)

    def __post_init__(self):
        for name in ("nu1_values", "nu2_values"):
            vals = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if vals.size == 0:
                raise ValueError(f"{name} must be nonempty")
            if np.any(vals <= 0):
                raise ValueError(f"{name} entries must be positive")
            if np.any(np.diff(vals) >= 0):
                raise ValueError(f"{name} must be sorted strictly descending")
            vals.setflags(write=False)
            object.__setattr__(self, name, vals)


@dataclass(frozen=True)
class SelectionRow:
    nu1: float
    nu2: float
    bic: float
    sparsity: int
    rank: int
    objective: float
    converged: bool


@dataclass(frozen=True)
class SelectionReport:
    """Full grid table plus the BIC-minimizing converged fit."""

    table: tuple
    best_nu1: float
    best_nu2: float
    best_fit: QuantileFit


def default_c1(data: PanelData) -> float:
    return float(np.log(data.n * data.t_len) ** 2)


def bic_score(fit_result: QuantileFit, data: PanelData, c1: float | None = None) -> float:
    """Modified BIC: unnormalized pinball loss plus the dimension penalty.

    Uses the fit's own sparsity and rank estimates; the loss term carries no
    1/nT normalization.
    """
    if c1 is None:
        c1 = default_c1(data)
    resid = data.y - fit_result.pi
    if data.p:
        resid = resid - data.x @ fit_result.theta
    loss = float(np.sum(pinball_loss(resid, fit_result.tau)))
    n, t_len = data.n, data.t_len
    penalty = (np.log(n * t_len) / 2.0) * (
        c1 * fit_result.sparsity_estimate + (1 + n + t_len) * fit_result.rank_estimate
    )
    return loss + float(penalty)


def grid_search(
    data: PanelData,
    grid: TuningGrid,
    config: SolverConfig,
    c1: float | None = None,
    scales: ColumnScales | None = None,
) -> SelectionReport:
    """Fit every (nu1, nu2) pair and pick the converged fit with minimal BIC.

    Within each nu1 column the fits warm start along descending nu2; columns
    start cold, so they could run in parallel.  Non-converged fits stay in
    the table, flagged, but are excluded from the argmin.  Scanning the
    descending grids and replacing only on strict improvement breaks BIC ties
    toward larger penalties, i.e. the sparser, lower-rank model.
    """
    if scales is None and data.p:
        scales = compute_column_scales(data)
    gram = GramCache(data) if data.p else None
    rows = []
    best_row = None
    best_fit = None
    for nu1 in grid.nu1_values:
        state = AdmmState.zeros(data.n, data.t_len, data.p, config.eta)
        for nu2 in grid.nu2_values:
            cfg = replace(config, nu1=float(nu1), nu2=float(nu2))
            result = fit(data, cfg, scales=scales, init=state, gram=gram)
            row = SelectionRow(
                nu1=float(nu1),
                nu2=float(nu2),
                bic=bic_score(result, data, c1),
                sparsity=result.sparsity_estimate,
                rank=result.rank_estimate,
                objective=result.objective,
                converged=result.converged,
            )
            rows.append(row)
            if row.converged and (best_row is None or row.bic < best_row.bic):
                best_row = row
                best_fit = result
    if best_row is None:
        raise AllFitsFailed(
            f"none of the {len(rows)} grid fits converged; raise max_iter or adjust eta"
        )
    n_failed = sum(not r.converged for r in rows)
    if n_failed:
        log.warning("%d of %d grid fits did not converge", n_failed, len(rows))
    return SelectionReport(
        table=tuple(rows),
        best_nu1=best_row.nu1,
        best_nu2=best_row.nu2,
        best_fit=best_fit,
    )
