"""Balanced-transportation solve with kernel selection.

The compiled Cython kernel is used when the extension built; otherwise the
pure-Python kernel takes over. Setting ``BIDFORGE_PURE_PYTHON=1`` forces the
fallback, which the benchmark uses to compare the two.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..errors import NumericalFailure

if os.environ.get("BIDFORGE_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _simplex_cy as _kernel

        _KERNEL_NAME = "cython"
    except ImportError:
        from . import _simplex_py as _kernel

        _KERNEL_NAME = "python"
else:
    from . import _simplex_py as _kernel

    _KERNEL_NAME = "python"

BALANCE_TOL = 1e-12
MARGINAL_TOL = 1e-9


def kernel_name() -> str:
    return _KERNEL_NAME


@dataclass(frozen=True)
class TransportProblem:
    """Balanced problem: positive supply/demand each summing to one total,
    nonnegative cost matrix of matching shape."""

    supply: np.ndarray
    demand: np.ndarray
    cost: np.ndarray

    def validate(self) -> None:
        supply = np.asarray(self.supply, dtype=np.float64)
        demand = np.asarray(self.demand, dtype=np.float64)
        cost = np.asarray(self.cost, dtype=np.float64)
        if supply.ndim != 1 or demand.ndim != 1:
            raise ValueError("supply and demand must be 1-D")
        if cost.shape != (supply.size, demand.size):
            raise ValueError(
                f"cost shape {cost.shape} does not match ({supply.size}, {demand.size})"
            )
        if supply.size == 0 or demand.size == 0:
            raise ValueError("empty marginals")
        if np.any(supply <= 0) or np.any(demand <= 0):
            raise ValueError("supply and demand entries must be strictly positive")
        if np.any(cost < 0):
            raise ValueError("costs must be nonnegative")
        if abs(float(supply.sum()) - float(demand.sum())) > BALANCE_TOL:
            raise ValueError(
                f"unbalanced problem: supply {supply.sum()!r} vs demand {demand.sum()!r}"
            )


def solve_transport(problem: TransportProblem) -> tuple[np.ndarray, float]:
    """Exact optimal flow and objective for a balanced problem.

    Deterministic: fixed pivot rule, fixed initialization. Raises
    NumericalFailure if the returned flow's marginals drift beyond 1e-9.
    """
    problem.validate()
    supply = np.ascontiguousarray(problem.supply, dtype=np.float64)
    demand = np.ascontiguousarray(problem.demand, dtype=np.float64)
    cost = np.ascontiguousarray(problem.cost, dtype=np.float64)
    flow, objective, _ = _kernel.solve_dense(supply, demand, cost)
    row_residual = float(np.abs(flow.sum(axis=1) - supply).max())
    col_residual = float(np.abs(flow.sum(axis=0) - demand).max())
    if max(row_residual, col_residual) > MARGINAL_TOL:
        raise NumericalFailure(
            f"marginal residual {max(row_residual, col_residual):.3e} exceeds {MARGINAL_TOL}"
        )
    return flow, float(objective)
