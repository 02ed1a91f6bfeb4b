"""Per-table experiment configurations and a runner that compares against the printed counts.

The expected values and the tolerance policy live in ``data/tables.json``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import ConfigError, MaxIterationsExceeded
from .krylov import PCGConfig, pcg
from .multigrid import (
    MultigridHierarchy,
    build_aggregation_hierarchy,
    build_block_hierarchy,
    solve,
    tgm_solve,
)
from .smoothers import SmootherSpec, admissible_range, default_omegas
from .symbols import TrigMatrixPolynomial, builtin_symbol

TABLE_IDS = tuple(f"T{i}" for i in range(1, 13))
METHODS = ("tgm", "vcycle", "pcg")


@lru_cache(maxsize=1)
def expectations() -> dict:
    """Contents of the embedded expected-value file."""
    text = resources.files("bsmg").joinpath("data/tables.json").read_text(encoding="utf-8")
    return json.loads(text)


def reference_rhs(A, seed: int = 0) -> np.ndarray:
    """``b = A x`` with ``x`` uniform on ``[0, 1)`` from a seeded generator."""
    x = np.random.default_rng(seed).random(A.shape[0])
    return A.matvec(x)


def overrelaxed_hierarchy(f: TrigMatrixPolynomial, n: int, structure: str, alpha: float,
                          omega: float) -> MultigridHierarchy:
    """Aggregation hierarchy with one block Jacobi pre- and post-step at ``omega``.

    Scalar levels get one pre- and one post-step at ``omega = 1/2`` so the cycle
    stays symmetric.
    """
    block = SmootherSpec("block", omega, 1)
    scalar = SmootherSpec("scalar", 0.5, 1)
    return build_aggregation_hierarchy(f, n, structure, pre=block, post=block,
                                       scalar_pre=scalar, scalar_post=scalar, alpha=alpha)


def scalar_block_hierarchy(f: TrigMatrixPolynomial, n: int, structure: str, name: str) -> MultigridHierarchy:
    """Block-preserving V-cycle with scalar Jacobi on ``min(diag(fhat0)) I``."""
    _, wmax = admissible_range("scalar", f, diagonal="min")
    wpre, wpost = default_omegas(wmax)
    return build_block_hierarchy(f, n, structure, projector="geometric", name=name,
                                 pre=SmootherSpec("scalar", wpre, 1),
                                 post=SmootherSpec("scalar", wpost, 1), scalar_diagonal="min")


def hierarchy_for(column: dict, n: int, structure: str) -> MultigridHierarchy:
    """Build the hierarchy a table column describes."""
    name = column["problem"]
    f = builtin_symbol(name)
    kind = column["config"]
    if kind == "aggregation":
        return build_aggregation_hierarchy(f, n, structure)
    if kind == "overrelaxed":
        return overrelaxed_hierarchy(f, n, structure, column["alpha"], column["omega"])
    if kind == "pcg_aggregate":
        return overrelaxed_hierarchy(f, n, structure, column["alpha"], column["omega"])
    if kind == "block_geometric":
        return build_block_hierarchy(f, n, structure, projector="geometric", name=name)
    if kind == "block_geometric_scalar":
        return scalar_block_hierarchy(f, n, structure, name)
    if kind == "pcg_block":
        spec = SmootherSpec("block", column["omega"], 1)
        return build_block_hierarchy(f, n, structure, projector="geometric", name=name,
                                     pre=spec, post=spec)
    raise ConfigError(f"unknown column configuration {kind!r}")


def run_method(h: MultigridHierarchy, method: str, tol: float = 1e-6, max_iter: int = 2000):
    """Solve ``A x = b`` with the reference right-hand side; returns the report."""
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    A = h.levels[0].A
    b = reference_rhs(A)
    if method == "tgm":
        return tgm_solve(h, b, tol, max_iter)[1]
    if method == "vcycle":
        return solve(h, b, tol, max_iter)[1]
    return pcg(A, b, PCGConfig(tol, max_iter, h))[1]


@dataclass(frozen=True)
class TableRow:
    """One cell of a reproduced table."""

    table: str
    t: int
    N: int
    column: str
    method: str
    expected: int
    iterations: int
    setup_seconds: float
    solve_seconds: float

    @property
    def diff(self) -> int | None:
        return None if self.iterations < 0 else self.iterations - self.expected


def run_table(table_id: str, ts=None, columns=None, max_iter: int = 2000, log=None) -> list[TableRow]:
    """Run every cell of a table; non-converged cells report ``iterations = -1``.

    Args:
        ts: subset of the table's ``t`` values (default: all of them).
        columns: subset of column labels.
        log: optional callable receiving each finished row.
    """
    tables = expectations()["tables"]
    if table_id not in tables:
        raise ConfigError(f"unknown table {table_id!r}; expected one of {TABLE_IDS}")
    spec = tables[table_id]
    structure = spec["structure"]
    all_t = spec["t"]
    ts = all_t if ts is None else list(ts)
    rows = []
    for t in ts:
        cache = {}
        for col in spec["columns"]:
            if columns is not None and col["label"] not in columns:
                continue
            key = json.dumps({k: v for k, v in col.items() if k not in ("label", "method", "expected")},
                             sort_keys=True)
            n = 2 ** t
            if key not in cache:
                cache[key] = hierarchy_for(col, n, structure)
            h = cache[key]
            exp = col["expected"][all_t.index(t)] if t in all_t else col["expected"][-1]
            try:
                rep = run_method(h, col["method"], max_iter=max_iter)
                it, setup, secs = rep.iterations, rep.setup_seconds, rep.solve_seconds
            except MaxIterationsExceeded as e:
                it = -1
                setup = e.report.setup_seconds if e.report else h.setup_seconds
                secs = e.report.solve_seconds if e.report else 0.0
            row = TableRow(table_id, t, h.levels[0].size, col["label"], col["method"], exp, it,
                           setup, secs)
            rows.append(row)
            if log is not None:
                log(row)
    return rows
