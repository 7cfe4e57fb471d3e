"""Published experiment layouts, re-run by the ``simulate`` command.

Each table is a list of row groups sharing a frequency model and sampling
rate; the rows of a group run on common trial streams.  Register counts that
are not powers of two run at the nearest power of two (``m``); the analysis
column is reported both at the nominal count (``analysis_var``) and at the
count actually run (``analysis_var_eff``).  Analysis columns use ``are=1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analysis import optimal_split, plugin_probabilities, rel_variance_alg1, rel_variance_alg2
from .simharness import FrequencyModel, ParetoModel, TrialConfig, UniformModel, run_grid
from .sketch import nearest_power_of_two

UNIFORM = UniformModel(100, 10_000)
PARETO = ParetoModel(1.1, 500)

FULL_N = 10_000
FAST_N = 1_000
FAST_TRIALS = 50

COLUMNS = [
    "table", "P", "algorithm", "B", "m_nominal", "m", "u", "n", "l",
    "mean_n_hat", "mean_ratio", "bias", "analysis_var", "analysis_var_eff", "simulation_var",
    "var_ratio", "degenerate", "trials",
]


@dataclass(frozen=True)
class Row:
    algorithm: str
    m: int
    u: Optional[int] = None
    budget: Optional[int] = None


@dataclass(frozen=True)
class Group:
    model: FrequencyModel
    P: float
    rows: tuple


def _alg2_rows(pairs):
    return tuple(Row("alg2", m, u) for m, u in pairs)


def _budget_rows(P: float, p0_source: str):
    if P >= 1:
        return tuple(Row("naive", B, None, B) for B in (100, 500, 1000))
    p0, p1 = plugin_probabilities(UNIFORM.quantile_grid(), P, p0_source)
    rows = []
    for B in (100, 500, 1000):
        split = optimal_split(B, p0, p1)
        rows.append(Row("alg2", split.m, split.u, B))
    return tuple(rows)


def table_groups(table_id: str, p0_source: str = "mass") -> list[Group]:
    t = table_id.lower()
    if t == "intro":
        return [Group(UNIFORM, 1 / 1000, (Row("naive", 200), Row("alg1", 200)))]
    if t in ("1a", "1b"):
        P = 1 / 100 if t == "1a" else 1 / 1000
        return [Group(UNIFORM, P, tuple(Row("alg1", m) for m in (50, 100, 150)))]
    if t in ("2a", "2b"):
        P = 1 / 100 if t == "2a" else 1 / 1000
        return [Group(UNIFORM, P, _alg2_rows([(10, 190), (50, 150), (100, 100), (150, 50), (190, 10)]))]
    if t == "3":
        return [Group(PARETO, 1 / 100,
                      _alg2_rows([(50, 1950), (100, 1900), (500, 1500), (1000, 1000), (1500, 500)]))]
    if t == "4a":
        groups = [Group(UNIFORM, P, tuple(Row("alg1", m) for m in (100, 500, 1000)))
                  for P in (1 / 100, 1 / 500, 1 / 1000)]
        groups.append(Group(UNIFORM, 1.0, tuple(Row("naive", m) for m in (100, 500, 1000))))
        return groups
    if t == "4b":
        return [Group(UNIFORM, P, _budget_rows(P, p0_source)) for P in (1 / 100, 1 / 500, 1 / 1000, 1.0)]
    raise KeyError(f"unknown table {table_id!r}")


TABLE_IDS = ("intro", "1a", "1b", "2a", "2b", "3", "4a", "4b")


def _analysis(row: Row, m: int, p0: float, p1: float, length: float, P: float) -> Optional[float]:
    if row.algorithm == "naive":
        return 1.0 / m if P >= 1 else None
    if row.algorithm == "alg1":
        return rel_variance_alg1(p0, p1, max(length, 1.0), m)
    return rel_variance_alg2(p0, p1, row.u, m)


def simulate_table(table_id: str, trials: int = 200, seed: int = 0, fast: bool = False,
                   jobs: int = 1, p0_source: str = "mass") -> list[dict]:
    """Re-run one table; one dict per row with the :data:`COLUMNS` keys."""
    n = FAST_N if fast else FULL_N
    if fast:
        trials = min(trials, FAST_TRIALS)
    out = []
    for group in table_groups(table_id, p0_source):
        configs = [
            TrialConfig(n=n, model=group.model, P=group.P, m=nearest_power_of_two(r.m), u=r.u,
                        algorithm=r.algorithm, trials=trials, base_seed=seed)
            for r in group.rows
        ]
        results = run_grid(configs, jobs=jobs)
        grid = group.model.quantile_grid()
        if group.P < 1:
            p0, p1 = plugin_probabilities(grid, group.P, p0_source)
        else:
            p0, p1 = 0.0, 0.0
        expected_l = group.P * n * float(np.mean(grid))
        for row, cfg, res in zip(group.rows, configs, results):
            nominal = _analysis(row, row.m, p0, p1, expected_l, group.P)
            eff = _analysis(row, cfg.m, p0, p1, expected_l, group.P)
            sim = res.rel_variance
            out.append({
                "table": table_id,
                "P": group.P,
                "algorithm": row.algorithm,
                "B": row.budget,
                "m_nominal": row.m,
                "m": cfg.m,
                "u": row.u,
                "n": n,
                "l": round(res.mean_sample_length),
                "mean_n_hat": res.mean_n_hat,
                "mean_ratio": res.mean_n_hat / n,
                "bias": res.bias,
                "analysis_var": nominal,
                "analysis_var_eff": eff,
                "simulation_var": sim,
                "var_ratio": (sim / nominal) if (sim is not None and nominal) else None,
                "degenerate": res.degenerate_count,
                "trials": trials,
            })
    return out
