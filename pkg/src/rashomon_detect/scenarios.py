"""Eight synthetic profile-pair scenarios for comparing the measures.

All profiles live on one shared grid: ``m`` uniform points over the
empirical range of 500 standard-normal draws. Values are clamped to
[-1, 1]. Shapes are written in terms of ``u``, the grid rescaled to
[-1, 1]; derivatives and integrals are still taken on the original scale.

1. two increasing lines with different slopes
2. two increasing smooth curves of different shape (they may cross)
3. a smooth curve and the same curve plus Gaussian noise
4. two forest-like profiles: increasing trend built from many small steps
5. an increasing line and a unimodal hump
6. an increasing line and a decreasing-then-flat curve (flat part ripples)
7. an increasing line and a tree-like staircase with the same trend
8. a smooth increasing curve and its negation plus noise
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import UnknownScenario
from .measures import MeasureKind, MeasureSpec, measure
from .profiles import Grid, Profile

SCENARIO_IDS = tuple(range(1, 9))
DEFAULT_SIGMA = 0.005
GENERATOR_VERSION = 1
_GRID_DRAWS = 500


@dataclass(frozen=True)
class ScenarioSpec:
    id: int
    n_pairs: int = 100
    sigma: float = DEFAULT_SIGMA
    seed: int = 0
    m: int = 101

    def __post_init__(self):
        if self.id not in SCENARIO_IDS:
            raise UnknownScenario(f"scenario {self.id!r} is not one of 1..8")
        if self.n_pairs < 1 or self.m < 2 or self.sigma < 0:
            raise ValueError("n_pairs >= 1, m >= 2 and sigma >= 0 required")


@lru_cache(maxsize=64)
def scenario_grid(seed: int, m: int) -> Grid:
    z = np.random.default_rng([seed, 0, GENERATOR_VERSION]).standard_normal(_GRID_DRAWS)
    return Grid("z", np.linspace(z.min(), z.max(), m))


def _line(u, rng):
    return rng.uniform(0.3, 0.9) * u + rng.uniform(-0.1, 0.1)


def _smooth_increasing(u, rng):
    b = rng.uniform(1.5, 3.0)
    shift = rng.uniform(-0.3, 0.3)
    return 0.5 * np.tanh(b * (u - shift)) + 0.3 * u


def _forest_like(u, rng, trend, n_trees=5, n_splits=8):
    """Average of staircases that follow ``trend * u`` with random breakpoints."""
    out = np.zeros_like(u)
    for _ in range(n_trees):
        cuts = np.sort(rng.uniform(-1, 1, n_splits))
        edges = np.concatenate([[-1.0], cuts, [1.0]])
        seg = np.searchsorted(cuts, u, side="right")
        centers = (edges[:-1] + edges[1:]) / 2
        out += trend * centers[seg]
    return out / n_trees


def _pair(sid: int, u: np.ndarray, rng: np.random.Generator, sigma: float):
    if sid == 1:
        return _line(u, rng), _line(u, rng)
    if sid == 2:
        a1, b1 = rng.uniform(0.4, 0.8), rng.uniform(1.0, 2.0)
        a2 = rng.uniform(0.4, 0.8)
        p1 = a1 * np.tanh(b1 * u) / np.tanh(b1) + rng.uniform(-0.1, 0.1)
        p2 = a2 * (u + 0.5 * u ** 3) / 1.5 + rng.uniform(-0.1, 0.1)
        return p1, p2
    if sid == 3:
        p1 = _smooth_increasing(u, rng)
        return p1, p1 + rng.normal(0.0, sigma, u.shape) if sigma > 0 else p1.copy()
    if sid == 4:
        return (_forest_like(u, rng, rng.uniform(0.4, 0.8)),
                _forest_like(u, rng, rng.uniform(0.4, 0.8)))
    if sid == 5:
        p1 = _line(u, rng)
        amp, mu, width = rng.uniform(0.6, 1.0), rng.uniform(-0.3, 0.3), rng.uniform(0.3, 0.5)
        return p1, amp * np.exp(-(((u - mu) / width) ** 2)) - amp / 2
    if sid == 6:
        p1 = _line(u, rng)
        knee, slope = rng.uniform(-0.2, 0.4), rng.uniform(0.5, 0.9)
        ripple = 0.02 * np.sin(rng.uniform(20.0, 30.0) * u + rng.uniform(0, 2 * np.pi))
        p2 = np.where(u < knee, slope * (knee - u), ripple) - 0.3
        return p1, p2
    if sid == 7:
        a, c = rng.uniform(0.4, 0.8), rng.uniform(-0.1, 0.1)
        k = int(rng.integers(5, 9))
        edges = np.linspace(-1.0, 1.0, k + 1)
        seg = np.clip(np.searchsorted(edges, u, side="right") - 1, 0, k - 1)
        centers = (edges[:-1] + edges[1:]) / 2
        return a * u + c, a * centers[seg] + c
    p1 = _smooth_increasing(u, rng)
    p2 = -p1 + rng.normal(0.0, sigma, u.shape) if sigma > 0 else -p1
    return p1, p2


def generate_pair(spec: ScenarioSpec, pair_index: int) -> tuple[Profile, Profile]:
    """Deterministic in ``(spec.seed, spec.id, pair_index)``."""
    grid = scenario_grid(spec.seed, spec.m)
    z = grid.points
    u = 2.0 * (z - z[0]) / (z[-1] - z[0]) - 1.0
    rng = np.random.default_rng([spec.seed, spec.id, pair_index, GENERATOR_VERSION])
    g1, g2 = _pair(spec.id, u, rng, spec.sigma)
    tag = f"s{spec.id}p{pair_index}"
    return (Profile(f"{tag}a", "z", grid, np.clip(g1, -1.0, 1.0)),
            Profile(f"{tag}b", "z", grid, np.clip(g2, -1.0, 1.0)))


DEFAULT_MEASURES = (
    MeasureSpec(MeasureKind.PDI),
    MeasureSpec(MeasureKind.L2_PROFILES),
    MeasureSpec(MeasureKind.L2_DERIVATIVES),
)


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    scenario: int
    values: Mapping[str, np.ndarray]
    summary: Mapping[str, dict] = field(default_factory=dict)

    def median(self, kind: str) -> float:
        return self.summary[MeasureKind.parse(kind).value]["median"]


def _summary(v: np.ndarray) -> dict:
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
    return {"median": float(med), "q1": float(q1), "q3": float(q3),
            "min": float(v.min()), "max": float(v.max()), "mean": float(v.mean())}


def evaluate_scenarios(specs: Iterable[ScenarioSpec],
                       measures: Sequence[MeasureSpec] = DEFAULT_MEASURES) -> list[ScenarioResult]:
    results = []
    for spec in specs:
        pairs = [generate_pair(spec, i) for i in range(spec.n_pairs)]
        values = {}
        for ms in measures:
            values[ms.kind.value] = np.array([measure(a, b, ms) for a, b in pairs])
        results.append(ScenarioResult(spec.id, values, {k: _summary(v) for k, v in values.items()}))
    return results


def median_ranks(results: Sequence[ScenarioResult], kind: str) -> dict[int, int]:
    """1-based rank of each scenario's median within one measure (1 = smallest; ties by id)."""
    kind = MeasureKind.parse(kind).value
    order = sorted(results, key=lambda r: (r.summary[kind]["median"], r.scenario))
    return {r.scenario: i + 1 for i, r in enumerate(order)}


def write_long_csv(results: Sequence[ScenarioResult], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "pair", "measure", "value"])
        for r in results:
            for kind, vals in r.values.items():
                for i, v in enumerate(vals):
                    w.writerow([r.scenario, i, kind, repr(float(v))])


def summary_dict(results: Sequence[ScenarioResult], specs: Sequence[ScenarioSpec]) -> dict:
    kinds = list(results[0].values) if results else []
    return {
        "generator_version": GENERATOR_VERSION,
        "specs": [vars(s) for s in specs],
        "scenarios": {str(r.scenario): r.summary for r in results},
        "median_ranks": {k: {str(s): v for s, v in median_ranks(results, k).items()} for k in kinds},
    }


def write_summary_json(results: Sequence[ScenarioResult], specs: Sequence[ScenarioSpec], path: str | Path) -> None:
    Path(path).write_text(json.dumps(summary_dict(results, specs), indent=1, sort_keys=True) + "\n", encoding="utf-8")
