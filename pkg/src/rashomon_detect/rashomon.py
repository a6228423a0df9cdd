"""Rashomon sets around a reference model and selection of the k most different members."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Sequence, Union

from .errors import BundleIncomplete, InputError, UnknownExplicitId
from .measures import DisparityMatrix, MeasureSpec, pairwise_disparity
from .profiles import DEFAULT_GRID_SIZE, ProfileBundle

logger = logging.getLogger(__name__)

BEST = "best_by_metric"


class Variant(str, Enum):
    FULL = "full"
    GREEDY = "greedy"


@dataclass(frozen=True)
class RashomonConfig:
    """Detection settings.

    ``reference`` is ``"best_by_metric"`` or an explicit model id; ``k=None``
    uses :func:`default_k` on the Rashomon set size. ``metric`` names the
    record field that gates membership (``cv_auc_mean`` or ``test_auc``).
    """

    epsilon: float = 0.04
    k: Optional[int] = None
    measure: MeasureSpec = field(default_factory=MeasureSpec)
    grid_size: int = DEFAULT_GRID_SIZE
    reference: str = BEST
    variant: Variant = Variant.FULL
    metric: str = "cv_auc_mean"

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.epsilon >= 0:
            raise InputError("epsilon must be non-negative")
        if self.k is not None and self.k < 2:
            raise InputError("k must be at least 2")
        if self.metric not in ("cv_auc_mean", "test_auc"):
            raise InputError(f"unknown metric {self.metric!r}")

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "k": self.k,
            "measure": self.measure.to_dict(),
            "grid_size": self.grid_size,
            "reference": self.reference,
            "variant": self.variant.value,
            "metric": self.metric,
        }


Performance = Union[Mapping[str, float], Sequence]


def performance_table(records: Performance, metric: str = "cv_auc_mean") -> dict[str, float]:
    """``id -> metric`` from ModelRecords (failed ones skipped) or a ready mapping."""
    if isinstance(records, Mapping):
        table = {str(k): float(v) for k, v in records.items() if v is not None}
    else:
        table = {}
        for r in records:
            if r.failed:
                continue
            value = r.test_auc if metric == "test_auc" else r.cv_auc_mean
            if value is not None and not math.isnan(value):
                table[r.id] = float(value)
    if not table:
        raise InputError(f"no model carries a {metric} score")
    return table


def reference_model(records: Performance, config: RashomonConfig = RashomonConfig()) -> str:
    table = performance_table(records, config.metric)
    if config.reference != BEST:
        if config.reference not in table:
            raise UnknownExplicitId(f"reference model {config.reference!r} is not among the scored models")
        return config.reference
    return min(table, key=lambda mid: (-table[mid], mid))


def build_rashomon_set(records: Performance, reference: str, epsilon: float,
                       metric: str = "cv_auc_mean") -> tuple[str, ...]:
    """Ids with ``metric >= metric(reference) - epsilon``, best first (ties by id)."""
    table = performance_table(records, metric)
    if reference not in table:
        raise UnknownExplicitId(f"reference model {reference!r} is not among the scored models")
    cutoff = table[reference] - epsilon
    members = [mid for mid, v in table.items() if v >= cutoff or mid == reference]
    return tuple(sorted(members, key=lambda mid: (-table[mid], mid)))


def default_k(rashomon_size: int) -> int:
    """``max(2, round(sqrt(size)))`` with halves rounded up."""
    if rashomon_size < 1:
        raise InputError("Rashomon set is empty")
    return max(2, int(math.floor(math.sqrt(rashomon_size) + 0.5)))


def select_most_different(matrix: DisparityMatrix, reference: str, k: int,
                          variant: Variant = Variant.FULL) -> tuple[list[str], list[float]]:
    """Step-wise selection on a variable-averaged disparity matrix.

    Full variant: each step adds the candidate with the largest mean
    disparity to all models selected so far, which equals the double
    average over selected models and variables. Greedy variant: largest
    disparity to the most recently added model only. Ties go to the smaller
    id. Returns the selected ids (reference first) and each step's winning
    score.
    """
    variant = Variant(variant)
    ids = list(matrix.model_ids)
    D = matrix.values
    pos = {mid: i for i, mid in enumerate(ids)}
    selected = [reference]
    scores: list[float] = []
    remaining = sorted(mid for mid in ids if mid != reference)
    target = min(k, len(ids))
    while len(selected) < target:
        best_id, best = None, -math.inf
        for cand in remaining:
            c = pos[cand]
            if variant is Variant.FULL:
                total = 0.0
                for s in selected:
                    total += D[pos[s], c]
                score = total / len(selected)
            else:
                score = float(D[pos[selected[-1]], c])
            if score > best:  # remaining is sorted, so ties keep the smaller id
                best_id, best = cand, score
        selected.append(best_id)
        scores.append(float(best))
        remaining.remove(best_id)
    return selected, scores


@dataclass(frozen=True, eq=False)
class DetectResult:
    selected: tuple[str, ...]
    rashomon_ids: tuple[str, ...]
    selection_scores: tuple[float, ...]
    matrix: DisparityMatrix
    config: RashomonConfig
    k: int
    performance: Mapping[str, float]
    warnings: tuple[str, ...] = ()
    zero_filled: tuple[tuple[str, str], ...] = ()

    @property
    def reference(self) -> str:
        return self.selected[0]

    def summary_pairs(self) -> list[tuple[str, str, float]]:
        """All pairs of selected models with their averaged disparity, largest first (ties by ids)."""
        pairs = []
        for i, a in enumerate(self.selected):
            for b in self.selected[i + 1:]:
                pairs.append((a, b, self.matrix.get(a, b)))
        return sorted(pairs, key=lambda t: (-t[2], t[0], t[1]))

    def to_dict(self) -> dict:
        return {
            "reference": self.reference,
            "selected": list(self.selected),
            "selection_scores": list(self.selection_scores),
            "k": self.k,
            "rashomon_ids": list(self.rashomon_ids),
            "performance": {mid: self.performance[mid] for mid in self.rashomon_ids},
            "epsilon": self.config.epsilon,
            "measure": self.config.measure.kind.value,
            "variant": self.config.variant.value,
            "config": self.config.to_dict(),
            "matrix": {"model_ids": list(self.matrix.model_ids), "values": self.matrix.values.tolist()},
            "per_variable": {v: M.tolist() for v, M in self.matrix.per_variable.items()},
            "warnings": list(self.warnings),
            "zero_filled": [list(p) for p in self.zero_filled],
        }


def rashomon_detect(records: Performance, bundle: ProfileBundle,
                    config: RashomonConfig = RashomonConfig()) -> DetectResult:
    """Reference model, Rashomon set, disparities over the set, then selection.

    When ``k`` is at least the set size every member is returned, still
    ordered by the selection rule.
    """
    table = performance_table(records, config.metric)
    reference = reference_model(table, config)
    members = build_rashomon_set(table, reference, config.epsilon)
    for mid in members:
        if not bundle.has_model(mid):
            raise BundleIncomplete(mid)
    k = config.k if config.k is not None else default_k(len(members))
    warnings = []
    if k >= len(members):
        msg = f"k={k} is not below the Rashomon set size {len(members)}; returning all members"
        logger.warning(msg)
        warnings.append(msg)
    zero_filled = tuple(bundle.missing(members))
    if zero_filled:
        warnings.append(f"{len(zero_filled)} missing profiles filled with the constant 0")
    matrix = pairwise_disparity(bundle, config.measure, members)
    selected, scores = select_most_different(matrix, reference, k, config.variant)
    return DetectResult(
        selected=tuple(selected),
        rashomon_ids=members,
        selection_scores=tuple(scores),
        matrix=matrix,
        config=config,
        k=k,
        performance=table,
        warnings=tuple(warnings),
        zero_filled=zero_filled,
    )


def rashomon_detect_greedy(records: Performance, bundle: ProfileBundle,
                           config: RashomonConfig = RashomonConfig()) -> DetectResult:
    """:func:`rashomon_detect` comparing candidates with the latest pick only."""
    return rashomon_detect(records, bundle, replace(config, variant=Variant.GREEDY))
