"""Tabular ingestion: CSV to a typed design matrix, stratified splitting and folds."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateSplit,
    InputError,
    MissingTarget,
    MissingValue,
    NonBinaryTarget,
    RaggedRow,
    TooFewPerClass,
)

MISSING_TOKENS = frozenset({"", "NA", "N/A", "NaN", "nan", "null", "NULL", "None"})


class VariableKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class VariableMeta:
    name: str
    kind: VariableKind
    observed_domain: Optional[tuple[float, float]] = None
    categories: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", VariableKind(self.kind))
        if self.kind is VariableKind.NUMERIC:
            if self.categories is not None:
                raise InputError(f"numeric variable {self.name!r} cannot have categories")
            if self.observed_domain is None:
                raise InputError(f"numeric variable {self.name!r} needs an observed domain")
            lo, hi = (float(v) for v in self.observed_domain)
            if not lo <= hi:
                raise InputError(f"bad domain [{lo}, {hi}] for {self.name!r}")
            object.__setattr__(self, "observed_domain", (lo, hi))
        else:
            if self.observed_domain is not None:
                raise InputError(f"categorical variable {self.name!r} cannot have a domain")
            cats = tuple(str(c) for c in (self.categories or ()))
            if not cats or len(set(cats)) != len(cats):
                raise InputError(f"categorical variable {self.name!r} needs distinct categories")
            object.__setattr__(self, "categories", cats)

    @property
    def is_numeric(self) -> bool:
        return self.kind is VariableKind.NUMERIC


@dataclass(frozen=True)
class Dataset:
    """Design matrix with binary target.

    ``rows`` holds numeric values directly and categorical cells as integer
    codes (stored as floats) indexing into the variable's ``categories``.
    Arrays are made read-only on construction.
    """

    name: str
    rows: np.ndarray
    target: np.ndarray
    variables: tuple[VariableMeta, ...]
    target_name: str = "y"
    target_labels: tuple[str, str] = ("0", "1")

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64, copy=True)
        target = np.array(self.target, dtype=np.int64, copy=True)
        variables = tuple(self.variables)
        if rows.ndim != 2 or rows.shape[1] != len(variables):
            raise InputError("rows must be an n x p matrix matching the variable list")
        n = rows.shape[0]
        if n < 2:
            raise InputError("a dataset needs at least two rows")
        if target.shape != (n,) or not np.isin(target, (0, 1)).all():
            raise InputError("target must be a length-n vector of 0/1 labels")
        if target.min() == target.max():
            raise InputError("both label classes must be present")
        if not np.isfinite(rows).all():
            raise InputError("rows contain missing or non-finite values")
        for j, meta in enumerate(variables):
            if not meta.is_numeric:
                codes = rows[:, j]
                if (codes != np.round(codes)).any() or codes.min() < 0 or codes.max() >= len(meta.categories):
                    raise InputError(f"invalid category codes in column {meta.name!r}")
        rows.setflags(write=False)
        target.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "target_labels", tuple(self.target_labels))

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def index_of(self, name: str) -> int:
        for j, v in enumerate(self.variables):
            if v.name == name:
                return j
        raise KeyError(name)

    def variable(self, name: str) -> VariableMeta:
        return self.variables[self.index_of(name)]

    def subset(self, indices: Sequence[int], name: Optional[str] = None) -> "Dataset":
        """Rows at ``indices``; numeric domains are recomputed, category lists kept."""
        idx = np.asarray(indices, dtype=np.int64)
        rows = self.rows[idx]
        variables = tuple(
            _numeric_meta(v.name, rows[:, j]) if v.is_numeric else v
            for j, v in enumerate(self.variables)
        )
        return Dataset(
            name=name or self.name,
            rows=rows,
            target=self.target[idx],
            variables=variables,
            target_name=self.target_name,
            target_labels=self.target_labels,
        )


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise InputError("test_fraction must lie in (0, 1)")
        if self.seed < 0:
            raise InputError("seed must be non-negative")


def _numeric_meta(name: str, column: np.ndarray) -> VariableMeta:
    return VariableMeta(name, VariableKind.NUMERIC, (float(column.min()), float(column.max())))


def _parse_float(text: str) -> Optional[float]:
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_schema(path: str | Path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        schema = json.load(fh)
    if not isinstance(schema, dict) or any(v not in ("numeric", "categorical") for v in schema.values()):
        raise InputError('schema must map column names to "numeric" or "categorical"')
    return schema


def load_csv(
    path: str | Path,
    target_column: str,
    schema: Optional[Mapping[str, str]] = None,
    positive_label: Optional[str] = None,
    name: Optional[str] = None,
) -> Dataset:
    """Read a CSV file with a header row into a :class:`Dataset`.

    Columns absent from ``schema`` are numeric when every cell parses as a
    finite real, categorical otherwise. The target must hold exactly two
    distinct raw labels; the lexicographically larger one maps to 1 unless
    ``positive_label`` is given. Missing cells are rejected.
    """
    path = Path(path)
    schema = dict(schema or {})
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path} is empty") from None
        records = list(reader)
    if target_column not in header:
        raise MissingTarget(f"target column {target_column!r} not found in {path}")
    unknown = set(schema) - set(header)
    if unknown:
        raise InputError(f"schema names unknown columns: {sorted(unknown)}")
    width = len(header)
    records = [r for r in records if r]  # tolerate trailing blank lines
    for i, rec in enumerate(records):
        if len(rec) != width:
            raise RaggedRow(i, width, len(rec))
        for j, cell in enumerate(rec):
            if cell.strip() in MISSING_TOKENS:
                raise MissingValue(i, header[j])

    t = header.index(target_column)
    raw_target = [rec[t] for rec in records]
    labels = sorted(set(raw_target))
    if len(labels) != 2:
        raise NonBinaryTarget(f"target {target_column!r} has {len(labels)} distinct values, expected 2")
    if positive_label is None:
        negative, positive = labels
    elif positive_label in labels:
        positive = positive_label
        negative = labels[0] if labels[1] == positive else labels[1]
    else:
        raise InputError(f"positive label {positive_label!r} does not occur in the target")
    target = np.array([1 if v == positive else 0 for v in raw_target], dtype=np.int64)

    variables = []
    columns = []
    for j, col in enumerate(header):
        if j == t:
            continue
        cells = [rec[j] for rec in records]
        kind = schema.get(col)
        parsed = [_parse_float(c) for c in cells]
        if kind is None:
            kind = "numeric" if all(v is not None for v in parsed) else "categorical"
        if kind == "numeric":
            if any(v is None for v in parsed):
                bad = next(i for i, v in enumerate(parsed) if v is None)
                raise InputError(f"column {col!r} row {bad}: {cells[bad]!r} is not numeric")
            values = np.array(parsed, dtype=np.float64)
            variables.append(_numeric_meta(col, values))
        else:
            cats = tuple(sorted(set(cells)))
            lookup = {c: k for k, c in enumerate(cats)}
            values = np.array([lookup[c] for c in cells], dtype=np.float64)
            variables.append(VariableMeta(col, VariableKind.CATEGORICAL, categories=cats))
        columns.append(values)

    rows = np.column_stack(columns) if columns else np.empty((len(records), 0))
    return Dataset(
        name=name or path.stem,
        rows=rows,
        target=target,
        variables=tuple(variables),
        target_name=target_column,
        target_labels=(negative, positive),
    )


def write_csv(dataset: Dataset, path: str | Path) -> None:
    """Write ``dataset`` so that :func:`load_csv` restores it exactly.

    Numbers use ``repr`` (shortest round-trip form); the target column goes last.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*dataset.feature_names, dataset.target_name])
        for row, label in zip(dataset.rows, dataset.target):
            cells = [
                repr(float(v)) if meta.is_numeric else meta.categories[int(v)]
                for v, meta in zip(row, dataset.variables)
            ]
            cells.append(dataset.target_labels[int(label)])
            writer.writerow(cells)


def schema_of(dataset: Dataset) -> dict[str, str]:
    return {v.name: v.kind.value for v in dataset.variables}


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Stratified train/test split, deterministic in ``spec.seed``."""
    n = dataset.n
    n_test = math.ceil(n * spec.test_fraction)
    if n_test < 1 or n - n_test < 1:
        raise DegenerateSplit(f"test fraction {spec.test_fraction} leaves an empty side for n={n}")
    rng = np.random.default_rng(spec.seed)
    test_idx = []
    for label in (0, 1):
        members = np.flatnonzero(dataset.target == label)
        perm = rng.permutation(members)
        take = int(math.floor(len(members) * spec.test_fraction + 0.5))
        test_idx.append(perm[:take])
    test = np.sort(np.concatenate(test_idx))
    train = np.setdiff1d(np.arange(n), test)
    for side, idx in (("train", train), ("test", test)):
        labels = dataset.target[idx]
        if len(idx) == 0 or labels.min() == labels.max():
            raise DegenerateSplit(f"{side} side would lack a label class")
    return (
        dataset.subset(train, name=f"{dataset.name}[train]"),
        dataset.subset(test, name=f"{dataset.name}[test]"),
    )


def fold_assignments(dataset: Dataset, n_folds: int, seed: int) -> np.ndarray:
    """Stratified fold ids in ``range(n_folds)``, one per row.

    Each class is shuffled independently, the classes are concatenated, and
    ids are dealt round-robin, so fold sizes differ by at most one both
    overall and within each class.
    """
    if n_folds < 2:
        raise InputError("n_folds must be at least 2")
    counts = np.bincount(dataset.target, minlength=2)
    if counts.min() < n_folds:
        raise TooFewPerClass(f"class counts {counts.tolist()} are below n_folds={n_folds}")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(dataset.target == c)) for c in (0, 1)])
    folds = np.empty(dataset.n, dtype=np.int64)
    folds[order] = np.arange(dataset.n) % n_folds
    return folds
