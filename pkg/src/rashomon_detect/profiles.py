"""Partial-dependence profiles on shared grids and the profile-exchange file."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Optional, Protocol, Sequence, Union

import numpy as np

from .data import Dataset, VariableMeta
from .errors import (
    CategoricalVariable,
    DegenerateDomain,
    GridMismatch,
    InputError,
    NumericVariable,
    SchemaMismatch,
    UnknownVariable,
)

EXCHANGE_VERSION = 1
DEFAULT_GRID_SIZE = 101
# rows scored per predict() call while building a profile
_CHUNK_ROWS = 200_000


class Scorer(Protocol):
    id: str
    feature_names: Sequence[str]

    def predict(self, X: np.ndarray) -> np.ndarray: ...


class GridStrategy(str, Enum):
    UNIFORM = "uniform"
    QUANTILE = "quantile"


@dataclass(frozen=True, eq=False)
class Grid:
    variable: str
    points: np.ndarray
    strategy: GridStrategy = GridStrategy.UNIFORM

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 1 or len(pts) < 2:
            raise InputError(f"grid for {self.variable!r} needs at least two points")
        if not np.isfinite(pts).all() or not (np.diff(pts) > 0).all():
            raise InputError(f"grid for {self.variable!r} must be finite and strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "strategy", GridStrategy(self.strategy))

    @property
    def m(self) -> int:
        return len(self.points)

    @property
    def span(self) -> float:
        return float(self.points[-1] - self.points[0])

    def same_as(self, other: "Grid") -> bool:
        return np.array_equal(self.points, other.points)


@dataclass(frozen=True, eq=False)
class Profile:
    model_id: str
    variable: str
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.shape != (self.grid.m,):
            raise InputError(f"profile {self.model_id}/{self.variable}: {v.shape[0]} values for {self.grid.m} grid points")
        if not np.isfinite(v).all():
            raise InputError(f"profile {self.model_id}/{self.variable} has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class CategoricalProfile:
    model_id: str
    variable: str
    categories: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        object.__setattr__(self, "categories", tuple(self.categories))
        if v.shape != (len(self.categories),):
            raise InputError(f"categorical profile {self.model_id}/{self.variable}: one value per category required")
        if not np.isfinite(v).all():
            raise InputError(f"categorical profile {self.model_id}/{self.variable} has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


AnyProfile = Union[Profile, CategoricalProfile]


def make_grid(meta: VariableMeta, m: int = DEFAULT_GRID_SIZE, strategy: str = "uniform",
              data: Optional[Dataset] = None) -> Grid:
    """Uniform points over the observed domain, or de-duplicated empirical quantiles."""
    if not meta.is_numeric:
        raise CategoricalVariable(f"{meta.name!r} is categorical; use its category list")
    if m < 2:
        raise InputError("grid size must be at least 2")
    strategy = GridStrategy(strategy)
    lo, hi = meta.observed_domain
    if lo == hi:
        raise DegenerateDomain(f"{meta.name!r} is constant ({lo})")
    if strategy is GridStrategy.UNIFORM:
        points = np.linspace(lo, hi, m)
    else:
        if data is None:
            raise InputError("quantile grids need the data")
        column = data.rows[:, data.index_of(meta.name)]
        points = np.unique(np.quantile(column, np.arange(m) / (m - 1)))
        if len(points) < 2:
            raise DegenerateDomain(f"{meta.name!r} has a single distinct quantile")
    return Grid(meta.name, points, strategy)


def _columns_for(model: Scorer, data: Dataset) -> np.ndarray:
    try:
        cols = [data.index_of(name) for name in model.feature_names]
    except KeyError as exc:
        raise UnknownVariable(f"model {model.id!r} needs variable {exc.args[0]!r} absent from {data.name!r}") from None
    return np.ascontiguousarray(data.rows[:, cols])


def _feature_index(model: Scorer, variable: str) -> int:
    try:
        return list(model.feature_names).index(variable)
    except ValueError:
        raise UnknownVariable(f"model {model.id!r} has no variable {variable!r}") from None


def _replacement_means(model: Scorer, X: np.ndarray, j: int, values: np.ndarray) -> np.ndarray:
    """``out[t] = (1/n) * sum_i f(x_i with column j := values[t])``.

    Rows are summed in order, one at a time, so the result does not depend
    on how grid points are batched into predict() calls.
    """
    n = X.shape[0]
    out = np.empty(len(values))
    per_call = max(1, _CHUNK_ROWS // n)
    for start in range(0, len(values), per_call):
        block = values[start:start + per_call]
        big = np.tile(X, (len(block), 1))
        big[:, j] = np.repeat(block, n)
        preds = np.asarray(model.predict(big), dtype=np.float64).reshape(len(block), n)
        acc = np.zeros(len(block))
        for i in range(n):
            acc += preds[:, i]
        out[start:start + len(block)] = acc / n
    return out


def pdp(model: Scorer, data: Dataset, grid: Grid) -> Profile:
    """Partial-dependence profile of ``model`` for ``grid.variable`` over the rows of ``data``."""
    if grid.variable not in data.feature_names:
        raise UnknownVariable(f"{grid.variable!r} not in dataset {data.name!r}")
    j = _feature_index(model, grid.variable)
    X = _columns_for(model, data)
    return Profile(model.id, grid.variable, grid, _replacement_means(model, X, j, grid.points))


def pdp_categorical(model: Scorer, data: Dataset, meta: VariableMeta) -> CategoricalProfile:
    """One averaged prediction per category code, in the variable's category order."""
    if meta.is_numeric:
        raise NumericVariable(f"{meta.name!r} is numeric; use pdp()")
    if meta.name not in data.feature_names:
        raise UnknownVariable(f"{meta.name!r} not in dataset {data.name!r}")
    j = _feature_index(model, meta.name)
    X = _columns_for(model, data)
    codes = np.arange(len(meta.categories), dtype=np.float64)
    return CategoricalProfile(model.id, meta.name, meta.categories, _replacement_means(model, X, j, codes))


@dataclass(frozen=True)
class BundleVariable:
    name: str
    grid: Optional[Grid] = None
    categories: Optional[tuple[str, ...]] = None

    @property
    def is_numeric(self) -> bool:
        return self.grid is not None

    @property
    def size(self) -> int:
        return self.grid.m if self.grid is not None else len(self.categories)


@dataclass(frozen=True, eq=False)
class ProfileBundle:
    """Profiles for a set of models over shared per-variable grids.

    A (model, variable) pair may be absent; :meth:`values` then returns the
    constant-zero profile.
    """

    model_ids: tuple[str, ...]
    variables: tuple[BundleVariable, ...]
    profiles: Mapping[tuple[str, str], AnyProfile]
    scores: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "model_ids", tuple(self.model_ids))
        object.__setattr__(self, "variables", tuple(self.variables))
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise GridMismatch("duplicate variable in bundle")
        if len(set(self.model_ids)) != len(self.model_ids):
            raise SchemaMismatch("duplicate model id in bundle")
        byname = {v.name: v for v in self.variables}
        for (mid, var), prof in self.profiles.items():
            if mid not in self.model_ids or var not in byname:
                raise SchemaMismatch(f"profile for unknown model/variable {mid}/{var}")
            bv = byname[var]
            if isinstance(prof, Profile):
                if bv.grid is None or not prof.grid.same_as(bv.grid):
                    raise GridMismatch(f"profile {mid}/{var} is not on the shared grid")
            elif bv.categories is None or prof.categories != bv.categories:
                raise GridMismatch(f"profile {mid}/{var} does not match the category list")

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def variable(self, name: str) -> BundleVariable:
        for v in self.variables:
            if v.name == name:
                return v
        raise UnknownVariable(name)

    def has_model(self, model_id: str) -> bool:
        return model_id in self.model_ids

    def values(self, model_id: str, variable: str) -> np.ndarray:
        prof = self.profiles.get((model_id, variable))
        if prof is None:
            return np.zeros(self.variable(variable).size)
        return prof.values

    def matrix(self, variable: str, model_ids: Sequence[str]) -> np.ndarray:
        """Stacked values (models x grid), zero rows where a profile is missing."""
        return np.vstack([self.values(mid, variable) for mid in model_ids])

    def missing(self, model_ids: Optional[Sequence[str]] = None) -> list[tuple[str, str]]:
        ids = self.model_ids if model_ids is None else model_ids
        return [(mid, v.name) for mid in ids for v in self.variables if (mid, v.name) not in self.profiles]

    def subset(self, model_ids: Sequence[str]) -> "ProfileBundle":
        keep = set(model_ids)
        return ProfileBundle(
            tuple(model_ids), self.variables,
            {k: p for k, p in self.profiles.items() if k[0] in keep},
            {k: s for k, s in self.scores.items() if k in keep},
        )


def profile_bundle(
    models: Sequence[Scorer],
    data: Dataset,
    grid_size: int = DEFAULT_GRID_SIZE,
    strategy: str = "uniform",
    *,
    background_rows: Optional[int] = None,
    seed: int = 0,
    center: bool = False,
    scores: Optional[Mapping[str, float]] = None,
) -> ProfileBundle:
    """Profiles of every model for every variable of ``data``.

    Grids come from the full ``data``; the averaging sample is all rows, or
    ``background_rows`` rows drawn without replacement using ``seed``.
    ``center`` subtracts each profile's mean value.
    """
    background = data
    if background_rows is not None and background_rows < data.n:
        idx = np.sort(np.random.default_rng(seed).choice(data.n, size=background_rows, replace=False))
        background = _Rows(data, idx)
    variables = []
    for meta in data.variables:
        if meta.is_numeric:
            variables.append(BundleVariable(meta.name, grid=make_grid(meta, grid_size, strategy, data)))
        else:
            variables.append(BundleVariable(meta.name, categories=meta.categories))
    profiles: dict[tuple[str, str], AnyProfile] = {}
    for model in models:
        for meta, bv in zip(data.variables, variables):
            try:
                prof = pdp(model, background, bv.grid) if bv.is_numeric else pdp_categorical(model, background, meta)
            except InputError as exc:
                raise type(exc)(f"profile {model.id}/{meta.name}: {exc}") from None
            if center:
                prof = _centered(prof)
            profiles[(model.id, meta.name)] = prof
    return ProfileBundle(tuple(m.id for m in models), tuple(variables), profiles, dict(scores or {}))


class _Rows:
    # background sample: rows only, so a one-class draw is not an error

    def __init__(self, data: Dataset, idx: np.ndarray):
        self.name = data.name
        self.rows = data.rows[idx]
        self.variables = data.variables
        self.feature_names = data.feature_names
        self.index_of = data.index_of


def _centered(prof: AnyProfile) -> AnyProfile:
    v = prof.values - prof.values.mean()
    if isinstance(prof, Profile):
        return Profile(prof.model_id, prof.variable, prof.grid, v)
    return CategoricalProfile(prof.model_id, prof.variable, prof.categories, v)


# -- exchange format -------------------------------------------------------

def bundle_to_dict(bundle: ProfileBundle, scores: Optional[Mapping[str, float]] = None) -> dict:
    scores = dict(bundle.scores if scores is None else scores)
    models = []
    for mid in bundle.model_ids:
        entry = {"id": mid}
        if mid in scores and scores[mid] is not None:
            entry["auc"] = float(scores[mid])
        models.append(entry)
    variables = []
    for v in bundle.variables:
        if v.is_numeric:
            variables.append({"name": v.name, "kind": "numeric", "grid": v.grid.points.tolist(),
                              "strategy": v.grid.strategy.value})
        else:
            variables.append({"name": v.name, "kind": "categorical", "categories": list(v.categories)})
    profiles = [
        {"model_id": mid, "variable": v.name, "values": bundle.profiles[(mid, v.name)].values.tolist()}
        for mid in bundle.model_ids for v in bundle.variables if (mid, v.name) in bundle.profiles
    ]
    return {"format_version": EXCHANGE_VERSION, "models": models, "variables": variables, "profiles": profiles}


def write_exchange(bundle: ProfileBundle, records, path: str | Path) -> None:
    """Write ``bundle`` plus performance scores (ModelRecords or an id -> AUC mapping)."""
    if records is None:
        scores = dict(bundle.scores)
    elif isinstance(records, Mapping):
        scores = dict(records)
    else:
        scores = {r.id: r.cv_auc_mean for r in records if not r.failed}
    doc = bundle_to_dict(bundle, scores)
    Path(path).write_text(json.dumps(doc, indent=1, allow_nan=False) + "\n", encoding="utf-8")


def bundle_from_dict(doc: Mapping) -> ProfileBundle:
    if not isinstance(doc, Mapping) or doc.get("format_version") != EXCHANGE_VERSION:
        raise SchemaMismatch(f"expected profile-exchange format_version {EXCHANGE_VERSION}")
    try:
        model_entries = list(doc["models"])
        var_entries = list(doc["variables"])
        prof_entries = list(doc.get("profiles", []))
        model_ids = [str(m["id"]) for m in model_entries]
        scores = {str(m["id"]): float(m["auc"]) for m in model_entries if m.get("auc") is not None}
        variables: dict[str, BundleVariable] = {}
        for v in var_entries:
            name, kind = str(v["name"]), v["kind"]
            if kind == "numeric":
                try:
                    bv = BundleVariable(name, grid=Grid(name, v["grid"], v.get("strategy", "uniform")))
                except InputError as exc:
                    raise SchemaMismatch(str(exc)) from None
            elif kind == "categorical":
                bv = BundleVariable(name, categories=tuple(str(c) for c in v["categories"]))
            else:
                raise SchemaMismatch(f"variable {name!r} has unknown kind {kind!r}")
            if name in variables:
                old = variables[name]
                same = (old.is_numeric == bv.is_numeric and
                        (old.grid.same_as(bv.grid) if bv.is_numeric else old.categories == bv.categories))
                if not same:
                    raise GridMismatch(f"variable {name!r} declared with two different grids")
                continue
            variables[name] = bv
        profiles: dict[tuple[str, str], AnyProfile] = {}
        for p in prof_entries:
            mid, var = str(p["model_id"]), str(p["variable"])
            if mid not in model_ids or var not in variables:
                raise SchemaMismatch(f"profile for undeclared model/variable {mid}/{var}")
            bv = variables[var]
            if "grid" in p and bv.is_numeric and not np.array_equal(np.asarray(p["grid"], float), bv.grid.points):
                raise GridMismatch(f"profile {mid}/{var} uses a different grid than variable {var!r}")
            if (mid, var) in profiles:
                raise SchemaMismatch(f"duplicate profile {mid}/{var}")
            try:
                profiles[(mid, var)] = (
                    Profile(mid, var, bv.grid, p["values"]) if bv.is_numeric
                    else CategoricalProfile(mid, var, bv.categories, p["values"])
                )
            except (InputError, TypeError, ValueError) as exc:
                raise SchemaMismatch(str(exc)) from None
    except (KeyError, TypeError) as exc:
        raise SchemaMismatch(f"malformed profile-exchange document: {exc!r}") from None
    return ProfileBundle(tuple(model_ids), tuple(variables.values()), profiles, scores)


def read_exchange(path: str | Path) -> tuple[ProfileBundle, dict[str, float]]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"{path} is not valid JSON: {exc}") from None
    bundle = bundle_from_dict(doc)
    return bundle, dict(bundle.scores)
