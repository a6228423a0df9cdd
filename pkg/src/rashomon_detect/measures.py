"""Dissimilarity measures between profiles.

Three measures compare numeric profiles on a shared grid: the L2 distance
between profiles, the L2 distance between their first derivatives, and the
profile disparity index (PDI), the share of the domain on which the two
derivative signs disagree. Categorical profiles use a normalised Euclidean
distance between mean-centred value vectors.

Derivatives come from local orthogonal-polynomial least squares (GOLD): at
each grid point a degree-``q`` polynomial in ``z - z_i`` is fitted to the
``w`` nearest points and its linear coefficient is the derivative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import BadWindow, CategoryMismatch, GridMismatch, ProfileTooShort
from .profiles import CategoricalProfile, Grid, Profile, ProfileBundle

DEFAULT_WINDOW = 7
DEFAULT_DEGREE = 2
# default sign dead zone, as a fraction of (profile value range / grid span)
DEFAULT_TAU_FRACTION = 0.01


class MeasureKind(str, Enum):
    PDI = "pdi"
    L2_PROFILES = "l2_profiles"
    L2_DERIVATIVES = "l2_derivatives"

    @classmethod
    def parse(cls, name: str) -> "MeasureKind":
        aliases = {"l2": cls.L2_PROFILES, "l2der": cls.L2_DERIVATIVES}
        if name in aliases:
            return aliases[name]
        return cls(name)

    @property
    def short(self) -> str:
        return {"pdi": "pdi", "l2_profiles": "l2", "l2_derivatives": "l2der"}[self.value]


@dataclass(frozen=True)
class MeasureSpec:
    """A measure plus its derivative settings.

    ``tau=None`` selects the per-profile default dead zone
    ``0.01 * value range / grid span``; ``tau=0`` is the plain sign rule.
    """

    kind: MeasureKind = MeasureKind.PDI
    window: int = DEFAULT_WINDOW
    degree: int = DEFAULT_DEGREE
    tau: Optional[float] = None
    normalize_categorical: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", MeasureKind.parse(self.kind) if isinstance(self.kind, str) else self.kind)
        _check_window(self.window, self.degree)
        if self.tau is not None and self.tau < 0:
            raise ValueError("tau must be non-negative")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "window": self.window, "degree": self.degree, "tau": self.tau,
                "normalize_categorical": self.normalize_categorical}


@dataclass(frozen=True, eq=False)
class DerivativeVector:
    variable: str
    model_id: str
    values: np.ndarray
    window: int
    degree: int


def _check_window(w: int, q: int) -> None:
    if w < 3 or w % 2 == 0:
        raise BadWindow(f"window must be odd and >= 3, got {w}")
    if not 1 <= q < w:
        raise BadWindow(f"degree must lie in [1, window-1], got {q} for window {w}")


@lru_cache(maxsize=256)
def _gold_weights(points: bytes, m: int, w: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-point window starts and derivative weights, so ``der[i] = sum_k C[i,k] g[start_i+k]``."""
    z = np.frombuffer(points, dtype=np.float64)
    starts = np.clip(np.arange(m) - w // 2, 0, m - w)
    C = np.empty((m, w))
    powers = np.arange(q + 1)
    for i in range(m):
        dz = z[starts[i]:starts[i] + w] - z[i]
        h = np.abs(dz).max()
        V = (dz / h)[:, None] ** powers
        # QR orthogonalises the monomial basis; row 1 of R^-1 Q^T maps data to the linear coefficient
        Q, R = np.linalg.qr(V)
        C[i] = np.linalg.solve(R, Q.T)[1] / h
    return starts, C


def gold_matrix(grid: Grid, values: np.ndarray, window: int = DEFAULT_WINDOW, degree: int = DEFAULT_DEGREE) -> np.ndarray:
    """Derivatives for a stack of profiles (``values`` is (..., m)).

    Values are shifted by their first entry before filtering so constant
    profiles give exactly zero derivatives. Accumulation runs over window
    offsets, so each row's result is independent of the batch it sits in.
    """
    _check_window(window, degree)
    m = grid.m
    if m < window:
        raise ProfileTooShort(f"{m} grid points is fewer than the window {window}")
    values = np.asarray(values, dtype=np.float64)
    starts, C = _gold_weights(grid.points.tobytes(), m, window, degree)
    g = values - values[..., :1]
    der = np.zeros(values.shape)
    for k in range(window):
        der += C[:, k] * g[..., starts + k]
    return der


def gold_derivative(profile: Profile, window: int = DEFAULT_WINDOW, degree: int = DEFAULT_DEGREE) -> DerivativeVector:
    der = gold_matrix(profile.grid, profile.values[None, :], window, degree)[0]
    return DerivativeVector(profile.variable, profile.model_id, der, window, degree)


def _trapz(y: np.ndarray, z: np.ndarray) -> np.ndarray:
    dz = np.diff(z)
    return np.sum(dz * (y[..., 1:] + y[..., :-1]) / 2.0, axis=-1)


def _same_grid(p1: Profile, p2: Profile) -> Grid:
    if not p1.grid.same_as(p2.grid):
        raise GridMismatch(f"profiles {p1.model_id}/{p1.variable} and {p2.model_id}/{p2.variable} use different grids")
    return p1.grid


def l2_profiles(p1: Profile, p2: Profile) -> float:
    """Trapezoidal estimate of sqrt(integral of (g1 - g2)^2)."""
    grid = _same_grid(p1, p2)
    d = p1.values - p2.values
    return float(np.sqrt(_trapz(d * d, grid.points)))


def l2_derivatives(p1: Profile, p2: Profile, window: int = DEFAULT_WINDOW, degree: int = DEFAULT_DEGREE) -> float:
    """Trapezoidal estimate of sqrt(integral of (g1' - g2')^2) with GOLD derivatives."""
    grid = _same_grid(p1, p2)
    der = gold_matrix(grid, np.vstack([p1.values, p2.values]), window, degree)
    d = der[0] - der[1]
    return float(np.sqrt(_trapz(d * d, grid.points)))


def default_tau(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Dead zone ``0.01 * (max - min) / span`` per profile (last axis)."""
    v = np.asarray(values)
    return DEFAULT_TAU_FRACTION * (v.max(axis=-1) - v.min(axis=-1)) / grid.span


def sign_with_tolerance(der: np.ndarray, tau) -> np.ndarray:
    tau = np.asarray(tau, dtype=np.float64)
    if tau.ndim:
        tau = tau[..., None]
    return np.where(np.abs(der) <= tau, 0, np.sign(der)).astype(np.int8)


def point_weights(grid: Grid) -> Optional[np.ndarray]:
    """``None`` on a uniform grid (plain 1/m average); otherwise each point's
    share of the domain, so the index keeps its length-normalised meaning."""
    d = np.diff(grid.points)
    if np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        return None
    cells = np.empty(grid.m)
    cells[1:-1] = (d[:-1] + d[1:]) / 2.0
    cells[0] = d[0]
    cells[-1] = d[-1]
    return cells / cells.sum()


def _disagreement(s1: np.ndarray, s2: np.ndarray, weights: Optional[np.ndarray]) -> np.ndarray:
    neq = s1 != s2
    if weights is None:
        return np.count_nonzero(neq, axis=-1) / neq.shape[-1]
    return np.sum(neq * weights, axis=-1)


def pdi(p1: Profile, p2: Profile, window: int = DEFAULT_WINDOW, degree: int = DEFAULT_DEGREE,
        tau: Optional[float] = None) -> float:
    """Share of grid points where the tolerant derivative signs of the two profiles differ."""
    grid = _same_grid(p1, p2)
    values = np.vstack([p1.values, p2.values])
    der = gold_matrix(grid, values, window, degree)
    taus = default_tau(values, grid) if tau is None else tau
    s = sign_with_tolerance(der, taus)
    return float(_disagreement(s[0], s[1], point_weights(grid)))


def categorical_disparity(c1: CategoricalProfile, c2: CategoricalProfile, normalize: bool = True) -> float:
    """Euclidean distance between mean-centred category values, divided by sqrt(#categories) when ``normalize``."""
    if c1.categories != c2.categories:
        raise CategoryMismatch(f"{c1.variable!r}: category lists differ")
    a = c1.values - c1.values.mean()
    b = c2.values - c2.values.mean()
    d = float(np.sqrt(np.sum((a - b) ** 2)))
    return d / np.sqrt(len(a)) if normalize else d


def measure(p1, p2, spec: MeasureSpec = MeasureSpec()) -> float:
    """Dispatch one pair; categorical pairs always use :func:`categorical_disparity`."""
    if isinstance(p1, CategoricalProfile):
        return categorical_disparity(p1, p2, spec.normalize_categorical)
    if spec.kind is MeasureKind.PDI:
        return pdi(p1, p2, spec.window, spec.degree, spec.tau)
    if spec.kind is MeasureKind.L2_PROFILES:
        return l2_profiles(p1, p2)
    return l2_derivatives(p1, p2, spec.window, spec.degree)


# -- pairwise matrices -----------------------------------------------------

def _pairwise_numeric(values: np.ndarray, grid: Grid, spec: MeasureSpec) -> np.ndarray:
    if spec.kind is MeasureKind.L2_PROFILES:
        d = values[:, None, :] - values[None, :, :]
        return np.sqrt(_trapz(d * d, grid.points))
    der = gold_matrix(grid, values, spec.window, spec.degree)
    if spec.kind is MeasureKind.L2_DERIVATIVES:
        d = der[:, None, :] - der[None, :, :]
        return np.sqrt(_trapz(d * d, grid.points))
    taus = default_tau(values, grid) if spec.tau is None else spec.tau
    s = sign_with_tolerance(der, taus)
    return _disagreement(s[:, None, :], s[None, :, :], point_weights(grid))


def _pairwise_categorical(values: np.ndarray, normalize: bool) -> np.ndarray:
    c = values - values.mean(axis=1, keepdims=True)
    d = c[:, None, :] - c[None, :, :]
    out = np.sqrt(np.sum(d * d, axis=-1))
    return out / np.sqrt(values.shape[1]) if normalize else out


@dataclass(frozen=True)
class DisparityRecord:
    model_pair: tuple[str, str]
    per_variable: Mapping[str, float]
    average: float


@dataclass(frozen=True, eq=False)
class DisparityMatrix:
    """Symmetric matrix of variable-averaged disparities plus per-variable matrices."""

    model_ids: tuple[str, ...]
    values: np.ndarray
    per_variable: Mapping[str, np.ndarray]
    measure: MeasureSpec = field(default_factory=MeasureSpec)

    def index(self, model_id: str) -> int:
        return self.model_ids.index(model_id)

    def get(self, a: str, b: str) -> float:
        return float(self.values[self.index(a), self.index(b)])

    def records(self) -> list[DisparityRecord]:
        out = []
        n = len(self.model_ids)
        for i in range(n):
            for j in range(i + 1, n):
                per = {v: float(M[i, j]) for v, M in self.per_variable.items()}
                out.append(DisparityRecord((self.model_ids[i], self.model_ids[j]), per, float(self.values[i, j])))
        return out


def pairwise_disparity(bundle: ProfileBundle, spec: MeasureSpec = MeasureSpec(),
                       model_ids: Optional[Sequence[str]] = None) -> DisparityMatrix:
    """Per-variable disparity matrices and their average over all variables.

    Missing (model, variable) profiles count as the constant-zero profile.
    """
    ids = tuple(bundle.model_ids if model_ids is None else model_ids)
    n = len(ids)
    per_variable: dict[str, np.ndarray] = {}
    total = np.zeros((n, n))
    for bv in bundle.variables:
        values = bundle.matrix(bv.name, ids)
        try:
            if bv.is_numeric:
                M = _pairwise_numeric(values, bv.grid, spec)
            else:
                M = _pairwise_categorical(values, spec.normalize_categorical)
        except (ProfileTooShort, BadWindow) as exc:
            raise type(exc)(f"variable {bv.name!r}: {exc}") from None
        M = np.asarray(M, dtype=np.float64)
        np.fill_diagonal(M, 0.0)
        M = np.maximum(M, M.T)  # exact symmetry
        per_variable[bv.name] = M
        total += M
    avg = total / max(len(bundle.variables), 1)
    return DisparityMatrix(ids, avg, per_variable, spec)
