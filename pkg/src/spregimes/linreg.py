"""Ordinary least squares with cached normal-equation state.

Every region keeps an intercept and a coefficient vector estimated by OLS
over its member units. The inverse Gram matrix and the cross-product
vector are cached so that single observations can be added or removed in
O(m^2) via rank-one (Sherman-Morrison) updates of the inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalBreakdownError, TooFewObservationsError

__all__ = [
    "Dataset",
    "RegionModel",
    "Scaler",
    "fit_ols",
    "predict",
    "region_ssr",
    "add_unit",
    "remove_unit",
    "ssr_increase_if_added",
    "ssr_decrease_if_removed",
]

# Gram matrices above this condition estimate are treated as rank deficient
# and fit by minimum-norm least squares instead.
RANK_DEFICIENT_CONDITION = 1e12

# Rank-one update denominators below this magnitude trigger a refit fallback.
BREAKDOWN_EPS = 1e-12


@dataclass
class Dataset:
    """Per-unit covariates ``X`` (n x m), responses ``y`` (n,), and extras.

    ``ids`` are external unit identifiers preserved in output; ``coords``
    are optional 2-D coordinates used to build k-nearest-neighbor
    adjacency. Values must be finite. Treat instances as immutable.
    """

    X: np.ndarray
    y: np.ndarray
    ids: list | None = None
    coords: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-D array")
        if self.y.shape != (len(self.X),):
            raise ValueError("y must be 1-D with one entry per row of X")
        if self.n < 1 or self.m < 1:
            raise ValueError("dataset needs at least one unit and one covariate")
        if not (np.isfinite(self.X).all() and np.isfinite(self.y).all()):
            raise ValueError("dataset contains missing or non-finite values")
        if self.ids is not None and len(self.ids) != self.n:
            raise ValueError("ids must have one entry per unit")
        if self.coords is not None:
            self.coords = np.asarray(self.coords, dtype=np.float64)
            if self.coords.shape != (self.n, 2):
                raise ValueError("coords must be an (n, 2) array")
        self._augmented = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @property
    def augmented(self) -> np.ndarray:
        """Covariate matrix with a leading constant-1 column, built lazily."""
        if self._augmented is None:
            self._augmented = np.column_stack([np.ones(self.n), self.X])
        return self._augmented

    def unit_ids(self) -> list[str]:
        if self.ids is not None:
            return [str(u) for u in self.ids]
        return [str(i) for i in range(self.n)]


@dataclass
class Scaler:
    """Per-column z-score parameters for covariates and response."""

    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float

    @classmethod
    def fit(cls, dataset: Dataset) -> "Scaler":
        x_std = dataset.X.std(axis=0, ddof=0)
        y_std = float(dataset.y.std(ddof=0))
        # constant columns cannot be scaled; leave them unchanged
        x_std = np.where(x_std > 0, x_std, 1.0)
        return cls(
            x_mean=dataset.X.mean(axis=0),
            x_std=x_std,
            y_mean=float(dataset.y.mean()),
            y_std=y_std if y_std > 0 else 1.0,
        )

    def transform(self, dataset: Dataset) -> Dataset:
        return Dataset(
            X=(dataset.X - self.x_mean) / self.x_std,
            y=(dataset.y - self.y_mean) / self.y_std,
            ids=dataset.ids,
            coords=dataset.coords,
        )

    def transform_coefficients(self, coefficients: np.ndarray) -> np.ndarray:
        """Map raw-space model rows ``(b0, b1..bm)`` into standardized space."""
        coefficients = np.atleast_2d(np.asarray(coefficients, dtype=float))
        slopes = coefficients[:, 1:] * self.x_std / self.y_std
        intercept = (
            coefficients[:, 0]
            + coefficients[:, 1:] @ self.x_mean
            - self.y_mean
        ) / self.y_std
        return np.column_stack([intercept, slopes])


@dataclass
class RegionModel:
    """Linear model for one region: intercept plus coefficient vector.

    ``beta`` stores the intercept at index 0 followed by the m covariate
    coefficients. ``gram_inv`` and ``xty`` cache the inverse Gram matrix
    and cross products over the member rows (with the constant column
    folded in) so rank-one updates stay cheap; they are None for models
    reloaded from files. ``degenerate`` marks rank-deficient fits.
    """

    beta: np.ndarray
    gram_inv: np.ndarray | None
    xty: np.ndarray | None
    n_obs: int
    degenerate: bool = False

    @property
    def intercept(self) -> float:
        return float(self.beta[0])

    @property
    def coefficients(self) -> np.ndarray:
        return self.beta[1:]

    @property
    def m(self) -> int:
        return len(self.beta) - 1


def _member_index(members) -> np.ndarray:
    if isinstance(members, np.ndarray) and members.dtype.kind in "iu":
        return np.sort(members)
    return np.fromiter(sorted(members), dtype=np.int64)


def fit_ols(dataset: Dataset, members) -> RegionModel:
    """Least-squares fit of intercept and coefficients over a member set.

    Requires at least m+1 members. Rank-deficient member sets (condition
    estimate above 1e12) fall back to the minimum-norm solution and are
    flagged degenerate rather than rejected.
    """
    idx = _member_index(members)
    if len(idx) < dataset.m + 1:
        raise TooFewObservationsError(
            f"{len(idx)} observations < m+1 = {dataset.m + 1}"
        )
    Xa = dataset.augmented[idx]
    y = dataset.y[idx]
    gram = Xa.T @ Xa
    xty = Xa.T @ y
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > RANK_DEFICIENT_CONDITION:
        beta = np.linalg.lstsq(Xa, y, rcond=None)[0]
        return RegionModel(beta, np.linalg.pinv(gram), xty, len(idx), degenerate=True)
    gram_inv = np.linalg.inv(gram)
    return RegionModel(gram_inv @ xty, gram_inv, xty, len(idx))


def predict(model: RegionModel, x) -> float:
    """Predicted response ``intercept + x . coefficients``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.m,):
        raise ValueError(f"covariate vector has length {x.size}, expected {model.m}")
    return float(model.beta[0] + x @ model.beta[1:])


def region_ssr(model: RegionModel, dataset: Dataset, members) -> float:
    """Sum of squared residuals of ``model`` over the member units."""
    idx = _member_index(members)
    resid = dataset.y[idx] - dataset.augmented[idx] @ model.beta
    return float(resid @ resid)


def _require_caches(model: RegionModel):
    if model.gram_inv is None or model.xty is None:
        raise ValueError("model has no cached normal-equation state")


def add_unit(model: RegionModel, x, y: float) -> RegionModel:
    """Model refit as if ``(x, y)`` had been part of the member set.

    O(m^2) rank-one update of the cached inverse. Raises
    NumericalBreakdownError when the update denominator vanishes; the
    caller should then refit from scratch.
    """
    _require_caches(model)
    z = np.concatenate(([1.0], np.asarray(x, dtype=float)))
    gz = model.gram_inv @ z
    denom = 1.0 + z @ gz
    if abs(denom) < BREAKDOWN_EPS:
        raise NumericalBreakdownError("rank-one add denominator ~ 0")
    gram_inv = model.gram_inv - np.outer(gz, gz) / denom
    xty = model.xty + z * y
    return RegionModel(gram_inv @ xty, gram_inv, xty, model.n_obs + 1, model.degenerate)


def remove_unit(model: RegionModel, x, y: float) -> RegionModel:
    """Model refit as if ``(x, y)`` were absent from the member set."""
    _require_caches(model)
    if model.n_obs - 1 < model.m + 1:
        raise TooFewObservationsError("removal would leave fewer than m+1 observations")
    z = np.concatenate(([1.0], np.asarray(x, dtype=float)))
    gz = model.gram_inv @ z
    denom = 1.0 - z @ gz
    if abs(denom) < BREAKDOWN_EPS:
        raise NumericalBreakdownError("rank-one removal denominator ~ 0")
    gram_inv = model.gram_inv + np.outer(gz, gz) / denom
    xty = model.xty - z * y
    return RegionModel(gram_inv @ xty, gram_inv, xty, model.n_obs - 1, model.degenerate)


def ssr_increase_if_added(model: RegionModel, x, y: float) -> float:
    """Exact SSR increase from absorbing ``(x, y)``, without refitting.

    Uses the recursive least-squares identity: the new SSR equals the old
    one plus e^2 / (1 + h), where e is the pre-update residual and h the
    leverage of the new row.
    """
    _require_caches(model)
    z = np.concatenate(([1.0], np.asarray(x, dtype=float)))
    e = y - z @ model.beta
    h = z @ model.gram_inv @ z
    return float(e * e / (1.0 + h))


def ssr_decrease_if_removed(model: RegionModel, x, y: float) -> float:
    """Exact SSR decrease from dropping member ``(x, y)``, without refitting.

    Leave-one-out identity: the SSR shrinks by e^2 / (1 - h). Raises
    NumericalBreakdownError when the row's leverage is ~1.
    """
    _require_caches(model)
    z = np.concatenate(([1.0], np.asarray(x, dtype=float)))
    e = y - z @ model.beta
    denom = 1.0 - z @ model.gram_inv @ z
    if abs(denom) < BREAKDOWN_EPS:
        raise NumericalBreakdownError("leverage ~ 1 in rank-one removal")
    return float(e * e / denom)
