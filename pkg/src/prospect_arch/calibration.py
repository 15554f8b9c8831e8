"""Nonparametric calibration of ``f`` and ``g`` from a yield series.

For each evaluation point ``x`` two kernel-weighted quadratic fits are solved in
the local coordinate ``u = (Y[i-1] - x) / h`` with basis ``[1, u, u**2 / 2]``:
one for ``Y[i]`` (intercept ``beta1``) and one for ``Y[i]**2`` (intercept
``alpha1``). Then ``f_hat(x) = beta1`` and ``g2_hat(x) = alpha1 - beta1**2``.
The kernel is the standard normal density and ``h = range(Y) / gamma``.

Both fits share a design matrix, so each point costs one QR factorisation of the
``sqrt(weight)``-scaled design.

:class:`LocalQuadraticARCH` and :class:`PolynomialSurrogate` wrap the same
functions as scikit-learn estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr, solve_triangular
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._errors import DegenerateDataError, DomainError, SingularFitError
from ._poly import PolyCoeffs
from .series import PriceSeries, YieldSeries

__all__ = [
    "PolyCoeffs",
    "RegressionEstimate",
    "LocalFit",
    "log_returns",
    "bandwidth",
    "lagged_pairs",
    "local_fit",
    "local_fit_pairs",
    "default_grid",
    "estimate_curves",
    "fit_poly",
    "published_surrogates_equity",
    "published_surrogates_fx",
    "paper_surrogates_equity",
    "paper_surrogates_fx",
    "LocalQuadraticARCH",
    "PolynomialSurrogate",
    "G2_FLOOR",
    "MIN_WEIGHT_FRACTION",
]

G2_FLOOR = 1e-10
MIN_WEIGHT_FRACTION = 1e-6
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
# relative size of R's diagonal below which the design counts as rank deficient
_RANK_TOL = 1e-12


def log_returns(prices) -> YieldSeries:
    """``Y_i = log P_i - log P_{i-1}``."""
    p = np.asarray(prices, dtype=float)
    if p.ndim != 1 or len(p) < 2:
        raise DomainError("need at least two prices")
    PriceSeries(p)  # validates positivity
    return YieldSeries(np.diff(np.log(p)))


def bandwidth(yields, gamma: float) -> float:
    """``h = (max(Y) - min(Y)) / gamma``."""
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma!r}")
    y = np.asarray(yields, dtype=float)
    if y.size == 0:
        raise DegenerateDataError("empty yield series")
    span = float(y.max() - y.min())
    if not span > 0:
        raise DegenerateDataError("yield series is constant; bandwidth undefined")
    return span / gamma


def lagged_pairs(yields):
    """Predictor ``Y[i-1]`` and response ``Y[i]`` arrays."""
    y = np.asarray(yields, dtype=float)
    return y[:-1], y[1:]


@dataclass(frozen=True)
class LocalFit:
    alpha: np.ndarray  # (alpha1, alpha2, alpha3) for Y**2
    beta: np.ndarray  # (beta1, beta2, beta3) for Y
    weight: float  # total kernel weight

    @property
    def alpha1(self) -> float:
        return float(self.alpha[0])

    @property
    def beta1(self) -> float:
        return float(self.beta[0])

    def __iter__(self):
        # unpacks as (alpha1, beta1)
        return iter((self.alpha1, self.beta1))


def _weighted_quadratic(pred, resp, x, h, min_weight):
    u = (pred - x) / h
    w = _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    total = float(w.sum())
    if not total >= min_weight:
        raise SingularFitError(f"total kernel weight {total:.3g} at x={x:.6g} below {min_weight:.3g}")
    sw = np.sqrt(w)
    design = np.column_stack((sw, sw * u, sw * (0.5 * u * u)))
    rhs = np.column_stack((sw * resp * resp, sw * resp))
    q, r = qr(design, mode="economic", check_finite=False)
    diag = np.abs(np.diag(r))
    if diag.size < 3 or diag.min() <= _RANK_TOL * max(diag.max(), np.finfo(float).tiny):
        raise SingularFitError(f"rank-deficient local design at x={x:.6g}")
    coef = solve_triangular(r, q.T @ rhs, check_finite=False)
    return LocalFit(alpha=coef[:, 0], beta=coef[:, 1], weight=total)


def local_fit_pairs(pred, resp, x: float, h: float, min_weight: float = 0.0) -> LocalFit:
    """Local quadratic fits of ``resp`` and ``resp**2`` on ``pred`` around ``x``."""
    if not h > 0:
        raise DomainError(f"bandwidth must be positive, got {h!r}")
    pred = np.asarray(pred, dtype=float)
    resp = np.asarray(resp, dtype=float)
    if pred.shape != resp.shape or pred.ndim != 1:
        raise ValueError("pred and resp must be 1-d arrays of equal length")
    if len(pred) < 3:
        raise SingularFitError("need at least three (predictor, response) pairs")
    return _weighted_quadratic(pred, resp, float(x), float(h), min_weight)


def local_fit(yields, x: float, h: float) -> LocalFit:
    """Local fit at ``x`` on the lagged pairs of a yield series.

    Returns a :class:`LocalFit`, which unpacks as ``(alpha1, beta1)``.
    """
    pred, resp = lagged_pairs(yields)
    return local_fit_pairs(pred, resp, x, h)


def default_grid(yields, points: int = 101, trim: float = 0.01) -> np.ndarray:
    """Equispaced grid over the data range, trimmed by ``trim`` of the span per side."""
    y = np.asarray(yields, dtype=float)
    lo, hi = float(y.min()), float(y.max())
    pad = trim * (hi - lo)
    return np.linspace(lo + pad, hi - pad, points)


@dataclass(frozen=True, eq=False)
class RegressionEstimate:
    grid: np.ndarray
    f_hat: np.ndarray
    g2_hat: np.ndarray
    clamped: np.ndarray
    valid: np.ndarray
    h: float
    gamma: float
    sample_size: int
    g2_floor: float = G2_FLOOR

    def __len__(self):
        return len(self.grid)

    def to_table(self):
        from .data import Table

        rows = [
            (float(y), float(f), float(g2), bool(c), bool(v))
            for y, f, g2, c, v in zip(self.grid, self.f_hat, self.g2_hat, self.clamped, self.valid)
        ]
        return Table(("y", "f_hat", "g2_hat", "clamped", "valid"), rows)


def _check_grid(grid, lo, hi):
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise DomainError("evaluation grid is empty")
    if np.any(~np.isfinite(grid) | (grid < lo) | (grid > hi)):
        raise DomainError(f"grid must lie inside the data range [{lo:.6g}, {hi:.6g}]")
    return grid


def _estimate_pairs(pred, resp, grid, h, gamma, g2_floor, min_weight_fraction, sample_size):
    f_hat = np.full(grid.shape, np.nan)
    g2_hat = np.full(grid.shape, np.nan)
    clamped = np.zeros(grid.shape, dtype=bool)
    valid = np.zeros(grid.shape, dtype=bool)
    min_weight = min_weight_fraction * sample_size
    for k, x in enumerate(grid):
        try:
            fit = _weighted_quadratic(pred, resp, x, h, min_weight)
        except SingularFitError:
            continue
        valid[k] = True
        f_hat[k] = fit.beta1
        raw = fit.alpha1 - fit.beta1**2
        if raw < g2_floor:
            clamped[k] = True
            raw = g2_floor
        g2_hat[k] = raw
    return RegressionEstimate(
        grid=grid,
        f_hat=f_hat,
        g2_hat=g2_hat,
        clamped=clamped,
        valid=valid,
        h=h,
        gamma=gamma,
        sample_size=sample_size,
        g2_floor=g2_floor,
    )


def estimate_curves(
    yields,
    grid=None,
    gamma: float = 3.5,
    g2_floor: float = G2_FLOOR,
    min_weight_fraction: float = MIN_WEIGHT_FRACTION,
) -> RegressionEstimate:
    """Estimate ``f_hat`` and ``g2_hat`` on ``grid`` (default: :func:`default_grid`).

    Points where the local fit is singular or starved of kernel weight are
    marked invalid (NaN values) instead of aborting the whole estimate.
    """
    y = np.asarray(yields, dtype=float)
    if len(y) < 4:
        raise DegenerateDataError("need at least four yields")
    h = bandwidth(y, gamma)
    if grid is None:
        grid = default_grid(y)
    grid = _check_grid(grid, y.min(), y.max())
    pred, resp = lagged_pairs(y)
    return _estimate_pairs(pred, resp, grid, h, gamma, g2_floor, min_weight_fraction, len(y))


def fit_poly(xs, ys, degree: int) -> PolyCoeffs:
    """Least-squares polynomial of ``degree`` via column-scaled QR."""
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    if degree < 0:
        raise DomainError("degree must be non-negative")
    if x.shape != y.shape:
        raise ValueError("xs and ys differ in length")
    if len(np.unique(x)) < degree + 1:
        raise SingularFitError(f"degree {degree} needs at least {degree + 1} distinct points")
    vander = np.vander(x, degree + 1, increasing=True)
    scale = np.linalg.norm(vander, axis=0)
    scale[scale == 0] = 1.0
    q, r = qr(vander / scale, mode="economic", check_finite=False)
    diag = np.abs(np.diag(r))
    if diag.min() <= _RANK_TOL * diag.max():
        raise SingularFitError("polynomial design is numerically rank deficient")
    coef = solve_triangular(r, q.T @ y, check_finite=False) / scale
    return PolyCoeffs(tuple(coef))


def published_surrogates_equity() -> tuple[PolyCoeffs, PolyCoeffs]:
    """Published quartic drift and volatility surrogates for the equity index."""
    f = PolyCoeffs((-8.948e-5, -7.557e-2, 0.8305, -13.60, 52.84))
    g = PolyCoeffs((1.288e-2, -0.1138, 5.503, 6.492, -3.306e2))
    return f, g


def published_surrogates_fx() -> tuple[PolyCoeffs, PolyCoeffs]:
    """Published linear drift and quintic volatility surrogates for USD/GBP."""
    f = PolyCoeffs((0.0, 0.33))
    g = PolyCoeffs((4.328e-3, 6.422e-2, 15.73, -2.934e2, -6.987e3, 1.542e5))
    return f, g


# names used by the original operation list
paper_surrogates_equity = published_surrogates_equity
paper_surrogates_fx = published_surrogates_fx


# -- scikit-learn style estimators --------------------------------------------


def _as_pairs(X, y):
    if y is None:
        series = np.asarray(X, dtype=float).ravel()
        if not np.all(np.isfinite(series)):
            raise ValueError("yield series contains non-finite values")
        pred, resp = lagged_pairs(series)
        return pred, resp, series
    X = check_array(X, ensure_2d=False)
    pred = np.asarray(X, dtype=float).reshape(len(X), -1)
    if pred.shape[1] != 1:
        raise ValueError("expected a single predictor column")
    pred = pred[:, 0]
    resp = check_array(np.asarray(y, dtype=float), ensure_2d=False)
    if resp.shape != pred.shape:
        raise ValueError("X and y differ in length")
    return pred, resp, np.concatenate(([pred[0]], resp))


class LocalQuadraticARCH(RegressorMixin, BaseEstimator):
    """Kernel-weighted local quadratic estimator of ARCH drift and variance.

    Parameters
    ----------
    gamma : float, default=3.5
        Bandwidth divisor, ``h = range(Y) / gamma``.
    g2_floor : float, default=1e-10
        Lower clamp for the variance estimate.
    min_weight_fraction : float, default=1e-6
        Minimum total kernel weight as a fraction of the sample size.

    Notes
    -----
    ``fit(Y)`` takes a 1-d yield series and builds the lagged pairs itself.
    ``fit(X, y)`` takes the predictor column ``Y[i-1]`` and response ``Y[i]``
    explicitly. ``predict`` returns the drift ``f_hat``; ``predict_variance``
    returns ``g2_hat``.

    Examples
    --------
    >>> import numpy as np
    >>> y = np.random.default_rng(0).normal(0, 0.01, 500)
    >>> est = LocalQuadraticARCH(gamma=3.5).fit(y)
    >>> est.predict([[0.0]]).shape
    (1,)
    """

    def __init__(self, gamma=3.5, g2_floor=G2_FLOOR, min_weight_fraction=MIN_WEIGHT_FRACTION):
        self.gamma = gamma
        self.g2_floor = g2_floor
        self.min_weight_fraction = min_weight_fraction

    def fit(self, X, y=None):
        pred, resp, series = _as_pairs(X, y)
        if len(pred) < 3:
            raise DegenerateDataError("need at least three lagged pairs")
        self.bandwidth_ = bandwidth(series, self.gamma)
        self.pred_ = pred
        self.resp_ = resp
        self.sample_size_ = len(series)
        self.data_range_ = (float(series.min()), float(series.max()))
        self.n_features_in_ = 1
        return self

    def _points(self, X):
        x = np.asarray(X, dtype=float)
        return x.reshape(len(x), -1)[:, 0] if x.ndim == 2 else np.atleast_1d(x)

    def estimate(self, grid=None) -> RegressionEstimate:
        check_is_fitted(self, "bandwidth_")
        lo, hi = self.data_range_
        if grid is None:
            grid = np.linspace(lo + 0.01 * (hi - lo), hi - 0.01 * (hi - lo), 101)
        grid = _check_grid(self._points(grid), lo, hi)
        return _estimate_pairs(
            self.pred_,
            self.resp_,
            grid,
            self.bandwidth_,
            self.gamma,
            self.g2_floor,
            self.min_weight_fraction,
            self.sample_size_,
        )

    def predict(self, X):
        return self.estimate(X).f_hat

    def predict_variance(self, X):
        return self.estimate(X).g2_hat


class PolynomialSurrogate(RegressorMixin, BaseEstimator):
    """Global least-squares polynomial, exposed as ``coef_`` (:class:`PolyCoeffs`)."""

    def __init__(self, degree=4):
        self.degree = degree

    def fit(self, X, y):
        X = check_array(X, ensure_2d=False)
        x = np.asarray(X, dtype=float).reshape(len(X), -1)
        if x.shape[1] != 1:
            raise ValueError("expected a single feature column")
        self.coef_ = fit_poly(x[:, 0], y, self.degree)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        x = np.asarray(X, dtype=float)
        x = x.reshape(len(x), -1)[:, 0] if x.ndim == 2 else x
        return np.asarray(self.coef_(x))
