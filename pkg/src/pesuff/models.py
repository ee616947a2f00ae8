"""Baseline forecasters and evaluation metrics.

Three one-step-ahead point forecasters: an ARMA(1,1) fitted by
conditional sum of squares, a GARCH(1,1) fitted by Gaussian
quasi-maximum likelihood on a squared-return series, and a kernel-mean
regressor (squared-exponential kernel ridge, the posterior mean of a GP)
whose hyperparameters and input lag are chosen by validation-set grid
search.  Support-vector regression is deliberately not provided.

The ARMA convention matches the simulators:
``x_t = phi0 + phi1 * x_{t-1} - theta1 * eps_{t-1} + eps_t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import product

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.special import expit

from . import rng
from .errors import (
    DegenerateDataError,
    EstimationFailedError,
    InvalidArgumentError,
    InvalidDataError,
)

__all__ = [
    "ModelKind",
    "GpGrid",
    "ModelSpec",
    "FitResult",
    "MetricsReport",
    "fit",
    "fit_with_validation",
    "forecast",
    "metrics",
]


class ModelKind(Enum):
    ARMA11 = "arma11"
    GARCH11 = "garch11"
    GP_MEAN = "gp_mean"


@dataclass(frozen=True)
class GpGrid:
    """Candidate hyperparameters for the kernel-mean regressor.

    Lengthscales and variances are relative to the standardized training
    data (unit variance); squared distances are additionally divided by
    the lag count so one lengthscale grid serves every ``d``.
    """

    lengthscales: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    signal_vars: tuple[float, ...] = (1.0,)
    noise_vars: tuple[float, ...] = (0.1, 0.5, 1.0)
    lags: tuple[int, ...] = (1, 2, 3, 5, 10)

    def __post_init__(self):
        if not (self.lengthscales and self.signal_vars and self.noise_vars and self.lags):
            raise InvalidArgumentError("every grid dimension needs at least one candidate")
        if any(d < 1 for d in self.lags):
            raise InvalidArgumentError("input lags must be >= 1")


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    gp_grid: GpGrid = field(default_factory=GpGrid)


@dataclass(frozen=True)
class FitResult:
    kind: ModelKind
    params: dict
    in_sample_predictions: np.ndarray
    offset: int  # first index of train with a genuine one-step prediction
    convergence: dict
    state: dict = field(default_factory=dict)  # extra arrays needed to forecast


# --- ARMA(1,1) by conditional sum of squares ---------------------------------

def _arma_residuals(x, phi0, phi1, theta1):
    driver = x[1:] - phi0 - phi1 * x[:-1]
    resid = lfilter([1.0], [1.0, -theta1], driver)
    return resid


def _arma_predictions(x, phi0, phi1, theta1):
    return x[1:] - _arma_residuals(x, phi0, phi1, theta1)


def _fit_arma(train: np.ndarray, seed: int) -> FitResult:
    x = train

    def loss(raw):
        phi0, a, b = raw
        resid = _arma_residuals(x, phi0, np.tanh(a), np.tanh(b))
        return float(resid @ resid)

    rho1 = float(np.corrcoef(x[:-1], x[1:])[0, 1])
    phi_init = np.clip(rho1, -0.9, 0.9)
    inits = [np.array([x.mean() * (1 - phi_init), np.arctanh(phi_init), np.arctanh(0.5 * phi_init)])]
    g = rng.generator(seed, "arma-restarts")
    for _ in range(5):
        inits.append(np.array([x.mean() * g.uniform(-0.5, 0.5), g.uniform(-1.5, 1.5), g.uniform(-1.5, 1.5)]))

    attempts = []
    for x0 in inits:
        res = minimize(loss, x0, method="Nelder-Mead", options={"maxiter": 4000, "xatol": 1e-8, "fatol": 1e-10})
        attempts.append(res)
    best = min(attempts, key=lambda r: r.fun)
    if not np.isfinite(best.fun):
        raise EstimationFailedError("ARMA CSS optimisation produced no finite objective",
                                    {"attempts": [str(a.message) for a in attempts]})
    phi0, a, b = best.x
    params = {"phi0": float(phi0), "phi1": float(np.tanh(a)), "theta1": float(np.tanh(b))}
    mu_hat = params["phi0"] / (1.0 - params["phi1"])
    preds = np.concatenate(([mu_hat], _arma_predictions(x, **params)))
    return FitResult(
        kind=ModelKind.ARMA11,
        params=params,
        in_sample_predictions=preds,
        offset=1,
        convergence={"converged": bool(best.success), "restarts": len(inits),
                     "sum_sq": float(best.fun), "iterations": int(best.nit)},
    )


# --- GARCH(1,1) by Gaussian QMLE ----------------------------------------------

def _garch_sigma2(y, alpha0, alpha1, beta1):
    s0 = float(y.mean())
    driver = alpha0 + alpha1 * y[:-1]
    rest, _ = lfilter([1.0], [1.0, -beta1], driver, zi=np.array([beta1 * s0]))
    return np.concatenate(([s0], rest))


def _fit_garch(train: np.ndarray, seed: int) -> FitResult:
    y = train
    # Gaussian QMLE needs a nonnegative series (squared returns, realized
    # volatility).  For sign-indefinite series the same conditional-mean
    # recursion is fitted by constrained least squares instead.
    qmle = y.min() >= 0
    method = "qmle" if qmle else "css"

    def unpack(raw):
        a, b, c = raw
        alpha0 = np.exp(a)
        persistence = expit(b) * 0.999
        split = expit(c)
        return alpha0, persistence * split, persistence * (1.0 - split)

    def loss(raw):
        alpha0, alpha1, beta1 = unpack(raw)
        sigma2 = _garch_sigma2(y, alpha0, alpha1, beta1)
        if qmle:
            if sigma2.min() <= 0:
                return np.inf
            return float(np.mean(np.log(sigma2) + y / sigma2))
        err = y[1:] - sigma2[1:]
        return float(err @ err)

    var_guess = float(y.mean()) if qmle else float(np.var(y))
    inits = [np.array([np.log(0.1 * var_guess), 2.0, -1.0])]
    g = rng.generator(seed, "garch-restarts")
    for _ in range(5):
        inits.append(np.array([np.log(var_guess * g.uniform(0.02, 0.5)), g.uniform(0.0, 4.0), g.uniform(-3.0, 1.0)]))

    attempts = []
    for x0 in inits:
        res = minimize(loss, x0, method="Nelder-Mead", options={"maxiter": 4000, "xatol": 1e-8, "fatol": 1e-10})
        attempts.append(res)
    best = min(attempts, key=lambda r: r.fun)
    if not np.isfinite(best.fun):
        raise EstimationFailedError("GARCH QMLE optimisation produced no finite objective",
                                    {"attempts": [str(a.message) for a in attempts]})
    alpha0, alpha1, beta1 = unpack(best.x)
    params = {"alpha0": float(alpha0), "alpha1": float(alpha1), "beta1": float(beta1)}
    return FitResult(
        kind=ModelKind.GARCH11,
        params=params,
        in_sample_predictions=_garch_sigma2(y, **params),
        offset=1,
        convergence={"converged": bool(best.success), "restarts": len(inits), "method": method,
                     "objective": float(best.fun), "iterations": int(best.nit)},
    )


def fit(kind: ModelKind, train, seed: int = 0) -> FitResult:
    """Fit a forecaster to a training series."""
    x = np.asarray(train, dtype=np.float64)
    if x.ndim != 1 or x.size < 200:
        raise InvalidArgumentError("training series must be 1-d with at least 200 observations")
    if not np.isfinite(x).all():
        raise InvalidDataError("training series contains non-finite values")
    if np.std(x) == 0.0:
        raise EstimationFailedError("training series is constant; nothing to estimate")
    if kind == ModelKind.ARMA11:
        return _fit_arma(x, seed)
    if kind == ModelKind.GARCH11:
        return _fit_garch(x, seed)
    if kind == ModelKind.GP_MEAN:
        raise InvalidArgumentError("the kernel-mean model selects hyperparameters on a validation set; use fit_with_validation")
    raise InvalidArgumentError(f"unknown model kind: {kind}")


# --- kernel-mean regressor ------------------------------------------------------

def _lag_design(series: np.ndarray, d: int):
    """Rows of d consecutive lags (most recent last) and their targets."""
    n = series.size
    X = np.empty((n - d, d))
    for j in range(d):
        X[:, j] = series[j:n - d + j]
    return X, series[d:]


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)


def _kernel(sqd: np.ndarray, signal_var: float, lengthscale: float, d: int) -> np.ndarray:
    return signal_var * np.exp(-sqd / (2.0 * lengthscale**2 * d))


def fit_with_validation(
    train,
    validation,
    grid: GpGrid | None = None,
    jitter: float = 1e-8,
) -> FitResult:
    """Grid-search the kernel-mean regressor on a validation split.

    Validation predictions roll one step ahead over the true past (train
    and earlier validation observations supply the lag features); the
    grid point with the smallest validation MSE wins.
    """
    if grid is None:
        grid = GpGrid()
    train = np.asarray(train, dtype=np.float64)
    validation = np.asarray(validation, dtype=np.float64)
    if train.size < max(grid.lags) + 20:
        raise InvalidArgumentError("training split too short for the largest candidate lag")
    if validation.size < 10:
        raise InvalidArgumentError("validation split too short")
    mu, sd = float(train.mean()), float(np.std(train))
    if sd == 0.0:
        raise EstimationFailedError("training split is constant; nothing to estimate")
    tr = (train - mu) / sd
    full = np.concatenate([tr, (validation - mu) / sd])

    best = None
    for d in grid.lags:
        X, targets = _lag_design(tr, d)
        sq_tt = _sq_dists(X, X)
        Xv, val_targets = _lag_design(full, d)
        Xv, val_targets = Xv[-validation.size:], val_targets[-validation.size:]
        sq_vt = _sq_dists(Xv, X)
        for ls, sv, nv in product(grid.lengthscales, grid.signal_vars, grid.noise_vars):
            K = _kernel(sq_tt, sv, ls, d)
            K[np.diag_indices_from(K)] += nv + jitter
            try:
                chol = cho_factor(K, lower=True)
            except np.linalg.LinAlgError:
                continue
            alpha = cho_solve(chol, targets)
            preds = _kernel(sq_vt, sv, ls, d) @ alpha
            mse = float(np.mean((preds - val_targets) ** 2)) * sd**2
            cand = (mse, d, ls, sv, nv, alpha, X)
            if best is None or mse < best[0]:
                best = cand
    if best is None:
        raise EstimationFailedError("no grid point produced a solvable kernel system")
    mse, d, ls, sv, nv, alpha, X = best
    in_sample = np.full(train.size, np.nan)
    in_sample[d:] = (_kernel(_sq_dists(X, X), sv, ls, d) @ alpha) * sd + mu
    return FitResult(
        kind=ModelKind.GP_MEAN,
        params={"lag": int(d), "lengthscale": float(ls), "signal_var": float(sv),
                "noise_var": float(nv), "validation_mse": mse},
        in_sample_predictions=in_sample,
        offset=d,
        convergence={"converged": True, "grid_points": len(grid.lengthscales) * len(grid.signal_vars) * len(grid.noise_vars) * len(grid.lags)},
        state={"train_mean": mu, "train_sd": sd, "design": X, "alpha": alpha},
    )


def forecast(fit_result: FitResult, history, n_last: int) -> np.ndarray:
    """One-step-ahead predictions for the last ``n_last`` points of ``history``.

    Predictions use true past observations only (no re-fitting); the
    recursion for ARMA and GARCH warms up over the earlier part of the
    history.
    """
    x = np.asarray(history, dtype=np.float64)
    if n_last < 1:
        raise InvalidArgumentError("n_last must be >= 1")
    kind = fit_result.kind
    if kind == ModelKind.ARMA11:
        if x.size < n_last + 1:
            raise InvalidArgumentError("history too short for the requested span")
        preds = _arma_predictions(x, **fit_result.params)
        return preds[-n_last:]
    if kind == ModelKind.GARCH11:
        if x.size < n_last + 1:
            raise InvalidArgumentError("history too short for the requested span")
        return _garch_sigma2(x, **fit_result.params)[-n_last:]
    if kind == ModelKind.GP_MEAN:
        d = fit_result.params["lag"]
        if x.size < n_last + d:
            raise InvalidArgumentError("history too short for the requested span")
        st = fit_result.state
        std = (x - st["train_mean"]) / st["train_sd"]
        feats, _ = _lag_design(std, d)
        feats = feats[-n_last:]
        sqd = _sq_dists(feats, st["design"])
        preds = _kernel(sqd, fit_result.params["signal_var"], fit_result.params["lengthscale"], d) @ st["alpha"]
        return preds * st["train_sd"] + st["train_mean"]
    raise InvalidArgumentError(f"unknown model kind: {kind}")


# --- metrics ---------------------------------------------------------------------

@dataclass(frozen=True)
class MetricsReport:
    """Out-of-sample accuracy metrics; the oracle-based rate needs a simulator."""

    adj_mse_ratio: float
    bias_ratio: float
    mse_over_sumsq: float
    prediction_error_rate: float | None = None

    @property
    def performance_class(self) -> str | None:
        rate = self.prediction_error_rate
        if rate is None:
            return None
        if rate <= 0.05:
            return "sufficient"
        if rate <= 0.15:
            return "acceptable"
        return "inadequate"


def metrics(actual, predicted, oracle=None) -> MetricsReport:
    """Decompose prediction error into centred-MSE and bias components.

    ``adj_mse_ratio`` is the variance of the prediction errors over the
    variance of the data (1.0 for the constant-mean predictor);
    ``bias_ratio`` is the squared mean error over the same variance;
    ``mse_over_sumsq`` is the raw squared-error sum over the data's sum of
    squares.  With an oracle, ``prediction_error_rate`` is the centred
    mean squared deviation of the prediction from the oracle over the
    oracle's variance.
    """
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if actual.shape != predicted.shape:
        raise InvalidArgumentError("actual and predicted must be aligned")
    var_actual = float(np.var(actual))
    if var_actual == 0.0:
        raise DegenerateDataError("actual series has zero variance")
    err = actual - predicted
    mean_err = float(err.mean())
    adj = float(np.mean((err - mean_err) ** 2)) / var_actual
    bias = mean_err**2 / var_actual
    mse_over_sumsq = float(err @ err) / float(actual @ actual)
    rate = None
    if oracle is not None:
        oracle = np.asarray(oracle, dtype=np.float64)
        if oracle.shape != actual.shape:
            raise InvalidArgumentError("oracle must be aligned with the series")
        var_oracle = float(np.var(oracle))
        if var_oracle == 0.0:
            raise DegenerateDataError("oracle series has zero variance")
        dev = predicted - oracle
        rate = float(np.mean((dev - dev.mean()) ** 2)) / var_oracle
    return MetricsReport(
        adj_mse_ratio=adj,
        bias_ratio=bias,
        mse_over_sumsq=mse_over_sumsq,
        prediction_error_rate=rate,
    )
