"""Simulators for the six benchmark data generating processes.

Each simulated path carries the observations together with the oracle
one-step-ahead conditional mean and the additive innovations, so that
``observations == oracle + innovations`` holds exactly elementwise.

The six kinds pair two conditional-mean shapes with three innovation laws:

===========  ====================  =========================================
kind         conditional mean      innovations
===========  ====================  =========================================
ARMA_IID     linear (ARMA(1,1))    iid Gaussian
ARMA_ASYM    linear (ARMA(1,1))    iid, asymmetric (resampled GARCH innov.)
GARCH_SQ     linear (ARMA(1,1))    dependent, asymmetric (GARCH volatility)
NONLIN_IID   Gaussian-bump kernel  iid Gaussian
NONLIN_ASYM  Gaussian-bump kernel  iid, asymmetric
NONLIN_GARCH Gaussian-bump kernel  dependent, asymmetric
===========  ====================  =========================================

For GARCH_SQ the observed series is the squared return ``y_t = sigma_t^2
z_t^2``; its conditional mean is ``sigma_t^2``, which follows the same
linear recursion in past observations as the two ARMA kinds, so the three
linear kinds share one deterministic function and differ only in their
innovation law.

The ARMA recursion uses the convention ``x_t = phi0 + phi1 * x_{t-1}
- theta1 * eps_{t-1} + eps_t`` (moving-average term entering negatively),
which is what makes the squared-return GARCH recursion an ARMA(1,1) with
``phi1 = alpha1 + beta1`` and ``theta1 = beta1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from . import rng
from .errors import DegenerateDataError, InvalidArgumentError

__all__ = ["DgpKind", "DgpSpec", "SimulatedPath", "simulate", "signal_to_noise", "DEFAULT_PARAMS"]


class DgpKind(Enum):
    ARMA_IID = "x1"
    ARMA_ASYM = "x2"
    GARCH_SQ = "x3"
    NONLIN_IID = "x4"
    NONLIN_ASYM = "x5"
    NONLIN_GARCH = "x6"


# Bump parameters are calibrated (scripts/calibrate_bump.py) so the
# nonlinear kinds match the linear kinds' signal-to-noise ratio (~0.494).
_BUMP = {"const": 0.15, "height": 2.0, "center": 1.8, "width": 2.0, "slope": 0.3}

DEFAULT_PARAMS: dict[DgpKind, dict] = {
    DgpKind.ARMA_IID: {"phi0": 0.18, "phi1": 0.9, "theta1": 0.74, "innovation_var": 9.0},
    DgpKind.ARMA_ASYM: {"phi0": 0.18, "phi1": 0.9, "theta1": 0.74, "pool_length": 100_000},
    DgpKind.GARCH_SQ: {"alpha0": 0.18, "alpha1": 0.16, "beta1": 0.74},
    DgpKind.NONLIN_IID: dict(_BUMP, innovation_var=9.0),
    DgpKind.NONLIN_ASYM: dict(_BUMP, pool_length=100_000),
    DgpKind.NONLIN_GARCH: dict(_BUMP, alpha0=0.18, alpha1=0.16, beta1=0.74),
}


@dataclass(frozen=True)
class DgpSpec:
    """Declarative description of one simulated path."""

    kind: DgpKind
    length: int = 6360
    seed: int = 0
    burn_in: int = 1000
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.length < 1:
            raise InvalidArgumentError("length must be positive")
        if self.burn_in < 500:
            raise InvalidArgumentError("burn_in must be at least 500")
        merged = dict(DEFAULT_PARAMS[self.kind], **self.params)
        object.__setattr__(self, "params", merged)
        if "phi1" in merged and abs(merged["phi1"]) >= 1:
            raise InvalidArgumentError("ARMA requires |phi1| < 1")
        if "alpha1" in merged:
            a1, b1 = merged["alpha1"], merged["beta1"]
            if a1 < 0 or b1 < 0 or merged["alpha0"] <= 0:
                raise InvalidArgumentError("GARCH parameters must be positive")
            if a1 + b1 >= 1:
                raise InvalidArgumentError("GARCH requires alpha1 + beta1 < 1")


@dataclass(frozen=True)
class SimulatedPath:
    """Observations with their oracle predictor and additive innovations."""

    spec: DgpSpec
    observations: np.ndarray
    oracle: np.ndarray
    innovations: np.ndarray


def _arma_from_innovations(eps: np.ndarray, phi0: float, phi1: float, theta1: float) -> np.ndarray:
    # x_t - mu = phi1 (x_{t-1} - mu) + eps_t - theta1 eps_{t-1}, mu = phi0 / (1 - phi1)
    mu = phi0 / (1.0 - phi1)
    return mu + lfilter([1.0, -theta1], [1.0, -phi1], eps)


def _garch_squared(n: int, alpha0: float, alpha1: float, beta1: float, z: np.ndarray):
    sigma2 = np.empty(n)
    y = np.empty(n)
    s = alpha0 / (1.0 - alpha1 - beta1)  # start at the unconditional mean
    z2 = z * z
    for t in range(n):
        sigma2[t] = s
        y[t] = s * z2[t]
        s = alpha0 + alpha1 * y[t] + beta1 * s
    return y, sigma2


def _bump(u, p):
    w2 = 2.0 * p["width"] ** 2
    return p["const"] + p["height"] * np.exp(-((u - p["center"]) ** 2) / w2) + p["slope"] * u


def _nonlinear_from_innovations(eps: np.ndarray, p: dict) -> tuple[np.ndarray, np.ndarray]:
    n = eps.size
    x = np.empty(n)
    oracle = np.empty(n)
    prev = p["center"]
    for t in range(n):
        g = _bump(prev, p)
        oracle[t] = g
        x[t] = g + eps[t]
        prev = x[t]
    return x, oracle


def _asym_innovations(n: int, seed: int, pool_length: int) -> np.ndarray:
    """Iid draws from the empirical distribution of GARCH innovations, recentred."""
    pool_path = simulate(DgpSpec(DgpKind.GARCH_SQ, length=pool_length, seed=rng.child_seed(seed, "pool")))
    pool = pool_path.innovations - pool_path.innovations.mean()
    g = rng.generator(seed, "resample")
    return pool[g.integers(0, pool.size, size=n)]


def simulate(spec: DgpSpec) -> SimulatedPath:
    """Simulate one path; deterministic given ``spec.seed``."""
    n_total = spec.length + spec.burn_in
    p = spec.params
    kind = spec.kind

    if kind in (DgpKind.ARMA_IID, DgpKind.NONLIN_IID):
        g = rng.generator(spec.seed, "innovations")
        eps = g.normal(0.0, np.sqrt(p["innovation_var"]), size=n_total)
    elif kind in (DgpKind.ARMA_ASYM, DgpKind.NONLIN_ASYM):
        eps = _asym_innovations(n_total, spec.seed, p["pool_length"])
    elif kind == DgpKind.GARCH_SQ:
        g = rng.generator(spec.seed, "innovations")
        z = g.normal(size=n_total)
        y, sigma2 = _garch_squared(n_total, p["alpha0"], p["alpha1"], p["beta1"], z)
        eps = y - sigma2
        sl = slice(spec.burn_in, None)
        # store observations as oracle + innovations so the decomposition
        # identity holds bitwise
        return SimulatedPath(spec, (sigma2 + eps)[sl], sigma2[sl], eps[sl])
    elif kind == DgpKind.NONLIN_GARCH:
        inner = simulate(
            DgpSpec(
                DgpKind.GARCH_SQ,
                length=n_total,
                seed=rng.child_seed(spec.seed, "garch-innovations"),
                burn_in=spec.burn_in,
                params={k: p[k] for k in ("alpha0", "alpha1", "beta1")},
            )
        )
        eps = inner.innovations
    else:  # pragma: no cover
        raise InvalidArgumentError(f"unknown DGP kind: {kind}")

    if kind in (DgpKind.ARMA_IID, DgpKind.ARMA_ASYM):
        x = _arma_from_innovations(eps, p["phi0"], p["phi1"], p["theta1"])
        oracle = x - eps
        x = oracle + eps  # re-associate so the decomposition identity is bitwise
    else:
        x, oracle = _nonlinear_from_innovations(eps, p)

    sl = slice(x.size - spec.length, None)
    return SimulatedPath(spec, x[sl], oracle[sl], eps[sl])


def signal_to_noise(path: SimulatedPath) -> float:
    """``sum(oracle^2) / sum(innovations^2)`` of a simulated path."""
    denom = float(np.sum(path.innovations**2))
    if denom == 0.0:
        raise DegenerateDataError("innovations carry no energy; signal-to-noise undefined")
    return float(np.sum(path.oracle**2)) / denom
