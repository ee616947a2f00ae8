"""The sufficiency decision: Accept / Reject / Inconclusive.

Given a series and aligned point predictions, the residual self-dependence
statistic ``K(resid, resid)`` and the cross statistic ``K(x, resid)`` are
compared against the Monte Carlo independence critical value; a
significant cross statistic triggers the block-bootstrap test of the
cross-minus-self difference.  Comparisons against critical values treat
ties as exceedance.

Both K statistics and every bootstrap replicate share one surrogate index
matrix (common random numbers), so the difference statistic is not
dominated by surrogate noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import rng
from .dependence import KResult, k_statistic
from .errors import InvalidArgumentError
from .inference import BootstrapConfig, DifferenceBootstrap, IndependenceCalibration, block_bootstrap_difference
from .ordinal import SegmentConfig

__all__ = ["Decision", "SufficiencyVerdict", "decide", "run_sufficiency_test"]


class Decision(Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    INCONCLUSIVE = "inconclusive"


def decide(k_self: float, k_cross: float, c_independence: float, c_difference: float) -> Decision:
    """Pure three-way decision rule.

    Accept when both statistics fall below the independence critical
    value; reject when the cross statistic reaches it and the
    cross-minus-self difference reaches the bootstrap critical value;
    inconclusive otherwise.
    """
    values = (k_self, k_cross, c_independence, c_difference)
    if not all(math.isfinite(v) for v in values):
        raise InvalidArgumentError(f"decide() requires finite inputs, got {values}")
    if c_independence <= 0:
        raise InvalidArgumentError("independence critical value must be positive")
    if k_self < c_independence and k_cross < c_independence:
        return Decision.ACCEPT
    if k_cross >= c_independence and (k_cross - k_self) >= c_difference:
        return Decision.REJECT
    return Decision.INCONCLUSIVE


@dataclass(frozen=True)
class SufficiencyVerdict:
    """Decision plus every statistic and critical value that produced it."""

    decision: Decision
    k_self: float
    k_cross: float
    c_independence: float
    c_difference: float | None
    cfg: SegmentConfig
    provenance: dict
    self_result: KResult | None = None
    cross_result: KResult | None = None

    def to_payload(self) -> dict:
        return {
            "decision": self.decision.value,
            "k_self": self.k_self,
            "k_cross": self.k_cross,
            "c_independence": self.c_independence,
            "c_difference": self.c_difference,
            "d": self.cfg.d,
            "tau": self.cfg.tau,
            "provenance": self.provenance,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_payload(), indent=indent, sort_keys=True)


def run_sufficiency_test(
    x,
    predictions,
    cfg: SegmentConfig,
    calib: IndependenceCalibration,
    bcfg: BootstrapConfig,
    replications: int = 500,
    seed: int = 0,
) -> SufficiencyVerdict:
    """Run the full test on a series and its aligned point predictions.

    ``predictions[t]`` must target ``x[t]`` (residuals are
    ``x - predictions``).  The bootstrap difference step runs only when
    the cross statistic reaches the independence critical value; otherwise
    ``c_difference`` is reported as absent.
    """
    x = np.asarray(x, dtype=np.float64)
    predictions = np.asarray(predictions, dtype=np.float64)
    if x.shape != predictions.shape:
        raise InvalidArgumentError(
            f"predictions are misaligned: {predictions.shape} vs series {x.shape}"
        )
    if calib.cfg.d != cfg.d or calib.cfg.tau != cfg.tau:
        raise InvalidArgumentError(
            f"calibration is for d={calib.cfg.d}, tau={calib.cfg.tau}, test uses d={cfg.d}, tau={cfg.tau}"
        )
    if calib.series_length != x.size:
        raise InvalidArgumentError(
            f"calibration is for series length {calib.series_length}, got {x.size}; recalibrate"
        )
    if calib.replications != replications:
        raise InvalidArgumentError(
            f"calibration used {calib.replications} surrogate replications, test uses {replications}"
        )
    residuals = x - predictions
    ensemble_seed = rng.child_seed(seed, "ensemble")
    self_res = k_statistic(residuals, residuals, cfg, replications, seed=ensemble_seed)
    cross_res = k_statistic(x, residuals, cfg, replications, seed=ensemble_seed)
    c_ind = calib.critical_value

    boot: DifferenceBootstrap | None = None
    if cross_res.k_value >= c_ind:
        boot = block_bootstrap_difference(
            x,
            residuals,
            cfg,
            bcfg,
            replications,
            seed=rng.child_seed(seed, "bootstrap"),
            ensemble_seed=ensemble_seed,
        )
        decision = decide(self_res.k_value, cross_res.k_value, c_ind, boot.critical_value)
    elif self_res.k_value < c_ind:
        decision = Decision.ACCEPT
    else:
        decision = Decision.INCONCLUSIVE

    provenance = {
        "seed": seed,
        "ensemble_seed": ensemble_seed,
        "replications": replications,
        "calibration_id": calib.fixture_id,
        "bootstrap": None
        if boot is None
        else {
            "block_length": boot.block_length,
            "replications": boot.replications,
            "quantile": boot.quantile,
            "block_seed": boot.block_seed,
            "centered": boot.centered,
        },
    }
    return SufficiencyVerdict(
        decision=decision,
        k_self=self_res.k_value,
        k_cross=cross_res.k_value,
        c_independence=c_ind,
        c_difference=None if boot is None else boot.critical_value,
        cfg=cfg,
        provenance=provenance,
        self_result=self_res,
        cross_result=cross_res,
    )
