"""Regression losses for emotion-degree prediction: MSE, MAE, and the
concordance-correlation loss, with analytic gradients w.r.t. predictions.

All second-order statistics are population statistics (divide by n). The
concordance helpers keep the same convention so metric and loss agree.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class LossKind(enum.Enum):
    """Which training objective to use for the per-dimension loss."""

    MSE = "mse"
    MAE = "mae"
    CCCL = "ccc"


@dataclass(frozen=True)
class BatchPair:
    """A batch of predicted degrees paired with gold labels (equal lengths)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64).reshape(-1)
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if x.shape != y.shape:
            raise ValueError(f"length mismatch: {x.shape[0]} predictions vs {y.shape[0]} labels")
        if x.shape[0] < 1:
            raise ValueError("empty batch")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("non-finite value in batch")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class MomentSummary:
    """Population moments of a prediction/label pair.

    ``rho_xy`` is None when either variance is zero (correlation undefined).
    """

    mu_x: float
    mu_y: float
    var_x: float
    var_y: float
    cov_xy: float
    rho_xy: float | None


@dataclass(frozen=True)
class MultitaskWeights:
    """Per-dimension weights for the combined valence/arousal/dominance loss."""

    w_v: float
    w_a: float
    w_d: float

    def __post_init__(self) -> None:
        for w in (self.w_v, self.w_a, self.w_d):
            if not np.isfinite(w):
                raise ValueError("non-finite multitask weight")

    @classmethod
    def from_alpha_beta(cls, alpha: float, beta: float) -> "MultitaskWeights":
        """Valence weight alpha, arousal weight beta, dominance 1 - alpha - beta."""
        return cls(w_v=float(alpha), w_a=float(beta), w_d=1.0 - float(alpha) - float(beta))


def mse(b: BatchPair) -> float:
    """Mean squared error over the batch."""
    d = b.x - b.y
    return float(np.mean(d * d))


def mae(b: BatchPair) -> float:
    """Mean absolute error over the batch."""
    return float(np.mean(np.abs(b.x - b.y)))


def _center(v: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean and centered values; a constant series centers to exact zeros."""
    if np.all(v == v[0]):
        return float(v[0]), np.zeros_like(v)
    return float(np.mean(v)), v - np.mean(v)


def moments(b: BatchPair) -> MomentSummary:
    """Population means, variances, covariance and Pearson correlation."""
    mu_x, xc = _center(b.x)
    mu_y, yc = _center(b.y)
    var_x = float(np.mean(xc * xc))
    var_y = float(np.mean(yc * yc))
    cov_xy = float(np.mean(xc * yc))
    if var_x > 0.0 and var_y > 0.0:
        rho: float | None = cov_xy / float(np.sqrt(var_x) * np.sqrt(var_y))
    else:
        rho = None
    return MomentSummary(mu_x=mu_x, mu_y=mu_y, var_x=var_x, var_y=var_y, cov_xy=cov_xy, rho_xy=rho)


def ccc(b: BatchPair) -> float:
    """Concordance correlation coefficient (Lin), population form.

    2*cov / (var_x + var_y + (mu_x - mu_y)^2), in [-1, 1]. Degenerate cases:
    both series constant with equal means gives 1.0 (perfect agreement); a
    single constant series gives 0.0 (the covariance numerator vanishes).
    """
    m = moments(b)
    denom = m.var_x + m.var_y + (m.mu_x - m.mu_y) ** 2
    if denom == 0.0:
        return 1.0
    return 2.0 * m.cov_xy / denom


def ccc_loss(b: BatchPair) -> float:
    """Concordance loss 1 - CCC, in [0, 2]."""
    return 1.0 - ccc(b)


def multitask_total(l_v: float, l_a: float, l_d: float, w: MultitaskWeights) -> float:
    """Weighted combination of the three per-dimension losses."""
    return w.w_v * l_v + w.w_a * l_a + w.w_d * l_d


def loss_value(kind: LossKind, b: BatchPair) -> float:
    """Loss of the chosen kind on one batch."""
    if kind is LossKind.MSE:
        return mse(b)
    if kind is LossKind.MAE:
        return mae(b)
    if kind is LossKind.CCCL:
        return ccc_loss(b)
    raise ValueError(f"unknown loss kind: {kind!r}")


def loss_gradient(kind: LossKind, b: BatchPair) -> np.ndarray:
    """Analytic gradient of the chosen loss w.r.t. each prediction x_i.

    MSE: (2/n)(x_i - y_i). MAE: sign(x_i - y_i)/n with subgradient 0 at the
    kink. CCC loss: quotient rule on the population-moment form; raises when
    the CCC denominator is zero (both series constant with equal means).
    """
    n = b.n
    if kind is LossKind.MSE:
        return (2.0 / n) * (b.x - b.y)
    if kind is LossKind.MAE:
        return np.sign(b.x - b.y) / n
    if kind is LossKind.CCCL:
        mu_x, xc = _center(b.x)
        mu_y, yc = _center(b.y)
        cov = float(np.mean(xc * yc))
        denom = float(np.mean(xc * xc)) + float(np.mean(yc * yc)) + (mu_x - mu_y) ** 2
        if denom == 0.0:
            raise ValueError("CCC gradient undefined: zero denominator (both series constant with equal means)")
        # d cov/dx_i = yc_i/n ; d denom/dx_i = 2*xc_i/n + 2*(mu_x - mu_y)/n
        dcov = yc / n
        ddenom = (2.0 / n) * (xc + (mu_x - mu_y))
        dccc = (2.0 * dcov * denom - 2.0 * cov * ddenom) / (denom * denom)
        return -dccc
    raise ValueError(f"unknown loss kind: {kind!r}")
