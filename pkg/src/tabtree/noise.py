"""Train-data noise injection for numeric and ordinal columns."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ParamError

UNIT_INTERVAL = (0.0, 1.0)


@dataclass(frozen=True)
class NoiseParams:
    mu: float = 0.0
    sigma: float = 0.03
    flip_prob: float = 0.03
    distribution: str = "gaussian"

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ParamError(f"sigma must be nonnegative, got {self.sigma}")
        if not 0 <= self.flip_prob <= 1:
            raise ParamError(f"flip_prob must be in [0, 1], got {self.flip_prob}")
        if self.distribution not in ("gaussian", "laplace"):
            raise ParamError(f"noise distribution must be gaussian or laplace, got {self.distribution!r}")

    @classmethod
    def from_params(cls, params: dict) -> "NoiseParams":
        return cls(
            mu=float(params.get("mu", 0.0)),
            sigma=float(params.get("sigma", 0.03)),
            flip_prob=float(params.get("flip_prob", 0.03)),
            distribution=params.get("noisedistribution", "gaussian"),
        )


def _draw(rng: np.random.Generator, params: NoiseParams, n: int) -> np.ndarray:
    if params.distribution == "laplace":
        # scale chosen so the standard deviation equals sigma
        return rng.laplace(params.mu, params.sigma / math.sqrt(2.0), n)
    return rng.normal(params.mu, params.sigma, n)


def inject_numeric(values, range_info, params: NoiseParams, rng: np.random.Generator | None,
                   traindata: bool, valid: np.ndarray | None = None) -> np.ndarray:
    """Bernoulli-gated additive noise.

    ``range_info`` is ``None`` for unbounded data, ``"unit_interval"``, or a
    ``(lower, upper)`` pair.  For a bounded range of width R the draw is clipped
    to +/- R/2, then positive noise is scaled by ``(upper - x) / (R/2)`` and
    negative noise by ``(x - lower) / (R/2)``, which keeps the result inside
    the range.  Entries that are NaN, flagged invalid, or already outside the
    range are left untouched.
    """
    x = np.array(values, dtype=np.float64, copy=True)
    if not traindata:
        return x
    if range_info == "unit_interval":
        range_info = UNIT_INTERVAL
    elif isinstance(range_info, str):
        raise ContractError(f"ranged noise needs a fitted (lower, upper) range, got {range_info!r}")
    if rng is None:
        raise ContractError("noise injection with traindata=True needs a random generator")
    n = len(x)
    gate = rng.random(n) < params.flip_prob
    noise = _draw(rng, params, n)
    target = gate & np.isfinite(x)
    if valid is not None:
        target &= np.asarray(valid, dtype=bool)
    if range_info is None:
        x[target] = x[target] + noise[target]
        return x

    lower, upper = float(range_info[0]), float(range_info[1])
    if not upper > lower:
        return x
    half = (upper - lower) / 2.0
    target &= (x >= lower) & (x <= upper)
    clipped = np.clip(noise, -half, half)
    headroom = np.where(clipped >= 0, upper - x, x - lower)
    shifted = x + clipped * (headroom / half)
    # guard against last-ulp rounding past the bounds
    shifted = np.clip(shifted, lower, upper)
    x[target] = shifted[target]
    return x


def inject_categoric_flip(codes, k: int, params: NoiseParams, rng: np.random.Generator | None,
                          traindata: bool, valid: np.ndarray | None = None) -> np.ndarray:
    """Replace a ``flip_prob`` share of ordinal codes with a uniform draw over all ``k`` codes."""
    x = np.array(codes, dtype=np.float64, copy=True)
    if k < 1:
        raise ContractError(f"categoric flip needs at least one level, got k={k}")
    if not traindata:
        return x
    if rng is None:
        raise ContractError("noise injection with traindata=True needs a random generator")
    n = len(x)
    gate = rng.random(n) < params.flip_prob
    draws = rng.integers(0, k, n)
    target = gate & np.isfinite(x) & (x >= 0) & (x < k)
    if valid is not None:
        target &= np.asarray(valid, dtype=bool)
    x[target] = draws[target]
    return x
