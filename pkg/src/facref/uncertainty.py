"""Global-position uncertainty of point clouds and model walls.

Both error sources are reduced to a combined standard deviation and an upper
confidence-interval half-width that is attached to every facade as its maximal
deviation range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.stats import norm

from .exceptions import ConfigError


@dataclass(frozen=True)
class UncertaintySpec:
    """Registration error of the point cloud (e1) and of model walls (e2)."""

    e1: float = 0.3
    e2: float = 0.03
    cl1: float = 0.9
    cl2: float = 0.9
    z1: float = 1.64
    z2: float = 1.64

    def __post_init__(self):
        if not (self.e1 > 0 and self.e2 > 0):
            raise ConfigError("uncertainty errors e1, e2 must be positive")
        for cl, z, name in ((self.cl1, self.z1, "1"), (self.cl2, self.z2, "2")):
            if not 0.0 < cl < 1.0:
                raise ConfigError(f"uncertainty.cl{name} must be in (0, 1)")
            expected = norm.ppf(0.5 + cl / 2.0)
            if abs(z - expected) > 0.01:
                raise ConfigError(
                    f"uncertainty.z{name}={z} inconsistent with cl{name}={cl}"
                    f" (two-sided z value {expected:.4f})"
                )


@dataclass(frozen=True)
class FacadeConfidence:
    sigma: float
    upper_ci: float
    cl: float

    def __post_init__(self):
        if not (self.upper_ci >= self.sigma > 0):
            raise ValueError("requires upper_ci >= sigma > 0")


def sigma_from_error(e: float, z: float) -> float:
    """Standard deviation from a global error bound: half the error, divided by z."""
    return (e / 2.0) / z


def combine(spec: UncertaintySpec) -> FacadeConfidence:
    """Combined facade confidence: sigma = sqrt(s1^2 + s2^2), upper CI = 2 sigma.

    The 2-sigma half-width is rounded up to the next centimeter; the combined
    confidence level is the more pessimistic of the two inputs.
    """
    s1 = sigma_from_error(spec.e1, spec.z1)
    s2 = sigma_from_error(spec.e2, spec.z2)
    sigma = math.hypot(s1, s2)
    upper_ci = math.ceil(2.0 * sigma * 100.0 - 1e-12) / 100.0
    return FacadeConfidence(sigma=sigma, upper_ci=upper_ci, cl=min(spec.cl1, spec.cl2))
