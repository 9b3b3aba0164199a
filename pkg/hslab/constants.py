# Copyright 2025 R5 Labs
# This file is part of the hslab toolkit.
#
# This software is provided "as is", without warranty of any kind,
# express or implied, including but not limited to the warranties
# of merchantability, fitness for a particular purpose and
# noninfringement. In no event shall the authors or copyright
# holders be liable for any claim, damages, or other liability,
# whether in an action of contract, tort or otherwise, arising
# from, out of or in connection with the software or the use or
# other dealings in the software.
"""
Sharp constants and energy thresholds.

Everything downstream is derived from a ProblemParams (dimension n and the
Hardy coefficient lambda = h(p)):

  K(n,2)       best Sobolev constant, K^2 = 4 / (n(n-2) w_n^(2/n))
  K(n,2,-2)    best Hardy constant, 2/(n-2)
  a            singular exponent sqrt(1 - lambda K(n,2,-2)^2)
  q_sharp      (1 - lambda K_h^2)^((n-1)/n) / K^2
  d*           1 / (n K^n), energy of a standard bubble
  D*           (1 - lambda K_h^2)^((n-1)/2) / (n K^n), energy of a singular bubble

w_n is the area of the unit n-sphere in R^(n+1); w_(n-1) is the measure
factor of radial integrals in R^n.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import mpmath
from scipy import special

from hslab.errors import ParameterError

__all__ = [
    "ProblemParams",
    "CriticalConstants",
    "unit_sphere_area",
    "sobolev_constant",
    "sobolev_constant_variants",
    "hardy_constant",
    "compute_constants",
    "compute_constants_mp",
    "threshold_beta_star",
    "threshold_variants",
]

logger = logging.getLogger(__name__)


def unit_sphere_area(dim: int) -> float:
    """Area of the unit sphere S^dim embedded in R^(dim+1)."""
    m = dim + 1
    return float(2.0 * math.pi ** (m / 2.0) / special.gamma(m / 2.0))


def sobolev_constant(n: int) -> float:
    """Best constant K(n,2) of the Euclidean Sobolev inequality."""
    w_n = unit_sphere_area(n)
    return math.sqrt(4.0 / (n * (n - 2) * w_n ** (2.0 / n)))


def sobolev_constant_variants(n: int) -> dict[str, float]:
    """K(n,2) with the sphere area raised to 2/n (adopted) and to n/2 (as printed).

    Only the first matches 1/sqrt(quotient) of the standard bubble; the
    second is kept so reports can show the size of the discrepancy.
    """
    w_n = unit_sphere_area(n)
    return {
        "exponent_2_over_n": sobolev_constant(n),
        "exponent_n_over_2": math.sqrt(4.0 / (n * (n - 2) * w_n ** (n / 2.0))),
    }


def hardy_constant(n: int) -> float:
    """Best constant K(n,2,-2) = 2/(n-2) of the Hardy inequality."""
    return 2.0 / (n - 2)


@dataclass(frozen=True)
class ProblemParams:
    """Dimension and Hardy coefficient lambda = h(p).

    lambda = 0 is admitted and stands for the standard (Aubin-Talenti) limit.
    """

    n: int
    lam: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n:
            raise ParameterError(f"n must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "lam", float(self.lam))
        if self.n < 3:
            raise ParameterError("n must be >= 3")
        bound = 1.0 / hardy_constant(self.n) ** 2
        if not 0.0 <= self.lam < bound:
            raise ParameterError(
                f"lambda must lie in [0, 1/K(n,2,-2)^2) = [0, {bound:.12g}), got {self.lam!r}"
            )

    @classmethod
    def from_ratio(cls, n: int, ratio: float) -> "ProblemParams":
        """Build params from t = lambda * K(n,2,-2)^2 in [0, 1)."""
        return cls(n, ratio / hardy_constant(n) ** 2)

    @property
    def critical_exponent(self) -> float:
        return 2.0 * self.n / (self.n - 2)

    @property
    def k(self) -> float:
        """Half of n - 2, the decay exponent of the bubble family."""
        return (self.n - 2) / 2.0

    @property
    def hardy_ratio(self) -> float:
        """lambda * K(n,2,-2)^2, in [0, 1)."""
        return self.lam * hardy_constant(self.n) ** 2

    @property
    def a(self) -> float:
        return math.sqrt(1.0 - self.hardy_ratio)


@dataclass(frozen=True)
class CriticalConstants:
    k_sobolev: float
    k_hardy: float
    a: float
    omega: float
    q_sharp: float
    d_star: float
    D_star: float

    @property
    def sign_changing_bound(self) -> float:
        """2 D*, the lower energy bound of sign-changing solutions."""
        return 2.0 * self.D_star

    def as_dict(self) -> dict[str, float]:
        return {
            "k_sobolev": self.k_sobolev,
            "k_hardy": self.k_hardy,
            "a": self.a,
            "omega": self.omega,
            "q_sharp": self.q_sharp,
            "d_star": self.d_star,
            "D_star": self.D_star,
        }


@functools.lru_cache(maxsize=256)
def compute_constants(params: ProblemParams) -> CriticalConstants:
    """Sharp constants and thresholds for one parameter set."""
    n = params.n
    k_sob = sobolev_constant(n)
    k_h = hardy_constant(n)
    defect = 1.0 - params.lam * k_h ** 2
    return CriticalConstants(
        k_sobolev=k_sob,
        k_hardy=k_h,
        a=math.sqrt(defect),
        omega=unit_sphere_area(n - 1),
        q_sharp=defect ** ((n - 1.0) / n) / k_sob ** 2,
        d_star=1.0 / (n * k_sob ** n),
        D_star=defect ** ((n - 1.0) / 2.0) / (n * k_sob ** n),
    )


def compute_constants_mp(params: ProblemParams, dps: int = 50) -> dict[str, mpmath.mpf]:
    """Same fields as compute_constants, evaluated with mpmath at `dps` digits."""
    with mpmath.workdps(dps):
        n = mpmath.mpf(params.n)
        lam = mpmath.mpf(params.lam)
        w_n = 2 * mpmath.pi ** ((n + 1) / 2) / mpmath.gamma((n + 1) / 2)
        k_sob = mpmath.sqrt(4 / (n * (n - 2) * w_n ** (2 / n)))
        k_h = 2 / (n - 2)
        defect = 1 - lam * k_h ** 2
        return {
            "k_sobolev": +k_sob,
            "k_hardy": +k_h,
            "a": mpmath.sqrt(defect),
            "omega": 2 * mpmath.pi ** (n / 2) / mpmath.gamma(n / 2),
            "q_sharp": defect ** ((n - 1) / n) / k_sob ** 2,
            "d_star": 1 / (n * k_sob ** n),
            "D_star": defect ** ((n - 1) / 2) / (n * k_sob ** n),
        }


def threshold_variants(params: ProblemParams) -> dict[str, float]:
    """beta* under every exponent the threshold family is written with.

    `(n-1)/2` agrees with D* and with (1/n) q_sharp^(n/2); the others are
    kept for reporting only.
    """
    consts = compute_constants(params)
    defect = 1.0 - params.hardy_ratio
    n = params.n
    return {
        "exponent_(n-1)/2": defect ** ((n - 1.0) / 2.0) * consts.d_star,
        "exponent_n/2": defect ** (n / 2.0) * consts.d_star,
        "exponent_1": defect * consts.d_star,
    }


def threshold_beta_star(params: ProblemParams) -> float:
    """Energy below which a Palais-Smale sequence converges strongly to 0."""
    variants = threshold_variants(params)
    value = variants["exponent_(n-1)/2"]
    spread = max(variants.values()) - min(variants.values())
    if spread > 0.0:
        logger.debug("beta* = %.12g (exponent variants spread %.3g: %s)", value, spread, variants)
    return value
