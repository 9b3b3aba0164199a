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
Euclidean extremals of the limit problems

    -u'' - (n-1)/r u' - lambda u / r^2 = u^(2*-1)      (singular, lambda > 0)
    -u'' - (n-1)/r u'                  = u^(2*-1)      (standard, lambda = 0)

The positive radial solutions form the family

    U(r)     = C(n,a) r^((a-1)k) (1 + r^(2a))^(-k),   k = (n-2)/2,
    C(n,a)   = (a^2 n (n-2))^(k/2),
    U_mu(r)  = mu^(-k) U(r / mu).

With s = r^(2a) and D = 1 + s the logarithmic derivative is U'/U = k q / r
where q = (a - 1) - 2a s / D, which keeps every closed-form expression free
of catastrophic cancellation.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from hslab.constants import ProblemParams, compute_constants
from hslab.errors import ParameterError, SingularEvaluationError
from hslab.quadrature import DEFAULT_REL_TOL, integrate_radial_with_error

__all__ = [
    "BubbleKind",
    "Functional",
    "BubbleProfile",
    "EnergyBreakdown",
    "amplitude",
    "evaluate",
    "derivative",
    "second_derivative",
    "residual",
    "residual_fd",
    "energy",
    "rayleigh_quotient",
    "sharp_quotient",
]

logger = logging.getLogger(__name__)


class BubbleKind(str, enum.Enum):
    STANDARD = "standard"
    SINGULAR = "singular"


class Functional(str, enum.Enum):
    J = "J"
    J_INFINITY = "J_infinity"


def amplitude(n: int, a: float) -> float:
    """C(n,a) = (a^2 n (n-2))^((n-2)/4)."""
    return (a * a * n * (n - 2)) ** ((n - 2) / 4.0)


@dataclass(frozen=True)
class BubbleProfile:
    params: ProblemParams
    scale: float = 1.0
    kind: BubbleKind = BubbleKind.SINGULAR

    def __post_init__(self):
        object.__setattr__(self, "kind", BubbleKind(self.kind))
        if not self.scale > 0.0:
            raise ParameterError(f"bubble scale must be positive, got {self.scale!r}")
        if self.kind is BubbleKind.STANDARD and self.params.lam != 0.0:
            raise ParameterError("a standard bubble requires lambda = 0")

    @classmethod
    def standard(cls, n: int, scale: float = 1.0) -> "BubbleProfile":
        return cls(ProblemParams(n, 0.0), scale, BubbleKind.STANDARD)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def a(self) -> float:
        return self.params.a

    @property
    def k(self) -> float:
        return self.params.k

    @property
    def amplitude(self) -> float:
        return amplitude(self.n, self.a)


def _as_radius(profile: BubbleProfile, r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise ParameterError("radial coordinate must be nonnegative")
    if profile.a < 1.0 and np.any(r == 0.0):
        raise SingularEvaluationError(
            f"singular bubble (a={profile.a:.6g}) diverges at r = 0"
        )
    return r


def _unit_parts(profile: BubbleProfile, t):
    """s, D, U and q of the unit-scale profile at t > 0 (or t = 0 when a = 1)."""
    a, k = profile.a, profile.k
    s = t ** (2.0 * a)
    d = 1.0 + s
    with np.errstate(divide="ignore"):
        u = profile.amplitude * t ** ((a - 1.0) * k) * d ** (-k)
    q = (a - 1.0) - 2.0 * a * s / d
    return s, d, u, q


def _scalar_or_array(value, r):
    return float(value) if np.ndim(r) == 0 else value


def evaluate(profile: BubbleProfile, r):
    """U_mu(r); vectorised over r."""
    r = _as_radius(profile, r)
    mu = profile.scale
    _, _, u, _ = _unit_parts(profile, r / mu)
    return _scalar_or_array(mu ** (-profile.k) * u, r)


def derivative(profile: BubbleProfile, r):
    """dU_mu/dr for r > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise SingularEvaluationError("derivative requires r > 0")
    mu = profile.scale
    t = r / mu
    _, _, u, q = _unit_parts(profile, t)
    return _scalar_or_array(mu ** (-profile.k - 1.0) * u * profile.k * q / t, r)


def second_derivative(profile: BubbleProfile, r):
    """d2U_mu/dr2 for r > 0, from (ln U)'' = -k q / t^2 - 4 a^2 k s / (t^2 D^2)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise SingularEvaluationError("second derivative requires r > 0")
    a, k, mu = profile.a, profile.k, profile.scale
    t = r / mu
    s, d, u, q = _unit_parts(profile, t)
    log_dd = (-k * q - 4.0 * a * a * k * s / (d * d)) / (t * t)
    value = u * ((k * q / t) ** 2 + log_dd)
    return _scalar_or_array(mu ** (-k - 2.0) * value, r)


def residual(profile: BubbleProfile, r, multiplier: float = 1.0):
    """Pointwise residual of (m U_mu) in -u'' - (n-1)u'/r - lambda u/r^2 - u^(2*-1).

    Evaluated in closed form; with w = (1 - s)/D the Laplacian and Hardy
    terms combine into k^2 a^2 (1 - w)(1 + w) + 4 a^2 k s / D^2, where
    1 - w = 2s/D and 1 + w = 2/D are formed directly to avoid cancellation
    at both ends of the radial range.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise SingularEvaluationError("residual requires r > 0")
    a, k, n, mu = profile.a, profile.k, profile.n, profile.scale
    t = r / mu
    s, d, u, _ = _unit_parts(profile, t)
    one_minus_w, one_plus_w = 2.0 * s / d, 2.0 / d
    linear = k * k * a * a * one_minus_w * one_plus_w + 4.0 * a * a * k * s / (d * d)
    nonlinear = t * t * u ** (4.0 / (n - 2))
    m = float(multiplier)
    value = u / (t * t) * (m * linear - m ** ((n + 2.0) / (n - 2.0)) * nonlinear)
    return _scalar_or_array(mu ** (-k - 2.0) * value, r)


def residual_fd(profile: BubbleProfile, r, step: float = 1e-3):
    """Finite-difference cross-check of residual(), relative to |U^(2*-1)|.

    Fourth-order central differences with a relative step r*step.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise SingularEvaluationError("residual requires r > 0")
    n, lam = profile.n, profile.params.lam
    h = r * step
    f = lambda x: np.asarray(evaluate(profile, x))  # noqa: E731
    f_m2, f_m1, f_0, f_p1, f_p2 = f(r - 2 * h), f(r - h), f(r), f(r + h), f(r + 2 * h)
    d1 = (f_m2 - 8.0 * f_m1 + 8.0 * f_p1 - f_p2) / (12.0 * h)
    d2 = (-f_m2 + 16.0 * f_m1 - 30.0 * f_0 + 16.0 * f_p1 - f_p2) / (12.0 * h * h)
    nonlinear = f_0 ** ((n + 2.0) / (n - 2.0))
    value = (-d2 - (n - 1.0) * d1 / r - lam * f_0 / (r * r) - nonlinear) / nonlinear
    return _scalar_or_array(value, r)


@dataclass(frozen=True)
class EnergyBreakdown:
    gradient: float
    hardy: float
    critical: float
    total: float
    abs_error: float

    def as_dict(self) -> dict[str, float]:
        return {
            "gradient": self.gradient,
            "hardy": self.hardy,
            "critical": self.critical,
            "total": self.total,
            "abs_error": self.abs_error,
        }


def _bubble_integrals(profile: BubbleProfile, rel_tol: float):
    """Whole-space gradient, Hardy and critical integrals of U_mu.

    Each integrand is r^p times a smooth factor with p = a(n-2) - 1 or
    an - 1, which is handed to the weighted endpoint rule.
    """
    a, k, n, mu = profile.a, profile.k, profile.n, profile.scale
    omega = compute_constants(profile.params).omega
    c2 = profile.amplitude ** 2
    p_quad = a * (n - 2.0) - 1.0
    p_crit = a * n - 1.0
    crit_exp = 2.0 * n / (n - 2.0)
    # integrated in r with a breakpoint at the scale, not in r/mu
    scale_q = mu ** (-p_quad - 1.0)
    scale_c = mu ** (-p_crit - 1.0)

    def grad_factor(r):
        t = r / mu
        s = t ** (2.0 * a)
        d = 1.0 + s
        q = (a - 1.0) - 2.0 * a * s / d
        return scale_q * c2 * k * k * q * q * d ** (-(n - 2.0))

    def hardy_factor(r):
        d = 1.0 + (r / mu) ** (2.0 * a)
        return scale_q * c2 * d ** (-(n - 2.0))

    def crit_factor(r):
        d = 1.0 + (r / mu) ** (2.0 * a)
        return scale_c * profile.amplitude ** crit_exp * d ** (-float(n))

    brk = (mu,)
    results = []
    for factor, p in ((grad_factor, p_quad), (hardy_factor, p_quad), (crit_factor, p_crit)):
        if p < 0.0:
            value, err = integrate_radial_with_error(
                factor, rel_tol=rel_tol, breakpoints=brk, endpoint_power=p)
        else:
            value, err = integrate_radial_with_error(
                lambda r, f=factor, p=p: r ** p * f(r), rel_tol=rel_tol, breakpoints=brk)
        results.append((omega * value, omega * err))
    return results


def energy(profile: BubbleProfile, functional: Functional | str = Functional.J_INFINITY,
           rel_tol: float = DEFAULT_REL_TOL) -> EnergyBreakdown:
    """Energy of U_mu with the three integrals reported separately.

    J uses no Hardy term and requires a standard profile; J_infinity uses
    lambda = params.lam.
    """
    functional = Functional(functional)
    if functional is Functional.J and profile.kind is not BubbleKind.STANDARD:
        raise ParameterError("functional J is defined for standard bubbles only")
    (grad, e_g), (hardy, e_h), (crit, e_c) = _bubble_integrals(profile, rel_tol)
    lam = profile.params.lam if functional is Functional.J_INFINITY else 0.0
    p = 2.0 * profile.n / (profile.n - 2.0)
    total = 0.5 * grad - 0.5 * lam * hardy - crit / p
    err = 0.5 * e_g + 0.5 * lam * e_h + e_c / p
    return EnergyBreakdown(grad, hardy, crit, total, err)


def rayleigh_quotient(params: ProblemParams, u: Callable, du: Callable,
                      upper: float = math.inf, breakpoints=(),
                      rel_tol: float = DEFAULT_REL_TOL) -> float:
    """(int |u'|^2 - lambda u^2/r^2) / (int |u|^(2*))^(2/2*) over R^n for radial u."""
    n, lam = params.n, params.lam
    p = params.critical_exponent
    grad = integrate_radial_with_error(lambda r: du(r) ** 2 * r ** (n - 1), 0.0, upper,
                                       rel_tol, breakpoints)[0]
    hardy = integrate_radial_with_error(lambda r: u(r) ** 2 * r ** (n - 3), 0.0, upper,
                                        rel_tol, breakpoints)[0]
    crit = integrate_radial_with_error(lambda r: abs(u(r)) ** p * r ** (n - 1), 0.0, upper,
                                       rel_tol, breakpoints)[0]
    omega = compute_constants(params).omega
    return omega * (grad - lam * hardy) / (omega * crit) ** (2.0 / p)


def sharp_quotient(profile: BubbleProfile, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Sobolev-Hardy quotient of U_mu; invariant under scale and amplitude."""
    (grad, _), (hardy, _), (crit, _) = _bubble_integrals(profile, rel_tol)
    p = 2.0 * profile.n / (profile.n - 2.0)
    return (grad - profile.params.lam * hardy) / crit ** (2.0 / p)
