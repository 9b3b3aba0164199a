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
Radial integration engine.

integrate_radial() splits (lower, upper) into panels at r = 1 and at any
caller-supplied breakpoints, maps an infinite tail onto (0, 1] with r = 1/t
and runs QUADPACK on every panel through scipy.integrate.quad. An algebraic
endpoint factor r^p at r = 0 can be handed to QUADPACK's weighted rule.

The I(alpha, beta) family

    I^alpha_beta = int_0^inf r^alpha / (1 + r^(2a))^beta dr

is evaluated by quadrature (compute_I) and in closed form through the beta
function (closed_form_I); the two recurrences linking neighbouring members
are exposed for verification.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from hslab.errors import DivergentIntegralError, ParameterError, QuadratureError

__all__ = [
    "DEFAULT_REL_TOL",
    "IntegralSpec",
    "integrate_radial",
    "integrate_radial_with_error",
    "compute_I",
    "closed_form_I",
    "recurrence_alpha",
    "recurrence_beta",
    "sample_specs",
]

logger = logging.getLogger(__name__)

DEFAULT_REL_TOL = 1e-10
SUBDIVISION_LIMIT = 400

# Smallest abscissa handed to an integrand divided by its endpoint power;
# QUADPACK's weighted rule samples the endpoint itself.
_ENDPOINT_FLOOR = 1e-60


def _check_tolerance(rel_tol: float) -> None:
    if not 1e-14 < rel_tol < 1e-2:
        raise ParameterError(f"rel_tol must lie in (1e-14, 1e-2), got {rel_tol!r}")


def _quad_panel(f, lo, hi, rel_tol, **kwargs):
    out = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rel_tol,
                         limit=SUBDIVISION_LIMIT, full_output=1, **kwargs)
    value, abs_error = float(out[0]), float(out[1])
    if len(out) > 3:
        # QUADPACK flagged the panel; accept it only within an order of
        # magnitude of the request.
        if not np.isfinite(value) or abs_error > 10.0 * rel_tol * abs(value):
            raise QuadratureError(
                f"quadrature on [{lo:.6g}, {hi:.6g}] did not converge: {out[3]}",
                value=value, abs_error=abs_error,
            )
        logger.debug("accepted flagged panel [%g, %g]: err=%.3g", lo, hi, abs_error)
    return value, abs_error


def integrate_radial_with_error(
    integrand: Callable[[float], float],
    lower: float = 0.0,
    upper: float = math.inf,
    rel_tol: float = DEFAULT_REL_TOL,
    breakpoints: Sequence[float] = (),
    endpoint_power: float | None = None,
) -> tuple[float, float]:
    """Integrate a radial integrand and return (value, absolute error estimate).

    Args:
        integrand: f(r); with `endpoint_power` set, the smooth factor g(r)
            of the integrand r^p g(r).
        lower: lower limit, >= 0.
        upper: upper limit, finite or math.inf.
        rel_tol: requested relative tolerance in (1e-14, 1e-2).
        breakpoints: extra panel boundaries inside (lower, upper).
        endpoint_power: p > -1 of an algebraic factor r^p at r = 0; only
            valid when lower == 0.

    Raises:
        ParameterError: bad limits, tolerance or endpoint power.
        QuadratureError: a panel did not converge.
    """
    _check_tolerance(rel_tol)
    if lower < 0.0 or not upper > lower:
        raise ParameterError(f"invalid interval ({lower!r}, {upper!r})")
    if endpoint_power is not None:
        if lower != 0.0:
            raise ParameterError("endpoint_power requires lower == 0")
        if endpoint_power <= -1.0:
            raise ParameterError(f"endpoint power {endpoint_power} is not integrable")
        p = float(endpoint_power)
        full = lambda r: r ** p * integrand(r)  # noqa: E731
    else:
        p = None
        full = integrand

    finite_top = upper if math.isfinite(upper) else max(1.0, lower)
    cuts = {lower, finite_top}
    if lower < 1.0 < finite_top:
        cuts.add(1.0)
    cuts.update(b for b in breakpoints if lower < b < finite_top)
    edges = sorted(cuts)

    total = 0.0
    error = 0.0
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        if i == 0 and p is not None:
            g = lambda r: integrand(max(r, _ENDPOINT_FLOOR))  # noqa: E731
            value, err = _quad_panel(g, lo, hi, rel_tol, weight="alg", wvar=(p, 0.0))
        else:
            value, err = _quad_panel(full, lo, hi, rel_tol)
        total += value
        error += err

    if not math.isfinite(upper):
        # r = 1/t on (0, 1/finite_top]
        tail = lambda t: full(1.0 / t) / (t * t)  # noqa: E731
        t_cuts = {0.0, 1.0 / finite_top}
        t_cuts.update(1.0 / b for b in breakpoints if b > finite_top)
        t_edges = sorted(t_cuts)
        for lo, hi in zip(t_edges[:-1], t_edges[1:]):
            value, err = _quad_panel(tail, lo, hi, rel_tol)
            total += value
            error += err
    return total, error


def integrate_radial(
    integrand: Callable[[float], float],
    lower: float = 0.0,
    upper: float = math.inf,
    rel_tol: float = DEFAULT_REL_TOL,
    breakpoints: Sequence[float] = (),
    endpoint_power: float | None = None,
) -> float:
    """Value-only form of integrate_radial_with_error."""
    return integrate_radial_with_error(
        integrand, lower, upper, rel_tol, breakpoints, endpoint_power
    )[0]


@dataclass(frozen=True)
class IntegralSpec:
    """Exponents of I^alpha_beta = int_0^inf r^alpha (1 + r^(2a))^-beta dr."""

    alpha: float
    beta: float
    a: float

    def check(self) -> None:
        if not self.a > 0.0:
            raise DivergentIntegralError(f"a must be positive, got {self.a}", bound="a > 0")
        if not self.alpha > -1.0:
            raise DivergentIntegralError(
                f"alpha = {self.alpha} violates alpha > -1 (divergent at 0)", bound="alpha > -1"
            )
        if not 2.0 * self.a * self.beta - self.alpha > 1.0:
            raise DivergentIntegralError(
                f"2a*beta - alpha = {2.0 * self.a * self.beta - self.alpha:.6g} violates "
                "2a*beta - alpha > 1 (divergent at infinity)",
                bound="2a*beta - alpha > 1",
            )


def compute_I(spec: IntegralSpec, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """I^alpha_beta by radial quadrature."""
    spec.check()
    a2, beta = 2.0 * spec.a, spec.beta
    if spec.alpha < 0.0:
        return integrate_radial(lambda r: (1.0 + r ** a2) ** (-beta), rel_tol=rel_tol,
                                endpoint_power=spec.alpha)
    alpha = spec.alpha
    return integrate_radial(lambda r: r ** alpha * (1.0 + r ** a2) ** (-beta), rel_tol=rel_tol)


def closed_form_I(spec: IntegralSpec) -> float:
    """I^alpha_beta = B((alpha+1)/(2a), beta - (alpha+1)/(2a)) / (2a)."""
    spec.check()
    x = (spec.alpha + 1.0) / (2.0 * spec.a)
    return float(special.beta(x, spec.beta - x) / (2.0 * spec.a))


def recurrence_alpha(spec: IntegralSpec, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """I^alpha_beta predicted from I^(alpha-2a)_beta.

    I^alpha_beta = (alpha - 2a + 1) / (2a beta - (alpha + 1)) * I^(alpha-2a)_beta,
    valid for alpha > 2a - 1.
    """
    spec.check()
    if not spec.alpha > 2.0 * spec.a - 1.0:
        raise ParameterError(
            f"recurrence in alpha needs alpha > 2a - 1 (alpha={spec.alpha}, a={spec.a})"
        )
    lower = IntegralSpec(spec.alpha - 2.0 * spec.a, spec.beta, spec.a)
    factor = (spec.alpha - 2.0 * spec.a + 1.0) / (2.0 * spec.a * spec.beta - (spec.alpha + 1.0))
    return factor * compute_I(lower, rel_tol)


def recurrence_beta(spec: IntegralSpec, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """I^(alpha-2a)_(beta-1) predicted from I^(alpha-2a)_beta.

    I^(alpha-2a)_(beta-1) = 2a(beta - 1) / (2a beta - (alpha + 1)) * I^(alpha-2a)_beta,
    valid for beta > 1 and alpha > 2a - 1.
    """
    spec.check()
    if not spec.beta > 1.0:
        raise ParameterError(f"recurrence in beta needs beta > 1 (beta={spec.beta})")
    if not spec.alpha > 2.0 * spec.a - 1.0:
        raise ParameterError(
            f"recurrence in beta needs alpha > 2a - 1 (alpha={spec.alpha}, a={spec.a})"
        )
    source = IntegralSpec(spec.alpha - 2.0 * spec.a, spec.beta, spec.a)
    factor = 2.0 * spec.a * (spec.beta - 1.0) / (2.0 * spec.a * spec.beta - (spec.alpha + 1.0))
    return factor * compute_I(source, rel_tol)


def sample_specs(count: int, seed: int = 0) -> list[IntegralSpec]:
    """Random convergent triples inside the range of both recurrences.

    a in [0.2, 1), alpha - (2a - 1) in [0.05, 4), and beta at least 0.25
    above max(1, (alpha + 1)/(2a)).
    """
    rng = np.random.default_rng(seed)
    specs = []
    for _ in range(count):
        a = float(rng.uniform(0.2, 1.0))
        alpha = 2.0 * a - 1.0 + float(rng.uniform(0.05, 4.0))
        beta = max(1.0, (alpha + 1.0) / (2.0 * a)) + float(rng.uniform(0.25, 3.0))
        specs.append(IntegralSpec(alpha, beta, a))
    return specs
