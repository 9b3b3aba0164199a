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
"""Exception hierarchy shared by every hslab module.

Each class carries the process exit code the CLI maps it to: 2 for usage
and parameter errors, 1 for computational diagnostics.
"""


class LabError(Exception):
    """Base class for all hslab errors."""

    exit_code = 1


class ParameterError(LabError, ValueError):
    """An operation was called outside its documented domain."""

    exit_code = 2


class ConfigError(ParameterError):
    """Unknown, mistyped or missing configuration key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class SingularEvaluationError(ParameterError):
    """Point evaluation at r = 0 of a profile that diverges there."""


class DivergentIntegralError(ParameterError):
    """An I(alpha, beta) request whose integral does not converge."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class QuadratureError(LabError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, value=None, abs_error=None):
        super().__init__(message)
        self.value = value
        self.abs_error = abs_error


class NehariProjectionError(LabError):
    """The Nehari scaling is undefined (nonpositive numerator or denominator)."""

    def __init__(self, message, numerator=None, critical=None):
        super().__init__(message)
        self.numerator = numerator
        self.critical = critical
