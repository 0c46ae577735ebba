"""Exception types shared across the library.

Every mathematical guard failure raises a subclass of :class:`FrkError`, so
callers (and the CLI) can distinguish "the computation is not defined here"
from programming errors.
"""

from __future__ import annotations


class FrkError(Exception):
    """Base class for all library errors."""


class NotAPreset(FrkError):
    """Unknown preset name."""


class SpecError(FrkError):
    """A fractal-spec document failed validation.

    ``path`` locates the offending field, e.g. ``"mu"`` or ``"conductances[3]"``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class UnsupportedAddress(FrkError):
    """An address is not valid for the given fractal (e.g. a real number on SG)."""


class SingularResolvent(FrkError):
    """The spectral parameter is (numerically) on the relevant Dirichlet spectrum.

    ``detail`` may carry the nearest discrete eigenvalue, the scale / word at
    which the guard tripped, or both.
    """

    def __init__(self, message: str, **detail):
        self.detail = detail
        if detail:
            message = f"{message} ({', '.join(f'{k}={v}' for k, v in detail.items())})"
        super().__init__(message)


class SingularPrekernel(SingularResolvent):
    """The level-1 flux matrix is not (safely) invertible at this parameter."""


class SingularNeumann(SingularResolvent):
    """The spectral parameter is (numerically) a Neumann eigenvalue."""


class OnSpectrum(SingularResolvent):
    """A closed-form denominator vanished: the parameter sits on the spectrum."""


class ForbiddenValue(FrkError):
    """A decimation sequence entry hit a forbidden eigenvalue."""

    def __init__(self, level: int, value: float, forbidden: float):
        self.level = level
        self.value = value
        self.forbidden = forbidden
        super().__init__(
            f"sequence entry {value!r} at level {level} is within tolerance "
            f"of the forbidden value {forbidden!r}"
        )


class NonConvergent(FrkError):
    """An iterative limit failed its Cauchy test.

    Carries the last level tried and the last two iterates.
    """

    def __init__(self, level: int, last: float, previous: float):
        self.level = level
        self.last = last
        self.previous = previous
        super().__init__(
            f"no convergence by level {level}: last iterates {previous!r} -> {last!r}"
        )
