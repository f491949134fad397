"""Central finite-difference gradient checking.

The check re-evaluates the target function on plain floats, so it never
touches the tape it is validating.
"""
from __future__ import annotations

from typing import Callable, Sequence

DEFAULT_STEP = 1e-5
DEFAULT_REL_TOL = 1e-4


def central_difference(f: Callable[[Sequence[float]], float], x: Sequence[float],
                       step: float = DEFAULT_STEP) -> list[float]:
    """Central finite-difference gradient of f at x, one coordinate at a time."""
    x = list(x)
    grad = []
    for k in range(len(x)):
        orig = x[k]
        x[k] = orig + step
        hi = f(x)
        x[k] = orig - step
        lo = f(x)
        x[k] = orig
        grad.append((hi - lo) / (2.0 * step))
    return grad


def relative_error(analytic: float, numeric: float) -> float:
    """|analytic - numeric| / max(1, |analytic|)."""
    return abs(analytic - numeric) / max(1.0, abs(analytic))


def max_gradient_error(analytic: Sequence[float], numeric: Sequence[float]) -> float:
    if len(analytic) != len(numeric):
        raise ValueError("gradient length mismatch")
    return max(relative_error(a, n) for a, n in zip(analytic, numeric))


def check_gradient(f: Callable[[Sequence[float]], float], x: Sequence[float],
                   analytic: Sequence[float], step: float = DEFAULT_STEP,
                   rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Assert-style check; returns the worst relative error, raises on breach."""
    numeric = central_difference(f, x, step)
    err = max_gradient_error(analytic, numeric)
    if err >= rel_tol:
        detail = "; ".join(
            f"x[{k}]: analytic={a:.10g} fd={n:.10g}"
            for k, (a, n) in enumerate(zip(analytic, numeric))
            if relative_error(a, n) >= rel_tol
        )
        raise AssertionError(f"gradient check failed (worst rel err {err:.3g}): {detail}")
    return err
