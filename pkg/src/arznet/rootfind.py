"""Scalar bisection with explicit failure diagnostics."""

from __future__ import annotations

MAX_ITER = 200


class SolverFailure(RuntimeError):
    """A scalar root-find did not converge; carries diagnostics, never a silent result."""

    def __init__(self, message: str, **diagnostics):
        super().__init__(message + (f" [{diagnostics}]" if diagnostics else ""))
        self.diagnostics = diagnostics


def bisect(f, a: float, b: float, tol: float, max_iter: int = MAX_ITER) -> float:
    """Root of ``f`` on [a, b] by bisection; ``f(a)`` and ``f(b)`` must bracket zero.

    Converges on |f| <= tol; the bracket width only serves as a safety stop
    once it shrinks to machine precision relative to the initial interval.
    """
    width_floor = 1e-15 * max(abs(a), abs(b), 1.0)
    fa, fb = f(a), f(b)
    if abs(fa) <= tol:
        return a
    if abs(fb) <= tol:
        return b
    if fa * fb > 0:
        raise SolverFailure(
            "no sign change on bracket", a=a, b=b, fa=fa, fb=fb, tol=tol
        )
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if abs(fm) <= tol or (b - a) <= width_floor:
            return mid
        if fa * fm <= 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    raise SolverFailure(
        "bisection did not converge", a=a, b=b, fa=fa, fb=fb,
        tol=tol, max_iter=max_iter,
    )
