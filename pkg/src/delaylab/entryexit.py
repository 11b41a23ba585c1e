"""Entry-exit map of the limiting slow drift.

The exit point x1 paired with an entry point x0 < 0 is the unique
positive root of

    F(s) = integral of g(x,0,0)/f(x,0,0) over [x0, s],

the delay exponent zeta0 is the inflow accumulated left of the
turning point, and tau1 is the slow travel time from x0 to x1.  The
module also samples the slow-manifold coordinate curves
zeta_minus/tau_minus (carried from the entry side) and
zeta_plus/tau_plus (carried back from a candidate exit point).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DelayLabError, NoExitInWindowError, PreconditionError
from .model import Model


@dataclass(frozen=True)
class EntryExitSolution:
    x0: float
    x1: float
    zeta0: float
    tau1: float
    dx1_dx0: float
    residual: float      # F(x1) after root finding
    evaluations: int     # total integrand evaluations spent


def _slow_ratio(m: Model):
    def h(x: float) -> float:
        return m.g(x, 0.0, 0.0) / m.f(x, 0.0, 0.0)
    return h


def _inv_f(m: Model):
    def h(x: float) -> float:
        return 1.0 / m.f(x, 0.0, 0.0)
    return h


def zeta_minus_at(m: Model, x0: float, x: float,
                  rel_tol: float = 1e-12, abs_tol: float = 1e-14) -> float:
    """Accumulated inflow -g/f from x0 to x."""
    return numerics.integrate(lambda r: -m.g(r, 0.0, 0.0) / m.f(r, 0.0, 0.0),
                              x0, x, rel_tol, abs_tol).value


def tau_minus_at(m: Model, x0: float, x: float,
                 rel_tol: float = 1e-12, abs_tol: float = 1e-14) -> float:
    """Slow time 1/f accumulated from x0 to x."""
    return numerics.integrate(_inv_f(m), x0, x, rel_tol, abs_tol).value


def zeta_plus_at(m: Model, x: float, x1_hat: float,
                 rel_tol: float = 1e-12, abs_tol: float = 1e-14) -> float:
    """Outflow g/f accumulated from x back to the candidate exit x1_hat."""
    return numerics.integrate(_slow_ratio(m), x, x1_hat, rel_tol, abs_tol).value


def tau_plus_at(m: Model, x: float, x1_hat: float, tau1: float,
                rel_tol: float = 1e-12, abs_tol: float = 1e-14) -> float:
    """Slow time at x carried backwards from (x1_hat, tau1)."""
    return tau1 - numerics.integrate(_inv_f(m), x, x1_hat, rel_tol, abs_tol).value


def solve_exit(m: Model, x0: float, rel_tol: float = 1e-12,
               abs_tol: float = 1e-14, root_tol: float = 1e-12) -> EntryExitSolution:
    """Solve the entry-exit relation for the exit point paired with x0.

    The root bracket starts at the turning point and expands
    geometrically toward the right window edge; if the accumulated
    integral is still negative at x_max the exit lies outside the
    window and ``NoExitInWindowError`` is raised.
    """
    x_min, x_max = m.window
    if not (x_min < x0 < 0.0):
        raise PreconditionError(
            f"x0 must lie in ({x_min}, 0), got {x0}"
        )

    evals = 0
    q0 = numerics.integrate(lambda r: -m.g(r, 0.0, 0.0) / m.f(r, 0.0, 0.0),
                            x0, 0.0, rel_tol, abs_tol)
    evals += q0.evaluations
    zeta0 = q0.value
    if not (zeta0 > 0.0):
        raise DelayLabError(
            f"accumulated inflow is not positive (zeta0={zeta0:.6g}); "
            "the sign hypotheses fail on this window"
        )

    ratio = _slow_ratio(m)

    def F(s: float) -> float:
        nonlocal evals
        q = numerics.integrate(ratio, 0.0, s, rel_tol, abs_tol)
        evals += q.evaluations
        return q.value - zeta0

    lo = 0.0
    hi = x_max / 256.0
    while True:
        f_hi = F(hi)
        if f_hi >= 0.0:
            break
        if hi >= x_max:
            raise NoExitInWindowError(
                f"no exit point in (0, {x_max:.17g}]: the outflow integral is "
                f"still short by {-f_hi:.6g} at the window edge"
            )
        lo = hi
        hi = min(2.0 * hi, x_max)

    if f_hi == 0.0:
        x1 = hi
    else:
        x1 = numerics.find_root(F, lo, hi, tol=root_tol)
    residual = F(x1)

    q1 = numerics.integrate(_inv_f(m), x0, x1, rel_tol, abs_tol)
    evals += q1.evaluations
    tau1 = q1.value

    g1 = m.g(x1, 0.0, 0.0)
    if not (g1 > 0.0):
        raise DelayLabError(
            f"exit point x1={x1:.17g} does not lie past the turning point "
            f"(g(x1,0,0)={g1:.6g})"
        )
    slope0 = m.g(x0, 0.0, 0.0) / m.f(x0, 0.0, 0.0)
    slope1 = g1 / m.f(x1, 0.0, 0.0)
    dx1_dx0 = slope0 / slope1

    return EntryExitSolution(x0=float(x0), x1=float(x1), zeta0=float(zeta0),
                             tau1=float(tau1), dx1_dx0=float(dx1_dx0),
                             residual=float(residual), evaluations=evals)


@dataclass(frozen=True)
class SlowCurves:
    """Coordinate curves of the limiting slow flow sampled on a grid."""

    x: np.ndarray
    zeta_minus: np.ndarray
    tau_minus: np.ndarray
    zeta_plus: np.ndarray
    tau_plus: np.ndarray
    x0: float
    x1_hat: float
    tau1: float


def slow_curves(m: Model, x0: float, x1_hat: float, n: int = 512,
                tau1: float | None = None, rel_tol: float = 1e-12,
                abs_tol: float = 1e-14) -> SlowCurves:
    """Sample zeta/tau curves on a uniform grid from x0 to x1_hat.

    Panel-wise cumulative quadrature keeps the samples additive.  When
    ``tau1`` is omitted the candidate exit is treated as the true one
    and the total slow travel time of the grid is used.
    """
    if n < 2:
        raise PreconditionError(f"n must be at least 2, got {n}")
    x_min, x_max = m.window
    if not (x_min <= x0 < 0.0 < x1_hat <= x_max):
        raise PreconditionError(
            f"need x_min <= x0 < 0 < x1_hat <= x_max, got x0={x0}, x1_hat={x1_hat}"
        )
    xs = np.linspace(x0, x1_hat, n)
    ratio = _slow_ratio(m)
    inv_f = _inv_f(m)

    G = np.empty(n)
    T = np.empty(n)
    G[0] = 0.0
    T[0] = 0.0
    for i in range(1, n):
        a, b = float(xs[i - 1]), float(xs[i])
        G[i] = G[i - 1] + numerics.integrate(ratio, a, b, rel_tol, abs_tol).value
        T[i] = T[i - 1] + numerics.integrate(inv_f, a, b, rel_tol, abs_tol).value

    if tau1 is None:
        tau1 = float(T[-1])
    zeta_minus = -G
    tau_minus = T.copy()
    zeta_plus = G[-1] - G
    tau_plus = tau1 - (T[-1] - T)
    return SlowCurves(x=xs, zeta_minus=zeta_minus, tau_minus=tau_minus,
                      zeta_plus=zeta_plus, tau_plus=tau_plus,
                      x0=float(x0), x1_hat=float(x1_hat), tau1=float(tau1))
