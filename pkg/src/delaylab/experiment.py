"""Finite-eps experiments against the eps = 0 predictions.

``run_sweep`` integrates one delayed-loss cycle per eps in the
logarithmic chart, measures the delay exponent, the exit point, the
exit slow time, the planar Hausdorff distance to the candidate cycle
and a finite-difference probe of d(exit)/d(entry), then fits
empirical convergence rates against the eps = 0 reference values.

``manifold_closeness`` measures how far a finite-eps trajectory sits
above the attracting slow profile in the logarithmic chart.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .entryexit import EntryExitSolution, solve_exit
from .errors import DelayLabError, PreconditionError
from .geometry import build_configuration, hausdorff_distance
from .integrate import Controls, Section, integrate_zeta, min_z_exponent
from .model import InitialData, Model
from .numerics import integrate

#: quantities measured per eps and their eps = 0 reference attribute
_QUANTITIES = (
    ("minz_exponent", "zeta0"),
    ("exit_x", "x1"),
    ("tau_exit", "tau1"),
    ("d_exit_dx0", "dx1_dx0"),
)


@dataclass(frozen=True)
class SweepRecord:
    """Measurements for a single eps (wall time is informational only)."""

    eps: float
    minz_exponent: float
    exit_x: float
    tau_exit: float
    hausdorff: float
    d_exit_dx0: float
    wall_time_s: float


@dataclass(frozen=True)
class SweepFailure:
    eps: float
    error: str


@dataclass(frozen=True)
class SweepReport:
    model_name: str
    x0: float
    z0: float
    eps: tuple[float, ...]
    records: tuple[SweepRecord, ...]
    failures: tuple[SweepFailure, ...]
    reference: EntryExitSolution
    rates: dict[str, float]
    richardson_minz: float | None

    def errors_against_reference(self) -> dict[str, list[tuple[float, float]]]:
        """Per quantity, the (eps, |measured - reference|) pairs."""
        out: dict[str, list[tuple[float, float]]] = {}
        for quantity, ref_attr in _QUANTITIES:
            ref = getattr(self.reference, ref_attr)
            out[quantity] = [
                (r.eps, abs(getattr(r, quantity) - ref)) for r in self.records
            ]
        return out


def _converged_hausdorff(traj_points: np.ndarray, m: Model,
                         sol: EntryExitSolution, z0: float,
                         n0: int = 512, n_cap: int = 8192) -> float:
    """Hausdorff distance to the candidate cycle, with the cycle
    sampling refined until the value settles to 1%."""
    n = n0
    value = hausdorff_distance(
        traj_points, build_configuration(m, sol, z0, n=n).xz_points())
    while n < n_cap:
        n *= 2
        refined = hausdorff_distance(
            traj_points, build_configuration(m, sol, z0, n=n).xz_points())
        settled = abs(refined - value) <= 0.01 * max(abs(value), 1e-12)
        value = refined
        if settled:
            break
    return value


def run_sweep(m: Model, x0: float, z0: float, eps_list: list[float],
              controls: Controls | None = None, jobs: int = 1,
              probe_step: float | None = None,
              hausdorff_n0: int = 512) -> SweepReport:
    """Measure one cycle per eps and fit convergence rates.

    ``eps_list`` must be positive and strictly descending.  A failure
    at one eps is recorded and the sweep continues; only an all-eps
    failure raises.  ``jobs`` > 1 runs the per-eps work in threads;
    results are assembled in eps order either way.
    """
    if not eps_list:
        raise PreconditionError("eps list must be nonempty")
    for e in eps_list:
        if not (math.isfinite(e) and e > 0.0):
            raise PreconditionError(f"every eps must be positive and finite, got {e}")
    for a, b in zip(eps_list, eps_list[1:]):
        if not (a > b):
            raise PreconditionError(
                f"eps values must be strictly descending, got {a} before {b}"
            )
    if jobs < 1:
        raise PreconditionError(f"jobs must be >= 1, got {jobs}")
    if controls is None:
        controls = Controls()

    sol = solve_exit(m, x0)
    stop = Section(var="z", value=z0, direction=+1, require_x_positive=True)
    h_probe = probe_step if probe_step is not None else 1e-4 * abs(x0)
    if not (0.0 < h_probe < abs(x0)):
        raise PreconditionError(
            f"probe step must lie in (0, |x0|), got {h_probe}"
        )

    def exit_x_from(x_start: float, eps: float) -> float:
        traj = integrate_zeta(m, InitialData(x0=x_start, z0=z0, eps=eps),
                              stop, controls)
        return traj.events[-1].x

    def one(eps: float) -> SweepRecord:
        t_begin = time.perf_counter()
        traj = integrate_zeta(m, InitialData(x0=x0, z0=z0, eps=eps),
                              stop, controls)
        event = traj.events[-1]
        minz = min_z_exponent(traj, eps)
        hd = _converged_hausdorff(traj.xz_points(), m, sol, z0,
                                  n0=hausdorff_n0)
        probe = (exit_x_from(x0 + h_probe, eps)
                 - exit_x_from(x0 - h_probe, eps)) / (2.0 * h_probe)
        return SweepRecord(eps=eps, minz_exponent=minz, exit_x=event.x,
                           tau_exit=event.tau, hausdorff=hd,
                           d_exit_dx0=probe,
                           wall_time_s=time.perf_counter() - t_begin)

    results: list[SweepRecord | SweepFailure | None] = [None] * len(eps_list)

    def guarded(i_eps):
        i, eps = i_eps
        try:
            results[i] = one(eps)
        except DelayLabError as exc:
            results[i] = SweepFailure(eps=eps, error=f"{type(exc).__name__}: {exc}")

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(guarded, enumerate(eps_list)))
    else:
        for item in enumerate(eps_list):
            guarded(item)

    records = tuple(r for r in results if isinstance(r, SweepRecord))
    failures = tuple(r for r in results if isinstance(r, SweepFailure))
    if not records:
        detail = "; ".join(f"eps={f.eps:g}: {f.error}" for f in failures)
        raise DelayLabError(f"every eps in the sweep failed ({detail})")

    rates: dict[str, float] = {}
    for quantity, ref_attr in _QUANTITIES:
        ref = getattr(sol, ref_attr)
        pts = [(r.eps, abs(getattr(r, quantity) - ref)) for r in records]
        pts = [(e, err) for e, err in pts if err > 0.0]
        if len(pts) >= 2:
            log_e = np.log([p[0] for p in pts])
            log_err = np.log([p[1] for p in pts])
            rates[quantity] = float(np.polyfit(log_e, log_err, 1)[0])

    richardson = None
    if len(records) >= 2:
        e_large, e_small = records[-2].eps, records[-1].eps
        if abs(e_large - 2.0 * e_small) <= 1e-9 * e_large:
            richardson = (2.0 * records[-1].minz_exponent
                          - records[-2].minz_exponent)

    return SweepReport(model_name=m.name, x0=x0, z0=z0,
                       eps=tuple(eps_list), records=records,
                       failures=failures, reference=sol, rates=rates,
                       richardson_minz=richardson)


@dataclass(frozen=True)
class ProbeResult:
    """Central-difference estimate of d(exit_x)/d(x0) at finite eps.

    ``uncertainty`` is the change of the estimate when the step is
    doubled — a plain numerical-differentiation error gauge.
    """

    value: float
    uncertainty: float
    step: float
    eps: float


def derivative_probe(m: Model, x0: float, z0: float, eps: float,
                     h: float | None = None,
                     controls: Controls | None = None) -> ProbeResult:
    """Finite-difference probe of the return map's x0-derivative.

    Measures exit_x at x0 +- h and x0 +- 2h through full cycles and
    returns the central difference at step h together with its
    step-doubling uncertainty.  The default step is 1e-4 * |x0|.
    """
    if controls is None:
        controls = Controls()
    if h is None:
        h = 1e-4 * abs(x0)
    if not (0.0 < 2.0 * h < abs(x0)):
        raise PreconditionError(
            f"probe step must satisfy 0 < 2h < |x0|, got h={h}"
        )
    stop = Section(var="z", value=z0, direction=+1, require_x_positive=True)

    def exit_at(x_start: float) -> float:
        traj = integrate_zeta(m, InitialData(x0=x_start, z0=z0, eps=eps),
                              stop, controls)
        return traj.events[-1].x

    p_h = (exit_at(x0 + h) - exit_at(x0 - h)) / (2.0 * h)
    p_2h = (exit_at(x0 + 2.0 * h) - exit_at(x0 - 2.0 * h)) / (4.0 * h)
    return ProbeResult(value=p_h, uncertainty=abs(p_h - p_2h), step=h,
                       eps=eps)


@dataclass(frozen=True)
class GapProfile:
    """Gap |zeta_traj - zeta_minus| between a finite-eps trajectory and
    the attracting slow profile, sampled over x in [x0+delta, x1-delta]."""

    eps: float
    delta: float
    x: np.ndarray
    gap: np.ndarray
    sup: float


def manifold_closeness(m: Model, x0: float, z0: float, eps: float,
                       delta: float, n: int = 512,
                       controls: Controls | None = None) -> GapProfile:
    """Measure |zeta_traj(x) - zeta_minus(x)| on [x0+delta, x1-delta].

    The trajectory starts at (x0, z0); the margin delta keeps the
    comparison away from the fibers at both ends, and must stay below
    a quarter of the room the patch margin leaves at either end.  The
    gap is of size eps * log(1/z0) plus an O(eps) drift.
    """
    if n < 2:
        raise PreconditionError(f"need n >= 2 sample points, got {n}")
    if controls is None:
        controls = Controls()
    sol = solve_exit(m, x0)
    margin = min(-x0, sol.x1) / 8.0   # default patch half-width
    delta_cap = min((-x0 - margin) / 4.0, (sol.x1 - margin) / 4.0)
    if not (0.0 < delta < delta_cap):
        raise PreconditionError(
            f"delta must lie in (0, {delta_cap:.6g}), got {delta}"
        )
    x_stop = sol.x1 - delta

    stop = Section(var="x", value=x_stop, direction=+1)
    traj = integrate_zeta(m, InitialData(x0=x0, z0=z0, eps=eps), stop,
                          controls)

    xs = np.linspace(x0 + delta, x_stop, n)
    zeta_traj = np.interp(xs, traj.x, traj.state)

    def ratio(x: float) -> float:
        return m.g(x, 0.0, 0.0) / m.f(x, 0.0, 0.0)

    # zeta_minus anchored at x0, accumulated panel by panel
    profile = np.empty(n)
    profile[0] = -integrate(ratio, x0, float(xs[0])).value
    for i in range(1, n):
        profile[i] = profile[i - 1] - integrate(ratio, float(xs[i - 1]),
                                                float(xs[i])).value
    gap = np.abs(zeta_traj - profile)
    return GapProfile(eps=eps, delta=delta, x=xs, gap=gap,
                      sup=float(np.max(gap)))
