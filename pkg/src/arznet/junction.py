"""Riemann solvers at road junctions: 1-to-1, 1-to-m diverge, 2-to-1 priority merge.

Couplings conserve mass and the momentum flow q*w.  The incoming Lagrangian
attributes mix at a merge as a flux-weighted convex combination, which makes the
downstream supply depend on the flux split itself; the merge solver resolves
this with a two-step construction (priority-enforced split, then projection
onto the Pareto front of the admissible flux set by clamped fixed points).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import fundamental as fd
from .fundamental import RoadParams, TrafficState
from .rootfind import SolverFailure, bisect

# One branch of a junction: the road's parameters plus the Riemann datum on it.
Branch = tuple[RoadParams, TrafficState]


class InfeasibleFlux(ValueError):
    """Requested boundary flux exceeds the capacity along the attribute curve."""


def flux_tol(scale: float) -> float:
    """Absolute flux tolerance used by all junction fixed points and root finds."""
    return 1e-9 * max(1.0, scale)


def modified_density(out_road: RoadParams, w_in: float, v_out):
    """Density on an outgoing road behind the contact carrying the incoming attribute.

    Intersection of {w = w_in} with {v = v_out}, clamped to vacuum when the
    incoming attribute lies below the outgoing speed.
    """
    arg = np.maximum(0.0, (out_road.gamma / out_road.v_ref) * (np.asarray(w_in) - v_out))
    return out_road.rho_max * arg ** (1.0 / out_road.gamma)


# ---------------------------------------------------------------------------
# Junction topology
# ---------------------------------------------------------------------------

class JunctionKind(str, Enum):
    ONE_TO_ONE = "one_to_one"
    DIVERGE = "diverge"
    MERGE = "merge"


@dataclass(frozen=True)
class JunctionSpec:
    """Topology of a junction: road parameters per branch plus split/priority data."""

    kind: JunctionKind
    incoming: tuple[RoadParams, ...]
    outgoing: tuple[RoadParams, ...]
    alphas: tuple[float, ...] | None = None  # diverge only
    priority: float | None = None            # merge only

    def __post_init__(self):
        n, m = len(self.incoming), len(self.outgoing)
        if self.kind is JunctionKind.ONE_TO_ONE:
            if (n, m) != (1, 1) or self.alphas is not None or self.priority is not None:
                raise ValueError("1-to-1 junction takes one incoming, one outgoing road")
        elif self.kind is JunctionKind.DIVERGE:
            if n != 1 or m < 1:
                raise ValueError("diverge takes one incoming and m >= 1 outgoing roads")
            if self.alphas is None or len(self.alphas) != m:
                raise ValueError("diverge needs one assignment rate per outgoing road")
            if m == 1:
                # single outgoing branch collapses to a 1-to-1 junction
                if self.alphas != (1.0,):
                    raise ValueError("single-outgoing diverge must have alpha = 1")
            else:
                if any(not 0.0 < a < 1.0 for a in self.alphas):
                    raise ValueError(f"assignment rates must lie in ]0,1[, got {self.alphas}")
                if abs(math.fsum(self.alphas) - 1.0) > 1e-9:
                    raise ValueError(f"assignment rates must sum to 1, got {self.alphas}")
        elif self.kind is JunctionKind.MERGE:
            if (n, m) != (2, 1):
                raise ValueError("merge takes two incoming roads and one outgoing road")
            if self.priority is None or not 0.0 < self.priority < 1.0:
                raise ValueError(f"merge priority must lie in ]0,1[, got {self.priority}")


@dataclass(frozen=True)
class JunctionSolution:
    """Fluxes, mixed attributes and admissible boundary states at a junction."""

    q_in: tuple[float, ...]
    q_out: tuple[float, ...]
    w_in: tuple[float, ...]   # attribute advected out of each incoming road
    w_out: tuple[float, ...]  # mixed attribute entering each outgoing road
    boundary_in: tuple[TrafficState, ...]
    boundary_out: tuple[TrafficState, ...]
    ratio: float | None = None  # realized flux ratio q_1/(q_1+q_2), merge only
    case: str | None = None     # merge case tag, diagnostic only


# ---------------------------------------------------------------------------
# Boundary-state reconstruction
# ---------------------------------------------------------------------------

def reconstruct_boundary_state(
    p: RoadParams,
    w: float,
    q: float,
    side: str,
    ref_state: TrafficState,
    bound_active: bool,
) -> TrafficState:
    """Solve rho * (w - p(rho)) = q on the branch dictated by the side and active bound.

    Incoming roads take the congested root unless the demand bound is active;
    outgoing roads take the free-flow root unless the supply bound is active.
    The returned state generates only outward-moving waves against ``ref_state``.
    """
    if side not in ("incoming", "outgoing"):
        raise ValueError(f"side must be 'incoming' or 'outgoing', got {side!r}")
    cap = float(fd.capacity(p, w))
    # small relative slack: iterative flux solves may overshoot capacity by noise
    if q > cap + 1e-6 * max(1.0, cap, q):
        raise InfeasibleFlux(f"flux {q} exceeds capacity {cap} along w={w}")
    # resolve the trace density well below the flux tolerances used downstream
    tol = 1e-13 * max(1.0, cap)
    q = min(q, cap)
    sigma = float(fd.sonic_point(p, w))
    rho_tiny = 1e-12 * max(1.0, p.rho_max)

    def flux(rho):
        return rho * (w - float(fd.pressure(p, rho)))

    if side == "incoming":
        if bound_active:
            rho = ref_state.rho if ref_state.rho <= sigma + rho_tiny else sigma
        else:
            # congested root: flux decreases from capacity at sigma to 0 at p^-1(w)
            rho_jam = float(fd.pressure_inv(p, w)) if w > 0 else 0.0
            rho = bisect(lambda r: flux(r) - q, sigma, max(rho_jam, sigma), tol)
    else:
        rho_t = float(modified_density(p, w, ref_state.v))
        if bound_active:
            rho = rho_t if rho_t > sigma else sigma
        else:
            # free-flow root: flux increases from 0 at vacuum to capacity at sigma
            rho = bisect(lambda r: flux(r) - q, 0.0, sigma, tol) if sigma > 0 else 0.0

    v = max(w - float(fd.pressure(p, rho)), 0.0)
    return TrafficState(rho=rho, v=v)


# ---------------------------------------------------------------------------
# Junctions with a single incoming road
# ---------------------------------------------------------------------------

def solve_one_to_one(incoming: Branch, outgoing: Branch) -> JunctionSolution:
    """Flux-maximizing coupling across a spatial discontinuity (1-to-1 junction)."""
    p1, s1 = incoming
    p2, s2 = outgoing
    w1 = fd.attribute(p1, s1)
    d1 = float(fd.demand(p1, s1.rho, w1))
    rho2_t = float(modified_density(p2, w1, s2.v))
    s2_sup = float(fd.supply(p2, rho2_t, w1))
    q = min(d1, s2_sup)
    tol = flux_tol(max(d1, s2_sup))
    b1 = reconstruct_boundary_state(p1, w1, q, "incoming", s1, abs(q - d1) <= tol)
    b2 = reconstruct_boundary_state(p2, w1, q, "outgoing", s2, abs(q - s2_sup) <= tol)
    return JunctionSolution(
        q_in=(q,), q_out=(q,), w_in=(w1,), w_out=(w1,),
        boundary_in=(b1,), boundary_out=(b2,),
    )


def solve_diverge(
    incoming: Branch, outgoings: Sequence[Branch], alphas: Sequence[float]
) -> JunctionSolution:
    """1-to-m diverge with fixed assignment rates; attribute w_1 enters every branch."""
    if len(outgoings) != len(alphas):
        raise ValueError("one assignment rate per outgoing road is required")
    if any(not 0.0 < a < 1.0 for a in alphas):
        raise ValueError(
            f"degenerate assignment rate in {tuple(alphas)}: collapse to a 1-to-1 junction"
        )
    p1, s1 = incoming
    w1 = fd.attribute(p1, s1)
    d1 = float(fd.demand(p1, s1.rho, w1))
    supplies = []
    for (pj, sj) in outgoings:
        rho_t = float(modified_density(pj, w1, sj.v))
        supplies.append(float(fd.supply(pj, rho_t, w1)))
    q1 = min(d1, min(s / a for s, a in zip(supplies, alphas)))
    q_out = tuple(a * q1 for a in alphas)
    q1 = math.fsum(q_out)  # same additions on both sides: mass balance is exact
    tol = flux_tol(max(d1, *supplies))
    b1 = reconstruct_boundary_state(p1, w1, q1, "incoming", s1, abs(q1 - d1) <= tol)
    b_out = tuple(
        reconstruct_boundary_state(pj, w1, qj, "outgoing", sj, abs(qj - sup) <= tol)
        for (pj, sj), qj, sup in zip(outgoings, q_out, supplies)
    )
    return JunctionSolution(
        q_in=(q1,), q_out=q_out, w_in=(w1,), w_out=(w1,) * len(q_out),
        boundary_in=(b1,), boundary_out=b_out,
    )


# ---------------------------------------------------------------------------
# 2-to-1 merge: supply geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MergeGeometry:
    """Closed-form representation of the merge supply as a function of the flux ratio.

    The downstream supply along the mixed attribute w(p) = w2 + p*dw takes the
    form K * (w(p) + delta)^gamma_exp with coefficients switching at the ratio
    p_hat where w(p) crosses the sonic attribute level of the outgoing road.
    """

    w1: float
    w2: float
    v3: float
    dw: float
    out: RoadParams
    w_split: float                      # attribute level separating the two branches
    free: tuple[float, float, float]    # (K, delta, gamma_exp), capacity branch
    cong: tuple[float, float, float]    # (K, delta, gamma_exp), congested branch
    p_hat: float | None                 # finite iff dw != 0
    p_star: float | None                # stationary ratio of q1(p); None iff dw ~ 0
    p_star2: float | None               # stationary ratio of q2(p); None iff dw ~ 0

    def w_at(self, p: float) -> float:
        return self.w2 + p * self.dw

    def coeffs(self, p: float) -> tuple[float, float, float]:
        return self.free if self.w_at(p) <= self.w_split else self.cong


def attribute_gap_is_zero(w1: float, w2: float) -> bool:
    """Whether w1 - w2 is below the tolerance treating the merge as single-attribute."""
    return abs(w1 - w2) < 1e-12 * max(w1, w2, 1.0)


def merge_geometry(in1: Branch, in2: Branch, out: Branch) -> MergeGeometry:
    """Supply geometry and critical ratios (p_hat, P*, P**) for a 2-to-1 merge."""
    p1, s1 = in1
    p2, s2 = in2
    p3, s3 = out
    w1 = fd.attribute(p1, s1)
    w2 = fd.attribute(p2, s2)
    v3 = s3.v
    dw = w1 - w2
    g3 = p3.gamma
    w_split = (g3 + 1.0) / g3 * v3
    k_free = (g3 / (g3 + 1.0)) ** ((g3 + 1.0) / g3) * p3.rho_max / p3.v_ref ** (1.0 / g3)
    free = (k_free, 0.0, (g3 + 1.0) / g3)
    k_cong = v3 * p3.rho_max * (g3 / p3.v_ref) ** (1.0 / g3)
    cong = (k_cong, -v3, 1.0 / g3)

    if attribute_gap_is_zero(w1, w2):
        p_hat = p_star = p_star2 = None
    else:
        p_hat = (w_split - w2) / dw
        if w2 <= (2.0 * g3 + 1.0) / g3 * v3:
            p_star = -(g3 / (2.0 * g3 + 1.0)) * w2 / dw
        else:
            p_star = -(g3 / (g3 + 1.0)) * (w2 - v3) / dw
        if w1 <= (2.0 * g3 + 1.0) / g3 * v3:
            p_star2 = (1.0 - g3 * (2.0 * w2 - w1) / dw) / (2.0 * g3 + 1.0)
        else:
            p_star2 = (1.0 - g3 * (w2 - v3) / dw) / (g3 + 1.0)

    return MergeGeometry(
        w1=w1, w2=w2, v3=v3, dw=dw, out=p3, w_split=w_split,
        free=free, cong=cong, p_hat=p_hat, p_star=p_star, p_star2=p_star2,
    )


def sigma_tilde(geom: MergeGeometry, p: float) -> float:
    """Downstream supply as a function of the flux ratio p = q1/(q1+q2)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"flux ratio must lie in [0, 1], got {p}")
    return _sigma_tilde_unchecked(geom, p)


def _sigma_tilde_unchecked(geom: MergeGeometry, p: float) -> float:
    k, delta, g = geom.coeffs(p)
    return k * max(geom.w_at(p) + delta, 0.0) ** g


def sigma_tilde_branch_derivative(geom: MergeGeometry, p: float, branch: str) -> float:
    """One-sided derivative of the ratio-parameterized supply on a given branch."""
    k, delta, g = geom.free if branch == "free" else geom.cong
    return k * g * max(geom.w_at(p) + delta, 0.0) ** (g - 1.0) * geom.dw


def _sigma3(geom: MergeGeometry, q1: float, q2: float, p_default: float) -> float:
    """Supply at the flux pair (q1, q2); falls back to the ratio ``p_default`` at zero flux."""
    total = q1 + q2
    p = q1 / total if total > 0 else p_default
    return _sigma_tilde_unchecked(geom, min(max(p, 0.0), 1.0))


# ---------------------------------------------------------------------------
# 2-to-1 merge: fixed points and the two-step solver
# ---------------------------------------------------------------------------

def _clamped_fixed_point(
    geom: MergeGeometry,
    fixed: float,
    fixed_is_q1: bool,
    floor: float,
    cap: float,
    p_default: float,
    tol: float,
) -> float:
    """Solve x = min(cap, max(floor, Sigma3 - fixed)) for the free flux coordinate.

    The fixed coordinate stays at ``fixed`` while x varies on [floor, cap]; the
    supply is re-evaluated at each candidate ratio, so this is the scalar
    reduction of the min/max fixed-point systems of the merge construction.
    """
    floor = max(floor, 0.0)
    if cap <= floor:
        return cap

    def g(x):
        q1, q2 = (fixed, x) if fixed_is_q1 else (x, fixed)
        s3 = _sigma3(geom, q1, q2, p_default)
        return min(cap, max(floor, s3 - fixed)) - x

    g_floor = g(floor)
    if g_floor <= tol:
        return floor
    if g(cap) >= -tol:
        return cap
    return bisect(g, floor, cap, tol)


def fixed_point_ratio(
    geom: MergeGeometry,
    case: str,
    delta1: float,
    delta2: float,
    q1_tilde: float,
    q2_tilde: float,
    q1_star: float | None = None,
    q2_star: float | None = None,
) -> tuple[float, float]:
    """Flux pair solving the min/max system of one merge case.

    Case tags: E1-E3 for the single-attribute-like ("easy") construction,
    H1a/H1b/H2a/H2b/H2c for the attribute-gap construction with the stationary
    ratio of q1 active.  Mirrored cases (positive attribute gap) are handled by
    the caller through index swapping.
    """
    s_scale = max(1.0, delta1, delta2, q1_tilde + q2_tilde)
    # resolve the fixed point well inside the flux tolerance used for comparisons
    tol = 1e-4 * flux_tol(s_scale)
    p_default = q1_tilde / (q1_tilde + q2_tilde) if q1_tilde + q2_tilde > 0 else 0.5

    if case == "E1":
        return q1_tilde, q2_tilde
    if case == "E2":
        q2 = _clamped_fixed_point(geom, delta1, True, q2_tilde, delta2, p_default, tol)
        return delta1, q2
    if case == "E3":
        q1 = _clamped_fixed_point(geom, delta2, False, q1_tilde, delta1, p_default, tol)
        return q1, delta2
    if case == "H1a":
        assert q1_star is not None and q2_star is not None
        return q1_star, q2_star
    if case == "H1b":
        assert q2_star is not None
        q2 = _clamped_fixed_point(geom, delta1, True, q2_star, delta2, p_default, tol)
        return delta1, q2
    if case == "H2a":
        q1 = _clamped_fixed_point(geom, delta2, False, q1_tilde, delta1, p_default, tol)
        return q1, delta2
    if case == "H2b":
        assert q2_star is not None
        if q2_star >= delta2:
            return delta1, delta2
        q2 = _clamped_fixed_point(geom, delta1, True, q2_star, delta2, p_default, tol)
        return delta1, q2
    if case == "H2c":
        q1 = _clamped_fixed_point(geom, delta2, False, q1_tilde, delta1, p_default, tol)
        return q1, delta2
    raise ValueError(f"unknown merge case tag {case!r}")


def _solve_merge_core(
    in1: Branch, in2: Branch, out: Branch, priority: float
) -> tuple[float, float, str, MergeGeometry]:
    """Two-step merge construction for a non-positive attribute gap (w1 <= w2)."""
    p1, s1 = in1
    p2, s2 = in2
    geom = merge_geometry(in1, in2, out)
    delta1 = float(fd.demand(p1, s1.rho, geom.w1))
    delta2 = float(fd.demand(p2, s2.rho, geom.w2))

    # Step 1: the outflow allowed if the priority split were enforced exactly.
    s_p = sigma_tilde(geom, priority)
    f_p = min(delta1 / priority, delta2 / (1.0 - priority), s_p)
    q1_tilde = priority * f_p
    q2_tilde = (1.0 - priority) * f_p
    tol = flux_tol(max(1.0, delta1, delta2, s_p))

    gap_zero = geom.p_star is None
    easy = gap_zero or priority <= geom.p_star

    def binding() -> str:
        if s_p <= f_p + tol:
            return "supply"
        if delta1 / priority <= f_p + tol / priority:
            return "demand1"
        return "demand2"

    if easy:
        case = {"supply": "E1", "demand1": "E2", "demand2": "E3"}[binding()]
        q1, q2 = fixed_point_ratio(geom, case, delta1, delta2, q1_tilde, q2_tilde)
    else:
        s_star = sigma_tilde(geom, geom.p_star)
        q1_star = geom.p_star * s_star
        q2_star = (1.0 - geom.p_star) * s_star
        b = binding()
        if b == "supply" and q2_star <= delta2 + tol:
            case = "H1a" if q1_star <= delta1 + tol else "H1b"
        elif b == "supply":
            case = "H2a"
        elif b == "demand1":
            case = "H2b"
        else:
            case = "H2c"
        q1, q2 = fixed_point_ratio(
            geom, case, delta1, delta2, q1_tilde, q2_tilde, q1_star, q2_star
        )

    return q1, q2, case, geom


def solve_merge(in1: Branch, in2: Branch, out: Branch, priority: float) -> JunctionSolution:
    """Pareto-optimal priority-based Riemann solver for a 2-to-1 merge."""
    if not 0.0 < priority < 1.0:
        raise ValueError(f"merge priority must lie in ]0,1[, got {priority}")
    p1, s1 = in1
    p2, s2 = in2
    p3, s3 = out
    w1 = fd.attribute(p1, s1)
    w2 = fd.attribute(p2, s2)

    if not attribute_gap_is_zero(w1, w2) and w1 > w2:
        # mirrored construction: swap the incoming roads and the priority
        q2, q1, case, _ = _solve_merge_core(in2, in1, out, 1.0 - priority)
        case += "'"
        geom = merge_geometry(in1, in2, out)
    else:
        q1, q2, case, geom = _solve_merge_core(in1, in2, out, priority)

    q3 = q1 + q2
    w_p = w2 + priority * (w1 - w2)
    w_mix = (q1 * w1 + q2 * w2) / q3 if q3 > 0 else w_p
    ratio = q1 / q3 if q3 > 0 else priority

    delta1 = float(fd.demand(p1, s1.rho, w1))
    delta2 = float(fd.demand(p2, s2.rho, w2))
    sigma3 = float(fd.supply(p3, modified_density(p3, w_mix, s3.v), w_mix))
    tol = flux_tol(max(1.0, delta1, delta2, sigma3))
    b1 = reconstruct_boundary_state(p1, w1, q1, "incoming", s1, abs(q1 - delta1) <= tol)
    b2 = reconstruct_boundary_state(p2, w2, q2, "incoming", s2, abs(q2 - delta2) <= tol)
    b3 = reconstruct_boundary_state(p3, w_mix, q3, "outgoing", s3, abs(q3 - sigma3) <= tol)

    return JunctionSolution(
        q_in=(q1, q2), q_out=(q3,), w_in=(w1, w2), w_out=(w_mix,),
        boundary_in=(b1, b2), boundary_out=(b3,), ratio=ratio, case=case,
    )


# ---------------------------------------------------------------------------
# Generic entry point
# ---------------------------------------------------------------------------

def solve(spec: JunctionSpec, states: Sequence[TrafficState]) -> JunctionSolution:
    """Apply the Riemann solver of ``spec`` to one state per branch (incoming first)."""
    n, m = len(spec.incoming), len(spec.outgoing)
    if len(states) != n + m:
        raise ValueError(f"expected {n + m} states, got {len(states)}")
    inc = list(zip(spec.incoming, states[:n]))
    out = list(zip(spec.outgoing, states[n:]))
    if spec.kind is JunctionKind.ONE_TO_ONE:
        return solve_one_to_one(inc[0], out[0])
    if spec.kind is JunctionKind.DIVERGE:
        if len(out) == 1:
            # degenerate assignment: collapse to the 1-to-1 solver
            return solve_one_to_one(inc[0], out[0])
        return solve_diverge(inc[0], out, spec.alphas)
    return solve_merge(inc[0], inc[1], out[0], spec.priority)


# ---------------------------------------------------------------------------
# Admissibility and consistency checks
# ---------------------------------------------------------------------------

@dataclass
class AdmissibilityReport:
    """Wave-speed sign violations of a junction solution, empty when admissible."""

    violations: list[tuple[str, str, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _first_family_speeds(p: RoadParams, w: float, rho_l: float, rho_r: float):
    """Speed range of the first-family wave connecting two states on {w = const}."""
    if abs(rho_r - rho_l) <= 1e-11 * max(1.0, p.rho_max):
        return None
    f_l = rho_l * (w - float(fd.pressure(p, rho_l)))
    f_r = rho_r * (w - float(fd.pressure(p, rho_r)))
    if rho_r > rho_l:  # shock
        s = (f_r - f_l) / (rho_r - rho_l)
        return s, s
    # rarefaction: edge speeds, lambda_1 decreasing in rho
    return float(fd.lambda1(p, rho_l, w)), float(fd.lambda1(p, rho_r, w))


def check_admissibility(
    spec: JunctionSpec, states: Sequence[TrafficState], sol: JunctionSolution
) -> AdmissibilityReport:
    """Verify that all junction-generated waves leave the junction point."""
    n = len(spec.incoming)
    report = AdmissibilityReport()
    for i, (p, s0) in enumerate(zip(spec.incoming, states[:n])):
        tol = 1e-6 * max(1.0, p.v_ref)
        speeds = _first_family_speeds(p, sol.w_in[i], s0.rho, sol.boundary_in[i].rho)
        if speeds is not None and speeds[1] > tol:
            report.violations.append((f"in{i}", "first-family", speeds[1]))
    for j, (p, s0) in enumerate(zip(spec.outgoing, states[n:])):
        tol = 1e-6 * max(1.0, p.v_ref)
        w = sol.w_out[j]
        rho_t = float(modified_density(p, w, s0.v))
        speeds = _first_family_speeds(p, w, sol.boundary_out[j].rho, rho_t)
        if speeds is not None and speeds[0] < -tol:
            report.violations.append((f"out{j}", "first-family", speeds[0]))
        if s0.v < -tol:
            report.violations.append((f"out{j}", "contact", s0.v))
    return report


@dataclass
class ConsistencyReport:
    """Flux deviation when the solver is re-applied to its own boundary states."""

    max_deviation: float
    case: str | None

    def within(self, tol: float) -> bool:
        return self.max_deviation <= tol


def check_consistency(spec: JunctionSpec, states: Sequence[TrafficState]) -> ConsistencyReport:
    """Numerical self-consistency check: solve again from the reconstructed traces."""
    sol = solve(spec, states)
    sol2 = solve(spec, sol.boundary_in + sol.boundary_out)
    dev = max(
        max(abs(a - b) for a, b in zip(sol.q_in, sol2.q_in)),
        max(abs(a - b) for a, b in zip(sol.q_out, sol2.q_out)),
    )
    return ConsistencyReport(max_deviation=dev, case=sol.case)
