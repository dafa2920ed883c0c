"""Per-road fundamental-diagram quantities for the ARZ second-order model.

Each road carries a power-law pressure p(rho) = (v_ref/gamma) * (rho/rho_max)^gamma
that defines the Lagrangian attribute w = v + p(rho).  Along a curve of constant
attribute {w = c} the flux q(rho) = (c - p(rho)) * rho is strictly concave with a
unique maximizer (the sonic density), which splits the curve into the demand and
supply branches used by all junction couplings.

All functions accept scalars or numpy arrays for the density/attribute arguments.
Units are fixed: density in veh/km, speed in km/h, flux in veh/h.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Densities below this threshold are treated as vacuum; the speed of a vacuum
# state recovered from conservative variables is reported as v_ref.
VACUUM_RHO = 1e-10


@dataclass(frozen=True)
class RoadParams:
    """Fundamental-diagram parameters of a single road."""

    rho_max: float  # maximal density [veh/km]
    v_ref: float    # reference speed [km/h]
    gamma: float    # pressure exponent [-]

    def __post_init__(self):
        if not (self.rho_max > 0 and self.v_ref > 0 and self.gamma > 0):
            raise ValueError(
                f"road parameters must be strictly positive, got "
                f"rho_max={self.rho_max}, v_ref={self.v_ref}, gamma={self.gamma}"
            )


@dataclass(frozen=True)
class TrafficState:
    """Primitive traffic state (density, speed)."""

    rho: float  # [veh/km]
    v: float    # [km/h]

    def __post_init__(self):
        if self.rho < 0 or self.v < 0:
            raise ValueError(f"invalid state rho={self.rho}, v={self.v}")


def _check_nonneg(x, name):
    if np.any(np.asarray(x) < 0):
        raise ValueError(f"{name} must be non-negative, got {x}")


def pressure(p: RoadParams, rho):
    """Pressure p(rho) = (v_ref/gamma) * (rho/rho_max)^gamma."""
    _check_nonneg(rho, "rho")
    return (p.v_ref / p.gamma) * (np.asarray(rho) / p.rho_max) ** p.gamma


def pressure_inv(p: RoadParams, val):
    """Density at which the pressure equals ``val``."""
    _check_nonneg(val, "pressure value")
    return p.rho_max * (p.gamma * np.asarray(val) / p.v_ref) ** (1.0 / p.gamma)


def sonic_point(p: RoadParams, c):
    """Density maximizing the flux (c - p(rho)) * rho along {w = c}."""
    _check_nonneg(c, "attribute")
    return p.rho_max * (np.asarray(c) * p.gamma / (p.v_ref * (1.0 + p.gamma))) ** (
        1.0 / p.gamma
    )


def capacity(p: RoadParams, c):
    """Maximal flux along {w = c}, attained at the sonic density."""
    sigma = sonic_point(p, c)
    # p(sigma(c)) = c / (1 + gamma) for the power-law pressure
    return (np.asarray(c) * p.gamma / (1.0 + p.gamma)) * sigma


def demand(p: RoadParams, rho, c):
    """Maximal flux the road can send downstream from density ``rho`` at attribute ``c``."""
    _check_nonneg(rho, "rho")
    _check_nonneg(c, "attribute")
    rho = np.asarray(rho, dtype=float)
    sigma = sonic_point(p, c)
    free = (np.asarray(c) - pressure(p, rho)) * rho
    return np.maximum(np.where(rho <= sigma, free, capacity(p, c)), 0.0)


def supply(p: RoadParams, rho, c):
    """Maximal flux the road can accept at density ``rho`` and attribute ``c``."""
    _check_nonneg(rho, "rho")
    _check_nonneg(c, "attribute")
    rho = np.asarray(rho, dtype=float)
    sigma = sonic_point(p, c)
    congested = (np.asarray(c) - pressure(p, rho)) * rho
    # densities beyond the zero-speed point can accept nothing, not a negative flux
    return np.maximum(np.where(rho <= sigma, capacity(p, c), congested), 0.0)


def eigenvalues(p: RoadParams, s: TrafficState):
    """Characteristic speeds (lambda_1, lambda_2) = (v - rho p'(rho), v)."""
    # rho * p'(rho) = gamma * p(rho) for the power-law pressure
    lam1 = s.v - p.gamma * float(pressure(p, s.rho))
    return lam1, s.v


def lambda1(p: RoadParams, rho, c):
    """First characteristic speed along {w = c}: c - (1 + gamma) p(rho)."""
    return np.asarray(c) - (1.0 + p.gamma) * pressure(p, rho)


def attribute(p: RoadParams, s: TrafficState) -> float:
    """Lagrangian attribute w = v + p(rho) of a state."""
    return s.v + float(pressure(p, s.rho))


def to_conservative(p: RoadParams, s: TrafficState) -> tuple[float, float]:
    """Conservative pair (rho, y) with y = rho * w."""
    return s.rho, s.rho * attribute(p, s)


def from_conservative(p: RoadParams, rho: float, y: float) -> TrafficState:
    """Primitive state from the conservative pair; vacuum reports v = v_ref."""
    if rho < VACUUM_RHO:
        return TrafficState(rho=max(rho, 0.0), v=p.v_ref)
    v = y / rho - float(pressure(p, rho))
    return TrafficState(rho=rho, v=max(v, 0.0))


def equilibrium_speed(p: RoadParams, rho):
    """Greenshields equilibrium speed V(rho) = v_ref * (1 - rho/rho_max)."""
    return p.v_ref * (1.0 - np.asarray(rho) / p.rho_max)


def equilibrium_density(p: RoadParams, q: float) -> float:
    """Free-flow density realizing the flux rho * V(rho) = q on the equilibrium curve."""
    _check_nonneg(q, "flux")
    q_cap = p.v_ref * p.rho_max / 4.0
    if q > q_cap:
        raise ValueError(f"flux {q} exceeds the equilibrium capacity {q_cap}")
    return 0.5 * (p.rho_max - np.sqrt(p.rho_max**2 - 4.0 * p.rho_max * q / p.v_ref))


def equilibrium_state(p: RoadParams, rho: float) -> TrafficState:
    """State on the equilibrium curve at density ``rho``."""
    return TrafficState(rho=rho, v=float(equilibrium_speed(p, rho)))
