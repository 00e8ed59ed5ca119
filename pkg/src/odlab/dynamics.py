"""Long-term planar dynamics of high area-to-mass-ratio Earth orbits.

Solar radiation pressure and Earth oblateness average to a one-degree-of-
freedom system in the solar angle phi (angle between the orbit's perigee
direction and the Sun line) and the eccentricity e.  Two dimensionless
strengths drive everything: C for radiation pressure and W for oblateness.
Time is measured in years with the Sun's apparent mean motion n_sun = 2*pi
per year, so rates are scaled by n_sun throughout.

The polar chart (phi, e) is singular at e = 0; the Cartesian chart
x1 = e*sin(phi), x2 = e*cos(phi) is regular on the open unit disk and is
what the integrators use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidParameterError, SingularityError

TWO_PI = 2.0 * math.pi

# Radius beyond which states are clamped back onto the disk (see odeint).
DISK_EDGE_R2 = 1.0 - 1e-9


@dataclass(frozen=True)
class PhysicalConstants:
    """Environment constants in km / kg / s units.

    solar_flux is the radiation flux at 1 AU in W/m^2, which equals kg/s^3
    and therefore combines with km-based quantities without conversion
    (the length powers cancel in the radiation-strength formula).
    n_sun_phys is the Sun's apparent mean motion in rad/s (2*pi per year).
    """

    mu: float = 398600.4418            # km^3/s^2
    earth_radius: float = 6378.137     # km
    j2: float = 1.08263e-3
    light_speed: float = 299792.458    # km/s
    solar_flux: float = 1361.0         # W/m^2 == kg/s^3
    n_sun_phys: float = TWO_PI / (365.25 * 86400.0)  # rad/s

    def __post_init__(self):
        vals = (self.mu, self.earth_radius, self.j2, self.light_speed,
                self.solar_flux, self.n_sun_phys)
        if not all(math.isfinite(v) and v > 0.0 for v in vals):
            raise InvalidParameterError("all physical constants must be finite and positive")


DEFAULT_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class OrbitParams:
    """Dimensionless dynamics parameters for one semi-major axis.

    C scales the radiation-pressure terms, W the oblateness term; n_sun is
    the angular rate unit (2*pi per year in the default time scale).
    """

    C: float
    W: float
    n_sun: float = TWO_PI

    def __post_init__(self):
        if not (math.isfinite(self.C) and math.isfinite(self.W) and math.isfinite(self.n_sun)):
            raise InvalidParameterError("C, W, n_sun must be finite")
        if self.C < 0.0 or self.W < 0.0:
            raise InvalidParameterError("C and W must be non-negative")
        if self.n_sun <= 0.0:
            raise InvalidParameterError("n_sun must be positive")


@dataclass(frozen=True)
class PolarPhaseState:
    """(solar angle phi [rad], eccentricity e), 0 <= e < 1."""

    phi: float
    e: float

    def __post_init__(self):
        if not (math.isfinite(self.phi) and math.isfinite(self.e)):
            raise DomainError("phi and e must be finite")
        if not (0.0 <= self.e < 1.0):
            raise DomainError(f"eccentricity {self.e} outside [0, 1)")


@dataclass(frozen=True)
class CartesianPhaseState:
    """(x1, x2) = (e sin phi, e cos phi) on the open unit disk."""

    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise DomainError("x1 and x2 must be finite")
        if self.x1 * self.x1 + self.x2 * self.x2 >= 1.0:
            raise DomainError("state outside the open unit disk (e >= 1)")


def compute_CW(a: float, area_to_mass: float,
               constants: PhysicalConstants = DEFAULT_CONSTANTS) -> OrbitParams:
    """Dimensionless strengths for semi-major axis a [km] and the effective
    area-to-mass ratio area_to_mass [km^2/kg] (reflectivity already folded in).

    C = (3/2) * sigma * n_s / n_sun with sigma = flux * a^2 * tau / (mu * c),
    W = (3/2) * J2 * (R_E / a)^2 * n_s / n_sun, where n_s = sqrt(mu / a^3)
    is the orbital mean motion.  The returned params use n_sun = 2*pi (per
    year), consistent with integrating in years.
    """
    if not (math.isfinite(a) and a > 0.0):
        raise InvalidParameterError("semi-major axis must be finite and positive")
    if not (math.isfinite(area_to_mass) and area_to_mass >= 0.0):
        raise InvalidParameterError("area-to-mass ratio must be finite and non-negative")
    n_s = math.sqrt(constants.mu / a ** 3)
    ratio = n_s / constants.n_sun_phys
    sigma = constants.solar_flux * a * a * area_to_mass / (constants.mu * constants.light_speed)
    c_val = 1.5 * sigma * ratio
    w_val = 1.5 * constants.j2 * (constants.earth_radius / a) ** 2 * ratio
    return OrbitParams(C=c_val, W=w_val)


def area_to_mass_for_C(a: float, C: float,
                       constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Invert compute_CW: the area-to-mass ratio [km^2/kg] that yields C at a."""
    if not (math.isfinite(C) and C >= 0.0):
        raise InvalidParameterError("C must be finite and non-negative")
    n_s = math.sqrt(constants.mu / a ** 3)
    sigma = C * constants.n_sun_phys / (1.5 * n_s)
    return sigma * constants.mu * constants.light_speed / (constants.solar_flux * a * a)


def critical_eccentricity(a: float,
                          constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Eccentricity at which perigee reaches the Earth's surface: 1 - R_E/a."""
    if a <= constants.earth_radius:
        raise InvalidParameterError("semi-major axis must exceed the Earth radius")
    return 1.0 - constants.earth_radius / a


# --- charts -----------------------------------------------------------------


def wrap_angle(phi, start: float = 0.0):
    """Wrap angle(s) into [start, start + 2*pi)."""
    w = phi - TWO_PI * np.floor((phi - start) / TWO_PI)
    # rounding can land exactly on the excluded upper edge (e.g. a tiny
    # negative phi with start 0); fold it back onto the lower edge
    return np.where(w >= start + TWO_PI, start, w) if np.ndim(w) else \
        (start if w >= start + TWO_PI else w)


def to_cartesian(s: PolarPhaseState) -> CartesianPhaseState:
    return CartesianPhaseState(s.e * math.sin(s.phi), s.e * math.cos(s.phi))


def to_polar(s: CartesianPhaseState, branch_start: float = 0.0) -> PolarPhaseState:
    """Inverse chart; phi reported in [branch_start, branch_start + 2*pi)."""
    e = math.hypot(s.x1, s.x2)
    phi = math.atan2(s.x1, s.x2)
    return PolarPhaseState(float(wrap_angle(phi, branch_start)), e)


# --- rates and invariants ----------------------------------------------------


def eom_polar(s: PolarPhaseState, p: OrbitParams) -> tuple[float, float]:
    """(dphi/dt, de/dt) in the polar chart.  Singular at e = 0."""
    if s.e == 0.0:
        raise SingularityError("polar rates are singular at e = 0")
    u = math.sqrt(1.0 - s.e * s.e)
    dedt = p.n_sun * p.C * u * math.sin(s.phi)
    dphidt = p.n_sun * (p.C * u * math.cos(s.phi) / s.e
                        + p.W / (1.0 - s.e * s.e) ** 2 - 1.0)
    return dphidt, dedt


def eom_cartesian(s: CartesianPhaseState, p: OrbitParams) -> tuple[float, float]:
    """(dx1/dt, dx2/dt); smooth on the whole open unit disk."""
    r2 = s.x1 * s.x1 + s.x2 * s.x2
    u = math.sqrt(1.0 - r2)
    g = p.W / ((1.0 - r2) * (1.0 - r2)) - 1.0
    v1 = p.n_sun * (p.C * u + s.x2 * g)
    v2 = -p.n_sun * s.x1 * g
    return v1, v2


def hamiltonian(s: PolarPhaseState, p: OrbitParams) -> float:
    """Conserved quantity sqrt(1-e^2) + C e cos(phi) + (W/3)(1-e^2)^(-3/2)."""
    u2 = 1.0 - s.e * s.e
    return math.sqrt(u2) + p.C * s.e * math.cos(s.phi) + (p.W / 3.0) * u2 ** -1.5


def hamiltonian_cartesian(s: CartesianPhaseState, p: OrbitParams) -> float:
    u2 = 1.0 - (s.x1 * s.x1 + s.x2 * s.x2)
    return math.sqrt(u2) + p.C * s.x2 + (p.W / 3.0) * u2 ** -1.5


def density_log_rate(s: CartesianPhaseState, p: OrbitParams) -> float:
    """d(ln n)/dt along a trajectory, n the phase-space density in (x1, x2).

    Equals minus the velocity divergence; the oblateness terms cancel
    exactly, so the rate is independent of W.
    """
    r2 = s.x1 * s.x1 + s.x2 * s.x2
    return p.n_sun * p.C * s.x1 / math.sqrt(1.0 - r2)


# --- vectorized field builders (used by the integrators) ---------------------


def _rates_arrays(x1: np.ndarray, x2: np.ndarray, p: OrbitParams):
    """Vectorized Cartesian rates with the radius clipped to the disk edge.

    Trial stages of an adaptive step may momentarily leave the disk; clipping
    keeps the evaluation finite there.  Accepted states are clamped and
    flagged by the integrator itself.
    """
    r2 = np.minimum(x1 * x1 + x2 * x2, DISK_EDGE_R2)
    one_m = 1.0 - r2
    u = np.sqrt(one_m)
    g = p.W / (one_m * one_m) - 1.0
    v1 = p.n_sun * (p.C * u + x2 * g)
    v2 = -p.n_sun * x1 * g
    return v1, v2, r2, u, g


def cartesian_field(p: OrbitParams):
    """field(t, Y) -> dY/dt for Y of shape (n, 2) holding (x1, x2)."""

    def field(t, y):
        v1, v2, _, _, _ = _rates_arrays(y[..., 0], y[..., 1], p)
        return np.stack((v1, v2), axis=-1)

    return field


def characteristic_field(p: OrbitParams):
    """field for (x1, x2, ln n): transports log-density along trajectories."""

    def field(t, y):
        x1 = y[..., 0]
        v1, v2, _, u, _ = _rates_arrays(x1, y[..., 1], p)
        vll = p.n_sun * p.C * x1 / u
        return np.stack((v1, v2, vll), axis=-1)

    return field


def angle_tracking_field(p: OrbitParams):
    """field for (x1, x2, theta) where theta integrates dphi/dt continuously.

    theta equals the solar angle unwrapped along the trajectory (no 2*pi
    jumps), which makes multi-revolution motion unambiguous.  Undefined at
    e = 0, like the polar chart.
    """

    def field(t, y):
        x1, x2 = y[..., 0], y[..., 1]
        v1, v2, r2, u, g = _rates_arrays(x1, x2, p)
        vth = p.n_sun * p.C * u * x2 / r2 + p.n_sun * g
        return np.stack((v1, v2, vth), axis=-1)

    return field
