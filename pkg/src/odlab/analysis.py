"""Moment summaries, stationary points, sub-domain labels, and timing.

The phase portrait at (C, W) has three interior equilibria: a maximum of H
on the cos(phi) = 1 axis, a saddle above it, and a minimum at phi = pi.
Together with the degenerate e = 0 circle, whose H value is 1 + W/3
everywhere, the saddle level splits the disk into three labeled regions:
libration about the pi-center (SubD1), circulation around the origin
(SubD2), and libration about the low-e center inside the separatrix loop
(SubD3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (CartesianPhaseState, OrbitParams, PolarPhaseState,
                       hamiltonian, hamiltonian_cartesian)
from .errors import DegenerateInputError, InvalidParameterError

__all__ = [
    "MomentSummary",
    "StationaryPoint",
    "TimingLedger",
    "sample_moments",
    "relative_errors",
    "gradient_H",
    "find_stationary_points",
    "classify_subdomain",
    "hamiltonian_grid",
    "contour_polylines",
    "timing_ledger",
]

# ties against a sub-domain boundary level are reported, not assigned
BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class MomentSummary:
    """First two moments per axis at one snapshot time."""

    time: float
    method: str
    mu_phi: float
    sigma_phi: float
    mu_e: float
    sigma_e: float

    def as_array(self) -> np.ndarray:
        return np.array([self.mu_phi, self.sigma_phi, self.mu_e, self.sigma_e])


@dataclass(frozen=True)
class StationaryPoint:
    phi: float
    e: float
    hamiltonian: float
    kind: str  # "center" | "saddle"


@dataclass(frozen=True)
class TimingLedger:
    """Two-part wall-time split of one run."""

    method: str
    t_prop: float
    t_int: float

    @property
    def t_cal(self) -> float:
        return self.t_prop + self.t_int

    @property
    def ratios(self) -> tuple[float, float]:
        total = self.t_cal
        if total <= 0.0:
            return (0.0, 0.0)
        return (self.t_prop / total, self.t_int / total)

    def normalized(self, t_cal_ref: float) -> float:
        """t_cal relative to a reference run (usually the MC case)."""
        return self.t_cal / t_cal_ref


def sample_moments(points: np.ndarray, weights: np.ndarray | None = None, *,
                   method: str = "", time: float = 0.0) -> MomentSummary:
    """Weighted mean and population standard deviation per axis.

    Callers supply phi already wrapped into the scenario branch; no angle
    arithmetic happens here.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise InvalidParameterError("points must have shape (n >= 2, 2)")
    if weights is None:
        mu = pts.mean(axis=0)
        sd = pts.std(axis=0)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(pts),):
            raise InvalidParameterError("weights must match points in length")
        if np.any(w < 0):
            raise InvalidParameterError("weights must be non-negative")
        total = w.sum()
        if total <= 0.0:
            raise DegenerateInputError("weights sum to zero")
        mu = (w[:, None] * pts).sum(axis=0) / total
        sd = np.sqrt((w[:, None] * (pts - mu) ** 2).sum(axis=0) / total)
    return MomentSummary(time=time, method=method,
                         mu_phi=float(mu[0]), sigma_phi=float(sd[0]),
                         mu_e=float(mu[1]), sigma_e=float(sd[1]))


def relative_errors(ref: MomentSummary, test: MomentSummary) -> np.ndarray:
    """|test - ref| / |ref| per component (mu_phi, sigma_phi, mu_e, sigma_e).

    Components with a zero reference value are returned as nan: the
    relative error is undefined there.
    """
    r = ref.as_array()
    t = test.as_array()
    out = np.full(4, np.nan)
    ok = r != 0.0
    out[ok] = np.abs(t[ok] - r[ok]) / np.abs(r[ok])
    return out


# --- Stationary points -------------------------------------------------------


def gradient_H(phi: float, e: float, p: OrbitParams) -> np.ndarray:
    """(dH/dphi, dH/de) of the reduced Hamiltonian."""
    u = math.sqrt(1.0 - e * e)
    return np.array([
        -p.C * e * math.sin(phi),
        -e / u + p.C * math.cos(phi) + p.W * e * u ** -5,
    ])


def _hessian_H(phi: float, e: float, p: OrbitParams) -> np.ndarray:
    u2 = 1.0 - e * e
    u = math.sqrt(u2)
    h_pp = -p.C * e * math.cos(phi)
    h_pe = -p.C * math.sin(phi)
    h_ee = (-1.0 / u - e * e / u ** 3
            + p.W * u ** -5 + 5.0 * p.W * e * e * u ** -7)
    return np.array([[h_pp, h_pe], [h_pe, h_ee]])


_GRAD_TOL = 1e-10
_E_CAP = 0.95  # above this the W term dominates and no equilibria exist


def _newton_refine(phi: float, e: float, p: OrbitParams) -> tuple[float, float] | None:
    for _ in range(60):
        g = gradient_H(phi, e, p)
        if np.linalg.norm(g) <= 1e-14:
            break
        hess = _hessian_H(phi, e, p)
        det = np.linalg.det(hess)
        if abs(det) < 1e-14:
            return None
        step = np.linalg.solve(hess, g)
        # damp so e stays inside the open disk
        lam = 1.0
        for _ in range(40):
            e_new = e - lam * step[1]
            if 1e-6 < e_new < _E_CAP:
                g_new = gradient_H(phi - lam * step[0], e_new, p)
                if np.linalg.norm(g_new) < np.linalg.norm(g) or lam < 1e-3:
                    break
            lam *= 0.5
        else:
            return None
        phi, e = phi - lam * step[0], e_new
    g = gradient_H(phi, e, p)
    if np.linalg.norm(g) > _GRAD_TOL:
        return None
    return phi, e


def find_stationary_points(p: OrbitParams,
                           phi_range: tuple[float, float] = (0.0, 2.0 * math.pi),
                           ) -> tuple[StationaryPoint, ...]:
    """All solutions of grad H = 0 over the closed phi interval.

    Seeds come from local minima of |grad H| on a 400 x 400 grid plus the
    sin(phi) = 0 axes; each seed is polished by damped Newton iteration and
    the results are deduplicated within 1e-8.  Both endpoints of a closed
    2*pi-wide phi interval are kept, matching a portrait drawn on a closed
    rectangle.  e = 0 states are screened with the Cartesian gradient,
    which is regular there.
    """
    if p.C < 0 or p.W < 0:
        raise InvalidParameterError("C and W must be non-negative")
    lo, hi = phi_range
    n = 400
    phis = np.linspace(lo, hi, n)
    es = np.linspace(1e-4, _E_CAP, n)
    pg, eg = np.meshgrid(phis, es, indexing="ij")
    u = np.sqrt(1.0 - eg ** 2)
    g1 = -p.C * eg * np.sin(pg)
    g2 = -eg / u + p.C * np.cos(pg) + p.W * eg * u ** -5
    norm = np.hypot(g1, g2)

    seeds: list[tuple[float, float]] = []
    interior = norm[1:-1, 1:-1]
    is_min = np.ones_like(interior, dtype=bool)
    for dphi in (-1, 0, 1):
        for de in (-1, 0, 1):
            if dphi == 0 and de == 0:
                continue
            shifted = norm[1 + dphi:n - 1 + dphi, 1 + de:n - 1 + de]
            is_min &= interior <= shifted
    for i, j in zip(*np.nonzero(is_min)):
        seeds.append((float(pg[i + 1, j + 1]), float(eg[i + 1, j + 1])))
    # axis seeds: sin(phi) = 0 lines inside the interval
    k0 = math.ceil(lo / math.pi - 1e-12)
    k1 = math.floor(hi / math.pi + 1e-12)
    for k in range(k0, k1 + 1):
        for e0 in (0.2, 0.4, 0.6, 0.8):
            seeds.append((k * math.pi, e0))

    found: list[tuple[float, float]] = []
    for phi0, e0 in seeds:
        res = _newton_refine(phi0, e0, p)
        if res is None:
            continue
        phi, e = res
        if not (lo - 1e-9 <= phi <= hi + 1e-9) or not (0.0 < e < _E_CAP):
            continue
        # reject spurious e -> 0 artifacts: the Cartesian chart is regular
        # at the origin, so require its gradient to vanish too
        cart = CartesianPhaseState(x1=e * math.sin(phi), x2=e * math.cos(phi))
        gc = _cartesian_gradient(cart, p)
        if np.linalg.norm(gc) > _GRAD_TOL:
            continue
        if all(abs(phi - q[0]) > 1e-8 or abs(e - q[1]) > 1e-8 for q in found):
            found.append((phi, e))

    points = []
    for phi, e in sorted(found, key=lambda q: (q[0], q[1])):
        det = np.linalg.det(_hessian_H(phi, e, p))
        kind = "center" if det > 0 else "saddle"
        h = hamiltonian(PolarPhaseState(phi=phi, e=e), p)
        points.append(StationaryPoint(phi=phi, e=e, hamiltonian=h, kind=kind))
    return tuple(points)


def _cartesian_gradient(s: CartesianPhaseState, p: OrbitParams) -> np.ndarray:
    r2 = s.x1 ** 2 + s.x2 ** 2
    u = math.sqrt(1.0 - r2)
    common = -1.0 / u + p.W * u ** -5
    return np.array([s.x1 * common, s.x2 * common + p.C])


# --- Sub-domain classification ----------------------------------------------


def _portrait_levels(points: tuple[StationaryPoint, ...], p: OrbitParams
                     ) -> tuple[float, float, float, float]:
    """(H_min_center, H_zero, H_saddle, H_max_center, e_saddle) bundle."""
    saddles = [q for q in points if q.kind == "saddle"]
    centers = [q for q in points if q.kind == "center"]
    if not saddles or len(centers) < 2:
        raise InvalidParameterError(
            "portrait lacks the saddle / two-center structure needed "
            "for sub-domain labels")
    h_sep = saddles[0].hamiltonian
    e_saddle = saddles[0].e
    h_vals = [q.hamiltonian for q in centers]
    return min(h_vals), 1.0 + p.W / 3.0, h_sep, max(h_vals), e_saddle


def classify_subdomain(s: PolarPhaseState,
                       points: tuple[StationaryPoint, ...],
                       p: OrbitParams) -> str:
    """Label a state SubD1 / SubD2 / SubD3, "boundary", or "outside".

    Labels are constant along trajectories because they depend on the state
    only through the conserved H (plus the e-side of the saddle, which a
    trajectory cannot change without crossing the separatrix):

    - SubD1: H below the degenerate e = 0 level 1 + W/3 (libration about
      the phi = pi center),
    - SubD2: H between the e = 0 level and the saddle level (circulation),
    - SubD3: H between the saddle level and the low-e center's level with
      e on the low side of the saddle (libration inside the separatrix).

    States within BOUNDARY_TOL of any dividing level are reported as
    "boundary" rather than silently assigned.
    """
    h_lo, h_zero, h_sep, h_hi, e_saddle = _portrait_levels(points, p)
    h = hamiltonian(s, p)
    if any(abs(h - lvl) <= BOUNDARY_TOL for lvl in (h_lo, h_zero, h_sep, h_hi)):
        return "boundary"
    if h_lo < h < h_zero:
        return "SubD1"
    if h_zero < h < h_sep:
        return "SubD2"
    if h_sep < h < h_hi and s.e < e_saddle:
        return "SubD3"
    return "outside"


# --- Portrait grids and contours ----------------------------------------------


def hamiltonian_grid(p: OrbitParams, n_phi: int = 400, n_e: int = 400,
                     phi_range: tuple[float, float] = (0.0, 2.0 * math.pi),
                     e_range: tuple[float, float] = (1e-4, 0.95),
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(phis, es, H) with H[i, j] = H(phis[i], es[j])."""
    phis = np.linspace(*phi_range, n_phi)
    es = np.linspace(*e_range, n_e)
    pg, eg = np.meshgrid(phis, es, indexing="ij")
    u2 = 1.0 - eg ** 2
    h = np.sqrt(u2) + p.C * eg * np.cos(pg) + (p.W / 3.0) * u2 ** -1.5
    return phis, es, h


def contour_polylines(phis: np.ndarray, es: np.ndarray, h: np.ndarray,
                      level: float) -> list[np.ndarray]:
    """Marching-squares polylines of {H = level}, each of shape (k, 2).

    Segment endpoints are linearly interpolated on cell edges and chained
    into polylines; closed loops repeat their first vertex at the end.
    """
    above = h >= level

    def edge_point(i0, j0, i1, j1):
        v0, v1 = h[i0, j0], h[i1, j1]
        t = 0.5 if v1 == v0 else (level - v0) / (v1 - v0)
        return (phis[i0] + t * (phis[i1] - phis[i0]),
                es[j0] + t * (es[j1] - es[j0]))

    def edge_key(i0, j0, i1, j1):
        return (i0, j0, i1, j1)

    links: dict[tuple, list[tuple]] = {}
    pts: dict[tuple, tuple] = {}
    for i in range(h.shape[0] - 1):
        for j in range(h.shape[1] - 1):
            corners = (above[i, j], above[i + 1, j],
                       above[i + 1, j + 1], above[i, j + 1])
            idx = (corners[0] | corners[1] << 1
                   | corners[2] << 2 | corners[3] << 3)
            if idx in (0, 15):
                continue
            # edges of a cell: bottom (j fixed), right, top, left
            eb = edge_key(i, j, i + 1, j)
            er = edge_key(i + 1, j, i + 1, j + 1)
            et = edge_key(i, j + 1, i + 1, j + 1)
            el = edge_key(i, j, i, j + 1)
            cut = {
                1: (el, eb), 2: (eb, er), 3: (el, er), 4: (er, et),
                5: None, 6: (eb, et), 7: (el, et), 8: (et, el),
                9: (et, eb), 10: None, 11: (et, er), 12: (er, el),
                13: (er, eb), 14: (eb, el),
            }[idx]
            pairs = []
            if cut is None:
                # ambiguous saddle cell: resolve by center value
                center = 0.25 * (h[i, j] + h[i + 1, j]
                                 + h[i + 1, j + 1] + h[i, j + 1])
                if (center >= level) == corners[0]:
                    pairs = [(el, eb), (er, et)] if idx == 5 else [(eb, er), (et, el)]
                else:
                    pairs = [(el, et), (eb, er)] if idx == 5 else [(eb, el), (er, et)]
            else:
                pairs = [cut]
            for a, b in pairs:
                for k, (i0, j0, i1, j1) in ((a, a), (b, b)):
                    if k not in pts:
                        pts[k] = edge_point(i0, j0, i1, j1)
                links.setdefault(a, []).append(b)
                links.setdefault(b, []).append(a)

    # chain segments into polylines
    visited: set[tuple[tuple, tuple]] = set()
    polylines = []
    for start in list(links):
        for nxt in links[start]:
            if (start, nxt) in visited:
                continue
            chain = [start, nxt]
            visited.add((start, nxt))
            visited.add((nxt, start))
            while True:
                cur, prev = chain[-1], chain[-2]
                ext = [q for q in links[cur]
                       if q != prev and (cur, q) not in visited]
                if not ext:
                    break
                chain.append(ext[0])
                visited.add((cur, ext[0]))
                visited.add((ext[0], cur))
            polylines.append(np.array([pts[k] for k in chain]))
    # longest first so the separatrix loop leads the output
    polylines.sort(key=len, reverse=True)
    return polylines


def timing_ledger(method: str, t_prop: float, t_int: float) -> TimingLedger:
    if t_prop < 0 or t_int < 0:
        raise InvalidParameterError("phase times must be non-negative")
    return TimingLedger(method=method, t_prop=t_prop, t_int=t_int)
