"""Gaussian-mixture propagation with the unscented transformation.

The initial Gaussian is split once, along the solar-angle direction, using
a precomputed univariate library that approximates the standard normal by
N equally spaced, equal-variance components.  Each component is then
carried through the flow by 2*Nvar+1 sigma points and re-assembled into
mixture moments per snapshot; component weights stay constant.

The univariate library is built here by minimizing the closed-form L2
distance between the mixture and the standard normal over the spacing and
the shared standard deviation, with the weights given by a small
equality/non-negativity constrained quadratic solve.  The pure L2 problem
is degenerate (sigma -> 1 with a single surviving weight is exact), so a
small sigma^2 penalty steers the optimum toward genuinely narrower
components; the penalty is weak enough that the library quality targets
hold with two decades of margin.
"""

from __future__ import annotations

import csv
import math
import time as _time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .dynamics import TWO_PI, angle_tracking_field, wrap_angle
from .errors import (InvalidParameterError, InvalidScalingError,
                     LibraryQualityError, PropagationError)
from .histogram import BinGrid, JointDensityGrid, MarginalDensity, make_edges
from .odeint import integrate_batch
from .scenarios import ScenarioConfig
from .stochastics import Gaussian2D, eig_sym2, pdf_gaussian2d, sqrt_spd2

_SQRT2PI = math.sqrt(2.0 * math.pi)
# sigma^2 penalty weight: strong enough to pull the optimum away from the
# degenerate sigma = 1 solution, weak enough that the mixture's second
# moment stays within 1e-2 of unity (1e-4 overshoots that bound at N = 3)
_SIGMA_PENALTY = 1e-5


# --- univariate split library ---------------------------------------------


@dataclass(frozen=True)
class SplitLibrary1D:
    """Means, weights, and the shared sigma splitting a standard normal."""

    means: np.ndarray
    weights: np.ndarray
    sigma: float

    @property
    def n(self) -> int:
        return len(self.means)

    def l2_distance(self) -> float:
        return math.sqrt(max(_l2_sq(self.weights, self.means, self.sigma), 0.0))


def _norm_pdf(x, sigma2):
    return np.exp(-0.5 * x * x / sigma2) / (_SQRT2PI * math.sqrt(sigma2))


def _l2_sq(w, m, sigma):
    """Closed-form squared L2 distance between the mixture and N(0,1)."""
    a = _norm_pdf(m[:, None] - m[None, :], 2.0 * sigma * sigma)
    b = _norm_pdf(m, 1.0 + sigma * sigma)
    c = 1.0 / (2.0 * math.sqrt(math.pi))
    return float(w @ a @ w - 2.0 * b @ w + c)


def _solve_weights(m: np.ndarray, sigma: float):
    """min w'Aw - 2b'w  s.t.  sum w = 1, w >= 0  (small active-set solve)."""
    n = len(m)
    a = _norm_pdf(m[:, None] - m[None, :], 2.0 * sigma * sigma)
    a = a + 1e-13 * np.eye(n)
    b = _norm_pdf(m, 1.0 + sigma * sigma)
    support = np.ones(n, dtype=bool)
    w = np.zeros(n)
    for _ in range(3 * n + 10):
        idx = np.nonzero(support)[0]
        k = len(idx)
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = 2.0 * a[np.ix_(idx, idx)]
        kkt[:k, k] = 1.0
        kkt[k, :k] = 1.0
        rhs = np.concatenate([2.0 * b[idx], [1.0]])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
        wk, nu = sol[:k], sol[k]
        if wk.min() < -1e-12:
            support[idx[np.argmin(wk)]] = False
            continue
        w = np.zeros(n)
        w[idx] = np.maximum(wk, 0.0)
        # dual feasibility of the dropped components
        grad = 2.0 * (a @ w - b) + nu
        off = ~support
        if np.any(off) and grad[off].min() < -1e-10:
            cand = np.nonzero(off)[0]
            support[cand[np.argmin(grad[off])]] = True
            continue
        break
    total = w.sum()
    if total <= 0:
        raise LibraryQualityError("weight solve collapsed", l2_distance=math.inf)
    return w / total


def _symmetric_means(n: int, spacing: float) -> np.ndarray:
    return spacing * (np.arange(1, n + 1) - (n + 1) / 2.0)


def build_split_library(n_1d: int, sigma_penalty: float = _SIGMA_PENALTY
                        ) -> SplitLibrary1D:
    """Split N(0,1) into n_1d equally spaced, equal-sigma components.

    Deterministic for given arguments; results are memoized.
    """
    if n_1d < 1 or n_1d > 39 or n_1d % 2 == 0:
        raise InvalidParameterError("component count must be odd and in [1, 39]")
    if n_1d == 1:
        return SplitLibrary1D(means=np.zeros(1), weights=np.ones(1), sigma=1.0)
    cached = _LIBRARY_CACHE.get((n_1d, sigma_penalty))
    if cached is not None:
        return cached

    def objective(params):
        log_sigma, log_spacing = params
        sigma = math.exp(log_sigma)
        spacing = math.exp(log_spacing)
        m = _symmetric_means(n_1d, spacing)
        try:
            w = _solve_weights(m, sigma)
        except LibraryQualityError:
            return 1e6
        return _l2_sq(w, m, sigma) + sigma_penalty * sigma * sigma

    # coarse scan, then local refinement
    best = None
    span = 7.0 / (n_1d - 1)
    for sigma in np.geomspace(0.05, 0.9, 12):
        for spacing in np.geomspace(0.3 * span, 2.5 * span, 12):
            p = (math.log(sigma), math.log(spacing))
            val = objective(p)
            if best is None or val < best[0]:
                best = (val, p)
    res = minimize(objective, best[1], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
    sigma = math.exp(res.x[0])
    spacing = math.exp(res.x[1])
    means = _symmetric_means(n_1d, spacing)
    weights = _solve_weights(means, sigma)
    weights = 0.5 * (weights + weights[::-1])  # enforce exact mirror symmetry
    weights = weights / weights.sum()
    lib = SplitLibrary1D(means=means, weights=weights, sigma=sigma)
    validate_library(lib)
    _LIBRARY_CACHE[(n_1d, sigma_penalty)] = lib
    return lib


_LIBRARY_CACHE: dict[tuple[int, float], SplitLibrary1D] = {}


def validate_library(lib: SplitLibrary1D) -> None:
    """Check the mixture invariants; raise LibraryQualityError on failure."""
    w, m, s = lib.weights, lib.means, lib.sigma
    l2 = lib.l2_distance()
    problems = []
    if abs(w.sum() - 1.0) > 1e-12:
        problems.append("weights do not sum to 1")
    if np.any(w <= 0.0) or np.any(w > 1.0):
        problems.append("weights outside (0, 1]")
    if np.max(np.abs(m + m[::-1])) > 1e-10:
        problems.append("means not antisymmetric")
    if np.max(np.abs(w - w[::-1])) > 1e-12:
        problems.append("weights not symmetric")
    if abs(float(w @ m)) > 1e-10:
        problems.append("first moment nonzero")
    if abs(float(w @ (s * s + m * m)) - 1.0) > 1e-2:
        problems.append("second moment off by more than 1e-2")
    if problems:
        raise LibraryQualityError("; ".join(problems), l2_distance=l2)


def save_split_library(lib: SplitLibrary1D, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# sigma = {lib.sigma!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["index", "mean", "weight"])
        for i, (m, w) in enumerate(zip(lib.means, lib.weights), start=1):
            writer.writerow([i, repr(float(m)), repr(float(w))])


def load_split_library(path) -> SplitLibrary1D:
    """Read a library written by save_split_library (or an external one)."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#") or "sigma" not in first:
            raise InvalidParameterError("library file lacks the sigma header")
        sigma = float(first.split("=", 1)[1])
        rows = list(csv.reader(fh))
    body = [r for r in rows if r and r[0].strip().lower() != "index"]
    means = np.array([float(r[1]) for r in body])
    weights = np.array([float(r[2]) for r in body])
    lib = SplitLibrary1D(means=means, weights=weights, sigma=sigma)
    validate_library(lib)
    return lib


# --- mixtures ---------------------------------------------------------------


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class GaussianMixture:
    components: tuple[GaussianComponent, ...]

    @property
    def n(self) -> int:
        return len(self.components)

    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])

    def covs(self) -> np.ndarray:
        return np.array([c.cov for c in self.components])


def split_gaussian(g: Gaussian2D, lib: SplitLibrary1D, direction: int
                   ) -> GaussianMixture:
    """Split a 2-D Gaussian along the eigenvector nearest coordinate axis
    `direction` (1-based), replacing that eigenvalue by sigma^2 times itself.
    """
    if direction not in (1, 2):
        raise InvalidParameterError("direction must be 1 or 2")
    evals, evecs = eig_sym2(g.cov)
    j = int(np.argmax(np.abs(evecs[direction - 1, :])))
    lam = evals[j]
    v = evecs[:, j]
    scaled = evals.copy()
    scaled[j] = lib.sigma ** 2 * lam
    cov_i = evecs @ np.diag(scaled) @ evecs.T
    cov_i = 0.5 * (cov_i + cov_i.T)
    comps = tuple(
        GaussianComponent(weight=float(w),
                          mean=g.mean + math.sqrt(lam) * float(m) * v,
                          cov=cov_i)
        for w, m in zip(lib.weights, lib.means))
    return GaussianMixture(components=comps)


def merge_moments(mix: GaussianMixture) -> tuple[np.ndarray, np.ndarray]:
    """Overall mean and covariance of a mixture."""
    w = mix.weights()
    total = w.sum()
    if total <= 0:
        raise InvalidParameterError("mixture weights sum to zero")
    w = w / total
    means = mix.means()
    covs = mix.covs()
    m_c = w @ means
    second = np.einsum("k,kij->ij", w, covs + np.einsum("ki,kj->kij", means, means))
    p_c = second - np.outer(m_c, m_c)
    return m_c, 0.5 * (p_c + p_c.T)


def mixture_pdf(mix: GaussianMixture, query: np.ndarray) -> np.ndarray | float:
    """Joint mixture density at query point(s) of shape (..., 2)."""
    q = np.asarray(query, dtype=float)
    out = None
    for c in mix.components:
        term = c.weight * pdf_gaussian2d(Gaussian2D(mean=c.mean, cov=c.cov), q)
        out = term if out is None else out + term
    if np.ndim(out) == 0:
        return float(out)
    return out


def mixture_marginal(mix: GaussianMixture, axis: int, query) -> np.ndarray | float:
    """1-D mixture marginal along axis (1-based) at scalar or array query."""
    if axis not in (1, 2):
        raise InvalidParameterError("axis must be 1 or 2")
    i = axis - 1
    q = np.asarray(query, dtype=float)
    out = np.zeros_like(q, dtype=float)
    for c in mix.components:
        var = c.cov[i, i]
        out = out + c.weight * np.exp(-0.5 * (q - c.mean[i]) ** 2 / var) \
            / (_SQRT2PI * math.sqrt(var))
    if np.ndim(query) == 0:
        return float(out)
    return out


# --- unscented transformation -------------------------------------------------


@dataclass(frozen=True)
class UTConfig:
    alpha: float = 0.8
    beta: float = 0.0
    eta: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise InvalidScalingError("alpha must lie in (0, 1]")

    def zeta(self, nvar: int) -> float:
        return self.alpha ** 2 * (nvar + self.beta) - nvar


def ut_weights(cfg: UTConfig, nvar: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance weights for the 2*nvar+1 symmetric point set."""
    if nvar < 1:
        raise InvalidScalingError("nvar must be >= 1")
    zeta = cfg.zeta(nvar)
    denom = nvar + zeta
    if denom <= 0.0:
        raise InvalidScalingError("nvar + zeta must be positive")
    w_m = np.full(2 * nvar + 1, 1.0 / (2.0 * denom))
    w_p = w_m.copy()
    w_m[0] = zeta / denom
    w_p[0] = zeta / denom + 1.0 - cfg.alpha ** 2 + cfg.eta
    return w_m, w_p


def sigma_points(mean: np.ndarray, cov: np.ndarray, cfg: UTConfig) -> np.ndarray:
    """The symmetric scaled sigma-point set: center, then +columns, then -."""
    mean = np.asarray(mean, dtype=float)
    nvar = len(mean)
    zeta = cfg.zeta(nvar)
    denom = nvar + zeta
    if denom <= 0.0:
        raise InvalidScalingError("nvar + zeta must be positive")
    chol = sqrt_spd2(np.asarray(cov, dtype=float))
    offsets = math.sqrt(denom) * chol.T  # row i = scaled column i of chol
    return np.vstack([mean[None, :], mean + offsets, mean - offsets])


def ut_transform(points: np.ndarray, cfg: UTConfig) -> tuple[np.ndarray, np.ndarray]:
    """Weighted mean/covariance of transformed sigma points."""
    pts = np.asarray(points, dtype=float)
    if not np.all(np.isfinite(pts)):
        raise PropagationError("sigma points contain non-finite values")
    npts, dim = pts.shape
    if npts % 2 != 1:
        raise InvalidParameterError("expected 2*nvar+1 sigma points")
    nvar = (npts - 1) // 2
    w_m, w_p = ut_weights(cfg, nvar)
    mean = w_m @ pts
    dev = pts - mean
    cov = (w_p[:, None] * dev).T @ dev
    return mean, 0.5 * (cov + cov.T)


# --- end-to-end mixture propagation -------------------------------------------


@dataclass(frozen=True)
class GmmSnapshot:
    """Mixture state at one snapshot time, plus densities on a grid."""

    time: float
    mixture: GaussianMixture
    mean: np.ndarray
    cov: np.ndarray
    joint: JointDensityGrid
    marginal_phi: MarginalDensity
    marginal_e: MarginalDensity


@dataclass(frozen=True)
class GmmRunResult:
    scenario: ScenarioConfig
    snapshots: tuple[GmmSnapshot, ...]
    t_propagation: float
    t_evaluation: float
    n_sigma_points: int
    clamped: int

    @property
    def t_total(self) -> float:
        return self.t_propagation + self.t_evaluation


def _component_snapshot_moments(states, thetas, cfg_ut):
    """Per-component UT in (phi, e) with branch-free angle reconstruction.

    The tracked angle of the center point selects the 2*pi sheet; every
    sigma point is placed on the sheet closest to its center so the local
    covariance never straddles a wrap.
    """
    x1, x2 = states[:, 0], states[:, 1]
    raw = np.arctan2(x1, x2)
    center_theta = thetas[0]
    phi = raw + TWO_PI * np.round((center_theta - raw) / TWO_PI)
    ecc = np.hypot(x1, x2)
    return ut_transform(np.column_stack([phi, ecc]), cfg_ut)


def density_grid_for_mixture(mix: GaussianMixture, grid: BinGrid, *,
                             time: float = 0.0,
                             labels=("phi", "e")) -> JointDensityGrid:
    """Mixture joint density sampled at bin centers."""
    cx, cy = np.meshgrid(grid.centers1, grid.centers2, indexing="ij")
    pts = np.stack([cx, cy], axis=-1)
    values = mixture_pdf(mix, pts)
    return JointDensityGrid(grid=grid, values=values, method="GMM-UT",
                            time=time, labels=labels)


def _marginal_for_mixture(mix, grid, axis, time, labels):
    centers = grid.centers1 if axis == 1 else grid.centers2
    wid = grid.width1 if axis == 1 else grid.width2
    values = mixture_marginal(mix, axis, centers)
    return MarginalDensity(axis=axis, centers=centers, values=values,
                           width=wid, method="GMM-UT", time=time,
                           label=labels[axis - 1])


def _default_grid(mix: GaussianMixture, n1: int, n2: int) -> BinGrid:
    """Bins covering +-6 sigma of every component."""
    means = mix.means()
    sds = np.sqrt(np.array([[c.cov[0, 0], c.cov[1, 1]] for c in mix.components]))
    lo = (means - 6.0 * sds).min(axis=0)
    hi = (means + 6.0 * sds).max(axis=0)
    corners = np.array([lo, hi])
    return make_edges(corners, n1, n2)


def run_gmmut(scenario: ScenarioConfig, *, lib: SplitLibrary1D | None = None,
              grids: dict[float, BinGrid] | None = None,
              ut_config: UTConfig = UTConfig()) -> GmmRunResult:
    """Split, propagate sigma points, and re-merge moments per snapshot.

    grids, when given, maps snapshot times to comparison bins (e.g. the MC
    grids); otherwise each snapshot gets a grid covering the mixture.
    """
    t_start = _time.perf_counter()
    if lib is None:
        lib = build_split_library(scenario.n_1d)
    mix0 = split_gaussian(scenario.initial_gaussian(), lib, direction=1)
    cfg_ut = ut_config
    params = scenario.orbit_params()

    # sigma points in (phi, e) -> (x1, x2, tracked angle)
    all_pts = []
    for comp in mix0.components:
        all_pts.append(sigma_points(comp.mean, comp.cov, cfg_ut))
    pts = np.vstack(all_pts)  # (K*5, 2)
    y0 = np.column_stack([pts[:, 1] * np.sin(pts[:, 0]),
                          pts[:, 1] * np.cos(pts[:, 0]),
                          pts[:, 0]])
    n_pts_per_comp = 2 * 2 + 1
    k = mix0.n

    if scenario.t_final == 0.0:
        times = np.array([0.0])
        states = y0[None, :, :]
        clamped_total = 0
    else:
        field = angle_tracking_field(params)
        result = integrate_batch(field, y0, scenario.snapshot_plan(),
                                 scenario.integrator_config(), clamp_disk=True)
        if result.failed.any():
            raise PropagationError(
                f"{int(result.failed.sum())} sigma points failed to integrate")
        times = result.times
        states = result.states
        clamped_total = int(result.clamped.sum())
    t_prop = _time.perf_counter() - t_start

    t_eval_start = _time.perf_counter()
    snapshots = []
    weights = mix0.weights()
    for s_idx, t in enumerate(times):
        comps = []
        for c_idx in range(k):
            rows = slice(c_idx * n_pts_per_comp, (c_idx + 1) * n_pts_per_comp)
            mean, cov = _component_snapshot_moments(
                states[s_idx, rows, :2], states[s_idx, rows, 2], cfg_ut)
            mean = np.array([wrap_angle(mean[0], scenario.branch_start), mean[1]])
            comps.append(GaussianComponent(weight=float(weights[c_idx]),
                                           mean=mean, cov=cov))
        mix_t = GaussianMixture(components=tuple(comps))
        mean_t, cov_t = merge_moments(mix_t)
        grid = None if grids is None else grids.get(float(t))
        if grid is None:
            grid = _default_grid(mix_t, scenario.n_bins1, scenario.n_bins2)
        joint = density_grid_for_mixture(mix_t, grid, time=float(t))
        marg1 = _marginal_for_mixture(mix_t, grid, 1, float(t), ("phi", "e"))
        marg2 = _marginal_for_mixture(mix_t, grid, 2, float(t), ("phi", "e"))
        snapshots.append(GmmSnapshot(time=float(t), mixture=mix_t,
                                     mean=mean_t, cov=cov_t, joint=joint,
                                     marginal_phi=marg1, marginal_e=marg2))
    t_eval = _time.perf_counter() - t_eval_start

    return GmmRunResult(scenario=scenario, snapshots=tuple(snapshots),
                        t_propagation=t_prop, t_evaluation=t_eval,
                        n_sigma_points=len(y0), clamped=clamped_total)
