"""Capacity solvers.

Normalisation: the capacity of a compact set K is the infimum of the
Dirichlet energy integral |grad u|^2 over functions u >= 1 on K that
decay at infinity (absolute case), or vanish on the boundary sphere of
radius R (relative case).  With this convention the unit ball in R^3
has absolute capacity 4*pi and capacity 8*pi relative to R = 2.  The
surface-area factor sigma_{N-1} is carried explicitly everywhere; some
classical references quote the same formulas with that factor dropped.

Three routes are provided and kept deliberately independent of each
other: closed forms for balls, a spectral collocation solver for star
domains, and a walk-on-spheres Monte Carlo estimator.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .domains import CompositeDomain, StarDomain, normalize_volume, scale_domain, volume
from .errors import GeometryError, SolverError
from .sphere import ball_volume, build_quadrature, harmonic_basis, sphere_area

__all__ = [
    "CapacityResult",
    "SolverConfig",
    "WosConfig",
    "cap_ball",
    "cap_ball_rel",
    "cap_spheroid",
    "cap_exterior_harmonic",
    "cap_relative_harmonic",
    "cap_wos",
    "capacity",
    "deficit",
]


@dataclass(frozen=True)
class CapacityResult:
    value: float
    method: str
    error_estimate: float
    max_residual: float | None = None
    condition: float | None = None

    def __post_init__(self):
        if self.error_estimate < 0:
            raise ValueError("error_estimate must be nonnegative")


def cap_ball(radius: float, dimension: int = 3) -> float:
    """Absolute capacity of a ball, (N-2) * sigma_{N-1} * r^(N-2)."""
    if radius <= 0:
        raise GeometryError("radius must be positive")
    if dimension < 3:
        raise ValueError("capacity in this normalisation needs dimension >= 3")
    n = dimension
    return (n - 2) * sphere_area(n) * radius ** (n - 2)


def cap_ball_rel(radius: float, outer_radius: float, dimension: int = 3) -> float:
    """Capacity of B_r relative to the centered ball B_R, r < R.

    Tends to the absolute value as R grows.
    """
    if not 0 < radius < outer_radius:
        raise GeometryError(f"need 0 < r < R, got r={radius}, R={outer_radius}")
    if dimension < 3:
        raise ValueError("capacity in this normalisation needs dimension >= 3")
    n = dimension
    return (n - 2) * sphere_area(n) / (radius ** -(n - 2) - outer_radius ** -(n - 2))


def cap_spheroid(equatorial: float, polar: float, dimension: int = 3) -> float:
    """Absolute capacity of a spheroid with semi-axes (a, a, c), closed form.

    Classical reduction of the ellipsoid capacity integral
    8*pi / int_0^inf ds / sqrt((a^2+s)^2 (c^2+s)); the u = sqrt(c^2+s)
    substitution makes it elementary in both the oblate and prolate
    branches.  This is the route of choice for eccentric spheroids,
    where a single-center harmonic expansion stops converging on the
    boundary (the potential's continuation has a focal ring of radius
    sqrt(a^2-c^2), which ends up outside the inscribed sphere).
    """
    a, c = float(equatorial), float(polar)
    if a <= 0 or c <= 0:
        raise GeometryError("semi-axes must be positive")
    if dimension != 3:
        raise NotImplementedError("spheroid closed form is implemented for dimension 3")
    if abs(a - c) < 1e-12 * a:
        return cap_ball(0.5 * (a + c))
    if a > c:
        t = math.sqrt(a * a - c * c)
        return 4.0 * math.pi * t / math.atan2(t, c)
    t = math.sqrt(c * c - a * a)
    return 4.0 * math.pi * t / math.atanh(t / c)


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the harmonic collocation solvers.

    max_radius_ratio is the validated geometry range; domains with a
    larger radial spread are refused rather than silently mis-solved.
    Widening it is legitimate when paired with a larger l_max (solver
    agreement and refinement checks still apply).
    """

    l_max: int = 8
    ridge: float = 1e-12
    max_radius_ratio: float = 2.0
    outer_margin: float = 0.05
    max_condition: float = 1e14


def _surface_polar(domain: StarDomain, degree: int):
    """Boundary points of a star domain in polar form about the origin."""
    quad = build_quadrature(3, degree)
    surface = domain.center_offset + domain.radial(quad.nodes)[:, None] * quad.nodes
    r = np.linalg.norm(surface, axis=1)
    dirs = surface / r[:, None]
    return quad, r, dirs


def _collocation_geometry(domain: StarDomain, cfg: SolverConfig):
    quad, r, dirs = _surface_polar(domain, 2 * cfg.l_max)
    if r.min() <= 0:
        raise GeometryError("surface passes through the origin")
    ratio = r.max() / r.min()
    if ratio > cfg.max_radius_ratio:
        raise GeometryError(
            f"radial spread {ratio:.3f} outside the validated range "
            f"(max_radius_ratio={cfg.max_radius_ratio})"
        )
    if np.linalg.norm(domain.center_offset) >= domain.rho_min:
        raise GeometryError("origin must lie inside the domain for the harmonic expansion")
    return quad, r, dirs


def _ridge_weighted_lstsq(A: np.ndarray, w: np.ndarray, cfg: SolverConfig):
    # equilibrate columns so the ridge acts uniformly across degrees
    scale = np.sqrt((w[:, None] * A**2).sum(axis=0))
    scale[scale == 0] = 1.0
    As = A / scale
    M = As.T @ (w[:, None] * As) + cfg.ridge * np.eye(A.shape[1])
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > cfg.max_condition:
        raise SolverError(
            f"normal equations ill-conditioned beyond regularisation (cond={cond:.3e})"
        )
    coef = np.linalg.solve(M, As.T @ w) / scale
    return coef, cond


def cap_exterior_harmonic(domain: StarDomain, cfg: SolverConfig | None = None) -> CapacityResult:
    """Absolute capacity by collocation in decaying solid harmonics.

    The candidate potential sum_lm c_lm |x|^-(l+1) Y_lm(x/|x|) is fitted
    to the boundary condition u = 1 at quadrature nodes of degree
    2*l_max by ridge-regularised weighted least squares.  The capacity
    is read off the monopole: (N-2) * sqrt(sigma_{N-1}) * c_00.

    error_estimate is a maximum-principle style bound: a boundary
    mismatch of size max|residual| changes the capacity by at most
    (N-2) * sigma_{N-1} * max_res * (1 + r_max)^(N-2).
    """
    cfg = cfg or SolverConfig()
    quad, r, dirs = _collocation_geometry(domain, cfg)
    l_of = np.repeat(np.arange(cfg.l_max + 1), 2 * np.arange(cfg.l_max + 1) + 1)
    A = harmonic_basis(cfg.l_max, dirs) * r[:, None] ** -(l_of + 1)
    coef, cond = _ridge_weighted_lstsq(A, quad.weights, cfg)
    # the maximum-principle bound needs the residual sup over the whole
    # boundary; measure it on a grid finer than the collocation nodes
    _, rf, df = _surface_polar(domain, 4 * cfg.l_max + 8)
    fit = (harmonic_basis(cfg.l_max, df) * rf[:, None] ** -(l_of + 1)) @ coef
    max_res = float(np.abs(fit - 1.0).max())
    sigma = sphere_area(3)
    value = math.sqrt(sigma) * coef[0]
    err = sigma * max_res * (1.0 + r.max())
    return CapacityResult(value=float(value), method="harmonic", error_estimate=float(err),
                          max_residual=max_res, condition=cond)


def _shell_radial(l: np.ndarray, r: np.ndarray, outer_radius: float) -> np.ndarray:
    """Shell mode equal to 1 at radius 1 and 0 at the outer radius."""
    k = outer_radius ** (2 * l + 1) - 1.0
    return -(r**l) / k + (1.0 + 1.0 / k) * r ** -(l + 1)


def cap_relative_harmonic(domain: StarDomain, outer_radius: float,
                          cfg: SolverConfig | None = None) -> CapacityResult:
    """Capacity relative to the centered ball B_R by shell collocation.

    Same scheme as the absolute solver with the decaying solid
    harmonics replaced by shell modes vanishing at radius R; the value
    comes from the radial flux of the l = 0 mode, which is conserved
    across the shell.
    """
    cfg = cfg or SolverConfig()
    if outer_radius <= 0:
        raise GeometryError("outer radius must be positive")
    if domain.enclosing_radius >= outer_radius * (1.0 - cfg.outer_margin):
        raise GeometryError(
            f"domain (enclosing radius {domain.enclosing_radius:.4f}) too close to "
            f"the outer sphere R={outer_radius} (margin {cfg.outer_margin})"
        )
    quad, r, dirs = _collocation_geometry(domain, cfg)
    l_of = np.repeat(np.arange(cfg.l_max + 1), 2 * np.arange(cfg.l_max + 1) + 1)
    A = harmonic_basis(cfg.l_max, dirs) * _shell_radial(l_of, r[:, None], outer_radius)
    coef, cond = _ridge_weighted_lstsq(A, quad.weights, cfg)
    _, rf, df = _surface_polar(domain, 4 * cfg.l_max + 8)
    fit = (harmonic_basis(cfg.l_max, df) * _shell_radial(l_of, rf[:, None], outer_radius)) @ coef
    max_res = float(np.abs(fit - 1.0).max())
    sigma = sphere_area(3)
    k0 = outer_radius - 1.0  # R^(N-2) - 1 at N = 3
    value = math.sqrt(sigma) * coef[0] * (1.0 + 1.0 / k0)
    err = max_res * cap_ball_rel(min(r.max(), outer_radius * (1 - cfg.outer_margin)),
                                 outer_radius)
    return CapacityResult(value=float(value), method="harmonic", error_estimate=float(err),
                          max_residual=max_res, condition=cond)


# ---------------------------------------------------------------------------
# walk on spheres
# ---------------------------------------------------------------------------

_M1 = np.uint64(0xFF51AFD7ED558CCD)
_M2 = np.uint64(0xC4CEB9FE1A85EC53)
_GOLD = np.uint64(0x9E3779B97F4A7C15)


def _mix64(x: np.ndarray) -> np.ndarray:
    # multiplies wrap mod 2^64 on purpose
    x = (x ^ (x >> np.uint64(33))) * _M1
    x = (x ^ (x >> np.uint64(33))) * _M2
    return x ^ (x >> np.uint64(33))


def counter_uniform(seed: int, walk: np.ndarray, step: int, slot: int) -> np.ndarray:
    """Deterministic uniforms in [0, 1) keyed by (seed, walk, step, slot).

    Stateless, so any partition of the walk index range across workers
    reproduces the serial stream bit for bit.
    """
    w = np.asarray(walk, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _mix64(np.asarray(np.uint64(seed) + _GOLD))
        h = _mix64(w ^ (h + _GOLD))
        h = _mix64(np.uint64(step) ^ (h + _GOLD))
        h = _mix64(np.uint64(slot) ^ (h + _GOLD))
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class WosConfig:
    num_walks: int = 20000
    seed: int = 0
    start_radius: float | None = None  # default 4 * enclosing radius
    eps_shell: float | None = None  # default 1e-4 * enclosing radius
    max_steps: int = 10000
    threads: int = 1
    block_size: int = 8192


class _WosComponent:
    """Distance and membership queries for one star component."""

    _COARSE_DEG = 20
    _REFINE_ROUNDS = 5

    def __init__(self, dom: StarDomain):
        self.center = dom.center_offset
        self.rho_min = dom.rho_min
        self.exact_ball = dom.is_ball() and dom.rho_fn is not None
        self.radius = dom.rho_max if self.exact_ball else None
        self.dom = dom
        if not self.exact_ball:
            q = build_quadrature(3, self._COARSE_DEG)
            self.coarse_dirs = q.nodes
            self.coarse_pts = dom.radial(q.nodes)[:, None] * q.nodes

    def distance_inside(self, p: np.ndarray):
        """(distance to the boundary, inside flag) for points p, vectorised."""
        q = p - self.center
        r = np.linalg.norm(q, axis=1)
        if self.exact_ball:
            return np.abs(r - self.radius), r < self.radius
        inside = r < self.dom.radial(q / np.maximum(r, 1e-300)[:, None])
        # coarse pass over a precomputed boundary cloud
        d2 = ((q[:, None, :] - self.coarse_pts[None, :, :]) ** 2).sum(axis=2)
        best = np.argmin(d2, axis=1)
        w = self.coarse_dirs[best]
        # local pattern search on the sphere around the coarse direction
        span = math.pi / self._COARSE_DEG
        a1 = _any_orthonormal(w)
        a2 = np.cross(w, a1)
        dbest = np.sqrt(d2[np.arange(len(p)), best])
        offs = np.array([(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)],
                        dtype=float)
        for _ in range(self._REFINE_ROUNDS):
            cand = (w[:, None, :]
                    + span * offs[None, :, 0, None] * a1[:, None, :]
                    + span * offs[None, :, 1, None] * a2[:, None, :])
            cand /= np.linalg.norm(cand, axis=2, keepdims=True)
            flat = cand.reshape(-1, 3)
            bpts = self.dom.radial(flat)[:, None] * flat
            dc = np.linalg.norm(q[:, None, :] - bpts.reshape(len(p), -1, 3), axis=2)
            j = np.argmin(dc, axis=1)
            better = dc[np.arange(len(p)), j] < dbest
            dbest = np.where(better, dc[np.arange(len(p)), j], dbest)
            w = np.where(better[:, None], cand[np.arange(len(p)), j], w)
            w /= np.linalg.norm(w, axis=1, keepdims=True)
            a1 = _any_orthonormal(w)
            a2 = np.cross(w, a1)
            span /= 3.0
        return dbest, inside


def _any_orthonormal(w: np.ndarray) -> np.ndarray:
    """A unit vector orthogonal to each row of w."""
    ref = np.zeros_like(w)
    small = np.abs(w[:, 0]) < 0.9
    ref[small, 0] = 1.0
    ref[~small, 1] = 1.0
    a = np.cross(w, ref)
    return a / np.linalg.norm(a, axis=1, keepdims=True)


def _reentry_points(p: np.ndarray, a: float, u_pol: np.ndarray, u_azi: np.ndarray) -> np.ndarray:
    """Return-to-sphere positions for escaped walkers.

    Conditioned on a walker at |p| > a ever reaching the sphere of
    radius a again, the landing point follows the harmonic measure of
    the sphere seen from the inverse point a^2 p / |p|^2; its polar
    cosine about p/|p| has a closed-form inverse CDF in three
    dimensions, used here directly.
    """
    r = np.linalg.norm(p, axis=1)
    axis = p / r[:, None]
    h = a / r
    t = 1.0 / (1.0 + h) + 2.0 * h * u_pol / (1.0 - h**2)
    c = (1.0 + h**2 - t**-2) / (2.0 * h)
    c = np.clip(c, -1.0, 1.0)
    s = np.sqrt(1.0 - c**2)
    chi = 2.0 * math.pi * u_azi
    e1 = _any_orthonormal(axis)
    e2 = np.cross(axis, e1)
    out = axis * c[:, None] + (np.cos(chi)[:, None] * e1 + np.sin(chi)[:, None] * e2) * s[:, None]
    return a * out


def _run_wos_block(components, walk_ids: np.ndarray, seed: int, a: float,
                   eps: float, max_steps: int):
    n = len(walk_ids)
    u1 = counter_uniform(seed, walk_ids, 0, 0)
    u2 = counter_uniform(seed, walk_ids, 0, 1)
    z = 1.0 - 2.0 * u1
    s = np.sqrt(np.maximum(0.0, 1.0 - z**2))
    phi = 2.0 * math.pi * u2
    pos = a * np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    alive = np.ones(n, dtype=bool)
    hit = np.zeros(n, dtype=bool)
    ids = walk_ids.copy()
    for step in range(1, max_steps + 1):
        if not alive.any():
            break
        idx = np.nonzero(alive)[0]
        p = pos[idx]
        d = np.full(len(idx), np.inf)
        inside = np.zeros(len(idx), dtype=bool)
        for comp in components:
            dc, ic = comp.distance_inside(p)
            d = np.minimum(d, dc)
            inside |= ic
        absorbed = inside | (d <= eps)
        hit[idx[absorbed]] = True
        alive[idx[absorbed]] = False
        move = ~absorbed
        if not move.any():
            continue
        im = idx[move]
        wid = ids[im]
        ua = counter_uniform(seed, wid, step, 0)
        ub = counter_uniform(seed, wid, step, 1)
        zz = 1.0 - 2.0 * ua
        ss = np.sqrt(np.maximum(0.0, 1.0 - zz**2))
        ph = 2.0 * math.pi * ub
        stepdir = np.column_stack([ss * np.cos(ph), ss * np.sin(ph), zz])
        pos[im] = pos[im] + d[move][:, None] * stepdir
        r = np.linalg.norm(pos[im], axis=1)
        out = r > a
        if out.any():
            io = im[out]
            surv = counter_uniform(seed, ids[io], step, 2) < a / r[out]
            alive[io[~surv]] = False
            if surv.any():
                iw = io[surv]
                up = counter_uniform(seed, ids[iw], step, 3)
                uq = counter_uniform(seed, ids[iw], step, 4)
                pos[iw] = _reentry_points(pos[iw], a, up, uq)
    unresolved = int(alive.sum())
    return int(hit.sum()), unresolved


def cap_wos(domain, cfg: WosConfig | None = None) -> CapacityResult:
    """Absolute capacity by walk on spheres.

    Walks start uniformly on the sphere of radius rho_far; the
    spherical mean of the capacitary potential there is exactly
    c0 * rho_far^-(N-2) (higher harmonics integrate to zero), so the
    hit fraction rescales to the capacity:

        value = hit_rate * (N-2) * sigma_{N-1} * rho_far^(N-2).

    A walker farther out than rho_far survives with probability
    rho_far/|x| and re-enters through the exact conditional harmonic
    measure.  error_estimate is the binomial standard error plus a
    documented O(eps_shell) absorption bias bound; walks that exhaust
    max_steps count as killed and are added to the error term.
    """
    cfg = cfg or WosConfig()
    comps = domain.components if isinstance(domain, CompositeDomain) else [domain]
    encl = max(c.enclosing_radius for c in comps)
    a = cfg.start_radius if cfg.start_radius is not None else 4.0 * encl
    if a <= encl:
        raise GeometryError(f"start radius {a} must exceed the enclosing radius {encl:.4f}")
    eps = cfg.eps_shell if cfg.eps_shell is not None else 1e-4 * encl
    geoms = [_WosComponent(c) for c in comps]
    m = cfg.num_walks
    blocks = [np.arange(i, min(i + cfg.block_size, m), dtype=np.uint64)
              for i in range(0, m, cfg.block_size)]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(
                lambda b: _run_wos_block(geoms, b, cfg.seed, a, eps, cfg.max_steps), blocks))
    else:
        parts = [_run_wos_block(geoms, b, cfg.seed, a, eps, cfg.max_steps) for b in blocks]
    hits = sum(p[0] for p in parts)
    unresolved = sum(p[1] for p in parts)
    if hits == 0:
        raise SolverError("walk on spheres recorded zero hits; result inconclusive")
    scale = sphere_area(3) * a
    p = hits / m
    value = p * scale
    stderr = math.sqrt(p * (1.0 - p) / m) * scale
    bias = value * eps / min(c.rho_min for c in comps) + unresolved / m * scale
    return CapacityResult(value=value, method="wos", error_estimate=stderr + bias,
                          max_residual=None, condition=None)


def capacity(domain, mode: str = "abs", outer_radius: float | None = None,
             solver: str = "harmonic", cfg: SolverConfig | None = None,
             wos_cfg: WosConfig | None = None) -> CapacityResult:
    """Dispatch to a solver by mode and method name."""
    if mode not in ("abs", "rel"):
        raise ValueError(f"mode must be 'abs' or 'rel', got {mode!r}")
    if mode == "rel" and outer_radius is None:
        raise ValueError("relative mode needs outer_radius")
    if solver == "closed":
        if isinstance(domain, CompositeDomain) or not domain.is_ball() \
                or np.linalg.norm(domain.center_offset) > 0:
            raise SolverError("closed form only covers centered balls")
        r = domain.rho_max
        v = cap_ball(r) if mode == "abs" else cap_ball_rel(r, outer_radius)
        return CapacityResult(value=v, method="closed-form", error_estimate=0.0)
    if solver == "wos":
        if mode == "rel":
            raise SolverError("walk on spheres is implemented for the absolute problem")
        return cap_wos(domain, wos_cfg)
    if solver == "harmonic":
        if isinstance(domain, CompositeDomain):
            raise SolverError("harmonic collocation needs a single star component")
        if mode == "abs":
            return cap_exterior_harmonic(domain, cfg)
        return cap_relative_harmonic(domain, outer_radius, cfg)
    raise ValueError(f"unknown solver {solver!r}")


@dataclass(frozen=True)
class DeficitResult:
    value: float
    error_estimate: float
    capacity: CapacityResult
    scale: float  # dilation applied to reach unit-ball volume


def deficit(domain, mode: str = "abs", outer_radius: float | None = None,
            solver: str = "harmonic", cfg: SolverConfig | None = None,
            wos_cfg: WosConfig | None = None) -> DeficitResult:
    """Capacity excess over the unit ball at fixed volume.

    The domain is dilated to unit-ball volume first, so the deficit of
    any ball is zero up to solver error, and the value is nonnegative
    up to solver error for every domain.
    """
    if isinstance(domain, CompositeDomain):
        lam = (ball_volume(3) / volume(domain)) ** (1.0 / 3.0)
        dom = CompositeDomain([scale_domain(c, lam) for c in domain.components])
    else:
        lam = (ball_volume(3) / volume(domain)) ** (1.0 / 3.0)
        dom = normalize_volume(domain)
    res = capacity(dom, mode=mode, outer_radius=outer_radius, solver=solver,
                   cfg=cfg, wos_cfg=wos_cfg)
    ref = cap_ball(1.0) if mode == "abs" else cap_ball_rel(1.0, outer_radius)
    return DeficitResult(value=res.value - ref, error_estimate=res.error_estimate,
                         capacity=res, scale=lam)
