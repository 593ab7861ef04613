"""Star-shaped domains given by a radial graph over the unit sphere.

A domain is the set {c + t*w : w on S^2, 0 <= t < rho(w)} for a strictly
positive radial function rho and a center c.  rho is carried as samples
at the nodes of a sphere quadrature; band-limited domains additionally
carry their harmonic coefficients, and special families (balls,
ellipsoids) carry an exact radial callable used wherever rho is needed
away from the nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GeometryError
from .sphere import (
    HarmonicCoeffs,
    SphereQuadrature,
    ball_volume,
    build_quadrature,
    expand,
    flat_index,
    synthesize,
)

__all__ = [
    "StarDomain",
    "CompositeDomain",
    "TruncationReport",
    "FamilySpec",
    "ball",
    "ellipsoid",
    "nearly_spherical_from_phi",
    "volume",
    "barycenter",
    "normalize_volume",
    "scale_domain",
    "translate",
    "diameter",
    "truncate_rescale",
    "generate_family",
    "save_domain",
    "load_domain",
]

_SUP_NORM_BOUND = 0.5  # radial perturbations must stay below this in sup norm
_NEWTON_TOL = 1e-13
_NEWTON_MAX_ITER = 50


@dataclass
class StarDomain:
    """Radial-graph domain.  rho holds the radii at the quadrature nodes."""

    dimension: int
    quad: SphereQuadrature
    rho: np.ndarray
    coeffs: HarmonicCoeffs | None = None
    rho_fn: object | None = None  # exact radial callable dirs -> radii
    center_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    _proj: HarmonicCoeffs | None = field(default=None, repr=False)

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.center_offset = np.asarray(self.center_offset, dtype=float)
        if self.rho.shape != (self.quad.n_nodes,):
            raise GeometryError("rho must be sampled at the quadrature nodes")
        if not np.all(np.isfinite(self.rho)) or np.any(self.rho <= 0.0):
            raise GeometryError("radial function must be finite and strictly positive")
        if self.center_offset.shape != (self.dimension,):
            raise GeometryError("center_offset has wrong shape")

    @property
    def rho_max(self) -> float:
        return float(self.rho.max())

    @property
    def rho_min(self) -> float:
        return float(self.rho.min())

    @property
    def enclosing_radius(self) -> float:
        """Radius about the origin of a ball containing the closure."""
        return float(np.linalg.norm(self.center_offset) + self.rho_max)

    def radial(self, dirs: np.ndarray) -> np.ndarray:
        """Radii in arbitrary unit directions (from the domain's center).

        Uses the exact callable when available, then the band-limited
        generator; otherwise a cached band-limited projection of the
        node samples (exact whenever the samples came from one).
        """
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        if self.rho_fn is not None:
            return np.asarray(self.rho_fn(dirs), dtype=float)
        if self.coeffs is not None:
            return synthesize(self.coeffs, dirs)
        if self._proj is None:
            self._proj = expand(self.rho, self.quad.degree // 2, self.quad)
        return synthesize(self._proj, dirs)

    def is_ball(self, tol: float = 1e-13) -> bool:
        return self.rho_max - self.rho_min <= tol


@dataclass
class CompositeDomain:
    """Finite union of star domains with pairwise disjoint closures.

    Disjointness is certified by center separation exceeding the sum of
    enclosing radii about each component's own center.
    """

    components: list

    def __post_init__(self):
        comps = self.components
        if not comps:
            raise GeometryError("composite domain needs at least one component")
        for i in range(len(comps)):
            for j in range(i + 1, len(comps)):
                ci, cj = comps[i], comps[j]
                gap = np.linalg.norm(ci.center_offset - cj.center_offset)
                if gap <= ci.rho_max + cj.rho_max:
                    raise GeometryError(
                        f"components {i} and {j} are not certifiably disjoint "
                        f"(center gap {gap:.6g} <= {ci.rho_max + cj.rho_max:.6g})"
                    )

    @property
    def enclosing_radius(self) -> float:
        return max(c.enclosing_radius for c in self.components)


def ball(radius: float = 1.0, center=(0.0, 0.0, 0.0),
         quad: SphereQuadrature | None = None) -> StarDomain:
    if radius <= 0:
        raise GeometryError(f"radius must be positive, got {radius}")
    if quad is None:
        quad = build_quadrature(3, 16)
    r = float(radius)
    coeffs = HarmonicCoeffs.zeros(0)
    coeffs.values[0] = r * math.sqrt(4.0 * math.pi)
    return StarDomain(
        dimension=3,
        quad=quad,
        rho=np.full(quad.n_nodes, r),
        coeffs=coeffs,
        rho_fn=lambda dirs: np.full(np.atleast_2d(dirs).shape[0], r),
        center_offset=np.asarray(center, dtype=float),
    )


def ellipsoid(eps: float, quad: SphereQuadrature | None = None) -> StarDomain:
    """Volume-preserving ellipsoid with semi-axes (1+eps, 1+eps, (1+eps)^-2).

    eps = 0 gives the unit ball; the product of the axes is 1, so the
    volume equals that of the unit ball for every eps.
    """
    if not 0.0 <= eps < 0.5:
        raise GeometryError(f"eps must lie in [0, 0.5), got {eps}")
    if quad is None:
        # the radial integrands are smooth but not band-limited; the degree
        # needed for ~1e-12 volume accuracy grows with the eccentricity
        deg = max(16, 8 * math.ceil((32 + 150 * eps) / 8))
        quad = build_quadrature(3, deg)
    axes = np.array([1.0 + eps, 1.0 + eps, (1.0 + eps) ** -2])

    def rho_fn(dirs, axes=axes):
        d = np.atleast_2d(np.asarray(dirs, dtype=float))
        return 1.0 / np.sqrt((d**2 / axes**2).sum(axis=1))

    return StarDomain(
        dimension=3,
        quad=quad,
        rho=rho_fn(quad.nodes),
        rho_fn=rho_fn,
    )


def _sup_norm_dense(coeffs: HarmonicCoeffs) -> float:
    """Sup norm of a band-limited function by dense sampling."""
    deg = max(6 * coeffs.max_degree, 48)
    fine = build_quadrature(3, deg)
    return float(np.abs(synthesize(coeffs, fine.nodes)).max())


def nearly_spherical_from_phi(phi: HarmonicCoeffs, quad: SphereQuadrature | None = None,
                              volume_correct: bool = True) -> StarDomain:
    """Domain with radial graph 1 + phi for a band-limited perturbation.

    Requires sup|phi| < 1/2 (checked by dense sampling).  With
    volume_correct the constant mode is adjusted by Newton iteration so
    the volume equals that of the unit ball to within 1e-13.
    """
    if quad is None:
        quad = build_quadrature(3, max(2 * phi.max_degree, 16))
    if quad.degree < 3 * phi.max_degree:
        # the volume integrand rho^3 must stay inside the exactness range
        quad = build_quadrature(3, 3 * phi.max_degree)
    if _sup_norm_dense(phi) >= _SUP_NORM_BOUND:
        raise GeometryError("perturbation exceeds the sup-norm bound 1/2")
    phi_nodes = synthesize(phi, quad.nodes)
    shift = 0.0
    if volume_correct:
        w = quad.weights
        target = ball_volume(3)
        for _ in range(_NEWTON_MAX_ITER):
            r = 1.0 + phi_nodes + shift
            v = float(w @ (r**3)) / 3.0
            if abs(v - target) < _NEWTON_TOL:
                break
            dv = float(w @ (r**2))
            shift -= (v - target) / dv
        else:
            raise GeometryError("volume correction did not converge")
    coeffs = phi.copy()
    coeffs.values[flat_index(0, 0)] += (1.0 + shift) * math.sqrt(4.0 * math.pi)
    dom = StarDomain(dimension=3, quad=quad, rho=1.0 + phi_nodes + shift, coeffs=coeffs)
    if dom.rho_max - 1.0 >= _SUP_NORM_BOUND or 1.0 - dom.rho_min >= _SUP_NORM_BOUND:
        raise GeometryError("perturbation exceeds the sup-norm bound 1/2 after correction")
    return dom


def volume(domain) -> float:
    """Lebesgue volume; exact when rho^N is inside the quadrature range."""
    if isinstance(domain, CompositeDomain):
        return sum(volume(c) for c in domain.components)
    n = domain.dimension
    return float(domain.quad.weights @ domain.rho**n) / n


def barycenter(domain) -> np.ndarray:
    if isinstance(domain, CompositeDomain):
        vols = np.array([volume(c) for c in domain.components])
        cents = np.array([barycenter(c) for c in domain.components])
        return (vols[:, None] * cents).sum(axis=0) / vols.sum()
    n = domain.dimension
    v = volume(domain)
    moment = (domain.quad.weights * domain.rho ** (n + 1)) @ domain.quad.nodes / (n + 1)
    return domain.center_offset + moment / v


def scale_domain(domain: StarDomain, lam: float) -> StarDomain:
    """Dilation x -> lam*x about the origin."""
    if lam <= 0:
        raise GeometryError("scale factor must be positive")
    coeffs = None
    if domain.coeffs is not None:
        coeffs = domain.coeffs.copy()
        coeffs.values *= lam
    fn = domain.rho_fn
    rho_fn = (lambda dirs, fn=fn, lam=lam: lam * np.asarray(fn(dirs))) if fn is not None else None
    return StarDomain(
        dimension=domain.dimension,
        quad=domain.quad,
        rho=lam * domain.rho,
        coeffs=coeffs,
        rho_fn=rho_fn,
        center_offset=lam * domain.center_offset,
    )


def translate(domain: StarDomain, v) -> StarDomain:
    return replace(domain, center_offset=domain.center_offset + np.asarray(v, dtype=float),
                   _proj=None)


def normalize_volume(domain: StarDomain) -> StarDomain:
    """Dilate so the volume equals that of the unit ball (within 1e-12)."""
    lam = (ball_volume(domain.dimension) / volume(domain)) ** (1.0 / domain.dimension)
    return scale_domain(domain, lam)


def boundary_cloud(domain) -> np.ndarray:
    if isinstance(domain, CompositeDomain):
        return np.vstack([boundary_cloud(c) for c in domain.components])
    return domain.center_offset + domain.rho[:, None] * domain.quad.nodes


def diameter(domain) -> float:
    """Diameter of the boundary node cloud.

    Exact for balls (the node set is antipodally symmetric); for other
    domains a lower estimate with the angular resolution of the rule.
    """
    pts = boundary_cloud(domain)
    # max pairwise distance; point counts here are small enough for O(n^2)
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.max()))


@dataclass(frozen=True)
class TruncationReport:
    outside_volume: float
    scale: float
    diameter: float


def truncate_rescale(domain, radius_cut: float):
    """Drop components outside a centered ball, rescale the rest to unit volume.

    Every component must lie entirely inside or entirely outside the
    ball of radius `radius_cut`; a component the cut sphere slices is
    refused.  Components inside are dilated about the origin so the
    retained volume equals the unit-ball volume.

    Returns the truncated domain and a report with the volume dropped,
    the dilation factor, and the diameter of the result.
    """
    comps = domain.components if isinstance(domain, CompositeDomain) else [domain]
    inside, outside = [], []
    for k, c in enumerate(comps):
        dist = float(np.linalg.norm(c.center_offset))
        if dist + c.rho_max <= radius_cut:
            inside.append(c)
        elif dist - c.rho_max >= radius_cut:
            outside.append(c)
        else:
            raise GeometryError(
                f"component {k} is sliced by the cut sphere of radius {radius_cut}"
            )
    if not inside:
        raise GeometryError("no component lies inside the cut sphere")
    kept_volume = sum(volume(c) for c in inside)
    lam = (ball_volume(3) / kept_volume) ** (1.0 / 3.0)
    rescaled = [scale_domain(c, lam) for c in inside]
    out = CompositeDomain(rescaled) if len(rescaled) > 1 else rescaled[0]
    report = TruncationReport(
        outside_volume=sum(volume(c) for c in outside),
        scale=lam,
        diameter=diameter(out),
    )
    return out, report


@dataclass
class FamilySpec:
    """Description of a one-parameter family of test domains.

    variant is one of:
      "ellipsoid"               eps grid on [eps_min, eps_max]
      "harmonic_perturbation"   1 + t*Y_{degree,order}, t grid up to amplitude
      "random_star"             random band-limited perturbations
    """

    variant: str
    count: int
    normalize: bool = True
    eps_min: float = 0.05
    eps_max: float = 0.4
    degree: int = 2
    order: int = 2
    amplitude: float = 0.1
    seed: int = 0
    max_degree: int = 4


def _random_phi(seed: int, member: int, max_degree: int, amplitude: float) -> HarmonicCoeffs:
    rng = np.random.default_rng([seed, member])
    phi = HarmonicCoeffs.zeros(max_degree)
    for l in range(1, max_degree + 1):
        sl = phi.degree_slice(l)
        sl[:] = rng.normal(size=sl.size) / l**2
    # scale the sup norm to a member-dependent fraction of the cap
    target = amplitude * rng.uniform(0.3, 1.0)
    phi.values *= target / _sup_norm_dense(phi)
    return phi


def generate_family(spec: FamilySpec, quad: SphereQuadrature | None = None):
    """Instantiate a family; yields (domain_id, parameter, domain, phi).

    phi is the generating perturbation (volume-corrected) when the
    member is nearly spherical, else None.
    """
    if spec.count < 1:
        raise GeometryError("family count must be >= 1")
    out = []
    if spec.variant == "ellipsoid":
        eps_grid = np.linspace(spec.eps_min, spec.eps_max, spec.count)
        for k, eps in enumerate(eps_grid):
            dom = ellipsoid(float(eps), quad)
            if spec.normalize:
                dom = normalize_volume(dom)
            out.append((f"ellipsoid-{k:03d}", float(eps), dom, None))
    elif spec.variant == "harmonic_perturbation":
        ts = spec.amplitude * (1.0 + np.arange(spec.count)) / spec.count
        for k, t in enumerate(ts):
            phi = HarmonicCoeffs.single(spec.degree, spec.order, float(t),
                                        max_degree=max(spec.degree, 1))
            dom = nearly_spherical_from_phi(phi, quad, volume_correct=spec.normalize)
            out.append((f"harm-{spec.degree}-{spec.order}-{k:03d}", float(t), dom, phi))
    elif spec.variant == "random_star":
        for k in range(spec.count):
            phi = _random_phi(spec.seed, k, spec.max_degree, spec.amplitude)
            dom = nearly_spherical_from_phi(phi, quad, volume_correct=spec.normalize)
            amp = float(np.abs(synthesize(phi, dom.quad.nodes)).max())
            out.append((f"random-{k:03d}", amp, dom, phi))
    else:
        raise GeometryError(f"unknown family variant {spec.variant!r}")
    return out


_FORMAT_LINE = "stardomain 1"


def save_domain(domain: StarDomain, path) -> None:
    """Write the harmonic generator to a plain-text file.

    Domains without a band-limited generator are stored through their
    harmonic projection at half the quadrature degree, which is a
    (documented) approximation for such domains.
    """
    coeffs = domain.coeffs
    if coeffs is None:
        coeffs = expand(domain.rho, domain.quad.degree // 2, domain.quad)
    lines = [
        f"format {_FORMAT_LINE}",
        f"dimension {domain.dimension}",
        f"max_degree {coeffs.max_degree}",
        "center " + " ".join(repr(float(x)) for x in domain.center_offset),
        "coeffs",
    ]
    lines += [repr(float(v)) for v in coeffs.values]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_domain(path, quad: SphereQuadrature | None = None) -> StarDomain:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != f"format {_FORMAT_LINE}":
        raise GeometryError(f"unrecognised domain file header: {lines[:1]}")
    fields = {}
    i = 1
    while lines[i] != "coeffs":
        key, _, val = lines[i].partition(" ")
        fields[key] = val
        i += 1
    dim = int(fields["dimension"])
    max_degree = int(fields["max_degree"])
    center = np.array([float(x) for x in fields["center"].split()])
    values = np.array([float(x) for x in lines[i + 1 :]])
    coeffs = HarmonicCoeffs(dim, max_degree, values)
    if quad is None:
        quad = build_quadrature(3, max(3 * max_degree, 16))
    return StarDomain(
        dimension=dim,
        quad=quad,
        rho=synthesize(coeffs, quad.nodes),
        coeffs=coeffs,
        center_offset=center,
    )
