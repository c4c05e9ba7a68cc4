"""Planar domains bounded by parametrized Jordan curves, plus quadrature.

Curves are stored by their parametrization over theta in [0, 2pi); arclength
quantities are obtained by integrating the parametric speed. A domain is an
ordered list of curves: the first is the outer boundary (counterclockwise),
the rest are hole boundaries (clockwise), so the interior always lies to the
left while traversing.
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass, field

from .config import DEFAULT, SolverConfig

TWO_PI = 2.0 * np.pi

CCW = "counterclockwise"
CW = "clockwise"


class GeometryError(ValueError):
    """A curve or domain failed a validity check."""


def _theta_grid(n: int) -> np.ndarray:
    return np.arange(n) * (TWO_PI / n)


class JordanCurve:
    """Closed simple curve given by vectorized position/velocity callables.

    position, velocity: map an ndarray of angles to complex points and to
    d(position)/d(theta). The declared orientation must match the actual
    winding of the parametrization; this is checked, as are closedness,
    regularity (nonvanishing speed) and simplicity (sampled scan).
    """

    def __init__(self, position, velocity, orientation, smoothness_order=3,
                 check_nodes=512):
        if orientation not in (CCW, CW):
            raise GeometryError(f"unknown orientation {orientation!r}")
        if smoothness_order < 1:
            raise GeometryError("smoothness_order must be >= 1")
        self.position = position
        self.velocity = velocity
        self.orientation = orientation
        self.smoothness_order = int(smoothness_order)

        n = int(check_nodes)
        th = _theta_grid(n)
        pts = np.asarray(position(th), dtype=complex)
        vel = np.asarray(velocity(th), dtype=complex)
        speed = np.abs(vel)
        vmax = float(speed.max())

        eps = TWO_PI / n
        gap = abs(complex(position(np.array([0.0]))[0])
                  - complex(position(np.array([TWO_PI - eps]))[0]))
        if gap > 2.0 * vmax * eps:
            raise GeometryError(f"curve is not closed: endpoint gap {gap:.3g}")
        if float(speed.min()) <= 1e-12 * max(1.0, vmax):
            raise GeometryError("curve is not regular: velocity vanishes")
        self._check_simple(pts, speed, n)

        self.total_arclength = float(np.mean(speed) * TWO_PI)
        self._samples = pts
        self._sample_speed = speed

    def _check_simple(self, pts, speed, n):
        # non-adjacent samples (circular parameter separation >= 6 steps)
        # must stay farther apart than ~1.5 sample spacings
        max_adjacent = float(speed.max()) * TWO_PI / n
        idx = np.arange(n)
        sep = np.abs(idx[:, None] - idx[None, :])
        sep = np.minimum(sep, n - sep)
        far = sep >= 6
        d = np.abs(pts[:, None] - pts[None, :])
        if far.any() and float(d[far].min()) < 1.5 * max_adjacent:
            raise GeometryError("curve is not simple: distant parameters "
                                "approach within a sample spacing")

    def points(self, thetas):
        return np.asarray(self.position(np.asarray(thetas, dtype=float)),
                          dtype=complex)

    def velocities(self, thetas):
        return np.asarray(self.velocity(np.asarray(thetas, dtype=float)),
                          dtype=complex)

    def nodes(self, n: int):
        """Uniform parameter nodes with complex contour weights.

        sum(f(points) * weights) approximates the contour integral of f dz
        along this curve with its stored orientation.
        """
        th = _theta_grid(n)
        return th, self.points(th), self.velocities(th) * (TWO_PI / n)

    def signed_area(self, n=512):
        _, z, w = self.nodes(n)
        return float(np.real(np.sum(np.conj(z) * w) / 2j))


@dataclass(frozen=True)
class BoundaryQuadrature:
    """Concatenated trapezoidal nodes of every boundary curve."""

    nodes_per_curve: int
    thetas: np.ndarray
    points: np.ndarray
    weights: np.ndarray          # complex: velocity * dtheta, orientation included
    curve_index: np.ndarray

    def contour_sum(self, values, z):
        """sum over the full oriented boundary of values/(zeta - z) * dzeta."""
        z = np.asarray(z, dtype=complex)
        return values[None, :] * self.weights[None, :] / \
            (self.points[None, :] - z[..., None])


@dataclass(frozen=True)
class AreaQuadrature:
    """Interior mesh: sum(weights * f(nodes)) approximates the area integral."""

    scheme: str                   # "polar-centered" | "cartesian-mesh"
    nodes: np.ndarray
    weights: np.ndarray
    max_cell_diameter: float
    resolution: tuple = ()

    @property
    def total_area(self) -> float:
        return float(self.weights.sum())


class PlanarDomain:
    """Bounded domain: outer curve counterclockwise, holes clockwise."""

    def __init__(self, curves, polar_hint=None, dense_nodes=2048):
        if not curves:
            raise GeometryError("a domain needs at least one curve")
        self.curves = list(curves)
        self.polar_hint = polar_hint   # (center, r_inner, r_outer) or None

        areas = [c.signed_area() for c in self.curves]
        if areas[0] <= 0 or self.curves[0].orientation != CCW:
            raise GeometryError("outer curve must run counterclockwise")
        for a, c in zip(areas[1:], self.curves[1:]):
            if a >= 0 or c.orientation != CW:
                raise GeometryError("hole curves must run clockwise")

        th = _theta_grid(dense_nodes)
        self._dense = [c.points(th) for c in self.curves]
        self._check_disjoint()

        allpts = np.concatenate(self._dense)
        pad = 1e-9 + 1e-6 * (np.ptp(allpts.real) + np.ptp(allpts.imag))
        self.bounding_box = (allpts.real.min() - pad, allpts.real.max() + pad,
                             allpts.imag.min() - pad, allpts.imag.max() + pad)
        x0, x1, y0, y1 = self.bounding_box
        self.diameter = float(np.hypot(x1 - x0, y1 - y0))
        self.area = float(sum(areas))
        self._quad_cache = {}

    def _check_disjoint(self):
        for i in range(len(self._dense)):
            for k in range(i + 1, len(self._dense)):
                d = np.abs(self._dense[i][:, None] - self._dense[k][None, :])
                if d.min() <= 1e-9 * max(1.0, self.curves[i].total_arclength):
                    raise GeometryError("boundary curves intersect")

    # -- membership -----------------------------------------------------

    def winding_number(self, z):
        """Winding of the full oriented boundary about each point of z."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.polar_hint is not None:
            center, r_in, r_out = self.polar_hint
            d = np.abs(z - center)
            return ((d < r_out) & (d >= r_in)).astype(int)
        total = np.zeros(z.shape, dtype=float)
        for poly in self._dense:
            closed = np.concatenate([poly, poly[:1]])
            for lo in range(0, len(z), 1024):
                zz = z[lo:lo + 1024, None]
                ang = np.angle((closed[None, 1:] - zz) / (closed[None, :-1] - zz))
                total[lo:lo + 1024] += ang.sum(axis=1) / TWO_PI
        return np.rint(total).astype(int)

    def boundary_distance(self, z):
        """Distance from z to the boundary (exact for circular boundaries)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.polar_hint is not None:
            center, r_in, r_out = self.polar_hint
            d = np.abs(z - center)
            dist = np.abs(r_out - d)
            if r_in > 0:
                dist = np.minimum(dist, np.abs(d - r_in))
            return dist
        best = np.full(z.shape, np.inf)
        for poly in self._dense:
            a = np.concatenate([poly, poly[:1]])[:-1]
            b = np.concatenate([poly, poly[:1]])[1:]
            ab = b - a
            denom = np.abs(ab) ** 2
            for lo in range(0, len(z), 512):
                zz = z[lo:lo + 512, None]
                t = np.clip(((zz - a[None, :]) * np.conj(ab[None, :])).real
                            / denom[None, :], 0.0, 1.0)
                d = np.abs(zz - (a[None, :] + t * ab[None, :])).min(axis=1)
                best[lo:lo + 512] = np.minimum(best[lo:lo + 512], d)
        return best

    def contains(self, z, proximal_tol=None):
        """True where the boundary winds once around z.

        Points within proximal_tol of the boundary are reported as a third
        state via is_boundary_proximal; here they count as not contained.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        inside = self.winding_number(z) == 1
        prox = self.is_boundary_proximal(z, proximal_tol)
        out = inside & ~prox
        return out if out.shape else bool(out)

    def is_boundary_proximal(self, z, tol=None):
        tol = DEFAULT.boundary_proximal_tol if tol is None else tol
        return self.boundary_distance(z) < tol

    def interior_points(self, rng, count, margin=0.1):
        """Rejection-sample interior points at the given boundary margin."""
        x0, x1, y0, y1 = self.bounding_box
        out = []
        while len(out) < count:
            cand = (rng.uniform(x0, x1, size=4 * count)
                    + 1j * rng.uniform(y0, y1, size=4 * count))
            ok = (self.winding_number(cand) == 1) \
                & (self.boundary_distance(cand) >= margin)
            out.extend(cand[ok].tolist())
        return np.array(out[:count], dtype=complex)

    # -- quadrature ------------------------------------------------------

    def boundary_quadrature(self, n=None) -> BoundaryQuadrature:
        n = DEFAULT.boundary_nodes if n is None else int(n)
        key = ("bq", n)
        if key not in self._quad_cache:
            ths, pts, wts, idx = [], [], [], []
            for k, c in enumerate(self.curves):
                th, p, w = c.nodes(n)
                ths.append(th)
                pts.append(p)
                wts.append(w)
                idx.append(np.full(n, k))
            self._quad_cache[key] = BoundaryQuadrature(
                n, np.concatenate(ths), np.concatenate(pts),
                np.concatenate(wts), np.concatenate(idx))
        return self._quad_cache[key]

    def area_quadrature(self, radial=None, angular=None,
                        cells=None, cfg: SolverConfig = DEFAULT) -> AreaQuadrature:
        radial = cfg.area_radial if radial is None else int(radial)
        angular = cfg.area_angular if angular is None else int(angular)
        cells = cfg.cart_cells if cells is None else int(cells)
        key = ("aq", radial, angular, cells)
        if key not in self._quad_cache:
            if self.polar_hint is not None:
                quad = self._polar_area(radial, angular)
            else:
                quad = self._cartesian_area(cells, cfg.cart_subsample)
            if abs(quad.total_area - self.area) > 0.005 * abs(self.area):
                raise GeometryError(
                    f"area mesh misses the boundary-formula area by "
                    f"{abs(quad.total_area - self.area) / abs(self.area):.2%}")
            self._quad_cache[key] = quad
        return self._quad_cache[key]

    def _polar_area(self, nr, nt):
        center, r_in, r_out = self.polar_hint
        dr = (r_out - r_in) / nr
        dt = TWO_PI / nt
        r = r_in + (np.arange(nr) + 0.5) * dr
        t = (np.arange(nt) + 0.5) * dt
        R, T = np.meshgrid(r, t, indexing="ij")
        nodes = center + (R * np.exp(1j * T)).ravel()
        weights = (R * dr * dt).ravel()
        diam = float(np.sqrt(dr ** 2 + (r_out * dt) ** 2))
        return AreaQuadrature("polar-centered", nodes, weights, diam, (nr, nt))

    def _cartesian_area(self, n, sub):
        x0, x1, y0, y1 = self.bounding_box
        xs = np.linspace(x0, x1, n + 1)
        ys = np.linspace(y0, y1, n + 1)
        hx, hy = xs[1] - xs[0], ys[1] - ys[0]
        X, Y = np.meshgrid(xs[:-1] + hx / 2, ys[:-1] + hy / 2, indexing="ij")
        centers = (X + 1j * Y).ravel()
        corner_offsets = [(-1, -1), (-1, 1), (1, -1), (1, 1)]
        tests = [self.winding_number(centers + dx * hx / 2 + 1j * dy * hy / 2) == 1
                 for dx, dy in corner_offsets]
        tests.append(self.winding_number(centers) == 1)
        stack = np.stack(tests)
        all_in = stack.all(axis=0)
        boundary = stack.any(axis=0) & ~all_in

        nodes = [centers[all_in]]
        weights = [np.full(all_in.sum(), hx * hy)]
        if boundary.any():
            off1 = (np.arange(sub) + 0.5) / sub - 0.5
            OX, OY = np.meshgrid(off1 * hx, off1 * hy, indexing="ij")
            offs = (OX + 1j * OY).ravel()
            bc = centers[boundary]
            samples = bc[:, None] + offs[None, :]
            ins = (self.winding_number(samples.ravel()) == 1).reshape(samples.shape)
            frac = ins.mean(axis=1)
            keep = frac > 0
            # anchor partially covered cells at the centroid of their
            # interior samples so every node lies inside the domain
            cent = np.where(keep,
                            (samples * ins).sum(axis=1) / np.maximum(ins.sum(axis=1), 1),
                            0.0)
            nodes.append(cent[keep])
            weights.append(frac[keep] * hx * hy)
        diam = float(np.hypot(hx, hy))
        return AreaQuadrature("cartesian-mesh", np.concatenate(nodes),
                              np.concatenate(weights), diam, (n, n))


class ProductDomain:
    """Ordered cartesian product of planar factors."""

    def __init__(self, factors, cfg: SolverConfig = DEFAULT):
        factors = list(factors)
        if not 1 <= len(factors):
            raise GeometryError("a product domain needs at least one factor")
        if len(factors) > cfg.max_dimension:
            raise GeometryError(
                f"dimension {len(factors)} exceeds the configured maximum "
                f"{cfg.max_dimension}")
        self.factors = factors
        self.dimension = len(factors)

    def contains(self, z):
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        ok = np.ones(z.shape[0], dtype=bool)
        for j, dom in enumerate(self.factors):
            ok &= np.atleast_1d(dom.contains(z[:, j]))
        return ok

    def boundary_margin(self, z):
        """Minimum over factors of the factor-boundary distance."""
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        return np.min(np.stack([dom.boundary_distance(z[:, j])
                                for j, dom in enumerate(self.factors)]), axis=0)

    def interior_points(self, rng, count, margin=0.1):
        cols = [dom.interior_points(rng, count, margin) for dom in self.factors]
        return np.stack(cols, axis=1)


# -- curve and domain constructors ---------------------------------------

def circle_curve(center, radius, orientation=CCW, smoothness_order=6):
    center = complex(center)
    radius = float(radius)
    sign = 1.0 if orientation == CCW else -1.0

    def position(th):
        return center + radius * np.exp(sign * 1j * th)

    def velocity(th):
        return sign * 1j * radius * np.exp(sign * 1j * th)

    return JordanCurve(position, velocity, orientation, smoothness_order)


def ellipse_curve(center, a, b, smoothness_order=6):
    center = complex(center)

    def position(th):
        return center + a * np.cos(th) + 1j * b * np.sin(th)

    def velocity(th):
        return -a * np.sin(th) + 1j * b * np.cos(th)

    return JordanCurve(position, velocity, CCW, smoothness_order)


def make_disc(center, radius) -> PlanarDomain:
    if radius <= 0:
        raise GeometryError("disc radius must be positive")
    return PlanarDomain([circle_curve(center, radius)],
                        polar_hint=(complex(center), 0.0, float(radius)))


def make_annulus(center, r_inner, r_outer) -> PlanarDomain:
    if not 0 < r_inner < r_outer:
        raise GeometryError("annulus radii must satisfy 0 < r_inner < r_outer")
    return PlanarDomain(
        [circle_curve(center, r_outer, CCW), circle_curve(center, r_inner, CW)],
        polar_hint=(complex(center), float(r_inner), float(r_outer)))


def make_ellipse(center, a, b) -> PlanarDomain:
    if a <= 0 or b <= 0:
        raise GeometryError("ellipse semi-axes must be positive")
    return PlanarDomain([ellipse_curve(center, a, b)])


def make_perturbed_circle(fourier_coeffs) -> PlanarDomain:
    """Unit circle displaced by the trigonometric modes exp(i m theta).

    fourier_coeffs[m-1] is the complex amplitude of mode m; an empty list
    gives the unit disc. Regularity and simplicity are checked, not assumed:
    amplitudes producing a vanishing velocity or a self-crossing (for
    instance 0.9 on mode 2) are rejected.
    """
    coeffs = np.asarray(list(fourier_coeffs), dtype=complex)
    modes = np.arange(1, len(coeffs) + 1)

    def position(th):
        base = np.exp(1j * th)
        if len(coeffs) == 0:
            return base
        return base + np.exp(1j * np.outer(th, modes)) @ coeffs

    def velocity(th):
        base = 1j * np.exp(1j * th)
        if len(coeffs) == 0:
            return base
        return base + np.exp(1j * np.outer(th, modes)) @ (1j * modes * coeffs)

    curve = JordanCurve(position, velocity, CCW)
    hint = (0j, 0.0, 1.0) if len(coeffs) == 0 else None
    return PlanarDomain([curve], polar_hint=hint)


def make_bidisc() -> ProductDomain:
    return ProductDomain([make_disc(0, 1), make_disc(0, 1)])


def make_tridisc() -> ProductDomain:
    return ProductDomain([make_disc(0, 1), make_disc(0, 1), make_disc(0, 1)])


def chord_arc_constant(curve: JordanCurve, sample_count=512) -> float:
    """Largest sampled ratio of arclength separation to chord length.

    Always >= 1; pi/2 for a circle. Coincident sample pairs are skipped.
    """
    th = _theta_grid(sample_count)
    pts = curve.points(th)
    speed = np.abs(curve.velocities(th))
    # cumulative arclength at the sample parameters (midpoint increments)
    mid = 0.5 * (speed + np.roll(speed, -1)) * (TWO_PI / sample_count)
    s = np.concatenate([[0.0], np.cumsum(mid)[:-1]])
    total = float(np.cumsum(mid)[-1])

    ds = np.abs(s[:, None] - s[None, :])
    arc = np.minimum(ds, total - ds)
    chord = np.abs(pts[:, None] - pts[None, :])
    mask = chord > 1e-12
    return float(np.max(arc[mask] / chord[mask]))


def domain_from_description(desc: dict) -> PlanarDomain:
    """Build a factor domain from a flat description record (CLI config)."""
    kind = desc.get("kind", "disc")
    if kind == "disc":
        return make_disc(complex(desc.get("center", 0)),
                         float(desc.get("radius", 1)))
    if kind == "annulus":
        return make_annulus(complex(desc.get("center", 0)),
                            float(desc.get("r_inner", 0.5)),
                            float(desc.get("r_outer", 1.0)))
    if kind == "ellipse":
        return make_ellipse(complex(desc.get("center", 0)),
                            float(desc.get("a", 1.0)), float(desc.get("b", 0.5)))
    if kind == "perturbed-circle":
        return make_perturbed_circle(
            [complex(c) for c in desc.get("coeffs", [])])
    raise GeometryError(f"unknown domain kind {kind!r}")
