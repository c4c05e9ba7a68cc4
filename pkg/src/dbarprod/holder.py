"""Sampled Hölder seminorms, exponent fitting, and the bump mollifier.

Seminorms are estimated on a SampleCloud: a finite point set with function
values and a pair index whose separations cover dyadic scales
diam * 2^-1 .. diam * 2^-p. Every estimate is a lower bound of the true
supremum by construction. Exponent fitting regresses the per-scale maximum
increment against the scale on log axes.
"""

from __future__ import annotations

import csv

import numpy as np
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from scipy.integrate import quad


class HolderError(ValueError):
    pass


@dataclass(frozen=True)
class HolderEstimate:
    alpha: float
    seminorm: float
    argmax_pair: tuple            # (i, k, distance)
    fit_r2: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise HolderError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.seminorm < 0:
            raise HolderError("seminorm must be nonnegative")


@dataclass(frozen=True)
class SampleCloud:
    points: np.ndarray            # (m, dim) real coordinates
    values: np.ndarray            # (m,) complex
    pairs: np.ndarray             # (P, 2) int
    distances: np.ndarray         # (P,)
    scale_ids: np.ndarray         # (P,) int, -1 = unbinned
    scale_values: np.ndarray      # (n_scales,) nominal dyadic separations
    diameter: float
    axis: Optional[int] = None    # pairs vary only this complex coordinate
    min_pairs_per_scale: int = 50

    @property
    def sparse_scales(self):
        counts = np.bincount(self.scale_ids[self.scale_ids >= 0],
                             minlength=len(self.scale_values))
        return [s for s, c in enumerate(counts) if c < self.min_pairs_per_scale]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def _bin_scales(distances, diameter, n_scales):
    """Assign each separation to the nearest dyadic scale diam * 2^-s."""
    scales = diameter * 2.0 ** -np.arange(1, n_scales + 1)
    ids = np.rint(np.log2(diameter / np.maximum(distances, 1e-300))).astype(int) - 1
    ids[(ids < 0) | (ids >= n_scales)] = -1
    return ids, scales


def _assemble(points, values, pairs, diameter, n_scales, axis=None):
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=complex)
    pairs = np.asarray(pairs, dtype=int)
    d = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=1)
    keep = d > 0
    pairs, d = pairs[keep], d[keep]
    ids, scales = _bin_scales(d, diameter, n_scales)
    return SampleCloud(points, values, pairs, d, ids, scales, diameter,
                       axis=axis)


def cloud_on_interval(f, a, b, rng, n_scales=7, pairs_per_scale=120,
                      lattice=65, random_pairs=2000) -> SampleCloud:
    """Dyadic-pair cloud for a function on the real interval [a, b].

    Structured pairs step off a deterministic lattice (so endpoints and the
    midpoint always anchor every scale) and off random anchors; uniform
    random pairs fill the remaining scale bins.
    """
    diam = float(b - a)
    blocks = [np.linspace(a, b, lattice)]
    pair_blocks = []
    offset = lattice
    for s in range(1, n_scales + 1):
        d = diam * 2.0 ** -s
        anchors = np.concatenate([np.linspace(a, b, lattice),
                                  rng.uniform(a, b, size=pairs_per_scale)])
        for sign in (1.0, -1.0):
            partner = anchors + sign * d
            ok = (partner >= a) & (partner <= b)
            blocks.extend([anchors[ok], partner[ok]])
            m = int(ok.sum())
            idx = np.arange(offset, offset + m)
            pair_blocks.append(np.stack([idx, idx + m], axis=1))
            offset += 2 * m
    x = np.concatenate(blocks)
    pair_blocks.append(rng.integers(0, len(x), size=(random_pairs, 2)))
    vals = np.asarray(f(x), dtype=complex)
    return _assemble(x[:, None], vals, np.concatenate(pair_blocks), diam,
                     n_scales)


def cloud_on_product(f, domain, rng, n_scales=6, pairs_per_scale=120,
                     random_pairs=1500, margin=0.1, axis=None) -> SampleCloud:
    """Dyadic-pair cloud for a function on a product of planar domains.

    Points are embedded as real vectors (re z_1, im z_1, ..). With axis set
    (1-based), partners differ from anchors only in that complex coordinate,
    which estimates the per-variable seminorm.
    """
    n = domain.dimension
    diam = float(np.sqrt(sum(d.diameter ** 2 for d in domain.factors)))
    anchors_pool = domain.interior_points(rng, 8 * pairs_per_scale, margin)

    zpts = [anchors_pool]
    pairs = []
    offset = len(anchors_pool)
    for s in range(1, n_scales + 1):
        d = diam * 2.0 ** -s
        got = 0
        a_rows, b_rows = [], []
        guard = 0
        while got < pairs_per_scale and guard < 60:
            guard += 1
            idx = rng.integers(0, len(anchors_pool), size=4 * pairs_per_scale)
            cand = anchors_pool[idx]
            if axis is None:
                direc = rng.standard_normal((len(cand), 2 * n))
                direc /= np.linalg.norm(direc, axis=1, keepdims=True)
                step = (direc[:, 0::2] + 1j * direc[:, 1::2]) * d
            else:
                phase = np.exp(2j * np.pi * rng.uniform(size=len(cand)))
                step = np.zeros((len(cand), n), dtype=complex)
                step[:, axis - 1] = phase * d
            part = cand + step
            ok = domain.contains(part) & (domain.boundary_margin(part) > margin)
            take = min(pairs_per_scale - got, int(ok.sum()))
            a_rows.append(cand[ok][:take])
            b_rows.append(part[ok][:take])
            got += take
        a_rows = np.concatenate(a_rows)
        b_rows = np.concatenate(b_rows)
        lo = offset
        zpts.extend([a_rows, b_rows])
        offset += 2 * len(a_rows)
        idx = np.arange(lo, lo + len(a_rows))
        pairs.append(np.stack([idx, idx + len(a_rows)], axis=1))

    z = np.concatenate(zpts, axis=0)
    if axis is None and random_pairs:
        pairs.append(rng.integers(0, len(z), size=(random_pairs, 2)))
    vals = np.asarray(f(z), dtype=complex)
    coords = np.empty((len(z), 2 * n))
    coords[:, 0::2] = z.real
    coords[:, 1::2] = z.imag
    return _assemble(coords, vals, np.concatenate(pairs), diam, n_scales,
                     axis=axis)


def with_extra_pairs(cloud: SampleCloud, rng, count=500) -> SampleCloud:
    """The same cloud with extra random pairs appended."""
    extra = rng.integers(0, len(cloud.points), size=(count, 2))
    pairs = np.concatenate([cloud.pairs, extra])
    d = np.linalg.norm(cloud.points[pairs[:, 0]] - cloud.points[pairs[:, 1]],
                       axis=1)
    keep = d > 0
    ids, scales = _bin_scales(d[keep], cloud.diameter, len(cloud.scale_values))
    return replace(cloud, pairs=pairs[keep], distances=d[keep], scale_ids=ids)


def seminorm(cloud: SampleCloud, alpha: float) -> HolderEstimate:
    """Supremum of |f(x) - f(y)| / |x - y|^alpha over the pair set."""
    if not 0 < alpha <= 1:
        raise HolderError(f"alpha must lie in (0, 1], got {alpha}")
    if len(cloud.pairs) == 0:
        raise HolderError("empty pair set")
    inc = np.abs(cloud.values[cloud.pairs[:, 0]]
                 - cloud.values[cloud.pairs[:, 1]])
    q = inc / cloud.distances ** alpha
    k = int(np.argmax(q))
    pair = (int(cloud.pairs[k, 0]), int(cloud.pairs[k, 1]),
            float(cloud.distances[k]))
    return HolderEstimate(alpha, float(q[k]), pair)


def per_variable_seminorm(cloud: SampleCloud, alpha: float) -> HolderEstimate:
    """Seminorm over pairs differing in a single complex coordinate."""
    if cloud.axis is None:
        raise HolderError("cloud was not built with a restricted axis")
    return seminorm(cloud, alpha)


def holder_norm(cloud: SampleCloud, alpha: float) -> float:
    """Sampled sup norm plus alpha-seminorm."""
    return cloud.sup_norm() + seminorm(cloud, alpha).seminorm


def exponent_fit(cloud: SampleCloud, noise_floor=0.0,
                 min_scales=4) -> HolderEstimate:
    """Fit the growth exponent of increments against the separation scale.

    Scales whose maximum increment does not exceed 10x the noise floor are
    dropped before the regression; at least min_scales must remain.
    """
    inc = np.abs(cloud.values[cloud.pairs[:, 0]]
                 - cloud.values[cloud.pairs[:, 1]])
    logs_d, logs_m = [], []
    for s, d in enumerate(cloud.scale_values):
        # only pairs whose separation sits tightly on the nominal scale,
        # otherwise bin-edge pairs tilt the regression
        sel = (cloud.scale_ids == s) \
            & (np.abs(np.log2(cloud.distances / d)) <= 0.1)
        if not sel.any():
            continue
        m = float(inc[sel].max())
        if m <= 10.0 * noise_floor or m == 0.0:
            continue
        logs_d.append(np.log(d))
        logs_m.append(np.log(m))
    if len(logs_d) < min_scales:
        raise HolderError(f"only {len(logs_d)} usable scales, "
                          f"need {min_scales}")
    slope, intercept = np.polyfit(logs_d, logs_m, 1)
    pred = slope * np.asarray(logs_d) + intercept
    ss_res = float(np.sum((np.asarray(logs_m) - pred) ** 2))
    ss_tot = float(np.sum((np.asarray(logs_m) - np.mean(logs_m)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    alpha = float(np.clip(slope, 1e-9, 1.0))
    est = seminorm(cloud, alpha)
    return HolderEstimate(alpha, est.seminorm, est.argmax_pair, fit_r2=r2)


def divided_difference_quotients(f, x0, k, exponent, scales, direction=-1.0):
    """|Delta^(k+1) f| / d^(k + exponent) anchored at x0, per scale.

    Delta^(k+1) is the (k+1)-fold difference over step direction*d starting
    at x0; for k = 0 this is |f(x0) - f(x0 + direction*d)| / d^exponent.
    An exponent above the true Hölder class makes these grow as d shrinks.
    """
    from math import comb
    out = []
    for d in scales:
        acc = 0.0 + 0.0j
        for i in range(k + 2):
            acc += (-1) ** i * comb(k + 1, i) * complex(f(x0 + direction * d * i))
        out.append((float(d), abs(acc) / d ** (k + exponent)))
    return out


def cloud_to_csv(cloud: SampleCloud, path):
    """Write points and values as columns x0.., re_f, im_f."""
    dim = cloud.points.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(dim)] + ["re_f", "im_f"])
        for p, v in zip(cloud.points, cloud.values):
            w.writerow([repr(float(c)) for c in p]
                       + [repr(float(v.real)), repr(float(v.imag))])


def cloud_from_csv(path, n_scales=6, rng=None, max_all_pairs=1500) -> SampleCloud:
    """Rebuild a cloud from CSV; the pair index is re-derived from distances."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, data = rows[0], rows[1:]
    dim = len(head) - 2
    arr = np.array([[float(c) for c in r] for r in data])
    points, values = arr[:, :dim], arr[:, dim] + 1j * arr[:, dim + 1]
    m = len(points)
    if m <= max_all_pairs:
        i, k = np.triu_indices(m, 1)
        pairs = np.stack([i, k], axis=1)
    else:
        rng = np.random.default_rng(17) if rng is None else rng
        pairs = rng.integers(0, m, size=(40 * m, 2))
    span = np.linalg.norm(points.max(axis=0) - points.min(axis=0))
    return _assemble(points, values, pairs, float(span), n_scales)


# -- mollifier --------------------------------------------------------------

_NORM_CACHE = {}


def _bump(r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = np.exp(1.0 / (r[inside] ** 2 - 1.0))
    return out


def _normalization(dimension: int) -> float:
    if dimension not in _NORM_CACHE:
        if dimension == 1:
            total, _ = quad(lambda y: _bump(np.array([y]))[0], -1.0, 1.0,
                            epsabs=1e-12, epsrel=1e-12)
        elif dimension == 2:
            rad, _ = quad(lambda r: r * _bump(np.array([r]))[0], 0.0, 1.0,
                          epsabs=1e-12, epsrel=1e-12)
            total = 2.0 * np.pi * rad
        else:
            raise HolderError("only dimensions 1 and 2 are implemented")
        _NORM_CACHE[dimension] = 1.0 / total
    return _NORM_CACHE[dimension]


class Mollifier:
    """Unit-mass bump kernel C exp(1/(|x|^2 - 1)) supported in the unit ball.

    The normalization constant is computed once per dimension by adaptive
    quadrature and cached.
    """

    def __init__(self, dimension=1, polar_nodes=(64, 64)):
        self.dimension = int(dimension)
        self.normalization = _normalization(self.dimension)
        self._polar = polar_nodes

    def density(self, x):
        x = np.asarray(x, dtype=float)
        r = np.abs(x) if self.dimension == 1 else np.linalg.norm(x, axis=-1)
        return self.normalization * _bump(r)

    def mass(self) -> float:
        """Integral of the kernel under this object's own quadrature."""
        if self.dimension == 1:
            total, _ = quad(lambda y: self.density(np.array([y]))[0],
                            -1.0, 1.0, epsabs=1e-10, epsrel=1e-10)
            return total
        nr, _ = self._polar
        xg, wg = np.polynomial.legendre.leggauss(nr)
        r = 0.5 * (xg + 1.0)
        wr = 0.5 * wg
        dens = self.normalization * _bump(r)
        return float(2.0 * np.pi * np.sum(dens * r * wr))

    def mollify(self, f, j, x, boundary_distance=None):
        """Average of f over the 1/j-ball around x against the kernel.

        boundary_distance, when given, maps x to its distance from the
        domain boundary; points with distance <= 1/j are rejected.
        """
        if j <= 0:
            raise HolderError("mollification index j must be positive")
        if boundary_distance is not None and boundary_distance(x) <= 1.0 / j:
            raise HolderError(
                f"point within 1/{j} of the boundary cannot be mollified")
        if self.dimension == 1:
            val, _ = quad(lambda y: (self.density(np.array([y]))[0]
                                     * complex(f(x - y / j)).real),
                          -1.0, 1.0, epsabs=1e-11, epsrel=1e-11, limit=200)
            imag, _ = quad(lambda y: (self.density(np.array([y]))[0]
                                      * complex(f(x - y / j)).imag),
                           -1.0, 1.0, epsabs=1e-11, epsrel=1e-11, limit=200)
            return complex(val, imag)
        nr, nt = self._polar
        xg, wg = np.polynomial.legendre.leggauss(nr)
        r = 0.5 * (xg + 1.0)
        wr = 0.5 * wg
        th = (np.arange(nt) + 0.5) * (2.0 * np.pi / nt)
        disp = r[:, None] * np.exp(1j * th)[None, :]
        pts = complex(x) - disp / j
        vals = np.asarray(f(pts.ravel()), dtype=complex).reshape(disp.shape)
        dens = self.normalization * _bump(r)
        return complex(np.sum((dens * r * wr)[:, None] * vals)
                       * (2.0 * np.pi / nt))


def mollifier_convergence_curve(f, alpha, alpha_prime, j_list, subdomain,
                                full_domain=(-1.0, 1.0), rng=None,
                                n_scales=6, pairs_per_scale=120):
    """Measured C^alpha' norms of f_j - f on a compact subinterval.

    alpha_prime must be strictly below the data exponent alpha; the theory
    then gives convergence to zero (without a rate).
    """
    if not alpha_prime < alpha:
        raise HolderError("requires alpha_prime < alpha")
    a, b = subdomain
    lo, hi = full_domain
    if not lo < a < b < hi:
        raise HolderError("subdomain must be compactly inside the domain")
    rng = np.random.default_rng(20) if rng is None else rng
    moll = Mollifier(1)
    jmin_margin = min(a - lo, hi - b)

    base = cloud_on_interval(f, a, b, rng, n_scales=n_scales,
                             pairs_per_scale=pairs_per_scale, random_pairs=400)
    out = []
    for j in j_list:
        if 1.0 / j >= jmin_margin:
            raise HolderError(f"j={j} too small for the subdomain margin")
        fj = np.array([moll.mollify(f, j, x) for x in base.points[:, 0]],
                      dtype=complex)
        phi = replace(base, values=fj - base.values)
        out.append((int(j), holder_norm(phi, alpha_prime)))
    return out


def ramp_moment(alpha: float, nodes=2000) -> float:
    """int_0^1 rho(y) y^alpha dy by substituted Gauss-Legendre quadrature.

    Independent of the adaptive rule used by mollify: y = t^2 softens the
    endpoint singularity and a fixed high-order rule does the rest.
    """
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (xg + 1.0)
    w = 0.5 * wg
    y = t * t
    dens = _normalization(1) * _bump(y)
    return float(np.sum(dens * y ** alpha * 2.0 * t * w))


def mollifier_counterexample_gap(alpha: float, j_list):
    """Per-j seminorm quotient of the mollification error of x_+^alpha.

    The quotient (phi_j(0) - phi_j(-1/j)) / (1/j)^alpha is constant in j and
    equals the kernel moment int_0^1 rho(y) y^alpha dy, so the C^alpha error
    of mollification does not vanish. Returns (list of (j, quotient),
    phi_j(-1/j) values, independent moment).
    """
    if not 0 < alpha < 1:
        raise HolderError("alpha must lie in (0, 1)")
    moll = Mollifier(1)

    def ramp(x):
        return x ** alpha if x > 0 else 0.0

    quotients, at_shift = [], []
    for j in j_list:
        fj0 = complex(moll.mollify(ramp, j, 0.0)).real
        fjm = complex(moll.mollify(ramp, j, -1.0 / j)).real
        phi0 = fj0 - ramp(0.0)
        phim = fjm - ramp(-1.0 / j)
        quotients.append((int(j), (phi0 - phim) * j ** alpha))
        at_shift.append(phim)
    return quotients, at_shift, ramp_moment(alpha)
