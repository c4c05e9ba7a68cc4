"""Slice operators and solution operators on products of planar domains.

For an n-fold product with factors D_1..D_n, slice_T / slice_S apply the
one-variable solid / boundary Cauchy operators in a chosen variable with the
remaining coordinates frozen. Two solution operators for dbar u = f (with
f = sum_j f_j dzbar_j) are provided:

  solve     u = sum_j T_j S_1 ... S_{j-1} f_j      (boundary compositions)
  solve_fp  u = sum over ordered index subsets of nested solid transforms
            applied to mixed conjugate derivatives of the data

The two agree for any sufficiently differentiable form, closed or not, which
operator_equality_gap measures. Variable indices in the public API are
1-based, matching the operator subscripts T_1..T_n.
"""

from __future__ import annotations

import itertools
import threading

import numpy as np
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

from .config import DEFAULT, SolverConfig
from .geometry import ProductDomain, TWO_PI
from . import cauchy
from .cauchy import EvaluationError, fd_dbar


@dataclass
class ScalarFieldN:
    """Complex function on the closure of a product domain.

    eval maps an (m, n) complex array of points to (m,) values. partials,
    when given, holds analytic mixed conjugate derivatives: the key
    (i_1, .., i_s) (0-based, strictly increasing) evaluates
    d^s f / dzbar_{i_1} .. dzbar_{i_s} with the same calling convention.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    partials: Optional[dict] = None
    holder_claim: Optional[tuple] = None

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=complex)
        if pts.ndim == 1:
            return complex(np.asarray(self.eval(pts[None, :]))[0])
        return np.asarray(self.eval(pts), dtype=complex)

    def partial(self, key):
        key = tuple(sorted(key))
        if not key:
            return self.eval
        if self.partials is None or key not in self.partials:
            raise EvaluationError(f"missing analytic partial {key}")
        return self.partials[key]


@dataclass
class ZeroOneForm:
    """(0,1)-form data: one coefficient field per dzbar_j."""

    components: list

    @property
    def dimension(self):
        return len(self.components)

    def validate_partials(self, domain: ProductDomain, rng=None, tol=1e-3,
                          npoints=10, h=1e-4):
        """Check declared first-order partials against finite differences."""
        rng = np.random.default_rng(7) if rng is None else rng
        pts = domain.interior_points(rng, npoints, margin=0.2)
        for comp in self.components:
            if comp.partials is None:
                continue
            for key, pfun in comp.partials.items():
                if len(key) != 1:
                    continue
                i = key[0]
                got = np.asarray(pfun(pts), dtype=complex)
                want = _fd_dbar_var(comp.eval, pts, i, h)
                if np.max(np.abs(got - want)) > tol:
                    raise EvaluationError(
                        f"declared partial {key} disagrees with finite "
                        f"differences by {np.max(np.abs(got - want)):.2e}")
        return self


def _fd_dbar_var(fn, pts, i, h):
    pts = np.asarray(pts, dtype=complex)

    def restricted(w):
        p = np.tile(pts, (len(w) // len(pts), 1))
        p[:, i] = w
        return fn(p)

    return fd_dbar(restricted, pts[:, i], h)


# -- polynomials in (z, zbar) --------------------------------------------

class PolyN:
    """Polynomial in z_1..z_n and their conjugates, with exact derivatives."""

    def __init__(self, n, terms=None):
        self.n = n
        self.terms = dict(terms or {})   # ((a..),(b..)) -> coeff

    def eval(self, pts):
        pts = np.asarray(pts, dtype=complex)
        out = np.zeros(pts.shape[0], dtype=complex)
        for (a, b), c in self.terms.items():
            mono = np.full(pts.shape[0], c, dtype=complex)
            for j in range(self.n):
                if a[j]:
                    mono *= pts[:, j] ** a[j]
                if b[j]:
                    mono *= np.conj(pts[:, j]) ** b[j]
            out += mono
        return out

    def dbar(self, j):
        out = {}
        for (a, b), c in self.terms.items():
            if b[j] == 0:
                continue
            nb = list(b)
            nb[j] -= 1
            key = (a, tuple(nb))
            out[key] = out.get(key, 0) + c * b[j]
        return PolyN(self.n, out)

    def mixed_dbar(self, key):
        p = self
        for j in key:
            p = p.dbar(j)
        return p

    def field(self) -> ScalarFieldN:
        partials = {}
        for order in range(1, self.n):
            for key in itertools.combinations(range(self.n), order):
                partials[key] = self.mixed_dbar(key).eval
        return ScalarFieldN(eval=self.eval, partials=partials)

    @staticmethod
    def random(rng, n, degree=2, scale=1.0):
        terms = {}
        exps = [e for e in itertools.product(range(degree + 1), repeat=2 * n)
                if sum(e) <= degree]
        for e in exps:
            c = scale * (rng.standard_normal() + 1j * rng.standard_normal())
            terms[(tuple(e[:n]), tuple(e[n:]))] = c
        return PolyN(n, terms)


def polynomial_form(polys) -> ZeroOneForm:
    return ZeroOneForm([p.field() for p in polys])


def random_polynomial_form(rng, n, degree=2) -> ZeroOneForm:
    return polynomial_form([PolyN.random(rng, n, degree) for _ in range(n)])


def constant_form(n, j, value=1.0) -> ZeroOneForm:
    """Form value * dzbar_j (1-based j) with all other components zero."""
    polys = [PolyN(n, {}) for _ in range(n)]
    zero = ((0,) * n, (0,) * n)
    polys[j - 1] = PolyN(n, {zero: complex(value)})
    return polynomial_form(polys)


def dzbar_of_monomial(n, conj_vars) -> ZeroOneForm:
    """The form dbar(prod of conj(z_i) for i in conj_vars), exactly closed."""
    base = PolyN(n, {((0,) * n, tuple(1 if i in conj_vars else 0
                                      for i in range(n))): 1.0})
    return polynomial_form([base.dbar(j) for j in range(n)])


# -- slice operators -------------------------------------------------------

def _area_res(cfg: SolverConfig, tier: int):
    """Mesh resolution tier: 0 full, 1 nested, 2 deep (many outer integrals)."""
    if tier >= 2:
        return cfg.deep_area_radial, cfg.deep_area_angular
    if tier == 1:
        return cfg.nested_area_radial, cfg.nested_area_angular
    return cfg.area_radial, cfg.area_angular


def _frozen_eval(f, pts, j0):
    """Callable in the j0-th coordinate with the others frozen per row.

    pts must share every coordinate except j0; the first row supplies the
    frozen values.
    """
    fe = f.eval if hasattr(f, "eval") else f
    frozen = np.asarray(pts, dtype=complex)[0]
    n = len(frozen)

    def call(w):
        w = np.asarray(w, dtype=complex).ravel()
        p = np.tile(frozen, (len(w), 1))
        p[:, j0] = w
        return np.asarray(fe(p), dtype=complex)

    return call


def slice_T(domain: ProductDomain, j, f, z, cfg: SolverConfig = DEFAULT):
    """Solid Cauchy transform in variable j (1-based) at the point z."""
    j0 = _check_index(domain, j)
    z = np.asarray(z, dtype=complex).reshape(1, -1)
    fn = _frozen_eval(f, z, j0)
    dom = domain.factors[j0]
    aq = dom.area_quadrature(*_area_res(cfg, 0), cfg=cfg)
    return complex(cauchy.transform_T(dom, fn, z[0, j0], aq=aq, cfg=cfg))


def slice_S(domain: ProductDomain, j, f, z, cfg: SolverConfig = DEFAULT):
    """Boundary Cauchy integral in variable j (1-based) at the point z."""
    j0 = _check_index(domain, j)
    z = np.asarray(z, dtype=complex).reshape(1, -1)
    fn = _frozen_eval(f, z, j0)
    return complex(cauchy.integral_S(domain.factors[j0], fn, z[0, j0], cfg=cfg))


def _check_index(domain, j):
    if not 1 <= j <= domain.dimension:
        raise EvaluationError(f"variable index {j} out of range "
                              f"1..{domain.dimension}")
    return j - 1


# -- batched slice transform ----------------------------------------------

def _slice_T_batch(domain: ProductDomain, j0, inner_eval, pts, cfg, tier=0):
    """T in variable j0 (0-based) of inner_eval, at an (m, n) point batch.

    Groups points sharing all coordinates except j0 so the fixed-mesh inner
    values are evaluated once per group; falls back to a flat chunked pass
    when the batch has (almost) no shared structure.
    """
    pts = np.asarray(pts, dtype=complex)
    m = pts.shape[0]
    dom = domain.factors[j0]
    aq = dom.area_quadrature(*_area_res(cfg, tier), cfg=cfg)

    others = pts.copy()
    others[:, j0] = 0.0
    _, inv = np.unique(others, axis=0, return_inverse=True)
    ngroups = int(inv.max()) + 1

    out = np.empty(m, dtype=complex)
    if ngroups <= max(1, m // 4):
        for g in range(ngroups):
            sel = np.flatnonzero(inv == g)
            fn = _frozen_eval(inner_eval, pts[sel], j0)
            out[sel] = cauchy.transform_T(dom, fn, pts[sel, j0], aq=aq,
                                          cfg=cfg, validate=False)
        return out
    return _slice_T_flat(dom, j0, inner_eval, pts, aq, cfg)


def _slice_T_flat(dom, j0, inner_eval, pts, aq, cfg):
    """Flat chunked transform: every point carries its own frozen coords."""
    fe = inner_eval.eval if hasattr(inner_eval, "eval") else inner_eval
    m = pts.shape[0]
    z = pts[:, j0]
    fz = np.asarray(fe(pts), dtype=complex)
    t1 = cauchy.cauchy_T1(dom, z, cfg=cfg)
    bdist = dom.boundary_distance(z)
    rp = np.minimum(cfg.patch_factor * aq.max_cell_diameter,
                    cfg.patch_boundary_clip * bdist)
    if np.any(rp <= 0):
        raise EvaluationError("transform point on the factor boundary")

    nodes, weights = aq.nodes, aq.weights
    K = len(nodes)
    xg, wg = cauchy.gauss_legendre(cfg.patch_radial)
    nt = cfg.patch_angular
    th = (np.arange(nt) + 0.5) * (TWO_PI / nt)
    eta = 1.0 - cauchy._smoothstep(0.5 * (xg + 1.0))

    acc = np.empty(m, dtype=complex)
    chunk = max(1, 2_000_000 // K)
    for lo in range(0, m, chunk):
        sel = slice(lo, min(m, lo + chunk))
        zc = z[sel]
        c = len(zc)
        inner_pts = np.repeat(pts[sel], K, axis=0)
        inner_pts[:, j0] = np.tile(nodes, c)
        vals = np.asarray(fe(inner_pts), dtype=complex).reshape(c, K)
        d = nodes[None, :] - zc[:, None]
        ad = np.abs(d)
        blend = cauchy._smoothstep(ad / rp[sel][:, None])
        safe = np.where(ad < 1e-14, 1.0, d)
        g = np.where(ad < 1e-14, 0.0, (vals - fz[sel][:, None]) / safe)
        acc[sel] = np.sum(weights[None, :] * blend * g, axis=1)

        rr = 0.5 * rp[sel][:, None] * (xg + 1.0)[None, :]
        wr = 0.5 * rp[sel][:, None] * wg[None, :]
        disp = rr[:, :, None] * np.exp(1j * th)[None, None, :]
        ppts = np.repeat(pts[sel], cfg.patch_radial * nt, axis=0)
        ppts[:, j0] = (zc[:, None, None] + disp).ravel()
        pv = np.asarray(fe(ppts), dtype=complex).reshape(c, cfg.patch_radial, nt)
        integ = (pv - fz[sel][:, None, None]) * np.exp(-1j * th)[None, None, :]
        acc[sel] += np.sum((wr * eta[None, :])[:, :, None] * integ,
                           axis=(1, 2)) * (TWO_PI / nt)

    return fz * t1 + (-1.0 / np.pi) * acc


class NestedSEvaluator:
    """S_1 .. S_{j-1} applied to f_j, evaluated at arbitrary point batches.

    The boundary grids enter as tensor contractions; points sharing the
    leading j-1 coordinates (whose Cauchy kernels they determine) are
    processed together.
    """

    def __init__(self, domain: ProductDomain, j0, f, cfg: SolverConfig):
        self.domain = domain
        self.j0 = j0                       # 0-based target variable
        self.f = f
        self.cfg = cfg
        self.bqs = [domain.factors[l].boundary_quadrature(cfg.nested_boundary_nodes)
                    for l in range(j0)]

    def eval(self, pts):
        pts = np.asarray(pts, dtype=complex)
        m, n = pts.shape
        d = self.j0
        if d == 0:
            return np.asarray(self.f.eval(pts), dtype=complex)
        prefix = pts[:, :d]
        _, inv = np.unique(prefix, axis=0, return_inverse=True)
        out = np.empty(m, dtype=complex)
        for g in range(int(inv.max()) + 1):
            sel = np.flatnonzero(inv == g)
            out[sel] = self._eval_group(pts[sel])
        return out

    def _eval_group(self, pts):
        d = self.j0
        z = pts[0, :d]
        kernels = []
        for l in range(d):
            bq = self.bqs[l]
            kernels.append(bq.weights / (bq.points - z[l]) / (2j * np.pi))
        grid_shape = tuple(len(k) for k in kernels)
        gsize = int(np.prod(grid_shape))
        P = pts.shape[0]
        out = np.empty(P, dtype=complex)
        chunk = max(1, 2_000_000 // gsize)
        grids = np.meshgrid(*[self.bqs[l].points for l in range(d)],
                            indexing="ij")
        for lo in range(0, P, chunk):
            sel = slice(lo, min(P, lo + chunk))
            c = pts[sel].shape[0]
            fpts = np.empty(grid_shape + (c, pts.shape[1]), dtype=complex)
            for l in range(d):
                fpts[..., l] = grids[l][..., None]
            for col in range(d, pts.shape[1]):
                fpts[..., col] = pts[sel, col]
            vals = np.asarray(self.f.eval(fpts.reshape(-1, pts.shape[1])),
                              dtype=complex).reshape(grid_shape + (c,))
            for k in reversed(kernels):
                vals = np.tensordot(k, vals, axes=([0], [0]))
            out[sel] = vals
        return out


# -- solution fields --------------------------------------------------------

class SolutionField:
    """Lazily evaluated solution with a point-value cache.

    provenance records which operator built it; resolution holds the config
    it is evaluated with. Evaluation is pure, so concurrent cache insertion
    is harmless (agreeing values, last writer wins).
    """

    def __init__(self, domain: ProductDomain, terms, provenance,
                 cfg: SolverConfig):
        self.domain = domain
        self.terms = terms          # list of callables pts -> values
        self.provenance = provenance
        self.resolution = cfg
        self._cache = {}
        self._lock = threading.Lock()

    def evaluate(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=complex))
        keys = [p.tobytes() for p in pts]
        missing = [i for i, k in enumerate(keys) if k not in self._cache]
        if missing:
            sub = pts[missing]
            if not self.domain.contains(sub).all() or np.any(
                    self.domain.boundary_margin(sub)
                    < self.resolution.boundary_proximal_tol):
                raise EvaluationError(
                    "solution evaluated outside the domain or too close "
                    "to the boundary")
            vals = np.zeros(len(missing), dtype=complex)
            for term in self.terms:
                vals += term(sub)
            with self._lock:
                for i, v in zip(missing, vals):
                    self._cache[keys[i]] = complex(v)
        return np.array([self._cache[k] for k in keys], dtype=complex)

    def __call__(self, z):
        return complex(self.evaluate(np.asarray(z, dtype=complex)[None, :])[0])

    def term_field(self, index):
        """A solution field exposing a single term (for diagnostics)."""
        return SolutionField(self.domain, [self.terms[index]],
                             f"{self.provenance}[term {index + 1}]",
                             self.resolution)


def solve(domain: ProductDomain, form: ZeroOneForm,
          cfg: SolverConfig = DEFAULT) -> SolutionField:
    """Solution via boundary compositions: sum_j T_j S_1..S_{j-1} f_j."""
    n = domain.dimension
    if form.dimension != n:
        raise EvaluationError("form dimension does not match the domain")

    terms = []
    for j0 in range(n):
        inner = NestedSEvaluator(domain, j0, form.components[j0], cfg)

        def term(pts, j0=j0, inner=inner):
            return _slice_T_batch(domain, j0, inner, pts, cfg,
                                  tier=1 if j0 >= 2 else 0)

        terms.append(term)
    return SolutionField(domain, terms, "composed-boundary", cfg)


def _chain_area_depth(s):
    # every transform of an s-deep chain runs at the same resolution tier
    return {1: 0, 2: 1}.get(s, 2)


def _nested_T_chain(domain, indices, g, pts, cfg, tier):
    """T_{i_1} .. T_{i_s} applied to g, evaluated at an (m, n) batch."""
    j0 = indices[0]
    if len(indices) == 1:
        inner = g
    else:
        inner = lambda p: _nested_T_chain(domain, indices[1:], g, p, cfg, tier)
    return _slice_T_batch(domain, j0, inner, pts, cfg, tier=tier)


def solve_fp(domain: ProductDomain, form: ZeroOneForm,
             cfg: SolverConfig = DEFAULT) -> SolutionField:
    """Solution via nested solid transforms of mixed conjugate derivatives.

    Requires every component to carry analytic partials up to total order
    n-1; nested finite differences are never used here.
    """
    n = domain.dimension
    if form.dimension != n:
        raise EvaluationError("form dimension does not match the domain")

    terms = []
    for s in range(1, n + 1):
        sign = (-1.0) ** (s - 1)
        for combo in itertools.combinations(range(n), s):
            i_last = combo[-1]
            key = combo[:-1]
            pfun = form.components[i_last].partial(key)
            gfield = ScalarFieldN(eval=pfun)
            tier = _chain_area_depth(s)

            def term(pts, combo=combo, gfield=gfield, sign=sign, tier=tier):
                return sign * _nested_T_chain(domain, list(combo), gfield,
                                              pts, cfg, tier)

            terms.append(term)
    return SolutionField(domain, terms, "nested-solid", cfg)


def operator_equality_gap(domain: ProductDomain, form: ZeroOneForm, points,
                          cfg: SolverConfig = DEFAULT) -> float:
    """max |solve - solve_fp| over the points; holds for non-closed forms."""
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    a = solve(domain, form, cfg).evaluate(pts)
    b = solve_fp(domain, form, cfg).evaluate(pts)
    return float(np.max(np.abs(a - b)))


def check_closed(domain: ProductDomain, form: ZeroOneForm, points, h=1e-4,
                 cfg: SolverConfig = DEFAULT) -> float:
    """max over i<j and the points of |dbar_i f_j - dbar_j f_i|."""
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    if np.any(domain.boundary_margin(pts) <= h):
        raise EvaluationError("closedness points too close to the boundary")
    n = domain.dimension
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            worst = max(worst, float(np.max(np.abs(
                _dbar_component(form, j, i, pts, h)
                - _dbar_component(form, i, j, pts, h)))))
    return worst


def _dbar_component(form, comp, var, pts, h):
    f = form.components[comp]
    if f.partials is not None and (var,) in f.partials:
        return np.asarray(f.partials[(var,)](pts), dtype=complex)
    return _fd_dbar_var(f.eval, pts, var, h)


def residual(domain: ProductDomain, u, form: ZeroOneForm, points, h=None,
             margin=0.2, cfg: SolverConfig = DEFAULT) -> float:
    """max over points and components of |FD dbar_j u - f_j|."""
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    diam = max(dom.diameter for dom in domain.factors)
    h = cfg.fd_step_rel * diam if h is None else h
    if np.any(domain.boundary_margin(pts) <= h + margin):
        raise EvaluationError(
            f"residual points need boundary margin > {h + margin:.3g}")

    ueval = u.evaluate if hasattr(u, "evaluate") else \
        (lambda p: np.asarray(u(p), dtype=complex))
    n = domain.dimension
    m = pts.shape[0]
    stencil = [pts]
    for j in range(n):
        for off in (h, -h, 1j * h, -1j * h):
            q = pts.copy()
            q[:, j] += off
            stencil.append(q)
    allv = ueval(np.concatenate(stencil, axis=0))

    worst = 0.0
    for j in range(n):
        base = m * (1 + 4 * j)
        vp, vm = allv[base:base + m], allv[base + m:base + 2 * m]
        vip, vim = allv[base + 2 * m:base + 3 * m], allv[base + 3 * m:base + 4 * m]
        dbar = (vp - vm) / (4 * h) + 1j * (vip - vim) / (4 * h)
        fj = np.asarray(form.components[j].eval(pts), dtype=complex)
        worst = max(worst, float(np.max(np.abs(dbar - fj))))
    return worst
