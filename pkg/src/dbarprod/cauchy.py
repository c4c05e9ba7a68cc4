"""One-variable Cauchy-kernel operators on a planar domain.

transform_T   solid transform  -(1/pi) int_D f(zeta)/(zeta-z) dA(zeta)
integral_S    boundary integral (1/2pi i) int_bD f(zeta)/(zeta-z) dzeta
plemelj_boundary_value   principal-value boundary trace of integral_S

transform_T removes the kernel singularity by subtraction,
    T f(z) = f(z) T1(z) + T(f - f(z))(z),      T1(z) = conj(z) - S(conj)(z),
and integrates the subtracted part with a fixed area mesh smoothly blended
into a small moving polar patch centered at z. The blend keeps the quadrature
error a smooth function of z, which finite-difference derivative checks
require.
"""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass
from typing import Callable, Optional

from .config import DEFAULT, SolverConfig
from .geometry import PlanarDomain, TWO_PI

_GL_CACHE = {}


def gauss_legendre(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


class EvaluationError(ValueError):
    """An operator was asked to evaluate at an invalid point."""


@dataclass
class ScalarField1D:
    """Complex-valued function on the closure of a planar domain.

    eval must accept complex ndarrays. dbar, when present, evaluates the
    conjugate-derivative d/d(zbar) analytically; dz likewise for d/dz.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    dbar: Optional[Callable[[np.ndarray], np.ndarray]] = None
    dz: Optional[Callable[[np.ndarray], np.ndarray]] = None
    holder_claim: Optional[tuple] = None

    def __call__(self, z):
        return np.asarray(self.eval(np.asarray(z, dtype=complex)), dtype=complex)


def constant_field(c) -> ScalarField1D:
    c = complex(c)
    return ScalarField1D(eval=lambda z: np.full_like(z, c, dtype=complex),
                         dbar=lambda z: np.zeros_like(z, dtype=complex),
                         dz=lambda z: np.zeros_like(z, dtype=complex))


def _as_eval(f):
    if hasattr(f, "eval"):
        fe = f.eval
    else:
        fe = f
    return lambda z: np.asarray(fe(np.asarray(z, dtype=complex)), dtype=complex)


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


def _validate_interior(domain, z, cfg, what):
    inside = np.atleast_1d(domain.contains(z, cfg.boundary_proximal_tol))
    if not inside.all():
        bad = np.atleast_1d(z)[~inside]
        raise EvaluationError(
            f"{what}: {bad[:3]}... not interior or boundary-proximal")


def cauchy_T1(domain: PlanarDomain, z, bq=None, cfg: SolverConfig = DEFAULT):
    """Solid transform of the constant 1, via the boundary identity
    T1(z) = conj(z) - S(conj)(z)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    bq = domain.boundary_quadrature(cfg.boundary_nodes) if bq is None else bq
    vals = np.conj(bq.points)
    out = np.empty(z.shape, dtype=complex)
    for lo in range(0, len(z), 2048):
        zz = z[lo:lo + 2048]
        s = np.sum(vals[None, :] * bq.weights[None, :]
                   / (bq.points[None, :] - zz[:, None]), axis=1) / (2j * np.pi)
        out[lo:lo + 2048] = np.conj(zz) - s
    return out


def integral_S(domain: PlanarDomain, f, z, bq=None, cfg: SolverConfig = DEFAULT,
               validate=True):
    """Boundary Cauchy integral at interior points (vectorized over z)."""
    fe = _as_eval(f)
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if validate:
        _validate_interior(domain, z, cfg, "integral_S")
    bq = domain.boundary_quadrature(cfg.boundary_nodes) if bq is None else bq
    vals = fe(bq.points)
    out = np.empty(z.shape, dtype=complex)
    for lo in range(0, len(z), 2048):
        zz = z[lo:lo + 2048]
        out[lo:lo + 2048] = np.sum(
            vals[None, :] * bq.weights[None, :]
            / (bq.points[None, :] - zz[:, None]), axis=1) / (2j * np.pi)
    return complex(out[0]) if scalar else out


def transform_T(domain: PlanarDomain, f, z, aq=None, bq=None,
                cfg: SolverConfig = DEFAULT, validate=True,
                mesh_values=None):
    """Solid Cauchy transform at interior points (vectorized over z).

    mesh_values optionally passes precomputed f(aq.nodes) so nested callers
    can share them across a batch.
    """
    fe = _as_eval(f)
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if validate:
        _validate_interior(domain, z, cfg, "transform_T")
    aq = domain.area_quadrature(cfg=cfg) if aq is None else aq
    bq = domain.boundary_quadrature(cfg.boundary_nodes) if bq is None else bq

    fz = fe(z)
    t1 = cauchy_T1(domain, z, bq=bq, cfg=cfg)

    bdist = domain.boundary_distance(z)
    rp = np.minimum(cfg.patch_factor * aq.max_cell_diameter,
                    cfg.patch_boundary_clip * bdist)
    if np.any(rp <= 0):
        raise EvaluationError("transform_T: evaluation point on the boundary")

    fmesh = fe(aq.nodes) if mesh_values is None else mesh_values

    # far field: fixed mesh, integrand faded out smoothly inside the patch
    acc = np.empty(z.shape, dtype=complex)
    chunk = max(1, 4_000_000 // max(1, len(aq.nodes)))
    for lo in range(0, len(z), chunk):
        zz = z[lo:lo + chunk, None]
        d = aq.nodes[None, :] - zz
        ad = np.abs(d)
        blend = _smoothstep(ad / rp[lo:lo + chunk, None])
        safe = np.where(ad < 1e-14, 1.0, d)
        g = np.where(ad < 1e-14, 0.0,
                     (fmesh[None, :] - fz[lo:lo + chunk, None]) / safe)
        acc[lo:lo + chunk] = np.sum(aq.weights[None, :] * blend * g, axis=1)

    # near field: polar patch around z; the r from the Jacobian cancels the
    # kernel, leaving (f - f(z)) e^{-i angle} with no singular factor
    xg, wg = gauss_legendre(cfg.patch_radial)
    nt = cfg.patch_angular
    th = (np.arange(nt) + 0.5) * (TWO_PI / nt)
    rr = 0.5 * rp[:, None] * (xg + 1.0)[None, :]            # (m, npr)
    wr = 0.5 * rp[:, None] * wg[None, :]
    eta = 1.0 - _smoothstep(0.5 * (xg + 1.0))               # (npr,)
    disp = rr[:, :, None] * np.exp(1j * th)[None, None, :]  # (m, npr, nt)
    pts = z[:, None, None] + disp
    fpatch = fe(pts.reshape(len(z), -1)).reshape(pts.shape)
    integrand = (fpatch - fz[:, None, None]) * np.exp(-1j * th)[None, None, :]
    patch = np.sum((wr * eta[None, :])[:, :, None] * integrand,
                   axis=(1, 2)) * (TWO_PI / nt)

    out = fz * t1 + (-1.0 / np.pi) * (acc + patch)
    return complex(out[0]) if scalar else out


def plemelj_boundary_value(domain: PlanarDomain, f, curve_index, theta,
                           n=None, cfg: SolverConfig = DEFAULT):
    """Principal-value boundary trace of the Cauchy integral.

    Computed by subtraction: PV int f/(zeta-t) dzeta over the full oriented
    boundary equals int (f-f(t))/(zeta-t) dzeta + f(t) * i pi, and the trace
    is that divided by 2 pi i, plus f(t)/2. On the curve carrying t the
    quadrature grid is phase-shifted to start at t; the 0/0 node is filled
    with the symmetric difference quotient of f along the curve.
    """
    fe = _as_eval(f)
    n = cfg.boundary_nodes if n is None else int(n)
    curve = domain.curves[curve_index]
    theta = float(theta)
    t = complex(curve.points(np.array([theta]))[0])
    ft = complex(fe(np.array([t]))[0])

    total = 0.0 + 0.0j
    for k, c in enumerate(domain.curves):
        if k == curve_index:
            th = theta + np.arange(n) * (TWO_PI / n)
        else:
            th = np.arange(n) * (TWO_PI / n)
        pts = c.points(th)
        w = c.velocities(th) * (TWO_PI / n)
        g = np.empty(n, dtype=complex)
        vals = fe(pts)
        if k == curve_index:
            g[1:] = (vals[1:] - ft) / (pts[1:] - t)
            eps = np.pi / n
            pa = c.points(np.array([theta + eps, theta - eps]))
            fa = fe(pa)
            g[0] = (fa[0] - fa[1]) / (pa[0] - pa[1])
        else:
            g[:] = (vals - ft) / (pts - t)
        total += np.sum(g * w)

    return (total + ft * 1j * np.pi) / (2j * np.pi) + ft / 2


def cauchy_green_residual(domain: PlanarDomain, f: ScalarField1D, points,
                          cfg: SolverConfig = DEFAULT) -> float:
    """max over the points of |f - Sf - T(dbar f)|."""
    if f.dbar is None:
        raise EvaluationError("cauchy_green_residual needs an analytic dbar")
    z = np.atleast_1d(np.asarray(points, dtype=complex))
    sf = integral_S(domain, f, z, cfg=cfg)
    tf = transform_T(domain, f.dbar, z, cfg=cfg)
    return float(np.max(np.abs(f(z) - sf - tf)))


def fd_dbar(func, z, h):
    """Central finite-difference d/d(zbar) of a vectorized complex function."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    m = len(z)
    pts = np.concatenate([z + h, z - h, z + 1j * h, z - 1j * h])
    v = np.asarray(func(pts), dtype=complex)
    return (v[:m] - v[m:2 * m]) / (4 * h) + 1j * (v[2 * m:3 * m] - v[3 * m:]) / (4 * h)


def fd_dz(func, z, h):
    """Central finite-difference d/dz of a vectorized complex function."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    m = len(z)
    pts = np.concatenate([z + h, z - h, z + 1j * h, z - 1j * h])
    v = np.asarray(func(pts), dtype=complex)
    return (v[:m] - v[m:2 * m]) / (4 * h) - 1j * (v[2 * m:3 * m] - v[3 * m:]) / (4 * h)
