"""Bidisc forms with a boundary branch point and the circle functional w.

The data (z1 - 1)^(k+a) dzbar_2 (and its power-over-log variant) is smooth
inside the bidisc but only finitely Hölder up to the boundary point z1 = 1.
Integrating a solution over the circle |z2| = 1/2 produces a one-variable
function w whose Hölder exponent at 1 equals that of the data: any solution
differs by a function holomorphic in z2, which the circle integral kills.
Measuring the exponent of w therefore shows the solution gains no
regularity.
"""

from __future__ import annotations

import numpy as np

from .config import DEFAULT, SolverConfig
from .geometry import make_bidisc, TWO_PI
from .holder import divided_difference_quotients
from .product import PolyN, ScalarFieldN, ZeroOneForm, solve


def branch_arg(w):
    """Argument chosen in (pi/2, 3pi/2), continuous where Re w < 0."""
    a = np.angle(np.asarray(w, dtype=complex))
    return np.where(a <= 0, a + TWO_PI, a)


def power_branch(w, p):
    """w^p with the (pi/2, 3pi/2) branch of the argument."""
    w = np.asarray(w, dtype=complex)
    r = np.abs(w)
    out = np.zeros_like(w)
    ok = r > 0
    out[ok] = np.exp(p * (np.log(r[ok]) + 1j * branch_arg(w[ok])))
    return out


def log_branch(w):
    """log w with the (pi/2, 3pi/2) branch of the argument."""
    w = np.asarray(w, dtype=complex)
    return np.log(np.abs(w)) + 1j * branch_arg(w)


def power_form(k: int, alpha: float) -> ZeroOneForm:
    """(z1 - 1)^(k + alpha) dzbar_2 on the bidisc; closed, C^(k,alpha)."""
    if k < 0 or not 0 < alpha < 1:
        raise ValueError("need k >= 0 and 0 < alpha < 1")
    p = k + alpha

    def f2(pts):
        return power_branch(pts[:, 0] - 1.0, p)

    zero = lambda pts: np.zeros(pts.shape[0], dtype=complex)
    return ZeroOneForm([
        ScalarFieldN(eval=zero, partials={(1,): zero}),
        ScalarFieldN(eval=f2, partials={(0,): zero}),
    ])


def power_log_form(k: int) -> ZeroOneForm:
    """(z1 - 1)^(k+1) / log(z1 - 1) dzbar_2 on the bidisc; closed, C^(k,1)."""
    if k < 0:
        raise ValueError("need k >= 0")

    def f2(pts):
        w = pts[:, 0] - 1.0
        out = np.zeros(pts.shape[0], dtype=complex)
        ok = np.abs(w) > 0
        out[ok] = power_branch(w[ok], k + 1) / log_branch(w[ok])
        return out

    zero = lambda pts: np.zeros(pts.shape[0], dtype=complex)
    return ZeroOneForm([
        ScalarFieldN(eval=zero, partials={(1,): zero}),
        ScalarFieldN(eval=f2, partials={(0,): zero}),
    ])


def contour_functional(u, xi, radius=0.5, nodes=256):
    """Integral of u(xi, .) over the circle |z2| = radius.

    Any holomorphic-in-z2 part of u integrates to zero, so the value only
    depends on the solved data, not on which solution operator produced u.
    """
    th = np.arange(nodes) * (TWO_PI / nodes)
    z2 = radius * np.exp(1j * th)
    w = 1j * z2 * (TWO_PI / nodes)
    pts = np.stack([np.full(nodes, complex(xi)), z2], axis=1)
    ueval = u.evaluate if hasattr(u, "evaluate") else \
        (lambda p: np.asarray(u(p), dtype=complex))
    return complex(np.sum(ueval(pts) * w))


def closed_form_w(xi, k, alpha=None, variant="power"):
    """The circle functional of the branch solutions, in closed form."""
    xi = np.asarray(xi, dtype=complex)
    if variant == "power":
        if alpha is None:
            raise ValueError("power variant needs alpha")
        vals = (np.pi * 1j / 2) * power_branch(xi - 1.0, k + alpha)
    elif variant == "log":
        w = xi - 1.0
        vals = np.zeros_like(np.atleast_1d(w))
        flat = np.atleast_1d(w)
        ok = np.abs(flat) > 0
        vals[ok] = (np.pi * 1j / 2) * power_branch(flat[ok], k + 1) \
            / log_branch(flat[ok])
        vals = vals.reshape(w.shape)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return complex(vals) if np.isscalar(xi) or xi.ndim == 0 else vals


def fit_w_exponent(wfunc, k, scales=None):
    """Fitted Hölder exponent of the k-th difference quotient of w near 1.

    Samples w along the real approach 1 - 2^-1 .. 1 - 2^-8 and regresses the
    (k+1)-fold difference magnitude divided by d^k against the scale d.
    Returns (alpha_hat, fit_r2).
    """
    scales = 2.0 ** -np.arange(1, 9) if scales is None else np.asarray(scales)
    rows = divided_difference_quotients(wfunc, 1.0, k, 0.0, scales)
    d = np.array([r[0] for r in rows])
    q = np.array([r[1] for r in rows])
    ok = q > 0
    slope, intercept = np.polyfit(np.log(d[ok]), np.log(q[ok]), 1)
    pred = slope * np.log(d[ok]) + intercept
    ss_res = float(np.sum((np.log(q[ok]) - pred) ** 2))
    ss_tot = float(np.sum((np.log(q[ok]) - np.mean(np.log(q[ok]))) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def divergence_quotients(wfunc, k, excess=0.5, scales=None):
    """Difference quotients of w at exponent k + 1 + excess near xi = 1.

    For data in the k,1 class but no better, these grow without bound as the
    scale shrinks; boundedness would certify membership one class higher.
    """
    scales = 2.0 ** -np.arange(2, 25, 2) if scales is None else np.asarray(scales)
    return divided_difference_quotients(wfunc, 1.0, k, 1.0 + excess, scales)


def divergence_flagged(quotients, growth=4.0, tail=4):
    """True when the quotients keep growing and end well above the start."""
    q = [v for _, v in quotients]
    increasing_tail = all(q[i] < q[i + 1] for i in range(len(q) - tail - 1,
                                                         len(q) - 1))
    return increasing_tail and q[-1] > growth * q[0]


def default_xi_grid(count=10, radius=0.55):
    th = (np.arange(count) + 0.5) * (TWO_PI / count)
    return radius * np.exp(1j * th)


def no_gain_report(k, alpha=None, variant="power", cfg: SolverConfig = DEFAULT,
                   xi_grid=None, contour_nodes=256) -> dict:
    """Solve the branch data numerically and compare w against closed form.

    Returns the reportable record: the numeric circle functional on a grid
    of interior xi, its closed-form counterpart with the relative mismatch,
    and the fitted exponent of w at the boundary point (from the closed
    form, whose match the grid comparison has just established).
    """
    if variant == "power":
        form = power_form(k, alpha)
    elif variant == "log":
        form = power_log_form(k)
    else:
        raise ValueError(f"unknown variant {variant!r}")

    # Accuracy here is set entirely by the inner boundary quadrature against
    # the data's boundary singularity, so run it at full density. The solid
    # transforms act on functions constant in their own variable (the data
    # has no z2 dependence), which the subtraction integrates exactly, so the
    # area mesh and patch can stay coarse.
    cfg = cfg.with_overrides(nested_boundary_nodes=cfg.boundary_nodes,
                             area_radial=cfg.nested_area_radial,
                             area_angular=cfg.nested_area_angular,
                             patch_radial=8, patch_angular=16)
    u = solve(make_bidisc(), form, cfg)

    xi_grid = default_xi_grid() if xi_grid is None else np.asarray(xi_grid)
    w_num = np.array([contour_functional(u, xi, nodes=contour_nodes)
                      for xi in xi_grid])
    w_cl = closed_form_w(xi_grid, k, alpha, variant)
    max_rel = float(np.max(np.abs(w_num - w_cl) / np.abs(w_cl)))

    wfunc = lambda x: closed_form_w(complex(x), k, alpha, variant)
    report = {
        "k": int(k),
        "alpha": None if alpha is None else float(alpha),
        "variant": variant,
        "xi_grid": [[float(x.real), float(x.imag)] for x in xi_grid],
        "w_numeric": [[float(v.real), float(v.imag)] for v in w_num],
        "w_closed": [[float(v.real), float(v.imag)] for v in np.atleast_1d(w_cl)],
        "max_rel_err": max_rel,
    }
    if variant == "power":
        alpha_hat, r2 = fit_w_exponent(wfunc, k)
        report["alpha_hat"] = alpha_hat
        report["fit_r2"] = r2
        # quotients half a class above the true exponent must blow up
        report["divergence_flagged"] = divergence_flagged(
            divergence_quotients(wfunc, k, excess=alpha - 0.5))
    else:
        report["alpha_hat"] = None
        report["fit_r2"] = None
        report["divergence_flagged"] = divergence_flagged(
            divergence_quotients(wfunc, k, excess=0.5))
    return report
