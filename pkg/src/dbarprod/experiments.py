"""Reproducible experiment drivers behind the command line.

Every experiment consumes an ExperimentConfig (seed, resolution overrides,
per-experiment options) and returns a ResultTable whose numeric columns are
bit-for-bit reproducible for a fixed config and seed. Timings are kept out
of the emitted files for exactly that reason.
"""

from __future__ import annotations

import csv
import io
import json
import time

import numpy as np
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .config import DEFAULT, SolverConfig
from . import cauchy, counterexamples, geometry, holder, product


class ExperimentError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    options: dict = field(default_factory=dict)
    seed: int = 12345
    out: Optional[str] = None
    fmt: str = "csv"
    nodes: Optional[int] = None
    mesh: Optional[str] = None

    def solver_config(self) -> SolverConfig:
        kw = {}
        if self.nodes:
            kw["boundary_nodes"] = int(self.nodes)
        if self.mesh:
            r, a = self.mesh.lower().split("x")
            kw["area_radial"], kw["area_angular"] = int(r), int(a)
        return DEFAULT.with_overrides(**kw) if kw else DEFAULT

    def echo(self) -> dict:
        out = {"experiment": self.experiment, "seed": int(self.seed),
               "version": __version__}
        if self.nodes:
            out["nodes"] = int(self.nodes)
        if self.mesh:
            out["mesh"] = self.mesh
        for k in sorted(self.options):
            out[f"opt_{k}"] = self.options[k]
        return out


@dataclass
class ResultTable:
    columns: dict
    meta: dict
    passed: bool
    failures: list
    timings: dict = field(default_factory=dict)
    record: Optional[dict] = None

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ExperimentError(f"ragged columns: {lengths}")


def _fmt_cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def emit(table: ResultTable, fmt: str, path) -> None:
    """Write the table; identical tables produce byte-identical files."""
    if fmt == "csv":
        buf = io.StringIO()
        for k in sorted(table.meta):
            buf.write(f"# {k}={table.meta[k]}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(table.columns))
        for row in zip(*table.columns.values()):
            w.writerow([_fmt_cell(v) for v in row])
        if not table.columns:
            pass
        data = buf.getvalue()
    elif fmt == "json":
        payload = table.record if table.record is not None else {
            "meta": table.meta,
            "columns": table.columns,
            "passed": table.passed,
            "failures": table.failures,
        }
        data = json.dumps(payload, sort_keys=True, ensure_ascii=False,
                          indent=1) + "\n"
    else:
        raise ExperimentError(f"unknown format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(data)


# -- shared pieces ----------------------------------------------------------

def _named_domain(name):
    return {
        "disc": lambda: geometry.make_disc(0, 1),
        "annulus": lambda: geometry.make_annulus(0, 0.5, 1.0),
        "ellipse": lambda: geometry.make_ellipse(0, 1.0, 0.5),
        "bidisc": geometry.make_bidisc,
        "tridisc": geometry.make_tridisc,
    }[name]()


def test_family_1d():
    """The five reference fields used by the one-variable identities."""
    return {
        "one": cauchy.constant_field(1.0),
        "conj": cauchy.ScalarField1D(lambda z: np.conj(z),
                                     dbar=lambda z: np.ones_like(z),
                                     dz=lambda z: np.zeros_like(z)),
        "conj_sq": cauchy.ScalarField1D(lambda z: np.conj(z) ** 2,
                                        dbar=lambda z: 2 * np.conj(z),
                                        dz=lambda z: np.zeros_like(z)),
        "abs_sq": cauchy.ScalarField1D(lambda z: (z * np.conj(z)).astype(complex),
                                       dbar=lambda z: z.astype(complex),
                                       dz=lambda z: np.conj(z)),
        "bump": cauchy.ScalarField1D(
            lambda z: np.exp(-4 * np.abs(z - 0.2 + 0.1j) ** 2).astype(complex),
            dbar=lambda z: -4 * (z - (0.2 - 0.1j))
            * np.exp(-4 * np.abs(z - 0.2 + 0.1j) ** 2)),
    }


def named_form(name, n=2):
    builders = {
        "dzbar2": lambda: product.constant_form(2, 2),
        "dbar_zb1zb2": lambda: product.dzbar_of_monomial(2, (0, 1)),
        "dbar_zb1zb2zb3": lambda: product.dzbar_of_monomial(3, (0, 1, 2)),
        "zb2_dzb1": lambda: product.polynomial_form(
            [product.PolyN(2, {((0, 0), (0, 1)): 1.0}), product.PolyN(2, {})]),
        "zb1_dzb1": lambda: product.polynomial_form(
            [product.PolyN(2, {((0, 0), (1, 0)): 1.0}), product.PolyN(2, {})]),
    }
    if name in builders:
        return builders[name]()
    if name.startswith("poly:"):
        spec = json.loads(name[5:])
        polys = []
        for comp in spec:
            terms = {}
            for a, b, re_c, im_c in comp:
                terms[(tuple(a), tuple(b))] = complex(re_c, im_c)
            polys.append(product.PolyN(len(spec), terms))
        return product.polynomial_form(polys)
    raise ExperimentError(f"unknown form {name!r}")


def closed_solution(name):
    if name == "dzbar2":
        return lambda p: np.conj(p[:, 1])
    if name == "dbar_zb1zb2":
        return lambda p: np.conj(p[:, 0]) * np.conj(p[:, 1])
    if name == "dbar_zb1zb2zb3":
        return lambda p: np.conj(p[:, 0]) * np.conj(p[:, 1]) * np.conj(p[:, 2])
    return None


def _grid_points(count, values=(-0.45 - 0.2j, -0.15 + 0.35j,
                                0.25 - 0.3j, 0.45 + 0.15j), n=2):
    vals = list(values)[:count]
    pts = [list(c) for c in __import__("itertools").product(vals, repeat=n)]
    return np.array(pts, dtype=complex)


# -- experiments ------------------------------------------------------------

def run_cauchy_green(config: ExperimentConfig) -> ResultTable:
    cfg = config.solver_config()
    rng = np.random.default_rng(config.seed)
    tol = float(config.options.get("tol", 1e-4))
    cols = {"domain": [], "function": [], "residual": []}
    failures = []
    for dom_name in config.options.get("domains", "disc,annulus").split(","):
        dom = _named_domain(dom_name.strip())
        pts = dom.interior_points(rng, int(config.options.get("points", 12)),
                                  margin=0.15)
        for fname, f in test_family_1d().items():
            r = cauchy.cauchy_green_residual(dom, f, pts, cfg=cfg)
            cols["domain"].append(dom_name.strip())
            cols["function"].append(fname)
            cols["residual"].append(r)
            if r >= tol:
                failures.append(f"{dom_name}/{fname}: residual {r:.2e}")
    return ResultTable(cols, config.echo(), not failures, failures)


def run_plemelj(config: ExperimentConfig) -> ResultTable:
    cfg = config.solver_config()
    tol = float(config.options.get("tol", 1e-8))
    npts = int(config.options.get("points", 32))
    one = cauchy.constant_field(1.0)
    smooth = cauchy.ScalarField1D(lambda z: np.exp(z) * np.conj(z))
    cols = {"domain": [], "kind": [], "curve": [], "param": [],
            "value_re": [], "value_im": [], "err": []}

    def row(domain, kind, curve, param, value, err):
        cols["domain"].append(domain)
        cols["kind"].append(kind)
        cols["curve"].append(curve)
        cols["param"].append(float(param))
        cols["value_re"].append(value.real)
        cols["value_im"].append(value.imag)
        cols["err"].append(float(err))

    failures = []
    for dom_name in config.options.get("domains", "disc,annulus").split(","):
        dom_name = dom_name.strip()
        dom = _named_domain(dom_name)
        per_curve = npts // len(dom.curves)
        for ci in range(len(dom.curves)):
            for th in np.linspace(0, 2 * np.pi, per_curve, endpoint=False):
                v = cauchy.plemelj_boundary_value(dom, one, ci, th, cfg=cfg)
                row(dom_name, "trace_of_one", ci, th, v, abs(v - 1))
                if abs(v - 1) >= tol:
                    failures.append(f"{dom_name} curve {ci}: |phi(1)-1| = "
                                    f"{abs(v - 1):.2e}")
        # interior values of S converge to the principal-value trace
        curve = dom.curves[0]
        th0 = 0.7
        t = complex(curve.points(np.array([th0]))[0])
        tau = complex(curve.velocities(np.array([th0]))[0])
        inward = 1j * tau / abs(tau)
        phi = cauchy.plemelj_boundary_value(dom, smooth, 0, th0, cfg=cfg)
        errs = []
        for delta in (1e-2, 5e-3, 2.5e-3):
            bq = dom.boundary_quadrature(max(cfg.boundary_nodes, int(60 / delta)))
            v = cauchy.integral_S(dom, smooth, t + delta * inward, bq=bq, cfg=cfg)
            errs.append(abs(v - phi))
            row(dom_name, "interior_gap", 0, delta, v, errs[-1])
        for a, b in zip(errs, errs[1:]):
            if not b <= 0.75 * a:
                failures.append(f"{dom_name}: interior trace not halving "
                                f"({b:.2e} vs {a:.2e})")
    return ResultTable(cols, config.echo(), not failures, failures)


def run_solve(config: ExperimentConfig) -> ResultTable:
    cfg = config.solver_config()
    form_name = config.options.get("form", "dzbar2")
    form = named_form(form_name)
    dom = _named_domain(config.options.get("domain", "bidisc"))
    grid = _grid_points(int(config.options.get("grid", 4)), n=dom.dimension)
    u = product.solve(dom, form, cfg)
    vals = u.evaluate(grid)
    cols = {}
    for j in range(dom.dimension):
        cols[f"z{j + 1}_re"] = list(grid[:, j].real)
        cols[f"z{j + 1}_im"] = list(grid[:, j].imag)
    cols["u_re"] = list(vals.real)
    cols["u_im"] = list(vals.imag)
    failures = []
    exact = closed_solution(form_name)
    if exact is not None:
        tol = float(config.options.get("tol", 1e-5))
        err = float(np.max(np.abs(vals - exact(grid))))
        cols["abs_err"] = list(np.abs(vals - exact(grid)))
        if err >= tol:
            failures.append(f"solution error {err:.2e} >= {tol}")
    return ResultTable(cols, config.echo(), not failures, failures)


def run_residual(config: ExperimentConfig) -> ResultTable:
    cfg = config.solver_config()
    form_name = config.options.get("form", "dzbar2")
    form = named_form(form_name)
    dom = _named_domain(config.options.get("domain", "bidisc"))
    grid = _grid_points(int(config.options.get("grid", 4)), n=dom.dimension)
    tol = float(config.options.get("tol", 1e-3))
    u = product.solve(dom, form, cfg)
    r = product.residual(dom, u, form, grid, cfg=cfg)
    failures = [] if r < tol else [f"max residual {r:.2e} >= {tol}"]
    return ResultTable({"form": [form_name], "max_residual": [r]},
                       config.echo(), not failures, failures)


def run_equality(config: ExperimentConfig) -> ResultTable:
    cfg = config.solver_config()
    rng = np.random.default_rng(config.seed)
    dom = _named_domain(config.options.get("domain", "bidisc"))
    count = int(config.options.get("forms", 5))
    npts = int(config.options.get("points", 6))
    tol = float(config.options.get("tol", 1e-3))
    pts = dom.interior_points(rng, npts, margin=0.3)
    cols = {"form": [], "gap": []}
    failures = []
    for i in range(count):
        form = product.random_polynomial_form(rng, dom.dimension, degree=2)
        gap = product.operator_equality_gap(dom, form, pts, cfg=cfg)
        cols["form"].append(f"random_{i}")
        cols["gap"].append(gap)
        if gap >= tol:
            failures.append(f"form {i}: gap {gap:.2e} >= {tol}")
    return ResultTable(cols, config.echo(), not failures, failures)


def run_no_gain(config: ExperimentConfig) -> ResultTable:
    cfg = config.solver_config()
    k = int(config.options.get("k", 0))
    variant = config.options.get("variant", "power")
    alpha = config.options.get("alpha")
    alpha = float(alpha) if alpha is not None else (0.5 if variant == "power"
                                                    else None)
    rep = counterexamples.no_gain_report(k, alpha, variant, cfg=cfg)
    failures = []
    if rep["max_rel_err"] >= float(config.options.get("tol", 1e-2)):
        failures.append(f"w mismatch {rep['max_rel_err']:.2e}")
    if variant == "power" and abs(rep["alpha_hat"] - alpha) > 0.05:
        failures.append(f"alpha_hat {rep['alpha_hat']:.3f} off {alpha}")
    if variant == "log" and not rep["divergence_flagged"]:
        failures.append("log-variant divergence not flagged")
    cols = {
        "xi_re": [x[0] for x in rep["xi_grid"]],
        "xi_im": [x[1] for x in rep["xi_grid"]],
        "w_num_re": [x[0] for x in rep["w_numeric"]],
        "w_num_im": [x[1] for x in rep["w_numeric"]],
        "w_closed_re": [x[0] for x in rep["w_closed"]],
        "w_closed_im": [x[1] for x in rep["w_closed"]],
    }
    return ResultTable(cols, config.echo(), not failures, failures,
                       record=rep)


def run_mollifier(config: ExperimentConfig) -> ResultTable:
    rng = np.random.default_rng(config.seed)
    j_list = [int(j) for j in
              config.options.get("j_list", "8,16,32,64,128,256,512").split(",")]
    alpha = float(config.options.get("alpha", 0.6))
    alpha_p = float(config.options.get("alpha_prime", alpha / 2))
    curve = holder.mollifier_convergence_curve(
        lambda x: np.abs(x) ** alpha, alpha, alpha_p, j_list, (-0.5, 0.5),
        rng=rng)
    quot, at_shift, oracle = holder.mollifier_counterexample_gap(
        float(config.options.get("gap_alpha", 0.5)), j_list[:4])
    failures = []
    norms = [v for _, v in curve]
    if not all(b < a for a, b in zip(norms, norms[1:])):
        failures.append("convergence curve is not strictly decreasing")
    if norms[-1] >= 0.1 * norms[0]:
        failures.append(f"final/initial {norms[-1] / norms[0]:.3f} >= 0.1")
    qs = [v for _, v in quot]
    if max(qs) - min(qs) >= 1e-4:
        failures.append("counterexample quotient varies across j")
    if abs(qs[0] - oracle) >= 1e-4:
        failures.append("quotient disagrees with the kernel moment")
    if max(abs(v) for v in at_shift) >= 1e-8:
        failures.append("phi_j(-1/j) not zero")
    cols = {"kind": [], "j": [], "value": []}
    for (j, v) in curve:
        cols["kind"].append("error_norm")
        cols["j"].append(j)
        cols["value"].append(v)
    for (j, v), s in zip(quot, at_shift):
        cols["kind"].append("gap_quotient")
        cols["j"].append(j)
        cols["value"].append(v)
        cols["kind"].append("phi_at_shift")
        cols["j"].append(j)
        cols["value"].append(s)
    meta = config.echo()
    meta["kernel_moment"] = repr(oracle)
    return ResultTable(cols, meta, not failures, failures)


def run_holder_fit(config: ExperimentConfig) -> ResultTable:
    rng = np.random.default_rng(config.seed)
    cases = [
        ("sqrt_abs", lambda x: np.sqrt(np.abs(x)).astype(complex),
         (-0.5, 0.5), 0.5, 0.03),
        ("linear", lambda x: x.astype(complex), (0.0, 1.0), 1.0, 0.03),
        ("branch_pow_03", lambda x: np.abs(1 - x) ** 0.3 + 0j,
         (0.0, 1.0), 0.3, 0.05),
    ]
    cols = {"function": [], "alpha_hat": [], "fit_r2": [], "expected": []}
    failures = []
    for name, f, (a, b), want, tol in cases:
        cloud = holder.cloud_on_interval(f, a, b, rng)
        est = holder.exponent_fit(cloud)
        cols["function"].append(name)
        cols["alpha_hat"].append(est.alpha)
        cols["fit_r2"].append(est.fit_r2)
        cols["expected"].append(want)
        if abs(est.alpha - want) > tol:
            failures.append(f"{name}: alpha_hat {est.alpha:.3f} vs {want}")
    return ResultTable(cols, config.echo(), not failures, failures)


EXPERIMENTS = {
    "cauchy-green": run_cauchy_green,
    "plemelj": run_plemelj,
    "solve": run_solve,
    "residual": run_residual,
    "equality": run_equality,
    "no-gain": run_no_gain,
    "mollifier": run_mollifier,
    "holder-fit": run_holder_fit,
}


def run(config: ExperimentConfig) -> ResultTable:
    if config.experiment not in EXPERIMENTS:
        raise ExperimentError(
            f"unknown experiment {config.experiment!r}; "
            f"choose from {sorted(EXPERIMENTS)}")
    t0 = time.perf_counter()
    table = EXPERIMENTS[config.experiment](config)
    table.timings["total_s"] = time.perf_counter() - t0
    return table
