"""
Acceptance suite: each criterion is a function returning a CriterionResult.

Every criterion runs at one of two scales.  "full" uses the reference sizes;
"half" halves the problem sizes (grid points, levels, sample counts) and uses
the looser tolerances in TOLERANCES.  The table is the documented contract for
reduced runs.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import bie, bops, pencil, spectra, vfalg
from .fem import studies
from .fem.mesh import generate_graded_mesh
from .fem.poisson import solve_poisson
from .geometry import lshape, unit_square

FULL = "full"
HALF = "half"

# criterion -> scale -> parameters (sizes and tolerances)
TOLERANCES: Dict[int, Dict[str, dict]] = {
    1: {FULL: dict(cells=4096, analytic=1e-10, oracle=1e-6, budget=5.0),
        HALF: dict(cells=2048, analytic=1e-10, oracle=4e-6, budget=5.0)},
    2: {FULL: dict(pairs=100, budget=10.0), HALF: dict(pairs=50, budget=10.0)},
    3: {FULL: dict(samples=100, budget=5.0), HALF: dict(samples=50, budget=5.0)},
    4: {FULL: dict(budget=5.0), HALF: dict(budget=5.0)},
    5: {FULL: dict(N=64, Ls=(10, 20, 40), mt_per_L=16, neg=1e-9, gap=0.1, budget=180.0),
        HALF: dict(N=32, Ls=(10, 20, 40), mt_per_L=8, neg=1e-9, gap=0.2, budget=180.0)},
    6: {FULL: dict(budget=1.0), HALF: dict(budget=1.0)},
    7: {FULL: dict(N=64, L=20.0, gap=0.499, symmetry=1e-9, budget=180.0),
        HALF: dict(N=32, L=10.0, gap=0.49, symmetry=1e-9, budget=180.0)},
    8: {FULL: dict(N=16, L=8.0, Mt=64, tol=1e-8, budget=60.0),
        HALF: dict(N=16, L=8.0, Mt=32, tol=1e-8, budget=60.0)},
    9: {FULL: dict(hs=(1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128), kappa=0.3, band=0.05, budget=300.0),
        HALF: dict(hs=(1 / 8, 1 / 16, 1 / 32, 1 / 64), kappa=0.3, band=0.08, budget=300.0)},
    10: {FULL: dict(hs=(1 / 32, 1 / 64, 1 / 128), floor=1e-3, stability=0.2, control=1e-4, budget=180.0),
         HALF: dict(hs=(1 / 16, 1 / 32, 1 / 64), floor=1e-3, stability=0.3, control=3e-4, budget=180.0)},
    11: {FULL: dict(order=16, gauss=1e-6, harmonic=1e-5, fem_h=1 / 64, cross=1e-3, budget=120.0),
         HALF: dict(order=8, gauss=1e-6, harmonic=1e-5, fem_h=1 / 32, cross=1e-3, budget=120.0)},
    12: {FULL: dict(budget=1200.0), HALF: dict(budget=1200.0)},
}

NAMES = {
    1: "weight window eta = pi / alpha",
    2: "indicial family is multiplicative",
    3: "indicial family vanishes iff P = xQ",
    4: "Lie closure and isotropy algebras",
    5: "Laplace essential spectrum on cylindrical ends",
    6: "Laplace Fredholm predicate",
    7: "Dirac gap and real-line cases",
    8: "Dirac square law",
    9: "FEM rate dichotomy on the L-shape",
    10: "corner log term on the square",
    11: "double-layer solver",
    12: "full suite",
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    checks: Dict[str, bool] = field(default_factory=dict)
    detail: Dict[str, object] = field(default_factory=dict)
    seconds: float = 0.0
    budget: float = math.inf

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        failed = [k for k, ok in self.checks.items() if not ok]
        extra = f" failed: {', '.join(failed)}" if failed else ""
        return f"[{status}] criterion {self.number:2d} {self.name} ({self.seconds:.1f}s){extra}"

    def record(self) -> dict:
        """Deterministic part of the result (no timings)."""
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "checks": dict(self.checks), "detail": dict(self.detail)}


def _finish(n: int, scale: str, checks: Dict[str, bool], detail: dict, t0: float) -> CriterionResult:
    sec = time.perf_counter() - t0
    budget = TOLERANCES[n][scale]["budget"]
    checks = dict(checks)
    checks["runtime"] = sec < budget
    return CriterionResult(n, NAMES[n], all(checks.values()), checks, detail, sec, budget)


def _params(n: int, scale: str) -> dict:
    if scale not in (FULL, HALF):
        raise ValueError(f"scale must be {FULL!r} or {HALF!r}")
    return TOLERANCES[n][scale]


# 1 ---------------------------------------------------------------------------

def criterion_1(scale: str = FULL, seed: int = 0) -> CriterionResult:
    p, t0 = _params(1, scale), time.perf_counter()
    angles = {"pi/2": math.pi / 2, "pi": math.pi, "3pi/2": 1.5 * math.pi, "2pi": 2 * math.pi}
    an_err, fd_err = {}, {}
    for name, a in angles.items():
        s = pencil.SectorModel(a)
        eta = pencil.weight_window(s).eta
        an_err[name] = abs(eta - math.pi / a)
        fd = pencil.fd_pencil_eigenvalues(s, 1, cells=p["cells"])[0]
        fd_err[name] = abs(eta - fd)
    checks = {"analytic": max(an_err.values()) < p["analytic"],
              "fd_oracle": max(fd_err.values()) < p["oracle"]}
    return _finish(1, scale, checks, {"analytic_error": an_err, "oracle_error": fd_err}, t0)


# 2 and 3 ---------------------------------------------------------------------

def criterion_2(scale: str = FULL, seed: int = 0) -> CriterionResult:
    p, t0 = _params(2, scale), time.perf_counter()
    rng = random.Random(seed)
    mismatches = 0
    for _ in range(p["pairs"]):
        P = bops.random_operator(rng, order=rng.randint(0, 3))
        Q = bops.random_operator(rng, order=rng.randint(0, 3))
        lhs = bops.indicial_family(bops.compose(P, Q))
        rhs = bops.indicial_family(P) * bops.indicial_family(Q)
        mismatches += lhs != rhs
    return _finish(2, scale, {"exact_equality": mismatches == 0},
                   {"pairs": p["pairs"], "mismatches": mismatches}, t0)


def criterion_3(scale: str = FULL, seed: int = 0) -> CriterionResult:
    p, t0 = _params(3, scale), time.perf_counter()
    rng = random.Random(seed + 1)
    x = bops.BOperator.multiplication(bops.Coefficient.x_power(1))
    bad = {"iff": 0, "quotient": 0, "right_factor": 0}
    for _ in range(p["samples"]):
        P = bops.random_operator(rng)
        Q = bops.random_operator(rng)
        if bops.indicial_family(P).is_zero() != P.divisible_by_x():
            bad["iff"] += 1
        xQ = x * Q
        if not (bops.indicial_family(xQ).is_zero() and xQ.divisible_by_x() and xQ.divide_by_x() == Q):
            bad["quotient"] += 1
        # Q x = x (Q shifted), so it vanishes at the boundary too
        Qx = Q * x
        if not (bops.indicial_family(Qx).is_zero() and Qx.divisible_by_x()):
            bad["right_factor"] += 1
    checks = {k: v == 0 for k, v in bad.items()}
    return _finish(3, scale, checks, {"samples": p["samples"], "failures": bad}, t0)


# 4 ---------------------------------------------------------------------------

def criterion_4(scale: str = FULL, seed: int = 0) -> CriterionResult:
    _params(4, scale)
    t0 = time.perf_counter()
    checks, detail = {}, {}
    mods = {"b": vfalg.b_module(), "0": vfalg.zero_module(), "sc": vfalg.scattering_module(),
            "edge": vfalg.edge_module()}
    for name, mod in mods.items():
        checks[f"closed_{name}"] = vfalg.check_closure(mod).closed
    chart = vfalg.CornerChart(2, 0)
    x, y = chart.symbols
    bad = vfalg.VectorFieldModule(chart, [vfalg.VectorField(chart, (1, 0)),
                                          vfalg.VectorField(chart, (0, x))])
    rep = vfalg.check_closure(bad)
    checks["not_closed_witness"] = (not rep.closed) and rep.witness is not None
    if rep.witness is not None:
        detail["witness"] = [str(c) for c in rep.witness[3]]

    def iso(mod):
        g = vfalg.isotropy_algebra(mod, (0,) * mod.chart.n)
        return g, vfalg.is_solvable_exponential(g)

    g, r = iso(mods["b"])
    checks["isotropy_b"] = g.dim == 1 and g.is_abelian()
    g, r = iso(mods["0"])
    checks["isotropy_0"] = (g.dim == 2 and not g.is_abelian() and r.solvable and not r.nilpotent)
    detail["isotropy_0_bracket"] = [str(v) for v in g.constants[0][1]]
    g, r = iso(mods["sc"])
    checks["isotropy_sc"] = g.dim == 2 and g.is_abelian()
    return _finish(4, scale, checks, detail, t0)


# 5 and 6 ---------------------------------------------------------------------

def criterion_5(scale: str = FULL, seed: int = 0) -> CriterionResult:
    p, t0 = _params(5, scale), time.perf_counter()
    half_line = spectra.SpectrumSet(((0.0, math.inf),))
    checks = {
        "analytic_cylinder": spectra.essential_spectrum_laplace(spectra.cylinder()) == half_line,
        "analytic_multicylinder": spectra.essential_spectrum_laplace(spectra.multicylinder()) == half_line,
    }
    gaps, mins = {}, {}
    for L in p["Ls"]:
        ev = spectra.discretized_laplace_cylinder(p["N"], float(L), p["mt_per_L"] * L)
        mins[L] = float(ev.min())
        gaps[L] = spectra.max_gap(ev, 0.0, 4.0)
    g = [gaps[L] for L in p["Ls"]]
    checks["no_negative"] = min(mins.values()) >= -p["neg"]
    checks["gap_monotone"] = all(a > b for a, b in zip(g, g[1:]))
    checks["gap_small_at_largest_L"] = g[-1] < p["gap"]
    return _finish(5, scale, checks, {"max_gap": {str(k): v for k, v in gaps.items()},
                                      "min_eigenvalue": {str(k): v for k, v in mins.items()}}, t0)


def criterion_6(scale: str = FULL, seed: int = 0) -> CriterionResult:
    _params(6, scale)
    t0 = time.perf_counter()
    end = spectra.cylinder()
    true_at = (-10.0, -0.001)
    false_at = (0.0, 0.5, 7.0)
    checks = {"fredholm_below_0": all(spectra.laplace_fredholm(end, v) for v in true_at),
              "not_fredholm_at_or_above_0": not any(spectra.laplace_fredholm(end, v) for v in false_at)}
    return _finish(6, scale, checks, {}, t0)


# 7 and 8 ---------------------------------------------------------------------

def criterion_7(scale: str = FULL, seed: int = 0) -> CriterionResult:
    p, t0 = _params(7, scale), time.perf_counter()
    checks, detail = {}, {}
    nb = spectra.cylinder(spectra.DIRAC, spectra.NONBOUNDING)
    c = min(f.data.gap() for f in nb.hyperfaces)
    checks["c_is_half"] = c == 0.5
    checks["gap_set"] = spectra.essential_spectrum_dirac(nb) == spectra.SpectrumSet(
        ((-math.inf, -0.5), (0.5, math.inf)))
    sp = spectra.discretized_dirac_cylinder(spectra.NONBOUNDING, p["N"], p["L"])
    ev = sp.eigenvalues
    detail["min_abs_eigenvalue"] = float(np.min(np.abs(ev)))
    detail["interior_modes"] = int(len(sp.interior()))
    # checked on every mode, which includes the interior-supported ones
    checks["discrete_gap"] = detail["min_abs_eigenvalue"] >= p["gap"]
    sym = float(np.max(np.abs(np.sort(ev) - np.sort(-ev))))
    detail["symmetry_defect"] = sym
    checks["symmetric"] = sym < p["symmetry"]
    checks["bounding_real_line"] = spectra.essential_spectrum_dirac(
        spectra.cylinder(spectra.DIRAC, spectra.BOUNDING)).is_real_line()
    zd = spectra.EndStructure(nb.faces, has_zero_dim_face=True)
    checks["zero_dim_face_real_line"] = spectra.essential_spectrum_dirac(zd).is_real_line()
    return _finish(7, scale, checks, detail, t0)


def criterion_8(scale: str = FULL, seed: int = 0) -> CriterionResult:
    p, t0 = _params(8, scale), time.perf_counter()
    d = {s: spectra.dirac_square_law_defect(s, p["N"], p["L"], p["Mt"])
         for s in (spectra.NONBOUNDING, spectra.BOUNDING)}
    return _finish(8, scale, {"square_law": max(d.values()) < p["tol"]}, {"defect": d}, t0)


# 9 and 10 --------------------------------------------------------------------

def criterion_9(scale: str = FULL, seed: int = 0) -> CriterionResult:
    p, t0 = _params(9, scale), time.perf_counter()
    bench = studies.lshape_benchmark()
    uni = studies.convergence_study(bench, p["hs"])
    grd = studies.convergence_study(bench, p["hs"], studies.kappa_for(bench, p["kappa"]))
    checks = {"quasi_uniform_rate": abs(uni.slope - 0.67) <= p["band"],
              "graded_rate": abs(grd.slope - 1.0) <= p["band"]}
    return _finish(9, scale, checks, {"quasi_uniform_slope": uni.slope, "graded_slope": grd.slope,
                                      "finest_dof": grd.rows[-1].dof}, t0)


def criterion_10(scale: str = FULL, seed: int = 0) -> CriterionResult:
    p, t0 = _params(10, scale), time.perf_counter()
    probe = studies.corner_singularity_probe(1.0, hs=p["hs"])
    ctrl = studies.corner_singularity_probe(lambda x, y: x * y, hs=p["hs"])
    logs = probe.log_coefficients
    changes = [abs(a - b) / abs(b) for a, b in zip(logs, logs[1:])]
    checks = {"log_term_present": min(abs(v) for v in logs) > p["floor"],
              "log_term_stable": max(changes) < p["stability"],
              "control_vanishes": max(abs(v) for v in ctrl.log_coefficients) < p["control"]}
    return _finish(10, scale, checks, {"log_coefficients": list(logs),
                                       "control_coefficients": list(ctrl.log_coefficients),
                                       "relative_changes": changes}, t0)


# 11 --------------------------------------------------------------------------

def _cross_points():
    return np.array([[-0.5, 0.5], [0.5, 0.5], [-0.5, -0.5], [-0.6, 0.2], [0.2, 0.6]])


def criterion_11(scale: str = FULL, seed: int = 0) -> CriterionResult:
    p, t0 = _params(11, scale), time.perf_counter()
    checks, detail = {}, {}
    for name, poly in (("square", unit_square()), ("lshape", lshape())):
        pz = bie.panelize(poly, p["order"])
        r = float(np.max(np.abs(bie.gauss_residual(pz))))
        detail[f"gauss_{name}"] = r
        checks[f"gauss_{name}"] = r < p["gauss"]
    sq = unit_square()
    harmonic = {"x2-y2": lambda x, y: x * x - y * y,
                "x3-3xy2": lambda x, y: x ** 3 - 3 * x * y * y,
                "xy+x": lambda x, y: x * y + x}
    pts = np.array([[0.5, 0.3], [0.3, 0.5], [0.5, 0.5], [0.15, 0.85], [0.7, 0.2]])
    worst = 0.0
    for g in harmonic.values():
        sol = bie.solve_dirichlet(sq, g, order=p["order"])
        worst = max(worst, float(np.max(np.abs(sol.evaluate(pts) - g(pts[:, 0], pts[:, 1])))))
    detail["harmonic_error"] = worst
    checks["harmonic_reproduction"] = worst < p["harmonic"]

    g = lambda x, y: x * x + np.sin(2 * y) + x * y
    L = lshape()
    sol = bie.solve_dirichlet(L, g, order=p["order"])
    kappa = [1.0] * len(L)
    kappa[2] = 0.3
    fem = solve_poisson(generate_graded_mesh(L, p["fem_h"], kappa), 0.0, g)
    cp = _cross_points()
    diff = float(np.max(np.abs(sol.evaluate(cp) - fem.evaluate(cp))))
    detail["bie_vs_fem"] = diff
    detail["condition_lshape"] = sol.condition
    checks["bie_vs_fem"] = diff < p["cross"]
    return _finish(11, scale, checks, detail, t0)


CRITERIA: Dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11,
}


def run_criteria(numbers: Optional[Sequence[int]] = None, scale: str = FULL, seed: int = 0,
                 progress: Optional[Callable[[CriterionResult], None]] = None) -> List[CriterionResult]:
    out = []
    for n in numbers or sorted(CRITERIA):
        if n not in CRITERIA:
            raise ValueError(f"unknown criterion {n}")
        res = CRITERIA[n](scale=scale, seed=seed)
        if progress:
            progress(res)
        out.append(res)
    return out


def suite_result(results: Sequence[CriterionResult], seconds: float, scale: str = FULL) -> CriterionResult:
    """Criterion 12: every component criterion passed and the suite ran within budget."""
    budget = TOLERANCES[12][scale]["budget"]
    checks = {"all_criteria_pass": all(r.passed for r in results) and len(results) == len(CRITERIA),
              "runtime": seconds < budget}
    failed = [r.number for r in results if not r.passed]
    return CriterionResult(12, NAMES[12], all(checks.values()), checks,
                           {"failed_criteria": failed}, seconds, budget)
