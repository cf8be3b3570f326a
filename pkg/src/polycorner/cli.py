"""
Command-line front end.

Each subcommand reads its parameters from an optional INI file (section named
after the subcommand) and from flags; flags win.  Results go to
<out>/<subcommand>-<experiment id>/ as result.json plus CSV or text tables.

Exit status: 0 success, 1 acceptance failure (reproduce), 2 invalid input,
3 computation error, 4 size cap exceeded.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__, acceptance, bie, bops, pencil, spectra, vfalg
from .fem import studies
from .fem.mesh import MeshError, generate_graded_mesh
from .fem.poisson import FemError, solve_poisson
from .geometry import GeometryError, Polygon, lshape, polygon_from_text, unit_square
from .records import RecordWriter, ResultRecord, dumps, output_root

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_COMPUTE, EXIT_CAP = 0, 1, 2, 3, 4
DEFAULT_CAP = 200_000


class ValidationError(ValueError):
    pass


class CapExceeded(RuntimeError):
    pass


# Parameter schema ------------------------------------------------------------

def _floats(text: str) -> List[float]:
    return [_number(v) for v in str(text).replace(",", " ").split()]


def _number(text) -> float:
    t = str(text).strip().lower().replace("pi", str(math.pi))
    if "/" in t or "*" in t:
        # plain arithmetic on numbers only, e.g. 3*3.14159/2
        if any(c not in "0123456789.e+-*/ " for c in t):
            raise ValueError(f"not a number: {text!r}")
        return float(eval(t, {"__builtins__": {}}, {}))  # noqa: S307  (digits and operators only)
    return float(t)


def _rational(text) -> str:
    """Exact rational kept as its canonical string so records stay JSON."""
    return str(Fraction(str(text).strip()))


def _onoff(text) -> bool:
    t = str(text).strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


@dataclass(frozen=True)
class Param:
    parse: Callable
    default: object = None
    check: Optional[Callable[[object], bool]] = None
    help: str = ""
    choices: Optional[Sequence[str]] = None

    def convert(self, name: str, raw):
        if raw is None:
            return self.default
        try:
            v = self.parse(raw)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ValidationError(f"{name}: {exc}") from None
        if self.choices is not None and v not in self.choices:
            raise ValidationError(f"{name}: {v!r} not in {list(self.choices)}")
        if self.check is not None and not self.check(v):
            raise ValidationError(f"{name}: value {v!r} out of range ({self.help})")
        return v


def _pos(v):
    return v > 0 and math.isfinite(v)


SCHEMAS: Dict[str, Dict[str, Param]] = {
    "vfcheck": {
        "module": Param(str, None, choices=("b", "zero", "scattering", "edge", "file"),
                        help="built-in module or 'file' for [chart]/[generator N] sections"),
        "n": Param(int, 2, lambda v: 2 <= v <= 6, "2..6"),
        "point": Param(_floats, None, help="isotropy point, default the origin"),
    },
    "bops": {
        "command": Param(str, "indicial", choices=("compose", "indicial", "symbol", "elliptic")),
        "operator": Param(str, None, choices=("b-laplacian", "file")),
        "lam": Param(_rational, "0", help="exact rational, e.g. 1/2 or 0.25"),
        "base": Param(_floats, [0.0, 0.0], lambda v: len(v) == 2, "two numbers x y"),
        "xi": Param(_floats, [1.0, 0.0], lambda v: len(v) == 2 and any(v), "nonzero covector"),
        "tau": Param(_number, 0.0, math.isfinite, "finite"),
        "modes": Param(int, 2, lambda v: 0 <= v <= 64, "0..64"),
    },
    "pencil": {
        "alpha": Param(_number, None, lambda v: 0 < v <= 2 * math.pi + 1e-12, "(0, 2pi]"),
        "bc": Param(str, "dirichlet", lambda v: all(b in ("dirichlet", "neumann") for b in v.split(","))
                    and len(v.split(",")) in (1, 2), "dirichlet|neumann[,dirichlet|neumann]"),
        "count": Param(int, 10, lambda v: 1 <= v <= 1000, "1..1000"),
        "polygon": Param(_floats, None, lambda v: len(v) >= 3 and all(0 < a < 2 * math.pi for a in v),
                         "at least three interior angles in (0, 2pi)"),
        "oracle": Param(_onoff, False),
        "cells": Param(int, 4096, lambda v: 2048 <= v <= 1 << 20, "2048..2^20"),
    },
    "spectra": {
        "geometry": Param(str, "cylinder", choices=("cylinder", "multicyl", "file")),
        "operator": Param(str, "laplace", choices=("laplace", "dirac")),
        "spin": Param(str, "nonbounding", choices=("bounding", "nonbounding")),
        "lambda": Param(_number, None, math.isfinite, "finite"),
        "oracle": Param(_onoff, False),
        "n": Param(int, 64, lambda v: v >= 16 and v % 2 == 0, "even, >= 16"),
        "length": Param(_number, 20.0, _pos, "positive"),
        "mt": Param(int, None, lambda v: v >= 16, ">= 16"),
    },
    "fem": {
        "benchmark": Param(str, "lshape", choices=("lshape", "square-corner", "smooth", "none")),
        "polygon": Param(str, None, help="vertex file, or 'square' / 'lshape'"),
        "h": Param(_number, 1 / 64, lambda v: 0 < v <= 1, "(0, 1]"),
        "levels": Param(int, None, lambda v: 1 <= v <= 8,
                        "1..8; default 4 for convergence studies, 3 for the corner probe"),
        "kappa": Param(_floats, None, lambda v: len(v) >= 1 and all(0 < k <= 1 for k in v),
                       "grading exponents in (0, 1]"),
        "f": Param(_number, 1.0, math.isfinite, "finite"),
    },
    "bie": {
        "polygon": Param(str, "lshape", help="vertex file, or 'square' / 'lshape'"),
        "g": Param(str, "smooth", choices=("one", "x2-y2", "x3-3xy2", "smooth")),
        "panels": Param(int, 16, lambda v: 2 <= v <= 64, "Gauss nodes per panel, 2..64"),
        "depth": Param(int, 10, lambda v: 0 <= v <= 40, "0..40"),
        "base": Param(int, 4, lambda v: 2 <= v <= 64, "2..64"),
        "samples": Param(int, 21, lambda v: 2 <= v <= 201, "2..201"),
    },
    "reproduce": {
        "only": Param(lambda s: [int(v) for v in str(s).replace(",", " ").split()], None,
                      lambda v: all(n in acceptance.CRITERIA for n in v), "criterion numbers 1..11"),
        "scale": Param(str, acceptance.FULL, choices=(acceptance.FULL, acceptance.HALF)),
    },
}

# INI sections that carry structured input rather than parameters
EXTRA_SECTIONS = {
    "vfcheck": lambda s: s == "chart" or s.startswith("generator "),
    "bops": lambda s: s in ("operator P", "operator Q"),
    "spectra": lambda s: s == "geometry" or s.startswith("face "),
}


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict
    out: Path
    seed: int
    cap: int
    ini: configparser.ConfigParser


def load_config(subcommand: str, path: Optional[str], flags: dict, out, seed, cap) -> ExperimentConfig:
    schema = SCHEMAS[subcommand]
    ini = configparser.ConfigParser(interpolation=None)
    ini.optionxform = str
    raw: Dict[str, object] = {}
    if path:
        try:
            with open(path) as fh:
                ini.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from None
        allowed = EXTRA_SECTIONS.get(subcommand, lambda s: False)
        for sec in ini.sections():
            if sec == subcommand:
                for key, value in ini[sec].items():
                    k = key.replace("-", "_")
                    if k not in schema:
                        raise ValidationError(f"unknown key {key!r} in [{sec}]")
                    raw[k] = value
            elif sec == "run":
                run = ini[sec]
                unknown = set(run) - {"out", "seed", "cap"}
                if unknown:
                    raise ValidationError(f"unknown keys {sorted(unknown)} in [run]")
                # flags win over the file
                out = out if out is not None else run.get("out")
                seed = seed if seed is not None else run.get("seed")
                cap = cap if cap is not None else run.get("cap")
            elif not allowed(sec):
                raise ValidationError(f"unknown section [{sec}] for {subcommand}")
    for k, v in flags.items():
        if v is not None:
            raw[k] = v
    params = {k: p.convert(k, raw.get(k)) for k, p in schema.items()}
    try:
        seed = int(seed) if seed is not None else 0
        cap = int(cap) if cap is not None else DEFAULT_CAP
    except ValueError as exc:
        raise ValidationError(f"seed/cap: {exc}") from None
    if cap < 1:
        raise ValidationError("cap must be positive")
    return ExperimentConfig(subcommand, params, output_root(out), seed, cap, ini)


def _polygon(spec: str) -> Polygon:
    named = {"square": unit_square, "lshape": lshape}
    if spec in named:
        return named[spec]()
    try:
        return polygon_from_text(Path(spec).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read polygon file {spec}: {exc}") from None


# Subcommands -----------------------------------------------------------------

def _algebra_record(g: vfalg.LieAlgebraStructure) -> dict:
    rep = vfalg.is_solvable_exponential(g)
    return {"dim": g.dim,
            "brackets": [[i, j, [str(c) for c in g.constants[i][j]]]
                         for i in range(g.dim) for j in range(i + 1, g.dim)],
            "abelian": g.is_abelian(), "solvable": rep.solvable, "nilpotent": rep.nilpotent,
            "derived_series": list(rep.derived_series),
            "lower_central_series": list(rep.lower_central_series)}


def run_vfcheck(cfg: ExperimentConfig, w: RecordWriter) -> dict:
    p = cfg.params
    module = p["module"] or ("file" if cfg.ini.has_section("chart") else "b")
    factories = {"b": vfalg.b_module, "zero": vfalg.zero_module,
                 "scattering": vfalg.scattering_module}
    if module == "file":
        if not cfg.ini.has_section("chart"):
            raise ValidationError("module=file needs a [chart] section in the config")
        try:
            mod = vfalg.module_from_config(cfg.ini)
        except (ValueError, TypeError) as exc:
            raise ValidationError(str(exc)) from None
    elif module == "edge":
        mod = vfalg.edge_module(max(p["n"], 3))
    else:
        mod = factories[module](p["n"])
    rep = vfalg.check_closure(mod)
    out = {"module": module, "n": mod.chart.n, "k": mod.chart.k, "closed": rep.closed,
           "tangent": rep.tangent, "determinant": str(rep.determinant),
           "table": [[i, j, [str(c) for c in cs]] for (i, j), cs in sorted(rep.table.items())]}
    if rep.witness is not None:
        i, j, b, coeffs = rep.witness
        out["witness"] = {"pair": [i, j], "bracket": [str(c) for c in b.coeffs],
                          "coefficients": [str(c) for c in coeffs]}
    if rep.closed:
        point = p["point"] or [0.0] * mod.chart.n
        if len(point) != mod.chart.n:
            raise ValidationError(f"point needs {mod.chart.n} coordinates")
        from fractions import Fraction
        g = vfalg.isotropy_algebra(mod, [Fraction(v).limit_denominator(10 ** 9) for v in point])
        out["isotropy"] = _algebra_record(g)
    lines = [f"module {module}: closed={rep.closed} tangent={rep.tangent}"]
    if "isotropy" in out:
        iso = out["isotropy"]
        lines.append(f"isotropy dim={iso['dim']} abelian={iso['abelian']} "
                     f"solvable={iso['solvable']} nilpotent={iso['nilpotent']}")
    w.text("report.txt", "\n".join(lines) + "\n")
    return out


def run_bops(cfg: ExperimentConfig, w: RecordWriter) -> dict:
    p = cfg.params
    operator = p["operator"] or ("file" if cfg.ini.has_section("operator P") else "b-laplacian")
    if operator == "file":
        if not cfg.ini.has_section("operator P"):
            raise ValidationError("operator=file needs an [operator P] section")
        try:
            P = bops.operator_from_section(cfg.ini["operator P"])
            Q = bops.operator_from_section(cfg.ini["operator Q"]) if cfg.ini.has_section("operator Q") else P
        except (ValueError, TypeError) as exc:
            raise ValidationError(str(exc)) from None
    else:
        P = Q = bops.b_laplacian(Fraction(p["lam"]))
    out = {"command": p["command"], "operator": bops.terms_record(P.terms), "order": P.order}
    cmd = p["command"]
    if cmd == "compose":
        R = bops.compose(P, Q)
        out["composition"] = bops.terms_record(R.terms)
        fam = bops.indicial_family(R)
        out["indicial_multiplicative"] = fam == bops.indicial_family(P) * bops.indicial_family(Q)
    elif cmd == "indicial":
        fam = bops.indicial_family(P)
        out["indicial_family"] = bops.terms_record(fam.terms)
        out["vanishes"] = fam.is_zero()
        out["divisible_by_x"] = P.divisible_by_x()
        ev = fam.evaluate(p["tau"])
        out["at_tau"] = {"tau": p["tau"], "terms": [[j, m, c.real, c.imag] for j in sorted(ev)
                                                    for m, c in sorted(ev[j].items())]}
        A = fam.matrix(p["tau"], p["modes"])
        ks = range(-p["modes"], p["modes"] + 1)
        w.table("indicial_matrix.csv", ["row_mode", "col_mode", "re", "im"],
                [(r, c, float(A[i, j].real), float(A[i, j].imag))
                 for i, r in enumerate(ks) for j, c in enumerate(ks) if A[i, j] != 0])
    elif cmd == "symbol":
        s = bops.principal_symbol(P, p["base"], p["xi"])
        out["symbol"] = {"re": s.value.real, "im": s.value.imag, "order": s.order}
    else:
        out["elliptic"] = bops.is_elliptic(P)
    return out


def run_pencil(cfg: ExperimentConfig, w: RecordWriter) -> dict:
    p = cfg.params
    out = {}
    if p["alpha"] is not None:
        bc = tuple(p["bc"].split(","))
        s = pencil.SectorModel(p["alpha"], bc if len(bc) == 2 else bc[0])
        rep = pencil.sector_pencil_eigenvalues(s, p["count"])
        ww = pencil.weight_window(s)
        pos = sorted(v for v in rep.exponents if v >= 0)
        rows = [(k + 1, v) for k, v in enumerate(pos)]
        if p["oracle"]:
            fd = pencil.fd_pencil_eigenvalues(s, p["count"], cells=p["cells"])
            rows = [(k, v, fd[k - 1]) for k, v in rows]
            out["oracle_max_error"] = float(max(abs(a - b) for _, a, b in rows))
            w.table("pencil.csv", ["k", "lambda_k", "lambda_k_fd"], rows)
        else:
            w.table("pencil.csv", ["k", "lambda_k"], rows)
        out.update({"alpha": s.alpha, "bc": list(s.bc), "eta": ww.eta, "empty": ww.empty,
                    "window": list(ww.window), "exponents": list(rep.exponents), "note": rep.note})
    if p["polygon"] is not None:
        pw = pencil.polygon_weight_window(p["polygon"])
        out["polygon"] = {"angles": p["polygon"], "eta": pw.eta, "limiting_angle": pw.limiting_angle,
                          "predicted_h1_rate": pencil.predicted_h1_rate(p["polygon"])}
    if not out:
        raise ValidationError("pencil needs --alpha or --polygon")
    return out


def _spectra_file_geometry(ini, kind: str, spin: str) -> spectra.EndStructure:
    faces = []
    for sec in sorted((s for s in ini.sections() if s.startswith("face ")), key=lambda s: s.split()[-1]):
        d = ini[sec]
        unknown = set(d) - {"dimension", "eigenvalues"}
        if unknown:
            raise ValidationError(f"unknown keys {sorted(unknown)} in [{sec}]")
        try:
            dim = int(d["dimension"])
            if "eigenvalues" in d:
                data = spectra.CrossSectionData(kind, tuple(_floats(d["eigenvalues"])))
            else:
                data = spectra.circle_laplace_data() if kind == spectra.LAPLACE else spectra.circle_dirac_data(spin)
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"[{sec}]: {exc}") from None
        faces.append(spectra.Face(dim, data))
    zero = False
    if ini.has_section("geometry"):
        g = ini["geometry"]
        if set(g) - {"zero_dim_face"}:
            raise ValidationError("[geometry] accepts only zero_dim_face")
        zero = _onoff(g.get("zero_dim_face", "off"))
    if not faces:
        raise ValidationError("geometry=file needs at least one [face N] section")
    return spectra.EndStructure(tuple(faces), zero)


def run_spectra(cfg: ExperimentConfig, w: RecordWriter) -> dict:
    p = cfg.params
    kind, spin = p["operator"], p["spin"]
    if p["geometry"] == "cylinder":
        end = spectra.cylinder(kind, spin)
    elif p["geometry"] == "multicyl":
        end = spectra.multicylinder(kind, spin)
    else:
        end = _spectra_file_geometry(cfg.ini, kind, spin)
    if kind == spectra.LAPLACE:
        ess = spectra.essential_spectrum_laplace(end)
    else:
        ess = spectra.essential_spectrum_dirac(end)
    out = {"geometry": p["geometry"], "operator": kind, "essential_spectrum": ess.to_record(),
           "essential_spectrum_text": str(ess)}
    if kind == spectra.DIRAC:
        out["spin"] = spin
    lam = p["lambda"]
    if lam is not None:
        out["lambda"] = lam
        if kind == spectra.LAPLACE:
            out["fredholm"] = spectra.laplace_fredholm(end, lam)
        else:
            out["fredholm"] = not ess.contains(lam)
    if p["oracle"]:
        if p["geometry"] != "cylinder":
            raise ValidationError("the discretized oracle is available for geometry=cylinder only")
        L, N = p["length"], p["n"]
        Mt = p["mt"] or int(16 * L)
        size = N * Mt * (2 if kind == spectra.DIRAC else 1)
        if size > cfg.cap:
            raise CapExceeded(f"discretization has {size} unknowns, cap is {cfg.cap}")
        if kind == spectra.LAPLACE:
            ev = spectra.discretized_laplace_cylinder(N, L, Mt, cap=cfg.cap)
            out["oracle"] = {"N": N, "L": L, "Mt": Mt, "min_eigenvalue": float(ev.min()),
                             "max_gap_0_4": spectra.max_gap(ev, 0.0, 4.0)}
            w.table("eigenvalues.csv", ["index", "eigenvalue"], [(i, float(v)) for i, v in enumerate(ev)])
        else:
            sp = spectra.discretized_dirac_cylinder(spin, N, L, Mt, cap=cfg.cap)
            ev = sp.eigenvalues
            out["oracle"] = {"N": N, "L": L, "Mt": Mt, "min_abs_eigenvalue": float(np.min(np.abs(ev))),
                             "symmetry_defect": float(np.max(np.abs(np.sort(ev) - np.sort(-ev))))}
            w.table("eigenvalues.csv", ["index", "eigenvalue", "edge_mass"],
                    [(i, float(v), float(m)) for i, (v, m) in enumerate(zip(ev, sp.edge_mass))])
    return out


def _kappa(values, poly: Polygon, graded_vertex=None):
    if values is None:
        return None
    if len(values) == 1:
        if graded_vertex is not None:
            k = [1.0] * len(poly)
            k[graded_vertex] = values[0]
            return k
        return [values[0]] * len(poly)
    if len(values) != len(poly):
        raise ValidationError(f"kappa needs 1 or {len(poly)} values, got {len(values)}")
    return list(values)


def _check_mesh(mesh, cap):
    if mesh.n_nodes > cap:
        raise CapExceeded(f"mesh has {mesh.n_nodes} nodes, cap is {cap}")


def run_fem(cfg: ExperimentConfig, w: RecordWriter) -> dict:
    p = cfg.params
    levels = p["levels"] or (3 if p["benchmark"] == "square-corner" else 4)
    hs = [p["h"] * 2 ** k for k in range(levels - 1, -1, -1)]
    out = {"benchmark": p["benchmark"]}
    if p["benchmark"] in ("lshape", "smooth"):
        if p["polygon"] is not None:
            raise ValidationError(f"benchmark {p['benchmark']} fixes its own polygon")
        if levels < 4:
            raise ValidationError("a convergence study needs levels >= 4")
        bench = studies.BENCHMARKS[p["benchmark"]]()
        kappa = _kappa(p["kappa"], bench.polygon, bench.graded_vertex)
        finest = generate_graded_mesh(bench.polygon, hs[-1], kappa)
        _check_mesh(finest, cfg.cap)
        res = studies.convergence_study(bench, hs, kappa)
        w.table("convergence.csv", ["h", "dof", "energy_error", "rate"],
                [(r.h, r.dof, r.energy_error, r.rate) for r in res.rows])
        w.text("mesh.txt", finest.to_text())
        out.update({"hs": hs, "kappa": kappa, "slope": res.slope,
                    "finest": {"h": res.rows[-1].h, "dof": res.rows[-1].dof,
                               "energy_error": res.rows[-1].energy_error}})
    elif p["benchmark"] == "square-corner":
        if levels < 2:
            raise ValidationError("the corner probe needs levels >= 2")
        finest = generate_graded_mesh(unit_square(), hs[-1])
        _check_mesh(finest, cfg.cap)
        probe = studies.corner_singularity_probe(p["f"], hs=hs)
        w.table("corner_fit.csv", ["h", "log_coefficient"], list(zip(probe.hs, probe.log_coefficients)))
        out.update({"hs": hs, "f": p["f"], "log_coefficients": list(probe.log_coefficients),
                    "relative_change": probe.relative_change(),
                    "analytic_log_coefficient": p["f"] / math.pi})
    else:
        if p["polygon"] is None:
            raise ValidationError("benchmark=none needs a polygon")
        poly = _polygon(p["polygon"])
        mesh = generate_graded_mesh(poly, p["h"], _kappa(p["kappa"], poly))
        _check_mesh(mesh, cfg.cap)
        sol = solve_poisson(mesh, p["f"], 0.0)
        w.text("mesh.txt", mesh.to_text())
        w.table("solution.csv", ["x", "y", "u"], [(float(x), float(y), float(u))
                                                  for (x, y), u in zip(mesh.nodes, sol.values)])
        out.update({"f": p["f"], "nodes": mesh.n_nodes, "triangles": int(len(mesh.triangles)),
                    "energy": sol.energy(), "residual": sol.residual})
    return out


_BIE_DATA = {
    "one": lambda x, y: np.ones_like(x),
    "x2-y2": lambda x, y: x * x - y * y,
    "x3-3xy2": lambda x, y: x ** 3 - 3 * x * y * y,
    "smooth": lambda x, y: x * x + np.sin(2 * y) + x * y,
}


def run_bie(cfg: ExperimentConfig, w: RecordWriter) -> dict:
    p = cfg.params
    poly = _polygon(p["polygon"])
    n_nodes = len(poly) * (p["base"] + 2 * p["depth"]) * p["panels"]
    if n_nodes > min(cfg.cap, 20_000):
        raise CapExceeded(f"{n_nodes} boundary nodes exceed the cap {min(cfg.cap, 20_000)}")
    g = _BIE_DATA[p["g"]]
    sol = bie.solve_dirichlet(poly, g, order=p["panels"], base_panels=p["base"], depth=p["depth"])
    pz = sol.panelization
    res = bie.gauss_residual(pz)
    w.table("density.csv", ["x", "y", "density"],
            [(float(x), float(y), float(f)) for (x, y), f in zip(pz.points, sol.density)])
    V = poly.array()
    lo, hi = V.min(0), V.max(0)
    xs = np.linspace(lo[0], hi[0], p["samples"] + 2)[1:-1]
    ys = np.linspace(lo[1], hi[1], p["samples"] + 2)[1:-1]
    pts = np.array([(x, y) for y in ys for x in xs])
    pts = pts[poly.contains(pts)]
    # the potential jumps across the boundary, so keep strictly interior samples
    pts = pts[poly.boundary_distance(pts) > 1e-12 * poly.diameter()]
    u = sol.evaluate(pts) if len(pts) else np.zeros(0)
    ok = sol.reliable(pts) if len(pts) else np.zeros(0, bool)
    w.table("interior.csv", ["x", "y", "u", "reliable"],
            [(float(a), float(b), float(c), int(d)) for (a, b), c, d in zip(pts, u, ok)])
    return {"polygon": p["polygon"], "g": p["g"], "nodes": pz.n, "condition": sol.condition,
            "gauss_residual": float(np.max(np.abs(res))), "interior_points": int(len(pts))}


def run_reproduce(cfg: ExperimentConfig, w: RecordWriter) -> dict:
    p = cfg.params
    t0 = time.perf_counter()
    results = acceptance.run_criteria(p["only"], scale=p["scale"], seed=cfg.seed,
                                      progress=lambda r: print(r.line(), flush=True))
    if p["only"] is None:
        results.append(acceptance.suite_result(results, time.perf_counter() - t0, p["scale"]))
        print(results[-1].line(), flush=True)
    w.table("summary.csv", ["criterion", "name", "passed", "seconds", "budget"],
            [(r.number, r.name, int(r.passed), r.seconds, r.budget) for r in results])
    return {"scale": p["scale"], "all_passed": all(r.passed for r in results),
            "criteria": [r.record() for r in results]}


RUNNERS = {"vfcheck": run_vfcheck, "bops": run_bops, "pencil": run_pencil, "spectra": run_spectra,
           "fem": run_fem, "bie": run_bie, "reproduce": run_reproduce}

# errors raised by the modules for bad input rather than failed computation
_INPUT_ERRORS = (ValidationError, GeometryError, pencil.PencilError, bops.BOperatorError,
                 vfalg.VFAlgebraError, spectra.SpectraError)


# Argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polycorner", description=__doc__.split("\n\n")[0].strip())
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI file with a [%s] section" % name)
        sp.add_argument("--out", help="output root (default $POLYCORNER_OUT or ./polycorner-out)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--cap", type=int, help=f"size cap in unknowns (default {DEFAULT_CAP})")
        for key, prm in schema.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=f"p_{key}", help=prm.help or None)
    return ap


def _error_record(kind: str, message: str, code: int) -> dict:
    return {"status": "error", "error": {"type": kind, "message": message, "exit_code": code},
            "version": __version__}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_INVALID
        if code != 0:
            print(dumps(_error_record("usage", "invalid command line", EXIT_INVALID)), file=sys.stderr)
            return EXIT_INVALID
        return EXIT_OK
    flags = {k[2:]: v for k, v in vars(args).items() if k.startswith("p_")}
    try:
        cfg = load_config(args.subcommand, args.config, flags, args.out, args.seed, args.cap)
    except ValidationError as exc:
        print(dumps(_error_record("validation", str(exc), EXIT_INVALID)), file=sys.stderr)
        return EXIT_INVALID

    record = ResultRecord(cfg.subcommand, cfg.params, cfg.seed)
    writer = RecordWriter(cfg.out, record)
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        record.outputs = RUNNERS[cfg.subcommand](cfg, writer)
        if cfg.subcommand == "reproduce" and not record.outputs["all_passed"]:
            record.status, code = "failed", EXIT_FAILED
    except (CapExceeded, spectra.SizeCapError) as exc:
        record.status, record.error, code = "error", {"type": "cap", "message": str(exc)}, EXIT_CAP
    except _INPUT_ERRORS as exc:
        record.status, record.error, code = "error", {"type": "validation", "message": str(exc)}, EXIT_INVALID
    except (FemError, MeshError, bie.BIEError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        record.status, record.error, code = "error", {"type": "compute", "message": str(exc)}, EXIT_COMPUTE
    record.duration = time.perf_counter() - t0
    if record.error:
        record.error["exit_code"] = code
        print(dumps(record.document()), file=sys.stderr)
    path = writer.finish()
    if code in (EXIT_OK, EXIT_FAILED):
        print(dumps(record.outputs) if cfg.subcommand != "reproduce" else f"record: {path}")
        print(f"record: {path}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
