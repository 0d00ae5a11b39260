"""Command-line front end: ``liyaulab <verb> [flags]``.

Exit codes: 0 all selected checks pass, 1 at least one violation (witness in
the report), 2 nothing violated but some prerequisite is uncertified,
3 bad input or I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import graph as gmod
from .curvature import certify_cde_dimension, cde_search_counterexample, curvature_sweep, CurvatureWitness
from .families import FAMILIES, FamilySpec, generate, interior, random_graph
from .heat import propagator_build
from .identities import green_relative, polarization_relative, semigroup_residuals, tilde_relative
from .inequalities import (DEFAULT_BS, PowerSchedule, classical_liyau_residual, cheng_check, harnack_grid,
                           heat_kernel_matrix, kernel_constant, ball_volume_real, kernel_grid, liyau_check,
                           liyau_sides)
from .heat import heat_apply
from .reports import SCHEMA, ViolationReport, reports_to_csv, reports_to_json

VERBS = ("generate", "curvature", "liyau", "harnack", "kernel", "cheng", "identities")
EXIT_PASS, EXIT_VIOLATION, EXIT_INCONCLUSIVE, EXIT_ERROR = 0, 1, 2, 3
DEFAULT_PAIRS = ((0.5, 1.0), (1.0, 2.0), (0.1, 5.0))

_GRID = re.compile(r"^([^:]+):([^:]+):(log|lin)(\d+)$")


class InputError(Exception):
    pass


def parse_t_grid(spec: str) -> list[float]:
    """``"0.01:10:log25"`` (log-spaced, inclusive), ``"1:5:lin5"`` or a comma list ``"0.1,1,10"``."""
    spec = spec.strip()
    m = _GRID.match(spec)
    try:
        if m is None:
            values = [float(x) for x in spec.split(",")]
        else:
            lo, hi, kind, num = float(m.group(1)), float(m.group(2)), m.group(3), int(m.group(4))
            if num < 1 or (num == 1 and lo != hi) or hi < lo:
                raise InputError(f"bad t-grid bounds or count in {spec!r}")
            if kind == "log":
                if lo <= 0:
                    raise InputError("log grid needs a positive lower end")
                values = np.geomspace(lo, hi, num).tolist()
            else:
                values = np.linspace(lo, hi, num).tolist()
    except ValueError as exc:
        raise InputError(f"cannot parse t-grid {spec!r}: {exc}") from None
    if not values or any(not (v > 0 and math.isfinite(v)) for v in values):
        raise InputError(f"t-grid {spec!r} must contain positive finite times")
    return values


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


@dataclass
class RunConfig:
    """Everything a run depends on; a run is a pure function of this."""

    verb: str
    graph: str | None = None
    vertices: str = "all"
    n: float | None = None
    K: float = 0.0
    b: list[float] = field(default_factory=lambda: list(DEFAULT_BS))
    t: str = "0.01:10:log25"
    eps: float = 0.1
    seed: int = 0
    starts: int = 64
    tol: float = 1e-7
    out: str | None = None
    format: str = "json"
    pairs: list[list[float]] = field(default_factory=lambda: [list(p) for p in DEFAULT_PAIRS])
    center: str | None = None
    radii: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    count: int = 50
    family: str | None = None
    size: list[int] = field(default_factory=list)
    weight: float = 1.0
    measure: str = "unit"

    def to_dict(self) -> dict:
        return asdict(self)


# -- graph input ------------------------------------------------------------------------------


def parse_family(text: str) -> FamilySpec:
    """``family:size[:measure]`` with size comma-separated, e.g. ``lattice_box:2,5``."""
    parts = text.split(":")
    if len(parts) not in (2, 3) or parts[0] not in FAMILIES:
        raise InputError(f"{text!r} is neither a graph file nor family:size[:measure]")
    try:
        size = tuple(int(s) for s in parts[1].split(","))
    except ValueError:
        raise InputError(f"bad family size in {text!r}") from None
    return FamilySpec(parts[0], size, measure=parts[2] if len(parts) == 3 else "unit")


def resolve_graph(source: str | None) -> tuple[gmod.WeightedGraph, FamilySpec | None]:
    if source is None:
        raise InputError("this verb needs --graph")
    path = Path(source)
    if path.exists():
        try:
            return gmod.load(path), None
        except OSError as exc:
            raise InputError(f"cannot read {source}: {exc}") from None
        except gmod.GraphError as exc:
            raise InputError(f"{source}: {exc}") from None
    spec = parse_family(source)
    try:
        return generate(spec), spec
    except (ValueError, gmod.GraphError) as exc:
        raise InputError(str(exc)) from None


def _check_vertices(g, spec, mode: str) -> list[str]:
    if mode == "all":
        return list(g.vertices)
    if mode == "interior":
        return interior(g, spec) if spec is not None else list(g.vertices)
    return [v for v in mode.split(",")]


def prerequisite(g, n, K, vertices, starts, seed, tol) -> tuple[float, bool]:
    """n and whether CDE'(n, K) survived the counterexample search at ``vertices``."""
    if n is None:
        return certify_cde_dimension(g, K=K, vertices=vertices, starts=starts, seed=seed, tol=tol)
    ok = all(cde_search_counterexample(g, x, n, K, starts=starts, seed=seed, tol=tol) is None for x in vertices)
    return n, ok


# -- verbs --------------------------------------------------------------------------------------------


def _graph_name(cfg: RunConfig) -> str:
    return cfg.graph or ""


def _run_liyau(cfg, g, spec):
    vs = _check_vertices(g, spec, cfg.vertices)
    n, cert = prerequisite(g, cfg.n, cfg.K, vs, cfg.starts, cfg.seed, cfg.tol)
    prop = propagator_build(g)
    return [liyau_check(g, prop, n, cfg.K, cfg.b, parse_t_grid(cfg.t), vertices=vs, certified=cert,
                        tol=cfg.tol, graph_name=_graph_name(cfg))]


def _run_harnack(cfg, g, spec):
    vs = _check_vertices(g, spec, cfg.vertices)
    n, cert = prerequisite(g, cfg.n, 0.0, vs, cfg.starts, cfg.seed, cfg.tol)
    prop = propagator_build(g)
    pairs = [tuple(p) for p in cfg.pairs]
    for t, s in pairs:
        if not 0 < t < s:
            raise InputError(f"Harnack pair needs 0 < t < s, got {t}, {s}")
    return [harnack_grid(g, prop, n, pairs, certified=cert, tol=cfg.tol, graph_name=_graph_name(cfg))]


def _run_kernel(cfg, g, spec):
    vs = _check_vertices(g, spec, cfg.vertices)
    n, cert = prerequisite(g, cfg.n, 0.0, vs, cfg.starts, cfg.seed, cfg.tol)
    prop = propagator_build(g)
    return [kernel_grid(g, prop, n, parse_t_grid(cfg.t), certified=cert, tol=cfg.tol, graph_name=_graph_name(cfg))]


def _default_center(g) -> str:
    ecc = [gmod.bfs_distances(g, i).max() for i in range(g.n)]
    return g.vertices[int(np.argmin(ecc))]


def _run_cheng(cfg, g, spec):
    if not cfg.K > 0:
        raise InputError("cheng needs --K > 0 (the condition checked is CDE'(n, -K))")
    vs = _check_vertices(g, spec, cfg.vertices)
    n, cert = prerequisite(g, cfg.n, -cfg.K, vs, cfg.starts, cfg.seed, cfg.tol)
    center = cfg.center or _default_center(g)
    if center not in g.vertices:
        raise InputError(f"unknown center vertex {center!r}")
    return [cheng_check(g, n, cfg.K, center, cfg.radii, certified=cert, tol=cfg.tol, graph_name=_graph_name(cfg))]


def _run_identities(cfg):
    rng = np.random.default_rng(cfg.seed)
    times = parse_t_grid(cfg.t) if cfg.t != RunConfig.t else [0.01, 0.1, 1.0, 10.0]
    rep = ViolationReport("identities", f"random[{cfg.count}]", math.nan, math.nan, tol=cfg.tol,
                          extra={"param": "identity", "seed": cfg.seed})
    for k in range(cfg.count):
        g = random_graph(rng)
        name = f"g{k}"
        f, h = rng.normal(size=g.n), rng.normal(size=g.n)
        u = rng.uniform(0.1, 10.0, size=g.n)
        rep.add(name, 0.0, "green", "-", green_relative(g, f, h), 0.0)
        rep.add(name, 0.0, "polarization", "-", polarization_relative(g, f), 0.0)
        rep.add(name, 0.0, "gamma2_tilde", "-", tilde_relative(g, u), 0.0)
        prop = propagator_build(g)
        for t in times:
            for key, val in semigroup_residuals(prop, t, f).items():
                rep.add(name, t, key, "-", val, 0.0)
    return [rep]


def _curvature_doc(cfg, g, spec) -> tuple[dict, int]:
    vs = _check_vertices(g, spec, cfg.vertices)
    n = math.inf if cfg.n is None else cfg.n
    rep = curvature_sweep(g, n, cfg.K, vs, starts=cfg.starts, seed=cfg.seed, tol=cfg.tol)
    doc = {"schema": SCHEMA, "config": cfg.to_dict(), "graph_hash": g.content_hash(), "check": "curvature",
           "n": str(n) if not math.isfinite(n) else n, "K": cfg.K, "verdict": rep.verdict,
           "records": json.loads(rep.to_json())}
    return doc, (EXIT_VIOLATION if rep.verdict == "violated" else EXIT_PASS), rep.to_csv()


def exit_code(reports: list[ViolationReport]) -> int:
    verdicts = {r.verdict for r in reports}
    if "fail" in verdicts:
        return EXIT_VIOLATION
    if "inconclusive" in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


def _write(cfg: RunConfig, json_text: str, csv_text: str) -> None:
    primary, other = (json_text, csv_text) if cfg.format == "json" else (csv_text, json_text)
    if cfg.out is None:
        sys.stdout.write(primary)
        return
    out = Path(cfg.out)
    out.write_text(primary)
    sibling = out.with_suffix(".csv" if cfg.format == "json" else ".json")
    if sibling != out:
        sibling.write_text(other)


def run(cfg: RunConfig) -> int:
    """Execute one verb; returns the exit code. Raises InputError / OSError on bad input."""
    if cfg.verb not in VERBS:
        raise InputError(f"unknown verb {cfg.verb!r}")
    if cfg.format not in ("json", "csv"):
        raise InputError("--format must be json or csv")
    if cfg.verb == "generate":
        if cfg.family is None:
            raise InputError("generate needs --family and --size")
        try:
            g = generate(FamilySpec(cfg.family, tuple(cfg.size), cfg.weight, cfg.measure))
        except (ValueError, gmod.GraphError) as exc:
            raise InputError(str(exc)) from None
        text = gmod.dumps(g)
        if cfg.out is None:
            sys.stdout.write(text)
        else:
            Path(cfg.out).write_text(text)
        return EXIT_PASS
    if cfg.verb == "identities":
        reports = _run_identities(cfg)
        provenance = {}
    else:
        g, spec = resolve_graph(cfg.graph)
        if cfg.verb == "curvature":
            doc, code, csv_text = _curvature_doc(cfg, g, spec)
            _write(cfg, json.dumps(doc, indent=1) + "\n", csv_text)
            return code
        runner = {"liyau": _run_liyau, "harnack": _run_harnack, "kernel": _run_kernel, "cheng": _run_cheng}
        reports = runner[cfg.verb](cfg, g, spec)
        provenance = {"graph_hash": g.content_hash()}
    config = {**cfg.to_dict(), **provenance}
    _write(cfg, reports_to_json(reports, config), reports_to_csv(reports))
    return exit_code(reports)


# -- witness recheck ----------------------------------------------------------------------------


def recheck_witness(doc: dict) -> list[float]:
    """Recompute from scratch the margin (or deficit) of every stored witness in a report document."""
    cfg = doc["config"]
    g, _ = resolve_graph(cfg["graph"])
    if doc.get("check") == "curvature":
        out = []
        for rec in doc["records"]:
            w = rec.get("cde_witness")
            if w:
                out.append(CurvatureWitness(**w).recheck(g))
        return out
    prop = propagator_build(g)
    out = []
    for rep in doc["reports"]:
        w = rep.get("witness")
        if not w:
            continue
        n, K, check = float(rep["n"]), float(rep["K"]), rep["check"]
        t, y = w["t"], w["source"]
        if check == "liyau":
            f = g.delta_function(y)
            out.append(float(liyau_sides(g, prop, f, t, n, K, PowerSchedule(w["b"])).margin[g.index(w["vertex"])]))
        elif check == "liyau_classical":
            out.append(float(classical_liyau_residual(g, prop, g.delta_function(y), t, n)[g.index(w["vertex"])]))
        elif check == "harnack":
            x, z = w["vertex"].split(">")
            s = w["b"]
            f = g.delta_function(y)
            d = gmod.graph_distance(g, x, z)
            bound = math.exp(n * math.log(s / t) + 4.0 * g.m_max * d * d / (g.omega_min * (s - t)))
            out.append(float(bound * heat_apply(prop, f, s)[g.index(z)] - heat_apply(prop, f, t)[g.index(x)]))
        elif check == "kernel_upper":
            i, j = g.index(w["vertex"]), g.index(y)
            p = heat_kernel_matrix(prop, t)[i, j]
            out.append(kernel_constant(g, n) / ball_volume_real(g, i, math.sqrt(t)) - float(p))
        elif check == "cheng":
            out.append(float(w["rhs"]) - float(cheng_check(g, n, K).rows[0][4]))
        else:
            raise InputError(f"no recheck for check {check!r}")
    return out


# -- argument parsing ------------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="liyaulab", description="Curvature, heat flow and Li-Yau checks on weighted graphs.")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("-g", "--graph", help="graph JSON file, or family:size[:measure] such as lattice_box:2,5")
    p.add_argument("--vertices", default="all", help="all | interior | comma list of vertex ids")
    p.add_argument("--n", type=float, help="dimension; omitted = certify by search")
    p.add_argument("--K", type=float, default=None, help="curvature bound (default 0; cheng default 1)")
    p.add_argument("--b", type=float, action="append", help="power-schedule exponent, repeatable")
    p.add_argument("--t", default="0.01:10:log25", help="t-grid: min:max:logN, min:max:linN or a comma list")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=64)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", help="output path (the other format is written next to it)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--pair", action="append", help="Harnack times t,s (repeatable)")
    p.add_argument("--center", help="cheng: ball centre for the Dirichlet sequence")
    p.add_argument("--radii", default="1,2,3,4", help="cheng: comma list of radii")
    p.add_argument("--count", type=int, default=50, help="identities: number of random graphs")
    p.add_argument("--family", choices=FAMILIES, help="generate: family")
    p.add_argument("--size", help="generate: size, comma-separated")
    p.add_argument("--weight", type=float, default=1.0)
    p.add_argument("--measure", default="unit", choices=("unit", "degree"))
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    K = args.K if args.K is not None else (1.0 if args.verb == "cheng" else 0.0)
    tol = args.tol if args.tol is not None else (1e-8 if args.verb == "identities" else 1e-7)
    pairs = [list(_floats(p)) for p in args.pair] if args.pair else [list(p) for p in DEFAULT_PAIRS]
    if any(len(p) != 2 for p in pairs):
        raise InputError("--pair takes exactly two numbers t,s")
    parse_t_grid(args.t)
    return RunConfig(
        verb=args.verb, graph=args.graph, vertices=args.vertices, n=args.n, K=K,
        b=list(args.b) if args.b else list(DEFAULT_BS), t=args.t, eps=args.eps, seed=args.seed,
        starts=args.starts, tol=tol, out=args.out, format=args.format, pairs=pairs, center=args.center,
        radii=[int(r) for r in _floats(args.radii)], count=args.count, family=args.family,
        size=[int(s) for s in _floats(args.size)] if args.size else [], weight=args.weight, measure=args.measure,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(config_from_args(args))
    except (InputError, OSError, gmod.GraphError) as exc:
        print(f"liyaulab: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
