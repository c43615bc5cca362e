"""Command-line front end: ``folpi <subcommand> ...``.

Reports are plain text, deterministic for a given configuration and seed,
and end with one line per internal check.  Exit status is 0 when every
check passes, 1 on a failed check or inconsistency, 2 on unparseable input,
3 when an input violates a standing hypothesis and 4 on numeric failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .errors import FolpiError, InconsistencyError
from .graph import DualGraph, branch_pair, classify_components, solve_multiplicities
from .integrator import set_tolerances, tolerances
from .presentation import abelianize, assemble_global, divisor_weights, exponent_check, tietze_simplify
from .rabotage import verify_bounds_sweep
from .resolution import parse_curve, pullback_multiplicities, resolve
from .saddle import (SaddleModel, col_passage, dulac_asymptotics, dulac_map, first_integral_along,
                     flow, holonomy)


@dataclass
class Report:
    command: str
    config: Dict[str, object]
    lines: List[str] = field(default_factory=list)
    checks: List[Tuple[str, bool, str]] = field(default_factory=list)
    files: Dict[str, str] = field(default_factory=dict)

    def section(self, title: str, body: str = "") -> None:
        self.lines.append(f"== {title}")
        if body:
            self.lines.extend(body.rstrip("\n").split("\n"))

    def add(self, line: str) -> None:
        self.lines.append(line)

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append((name, bool(ok), detail))

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def render(self, color: bool = False) -> str:
        def tag(ok):
            word = "PASS" if ok else "FAIL"
            if color:
                return f"\033[{32 if ok else 31}m{word}\033[0m"
            return word

        head = [f"folpi {__version__}", f"command: {self.command}",
                "config: " + " ".join(f"{k}={v}" for k, v in self.config.items())]
        tail = ["== checks"] + [f"{tag(ok)} {name}" + (f": {d}" if d else "") for name, ok, d in self.checks]
        tail.append(f"status: {tag(self.ok)}")
        return "\n".join(head + self.lines + tail) + "\n"


# ------------------------------------------------------------ subcommands

def _load_graph(path: str) -> DualGraph:
    return DualGraph.from_text(Path(path).read_text())


def cmd_resolve(args, rep: Report) -> None:
    germ = parse_curve(args.expr)
    trace = resolve(germ, max_blowups=args.max_blowups)
    rep.section("germ", str(germ))
    rep.section("blow-ups", trace.event_log() or "(none: already normal crossings)")
    rep.section("graph", trace.graph.to_text())
    mult = pullback_multiplicities(trace)
    solved = solve_multiplicities(trace.graph) if trace.graph.exceptional else {}
    rep.check("replayed multiplicities equal intersection-matrix solve", mult == solved,
              " ".join(f"E{v}={m}" for v, m in sorted(mult.items())))
    rep.check("intersection matrix negative definite", trace.graph.is_negative_definite())
    rep.files["graph.txt"] = trace.graph.to_text()
    rep.files["events.log"] = trace.event_log()


def _graph_and_mults(source: str, max_blowups: int, rep: Report):
    if os.path.isfile(source):
        graph = _load_graph(source)
        graph.validate()
        mults = dict(graph.mult) if graph.mult else solve_multiplicities(graph)
        rep.section("input", f"graph file {source}")
        if graph.mult:
            rep.check("file multiplicities solve the intersection system",
                      dict(graph.mult) == solve_multiplicities(graph))
        return graph, mults
    germ = parse_curve(source)
    trace = resolve(germ, max_blowups=max_blowups)
    rep.section("input", f"germ {germ}")
    mults = pullback_multiplicities(trace)
    rep.check("replayed multiplicities equal intersection-matrix solve",
              mults == (solve_multiplicities(trace.graph) if trace.graph.exceptional else {}))
    return trace.graph, mults


def cmd_pi1(args, rep: Report) -> None:
    graph, mults = _graph_and_mults(args.source, args.max_blowups, rep)
    rep.section("graph", graph.to_text())
    pres = assemble_global(graph, None, mults)
    rep.section("presentation", pres.to_text())
    simple = tietze_simplify(pres)
    rep.section("after Tietze elimination", simple.to_text())
    ab = abelianize(pres)
    rep.section("abelianization", str(ab))
    branches = len(graph.arrows)
    rep.check("abelianization is free of rank = number of branches",
              ab.rank == branches and not ab.torsion, f"rank {ab.rank}, branches {branches}")
    verdict = exponent_check(pres, divisor_weights(graph, mults))
    rep.check("divisor orders annihilate every relator", verdict.ok,
              "" if verdict.ok else f"violations {verdict.violations}")
    rep.check("Tietze elimination preserves the abelianization", abelianize(simple) == ab)
    rep.files["presentation.txt"] = pres.to_text()
    rep.files["relators.csv"] = pres.matrix_csv()


def cmd_decompose(args, rep: Report) -> None:
    graph, _ = _graph_and_mults(args.graph, args.max_blowups, rep)
    dec = classify_components(graph)
    lines = [f"central {('E%d' % dec.central) if dec.central is not None else '-'}"]
    lines += ["chain " + " ".join(f"E{v}" for v in c) for c in dec.chains]
    for b in dec.dead_branches:
        sp = branch_pair(graph, b)
        lines.append("dead " + " ".join(f"E{v}" for v in b.members) +
                     f" attach E{b.attach} p={sp.p} q={sp.q} m={sp.m} n={sp.n}")
        rep.check(f"Seifert pair of dead branch at E{b.attach}",
                  math.gcd(sp.p, sp.q) == 1 and sp.p >= 2 and sp.m * sp.p - sp.n * sp.q == 1)
    lines += ["simple " + " ".join(f"E{v}" for v in dec.simple)] if dec.simple else []
    rep.section("decomposition", "\n".join(lines))
    rep.check("intersection matrix negative definite", graph.is_negative_definite())


def cmd_saddle_verify(args, rep: Report) -> None:
    model = SaddleModel.parse(args.model)
    rng = np.random.default_rng(args.seed)
    rep.section("model", model.describe())
    lam = model.lam

    mods = np.array([1e-3, 1e-2, 1e-1])
    y0 = mods * np.exp(1j * rng.uniform(0, 2 * math.pi, len(mods)))
    h = holonomy(model, y0)
    dev = np.abs(h - np.exp(-2j * math.pi * lam) * y0)
    rep.section("holonomy", "\n".join(f"|y0|={m:.0e} |h(y0) - e^(-2 pi i lambda) y0| = {d:.3e}"
                                      for m, d in zip(mods, dev)))
    if model.kind == "linear":
        rep.check("linear holonomy matches the closed form", dev.max() < 1e-9, f"max {dev.max():.2e}")

    xs = np.array([5e-2, 1e-2, 5e-3, 1e-3, 5e-4, 1e-4]) * np.exp(1j * rng.uniform(0, 2 * math.pi))
    cp = col_passage(model, xs, 0.3)
    arg_err = np.abs(np.angle(cp.y_end * np.exp(-0.3j)))
    dist = np.abs(cp.y_end)
    rep.section("col passage", "\n".join(f"|x|={abs(x):.0e} tau={t:.10f} dist={d:.6e}"
                                         for x, t, d in zip(xs, cp.tau, dist)))
    rep.check("col passage preserves arg y", arg_err.max() < 1e-9, f"max {arg_err.max():.2e}")
    rep.check("distance to the circle decreases to 0", bool(np.all(np.diff(dist) < 0)))

    method = "auto" if model.kind == "normal" else "flow"
    dr = dulac_asymptotics(model, theta=0.5, method=method)
    rep.section("Dulac asymptotics",
                f"kappa {dr.kappa:.6f} residual {dr.residual:.3e} matches {dr.convention}\n"
                f"y D'/D at r={dr.radii[-1]:.0e}: {dr.limit.real:.8f}{dr.limit.imag:+.2e}i")
    rep.files["dulac.csv"] = dr.csv()
    rep.check("Dulac exponent matches lambda or 1/lambda", dr.convention != "neither",
              f"kappa {dr.kappa:.6f}")

    if model.kind == "normal":
        r = np.array([1e-2, 1e-3, 1e-4])
        theta = rng.uniform(0, 2 * math.pi * (lam + 1), len(r))
        a, b = dulac_map(model, r, theta, method="flow"), dulac_map(model, r, theta, method="integral")
        gap = float(np.max(np.abs(a - b) / np.abs(b)))
        rep.check("Dulac flow and first-integral methods agree", gap < 1e-7, f"max relative gap {gap:.2e}")
        traj = flow(model, (0.5 + 0j, 0.2 + 0j), "X", [0, 2j * math.pi], h_max=1e-4)
        H = first_integral_along(model, traj)
        drift = float(np.max(np.abs(H / H[0] - 1)))
        rep.check("first integral conserved along the X flow", drift < 1e-8,
                  f"relative drift {drift:.2e} over {len(H) - 1} steps")
        rep.files["trajectory.csv"] = traj.csv(model)


def cmd_rabotage_sweep(args, rep: Report) -> None:
    model = SaddleModel.parse(args.model)
    rep.section("model", model.describe())
    sweep = verify_bounds_sweep(model, n=args.samples)
    lines = [f"slope {sweep.slope:.6f} residual {sweep.residual:.3e} matches {sweep.convention}",
             f"rugosity loss fit c={sweep.loss_fit[0]:.6e} gamma={sweep.loss_fit[1]:.6f}"]
    if sweep.error:
        lines.append(f"error: {sweep.error}")
    rep.section("bounds sweep", "\n".join(lines))
    rep.section("rows", sweep.csv())
    rep.files["sweep.csv"] = sweep.csv()
    rep.check("sweep completed", sweep.error is None, sweep.error or "")
    rep.check("size slope matches lambda or 1/lambda", sweep.convention != "neither",
              f"slope {sweep.slope:.4f}")
    rep.check("rugosity loss decreases with size", sweep.loss_monotone)


# ------------------------------------------------------------ entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rel", type=float, default=None, help="integrator relative tolerance")
    common.add_argument("--tol-abs", type=float, default=None, help="integrator absolute tolerance")
    common.add_argument("--max-blowups", type=int, default=64)
    common.add_argument("--samples", type=int, default=1024, help="angular samples for collar slices")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=str, default=None, help="directory for report and companion files")

    p = argparse.ArgumentParser(prog="folpi", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"folpi {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("resolve", parents=[common], help="embedded resolution of a curve germ")
    s.add_argument("expr")
    s = sub.add_parser("pi1", parents=[common], help="presentation of the complement group")
    s.add_argument("source", help="polynomial or graph file")
    s = sub.add_parser("decompose", parents=[common], help="dead branches and chains of a graph")
    s.add_argument("graph", help="polynomial or graph file")
    s = sub.add_parser("saddle", help="saddle dynamics")
    ss = s.add_subparsers(dest="action", required=True)
    v = ss.add_parser("verify", parents=[common], help="holonomy, col passage and Dulac report")
    v.add_argument("model")
    s = sub.add_parser("rabotage", help="lunule reduction")
    rs = s.add_subparsers(dest="action", required=True)
    v = rs.add_parser("sweep", parents=[common], help="size and rugosity bounds sweep")
    v.add_argument("model")
    return p


HANDLERS = {
    ("resolve", None): cmd_resolve,
    ("pi1", None): cmd_pi1,
    ("decompose", None): cmd_decompose,
    ("saddle", "verify"): cmd_saddle_verify,
    ("rabotage", "sweep"): cmd_rabotage_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = HANDLERS[(args.command, getattr(args, "action", None))]
    if args.max_blowups < 1 or args.samples < 16:
        print("folpi: --max-blowups must be >= 1 and --samples >= 16", file=sys.stderr)
        return 2
    try:
        set_tolerances(args.tol_rel, args.tol_abs)
    except ValueError as exc:
        print(f"folpi: {exc}", file=sys.stderr)
        return 2
    rtol, atol = tolerances()
    target = getattr(args, "expr", None) or getattr(args, "source", None) or \
        getattr(args, "graph", None) or getattr(args, "model", None)
    name = args.command + (f" {args.action}" if getattr(args, "action", None) else "")
    config = {"input": repr(target), "tol_rel": rtol, "tol_abs": atol, "max_blowups": args.max_blowups,
              "samples": args.samples, "seed": args.seed}
    rep = Report(name, config)
    color = sys.stdout.isatty() and not os.environ.get("FOLPI_NO_COLOR")
    try:
        handler(args, rep)
    except FolpiError as exc:
        print(f"folpi: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    text = rep.render()
    sys.stdout.write(rep.render(color) if color else text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text)
        for fname, body in sorted(rep.files.items()):
            (out / fname).write_text(body)
    return 0 if rep.ok else InconsistencyError.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
