"""Embedded resolution of reduced plane-curve germs by point blow-ups.

Everything is exact.  The ambient surface is kept as an atlas of affine
charts; in every chart created by a blow-up the new exceptional line is
``{x = 0}`` and at most one older component is visible, on ``{y = 0}``.

A chart produced by the first substitution ``(x, y) -> (x, xy)`` owns every
point ``(0, c)`` of its exceptional line; the companion chart from
``(x, y) -> (xy, x)`` owns only its origin, the one direction the first chart
misses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .errors import (BlowupCapExceeded, HypothesisViolation, InconsistencyError,
                     NonRationalPoint, NotReducedError, ParseError)
from .graph import ARROW, EXC, DualGraph
from .polynomial import Poly, factor_univariate, gcd_with_partials, parse_poly, univariate_str

DEFAULT_MAX_BLOWUPS = 64

Point = Tuple[Fraction, Fraction]


@dataclass(frozen=True)
class PlaneCurveGerm:
    poly: Poly

    def __str__(self) -> str:
        return str(self.poly)


def parse_curve(text: str) -> PlaneCurveGerm:
    f = parse_poly(text)
    if f.is_zero():
        raise ParseError("the zero polynomial does not define a curve")
    if f.coeff(0, 0) != 0:
        raise ParseError(f"{f} does not vanish at the origin")
    g = gcd_with_partials(f)
    if g.degree() > 0:
        raise NotReducedError(f"{f} is not reduced: gcd with its partials is {g}")
    return PlaneCurveGerm(f)


@dataclass(frozen=True)
class BlowupEvent:
    index: int
    chart: str
    center: Point
    new_component: int
    substitutions: Tuple[str, str]
    total_transform: Poly
    extracted_multiplicity: int

    def log_line(self) -> str:
        cx, cy = (_q(c) for c in self.center)
        return (f"{self.index} chart={self.chart} center=({cx},{cy}) new=E{self.new_component} "
                f"mult={self.extracted_multiplicity} total={self.total_transform}")


def _q(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


@dataclass
class _Chart:
    ident: str
    total: Poly
    xcomp: Optional[int]
    ycomp: Optional[int]
    owns_line: bool
    consumed: set = field(default_factory=set)
    _analysis: Optional[list] = None


@dataclass(frozen=True)
class _PointStatus:
    center: Optional[Point]  # None for irrational points (never blown up)
    bad: bool
    arrows: int
    certificate: str = ""


@dataclass
class Configuration:
    """Working state of a resolution: charts, components, adjacency."""

    germ: PlaneCurveGerm
    charts: Dict[str, _Chart] = field(default_factory=dict)
    order: List[str] = field(default_factory=list)
    self_int: Dict[int, int] = field(default_factory=dict)
    mult: Dict[int, int] = field(default_factory=dict)
    edges: set = field(default_factory=set)
    events: List[BlowupEvent] = field(default_factory=list)

    @classmethod
    def start(cls, germ: PlaneCurveGerm) -> "Configuration":
        cfg = cls(germ)
        cfg._add_chart(_Chart("base", germ.poly, None, None, owns_line=False))
        return cfg

    def _add_chart(self, ch: _Chart) -> None:
        self.charts[ch.ident] = ch
        self.order.append(ch.ident)

    def strict_transform(self, ch: _Chart) -> Poly:
        a = self.mult[ch.xcomp] if ch.xcomp is not None else 0
        b = self.mult[ch.ycomp] if ch.ycomp is not None else 0
        return ch.total.divide_monomial(a, b)

    def analyse(self, ident: str) -> List[_PointStatus]:
        ch = self.charts[ident]
        if ch._analysis is None:
            ch._analysis = self._analyse(ch)
        return [p for p in ch._analysis if p.center is None or p.center not in ch.consumed]

    def _analyse(self, ch: _Chart) -> List[_PointStatus]:
        s = self.strict_transform(ch)
        zero = Fraction(0)
        if ch.xcomp is None:
            m = s.order()
            return [_PointStatus((zero, zero), m >= 2, 1 if m == 1 else 0)]
        line = s.on_line_x0()
        if not line:
            raise InconsistencyError(f"strict transform contains the exceptional line in chart {ch.ident}")
        if not ch.owns_line:
            mu = min(line)
            if mu == 0:
                return []
            good = mu == 1 and ch.ycomp is None
            return [_PointStatus((zero, zero), not good, 1 if good else 0)]
        out = []
        for coeffs, mu in factor_univariate(line):
            if len(coeffs) == 1:
                continue  # constant factor
            if len(coeffs) == 2:
                c = -coeffs[0]
                corner = c == 0 and ch.ycomp is not None
                good = mu == 1 and not corner
                out.append(_PointStatus((zero, c), not good, 1 if good else 0))
            elif mu == 1:
                out.append(_PointStatus(None, False, len(coeffs) - 1, univariate_str(coeffs)))
            else:
                raise NonRationalPoint(
                    f"chart {ch.ident}: the strict transform meets the exceptional line "
                    f"with multiplicity {mu} at non-rational points", univariate_str(coeffs))
        out.sort(key=lambda p: (p.center is None, p.center or (0, 0), p.certificate))
        return out

    def bad_points(self) -> List[Tuple[str, Point]]:
        return [(ident, p.center) for ident in self.order for p in self.analyse(ident) if p.bad]

    # ------------------------------------------------------------ blow-up

    def blow_up(self, chart: str, center: Point) -> BlowupEvent:
        if chart not in self.charts:
            raise HypothesisViolation(f"unknown chart {chart!r}")
        center = (Fraction(center[0]), Fraction(center[1]))
        ch = self.charts[chart]
        status = {p.center: p for p in self.analyse(chart) if p.center is not None}
        if center not in status:
            raise HypothesisViolation(f"center {center} is not on the divisor in chart {chart}")
        if not status[center].bad:
            raise HypothesisViolation(f"center {center} in chart {chart} is already normal crossings")
        c = center[1]
        local = ch.total.shift_y(c)
        cx = ch.xcomp
        cy = ch.ycomp if c == 0 else None
        order = local.order()
        new = len(self.mult) + 1
        self.mult[new] = order
        self.self_int[new] = -1
        for comp in (cx, cy):
            if comp is not None:
                self.self_int[comp] -= 1
        if cx is not None and cy is not None:
            self.edges.discard(frozenset((cx, cy)))
        for comp in (cx, cy):
            if comp is not None:
                self.edges.add(frozenset((new, comp)))
        g1, g2 = local.chart_x(), local.chart_y()
        if g1.x_adic_order() != order or g2.x_adic_order() != order:
            raise InconsistencyError("total transform vanishes to excess order on the new line")
        ch.consumed.add(center)
        self._add_chart(_Chart(f"E{new}.1", g1, new, cy, owns_line=True))
        self._add_chart(_Chart(f"E{new}.2", g2, new, cx, owns_line=False))
        shift = "" if c == 0 else f"y -> y + {_q(c)}; "
        ev = BlowupEvent(len(self.events) + 1, chart, center, new,
                         (f"{shift}(x, y) -> (x, x*y)", f"{shift}(x, y) -> (x*y, x)"), g1, order)
        self.events.append(ev)
        return ev

    # ------------------------------------------------------------ output

    def final_graph(self) -> DualGraph:
        if self.bad_points():
            raise HypothesisViolation("configuration is not yet normal crossings")
        exc = sorted(self.mult)
        verts = [(v, EXC, self.self_int[v]) for v in exc]
        edges = [tuple(sorted(e)) for e in self.edges]
        next_id = len(exc) + 1
        for ident in self.order:
            ch = self.charts[ident]
            for p in self.analyse(ident):
                for _ in range(p.arrows):
                    verts.append((next_id, ARROW, None))
                    if ch.xcomp is not None:
                        edges.append((ch.xcomp, next_id))
                    next_id += 1
        return DualGraph.build(verts, edges, dict(self.mult) if self.mult else None)

    def normal_crossings_certificate(self) -> List[str]:
        """Independent local check of every point where the strict transform
        meets the divisor; returns a list of violations (empty when fine)."""
        problems = []
        for ident in self.order:
            ch = self.charts[ident]
            for p in self.analyse(ident):
                if p.bad:
                    problems.append(f"{ident}: unresolved point {p.center}")
                    continue
                if p.center is None or ch.xcomp is None:
                    continue
                s = self.strict_transform(ch).shift_y(p.center[1])
                if s.coeff(0, 0) != 0 or s.coeff(0, 1) == 0:
                    problems.append(f"{ident}: strict transform not transverse at {p.center}")
                if p.center[1] == 0 and ch.ycomp is not None:
                    problems.append(f"{ident}: strict transform through a corner")
        return problems


@dataclass(frozen=True)
class ResolutionTrace:
    germ: PlaneCurveGerm
    events: Tuple[BlowupEvent, ...]
    graph: DualGraph
    mult: Dict[int, int]

    def event_log(self) -> str:
        return "".join(ev.log_line() + "\n" for ev in self.events)


def resolve(germ: PlaneCurveGerm, max_blowups: int = DEFAULT_MAX_BLOWUPS) -> ResolutionTrace:
    cfg = Configuration.start(germ)
    while True:
        bad = cfg.bad_points()
        if not bad:
            break
        if len(cfg.events) >= max_blowups:
            raise BlowupCapExceeded(f"more than {max_blowups} blow-ups needed")
        chart, center = bad[0]
        cfg.blow_up(chart, center)
    problems = cfg.normal_crossings_certificate()
    if problems:
        raise InconsistencyError("; ".join(problems))
    graph = cfg.final_graph()
    return ResolutionTrace(germ, tuple(cfg.events), graph, dict(cfg.mult))


def replay(germ: PlaneCurveGerm, events) -> Configuration:
    cfg = Configuration.start(germ)
    for ev in events:
        got = cfg.blow_up(ev.chart, ev.center)
        if (got.new_component, got.extracted_multiplicity, got.total_transform) != \
                (ev.new_component, ev.extracted_multiplicity, ev.total_transform):
            raise InconsistencyError(f"replay diverged at event {ev.index}")
    return cfg


def pullback_multiplicities(trace: ResolutionTrace) -> Dict[int, int]:
    """ord_D F per exceptional component, re-extracted by replaying the trace."""
    cfg = replay(trace.germ, trace.events)
    if cfg.final_graph() != trace.graph:
        raise InconsistencyError("replayed graph differs from the recorded one")
    mult = {ev.new_component: ev.extracted_multiplicity for ev in cfg.events}
    if mult != trace.mult:
        raise InconsistencyError("replayed multiplicities differ from the recorded ones")
    return mult
