"""Weighted dual graphs of resolution divisors and their decomposition.

Vertex ids are positive integers in creation order.  Exceptional components
carry a self-intersection; strict-transform vertices ("arrows") carry none and
hang off exactly one exceptional vertex.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import GraphError, HypothesisViolation, InconsistencyError, ParseError

EXC = "exc"
ARROW = "arrow"


@dataclass(frozen=True)
class DualGraph:
    kinds: Mapping[int, str]
    self_int: Mapping[int, int]
    edges: FrozenSet[FrozenSet[int]]
    mult: Optional[Mapping[int, int]] = None

    @classmethod
    def build(cls, vertices: Iterable[Tuple[int, str, Optional[int]]],
              edges: Iterable[Tuple[int, int]],
              mult: Optional[Mapping[int, int]] = None) -> "DualGraph":
        kinds, si = {}, {}
        for vid, kind, s in vertices:
            if vid in kinds:
                raise GraphError(f"duplicate vertex {vid}")
            if kind not in (EXC, ARROW):
                raise GraphError(f"unknown vertex kind {kind!r}")
            kinds[vid] = kind
            if kind == EXC:
                si[vid] = int(s)
        es = set()
        for a, b in edges:
            if a == b:
                raise GraphError(f"self-loop at {a}")
            if a not in kinds or b not in kinds:
                raise GraphError(f"edge ({a},{b}) references an unknown vertex")
            e = frozenset((a, b))
            if e in es:
                raise GraphError(f"multiple edge between {a} and {b}")
            es.add(e)
        g = cls(dict(sorted(kinds.items())), dict(sorted(si.items())), frozenset(es),
                dict(sorted(mult.items())) if mult is not None else None)
        g.validate()
        return g

    # -- queries
    @property
    def vertices(self) -> List[int]:
        return sorted(self.kinds)

    @property
    def exceptional(self) -> List[int]:
        return [v for v in self.vertices if self.kinds[v] == EXC]

    @property
    def arrows(self) -> List[int]:
        return [v for v in self.vertices if self.kinds[v] == ARROW]

    def neighbors(self, v: int) -> List[int]:
        return sorted(w for e in self.edges if v in e for w in e if w != v)

    def valence(self, v: int) -> int:
        return len(self.neighbors(v))

    def arrow_count(self, v: int) -> int:
        return sum(1 for w in self.neighbors(v) if self.kinds[w] == ARROW)

    def label(self, v: int) -> str:
        return f"{'E' if self.kinds[v] == EXC else 'S'}{v}"

    def intersection_matrix(self) -> List[List[int]]:
        ex = self.exceptional
        idx = {v: i for i, v in enumerate(ex)}
        m = [[0] * len(ex) for _ in ex]
        for v in ex:
            m[idx[v]][idx[v]] = self.self_int[v]
        for e in self.edges:
            a, b = sorted(e)
            if a in idx and b in idx:
                m[idx[a]][idx[b]] = m[idx[b]][idx[a]] = 1
        return m

    def pairing(self, d: int, e: int) -> int:
        """(D, E) with E exceptional: self-intersection on the diagonal,
        1 for adjacent components, 0 otherwise."""
        if d == e:
            return self.self_int[e]
        return 1 if frozenset((d, e)) in self.edges else 0

    def is_connected(self) -> bool:
        vs = self.vertices
        if not vs:
            return True
        seen, stack = {vs[0]}, [vs[0]]
        adj = self._adjacency()
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(vs)

    def _adjacency(self) -> Dict[int, List[int]]:
        adj = {v: [] for v in self.kinds}
        for e in self.edges:
            a, b = tuple(e)
            adj[a].append(b)
            adj[b].append(a)
        return {v: sorted(ws) for v, ws in adj.items()}

    def validate(self) -> None:
        if not self.is_connected():
            raise GraphError("graph is disconnected")
        if not self.exceptional:
            if len(self.arrows) > 1:
                raise GraphError("arrows without exceptional components")
            return
        for v in self.arrows:
            nb = self.neighbors(v)
            if len(nb) != 1 or self.kinds[nb[0]] != EXC:
                raise GraphError(f"arrow {v} must attach to exactly one exceptional vertex")
        if self.mult is not None:
            for v, m in self.mult.items():
                if v not in self.kinds or self.kinds[v] != EXC:
                    raise GraphError(f"multiplicity given for non-exceptional vertex {v}")
                if m <= 0:
                    raise GraphError(f"multiplicity of {v} must be positive")

    def with_mult(self, mult: Mapping[int, int]) -> "DualGraph":
        return DualGraph.build(
            [(v, self.kinds[v], self.self_int.get(v)) for v in self.vertices],
            [tuple(sorted(e)) for e in self.edges], mult)

    def is_negative_definite(self) -> bool:
        m = self.intersection_matrix()
        for k in range(1, len(m) + 1):
            d = determinant([row[:k] for row in m[:k]])
            if d == 0 or (d > 0) != (k % 2 == 0):
                return False
        return True

    # -- text format
    def to_text(self) -> str:
        lines = []
        for v in self.vertices:
            if self.kinds[v] == EXC:
                lines.append(f"V {v} exc {self.self_int[v]}")
            else:
                lines.append(f"V {v} arrow")
        for a, b in sorted(tuple(sorted(e)) for e in self.edges):
            lines.append(f"E {a} {b}")
        if self.mult is not None:
            for v, m in sorted(self.mult.items()):
                lines.append(f"M {v} {m}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DualGraph":
        verts, edges, mult = [], [], {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            try:
                if tok[0] == "V" and len(tok) == 4 and tok[2] == EXC:
                    verts.append((int(tok[1]), EXC, int(tok[3])))
                elif tok[0] == "V" and len(tok) == 3 and tok[2] == ARROW:
                    verts.append((int(tok[1]), ARROW, None))
                elif tok[0] == "E" and len(tok) == 3:
                    edges.append((int(tok[1]), int(tok[2])))
                elif tok[0] == "M" and len(tok) == 3:
                    mult[int(tok[1])] = int(tok[2])
                else:
                    raise ValueError
            except ValueError:
                raise ParseError(f"line {lineno}: cannot parse {raw!r}") from None
        return cls.build(verts, edges, mult or None)


def determinant(m: Sequence[Sequence[int]]) -> Fraction:
    a = [[Fraction(v) for v in row] for row in m]
    n, det = len(a), Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return det


def solve_rational(m: Sequence[Sequence[int]], rhs: Sequence[int]) -> List[Fraction]:
    n = len(m)
    a = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(m, rhs)]
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            raise GraphError("intersection matrix is singular")
        a[c], a[piv] = a[piv], a[c]
        for r in range(n):
            if r != c and a[r][c]:
                f = a[r][c] / a[c][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [a[i][n] / a[i][i] for i in range(n)]


# ------------------------------------------------------------ decomposition

@dataclass(frozen=True)
class DeadBranch:
    members: Tuple[int, ...]  # extremity first
    attach: int


@dataclass(frozen=True)
class DivisorDecomposition:
    chains: Tuple[Tuple[int, ...], ...]
    dead_branches: Tuple[DeadBranch, ...]
    simple: Tuple[int, ...]
    blocks: Tuple[Tuple[int, Tuple[DeadBranch, ...]], ...]
    central: Optional[int]

    def branches_at(self, v: int) -> Tuple[DeadBranch, ...]:
        return tuple(b for b in self.dead_branches if b.attach == v)

    def dead_members(self) -> List[int]:
        return sorted(v for b in self.dead_branches for v in b.members)


def _order_path(nodes: List[int], adj: Mapping[int, List[int]], start: int) -> Tuple[int, ...]:
    inside = set(nodes)
    out, prev, cur = [start], None, start
    while True:
        nxt = [w for w in adj[cur] if w in inside and w != prev and w not in out]
        if not nxt:
            return tuple(out)
        prev, cur = cur, nxt[0]
        out.append(cur)


def classify_components(graph: DualGraph) -> DivisorDecomposition:
    if not graph.is_connected():
        raise GraphError("graph is disconnected")
    adj = graph._adjacency()
    exc = graph.exceptional
    low = [v for v in exc if len(adj[v]) <= 2]
    low_set = set(low)

    chains, seen = [], set()
    for v in low:
        if v in seen:
            continue
        comp, stack = [], [v]
        seen.add(v)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in adj[u]:
                if w in low_set and w not in seen:
                    seen.add(w)
                    stack.append(w)
        comp.sort()
        ends = [u for u in comp if sum(1 for w in adj[u] if w in low_set) <= 1]
        extremities = [u for u in comp if len(adj[u]) == 1]
        start = min(extremities) if extremities else (min(ends) if ends else comp[0])
        chains.append(_order_path(comp, adj, start))

    dead = []
    for ch in chains:
        if len(adj[ch[0]]) != 1:
            continue
        outside = sorted({w for u in ch for w in adj[u]
                          if w not in ch and graph.kinds[w] == EXC})
        if len(outside) != 1:
            continue  # the whole divisor is one chain: no attach point
        dead.append(DeadBranch(ch, outside[0]))

    dead_set = {v for b in dead for v in b.members}
    attach = sorted({b.attach for b in dead})
    blocks = tuple((a, tuple(b for b in dead if b.attach == a)) for a in attach)
    simple = tuple(v for v in exc if v not in dead_set and v not in attach)

    centrals = [a for a, bs in blocks if len(bs) >= 2]
    if len(centrals) > 1:
        raise HypothesisViolation(
            f"components {centrals} each meet at least two dead branches; "
            "at most one central component is allowed")
    dead.sort(key=lambda b: (b.attach, b.members))
    return DivisorDecomposition(tuple(sorted(chains)), tuple(dead), simple, blocks,
                                centrals[0] if centrals else None)


def central_component(graph: DualGraph) -> Optional[int]:
    return classify_components(graph).central


def solve_multiplicities(graph: DualGraph) -> Dict[int, int]:
    exc = graph.exceptional
    if not exc:
        return {}
    m = graph.intersection_matrix()
    rhs = [-graph.arrow_count(v) for v in exc]
    sol = solve_rational(m, rhs)
    out = {}
    for v, s in zip(exc, sol):
        if s.denominator != 1 or s <= 0:
            raise GraphError(f"multiplicity of E{v} is {s}, not a positive integer")
        out[v] = int(s)
    return out


# ------------------------------------------------------------ Seifert pairs

@dataclass(frozen=True)
class SeifertPair:
    p: int
    q: int
    m: int
    n: int

    def __post_init__(self):
        if self.p < 2 or self.q < 1 or gcd(self.p, self.q) != 1:
            raise GraphError(f"invalid Seifert pair p={self.p}, q={self.q}")
        if not (0 <= self.n < self.p) or self.m < 0 or self.m * self.p - self.n * self.q != 1:
            raise GraphError(f"(m, n)=({self.m}, {self.n}) does not satisfy m*p - n*q = 1")


def bezout_pair(p: int, q: int) -> Tuple[int, int]:
    """Minimal (m, n) with m*p - n*q = 1 and 0 <= n < p."""
    n = (-pow(q, -1, p)) % p if p > 1 else 0
    m, r = divmod(1 + n * q, p)
    assert r == 0
    return m, n


def seifert_pair(self_intersections: Sequence[int]) -> SeifertPair:
    """Seifert pair of a dead branch, listed extremity first."""
    if not self_intersections:
        raise GraphError("empty dead branch")
    bs = [-s for s in self_intersections]
    if any(b < 1 for b in bs):
        raise GraphError(f"dead branch self-intersections must be <= -1, got {list(self_intersections)}")
    value = Fraction(bs[0])
    for b in bs[1:]:
        if value == 0:
            raise GraphError("continued fraction hits a zero denominator")
        value = b - 1 / value
    if value <= 0:
        raise GraphError(f"continued fraction value {value} is not positive")
    p, q = value.numerator, value.denominator
    if p == 1:
        raise GraphError("p = 1: the branch would carry trivial holonomy")
    m, n = bezout_pair(p, q)
    return SeifertPair(p, q, m, n)


def branch_pair(graph: DualGraph, branch: DeadBranch) -> SeifertPair:
    return seifert_pair([graph.self_int[v] for v in branch.members])


# ------------------------------------------------------------ tree morphisms

@dataclass(frozen=True)
class MorphismVerdict:
    kind: str  # "injective-and-tree" | "locally-noninjective" | "cycle-certificate"
    vertex: Optional[int] = None
    cycle: Tuple[int, ...] = ()


def _edge_set(edges: Iterable[Tuple[int, int]]) -> set:
    return {frozenset(e) for e in edges}


def check_tree_morphism(source_vertices: Sequence[int], source_edges: Iterable[Tuple[int, int]],
                        target_vertices: Sequence[int], target_edges: Iterable[Tuple[int, int]],
                        vmap: Mapping[int, int]) -> MorphismVerdict:
    sv, tv = list(source_vertices), set(target_vertices)
    se, te = _edge_set(source_edges), _edge_set(target_edges)
    if any(len(e) != 2 for e in se | te):
        raise GraphError("self-loops are not allowed")
    if len(te) != len(tv) - 1 or not _connected(tv, te):
        raise GraphError("target is not a tree")
    if not _connected(set(sv), se):
        raise GraphError("source graph must be connected")
    for v in sv:
        if vmap.get(v) not in tv:
            raise GraphError(f"vertex {v} is not mapped into the target")
    for e in se:
        a, b = tuple(e)
        if vmap[a] != vmap[b] and frozenset((vmap[a], vmap[b])) not in te:
            raise GraphError(f"edge ({a},{b}) is not sent to an edge or a vertex")

    adj = {v: [] for v in sv}
    for e in se:
        a, b = tuple(e)
        adj[a].append(b)
        adj[b].append(a)

    folds, collapses = [], []
    for v in sorted(sv):
        images = [vmap[w] for w in adj[v]]
        if len(set(images)) != len(images):
            folds.append(v)
        elif vmap[v] in images:
            collapses.append(v)
    if folds or collapses:
        return MorphismVerdict("locally-noninjective", (folds or collapses)[0])

    cycle = _find_cycle(sv, se)
    injective = len({vmap[v] for v in sv}) == len(sv)
    if cycle or not injective:
        # a locally injective map into a tree with a cycle or a collision
        # would contradict the injectivity lemma
        if cycle:
            return MorphismVerdict("cycle-certificate", None, tuple(cycle))
        raise InconsistencyError("locally injective map into a tree is not injective")
    return MorphismVerdict("injective-and-tree")


def _connected(vs: set, es: set) -> bool:
    if not vs:
        return True
    parent = {v: v for v in vs}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in es:
        a, b = tuple(e)
        parent[find(a)] = find(b)
    return len({find(v) for v in vs}) == 1


def _find_cycle(vs: Sequence[int], es: set) -> List[int]:
    """Union-find cycle detection; returns the vertices of one cycle or []."""
    parent = {v: v for v in vs}
    tree_adj = {v: [] for v in vs}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in sorted(tuple(sorted(e)) for e in es):
        a, b = e
        ra, rb = find(a), find(b)
        if ra == rb:
            return _tree_path(tree_adj, a, b)
        parent[ra] = rb
        tree_adj[a].append(b)
        tree_adj[b].append(a)
    return []


def _tree_path(adj, src, dst) -> List[int]:
    prev, stack = {src: None}, [src]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in prev:
                prev[w] = u
                stack.append(w)
    path, cur = [], dst
    while cur is not None:
        path.append(cur)
        cur = prev[cur]
    return path[::-1]
