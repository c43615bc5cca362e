"""Finite presentations of the block groups and of the global complement.

Words are tuples of ``(generator index, nonzero exponent)`` syllables.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .errors import GraphError, InconsistencyError
from .graph import DivisorDecomposition, DualGraph, SeifertPair, classify_components, solve_multiplicities
from .snf import abelian_invariants

Word = Tuple[Tuple[int, int], ...]


def free_reduce(word: Sequence[Tuple[int, int]]) -> Word:
    out: List[List[int]] = []
    for g, e in word:
        if e == 0:
            continue
        if out and out[-1][0] == g:
            out[-1][1] += e
            if out[-1][1] == 0:
                out.pop()
        else:
            out.append([g, e])
    return tuple((g, e) for g, e in out)


def cyclic_reduce(word: Sequence[Tuple[int, int]]) -> Word:
    w = list(free_reduce(word))
    while len(w) >= 2 and w[0][0] == w[-1][0]:
        g, e = w[0][0], w[0][1] + w[-1][1]
        w = w[1:-1]
        if e:
            w = [(g, e)] + w
        w = list(free_reduce(w))
    return tuple(w)


def invert(word: Word) -> Word:
    return tuple((g, -e) for g, e in reversed(word))


def commutator(a: int, b: int) -> Word:
    return ((a, 1), (b, 1), (a, -1), (b, -1))


def word_length(word: Word) -> int:
    return sum(abs(e) for _, e in word)


@dataclass(frozen=True)
class Presentation:
    generators: Tuple[str, ...]
    relators: Tuple[Word, ...]
    distinguished: Optional[Word] = None

    def __post_init__(self):
        n = len(self.generators)
        if len(set(self.generators)) != n:
            raise ValueError("generator names must be distinct")
        for r in self.relators:
            for g, e in r:
                if not 0 <= g < n or e == 0:
                    raise ValueError(f"bad syllable {(g, e)}")

    def index(self, name: str) -> int:
        return self.generators.index(name)

    def format_word(self, word: Word) -> str:
        return " ".join(f"{self.generators[g]}^{e}" for g, e in word)

    def to_text(self) -> str:
        lines = [f"gen {g}" for g in self.generators]
        lines += [f"rel {self.format_word(r)}" for r in self.relators]
        return "\n".join(lines) + "\n"

    def relator_matrix(self) -> List[List[int]]:
        rows = []
        for r in self.relators:
            row = [0] * len(self.generators)
            for g, e in r:
                row[g] += e
            rows.append(row)
        return rows

    def matrix_csv(self) -> str:
        buf = io.StringIO()
        buf.write("relator," + ",".join(self.generators) + "\n")
        for i, row in enumerate(self.relator_matrix(), 1):
            buf.write(f"r{i}," + ",".join(str(v) for v in row) + "\n")
        return buf.getvalue()


@dataclass(frozen=True)
class AbelianInvariants:
    rank: int
    torsion: Tuple[int, ...]

    def __str__(self) -> str:
        parts = ["Z"] * self.rank + [f"Z/{t}" for t in self.torsion]
        return " + ".join(parts) if parts else "0"


def abelianize(p: Presentation) -> AbelianInvariants:
    rank, torsion = abelian_invariants(p.relator_matrix(), len(p.generators))
    return AbelianInvariants(rank, tuple(torsion))


# ------------------------------------------------------------ block groups

def presentation_block_D(n: int, nu: int) -> Presentation:
    return presentation_aggregated(n, nu, {})


def presentation_dead_branch(pair: SeifertPair) -> Presentation:
    a, c = 0, 1
    return Presentation(("a", "c"), (commutator(a, c), ((a, pair.p), (c, -pair.q))),
                        distinguished=free_reduce(((a, pair.m), (c, -pair.n))))


def presentation_aggregated(n: int, nu: int, pairs: Mapping[int, Tuple[int, int]]) -> Presentation:
    """<a_0..a_n, c | a_0...a_n = c^nu, [a_r, c], a_j^p_j = c^q_j>; ``pairs``
    maps the index j of a boundary generator to its (p_j, q_j)."""
    if n < 0:
        raise GraphError("n must be nonnegative")
    if nu <= 0:
        raise GraphError(f"nu = {nu}: the block does not come from a negative definite graph")
    for j in pairs:
        if not 0 <= j <= n:
            raise GraphError(f"dead-branch index {j} outside 0..{n}")
    gens = tuple(f"a{r}" for r in range(n + 1)) + ("c",)
    c = n + 1
    rels = [tuple((r, 1) for r in range(n + 1)) + ((c, -nu),)]
    rels += [commutator(r, c) for r in range(n + 1)]
    rels += [((j, p), (c, -q)) for j, (p, q) in sorted(pairs.items())]
    return Presentation(gens, tuple(rels))


# ------------------------------------------------------------ global group

def assemble_global(graph: DualGraph, decomposition: Optional[DivisorDecomposition] = None,
                    mults: Optional[Mapping[int, int]] = None) -> Presentation:
    if decomposition is not None and decomposition != classify_components(graph):
        raise InconsistencyError("decomposition does not match the graph")
    if graph.exceptional:
        solved = solve_multiplicities(graph)
        if mults is None:
            raise GraphError("multiplicities are required to assemble the global group")
        if dict(mults) != solved:
            raise InconsistencyError("multiplicities do not solve the intersection system")
    verts = graph.vertices
    idx = {v: i for i, v in enumerate(verts)}
    gens = tuple(f"a_{graph.label(v)}" for v in verts)
    rels = []
    for e in graph.exceptional:
        word = tuple((idx[d], graph.pairing(d, e)) for d in verts
                     if d == e or frozenset((d, e)) in graph.edges)
        rels.append(free_reduce(word))
    pairs = set()
    for e in graph.exceptional:
        for d in graph.neighbors(e):
            pairs.add(tuple(sorted((d, e))))
    for d, e in sorted(pairs):
        rels.append(commutator(idx[d], idx[e]))
    return Presentation(gens, tuple(r for r in rels if r))


def divisor_weights(graph: DualGraph, mults: Mapping[int, int]) -> Dict[str, int]:
    """ord_D F on exceptional generators and 1 on strict transforms."""
    return {f"a_{graph.label(v)}": (mults[v] if v in mults else 1) for v in graph.vertices}


@dataclass(frozen=True)
class ExponentVerdict:
    ok: bool
    violations: Tuple[Tuple[int, int], ...]  # (relator index, weighted sum)


def exponent_check(p: Presentation, weights: Mapping[str, int]) -> ExponentVerdict:
    w = [weights[g] for g in p.generators]
    bad = []
    for i, r in enumerate(p.relators):
        s = sum(w[g] * e for g, e in r)
        if s:
            bad.append((i, s))
    return ExponentVerdict(not bad, tuple(bad))


# ------------------------------------------------------------ Tietze moves

def _canonical(word: Word) -> Word:
    """Least cyclic rotation of word or its inverse, for de-duplication."""
    cands = []
    for w in (word, invert(word)):
        for k in range(len(w)):
            cands.append(w[k:] + w[:k])
    return min(cands) if cands else ()


def tietze_simplify(p: Presentation) -> Presentation:
    """Eliminate generators that occur exactly once, with exponent +-1, in
    some relator; then free/cyclic reduce and drop trivial or repeated
    relators.  Returns a presentation on the surviving generators."""
    gens = list(range(len(p.generators)))
    rels = [cyclic_reduce(r) for r in p.relators]
    while True:
        rels = _dedupe([r for r in rels if r])
        best = None
        for k, r in enumerate(rels):
            for g in sorted({g for g, _ in r}):
                occ = [i for i, (h, _) in enumerate(r) if h == g]
                if len(occ) != 1 or abs(r[occ[0]][1]) != 1:
                    continue
                candidate = _eliminate(rels, k, g, occ[0])
                cost = sum(word_length(w) for w in candidate)
                if best is None or cost < best[0]:
                    best = (cost, g, candidate)
        if best is None:
            break
        _, g, rels = best
        gens.remove(g)
    renumber = {g: i for i, g in enumerate(gens)}
    out = tuple(tuple((renumber[g], e) for g, e in r) for r in rels)
    return Presentation(tuple(p.generators[g] for g in gens), out)


def _eliminate(rels: List[Word], k: int, g: int, pos: int) -> List[Word]:
    # r = u g^e v = 1  gives  g = (v u)^(-e)
    r = rels[k]
    e = r[pos][1]
    rest = r[pos + 1:] + r[:pos]
    value = invert(rest) if e == 1 else rest
    out = [cyclic_reduce(_substitute(w, g, value)) for i, w in enumerate(rels) if i != k]
    return _dedupe([w for w in out if w])


def _substitute(word: Word, g: int, value: Word) -> Word:
    out: List[Tuple[int, int]] = []
    for h, e in word:
        if h != g:
            out.append((h, e))
        else:
            piece = value if e > 0 else invert(value)
            out.extend(piece * abs(e))
    return free_reduce(out)


def _dedupe(rels: List[Word]) -> List[Word]:
    seen, out = set(), []
    for r in rels:
        key = _canonical(r)
        if key not in seen:
            seen.add(key)
            out.append(r)
    return out
