"""Random generators shared by the property tests and the acceptance run."""

import numpy as np

from folpi.presentation import free_reduce


def random_tree(rng, n):
    """Edges of a uniform-ish random labelled tree on 0..n-1."""
    return [(v, int(rng.integers(0, v))) for v in range(1, n)]


def adjacency(n, edges):
    adj = {v: [] for v in range(n)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    return adj


def immersed_tree(rng, max_vertices=12):
    """A tree mapped into a random tree with injective links at every vertex.

    Returns (source_vertices, source_edges, target_vertices, target_edges, vmap).
    """
    nt = int(rng.integers(2, max_vertices + 1))
    t_edges = random_tree(rng, nt)
    t_adj = adjacency(nt, t_edges)
    ns = int(rng.integers(1, max_vertices + 1))
    vmap = {0: int(rng.integers(0, nt))}
    s_edges, s_adj = [], {0: []}
    for _ in range(4 * ns):
        if len(vmap) >= ns:
            break
        v = int(rng.integers(0, len(vmap)))
        used = {vmap[w] for w in s_adj[v]}
        free = [t for t in t_adj[vmap[v]] if t not in used]
        if not free:
            continue
        w = len(vmap)
        vmap[w] = int(rng.choice(free))
        s_edges.append((v, w))
        s_adj[v].append(w)
        s_adj[w] = [v]
    return list(vmap), s_edges, list(range(nt)), t_edges, vmap


def folded_tree(rng, max_vertices=12):
    """An immersed tree plus one extra leaf that folds or collapses onto a
    neighbour, so local injectivity fails at the leaf's parent."""
    while True:
        sv, se, tv, te, vmap = immersed_tree(rng, max_vertices - 1)
        adj = adjacency(len(sv), se)
        v = int(rng.integers(0, len(sv)))
        w = len(sv)
        if adj[v] and rng.random() < 0.6:
            image = vmap[int(rng.choice(adj[v]))]   # fold
        else:
            image = vmap[v]                         # collapse an edge
        vmap = dict(vmap)
        vmap[w] = image
        return sv + [w], se + [(v, w)], tv, te, vmap


def offending(sv, se, vmap, vertex):
    """Whether ``vertex`` witnesses a failure of local injectivity."""
    adj = adjacency(len(sv), se)
    images = [vmap[w] for w in adj[vertex]]
    return len(set(images)) != len(images) or vmap[vertex] in images


def random_radial(rng, modes=4, amp=0.3):
    """Log-Fourier coefficients (a, b) with decaying random amplitudes."""
    decay = amp / np.arange(1, modes + 1) ** 1.5
    return rng.normal(size=modes) * decay, rng.normal(size=modes) * decay


def is_trefoil(p):
    """Two generators, one relator u^3 = v^2 (up to naming, inversion and
    rotation), every other relator a commutator with u^3 or v^2."""
    if len(p.generators) != 2:
        return False
    central = {((0, 3),), ((1, 2),), ((0, -3),), ((1, -2),),
               ((0, 2),), ((1, 3),), ((0, -2),), ((1, -3),)}
    torus = None
    for r in p.relators:
        powers = sorted(abs(e) for _, e in r)
        if len(r) == 2 and r[0][0] != r[1][0] and powers == [2, 3] and r[0][1] * r[1][1] < 0:
            torus = r
    if torus is None:
        return False
    for r in p.relators:
        if r == torus:
            continue
        if len(r) != 4 or r != free_reduce(r):
            return False
        x, y = r[0], r[1]
        if r[2] != (x[0], -x[1]) or r[3] != (y[0], -y[1]):
            return False
        if (x,) not in central and (y,) not in central:
            return False
    return True
