"""Lunules, collar slabs, rabotage and the reduction to a single suspension.

A transversal disc ``D`` on ``{x = 1}`` (coordinate ``y``) and its holonomy
image ``hD`` differ on finitely many lunules.  Pushing ``D`` around the
saddle gives a collar whose slices ``{|y| = 1, arg y = theta}`` live in the
``x``-plane.  Rabotage replaces each slab of the collar by the largest
suspension it contains; merging neighbouring suspensions leaves one slice at
the basepoint, the reduced disc ``D'``.

Two collar implementations share one interface: ``LinearCollar`` uses the
closed-form leaves of the linear saddle, ``FlowCollar`` integrates the saddle
fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import HypothesisViolation, InconsistencyError, NumericFailure
from .rugosity import (DEFAULT_SAMPLES, TWO_PI, Radial, Rotated, SampledRadial, Seamed,
                       StarDomain, intersection, size)
from .saddle import SaddleModel, dulac_flow, holonomy, transport

ANGLE_TOL = 1e-10
RESOLUTION = 1e-9  # degenerate-lunule threshold relative to max radius
LOSS_TOL = 1e-6    # sampling noise allowed when checking that rugosity loss decreases


class ContainmentError(HypothesisViolation):
    """One of D, hD contains the other, so there are no two-sided lunules."""


# ------------------------------------------------------------ lunules

@dataclass(frozen=True)
class Lunule:
    index: int
    start: float
    end: float
    tag: Optional[str]  # 'a': D is outer, 'b': hD is outer, None: degenerate
    gap: float          # largest |rho_D - rho_hD| on the interval

    @property
    def nondegenerate(self) -> bool:
        return self.tag is not None

    @property
    def kept_angle(self) -> float:
        """Endpoint whose slice is carried across the slab by rabotage."""
        if self.tag is None:
            return self.start
        return self.end if self.tag == "a" else self.start


@dataclass(frozen=True)
class LunuleDecomposition:
    delta: StarDomain
    image: StarDomain
    lunules: Tuple[Lunule, ...]
    resolution: float

    @property
    def empty(self) -> bool:
        return not self.lunules

    @property
    def q(self) -> int:
        return len(self.lunules)

    @property
    def angles(self) -> Tuple[float, ...]:
        if not self.lunules:
            return ()
        return (self.lunules[0].start,) + tuple(l.end for l in self.lunules)

    @property
    def nondegenerate(self) -> Tuple[int, ...]:
        return tuple(l.index for l in self.lunules if l.nondegenerate)

    def inner(self, theta):
        return np.minimum(self.delta(theta), self.image(theta))

    def outer(self, theta):
        return np.maximum(self.delta(theta), self.image(theta))

    def csv(self) -> str:
        rows = ["theta_start,theta_end,rho_inner_mid,rho_outer_mid,tag"]
        for l in self.lunules:
            mid = 0.5 * (l.start + l.end)
            rows.append(f"{l.start:.12f},{l.end:.12f},{float(self.inner(mid)):.15e},"
                        f"{float(self.outer(mid)):.15e},{l.tag or '-'}")
        return "\n".join(rows) + "\n"


def lunule_decomposition(delta: StarDomain, image: StarDomain,
                         n: int = DEFAULT_SAMPLES) -> LunuleDecomposition:
    theta = np.linspace(0.0, TWO_PI, n, endpoint=False)
    diff = image(theta) - delta(theta)
    scale = float(max(np.max(delta(theta)), np.max(image(theta))))
    tol = RESOLUTION * scale
    sign = np.where(np.abs(diff) < tol, 0, np.sign(diff)).astype(int)
    if not sign.any():
        return LunuleDecomposition(delta, image, (), tol)
    if not (sign < 0).any():
        raise ContainmentError("the disc lies inside its holonomy image")
    if not (sign > 0).any():
        raise ContainmentError("the holonomy image lies inside the disc")

    def d(t):
        return float(image(t) - delta(t))

    def level(t):
        return abs(d(t)) - tol

    # maximal runs of constant sign, cyclically, as absolute sample ranges
    first = int(np.nonzero(sign != np.roll(sign, 1))[0][0])
    runs: List[List[int]] = []  # [sign, first index, last index]
    i = first
    while i < first + n:
        j = i
        while j + 1 < first + n and sign[(j + 1) % n] == sign[i % n]:
            j += 1
        runs.append([int(sign[i % n]), i, j])
        i = j + 1
    # a zero run between opposite signs is a transversal crossing, not a lunule
    merged: List[List[int]] = []
    for k, run in enumerate(runs):
        prev, nxt = runs[k - 1][0], runs[(k + 1) % len(runs)][0]
        if run[0] == 0 and prev * nxt < 0 and len(runs) > 2:
            continue
        merged.append(run)

    def angle(idx):
        return TWO_PI * idx / n

    def cut(prev, nxt) -> float:
        a, b = prev[2], nxt[1]
        if b < a:
            b += n
        if prev[0] != 0 and nxt[0] != 0:
            return brentq(d, angle(a), angle(b), xtol=1e-14, rtol=4 * np.finfo(float).eps)
        if prev[0] != 0:
            return brentq(level, angle(a), angle(a + 1), xtol=1e-14, rtol=4 * np.finfo(float).eps)
        return brentq(level, angle(b - 1), angle(b), xtol=1e-14, rtol=4 * np.finfo(float).eps)

    m = len(merged)
    cuts = [cut(merged[k - 1], merged[k]) for k in range(m)]
    # run k lies between cuts[k] and cuts[k + 1]; normalise so cuts[0] is in [0, 2 pi)
    shift = cuts[0] - cuts[0] % TWO_PI
    cuts = [c - shift for c in cuts]
    for k in range(1, m):
        while cuts[k] < cuts[k - 1]:
            cuts[k] += TWO_PI
    cuts.append(cuts[0] + TWO_PI)
    lunules = []
    for k, (sg, i0, i1) in enumerate(merged):
        idx = np.arange(i0, i1 + 1) % n
        gap = float(np.max(np.abs(diff[idx])))
        tag = None if sg == 0 else ("b" if sg > 0 else "a")
        lunules.append(Lunule(k + 1, cuts[k], cuts[k + 1], tag, gap))
    return LunuleDecomposition(delta, image, tuple(lunules), tol)


# ------------------------------------------------------------ collars

class LinearSlice(Seamed):
    """Slice of the linear collar at ``arg y = theta``: the point at argument
    ``t`` in [0, 2 pi) comes from the boundary of D at argument
    ``theta + lam t`` and has modulus ``rho_D ** (1 / lam)``."""

    def __init__(self, delta: StarDomain, theta: float, lam: float):
        self.delta, self.theta, self.lam = delta, float(theta), float(lam)
        self.phi0 = 0.0

    def value(self, phi, side=0):
        t, seam = self._offset(phi)
        p = 1.0 / self.lam
        inner = self.delta.value(self.theta + self.lam * t, side) ** p
        right = float(self.delta.value(self.theta, 1)) ** p
        left = float(self.delta.value(self.theta + TWO_PI * self.lam, -1)) ** p
        seam_val = {1: right, -1: left, 0: max(left, right)}[side]
        return np.where(seam, seam_val, inner)

    def slope(self, phi, side=1):
        t, seam = self._offset(phi)
        s = self.theta + self.lam * t
        s = np.where(seam, self.theta if side >= 0 else self.theta + TWO_PI * self.lam, s)
        rho = self.delta.value(s, side if side else 1)
        return rho ** (1.0 / self.lam - 1.0) * self.delta.slope(s, side if side else 1)

    def own_breaks(self):
        out = [0.0]
        for b in self.delta.breaks:
            m0 = math.ceil((self.theta - b) / TWO_PI)
            s = b + TWO_PI * m0
            while s < self.theta + TWO_PI * self.lam:
                out.append((s - self.theta) / self.lam)
                s += TWO_PI
        return out


class LinearCollar:
    """Closed-form collar of the linear saddle ``x^p0 y^q0 = const``."""

    def __init__(self, delta: StarDomain, lam: float):
        self.delta, self.lam = delta, float(lam)

    def image(self) -> StarDomain:
        return Rotated(self.delta, -TWO_PI * self.lam)

    def slice(self, theta: float) -> StarDomain:
        return LinearSlice(self.delta, theta, self.lam)

    def transport(self, dom: StarDomain, theta_from: float, theta_to: float) -> StarDomain:
        if theta_from == theta_to:
            return dom
        return Rotated(dom, (theta_from - theta_to) / self.lam)


def _one_turn(phi: np.ndarray, rho: np.ndarray, slack: float = 1e-2) -> Tuple[np.ndarray, np.ndarray]:
    """Trim or pad an unwrapped boundary so it covers exactly one turn."""
    span = phi[-1] - phi[0]
    if abs(span - TWO_PI) > slack and span < TWO_PI:
        raise NumericFailure(f"boundary covers {span:.6f} rad instead of one turn")
    end = phi[0] + TWO_PI
    if span > TWO_PI:
        k = int(np.searchsorted(phi, end))
        r_end = np.interp(end, phi[k - 1:k + 1], rho[k - 1:k + 1])
        phi, rho = np.append(phi[:k], end), np.append(rho[:k], r_end)
    else:
        phi, rho = phi.copy(), rho.copy()
        phi[-1] = end
    if len(phi) > 2 and phi[-1] - phi[-2] < 1e-9:
        phi, rho = np.delete(phi, -2), np.delete(rho, -2)
    return phi, rho


class FlowCollar:
    """Collar built by integrating the saddle fields; slices are resampled
    radial functions."""

    def __init__(self, model: SaddleModel, delta: StarDomain, n: int = 1024):
        self.model, self.delta, self.n = model, delta, n
        self.lam = model.lam
        self._slices: Dict[float, StarDomain] = {}

    def image(self) -> StarDomain:
        theta = np.linspace(0.0, TWO_PI, self.n + 1)
        y = self.delta(theta) * np.exp(1j * theta)
        h = holonomy(self.model, y)
        h[-1] = h[0]
        phi = np.unwrap(np.angle(h))
        return SampledRadial.from_curve(phi, np.abs(h), n=self.n)

    def _point(self, theta_src: float) -> complex:
        return complex(self.delta(theta_src)) * complex(math.cos(theta_src), math.sin(theta_src))

    def closing_angle(self, theta: float) -> float:
        """Lifted argument of the boundary point of D whose holonomy image
        lies on the ray ``arg y = theta``; near ``theta + 2 pi lam``."""
        guess = theta + TWO_PI * self.lam

        def miss(s):
            h = holonomy(self.model, self._point(s))
            return float(np.angle(h * complex(math.cos(-theta), math.sin(-theta))))

        width = 0.25
        while miss(guess - width) * miss(guess + width) > 0:
            width *= 0.5
            if width < 1e-6:
                raise NumericFailure(f"cannot close the collar slice at angle {theta:.6f}")
        return brentq(miss, guess - width, guess + width, xtol=1e-14)

    def slice(self, theta: float) -> StarDomain:
        key = round(float(theta), 12)
        if key not in self._slices:
            end = min(self.closing_angle(theta), theta + TWO_PI * (self.lam + 1))
            m = int(self.n * (end - theta) / (TWO_PI * self.lam)) + 1
            src = np.linspace(theta, end, m)
            x = dulac_flow(self.model, self.delta(src), src, theta)
            phi = np.angle(x[0]) + np.concatenate([[0.0], np.cumsum(np.angle(x[1:] / x[:-1]))])
            phi, rho = _one_turn(phi, np.abs(x))
            self._slices[key] = SampledRadial.from_curve(phi, rho, n=self.n)
        return self._slices[key]

    def transport(self, dom: StarDomain, theta_from: float, theta_to: float) -> StarDomain:
        if theta_from == theta_to:
            return dom
        brk = dom.breaks
        s = float(brk[0]) if len(brk) else 0.0
        phi = s + np.linspace(0.0, TWO_PI, self.n + 1)
        rho = dom.value(phi, 0)
        rho[0], rho[-1] = dom.value(s, 1), dom.value(s + TWO_PI, -1)
        z0 = np.stack([rho * np.exp(1j * phi), np.full(len(phi), np.exp(1j * theta_from))], axis=1)
        z, _ = transport(self.model, "Y", z0, 1j * (theta_from - theta_to))
        x = z[:, 0]
        out = np.angle(x[0]) + np.concatenate([[0.0], np.cumsum(np.angle(x[1:] / x[:-1]))])
        out, r = _one_turn(out, np.abs(x))
        return SampledRadial.from_curve(out, r, n=self.n)


def collar_for(model: SaddleModel, delta: StarDomain, n: int = 1024):
    return LinearCollar(delta, model.lam) if model.kind == "linear" else FlowCollar(model, delta, n)


# ------------------------------------------------------------ slabs

@dataclass(frozen=True)
class CollarSlab:
    """The collar over [start, end]; when ``base`` is set the slab is the
    suspension of the slice ``base[1]`` taken at angle ``base[0]``."""

    start: float
    end: float
    collar: object = field(repr=False)
    lunule: Optional[Lunule] = None
    base: Optional[Tuple[float, StarDomain]] = field(default=None, repr=False)

    @property
    def is_suspension(self) -> bool:
        return self.base is not None

    def slice(self, theta: float) -> StarDomain:
        if self.base is not None:
            return self.collar.transport(self.base[1], self.base[0], theta)
        return self.collar.slice(theta)


def rabotage_slab(slab: CollarSlab) -> CollarSlab:
    if slab.base is not None or slab.lunule is None or not slab.lunule.nondegenerate:
        return slab
    keep = slab.lunule.kept_angle
    return CollarSlab(slab.start, slab.end, slab.collar, slab.lunule, (keep, slab.collar.slice(keep)))


def build_slabs(decomposition: LunuleDecomposition, collar, basepoint: float = 0.0) -> List[CollarSlab]:
    if decomposition.empty:
        return [CollarSlab(basepoint, basepoint + TWO_PI, collar)]
    return [CollarSlab(l.start, l.end, collar, l) for l in decomposition.lunules]


@dataclass
class RabotageResult:
    domain: StarDomain          # the reduced slice at the basepoint
    at_first_angle: StarDomain  # the single suspension's slice at theta_0
    theta0: float
    basepoint: float
    lengths: List[int]          # multi-suspension length before and after each merge


def iterate_rabotage(slabs: Sequence[CollarSlab], basepoint: float = 0.0) -> RabotageResult:
    if not slabs:
        raise ValueError("no slabs")
    for a, b in zip(slabs[:-1], slabs[1:]):
        if abs(a.end - b.start) > ANGLE_TOL:
            raise InconsistencyError("slabs do not form a chain of consecutive intervals")
    if abs(slabs[-1].end - slabs[0].start - TWO_PI) > ANGLE_TOL:
        raise InconsistencyError("slabs do not cover one full turn")
    collar = slabs[0].collar
    W = [rabotage_slab(s) for s in slabs]
    q = len(W)
    lengths = [q]
    step = 0
    while len(W) > 1:
        step += 1
        left, right = W[-2], W[-1]
        t = left.end
        common = intersection(left.slice(t), right.slice(t))
        if float(np.min(common(np.linspace(0, TWO_PI, 256)))) <= 0:
            raise InconsistencyError(f"empty common slice at merge {step}")
        W = W[:-2] + [CollarSlab(left.start, right.end, collar, None, (t, common))]
        if len(W) != q - step:
            raise InconsistencyError("multi-suspension length did not drop by one")
        lengths.append(len(W))
    final = W[0]
    theta0 = final.start
    tilde = final.slice(theta0)
    offset = (theta0 - basepoint) % TWO_PI
    if min(offset, TWO_PI - offset) < ANGLE_TOL:
        out = tilde  # the suspension is already based at the basepoint
    else:
        lifted = basepoint + offset
        out = intersection(collar.transport(tilde, lifted, basepoint),
                           collar.transport(tilde, lifted - TWO_PI, basepoint))
    return RabotageResult(out, tilde, theta0, basepoint, lengths)


def reduce_disc(delta: StarDomain, collar, basepoint: float = 0.0):
    """Lunules of the disc against its holonomy image, then rabotage."""
    dec = lunule_decomposition(delta, collar.image())
    return dec, iterate_rabotage(build_slabs(dec, collar, basepoint), basepoint)


# ------------------------------------------------------------ oracle

class _Tabulated(StarDomain):
    """Pointwise minimum over many transported slices, evaluated lazily."""

    def __init__(self, parts: Sequence[StarDomain]):
        self.parts = tuple(parts)

    def value(self, phi, side=0):
        phi = np.asarray(phi, dtype=float)
        out = np.full(phi.shape, np.inf)
        for p in self.parts:
            out = np.minimum(out, p.value(phi, side))
        return out

    def slope(self, phi, side=1):
        raise NotImplementedError("the oracle only supports evaluation")


def grid_saturation(collar, theta0: float, basepoint: float = 0.0, n_grid: int = 720) -> StarDomain:
    """Brute-force reduced disc: the largest set whose transports lie in
    every collar slice on an angular grid, with no use of lunules."""
    grid = np.linspace(theta0, theta0 + TWO_PI, n_grid)
    tilde = _Tabulated([collar.transport(collar.slice(t), t, theta0) for t in grid])
    offset = (theta0 - basepoint) % TWO_PI
    lifted = basepoint + offset
    J = np.union1d(np.linspace(basepoint, basepoint + TWO_PI, n_grid), [lifted])
    parts = []
    for t in J:
        pieces = []
        if t >= lifted - ANGLE_TOL:
            pieces.append(collar.transport(collar.transport(tilde, theta0, t), t, basepoint))
        if t <= lifted + ANGLE_TOL:
            pieces.append(collar.transport(collar.transport(tilde, theta0, t + TWO_PI), t, basepoint))
        parts.append(pieces[0] if len(pieces) == 1 else _Union(pieces))
    return _Tabulated(_dedupe_rotations(parts))


class _Union(StarDomain):
    def __init__(self, parts):
        self.parts = tuple(parts)

    def value(self, phi, side=0):
        return np.max(np.stack([p.value(phi, side) for p in self.parts]), axis=0)


def _dedupe_rotations(parts):
    """Collapse identical nested rotations of the same object (pure
    bookkeeping: it only avoids re-evaluating equal functions)."""
    seen, out = set(), []
    for p in parts:
        key = _rotation_key(p)
        if key is None or key not in seen:
            out.append(p)
            if key is not None:
                seen.add(key)
    return out


def _rotation_key(p):
    total, node = 0.0, p
    while isinstance(node, Rotated):
        total += node.shift
        node = node.child
    if node is p:
        return None
    return (id(node), round(total % TWO_PI, 12))


def radial_distance(a: StarDomain, b: StarDomain, n: int = DEFAULT_SAMPLES) -> float:
    phi = np.linspace(0.0, TWO_PI, n, endpoint=False) + 0.5 * TWO_PI / n
    return float(np.max(np.abs(a(phi) - b(phi))))


def slicewise_contained(inner: CollarSlab, outer: CollarSlab, n_angles: int = 16,
                        n: int = 1024, tol: float = 1e-12) -> bool:
    phi = np.linspace(0.0, TWO_PI, n, endpoint=False)
    for t in np.linspace(inner.start, inner.end, n_angles):
        a, b = inner.slice(t)(phi), outer.slice(t)(phi)
        if np.any(a > b + tol * np.max(b)):
            return False
    return True


# ------------------------------------------------------------ sweep

@dataclass
class SweepRow:
    radius: float
    size_in: float
    rugosity_in: float
    size_out: float
    rugosity_out: float
    q: int
    lunules: int

    @property
    def loss(self) -> float:
        return self.rugosity_out - self.rugosity_in


@dataclass
class SweepReport:
    model: str
    rows: List[SweepRow]
    slope: float
    residual: float
    convention: str
    loss_monotone: bool
    loss_fit: Tuple[float, float]  # (c, gamma) with loss ~ c r^gamma; (0, 0) when identically zero
    error: Optional[str] = None

    def csv(self) -> str:
        lines = ["radius,size_in,rugosity_in,size_out,rugosity_out,loss,q,lunules"]
        for r in self.rows:
            lines.append(f"{r.radius:.6e},{r.size_in:.12e},{r.rugosity_in:.12e},{r.size_out:.12e},"
                         f"{r.rugosity_out:.12e},{r.loss:.12e},{r.q},{r.lunules}")
        return "\n".join(lines) + "\n"


def verify_bounds_sweep(model: SaddleModel, radii: Sequence[float] = (1e-2, 10 ** -2.5, 1e-3, 10 ** -3.5, 1e-4),
                        perturbation: float = 0.05, mode: int = 3, basepoint: float = 0.0,
                        n: int = 1024) -> SweepReport:
    rows: List[SweepRow] = []
    error = None
    for r in sorted(radii, reverse=True):
        delta = Radial.cosine(r, perturbation, mode)
        try:
            collar = collar_for(model, delta, n)
            dec, res = reduce_disc(delta, collar, basepoint)
        except NumericFailure as exc:
            error = f"aborted at radius {r:g}: {exc}"
            break
        out = res.domain
        rows.append(SweepRow(r, size(delta), delta.rugosity(), size(out), out.rugosity(),
                             max(dec.q, 1), len(dec.nondegenerate)))
    slope, residual = float("nan"), float("nan")
    if len(rows) >= 2:
        lx = np.log([row.size_in for row in rows])
        ly = np.log([row.size_out for row in rows])
        slope, icpt = np.polyfit(lx, ly, 1)
        residual = float(np.sqrt(np.mean((ly - slope * lx - icpt) ** 2)))
    lam = model.lam
    flags = [name for name, v in (("lambda", lam), ("1/lambda", 1 / lam)) if abs(slope - v) < 0.05]
    losses = [row.loss for row in rows]
    monotone = all(b <= a + LOSS_TOL for a, b in zip(losses[:-1], losses[1:]))
    fit = (0.0, 0.0)
    if len(rows) >= 2 and all(l > 0 for l in losses):
        g, c = np.polyfit(np.log([row.radius for row in rows]), np.log(losses), 1)
        fit = (float(math.exp(c)), float(g))
    return SweepReport(model.describe(), rows, float(slope), residual,
                       "+".join(flags) if flags else "neither", monotone, fit, error)
