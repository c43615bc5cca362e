"""Rugosity of piecewise-analytic curves and star-shaped domains.

The rugosity of a curve ``mu`` at ``s`` is the angle of ``mu'(s) / (i mu(s))``
when that quotient has positive real part and ``+inf`` otherwise; a curve's
rugosity is the maximum over its points, corners counted from both sides.

A star domain is stored by its radial function ``theta -> rho(theta)``.
Domains form an expression tree (smooth base functions, rotations, pointwise
min/max, collar slices, resampled data) so that every node can report exact
one-sided values and slopes at its break angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

TWO_PI = 2 * math.pi
DEFAULT_SAMPLES = 4096
SEAM_TOL = 1e-12
SEAM_SNAP = 1e-9  # seam jumps below this (relative) are numerical noise
RUGOSITY_TOL = 1e-9  # margin when comparing refined rugosity peaks


# ------------------------------------------------------------ curves

@dataclass(frozen=True)
class Piece:
    z: np.ndarray   # points along the arc
    dz: np.ndarray  # derivative samples (any positive parametrization)


class PACurve:
    """An oriented concatenation of smooth arcs given by point and
    derivative samples."""

    def __init__(self, pieces: Sequence[Piece]):
        if not pieces:
            raise ValueError("a curve needs at least one piece")
        for p in pieces:
            if len(p.z) < 2 or len(p.z) != len(p.dz):
                raise ValueError("each piece needs matching point and derivative samples")
            if np.any(np.abs(p.dz) == 0):
                raise ValueError("derivative vanishes on a piece")
        scale = max(float(np.max(np.abs(p.z))) for p in pieces)
        for a, b in zip(pieces[:-1], pieces[1:]):
            if abs(a.z[-1] - b.z[0]) > 1e-9 * max(scale, 1e-300):
                raise ValueError("consecutive pieces do not share endpoints")
        self.pieces = tuple(pieces)

    @classmethod
    def from_param(cls, mu: Callable, dmu: Callable, s0: float, s1: float,
                   n: int = DEFAULT_SAMPLES) -> "PACurve":
        s = np.linspace(s0, s1, n)
        return cls([Piece(np.asarray(mu(s), dtype=complex), np.asarray(dmu(s), dtype=complex))])

    @classmethod
    def circle_arc(cls, r: float, a: float, b: float, n: int = DEFAULT_SAMPLES) -> "PACurve":
        return cls.from_param(lambda t: r * np.exp(1j * t), lambda t: 1j * r * np.exp(1j * t), a, b, n)

    @classmethod
    def log_spiral(cls, k: float, a: float, b: float, scale: float = 1.0,
                   n: int = DEFAULT_SAMPLES) -> "PACurve":
        c = k + 1j
        return cls.from_param(lambda t: scale * np.exp(c * t), lambda t: c * scale * np.exp(c * t), a, b, n)

    @classmethod
    def radial_segment(cls, r0: float, r1: float, angle: float, n: int = 64) -> "PACurve":
        u = np.exp(1j * angle)
        return cls.from_param(lambda t: t * u, lambda t: np.full(np.shape(t), u * np.sign(r1 - r0)),
                              r0, r1, n)

    def concat(self, other: "PACurve") -> "PACurve":
        return PACurve(self.pieces + other.pieces)

    def reversed(self) -> "PACurve":
        return PACurve([Piece(p.z[::-1], -p.dz[::-1]) for p in reversed(self.pieces)])

    def map(self, g: Callable, dg: Callable) -> "PACurve":
        return PACurve([Piece(g(p.z), dg(p.z) * p.dz) for p in self.pieces])

    @property
    def points(self) -> np.ndarray:
        return np.concatenate([p.z for p in self.pieces])


def pointwise_rugosity(z: np.ndarray, dz: np.ndarray) -> np.ndarray:
    w = dz / (1j * z)
    ang = np.abs(np.angle(w))
    return np.where(w.real > 0, ang, np.inf)


def rugosity(curve: PACurve) -> float:
    worst = 0.0
    for p in curve.pieces:
        if np.any(np.abs(p.z) == 0):
            raise ValueError("the curve passes through the origin")
        worst = max(worst, float(np.max(pointwise_rugosity(p.z, p.dz))))
    return worst


@dataclass(frozen=True)
class XiRugosity:
    direct: float    # rugosity of the image curve
    base: float      # rugosity of the curve itself
    constant: float  # sampled C_g
    size: float      # max |z| on the curve
    bound: float     # base + constant * size
    holds: bool


def xi_rugosity(curve: PACurve, g: Callable, dg: Callable, *,
                sector: Optional[Tuple[float, float]] = None,
                radial_samples: int = 48, angular_samples: int = 96) -> XiRugosity:
    """Rugosity of ``g`` applied to ``curve`` together with the bound
    ``e(curve) + C_g * |curve|``, where ``C_g`` is the largest sampled value of
    ``|arg(z g'(z) / g(z))| / |z|`` over the curve and the disc (or sector)
    of radius ``|curve|``."""
    pts = curve.points
    if sector is not None:
        arg = np.angle(pts)
        if np.any(arg < sector[0] - 1e-12) or np.any(arg > sector[1] + 1e-12):
            raise ValueError("the curve leaves the sector of definition")
    gv = g(pts)
    if np.any(np.abs(gv) < 1e-300):
        raise ValueError("g vanishes on the curve")
    base = rugosity(curve)
    direct = rugosity(curve.map(g, dg))
    R = float(np.max(np.abs(pts)))
    lo, hi = sector if sector is not None else (-math.pi, math.pi)
    rr, aa = np.meshgrid(np.linspace(R / radial_samples, R, radial_samples),
                         np.linspace(lo, hi, angular_samples))
    probe = np.concatenate([(rr * np.exp(1j * aa)).ravel(), pts])
    psi = probe * dg(probe) / g(probe)
    C = float(np.max(np.abs(np.angle(psi)) / np.abs(probe)))
    bound = base + C * R
    return XiRugosity(direct, base, C, R, bound, direct <= bound + 1e-12)


# ------------------------------------------------------------ star domains

class StarDomain:
    """A compact domain star-shaped about 0, given by its radial function.

    ``value(phi, side)`` returns the radius; ``side`` is +1 / -1 for right /
    left limits and 0 for the closure (the larger limit at a jump).
    ``slope(phi, side)`` is the one-sided derivative in ``phi``.
    """

    def value(self, phi, side: int = 0) -> np.ndarray:
        raise NotImplementedError

    def slope(self, phi, side: int = 1) -> np.ndarray:
        raise NotImplementedError

    def own_breaks(self) -> List[float]:
        return []

    @cached_property
    def breaks(self) -> np.ndarray:
        b = np.mod(np.asarray(self.own_breaks(), dtype=float), TWO_PI)
        b = np.where(b > TWO_PI - SEAM_TOL, 0.0, b)
        return np.unique(b)

    def __call__(self, phi) -> np.ndarray:
        return self.value(phi, 0)

    # -- derived operations
    def rotate(self, shift: float) -> "StarDomain":
        return Rotated(self, shift)

    def grid(self, n: int = DEFAULT_SAMPLES) -> np.ndarray:
        return np.linspace(0.0, TWO_PI, n, endpoint=False)

    def boundary_curve(self, n: int = DEFAULT_SAMPLES) -> PACurve:
        brk = self.breaks
        if len(brk) == 0:
            brk = np.array([0.0])
        ends = np.append(brk, brk[0] + TWO_PI)
        sizes = [max(8, int(n * (b - a) / TWO_PI)) for a, b in zip(ends[:-1], ends[1:])]
        phis = [np.linspace(a, b, m) for a, b, m in zip(ends[:-1], ends[1:], sizes)]
        flat = np.concatenate(phis)
        rho_all, d_all = self.value(flat, 0), self.slope(flat, 1)
        rho_start, d_start = self.value(ends[:-1], 1), self.slope(ends[:-1], 1)
        rho_end, d_end = self.value(ends[1:], -1), self.slope(ends[1:], -1)
        if np.any(rho_all <= 0) or np.any(rho_start <= 0) or np.any(rho_end <= 0):
            raise ValueError("radial function is not positive")
        scale = float(np.max(rho_all))
        pieces: List[Piece] = []
        offset = 0
        for k, phi in enumerate(phis):
            m = len(phi)
            rho, d = rho_all[offset:offset + m].copy(), d_all[offset:offset + m].copy()
            offset += m
            rho[0], d[0], rho[-1], d[-1] = rho_start[k], d_start[k], rho_end[k], d_end[k]
            if pieces:
                left = abs(pieces[-1].z[-1])
                if abs(left - rho[0]) > 1e-12 * scale:
                    pieces.append(_segment(left, rho[0], phi[0]))
            e = np.exp(1j * phi)
            pieces.append(Piece(rho * e, (d + 1j * rho) * e))
        first, last = pieces[0].z[0], pieces[-1].z[-1]
        if abs(abs(last) - abs(first)) > 1e-12 * scale:
            pieces.append(_segment(abs(last), abs(first), float(np.angle(first))))
        return PACurve(pieces)

    def rugosity(self, n: int = DEFAULT_SAMPLES) -> float:
        """Sampled rugosity of the boundary, with the peak of
        |arctan(rho'/rho)| on every smooth arc refined by a local zoom and a
        parabolic vertex."""
        sampled = rugosity(self.boundary_curve(n))
        if not math.isfinite(sampled):
            return sampled
        brk = self.breaks if len(self.breaks) else np.array([0.0])
        ends = np.append(brk, brk[0] + TWO_PI)
        tilt = lambda u: np.abs(np.arctan(self.slope(u, 1) / self.value(u, 1)))  # noqa: E731
        # interior samples of every arc, evaluated in one call
        arcs = [np.linspace(a, b, max(8, int(n * (b - a) / TWO_PI)))[1:-1] for a, b in zip(ends[:-1], ends[1:])]
        keep = [k for k, t in enumerate(arcs) if len(t)]
        if not keep:
            return sampled
        flat = np.concatenate([arcs[k] for k in keep])
        vals = tilt(flat)
        offsets = np.cumsum([0] + [len(arcs[k]) for k in keep])
        lo, hi = [], []
        for j, k in enumerate(keep):
            seg = vals[offsets[j]:offsets[j + 1]]
            i = int(np.argmax(seg))
            t = arcs[k]
            lo.append(t[i - 1] if i > 0 else ends[k])
            hi.append(t[i + 1] if i + 1 < len(t) else ends[k + 1])
        lo, hi = np.array(lo), np.array(hi)
        # strictly interior, so one-sided values at breaks never leak in
        zoom = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, 35)[1:-1]
        zv = tilt(zoom.ravel()).reshape(zoom.shape)
        i = np.clip(np.argmax(zv, axis=1), 1, zoom.shape[1] - 2)
        rows = np.arange(len(lo))
        f0, f1, f2 = zv[rows, i - 1], zv[rows, i], zv[rows, i + 1]
        curv = f0 - 2 * f1 + f2
        with np.errstate(divide="ignore", invalid="ignore"):
            shift = (f0 - f2) / (2 * curv)  # vertex offset in zoom steps
            ok = (curv < 0) & (np.abs(shift) <= 1)
            vertex = np.where(ok, f1 - (f2 - f0) ** 2 / (8 * curv), f1)
        return float(max(sampled, np.max(zv), np.max(vertex)))

    def samples(self, n: int = DEFAULT_SAMPLES) -> Tuple[np.ndarray, np.ndarray]:
        phi = np.sort(np.concatenate([self.grid(n), self.breaks]))
        return phi, self.value(phi, 0)

    def csv(self, n: int = 720) -> str:
        phi = self.grid(n)
        rho = self.value(phi, 0)
        return "theta,rho\n" + "".join(f"{t:.12f},{r:.15e}\n" for t, r in zip(phi, rho))


def _segment(r0: float, r1: float, angle: float) -> Piece:
    u = np.exp(1j * angle)
    t = np.linspace(r0, r1, 16)
    return Piece(t * u, np.full(16, (r1 - r0) * u))


class Radial(StarDomain):
    """Smooth periodic radial function with its derivative."""

    def __init__(self, rho: Callable, drho: Callable, label: str = "radial"):
        self._rho, self._drho, self.label = rho, drho, label

    def value(self, phi, side=0):
        return np.asarray(self._rho(np.asarray(phi, dtype=float)), dtype=float) * np.ones(np.shape(phi))

    def slope(self, phi, side=1):
        return np.asarray(self._drho(np.asarray(phi, dtype=float)), dtype=float) * np.ones(np.shape(phi))

    @classmethod
    def circle(cls, r: float) -> "Radial":
        return cls(lambda t: r + 0 * t, lambda t: 0 * t, f"circle({r})")

    @classmethod
    def cosine(cls, r: float, amp: float, mode: int = 1, phase: float = 0.0) -> "Radial":
        return cls(lambda t: r * (1 + amp * np.cos(mode * t + phase)),
                   lambda t: -r * amp * mode * np.sin(mode * t + phase),
                   f"{r}*(1+{amp}cos({mode}t+{phase}))")

    @classmethod
    def fourier(cls, r: float, a: Sequence[float], b: Sequence[float]) -> "Radial":
        """r * exp(sum a_j cos(j t) + b_j sin(j t)), j = 1, 2, ..."""
        j = np.arange(1, len(a) + 1)
        a, b = np.asarray(a, float), np.asarray(b, float)

        def log_rho(t):
            t = np.asarray(t, float)[..., None]
            return np.sum(a * np.cos(j * t) + b * np.sin(j * t), axis=-1)

        def dlog(t):
            t = np.asarray(t, float)[..., None]
            return np.sum(j * (-a * np.sin(j * t) + b * np.cos(j * t)), axis=-1)

        return cls(lambda t: r * np.exp(log_rho(t)), lambda t: r * np.exp(log_rho(t)) * dlog(t),
                   "fourier")


class Rotated(StarDomain):
    """The image of ``child`` under ``x -> x e^{i shift}``."""

    def __init__(self, child: StarDomain, shift: float):
        self.child, self.shift = child, float(shift)

    def value(self, phi, side=0):
        return self.child.value(np.asarray(phi, dtype=float) - self.shift, side)

    def slope(self, phi, side=1):
        return self.child.slope(np.asarray(phi, dtype=float) - self.shift, side)

    def own_breaks(self):
        return list(self.child.breaks + self.shift)


class Extremum(StarDomain):
    """Pointwise min (intersection) or max (union) of radial functions."""

    def __init__(self, children: Sequence[StarDomain], kind: str):
        if kind not in ("min", "max") or not children:
            raise ValueError("need kind 'min' or 'max' and at least one child")
        self.children, self.kind = tuple(children), kind

    def _select(self, phi, side):
        phi = np.asarray(phi, dtype=float)
        vals = np.stack([np.broadcast_to(c.value(phi, side), phi.shape) for c in self.children])
        best = vals.min(axis=0) if self.kind == "min" else vals.max(axis=0)
        return vals, best

    def value(self, phi, side=0):
        return self._select(phi, side)[1]

    def slope(self, phi, side=1):
        phi = np.asarray(phi, dtype=float)
        vals, best = self._select(phi, side)
        slopes = np.stack([np.broadcast_to(c.slope(phi, side), phi.shape) for c in self.children])
        tied = np.abs(vals - best) <= 1e-13 * np.abs(best)
        # the child that stays extreme on the requested side
        want_small = (self.kind == "min") == (side >= 0)
        fill = np.inf if want_small else -np.inf
        cand = np.where(tied, slopes, fill)
        return cand.min(axis=0) if want_small else cand.max(axis=0)

    def own_breaks(self):
        out = [b for c in self.children for b in c.breaks]
        grid = np.linspace(0.0, TWO_PI, DEFAULT_SAMPLES + 1)
        cs = self.children
        for i in range(len(cs)):
            for j in range(i + 1, len(cs)):
                f = lambda t, a=cs[i], b=cs[j]: float(a.value(t) - b.value(t))  # noqa: E731
                d = cs[i].value(grid) - cs[j].value(grid)
                for k in np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]:
                    out.append(brentq(f, grid[k], grid[k + 1], xtol=1e-14))
                # crossings landing exactly on a sample
                hit = (d[1:-1] == 0) & (d[:-2] * d[2:] < 0)
                out.extend(grid[1:-1][hit])
        return out


def intersection(*domains: StarDomain) -> StarDomain:
    return domains[0] if len(domains) == 1 else Extremum(domains, "min")


def union(*domains: StarDomain) -> StarDomain:
    return domains[0] if len(domains) == 1 else Extremum(domains, "max")


class Seamed(StarDomain):
    """Base class for radial functions defined on [phi0, phi0 + 2 pi) that may
    jump at ``phi0``."""

    phi0 = 0.0

    def _offset(self, phi):
        t = np.mod(np.asarray(phi, dtype=float) - self.phi0, TWO_PI)
        seam = (t < SEAM_TOL) | (t > TWO_PI - SEAM_TOL)
        return np.where(seam, 0.0, t), seam

    def own_breaks(self):
        return [self.phi0]


class SampledRadial(Seamed):
    """Radial function interpolated from uniform samples on
    [phi0, phi0 + 2 pi]; ``rho[0]`` and ``rho[-1]`` are the right and left
    limits at the seam."""

    def __init__(self, phi0: float, rho: np.ndarray):
        rho = np.array(rho, dtype=float)
        if np.any(rho <= 0):
            raise ValueError("radial samples must be positive")
        if abs(rho[0] - rho[-1]) <= SEAM_SNAP * np.max(rho):
            rho[0] = rho[-1] = 0.5 * (rho[0] + rho[-1])
        self.phi0 = float(phi0)
        self.rho = rho
        t = np.linspace(0.0, TWO_PI, len(rho))
        closed = rho[0] == rho[-1]
        self._spline = CubicSpline(t, rho, bc_type="periodic" if closed else "not-a-knot")
        self._dspline = self._spline.derivative()

    @classmethod
    def from_curve(cls, phi: np.ndarray, rho: np.ndarray, n: int = 2048) -> "SampledRadial":
        """Resample a boundary curve given as increasing unwrapped angles
        covering exactly one turn."""
        phi, rho = np.asarray(phi, float), np.asarray(rho, float)
        if np.any(np.diff(phi) <= 0):
            raise ValueError("boundary is not a radial graph (argument not monotone)")
        if abs(phi[-1] - phi[0] - TWO_PI) > 1e-9:
            raise ValueError("boundary samples must cover exactly one turn")
        s = CubicSpline(phi, rho)
        grid = np.linspace(phi[0], phi[0] + TWO_PI, n + 1)
        vals = s(grid)
        vals[0], vals[-1] = rho[0], rho[-1]
        return cls(float(np.mod(phi[0], TWO_PI)), vals)

    def value(self, phi, side=0):
        t, seam = self._offset(phi)
        v = self._spline(t)
        seam_val = {1: self.rho[0], -1: self.rho[-1], 0: max(self.rho[0], self.rho[-1])}[side]
        return np.where(seam, seam_val, v)

    def slope(self, phi, side=1):
        t, seam = self._offset(phi)
        d = self._dspline(t)
        seam_d = self._dspline(0.0) if side >= 0 else self._dspline(TWO_PI)
        return np.where(seam, seam_d, d)


@dataclass(frozen=True)
class RugsomVerdict:
    first: float
    second: float
    union: float
    intersection: float
    holds: bool


def union_intersection_rugosity_check(a: StarDomain, b: StarDomain,
                                      n: int = DEFAULT_SAMPLES) -> RugsomVerdict:
    ea, eb = a.rugosity(n), b.rugosity(n)
    eu, ei = union(a, b).rugosity(n), intersection(a, b).rugosity(n)
    cap = max(ea, eb)
    # peaks are located to about 1e-11, so compare with a 1e-9 margin
    return RugsomVerdict(ea, eb, eu, ei, eu <= cap + RUGOSITY_TOL and ei <= cap + RUGOSITY_TOL)


def size(obj, xi: Optional[Callable] = None, n: int = DEFAULT_SAMPLES) -> float:
    """Largest modulus of ``xi`` (identity by default) over the boundary."""
    if isinstance(obj, PACurve):
        z = obj.points
    elif isinstance(obj, StarDomain):
        phi, rho = obj.samples(n)
        z = rho * np.exp(1j * phi)
    else:
        raise TypeError("size expects a PACurve or a StarDomain")
    return float(np.max(np.abs(z if xi is None else xi(z))))
