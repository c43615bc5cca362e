"""Flows, holonomy, col passage and Dulac maps of reduced saddles.

A saddle is written ``X = x d/dx - y g(x, y) d/dy`` with ``g(0, 0) = lambda``.
Its companion ``Y = X / g = (x/g) d/dx - y d/dy`` moves ``y`` by the exact
law ``y' = -y``, so real time keeps ``arg y`` and imaginary time keeps ``|y|``.

Times are complex; a path is a list of complex times visited in order and
each straight segment is integrated over a real parameter in [0, 1].
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import FlowError, NumericFailure, ParseError
from .graph import bezout_pair
from .integrator import Stats, integrate
from .polynomial import parse_poly

EPS3 = 0.1
EPS4 = 0.05
BIDISC_SLACK = 1e-6
DENOMINATOR_FLOOR = 1e-6
AXIS_FLOOR = 1e-12
DULAC_AGREEMENT = 1e-7


@dataclass(frozen=True)
class SaddleModel:
    kind: str  # "linear" | "dulac" | "normal"
    p0: int
    q0: int
    A: Tuple[Tuple[Tuple[int, int], complex], ...] = ()
    k: int = 1
    alpha: complex = 0.0
    eps3: float = EPS3
    eps4: float = EPS4

    def __post_init__(self):
        if self.kind not in ("linear", "dulac", "normal"):
            raise ValueError(f"unknown saddle kind {self.kind!r}")
        if self.p0 <= 0 or self.q0 <= 0 or math.gcd(self.p0, self.q0) != 1:
            raise ValueError("lambda must be a reduced positive fraction p0/q0")
        if self.kind == "linear" and self.A:
            raise ValueError("the linear model has A = 0")
        if self.kind == "normal" and self.k < 1:
            raise ValueError("k must be a positive integer")

    @classmethod
    def linear(cls, lam) -> "SaddleModel":
        f = Fraction(lam)
        return cls("linear", f.numerator, f.denominator)

    @classmethod
    def dulac_form(cls, lam, A: Dict[Tuple[int, int], complex]) -> "SaddleModel":
        f = Fraction(lam)
        return cls("dulac", f.numerator, f.denominator,
                   tuple(sorted((m, complex(c)) for m, c in A.items() if c)))

    @classmethod
    def normal_form(cls, lam, k: int, alpha: complex) -> "SaddleModel":
        f = Fraction(lam)
        return cls("normal", f.numerator, f.denominator, k=k, alpha=complex(alpha))

    @classmethod
    def parse(cls, text: str) -> "SaddleModel":
        """``linear:LAMBDA``, ``dulac:LAMBDA:A=EXPR[:Ai=EXPR]`` or
        ``normal:LAMBDA:k=K:alpha=RE[,IM]``."""
        parts = text.strip().split(":")
        try:
            kind, lam = parts[0], Fraction(parts[1])
            opts = dict(p.split("=", 1) for p in parts[2:])
            if kind == "linear" and not opts:
                return cls.linear(lam)
            if kind == "dulac":
                coeffs: Dict[Tuple[int, int], complex] = {}
                for key, unit in (("A", 1), ("Ai", 1j)):
                    if key in opts:
                        for m, c in parse_poly(opts[key]).items():
                            coeffs[m] = coeffs.get(m, 0) + unit * float(c)
                return cls.dulac_form(lam, coeffs)
            if kind == "normal":
                re_im = [float(Fraction(v)) for v in opts.get("alpha", "0").split(",")]
                alpha = complex(re_im[0], re_im[1] if len(re_im) > 1 else 0.0)
                return cls.normal_form(lam, int(opts.get("k", "1")), alpha)
        except (IndexError, ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"cannot parse model spec {text!r}: {exc}") from None
        raise ParseError(f"cannot parse model spec {text!r}")

    @property
    def lam(self) -> float:
        return self.p0 / self.q0

    def describe(self) -> str:
        lam = f"{self.p0}/{self.q0}"
        if self.kind == "linear":
            return f"linear lambda={lam}"
        if self.kind == "dulac":
            terms = " ".join(f"{c}*x^{i}y^{j}" for (i, j), c in self.A)
            return f"dulac-form lambda={lam} A=[{terms}]"
        return f"normal-form lambda={lam} k={self.k} alpha={self.alpha}"

    # -- the rate g with X = x d/dx - y g d/dy
    def rate(self, x, y):
        lam = self.lam
        if self.kind == "linear":
            return np.full(np.shape(x), lam, dtype=complex)
        if self.kind == "dulac":
            a = np.zeros(np.shape(x), dtype=complex)
            for (i, j), c in self.A:
                a = a + c * x ** i * y ** j
            return lam + x * y * a
        uk = (x ** self.p0 * y ** self.q0) ** self.k
        return lam * (1 + (self.alpha - 1) * uk) / (1 + self.alpha * uk)

    def field(self, which: str, x, y):
        g = self.rate(x, y)
        if which == "X":
            return x, -y * g
        if which == "Y":
            if np.any(np.abs(g) < DENOMINATOR_FLOOR):
                raise FlowError("the rate of Y is within 1e-6 of zero")
            return x / g, -y
        raise ValueError(f"unknown field {which!r}")


# ------------------------------------------------------------ batch transport

def _rhs(model: SaddleModel, which: str, dt: np.ndarray):
    def f(s, z, rows):
        fx, fy = model.field(which, z[:, 0], z[:, 1])
        scale = dt[rows]
        return np.stack([fx * scale, fy * scale], axis=1)
    return f


def _check_bidisc(z: np.ndarray, what: str) -> None:
    if np.any(np.abs(z) > 1 + BIDISC_SLACK):
        raise FlowError(f"{what}: trajectory leaves the unit bidisc")


def transport(model: SaddleModel, which: str, z0: np.ndarray, dt, *, rtol=None, atol=None,
              check_bidisc: bool = True) -> Tuple[np.ndarray, Stats]:
    """Flow each point z0[i] (shape (n, 2)) along the straight complex time
    segment [0, dt[i]]."""
    z0 = np.atleast_2d(np.asarray(z0, dtype=complex))
    dt = np.broadcast_to(np.asarray(dt, dtype=complex), (z0.shape[0],)).copy()
    res = integrate(_rhs(model, which, dt), z0, 1.0, rtol=rtol, atol=atol)
    if check_bidisc:
        _check_bidisc(res.z_end, f"flow of {which}")
    return res.z_end, res.stats


@dataclass
class Trajectory:
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    stats: Stats

    @property
    def end(self) -> Tuple[complex, complex]:
        return complex(self.x[-1]), complex(self.y[-1])

    def csv(self, model: Optional[SaddleModel] = None) -> str:
        h = None
        if model is not None and model.kind == "normal":
            h = np.abs(first_integral_along(model, self))
        lines = ["t_re,t_im,x_re,x_im,y_re,y_im,abs_H"]
        for i, t in enumerate(self.times):
            hv = f"{h[i]:.12e}" if h is not None else ""
            lines.append(f"{t.real:.12e},{t.imag:.12e},{self.x[i].real:.15e},{self.x[i].imag:.15e},"
                         f"{self.y[i].real:.15e},{self.y[i].imag:.15e},{hv}")
        return "\n".join(lines) + "\n"


def flow(model: SaddleModel, start: Tuple[complex, complex], which: str,
         path: Sequence[complex], *, h_max: float = np.inf) -> Trajectory:
    """Integrate field ``which`` from ``start`` along the piecewise-linear
    complex-time path ``path`` (first entry is the initial time)."""
    z = np.array([[start[0], start[1]]], dtype=complex)
    _check_bidisc(z, "flow start")
    times, xs, ys = [complex(path[0])], [z[0, 0]], [z[0, 1]]
    total = Stats()
    for t0, t1 in zip(path[:-1], path[1:]):
        dt = np.array([complex(t1) - complex(t0)])
        if dt[0] == 0:
            continue
        res = integrate(_rhs(model, which, dt), z, 1.0, record=True, h_max=h_max)
        _check_bidisc(res.z[:, 0, :], f"flow of {which}")
        for s, zz in zip(res.s[1:], res.z[1:]):
            times.append(complex(t0) + s * dt[0])
            xs.append(zz[0, 0])
            ys.append(zz[0, 1])
        z = res.z_end
        total.steps += res.stats.steps
        total.rejected += res.stats.rejected
        total.evaluations += res.stats.evaluations
        total.max_error = max(total.max_error, res.stats.max_error)
    return Trajectory(np.array(times), np.array(xs), np.array(ys), total)


# ------------------------------------------------------------ holonomy

def holonomy(model: SaddleModel, y0, turns: int = 1):
    """y-coordinate after following X over imaginary time 2*pi*turns from
    (1, y0).  Accepts a scalar or an array of starting points."""
    y = np.atleast_1d(np.asarray(y0, dtype=complex))
    # a point placed on |y| = eps3 by polar construction may round just outside
    if np.any(np.abs(y) > model.eps3 * (1 + 1e-12)):
        raise ValueError(f"|y0| must not exceed eps3 = {model.eps3}")
    z0 = np.stack([np.ones_like(y), y], axis=1)
    z, _ = transport(model, "X", z0, 2j * math.pi * turns)
    out = z[:, 1]
    return complex(out[0]) if np.ndim(y0) == 0 else out


# ------------------------------------------------------------ col passage

@dataclass
class ColPassage:
    x_end: np.ndarray
    y_end: np.ndarray
    tau: np.ndarray


def col_passage(model: SaddleModel, x, theta, *, t_max: float = 400.0) -> ColPassage:
    """Follow Y in real time from (x, e^{i theta}) until |x| = 1."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), x.shape)
    if np.any(np.abs(x) > model.eps4 + 1e-15) and not np.all(np.abs(np.abs(x) - 1) < 1e-14):
        boundary = np.abs(np.abs(x) - 1) < 1e-14
        if np.any((np.abs(x) > model.eps4) & ~boundary):
            raise ValueError(f"|x| must not exceed eps4 = {model.eps4}")
    if np.any(x == 0):
        raise ValueError("x must be nonzero")
    z0 = np.stack([x, np.exp(1j * theta)], axis=1)
    on_circle = np.abs(np.abs(x) - 1) < 1e-14
    dt = np.ones(len(x), dtype=complex) * t_max
    res = integrate(_rhs(model, "Y", dt), z0, 1.0,
                    event=lambda z: np.where(on_circle, 1.0, np.abs(z[:, 0]) ** 2 - 1.0))
    if np.any(np.isnan(res.s_event)):
        raise FlowError("col passage: no hit of |x| = 1 before the time cap")
    if np.any(np.abs(res.z_end[:, 1]) > 1 + BIDISC_SLACK):
        raise FlowError("col passage leaves the bidisc in y")
    return ColPassage(res.z_end[:, 0], res.z_end[:, 1], res.s_event * t_max)


# ------------------------------------------------------------ first integral

def log_first_integral(model: SaddleModel, log_x, log_y):
    """log H with explicit (lifted) logarithms of x and y."""
    if model.kind != "normal":
        raise ValueError("the first integral is implemented for normal-form models")
    p0, q0, k, a = model.p0, model.q0, model.k, model.alpha
    m, n = bezout_pair(p0, q0)
    log_u = p0 * np.asarray(log_x) + q0 * np.asarray(log_y)
    if np.any(np.real(log_u) < math.log(AXIS_FLOOR)):
        raise NumericFailure("point too close to the axes: |x^p0 y^q0| < 1e-12")
    beta = (a - m * p0) / (p0 * q0)
    return n * np.asarray(log_x) + m * np.asarray(log_y) + beta * log_u - np.exp(-k * log_u) / (p0 * q0)


def first_integral(model: SaddleModel, x: complex, y: complex,
                   log_x: Optional[complex] = None, log_y: Optional[complex] = None) -> complex:
    lx = cmath.log(x) if log_x is None else log_x
    ly = cmath.log(y) if log_y is None else log_y
    return complex(np.exp(log_first_integral(model, lx, ly)))


def _unwrapped_log(z: np.ndarray) -> np.ndarray:
    return np.log(np.abs(z)) + 1j * np.unwrap(np.angle(z))


def first_integral_along(model: SaddleModel, traj: Trajectory) -> np.ndarray:
    """H along a trajectory with the branch continued from the principal
    value at the first sample."""
    lx, ly = _unwrapped_log(traj.x), _unwrapped_log(traj.y)
    return np.exp(log_first_integral(model, lx, ly))


# ------------------------------------------------------------ Dulac map

def _check_sector(model: SaddleModel, y, theta, theta_j):
    if np.any(np.abs(y) > model.eps4):
        raise ValueError(f"|y| must not exceed eps4 = {model.eps4}")
    span = 2 * math.pi * (model.lam + 1)
    if np.any(theta < theta_j - 1e-12) or np.any(theta > theta_j + span + 1e-12):
        raise ValueError("lifted argument outside [theta_j, theta_j + 2 pi (lambda + 1)]")


def dulac_flow(model: SaddleModel, r, theta, theta_j: float = 0.0) -> np.ndarray:
    """Leaf transport from (1, r e^{i theta}) (theta lifted) to the slice
    {|y| = 1, arg y = theta_j}: Y backwards in real time until |y| = 1, then
    Y in imaginary time turning arg y back by theta - theta_j."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), r.shape)
    _check_sector(model, r, theta, theta_j)
    z0 = np.stack([np.ones_like(r, dtype=complex), r * np.exp(1j * theta)], axis=1)
    z1, _ = transport(model, "Y", z0, np.log(r))
    z2, _ = transport(model, "Y", z1, 1j * (theta - theta_j))
    return z2[:, 0]


def dulac_integral(model: SaddleModel, r, theta, theta_j: float = 0.0,
                   tol: float = 1e-15, max_iter: int = 60) -> np.ndarray:
    """Solve log H(x, e^{i theta_j}) = log H(1, r e^{i theta}) for log x by
    Newton's method, seeded by the linear leaf x^p0 y^q0 = const with the
    lifted argument (this fixes the branch)."""
    if model.kind != "normal":
        raise ValueError("the integral method needs a normal-form model")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), r.shape)
    _check_sector(model, r, theta, theta_j)
    p0, q0, k, a = model.p0, model.q0, model.k, model.alpha
    m, n = bezout_pair(p0, q0)
    beta = (a - m * p0) / (p0 * q0)
    target = log_first_integral(model, np.zeros_like(r, dtype=complex), np.log(r) + 1j * theta)
    ly = 1j * theta_j
    ell = (q0 / p0) * (np.log(r) + 1j * (theta - theta_j))
    for _ in range(max_iter):
        lu = p0 * ell + q0 * ly
        F = n * ell + m * ly + beta * lu - np.exp(-k * lu) / (p0 * q0) - target
        dF = n + beta * p0 + k * np.exp(-k * lu) / q0
        step = F / dF
        ell = ell - step
        if np.all(np.abs(step) < tol * np.maximum(1.0, np.abs(ell))):
            break
    else:
        raise NumericFailure("Newton iteration for the Dulac equation did not converge")
    return np.exp(ell)


def dulac_map(model: SaddleModel, r, theta, theta_j: float = 0.0, method: str = "auto"):
    """Dulac transport; with ``method='auto'`` normal-form models are
    computed both ways and must agree to 1e-7 (relative)."""
    if method == "flow" or (method == "auto" and model.kind != "normal"):
        return dulac_flow(model, r, theta, theta_j)
    if method == "integral":
        return dulac_integral(model, r, theta, theta_j)
    a = dulac_flow(model, r, theta, theta_j)
    b = dulac_integral(model, r, theta, theta_j)
    gap = np.max(np.abs(a - b) / np.abs(b))
    if gap >= DULAC_AGREEMENT:
        raise NumericFailure(f"Dulac methods disagree (relative gap {gap:.3e}): branch unresolved")
    return a


@dataclass
class DulacReport:
    radii: np.ndarray
    values: np.ndarray
    kappa: float
    residual: float
    log_derivative: np.ndarray  # y D'(y) / D(y) per radius
    normalized_modulus: np.ndarray  # |D(y)| / |y|^kappa
    convention: str

    @property
    def limit(self) -> complex:
        return complex(self.log_derivative[-1])

    def csv(self) -> str:
        lines = ["r,kappa_estimate,residual,re_yDprime_over_D,im_yDprime_over_D,abs_D_over_r_kappa"]
        logs = np.log(self.radii)
        local = np.gradient(np.log(np.abs(self.values)), logs) if len(logs) > 1 else [self.kappa]
        for i, r in enumerate(self.radii):
            ld = self.log_derivative[i]
            lines.append(f"{r:.3e},{local[i]:.10f},{self.residual:.3e},{ld.real:.10f},{ld.imag:.10f},"
                         f"{self.normalized_modulus[i]:.10f}")
        return "\n".join(lines) + "\n"


def dulac_asymptotics(model: SaddleModel, theta: float = 0.0, theta_j: float = 0.0,
                      radii: Sequence[float] = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
                      method: str = "flow", rel_step: float = 1e-4,
                      max_residual: float = 5e-2) -> DulacReport:
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)
    rs = np.concatenate([radii, radii * (1 + rel_step), radii * (1 - rel_step)])
    vals = dulac_map(model, rs, theta, theta_j, method=method)
    n = len(radii)
    d0, dp, dm = vals[:n], vals[n:2 * n], vals[2 * n:]
    log_deriv = radii * (dp - dm) / (2 * rel_step * radii) / d0
    x, yv = np.log(radii), np.log(np.abs(d0))
    if n >= 2:
        slope, intercept = np.polyfit(x, yv, 1)
        residual = float(np.sqrt(np.mean((yv - (slope * x + intercept)) ** 2)))
    else:
        slope, residual = float(np.real(log_deriv[0])), 0.0
    if residual > max_residual:
        raise NumericFailure(f"power-law fit residual {residual:.3e} above {max_residual}")
    lam = model.lam
    flags = [name for name, v in (("lambda", lam), ("1/lambda", 1 / lam)) if abs(slope - v) < 1e-2]
    convention = "+".join(flags) if flags else "neither"
    return DulacReport(radii, d0, float(slope), residual, log_deriv,
                       np.abs(d0) / radii ** slope, convention)
