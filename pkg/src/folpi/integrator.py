"""Batched Dormand-Prince 5(4) integration of holomorphic vector fields.

The state is a complex array of shape ``(n, d)``: ``n`` independent points,
each with ``d`` coordinates.  All points advance in lockstep on a real
parameter ``s``; per-point complex time scales enter through the right-hand
side.  Points may be frozen individually (after an event) by masking.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import FlowError

# Butcher tableau of the Dormand-Prince pair
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW

RTOL = 1e-10
ATOL = 1e-13
MAX_STEPS = 200_000

# process-wide defaults, overridable from the command line
_defaults = {"rtol": RTOL, "atol": ATOL}


def set_tolerances(rtol: Optional[float] = None, atol: Optional[float] = None) -> None:
    for key, v in (("rtol", rtol), ("atol", atol)):
        if v is not None:
            if not v > 0:
                raise ValueError(f"{key} must be positive")
            _defaults[key] = float(v)


def tolerances() -> Tuple[float, float]:
    return _defaults["rtol"], _defaults["atol"]


@dataclass
class Stats:
    steps: int = 0
    rejected: int = 0
    evaluations: int = 0
    max_error: float = 0.0  # largest accepted scaled local error estimate


@dataclass
class Result:
    s: np.ndarray            # accepted parameter values, shape (m,)
    z: np.ndarray            # states at those values, shape (m, n, d)
    z_end: np.ndarray        # final state per point, shape (n, d)
    s_event: Optional[np.ndarray]  # event parameter per point (nan if none)
    stats: Stats


RHS = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


def _step(f: RHS, s: float, z: np.ndarray, k0: np.ndarray, h: float):
    ks = [k0]
    for i in range(1, 7):
        incr = sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
        ks.append(f(s + _C[i] * h, z + h * incr))
    z_new = z + h * sum(b * k for b, k in zip(_B, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
    return z_new, err, ks[-1]


def hermite(s0, z0, f0, s1, z1, f1, s):
    """Cubic Hermite interpolant on [s0, s1] at s (scalar or per point)."""
    h = s1 - s0
    t = (s - s0) / h
    t = np.asarray(t)[..., None] if np.ndim(t) else t
    h00 = 2 * t ** 3 - 3 * t ** 2 + 1
    h10 = t ** 3 - 2 * t ** 2 + t
    h01 = -2 * t ** 3 + 3 * t ** 2
    h11 = t ** 3 - t ** 2
    return h00 * z0 + h10 * h * f0 + h01 * z1 + h11 * h * f1


def integrate(f: RHS, z0: np.ndarray, s_end: float, *, rtol: Optional[float] = None,
              atol: Optional[float] = None,
              event: Optional[Callable[[np.ndarray], np.ndarray]] = None,
              max_steps: int = MAX_STEPS, record: bool = False,
              h_max: float = np.inf) -> Result:
    """Integrate dz/ds = f(s, z, rows) from s = 0 to s_end, where ``rows``
    lists the point indices present in ``z``.

    ``event(z)`` returns one real value per point; the first sign change from
    negative to nonnegative freezes that point at the located root, found by
    bisection on the cubic Hermite interpolant and polished by a short exact
    step.  Integration stops early when every point has fired.
    """
    rtol = _defaults["rtol"] if rtol is None else rtol
    atol = _defaults["atol"] if atol is None else atol
    z = np.array(z0, dtype=complex)
    if z.ndim != 2:
        raise ValueError("state must have shape (n, d)")
    n = z.shape[0]
    stats = Stats()
    active = np.ones(n, dtype=bool)
    s_event = np.full(n, np.nan) if event is not None else None
    every = np.arange(n)
    masked = lambda s, w: np.where(active[:, None], f(s, w, every), 0.0)  # noqa: E731

    s = 0.0
    samples_s, samples_z = [0.0], ([z.copy()] if record else [])
    if s_end == 0.0:
        return Result(np.array([0.0]), np.array([z]), z, s_event, stats)
    if event is not None:
        g_prev = event(z)
        hit_now = g_prev >= 0
        s_event[hit_now] = 0.0
        active &= ~hit_now
    k0 = masked(s, z)
    stats.evaluations += 1
    scale = atol + rtol * np.abs(z)
    d0, d1 = np.max(np.abs(z) / scale), np.max(np.abs(k0) / scale)
    h = min(0.01 * d0 / d1 if d1 > 1e-5 and d0 > 1e-5 else 1e-6, s_end, h_max)

    while s < s_end and active.any():
        if stats.steps + stats.rejected >= max_steps:
            raise FlowError(f"step cap of {max_steps} reached at s={s:.6g}")
        h = min(h, s_end - s, h_max)
        with np.errstate(over="ignore", invalid="ignore"):  # non-finite errors are rejected below
            z_new, err, k_new = _step(masked, s, z, k0, h)
        stats.evaluations += 6
        sc = atol + rtol * np.maximum(np.abs(z), np.abs(z_new))
        ratio = np.abs(err) / sc
        e_norm = float(np.max(ratio[active])) if active.any() else 0.0
        if not np.isfinite(e_norm):
            raise FlowError(f"non-finite state near s={s:.6g}")
        if e_norm <= 1.0:
            stats.steps += 1
            stats.max_error = max(stats.max_error, e_norm)
            s_new = s + h
            if event is not None:
                g_new = event(z_new)
                fired = active & (g_prev < 0) & (g_new >= 0)
                if fired.any():
                    idx = np.nonzero(fired)[0]
                    z_new = z_new.copy()
                    for i in idx:
                        si, zi = _locate(f, event, i, s, z[i], k0[i], s_new, z_new[i], k_new[i],
                                         rtol, atol)
                        s_event[i] = si
                        z_new[i] = zi
                    active &= ~fired
                    k_new = masked(s_new, z_new)
                g_prev = np.where(active, g_new, g_prev)
            s, z, k0 = s_new, z_new, k_new
            if record:
                samples_s.append(s)
                samples_z.append(z.copy())
            fac = 0.9 * e_norm ** -0.2 if e_norm > 0 else 5.0
            h *= min(5.0, max(0.2, fac))
        else:
            stats.rejected += 1
            h *= max(0.1, 0.9 * e_norm ** -0.25)
            if h < 1e-14 * max(1.0, abs(s)):
                raise FlowError(f"step size underflow at s={s:.6g}")
    if event is None and s < s_end:
        raise FlowError("integration ended early")
    out_s = np.array(samples_s) if record else np.array([s])
    out_z = np.array(samples_z) if record else np.array([z])
    return Result(out_s, out_z, z, s_event, stats)


def _locate(f, event, i, s0, z0, f0, s1, z1, f1, rtol, atol):
    """Root of the event for point i inside an accepted step."""
    one = lambda w: event(w[None, :])[0]  # noqa: E731
    a, b = s0, s1
    for _ in range(80):
        m = 0.5 * (a + b)
        if one(hermite(s0, z0, f0, s1, z1, f1, m)) >= 0:
            b = m
        else:
            a = m
        if b - a <= 1e-15 * max(1.0, abs(s1)):
            break
    # polish with exact sub-steps from the step start (secant on s)
    root = 0.5 * (a + b)
    delta = 1e-6 * (s1 - s0)
    ta, tb = max(s0, root - delta), min(s1, root + delta)
    za, zb = _substep(f, i, s0, z0, f0, ta), _substep(f, i, s0, z0, f0, tb)
    ga, gb = one(za), one(zb)
    for _ in range(10):
        if gb == ga:
            break
        tc = tb - gb * (tb - ta) / (gb - ga)
        tc = min(max(tc, s0), s1)
        zc = _substep(f, i, s0, z0, f0, tc)
        ta, za, ga, tb, zb, gb = tb, zb, gb, tc, zc, one(zc)
        if abs(tb - ta) <= 1e-15 * max(1.0, abs(tb)):
            break
    return tb, zb


def _substep(f, i, s0, z0, f0, t):
    h = t - s0
    if h == 0:
        return z0
    rows = np.array([i])
    g = lambda s, w: f(s, w, rows)  # noqa: E731
    z_new, _, _ = _step(g, s0, z0[None, :], f0[None, :], h)
    return z_new[0]
