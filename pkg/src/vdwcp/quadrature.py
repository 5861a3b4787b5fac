"""Adaptive Gauss-Kronrod integration.

Two entry points matter to the rest of the package:

* :func:`integrate_semi_infinite` for the exponentially decaying
  imaginary-frequency integrands, via ``u = L t / (1 - t)``;
* :func:`integrate_abel_pv` for real-axis photon integrals that only exist
  as Abel-regularised principal values.

Integrands are called with numpy arrays of abscissae and must return an
array of the same shape (real or complex).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ExtrapolationDiverged, NonFiniteIntegrand, PoleSpacingTooSmall

MAX_EVALUATIONS = 1_000_000
DEFAULT_DAMPING = (0.2, 0.1, 0.05, 0.025, 0.0125)
DEFAULT_EXCISION = (1e-2, 1e-3, 1e-4)
MIN_POLE_SEPARATION = 1e-3

# Gauss-Kronrod 10/21 abscissae and weights (QUADPACK qk21)
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600854847678,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(21)
_GW[1:10:2] = _WG
_GW[11:20:2] = _WG[::-1]


@dataclass
class QuadratureResult:
    value: complex | float
    error_estimate: float
    evaluations: int
    converged: bool
    notes: str = ""


def _gk_batch(g, a, b):
    """Apply the 21-point rule on each interval [a_i, b_i]."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    y = np.asarray(g(x.ravel())).reshape(x.shape)
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise NonFiniteIntegrand(f"integrand not finite at x = {bad!r}")
    k = half * (y @ _KW)
    gauss = half * (y @ _GW)
    return k, np.abs(k - gauss)


def _adaptive(g, breakpoints, rel_tol, abs_floor, max_evaluations):
    pts = np.asarray(breakpoints, dtype=float)
    a, b = pts[:-1], pts[1:]
    vals, errs = _gk_batch(g, a, b)
    evals = 21 * len(a)
    # max-heap on error; sequence numbers keep the ordering deterministic
    heap = [(-e, i, lo, hi, v) for i, (lo, hi, v, e) in enumerate(zip(a, b, vals, errs))]
    heapq.heapify(heap)
    seq = len(heap)
    total = complex(np.sum(vals)) if np.iscomplexobj(vals) else float(np.sum(vals))
    err = float(np.sum(errs))
    best = (err, total)
    while True:
        target = max(rel_tol * abs(total), abs_floor)
        if err <= target:
            return QuadratureResult(total, err, evals, True)
        if evals + 42 > max_evaluations:
            e_best, v_best = best
            return QuadratureResult(v_best, e_best, evals, False, "evaluation cap reached")
        # split the worst intervals together, up to a modest batch
        batch = []
        budget = (max_evaluations - evals) // 42
        excess = err - target
        taken = 0.0
        while heap and len(batch) < min(64, budget) and taken < excess:
            item = heapq.heappop(heap)
            batch.append(item)
            taken += -item[0]
        lo = np.array([t[2] for t in batch])
        hi = np.array([t[3] for t in batch])
        mid = 0.5 * (lo + hi)
        if np.any((mid <= lo) | (mid >= hi)):
            for item in batch:
                heapq.heappush(heap, item)
            e_best, v_best = best
            return QuadratureResult(v_best, e_best, evals, False, "interval underflow")
        na = np.concatenate([lo, mid])
        nb = np.concatenate([mid, hi])
        nv, ne = _gk_batch(g, na, nb)
        evals += 21 * len(na)
        for item in batch:
            total -= item[4]
            err -= -item[0]
        for lo_i, hi_i, v, e in zip(na, nb, nv, ne):
            heapq.heappush(heap, (-e, seq, lo_i, hi_i, v))
            seq += 1
            total += v
            err += e
        # float subtraction can push the running sum slightly negative
        err = max(err, 0.0)
        if err < best[0]:
            best = (err, total)


def integrate_interval(
    f: Callable,
    a: float,
    b: float,
    rel_tol: float = 1e-9,
    abs_floor: float = 0.0,
    breakpoints: Sequence[float] | None = None,
    max_evaluations: int = MAX_EVALUATIONS,
) -> QuadratureResult:
    """Adaptive GK21 on a finite interval, optionally pre-split."""
    if breakpoints is None:
        pts = np.linspace(a, b, 5)
    else:
        inner = [p for p in breakpoints if a < p < b]
        pts = np.array(sorted({a, b, *inner}))
    return _adaptive(f, pts, rel_tol, abs_floor, max_evaluations)


def integrate_semi_infinite(
    f: Callable,
    decay_scale: float,
    rel_tol: float = 1e-9,
    abs_floor: float = 0.0,
    max_evaluations: int = MAX_EVALUATIONS,
) -> QuadratureResult:
    """Integrate ``f`` over ``(0, inf)``.

    ``decay_scale`` sets the map ``u = L t / (1 - t)``; choose it near the
    e-folding length of the integrand.
    """
    if not decay_scale > 0:
        raise ValueError("decay_scale must be positive")
    L = float(decay_scale)

    def mapped(t):
        one_m = 1.0 - t
        u = L * t / one_m
        return f(u) * (L / one_m**2)

    pts = np.array([0.0, 0.125, 0.25, 0.5, 0.75, 0.875, 1.0])
    return _adaptive(mapped, pts, rel_tol, abs_floor, max_evaluations)


def neville(xs, ys, x0=0.0):
    """Polynomial extrapolation to ``x0``; returns (value, error estimate).

    The error estimate compares against the interpolant that drops the node
    farthest from ``x0``, so ``xs`` should be ordered away-from-x0 first.
    """
    xs = list(xs)
    p = [complex(y) for y in ys]
    n = len(p)
    prev = p[-1]
    for m in range(1, n):
        for i in range(n - m):
            p[i] = ((x0 - xs[i + m]) * p[i] + (xs[i] - x0) * p[i + 1]) / (xs[i] - xs[i + m])
        if m == n - 2:
            # estimate from the nodes closest to x0
            prev = p[1]
    value = p[0]
    err = abs(value - prev) if n > 1 else 0.0
    return value, err


def integrate_abel_pv(
    f: Callable,
    poles: Sequence[float],
    omega_scale: float,
    damping_sequence: Sequence[float] = DEFAULT_DAMPING,
    rel_tol: float = 1e-4,
    excision: Sequence[float] = DEFAULT_EXCISION,
    cutoff_exponent: float = 70.0,
    max_evaluations: int = MAX_EVALUATIONS,
) -> QuadratureResult:
    """Abel-regularised principal value of ``f`` over ``(0, inf)``.

    For each damping ``s`` the integral of ``f(w) exp(-s w / omega_scale)``
    is computed with symmetric excision ``|w - p| > delta`` around every
    pole (``delta`` Richardson-extrapolated to zero), and the results are
    then extrapolated polynomially to ``s = 0``.  A damping of exactly zero
    is allowed for integrands that already decay.
    """
    poles = sorted(float(p) for p in poles)
    if any(p <= 0 for p in poles):
        raise ValueError("poles must lie on the positive real axis")
    for p, q in zip(poles, poles[1:]):
        if q - p < MIN_POLE_SEPARATION * q:
            raise PoleSpacingTooSmall(f"poles {p:.6g} and {q:.6g} are too close")
    W = float(omega_scale)
    # radius of the symmetric neighbourhood around each pole
    radii = []
    for i, p in enumerate(poles):
        gaps = [p]
        if i > 0:
            gaps.append(p - poles[i - 1])
        if i + 1 < len(poles):
            gaps.append(poles[i + 1] - p)
        radii.append(0.5 * min(gaps))

    damping = [float(s) for s in damping_sequence]
    per_damping = []
    evals = 0
    notes = []
    ok = True
    for s in damping:
        if s > 0:
            cut = W * cutoff_exponent / s
        else:
            cut = math.inf
        if poles:
            cut = max(cut, 2.0 * poles[-1] + radii[-1])

        def g(w, s=s):
            return f(w) * np.exp(-s * w / W)

        # regular pieces between the pole neighbourhoods
        edges = [0.0]
        for p, d in zip(poles, radii):
            edges += [p - d, p + d]
        pieces = list(zip(edges[0::2], edges[1::2]))
        total = 0j
        err = 0.0
        for lo, hi in pieces:
            if hi > lo:
                r = _finite_piece(g, lo, hi, W, rel_tol, max_evaluations)
                total += r.value
                err += r.error_estimate
                evals += r.evaluations
                ok &= r.converged
        tail_lo = edges[-1]
        if math.isinf(cut):
            r = integrate_semi_infinite(
                lambda u: g(tail_lo + u), W, rel_tol * 1e-2, 0.0, max_evaluations
            )
        else:
            r = _finite_piece(g, tail_lo, cut, W, rel_tol, max_evaluations)
        total += r.value
        err += r.error_estimate
        evals += r.evaluations
        ok &= r.converged
        # symmetric neighbourhoods, delta -> 0 by Richardson
        for p, d in zip(poles, radii):
            deltas = [frac * d for frac in excision]
            vals = []
            for delta in deltas:
                def sym(x, p=p):
                    return g(p + x) + g(p - x)

                r = integrate_interval(
                    sym, delta, d, rel_tol * 1e-2, 0.0, None, max_evaluations
                )
                vals.append(r.value)
                evals += r.evaluations
                ok &= r.converged
            v0, e0 = neville(deltas, vals)
            total += v0
            err += e0
        per_damping.append((total, err))

    if len(damping) == 1:
        value, err = per_damping[0]
        ex_err = 0.0
    else:
        value, ex_err = neville(damping, [v for v, _ in per_damping])
        err = ex_err + max(e for _, e in per_damping)
    if not np.isfinite(value) or (abs(value) > 0 and ex_err > abs(value)):
        raise ExtrapolationDiverged(
            f"damping extrapolation lost all digits (value {value!r}, spread {ex_err:.3g})"
        )
    converged = ok and err <= rel_tol * max(abs(value), 1e-300)
    if not converged:
        notes.append("extrapolation error above tolerance" if ok else "inner quadrature unconverged")
    return QuadratureResult(value, err, evals, converged, "; ".join(notes))


def _finite_piece(g, lo, hi, W, rel_tol, max_evaluations):
    # pre-split into panels about a quarter oscillation wide so the adaptive
    # scheme starts from a resolved partition
    n = int(min(max((hi - lo) / (0.5 * W), 4), 20000))
    pts = np.linspace(lo, hi, n + 1)
    return _adaptive(g, pts, rel_tol * 1e-2, 0.0, max_evaluations)
