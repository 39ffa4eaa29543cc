"""Adaptive Gauss-Kronrod (7/15) quadrature, scalar and batched, with log-domain wrappers.

The batched routine integrates many positive integrands at once; each
owner's intervals are refined independently but every refinement pass is a
single vectorized evaluation. It is what the models use for marginal
constants, where thousands of short integrals are needed per grid point.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from refprior.errors import DomainError, NaNError, QuadratureError

# Kronrod abscissae on [0, 1) (mirrored for the negative half) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# Gauss weights for the embedded 7-point rule (nodes _XGK[1], [3], [5], [7]).
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # 15 nodes, ascending
W_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
W_GAUSS = np.zeros(15)
W_GAUSS[[1, 3, 5]] = _WG[:3]
W_GAUSS[[9, 11, 13]] = _WG[2::-1]
W_GAUSS[7] = _WG[3]

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny


class TailTransform(str, Enum):
    ONE_OVER_X = "one_over_x"  # theta = a + x / (1 - x)
    EXP_DECAY = "exp_decay"  # theta = a - log(1 - x); only reaches a + 37, so exponential tails only


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000
    infinite_tail_transform: TailTransform = TailTransform.ONE_OVER_X

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 10:
            raise DomainError("max_subdivisions must be at least 10")
        object.__setattr__(self, "infinite_tail_transform", TailTransform(self.infinite_tail_transform))


DEFAULT_SETTINGS = QuadratureSettings()


@dataclass(frozen=True)
class QuadResult:
    value: float
    err_estimate: float
    subdivisions_used: int


def gk15(fvals: np.ndarray, half_width: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Kronrod estimate and QUADPACK-style error for rows of 15 function values.

    ``fvals`` has shape (n, 15) sampled at ``center + half_width * NODES``.
    """
    hl = np.abs(half_width)
    resk = fvals @ W_KRONROD
    resg = fvals @ W_GAUSS
    resabs = np.abs(fvals) @ W_KRONROD
    mean = 0.5 * resk
    resasc = np.abs(fvals - mean[:, None]) @ W_KRONROD
    err = np.abs(resk - resg) * hl
    resasc = resasc * hl
    resabs = resabs * hl
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0.0) & (err != 0.0), scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > _TINY / (50.0 * _EPS), np.maximum(floor, err), err)
    return resk * half_width, err


def _call_vectorized(f: Callable, x: np.ndarray) -> np.ndarray:
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape == x.shape:
            return y
    except (TypeError, ValueError):
        pass
    return np.array([float(f(float(v))) for v in x.ravel()]).reshape(x.shape)


def _finite_map(f: Callable, a: float, b: float, tail: TailTransform):
    """Return (g, lo, hi) with the integral of f over (a, b) equal to that of g over (lo, hi)."""
    if math.isinf(b):
        if tail is TailTransform.ONE_OVER_X:
            def g(x):
                one_minus = 1.0 - x
                at_inf = one_minus <= 0.0  # nodes that round onto x = 1
                safe = np.where(at_inf, 0.5, one_minus)
                return np.where(at_inf, 0.0, _call_vectorized(f, a + x / safe) / (safe * safe))
        else:
            def g(x):
                one_minus = 1.0 - x
                at_inf = one_minus <= 0.0
                safe = np.where(at_inf, 0.5, one_minus)
                return np.where(at_inf, 0.0, _call_vectorized(f, a - np.log(safe)) / safe)
        return g, 0.0, 1.0
    return (lambda x: _call_vectorized(f, x)), a, b


def _check_bounds(a: float, b: float) -> None:
    if math.isnan(a) or math.isnan(b) or math.isinf(a) or not a < b:
        raise DomainError(f"integration requires finite a < b (b may be +inf); got a={a}, b={b}")


def integrate_adaptive(
    f: Callable,
    a: float,
    b: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    points: Sequence[float] = (),
) -> QuadResult:
    """Globally adaptive GK15 integration of f over (a, b), b may be +inf.

    ``points`` are interior breakpoints (finite ranges only) used to seed
    the initial partition, e.g. known discontinuities.
    """
    a, b = float(a), float(b)
    _check_bounds(a, b)
    g, lo, hi = _finite_map(f, a, b, settings.infinite_tail_transform)
    if math.isinf(b) and len(points):
        # breakpoints map through the inverse transform
        pts = np.asarray(points, dtype=float) - a
        if settings.infinite_tail_transform is TailTransform.ONE_OVER_X:
            pts = pts / (1.0 + pts)
        else:
            pts = -np.expm1(-pts)
    else:
        pts = np.asarray(points, dtype=float)
    edges = np.unique(np.concatenate([[lo], pts[(pts > lo) & (pts < hi)], [hi]]))

    def evaluate(lefts: np.ndarray, rights: np.ndarray):
        center = 0.5 * (lefts + rights)
        hl = 0.5 * (rights - lefts)
        x = center[:, None] + hl[:, None] * NODES[None, :]
        fv = g(x)
        if np.isnan(fv).any():
            raise NaNError("integrand returned NaN at an interior node")
        if not np.isfinite(fv).all():
            raise QuadratureError("integrand is not finite at an interior node")
        return gk15(fv, hl)

    vals, errs = evaluate(edges[:-1], edges[1:])
    heap = [(-e, l, r, v) for e, l, r, v in zip(errs, edges[:-1], edges[1:], vals)]
    heapq.heapify(heap)
    total = float(np.sum(vals))
    total_err = float(np.sum(errs))
    n_sub = len(heap)
    while total_err > max(settings.abs_tol, settings.rel_tol * abs(total)):
        if n_sub >= settings.max_subdivisions:
            raise QuadratureError(
                f"no convergence after {n_sub} subintervals (value {total:.6g}, error {total_err:.3g})"
            )
        neg_err, l, r, v = heapq.heappop(heap)
        m = 0.5 * (l + r)
        if not (l < m < r):
            raise QuadratureError("interval can no longer be bisected; roundoff limits accuracy")
        nv, ne = evaluate(np.array([l, m]), np.array([m, r]))
        total += float(nv.sum()) - v
        total_err += float(ne.sum()) + neg_err
        heapq.heappush(heap, (-ne[0], l, m, nv[0]))
        heapq.heappush(heap, (-ne[1], m, r, nv[1]))
        n_sub += 1
    # re-sum to shed accumulated cancellation in the running totals
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    return QuadResult(total, total_err, n_sub)


PROBE_POINTS = 33


def _probe_grid(lo, hi):
    """33 equally spaced interior points plus both endpoints, per row."""
    t = np.linspace(0.0, 1.0, PROBE_POINTS + 2)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return lo[..., None] + (hi - lo)[..., None] * t


def _finite_max(values: np.ndarray, axis=-1) -> np.ndarray:
    v = np.where(np.isfinite(values), values, -np.inf)
    return np.max(v, axis=axis)


PEAK_DROP = 4.0  # log-units; a sharper drop to the next probe means the peak is unresolved
LADDER = 2.0 ** -np.arange(1, 53)


def _peak_breaks(logf1: Callable, lo: float, hi: float, probe_x: np.ndarray, probe_v: np.ndarray) -> np.ndarray:
    """Breakpoints that resolve a peak narrower than the probe spacing.

    Walks a dyadic ladder away from the probe maximum until the integrand is
    within PEAK_DROP of the peak, then returns points at every dyadic scale
    from there out to one probe spacing. Returns an empty array when the
    probe grid already resolves the peak.
    """
    v = np.where(np.isfinite(probe_v), probe_v, -np.inf)
    j = int(np.argmax(v))
    top = v[j]
    if not np.isfinite(top):
        return np.empty(0)
    neighbours = [v[i] for i in (j - 1, j + 1) if 0 <= i < v.size]
    if top - max(neighbours) < PEAK_DROP:
        return np.empty(0)
    c = probe_x[j]
    h = probe_x[1] - probe_x[0]
    out = []
    for side in (-1.0, 1.0):
        offsets = h * LADDER
        xs = c + side * offsets
        keep = (xs > lo) & (xs < hi)
        if not keep.any():
            continue
        offsets, xs = offsets[keep], xs[keep]
        with np.errstate(all="ignore"):
            lv = np.asarray(logf1(xs), dtype=float)
        close = np.flatnonzero(np.isfinite(lv) & (lv >= top - PEAK_DROP))
        deepest = close[0] + 2 if close.size else offsets.size - 1
        out.append(c + side * offsets[: min(deepest, offsets.size - 1) + 1])
        out.append([c + side * h])
    pts = np.concatenate(out) if out else np.empty(0)
    return np.unique(pts[(pts > lo) & (pts < hi)])


def log_integrate(
    logf: Callable,
    a: float,
    b: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    points: Sequence[float] = (),
) -> float:
    """log of the integral of exp(logf) over (a, b); b may be +inf.

    The integrand is shifted by its maximum on a probe grid before
    exponentiation, so integrals far outside double range are fine.
    Returns -inf when logf is -inf everywhere on the probe grid and the
    shifted integral vanishes.
    """
    a, b = float(a), float(b)
    _check_bounds(a, b)
    if math.isinf(b):
        tail = settings.infinite_tail_transform
        if tail is TailTransform.ONE_OVER_X:
            def h(x):
                om = 1.0 - x
                at_inf = om <= 0.0
                om = np.where(at_inf, 0.5, om)
                return np.where(at_inf, -np.inf, _call_vectorized(logf, a + x / om) - 2.0 * np.log(om))
        else:
            def h(x):
                om = 1.0 - x
                at_inf = om <= 0.0
                om = np.where(at_inf, 0.5, om)
                return np.where(at_inf, -np.inf, _call_vectorized(logf, a - np.log(om)) - np.log(om))
        pts = np.asarray(points, dtype=float) - a
        pts = pts / (1.0 + pts) if tail is TailTransform.ONE_OVER_X else -np.expm1(-pts)
        return log_integrate(h, 0.0, 1.0, settings, points=pts)

    with np.errstate(all="ignore"):
        probe = _call_vectorized(logf, _probe_grid(a, b))
    pts = np.asarray(points, dtype=float)
    if pts.size:
        # probe just inside each breakpoint too; maxima often sit there
        w = (b - a) * 1e-9
        with np.errstate(all="ignore"):
            probe = np.concatenate([probe, _call_vectorized(logf, np.concatenate([pts - w, pts + w]))])
    shift = float(_finite_max(probe))
    if math.isinf(shift):
        shift = 0.0
    grid = _probe_grid(a, b)
    extra = _peak_breaks(lambda x: _call_vectorized(logf, x), a, b, grid, probe[: grid.size])
    if extra.size:
        points = np.concatenate([np.asarray(points, dtype=float), extra])

    def integrand(x):
        with np.errstate(under="ignore"):
            return np.exp(_call_vectorized(logf, x) - shift)

    res = integrate_adaptive(integrand, a, b, settings, points=points)
    if res.value <= 0.0:
        return -math.inf
    return math.log(res.value) + shift


def log_integrate_many(
    logf: Callable[[np.ndarray, np.ndarray], np.ndarray],
    a: np.ndarray,
    b: np.ndarray,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> np.ndarray:
    """Batched log-integrals of positive integrands over finite intervals.

    ``logf(x, owner)`` receives nodes ``x`` of shape (n, p) and integer owner
    indices of shape (n,) telling which integrand each row belongs to.
    Every owner is refined until the sum of its interval error estimates is
    at most ``rel_tol`` times its integral; the total refinement count per
    owner is capped by ``max_subdivisions``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("interval arrays must be 1-d and of equal length")
    if not np.all(np.isfinite(a) & np.isfinite(b) & (a < b)):
        raise DomainError("log_integrate_many requires finite a < b for every interval")
    n = a.size
    owners = np.arange(n)
    with np.errstate(all="ignore"):
        probe = logf(_probe_grid(a, b), owners)
    shift = _finite_max(probe)
    dead = ~np.isfinite(shift)
    shift = np.where(dead, 0.0, shift)

    half_tol = 0.5 * settings.rel_tol
    widths_total = b - a
    accepted = np.zeros(n)
    subdivisions = np.ones(n, dtype=int)

    lefts, rights, who = a.copy(), b.copy(), owners.copy()
    grid = _probe_grid(a, b)
    # vectorized pre-check; only owners with an unresolved peak pay for the ladder
    pv = np.where(np.isfinite(probe), probe, -np.inf)
    j = np.argmax(pv, axis=1)
    rows = np.arange(n)
    left = np.where(j > 0, pv[rows, np.maximum(j - 1, 0)], -np.inf)
    right = np.where(j < pv.shape[1] - 1, pv[rows, np.minimum(j + 1, pv.shape[1] - 1)], -np.inf)
    sharp = ~dead & (shift - np.maximum(left, right) >= PEAK_DROP)
    seeded = []
    for i in np.flatnonzero(sharp):
        pts = _peak_breaks(lambda x, i=i: logf(x[None, :], owners[i:i + 1])[0], a[i], b[i], grid[i], probe[i])
        if pts.size:
            edges = np.concatenate([[a[i]], pts, [b[i]]])
            seeded.append((i, edges))
    if seeded:
        keep = np.ones(n, dtype=bool)
        keep[[i for i, _ in seeded]] = False
        lefts = np.concatenate([lefts[keep]] + [e[:-1] for _, e in seeded])
        rights = np.concatenate([rights[keep]] + [e[1:] for _, e in seeded])
        who = np.concatenate([who[keep]] + [np.full(e.size - 1, i) for i, e in seeded])
    estimate = None
    while lefts.size:
        center = 0.5 * (lefts + rights)
        hl = 0.5 * (rights - lefts)
        x = center[:, None] + hl[:, None] * NODES[None, :]
        with np.errstate(under="ignore", over="ignore"):
            fv = np.exp(logf(x, who) - shift[who, None])
        if np.isnan(fv).any():
            raise NaNError("integrand returned NaN at an interior node")
        if not np.isfinite(fv).all():
            raise QuadratureError("integrand overflowed after the log shift")
        vals, errs = gk15(fv, hl)
        pending_sum = np.bincount(who, weights=vals, minlength=n)
        estimate = accepted + pending_sum
        share = (rights - lefts) / widths_total[who]
        ok = (errs <= half_tol * np.abs(vals)) | (errs <= half_tol * estimate[who] * share)
        ok |= errs <= settings.abs_tol * share * np.exp(-shift[who])
        accepted += np.bincount(who[ok], weights=vals[ok], minlength=n)
        bad = ~ok
        if not bad.any():
            break
        l, r, o = lefts[bad], rights[bad], who[bad]
        subdivisions += np.bincount(o, minlength=n)
        if (subdivisions > settings.max_subdivisions).any():
            worst = int(np.argmax(subdivisions))
            raise QuadratureError(
                f"batched integral {worst} did not converge within {settings.max_subdivisions} subdivisions"
            )
        m = 0.5 * (l + r)
        if not np.all((l < m) & (m < r)):
            raise QuadratureError("interval can no longer be bisected; roundoff limits accuracy")
        lefts = np.concatenate([l, m])
        rights = np.concatenate([m, r])
        who = np.concatenate([o, o])

    with np.errstate(divide="ignore"):
        out = np.log(accepted) + shift
    out[dead & (accepted <= 0)] = -np.inf
    return out
