"""Events, lightcones, boosted simultaneity and witness-point search.

Everything here works in the preferred frame with double precision.  A
witness point is a spacetime location reached by light from a set of
*included* events but not yet reached by light from a set of *excluded*
events; the search optionally restricts the spatial position to the plane
equidistant from a pair of events.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize


class WitnessSearchError(ValueError):
    """Raised when the witness search domain is degenerate or unbounded."""


@dataclass(frozen=True)
class Event:
    label: str
    position: tuple
    time: float

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3:
            raise ValueError(f"event {self.label!r}: position must have 3 components")
        if not all(math.isfinite(v) for v in pos) or not math.isfinite(float(self.time)):
            raise ValueError(f"event {self.label!r}: non-finite coordinate")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "time", float(self.time))

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.position)

    def shifted(self, dt: float) -> "Event":
        return Event(self.label, self.position, self.time + dt)


@dataclass(frozen=True)
class FrameVelocity:
    velocity: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        vel = tuple(float(v) for v in self.velocity)
        if len(vel) != 3 or not all(math.isfinite(v) for v in vel):
            raise ValueError("frame velocity must be a finite 3-vector")
        object.__setattr__(self, "velocity", vel)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


class TimeOrder(str, enum.Enum):
    PAST = "past"
    SIMULTANEOUS = "simultaneous"
    FUTURE = "future"


def in_future_lightcone(candidate: Event, apex: Event, c: float = 1.0) -> bool:
    """Closed future cone: the null boundary counts as inside."""
    if c <= 0:
        raise ValueError("c must be positive")
    dt = candidate.time - apex.time
    if dt < 0:
        return False
    return math.dist(candidate.position, apex.position) <= c * dt


def frame_time_order(reference: Event, other: Event, u: FrameVelocity,
                     c: float = 1.0, tol: float = 0.0) -> TimeOrder:
    """Order of `other` relative to `reference` in the frame moving at `u`.

    Only the sign of the boosted time difference matters, so the Lorentz
    factor is dropped.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if u.speed >= c:
        raise ValueError(f"frame speed {u.speed} must be below c={c}")
    dt = other.time - reference.time
    dx = other.x - reference.x
    s = dt - float(np.dot(u.velocity, dx)) / c**2
    if s > tol:
        return TimeOrder.FUTURE
    if s < -tol:
        return TimeOrder.PAST
    return TimeOrder.SIMULTANEOUS


# ---------------------------------------------------------------------------
# witness search

def _arrival(events: Sequence[Event], pts: np.ndarray, c: float) -> np.ndarray:
    """Light arrival time from each event at each point, shape (n_events, n_pts)."""
    X = np.array([e.x for e in events])
    T = np.array([e.time for e in events])
    dist = np.linalg.norm(pts[None, :, :] - X[:, None, :], axis=-1)
    return T[:, None] + dist / c


def feasibility_gap(included, excluded, pts, c=1.0) -> np.ndarray:
    """Latest excluded-free time minus earliest all-included time at each point.

    A point is a witness location iff this is strictly positive.  With no
    excluded events the gap is +inf.
    """
    pts = np.atleast_2d(pts)
    t_in = _arrival(included, pts, c).max(axis=0)
    if not excluded:
        return np.full(len(pts), np.inf)
    return _arrival(excluded, pts, c).min(axis=0) - t_in


@dataclass
class _Domain:
    origin: np.ndarray
    basis: np.ndarray  # rows span the search subspace
    radius: float

    def embed(self, uv: np.ndarray) -> np.ndarray:
        return self.origin + np.atleast_2d(uv) @ self.basis


def _search_domain(included, excluded, pair, c) -> _Domain:
    events = list(included) + list(excluded) + (list(pair) if pair else [])
    X = np.array([e.x for e in events])
    T = np.array([e.time for e in events])
    spread = float(np.ptp(X, axis=0).max()) + c * float(np.ptp(T))
    if pair is not None:
        p, q = pair
        n = q.x - p.x
        nn = float(np.linalg.norm(n))
        if nn == 0:
            raise WitnessSearchError("equidistant pair coincides in space; no bisector plane")
        n = n / nn
        # orthonormal basis of the plane orthogonal to n
        helper = np.eye(3)[int(np.argmin(np.abs(n)))]
        e1 = np.cross(n, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        basis = np.array([e1, e2])
        mid = (p.x + q.x) / 2
        centre = X.mean(axis=0)
        origin = mid + basis.T @ (basis @ (centre - mid))
    else:
        basis = np.eye(3)
        origin = X.mean(axis=0)
    radius = 4.0 * spread
    if not math.isfinite(radius):
        raise WitnessSearchError("non-finite search domain")
    if radius == 0:
        radius = 1.0
    return _Domain(origin, basis, radius)


def _excluded_dominated(included, excluded, c) -> bool:
    # an included event inside an excluded event's cone arrives later everywhere
    return any(in_future_lightcone(i, j, c) for i in included for j in excluded)


def _feasible_samples(included, excluded, dom: _Domain, c, depth=9, keep=64):
    """Lipschitz branch-and-bound over the search box.

    Returns (points, gaps) of sampled strictly feasible points, or empty
    arrays when every cell is certified infeasible.
    """
    dim = dom.basis.shape[0]
    lip = 2.0 / c
    h = dom.radius
    centres = np.zeros((1, dim))
    found_pts, found_gap = [], []
    offsets = np.array(list(itertools.product((-0.5, 0.5), repeat=dim)))
    for _ in range(depth):
        g = feasibility_gap(included, excluded, dom.embed(centres), c)
        ok = g > 0
        if ok.any():
            found_pts.append(centres[ok])
            found_gap.append(g[ok])
        # half-diagonal of a cell of side 2h
        alive = g + lip * h * math.sqrt(dim) > 0
        centres = centres[alive]
        if len(centres) == 0:
            break
        if len(centres) > 20000:
            # keep the most promising cells; the bound is no longer a certificate
            idx = np.argsort(-g[alive])[:20000]
            centres = centres[idx]
        h /= 2
        centres = (centres[:, None, :] + offsets[None, :, :] * 2 * h).reshape(-1, dim)
    if not found_pts:
        return np.zeros((0, dim)), np.zeros(0), len(centres) == 0
    pts = np.concatenate(found_pts)
    gaps = np.concatenate(found_gap)
    return pts, gaps, False


def _grow_and_sample(included, excluded, dom: _Domain, c, growth=(1, 4, 16, 64)):
    """Sample the domain, enlarging it when nothing feasible turns up.

    Witness loci recede to infinity near the edge of a configuration's
    admissible range, so a fixed box would miss them.
    """
    for g in growth:
        box = _Domain(dom.origin, dom.basis, dom.radius * g)
        pts, gaps, certified = _feasible_samples(included, excluded, box, c)
        if len(pts):
            return pts, gaps, False, box
    return pts, gaps, certified, box


def _polish(included, excluded, dom: _Domain, start_uv, start_t, objective, c, delta):
    """SLSQP in (uv, t) with the epigraph form of the cone constraints."""
    dim = dom.basis.shape[0]
    Xi = np.array([e.x for e in included]); Ti = np.array([e.time for e in included])
    Xe = np.array([e.x for e in excluded]) if excluded else np.zeros((0, 3))
    Te = np.array([e.time for e in excluded]) if excluded else np.zeros(0)

    def cons(z):
        p = dom.embed(z[:dim])[0]
        t = z[dim]
        ci = t - Ti - np.linalg.norm(p - Xi, axis=1) / c
        ce = Te + np.linalg.norm(p - Xe, axis=1) / c - t - delta
        return np.concatenate([ci, ce])

    z0 = np.concatenate([start_uv, [start_t]])
    res = minimize(lambda z: objective(z, dom.embed(z[:dim])[0]), z0, method="SLSQP",
                   constraints=[{"type": "ineq", "fun": cons}],
                   options={"ftol": 1e-14, "maxiter": 500})
    z = res.x if np.all(np.isfinite(res.x)) else z0
    return z[:dim], float(z[dim])


def _verified(included, excluded, p, t, c) -> bool:
    ev = Event("?", p, t)
    return (all(in_future_lightcone(ev, e, c) for e in included)
            and not any(in_future_lightcone(ev, e, c) for e in excluded))


def _bisect_to_verified(included, excluded, dom, good_uv, cand_uv, c, tol):
    """Walk from a verified interior point towards a candidate, keeping verification."""
    def t_of(uv):
        p = dom.embed(uv)[0]
        return p, float(_arrival(included, p[None, :], c).max())

    lo, hi = 0.0, 1.0
    p, t = t_of(cand_uv)
    if _verified(included, excluded, p, t, c):
        return cand_uv
    while (hi - lo) * float(np.linalg.norm(cand_uv - good_uv)) > tol:
        mid = (lo + hi) / 2
        uv = good_uv + mid * (cand_uv - good_uv)
        p, t = t_of(uv)
        if _verified(included, excluded, p, t, c):
            lo = mid
        else:
            hi = mid
    return good_uv + lo * (cand_uv - good_uv)


def find_witness_point(included: Iterable[Event], excluded: Iterable[Event] = (),
                       equidistant_pair: Optional[tuple] = None, c: float = 1.0,
                       label: str = "W", tol: float = 1e-9) -> Optional[Event]:
    """Earliest point inside every included cone and strictly outside every excluded one.

    Ties in time are broken by distance to the centroid of the excluded
    events.  Returns None when the feasible set is certified empty on the
    search domain.
    """
    included = list(included)
    excluded = list(excluded)
    if not included:
        raise ValueError("need at least one included event")
    if c <= 0:
        raise ValueError("c must be positive")
    if equidistant_pair is not None and equidistant_pair[0].position == equidistant_pair[1].position:
        raise WitnessSearchError("equidistant pair coincides in space; no bisector plane")
    if excluded and _excluded_dominated(included, excluded, c):
        return None
    # no point can precede the latest included event, so if that event is
    # itself admissible it is the answer
    latest = max(included, key=lambda e: e.time)
    on_plane = equidistant_pair is None or math.isclose(
        float(np.linalg.norm(latest.x - equidistant_pair[0].x)),
        float(np.linalg.norm(latest.x - equidistant_pair[1].x)), rel_tol=0, abs_tol=1e-12)
    if on_plane and _verified(included, excluded, latest.x, latest.time, c):
        return Event(label, latest.position, latest.time)
    dom = _search_domain(included, excluded, equidistant_pair, c)
    dim = dom.basis.shape[0]
    pts, gaps, certified_empty, dom = _grow_and_sample(included, excluded, dom, c)
    if len(pts) == 0:
        if certified_empty:
            return None
        raise WitnessSearchError("search did not resolve the feasible set")
    times = _arrival(included, dom.embed(pts), c).max(axis=0)
    k = int(np.argmin(times))
    good_uv = pts[k]
    delta = min(tol, float(gaps[k]) / 4)

    uv, t = _polish(included, excluded, dom, good_uv, times[k],
                    lambda z, p: z[dim], c, delta)
    if excluded:
        centroid = np.mean([e.x for e in excluded], axis=0)
        t_star = t
        Ti_max = t_star + tol

        def obj(z, p):
            return float(np.sum((p - centroid) ** 2)) + 1e6 * max(0.0, z[dim] - Ti_max) ** 2
        uv2, t2 = _polish(included, excluded, dom, uv, t, obj, c, delta)
        if t2 <= Ti_max:
            uv = uv2
    uv = _bisect_to_verified(included, excluded, dom, good_uv, uv, c, tol)
    p = dom.embed(uv)[0]
    t = float(_arrival(included, p[None, :], c).max())
    return Event(label, tuple(p), t)


def witness_distance(included: Iterable[Event], excluded: Iterable[Event],
                     origin: Event, equidistant_pair: Optional[tuple] = None,
                     c: float = 1.0, restarts: int = 8) -> Optional[float]:
    """Smallest spatial distance from `origin` to the witness locus.

    The locus is the closure of all spatial positions admitting a witness
    time.  Returns None when it is empty.
    """
    included = list(included)
    excluded = list(excluded)
    if excluded and _excluded_dominated(included, excluded, c):
        return None
    dom = _search_domain(included, excluded, equidistant_pair, c)
    pts, gaps, _, dom = _grow_and_sample(included, excluded, dom, c)
    if len(pts) == 0:
        return None
    o = origin.x
    world = dom.embed(pts)
    d0 = np.linalg.norm(world - o, axis=1)
    order = np.argsort(d0)[:restarts]
    best = float(d0[order[0]])
    for k in order:
        t0 = float(_arrival(included, world[k][None, :], c).max())
        uv, t = _polish(included, excluded, dom, pts[k], t0,
                        lambda z, p: float(np.sum((p - o) ** 2)), c, 0.0)
        p = dom.embed(uv)[0]
        if feasibility_gap(included, excluded, p[None, :], c)[0] >= -1e-11:
            best = min(best, float(np.linalg.norm(p - o)))
    return best


# ---------------------------------------------------------------------------
# closed-form witness bounds

def witness_bound_fig2(d: float, eps: float, c: float = 1.0) -> float:
    """2εc(d−εc)/(d−4εc) for the finite-distance configuration."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if c <= 0 or d <= 4 * eps * c:
        raise ValueError(f"need d > 4*eps*c (d={d}, eps={eps}, c={c})")
    return 2 * eps * c * (d - eps * c) / (d - 4 * eps * c)


def witness_bound_fig3(d: float, v: float, c: float = 1.0) -> float:
    """dv(4√3c−3v)/(4c(c−√3v)) for the moving-device configurations."""
    if c <= 0 or v < 0 or v >= c / math.sqrt(3):
        raise ValueError(f"need 0 <= v < c/sqrt(3) (v={v}, c={c})")
    s3 = math.sqrt(3)
    return d * v * (4 * s3 * c - 3 * v) / (4 * c * (c - s3 * v))


def rhombus_witness_distance(d: float, t_excluded: float, c: float = 1.0) -> float:
    """Closed-form witness distance for the equilateral rhombus layout.

    The included apex sits at the origin, the excluded apex at distance d,
    and the remaining pair at distance d from both, measuring at time 0.
    The nearest witness position lies on the apex axis behind the included
    apex at distance r solving |P - B| = c*t_excluded + r + d, i.e.
    r = -k(2d+k)/(d+2k) with k = c*t_excluded.  Valid when the included apex
    measures less than d/c before the excluded one.
    """
    k = c * t_excluded
    if k > 0 or d + 2 * k <= 0:
        raise ValueError("need -d/2 < c*t_excluded <= 0")
    return -k * (2 * d + k) / (d + 2 * k)
