"""Convex payoff sets: hulls, halfspace intersections, clipping and membership.

Two-player sets are polygons kept in both vertex form (counter-clockwise) and
halfspace form ``lam . v <= k``; when all inputs are rational the arithmetic
is exact.  Sets in three or more dimensions are carried as halfspaces only,
with membership and dimension decided by linear programs.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .config import settings
from .game_core import StageGame
from .lp import linprog
from .lp.exact import linprog_exact
from .rational import format_fraction, rank_exact, rank_float


def _exact_point(p) -> bool:
    return all(isinstance(c, (Fraction, int)) and not isinstance(c, bool) for c in p)


def _canon(p, exact: bool):
    if exact:
        return tuple(Fraction(c) for c in p)
    return tuple(float(c) for c in p)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _merge_close(pts, tol):
    out = []
    for p in pts:
        if not any(max(abs(p[0] - q[0]), abs(p[1] - q[1])) <= tol for q in out):
            out.append(p)
    return out


def _hull_2d(points, tol):
    """Andrew's monotone chain: strictly convex CCW hull with duplicates merged.

    With ``tol > 0`` nearly coincident points are merged and nearly collinear
    middle points dropped (relative turn below ``tol``).
    """
    pts = sorted(set(points))
    if tol > 0:
        pts = _merge_close(pts, tol)
    if len(pts) <= 2:
        return pts

    def turns_left(o, a, b):
        c = _cross(o, a, b)
        if tol == 0:
            return c > 0
        la = math.hypot(a[0] - o[0], a[1] - o[1])
        lb = math.hypot(b[0] - o[0], b[1] - o[1])
        return c > tol * la * lb

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and not turns_left(out[-2], out[-1], p):
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(list(reversed(pts)))
    hull = lower[:-1] + upper[:-1]
    if not hull:
        # all points collinear: keep the two extremes
        return [pts[0], pts[-1]]
    return hull


def _polygon_halfspaces(verts, exact: bool):
    """Halfspaces of a CCW polygon (or of a segment / point)."""
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    if len(verts) == 1:
        (x, y), = verts
        return [((one, zero), x), ((-one, zero), -x), ((zero, one), y), ((zero, -one), -y)]
    if len(verts) == 2:
        p, q = verts
        d = (q[0] - p[0], q[1] - p[1])
        nrm = (d[1], -d[0])
        out = [(nrm, nrm[0] * p[0] + nrm[1] * p[1]),
               ((-nrm[0], -nrm[1]), -(nrm[0] * p[0] + nrm[1] * p[1])),
               (d, d[0] * q[0] + d[1] * q[1]),
               ((-d[0], -d[1]), -(d[0] * p[0] + d[1] * p[1]))]
        return out
    out = []
    for k, p in enumerate(verts):
        q = verts[(k + 1) % len(verts)]
        nrm = (q[1] - p[1], p[0] - q[0])
        out.append((nrm, nrm[0] * p[0] + nrm[1] * p[1]))
    return out


@dataclass(frozen=True, eq=False)
class PayoffPolytope:
    """Convex payoff set.

    Attributes
    ----------
    dim_space : ambient dimension n.
    vertices : CCW vertex list for n = 2 (empty tuple for n >= 3 or empty sets).
    halfspaces : tuple of ``(lam, k)`` meaning ``lam . v <= k``; normals need not be unit.
    exact : True when every coordinate is a Fraction.
    empty : True for the empty set.
    unbounded : True when the halfspaces do not bound a compact region; the
        vertex list then describes the intersection with a large box.
    affine_basis : ``(point, directions)`` record of the affine hull when known.
    strict_floors : floors recorded by ``clip_below(strict=True)``.
    label : free-form name used in reports and exports.
    """

    dim_space: int
    vertices: tuple = ()
    halfspaces: tuple = ()
    exact: bool = False
    empty: bool = False
    unbounded: bool = False
    affine_basis: tuple | None = None
    strict_floors: tuple | None = None
    label: str = ""
    meta: dict = field(default_factory=dict)

    # -- construction -------------------------------------------------
    @classmethod
    def from_points(cls, points: Iterable[Sequence], label: str = "") -> "PayoffPolytope":
        pts = [tuple(p) for p in points]
        if not pts:
            raise ValueError("need at least one point")
        n = len(pts[0])
        exact = all(_exact_point(p) for p in pts)
        pts = [_canon(p, exact) for p in pts]
        if n == 2:
            hull = _hull_2d(pts, 0 if exact else settings.tol)
            return cls._from_polygon(hull, exact, label)
        return _hull_nd(pts, exact, label)

    @classmethod
    def _from_polygon(cls, verts, exact, label="", **extra) -> "PayoffPolytope":
        if not verts:
            return cls(2, (), (), exact, empty=True, label=label, **extra)
        hs = _polygon_halfspaces(verts, exact)
        if len(verts) == 1:
            basis = (verts[0], ())
        elif len(verts) == 2:
            basis = (verts[0], ((verts[1][0] - verts[0][0], verts[1][1] - verts[0][1]),))
        else:
            basis = None
        return cls(2, tuple(verts), tuple(hs), exact, affine_basis=basis, label=label, **extra)

    @classmethod
    def empty_set(cls, n: int, label: str = "") -> "PayoffPolytope":
        return cls(n, (), (), True, empty=True, label=label)

    # -- queries -------------------------------------------------------
    @property
    def is_empty(self) -> bool:
        return self.empty

    def unit_halfspaces(self) -> list[tuple[np.ndarray, float]]:
        """Halfspaces with unit-norm float normals."""
        out = []
        for lam, k in self.halfspaces:
            v = np.asarray([float(c) for c in lam])
            s = float(np.linalg.norm(v))
            if s == 0:
                continue
            out.append((v / s, float(k) / s))
        return out

    def float_vertices(self) -> np.ndarray:
        return np.asarray([[float(c) for c in p] for p in self.vertices], dtype=float).reshape(-1, self.dim_space)

    def with_label(self, label: str) -> "PayoffPolytope":
        return replace(self, label=label)

    def to_csv(self, path=None) -> str:
        """One vertex per row; exact coordinates written as ``p/q``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"v{i + 1}" for i in range(self.dim_space)])
        for p in self.vertices:
            w.writerow([format_fraction(c) if isinstance(c, Fraction) else repr(float(c)) for c in p])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


# ---------------------------------------------------------------------------
# n >= 3
# ---------------------------------------------------------------------------

def _hull_nd(pts, exact, label):
    arr = np.asarray([[float(c) for c in p] for p in pts])
    n = arr.shape[1]
    origin = arr[0]
    diffs = arr - origin
    if exact:
        rows = [[Fraction(p[k]) - Fraction(pts[0][k]) for k in range(n)] for p in pts[1:]]
        rank = rank_exact(rows) if rows else 0
    else:
        rank = rank_float(diffs) if len(pts) > 1 else 0
    _, s, vt = np.linalg.svd(diffs, full_matrices=True)
    basis = vt[:rank]
    normal_space = vt[rank:]
    hs = []
    for nv in normal_space:
        c = float(nv @ origin)
        hs.append((tuple(nv), c))
        hs.append((tuple(-nv), -c))
    if rank >= 2:
        from scipy.spatial import ConvexHull

        coords = diffs @ basis.T
        hull = ConvexHull(coords)
        for eq in hull.equations:
            lam = eq[:-1] @ basis
            k = -eq[-1] + float(lam @ origin)
            hs.append((tuple(lam), k))
    elif rank == 1:
        d = basis[0]
        t = diffs @ d
        hs.append((tuple(d), float(t.max() + d @ origin)))
        hs.append((tuple(-d), float(-(t.min() + d @ origin))))
    hs = _dedupe_halfspaces(hs)
    return PayoffPolytope(n, (), tuple(hs), False, affine_basis=(tuple(origin), tuple(map(tuple, basis))),
                          label=label, meta={"points": tuple(pts)})


def _dedupe_halfspaces(hs):
    out = []
    for lam, k in hs:
        v = np.asarray(lam, dtype=float)
        s = np.linalg.norm(v)
        u, kk = v / s, k / s
        if not any(np.allclose(u, u2, atol=1e-10) and abs(kk - k2) < 1e-10 for u2, k2 in out):
            out.append((u, kk))
    return [(tuple(u), float(k)) for u, k in out]


# ---------------------------------------------------------------------------
# halfspace intersection in the plane
# ---------------------------------------------------------------------------

def _clip(poly, lam, k, exact, tol):
    """Clip a CCW polygon by ``lam . v <= k`` (Sutherland-Hodgman step)."""
    if not poly:
        return poly
    out = []
    m = len(poly)
    vals = [lam[0] * p[0] + lam[1] * p[1] - k for p in poly]
    for idx in range(m):
        p, q = poly[idx], poly[(idx + 1) % m]
        fp, fq = vals[idx], vals[(idx + 1) % m]
        p_in = fp <= tol
        if p_in:
            out.append(p)
        if (fp < -tol and fq > tol) or (fp > tol and fq < -tol):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def clip_polygon(verts: list, lam, k, tol: float = 0.0) -> list:
    """Clip a CCW vertex list by ``lam . v <= k``; returns the new vertex list."""
    return _clip(verts, lam, k, tol == 0, tol)


def polygon_from_vertices(verts, label: str = "", tol: float | None = None) -> PayoffPolytope:
    """PayoffPolytope from an unordered vertex list (float or exact)."""
    exact = all(_exact_point(p) for p in verts)
    ftol = 0 if exact else (settings.tol if tol is None else tol)
    hull = _hull_2d([_canon(p, exact) for p in verts], ftol)
    return PayoffPolytope._from_polygon(hull, exact, label)


def _bounded_normals(normals) -> bool:
    """Do the normals positively span the plane (no angular gap of pi or more)?"""
    angs = sorted(math.atan2(float(l[1]), float(l[0])) for l in normals if float(l[0]) or float(l[1]))
    if len(angs) < 3:
        return False
    gaps = [b - a for a, b in zip(angs, angs[1:])] + [angs[0] + 2 * math.pi - angs[-1]]
    return max(gaps) < math.pi - 1e-12


def intersect_halfspaces(halfspaces: Sequence[tuple[Sequence, object]], box: float = 1e6,
                         label: str = "", tol: float | None = None) -> PayoffPolytope:
    """Vertex form of ``{v in R^2 : lam . v <= k for all (lam, k)}``.

    Exact when every normal and offset is rational.  An unbounded region is
    truncated by the square ``[-box, box]^2`` and flagged ``unbounded``.
    """
    hs = [(tuple(l), k) for l, k in halfspaces]
    if any(len(l) != 2 for l, _ in hs):
        raise ValueError("intersect_halfspaces is two-dimensional")
    exact = all(_exact_point(l) and isinstance(k, (int, Fraction)) for l, k in hs)
    ftol = 0 if exact else (settings.tol if tol is None else tol)
    if exact:
        hs = [(tuple(Fraction(c) for c in l), Fraction(k)) for l, k in hs]
        b = Fraction(int(box))
    else:
        hs = [(tuple(float(c) for c in l), float(k)) for l, k in hs]
        b = float(box)
    poly = [(-b, -b), (b, -b), (b, b), (-b, b)]
    for lam, k in hs:
        if not (lam[0] or lam[1]):
            if k < -ftol:
                return PayoffPolytope.empty_set(2, label)
            continue
        s = 1 if exact else math.hypot(*lam)
        poly = _clip(poly, (lam[0] / s, lam[1] / s), k / s, exact, ftol)
        if not poly:
            return PayoffPolytope.empty_set(2, label)
    unbounded = not _bounded_normals([l for l, _ in hs])
    verts = _hull_2d([_canon(p, exact) for p in poly], ftol)
    out = PayoffPolytope._from_polygon(verts, exact, label)
    if unbounded:
        out = replace(out, unbounded=True)
    return out


# ---------------------------------------------------------------------------
# named sets and operations
# ---------------------------------------------------------------------------

def feasible_set(game: StageGame) -> PayoffPolytope:
    """Convex hull of the pure payoff vectors."""
    src = game.payoffs if game.exact else game.g
    pts = [tuple(src[a]) for a in game.profiles()]
    return PayoffPolytope.from_points(pts, label="F")


def add_halfspaces(poly: PayoffPolytope, extra, label: str | None = None) -> PayoffPolytope:
    """Intersection of ``poly`` with further halfspaces."""
    label = poly.label if label is None else label
    if poly.empty:
        return replace(poly, label=label)
    if poly.dim_space == 2:
        hs = list(poly.halfspaces) + [(tuple(l), k) for l, k in extra]
        out = intersect_halfspaces(hs, label=label)
        return replace(out, strict_floors=poly.strict_floors, meta=dict(poly.meta))
    hs = list(poly.halfspaces) + [(tuple(float(c) for c in l), float(k)) for l, k in extra]
    out = replace(poly, halfspaces=tuple(hs), affine_basis=None, label=label, meta={})
    if _chebyshev(out)[0] is None:
        return PayoffPolytope.empty_set(poly.dim_space, label)
    return out


def clip_below(poly: PayoffPolytope, floors: Sequence, strict: bool = False,
               label: str | None = None) -> PayoffPolytope:
    """``poly`` intersected with ``{v : v_i >= floors_i}`` (closure).

    Infinite floors are ignored.  With ``strict`` the floors are remembered so
    that ``contains(..., interior=True)`` treats them as open.
    """
    n = poly.dim_space
    extra = []
    for i, f in enumerate(floors):
        if f is None or (isinstance(f, float) and math.isinf(f) and f < 0):
            continue
        if isinstance(f, float) and math.isinf(f):
            return PayoffPolytope.empty_set(n, poly.label if label is None else label)
        lam = [0] * n
        lam[i] = -1
        if poly.exact and isinstance(f, (int, Fraction)):
            extra.append((tuple(Fraction(c) for c in lam), -Fraction(f)))
        else:
            extra.append((tuple(float(c) for c in lam), -float(f)))
    out = add_halfspaces(poly, extra, label)
    if strict:
        out = replace(out, strict_floors=tuple(floors))
    return out


def _lp_value(c, A, b, exact):
    if exact:
        return linprog_exact(c, A_ub=A, b_ub=b, free=[True] * len(c))
    return linprog(c, A_ub=A, b_ub=b)


def _chebyshev(poly: PayoffPolytope):
    """Centre and radius of the largest ball inside a halfspace-form set."""
    n = poly.dim_space
    hs = poly.unit_halfspaces()
    if not hs:
        return np.zeros(n), math.inf
    A = [list(u) + [1.0] for u, _ in hs]
    b = [k for _, k in hs]
    # cap the radius so that unbounded sets stay finite
    A.append([0.0] * n + [1.0])
    b.append(1e6)
    res = linprog([0.0] * n + [1.0], A_ub=A, b_ub=b, free=[True] * n + [False])
    if not res.ok or res.objective < -settings.lp_tol:
        return None, None
    return np.asarray(res.x[:n]), float(res.objective)


def contains(poly: PayoffPolytope, v: Sequence, interior: bool = False) -> bool:
    """Membership in the halfspace representation.

    ``interior=True`` asks for slack of at least 1e-9 on every halfspace (and
    on strict floors), which is only possible for full-dimensional sets.
    """
    if poly.empty:
        return False
    exact = poly.exact and _exact_point(v)
    if exact:
        vals = [sum(Fraction(l[k]) * Fraction(v[k]) for k in range(len(v))) - Fraction(kk)
                for l, kk in poly.halfspaces]
        if interior:
            if dimension(poly) < poly.dim_space:
                return False
            slack = Fraction(1, 10 ** 9)
            ok = all(val <= -slack * _norm_bound(l) for val, (l, _) in zip(vals, poly.halfspaces))
        else:
            ok = all(val <= 0 for val in vals)
    else:
        tol = settings.tol
        hs = poly.unit_halfspaces()
        vv = np.asarray([float(c) for c in v])
        if interior:
            if dimension(poly) < poly.dim_space:
                return False
            ok = all(u @ vv - k <= -tol for u, k in hs)
        else:
            ok = all(u @ vv - k <= tol for u, k in hs)
    if ok and interior and poly.strict_floors is not None:
        ok = all(f is None or float(v[i]) > float(f) for i, f in enumerate(poly.strict_floors))
    return ok


def _norm_bound(lam) -> Fraction:
    """Rational upper bound on the Euclidean norm of ``lam`` (the l1 norm)."""
    return sum(abs(Fraction(c)) for c in lam)


def contains_by_vertices(poly: PayoffPolytope, v: Sequence) -> bool:
    """Membership as a convex combination of the vertices (two-player sets)."""
    if poly.empty:
        return False
    verts = poly.vertices
    if not verts:
        raise ValueError("vertex membership needs a vertex representation")
    exact = poly.exact and _exact_point(v)
    m = len(verts)
    A_eq = [[p[k] for p in verts] for k in range(poly.dim_space)] + [[1] * m]
    b_eq = list(v) + [1]
    if exact:
        res = linprog_exact([0] * m, A_eq=A_eq, b_eq=b_eq)
    else:
        res = linprog([0.0] * m, A_eq=[[float(c) for c in r] for r in A_eq], b_eq=[float(c) for c in b_eq],
                      free=[False] * m)
    return res.ok


def dimension(poly: PayoffPolytope) -> int:
    """Affine dimension; -1 for the empty set."""
    if poly.empty:
        return -1
    if poly.dim_space == 2 and poly.vertices:
        m = len(poly.vertices)
        return min(m - 1, 2)
    if poly.affine_basis is not None:
        return len(poly.affine_basis[1])
    centre, radius = _chebyshev(poly)
    if centre is None:
        return -1
    if radius > settings.tol:
        return poly.dim_space
    # implicit equalities: halfspaces that cannot be made slack
    hs = poly.unit_halfspaces()
    A = [list(u) for u, _ in hs]
    b = [k for _, k in hs]
    tight = []
    for idx, (u, k) in enumerate(hs):
        res = linprog([-c for c in u], A_ub=A, b_ub=b)
        if res.ok and -res.objective >= k - settings.tol:
            tight.append(u)
    if not tight:
        return poly.dim_space
    return poly.dim_space - rank_float(np.asarray(tight))


def polygon_vertices_close(a: PayoffPolytope, b: PayoffPolytope, tol: float) -> bool:
    """Do two polygons have the same vertices up to ``tol`` (any order)?"""
    va, vb = a.float_vertices(), b.float_vertices()
    if va.shape != vb.shape:
        return False
    return all(np.min(np.max(np.abs(vb - p), axis=1)) <= tol for p in va)


def hausdorff_2d(a: PayoffPolytope, b: PayoffPolytope) -> float:
    """Hausdorff distance between two convex polygons (vertex-to-set distances)."""
    return max(_directed(a, b), _directed(b, a))


def _directed(a, b):
    worst = 0.0
    vb = b.float_vertices()
    for p in a.float_vertices():
        worst = max(worst, _point_polygon_distance(p, vb))
    return worst


def _point_polygon_distance(p, verts):
    if len(verts) == 1:
        return float(np.linalg.norm(p - verts[0]))
    inside = len(verts) >= 3 and all(
        _cross(verts[k], verts[(k + 1) % len(verts)], p) >= -1e-12 for k in range(len(verts)))
    if inside:
        return 0.0
    best = math.inf
    for k in range(len(verts)):
        s, e = verts[k], verts[(k + 1) % len(verts)]
        d = e - s
        t = 0.0 if not d.any() else min(1.0, max(0.0, float((p - s) @ d / (d @ d))))
        best = min(best, float(np.linalg.norm(p - (s + t * d))))
    return best


def support_value(poly: PayoffPolytope, lam: Sequence) -> float:
    """``max_{v in poly} lam . v`` over the vertex list (two-player sets)."""
    verts = poly.float_vertices()
    return float(np.max(verts @ np.asarray(lam, dtype=float)))
