"""Reconstruction of the discrete swept domain and quadrature on its parts.

The swept region of one time step is realized through the sign condition
``Phi_new * Phi_old <= 0`` on the bilinear interpolants, which is exact as
long as every point is crossed by the interface at most once during the
step (monotone sweep). Each background cell is split into four triangles
through its centroid; on a triangle both interpolants are replaced by the
affine interpolants of their vertex values, so all membership regions are
intersections of half planes and can be clipped exactly.

Products of the reconstruction:

* cut cells: convex polygon pieces, triangulated, with volume quadrature,
* interface segments of the new and old zero sets with line quadrature,
* the clipped skeleton: interior faces between two active cells restricted
  to the swept region,
* the range of the new-level values over the reconstructed domain, whose
  width is the travel-distance scale of the scheme.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .grid import AXIS_X, AXIS_Y, CartesianGrid, Cell, Face
from .levelset import DiscreteLevelSet, LevelSetField

OUTSIDE = "outside"
INSIDE = "inside"
CUT = "cut"

# A cell is active iff its clipped area exceeds this fraction of the cell
# area; strictly positive measure is unstable under floating point.
ACTIVE_AREA_FRACTION = 1e-12
# Individual polygon pieces below this fraction are slivers and dropped.
PIECE_AREA_FRACTION = 1e-14

Point = tuple[float, float]


class EmptyDomainError(RuntimeError):
    """Raised when the reconstructed swept domain contains no active cell."""


@dataclass
class CutCell:
    """One background cell's intersection with the swept domain."""

    owner: Cell
    triangles: list[tuple[Point, Point, Point, float]]
    vol_points: list[Point]
    vol_weights: list[float]
    total_area: float
    pieces: list[list[Point]] = dataclass_field(default_factory=list)

    @property
    def volume_quadrature(self):
        return list(zip(self.vol_points, self.vol_weights))


@dataclass
class InterfaceSegment:
    """A straight piece of the new or old discrete interface."""

    a: Point
    b: Point
    which: str  # "new" | "old"
    owner: Cell
    points: list[Point]
    weights: list[float]
    length: float

    @property
    def quadrature(self):
        return list(zip(self.points, self.weights))


@dataclass
class CutFace:
    """An interior face of the cut-cell mesh, clipped to the swept region."""

    face: Face
    a: Point
    b: Point
    points: list[Point]
    weights: list[float]
    length: float

    @property
    def kplus(self) -> Cell:
        return self.face.kplus

    @property
    def kminus(self) -> Cell:
        return self.face.kminus


@dataclass
class DomainReconstruction:
    grid: CartesianGrid
    dls: DiscreteLevelSet
    field: LevelSetField | None
    cut_cells: dict[Cell, CutCell]
    skeleton: list[CutFace]
    gamma_new: list[InterfaceSegment]
    gamma_old: list[InterfaceSegment]
    gamma_minus: float
    gamma_plus: float
    diagnostics: dict

    @property
    def active_cells(self):
        return self.cut_cells.keys()

    @property
    def gamma(self) -> float:
        return self.gamma_minus + self.gamma_plus

    def total_cut_area(self) -> float:
        return sum(c.total_area for c in self.cut_cells.values())

    def interface_length(self, which: str) -> float:
        segs = self.gamma_new if which == "new" else self.gamma_old
        return sum(s.length for s in segs)


# ---------------------------------------------------------------------------
# quadrature rules
# ---------------------------------------------------------------------------

# Barycentric points and weight fractions; exact for total degree <= order.
_TRI_RULES = {
    1: [((1 / 3, 1 / 3, 1 / 3), 1.0)],
    2: [
        ((2 / 3, 1 / 6, 1 / 6), 1 / 3),
        ((1 / 6, 2 / 3, 1 / 6), 1 / 3),
        ((1 / 6, 1 / 6, 2 / 3), 1 / 3),
    ],
    3: [
        ((1 / 3, 1 / 3, 1 / 3), -27 / 48),
        ((0.6, 0.2, 0.2), 25 / 48),
        ((0.2, 0.6, 0.2), 25 / 48),
        ((0.2, 0.2, 0.6), 25 / 48),
    ],
}

# Gauss-Legendre nodes/weights on [0, 1]; n points are exact to degree 2n-1.
_SEG_RULES = {
    1: ([0.5], [1.0]),
    2: (
        [0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)],
        [0.5, 0.5],
    ),
    3: (
        [0.5 - 0.5 * math.sqrt(0.6), 0.5, 0.5 + 0.5 * math.sqrt(0.6)],
        [5 / 18, 8 / 18, 5 / 18],
    ),
}


def triangle_area(p0: Point, p1: Point, p2: Point) -> float:
    return 0.5 * abs(
        (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])
    )


def triangle_quadrature(p0: Point, p1: Point, p2: Point, order: int):
    """Points and weights integrating total degree <= order exactly; weights sum to the area."""
    if order not in _TRI_RULES:
        raise ValueError(f"unsupported triangle quadrature order {order}")
    area = triangle_area(p0, p1, p2)
    pts, wts = [], []
    for (l0, l1, l2), wf in _TRI_RULES[order]:
        pts.append((
            l0 * p0[0] + l1 * p1[0] + l2 * p2[0],
            l0 * p0[1] + l1 * p1[1] + l2 * p2[1],
        ))
        wts.append(wf * area)
    return pts, wts


def polygon_quadrature(triangles, order: int):
    """Quadrature for a triangulated region, as (point, weight) pairs.

    ``triangles`` holds (p0, p1, p2) or (p0, p1, p2, area) tuples.
    """
    out = []
    for tri in triangles:
        pts, wts = triangle_quadrature(tri[0], tri[1], tri[2], order)
        out.extend(zip(pts, wts))
    return out


def segment_quadrature(a: Point, b: Point, order: int):
    """Gauss-Legendre rule along the segment; weights sum to its length."""
    if order not in _SEG_RULES:
        raise ValueError(f"unsupported segment quadrature order {order}")
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    ts, ws = _SEG_RULES[order]
    pts = [(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])) for t in ts]
    wts = [w * length for w in ws]
    return pts, wts, length


# ---------------------------------------------------------------------------
# affine clipping on triangles
# ---------------------------------------------------------------------------

def _clip_halfplane(poly, idx, sign):
    """Clip a polygon with per-vertex (x, y, vn, vo) against sign*values[idx] >= 0.

    Both carried values are affine on the polygon, so linear interpolation
    along the edges is exact and the crossing vertices carry exact values.
    """
    if not poly:
        return poly
    out = []
    n = len(poly)
    for k in range(n):
        p = poly[k]
        q = poly[(k + 1) % n]
        vp = sign * p[idx]
        vq = sign * q[idx]
        if vp >= 0.0:
            out.append(p)
            if vq < 0.0:
                t = vp / (vp - vq)
                out.append(_lerp(p, q, t))
        elif vq >= 0.0:
            t = vp / (vp - vq)
            out.append(_lerp(p, q, t))
    return out


def _lerp(p, q, t):
    return (
        p[0] + t * (q[0] - p[0]),
        p[1] + t * (q[1] - p[1]),
        p[2] + t * (q[2] - p[2]),
        p[3] + t * (q[3] - p[3]),
    )


def _polygon_area(poly) -> float:
    s = 0.0
    n = len(poly)
    for k in range(n):
        p = poly[k]
        q = poly[(k + 1) % n]
        s += p[0] * q[1] - q[0] * p[1]
    return 0.5 * abs(s)


def _zero_segment(pts, vals):
    """Zero set of the affine function with given vertex values on a triangle.

    Returns (a, b, edge) where edge is the triangle edge index when the
    segment coincides with a full edge, else None; or None when the zero
    set has no positive length inside the triangle.
    """
    scale = max(abs(vals[0]), abs(vals[1]), abs(vals[2]))
    if scale == 0.0:
        return None  # identically zero, no well-defined curve
    zero = [abs(v) <= 1e-14 * scale for v in vals]
    nz = zero.count(True)
    if nz == 3:
        return None
    if nz == 0 and (vals[0] > 0) == (vals[1] > 0) == (vals[2] > 0):
        return None
    if nz == 2:
        ia = zero.index(True)
        ib = zero.index(True, ia + 1)
        # edge index e connects vertices e and (e+1)%3
        edge = ia if (ia + 1) % 3 == ib else ib
        return pts[edge], pts[(edge + 1) % 3], edge
    if nz == 1:
        iz = zero.index(True)
        a, b = (iz + 1) % 3, (iz + 2) % 3
        if (vals[a] > 0) == (vals[b] > 0):
            return None  # touches only at the vertex
        t = vals[a] / (vals[a] - vals[b])
        p = _point_lerp(pts[a], pts[b], t)
        return pts[iz], p, None
    # no zero vertices, mixed signs: exactly two crossing edges
    crossings = []
    for e in range(3):
        va, vb = vals[e], vals[(e + 1) % 3]
        if (va > 0) != (vb > 0):
            t = va / (va - vb)
            crossings.append(_point_lerp(pts[e], pts[(e + 1) % 3], t))
    return crossings[0], crossings[1], None


def _point_lerp(p, q, t):
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


# ---------------------------------------------------------------------------
# per-cell reconstruction
# ---------------------------------------------------------------------------

def classify_cell(dls: DiscreteLevelSet, cell: Cell) -> str:
    """Membership classification from the corner signs of both levels.

    A bilinear function attains its extrema at the cell corners, so strict
    uniform corner signs decide the sign on the whole cell.
    """
    vn = dls.corner_values(cell, "new")
    vo = dls.corner_values(cell, "old")

    def uniform(vals):
        if all(v > 0.0 for v in vals):
            return 1
        if all(v < 0.0 for v in vals):
            return -1
        return 0
    sn, so = uniform(vn), uniform(vo)
    if sn != 0 and so != 0:
        return INSIDE if sn != so else OUTSIDE
    return CUT


def _fan(grid: CartesianGrid, cell: Cell):
    corners = grid.cell_vertices(cell)
    center = grid.cell_center(cell)
    return corners, center


def _full_cutcell(grid: CartesianGrid, cell: Cell, order: int) -> CutCell:
    corners, center = _fan(grid, cell)
    triangles = []
    vpts: list[Point] = []
    vwts: list[float] = []
    for k in range(4):
        tri = (corners[k], corners[(k + 1) % 4], center)
        area = triangle_area(*tri)
        triangles.append((*tri, area))
        pts, wts = triangle_quadrature(*tri, order)
        vpts.extend(pts)
        vwts.extend(wts)
    total = sum(t[3] for t in triangles)
    return CutCell(cell, triangles, vpts, vwts, total, pieces=[list(corners)])


def reconstruct_cell(dls: DiscreteLevelSet, cell: Cell, order: int = 2):
    """Clip one cell against the swept region.

    Returns (CutCell or None, raw segments). Raw segments are tuples
    (which, a, b, side) where side marks segments lying on a cell edge
    (0 bottom, 1 right, 2 top, 3 left) and is None for interior ones;
    side-marked segments still need the cross-cell ownership resolution
    done by :func:`build_domain`.
    """
    grid = dls.grid
    cls = classify_cell(dls, cell)
    if cls == OUTSIDE:
        return None, []
    if cls == INSIDE:
        return _full_cutcell(grid, cell, order), []

    corners, center = _fan(grid, cell)
    vn = dls.corner_values(cell, "new")
    vo = dls.corner_values(cell, "old")
    cn = 0.25 * (vn[0] + vn[1] + vn[2] + vn[3])
    co = 0.25 * (vo[0] + vo[1] + vo[2] + vo[3])
    cell_area = grid.hx * grid.hy

    pieces: list[list[Point]] = []
    triangles: list[tuple[Point, Point, Point, float]] = []
    vpts: list[Point] = []
    vwts: list[float] = []
    segments = []

    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        tri_pts = (a, b, center)
        tri_n = (vn[k], vn[(k + 1) % 4], cn)
        tri_o = (vo[k], vo[(k + 1) % 4], co)

        # swept-region pieces: opposite signs of the two levels
        base = [
            (a[0], a[1], tri_n[0], tri_o[0]),
            (b[0], b[1], tri_n[1], tri_o[1]),
            (center[0], center[1], cn, co),
        ]
        for sn, so in ((-1.0, 1.0), (1.0, -1.0)):
            poly = _clip_halfplane(base, 2, sn)
            poly = _clip_halfplane(poly, 3, so)
            if len(poly) < 3:
                continue
            area = _polygon_area(poly)
            if area <= PIECE_AREA_FRACTION * cell_area:
                continue
            ring = [(p[0], p[1]) for p in poly]
            pieces.append(ring)
            for m in range(1, len(ring) - 1):
                tri = (ring[0], ring[m], ring[m + 1])
                t_area = triangle_area(*tri)
                if t_area <= 1e-16 * cell_area:
                    continue
                triangles.append((*tri, t_area))
                pts, wts = triangle_quadrature(*tri, order)
                vpts.extend(pts)
                vwts.extend(wts)

        # interface pieces: zero sets of each level on this triangle
        for which, vals in (("new", tri_n), ("old", tri_o)):
            seg = _zero_segment(tri_pts, vals)
            if seg is None:
                continue
            sa, sb, edge = seg
            if edge == 0:
                side = k  # lies on the cell boundary edge of this fan triangle
            elif edge == 1:
                side = None  # diagonal b-center, owned by this triangle
            elif edge == 2:
                continue  # diagonal center-a, already emitted by triangle k-1
            else:
                side = None
            if math.hypot(sb[0] - sa[0], sb[1] - sa[1]) <= 1e-14 * grid.h:
                continue
            segments.append((which, sa, sb, side))

    total = sum(t[3] for t in triangles)
    if total <= ACTIVE_AREA_FRACTION * cell_area:
        return None, segments
    return CutCell(cell, triangles, vpts, vwts, total, pieces=pieces), segments


# ---------------------------------------------------------------------------
# whole-domain assembly of the geometry
# ---------------------------------------------------------------------------

def _classify_all(dls: DiscreteLevelSet) -> np.ndarray:
    """Vectorized classification, 0 outside / 1 inside / 2 cut, shape (nx, ny)."""
    def corner_sign(nodes):
        pos = nodes > 0.0
        neg = nodes < 0.0
        allpos = pos[:-1, :-1] & pos[1:, :-1] & pos[1:, 1:] & pos[:-1, 1:]
        allneg = neg[:-1, :-1] & neg[1:, :-1] & neg[1:, 1:] & neg[:-1, 1:]
        sign = np.zeros(allpos.shape, dtype=np.int8)
        sign[allpos] = 1
        sign[allneg] = -1
        return sign

    sn = corner_sign(dls.node_new)
    so = corner_sign(dls.node_old)
    out = np.full(sn.shape, 2, dtype=np.int8)
    decided = (sn != 0) & (so != 0)
    out[decided & (sn != so)] = 1
    out[decided & (sn == so)] = 0
    return out


def _face_membership_intervals(va_n, vb_n, va_o, vb_o):
    """Subintervals of [0,1] where the product of the two linear restrictions is <= 0."""
    cuts = [0.0, 1.0]
    for va, vb in ((va_n, vb_n), (va_o, vb_o)):
        if (va > 0.0 and vb < 0.0) or (va < 0.0 and vb > 0.0):
            cuts.append(va / (va - vb))
    cuts.sort()
    kept = []
    for t0, t1 in zip(cuts[:-1], cuts[1:]):
        if t1 - t0 <= 1e-12:
            continue
        tm = 0.5 * (t0 + t1)
        pn = va_n + tm * (vb_n - va_n)
        po = va_o + tm * (vb_o - va_o)
        if pn * po <= 0.0:
            if kept and kept[-1][1] == t0:
                kept[-1] = (kept[-1][0], t1)
            else:
                kept.append((t0, t1))
    return kept


def _face_upwind_cell(dls: DiscreteLevelSet, field: LevelSetField | None, face: Face) -> Cell:
    """Which side of a face the sweep comes from, used to assign face-aligned
    interface segments to a single owner.

    Uses the backward-difference velocity direction (mode independent); the
    analytic field, when available, supplies the speed sign instead.
    """
    a, b = dls.grid.face_endpoints(face)
    mid = (0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]))
    ax = 0 if face.axis == AXIS_X else 1
    gp = dls.gradient_in_cell(face.kplus, mid, "new")[ax]
    gm = dls.gradient_in_cell(face.kminus, mid, "new")[ax]
    g = 0.5 * (gp + gm)
    if field is not None:
        speed = field.normal_velocity(mid, dls.t_new)
    else:
        speed = -(dls.value_in_cell(face.kplus, mid, "new")
                  - dls.value_in_cell(face.kplus, mid, "old"))
    return face.kplus if speed * g >= 0.0 else face.kminus


def build_domain(dls: DiscreteLevelSet, grid: CartesianGrid,
                 field: LevelSetField | None = None, order: int = 2) -> DomainReconstruction:
    """Reconstruct the swept domain, interfaces and clipped skeleton.

    ``field`` is optional; it is kept on the result for velocity evaluation
    downstream and refines the upwind tie-break for interface pieces that
    lie exactly on grid faces.
    """
    if grid is not dls.grid:
        raise ValueError("discrete level set was sampled on a different grid")
    labels = _classify_all(dls)
    cut_cells: dict[Cell, CutCell] = {}
    gamma_new: list[InterfaceSegment] = []
    gamma_old: list[InterfaceSegment] = []
    # face-aligned segments get resolved once activity is known:
    # key -> (which, a, b, candidate cells)
    pending: dict = {}
    diagnostics = {"demoted_cells": 0, "dropped_face_segments": 0,
                   "sign_varying_faces": 0}

    for j in range(grid.ny):
        for i in range(grid.nx):
            lab = labels[i, j]
            if lab == 0:
                continue
            cell = (i, j)
            if lab == 1:
                cut_cells[cell] = _full_cutcell(grid, cell, order)
                continue
            cc, raw = reconstruct_cell(dls, cell, order)
            if cc is not None:
                cut_cells[cell] = cc
            elif raw:
                diagnostics["demoted_cells"] += 1
            for which, a, b, side in raw:
                if side is None:
                    if cc is None:
                        continue
                    _append_segment(gamma_new if which == "new" else gamma_old,
                                    which, a, b, cell, order)
                else:
                    key = (which,) + _face_key(grid, cell, side)
                    entry = pending.setdefault(key, [a, b, []])
                    entry[2].append(cell)

    for key, (a, b, cells) in sorted(pending.items(), key=lambda kv: kv[0]):
        which, boundary, axis, i, j = key
        if boundary:
            owner = cells[0] if cells[0] in cut_cells else None
        else:
            face = Face(axis, i, j)
            owner = _face_upwind_cell(dls, field, face)
            if owner not in cut_cells:
                other = face.kminus if owner == face.kplus else face.kplus
                owner = other if other in cut_cells else None
        if owner is None:
            diagnostics["dropped_face_segments"] += 1
            continue
        _append_segment(gamma_new if which == "new" else gamma_old,
                        which, a, b, owner, order)

    if not cut_cells:
        raise EmptyDomainError(
            "no active cells: the zero sets of the two level-set samples do not "
            "sweep any part of the grid")

    skeleton: list[CutFace] = []
    for face in grid.interior_faces():
        if face.kplus not in cut_cells or face.kminus not in cut_cells:
            continue
        a, b = grid.face_endpoints(face)
        ia, ja = _vertex_index(grid, a)
        ib, jb = _vertex_index(grid, b)
        va_n = float(dls.node_new[ia, ja])
        vb_n = float(dls.node_new[ib, jb])
        va_o = float(dls.node_old[ia, ja])
        vb_o = float(dls.node_old[ib, jb])
        for t0, t1 in _face_membership_intervals(va_n, vb_n, va_o, vb_o):
            pa = _point_lerp(a, b, t0)
            pb = _point_lerp(a, b, t1)
            pts, wts, length = segment_quadrature(pa, pb, order)
            if length <= 1e-12 * grid.h:
                continue
            skeleton.append(CutFace(face, pa, pb, pts, wts, length))

    gamma_minus, gamma_plus = _phi_range(dls, cut_cells)
    return DomainReconstruction(
        grid=grid, dls=dls, field=field, cut_cells=cut_cells,
        skeleton=skeleton, gamma_new=gamma_new, gamma_old=gamma_old,
        gamma_minus=gamma_minus, gamma_plus=gamma_plus,
        diagnostics=diagnostics)


def _append_segment(store, which, a, b, owner: Cell, order: int):
    pts, wts, length = segment_quadrature(a, b, order)
    store.append(InterfaceSegment(a, b, which, owner, pts, wts, length))


def _face_key(grid: CartesianGrid, cell: Cell, side: int):
    """(boundary?, axis, i, j) of the face on the given side of the cell."""
    i, j = cell
    if side == 0:  # bottom
        return (j == 0, AXIS_Y, i, j - 1)
    if side == 1:  # right
        return (i == grid.nx - 1, AXIS_X, i, j)
    if side == 2:  # top
        return (j == grid.ny - 1, AXIS_Y, i, j)
    return (i == 0, AXIS_X, i - 1, j)  # left


def _vertex_index(grid: CartesianGrid, p: Point) -> tuple[int, int]:
    i = int(round((p[0] - grid.origin[0]) / grid.hx))
    j = int(round((p[1] - grid.origin[1]) / grid.hy))
    return i, j


def _phi_range(dls: DiscreteLevelSet, cut_cells: dict[Cell, CutCell]):
    """Extrema of the new-level values over the reconstructed domain,
    scanned at the piece vertices and the volume quadrature points."""
    lo = math.inf
    hi = -math.inf
    for cell, cc in cut_cells.items():
        for ring in cc.pieces:
            for p in ring:
                v = dls.value_in_cell(cell, p, "new")
                lo = min(lo, v)
                hi = max(hi, v)
        for p in cc.vol_points:
            v = dls.value_in_cell(cell, p, "new")
            lo = min(lo, v)
            hi = max(hi, v)
    return -lo, hi


# ---------------------------------------------------------------------------
# debug dump
# ---------------------------------------------------------------------------

def write_geometry_dump(domain: DomainReconstruction, path: str) -> None:
    """Line-based text dump: one record per cut cell and per interface segment.

    Cut-cell vertices are listed as consecutive triangles (nverts = 3 * ntri);
    the cells are generally non-convex unions, so no single outline exists.
    """
    with open(path, "w") as fh:
        for (i, j), cc in domain.cut_cells.items():
            coords = []
            for p0, p1, p2, _ in cc.triangles:
                coords.extend((p0[0], p0[1], p1[0], p1[1], p2[0], p2[1]))
            vals = " ".join(f"{c:.17g}" for c in coords)
            fh.write(f"cutcell {i} {j} {cc.total_area:.17g} {vals}\n")
        for seg in domain.gamma_new + domain.gamma_old:
            fh.write(
                f"segment {seg.which} {seg.a[0]:.17g} {seg.a[1]:.17g} "
                f"{seg.b[0]:.17g} {seg.b[1]:.17g}\n")
