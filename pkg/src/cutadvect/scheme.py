"""Unfitted DG discretization of one advection step and its post-processing.

The discrete unknown lives on the active background cells as broken
polynomials. One step couples three bilinear-form blocks,

* a mass block over the new interface,
* an upwind flux block over the clipped skeleton, scaled by tau / gamma,
* a volume transport block over the cut cells (zero for degree 0),

against a right-hand side carrying the old data over the old interface.
Testing with the global constant makes the flux block telescope, which is
the discrete global conservation law; the assembly keeps the blocks
separate so that identity can be checked directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .cutgeom import CutFace, DomainReconstruction
from .grid import Cell
from .levelset import VelocityMode, make_weight_provider


@dataclass(frozen=True)
class DGSpace:
    """Broken scaled monomials of total degree <= k on the active cells.

    Basis functions on a cell are ((x-xc)/hx)^a ((y-yc)/hy)^b with a+b <= k,
    defined on the full background cell, not the cut part.
    """

    domain: DomainReconstruction
    degree: int = 0

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("polynomial degree must be >= 0")
        order = sorted(self.domain.active_cells,
                       key=self.domain.grid.cell_order)
        object.__setattr__(self, "_cells", order)
        object.__setattr__(self, "_block", {c: n * self.dofs_per_cell
                                            for n, c in enumerate(order)})
        exps = [(a, d - a) for d in range(self.degree + 1)
                for a in range(d, -1, -1)]
        object.__setattr__(self, "_exps", exps)

    @property
    def dofs_per_cell(self) -> int:
        return (self.degree + 1) * (self.degree + 2) // 2

    @property
    def ndofs(self) -> int:
        return len(self._cells) * self.dofs_per_cell

    @property
    def cells(self) -> list[Cell]:
        return list(self._cells)

    def block(self, cell: Cell) -> int:
        return self._block[cell]

    def basis_at(self, cell: Cell, x) -> np.ndarray:
        g = self.domain.grid
        cx, cy = g.cell_center(cell)
        sx = (x[0] - cx) / g.hx
        sy = (x[1] - cy) / g.hy
        return np.array([sx ** a * sy ** b for a, b in self._exps])

    def basis_grad_at(self, cell: Cell, x) -> np.ndarray:
        g = self.domain.grid
        cx, cy = g.cell_center(cell)
        sx = (x[0] - cx) / g.hx
        sy = (x[1] - cy) / g.hy
        out = np.zeros((len(self._exps), 2))
        for n, (a, b) in enumerate(self._exps):
            if a > 0:
                out[n, 0] = a * sx ** (a - 1) * sy ** b / g.hx
            if b > 0:
                out[n, 1] = b * sx ** a * sy ** (b - 1) / g.hy
        return out

    def evaluate(self, solution: np.ndarray, cell: Cell, x) -> float:
        lo = self.block(cell)
        coeffs = solution[lo:lo + self.dofs_per_cell]
        return float(coeffs @ self.basis_at(cell, x))


@dataclass
class SchemeParams:
    """Step parameters; gamma normally comes from the domain reconstruction.

    ``quad_order`` must match the order the geometry was built with (the
    reconstruction attaches its quadrature rules); assembly checks this.
    """

    tau: float
    gamma: float
    eps_reg: float = 0.0
    velocity_mode: VelocityMode = VelocityMode.ANALYTIC_NORMAL
    quad_order: int = 2

    def __post_init__(self):
        if self.tau <= 0.0:
            raise ValueError("tau must be positive")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        if self.eps_reg < 0.0:
            raise ValueError("eps_reg must be >= 0")


@dataclass
class AssembledSystem:
    matrix: linalg.SparseMatrix
    rhs: np.ndarray
    ndofs: int


@dataclass
class SchemeBlocks:
    """The assembled system split by origin, for diagnostics and tests."""

    mass: linalg.SparseMatrix
    flux: linalg.SparseMatrix
    volume: linalg.SparseMatrix
    regularization: linalg.SparseMatrix
    rhs: np.ndarray
    ndofs: int
    sign_varying_faces: int

    def combined(self) -> AssembledSystem:
        rows, cols, vals = [], [], []
        for m in (self.mass, self.flux, self.volume, self.regularization):
            r = np.repeat(np.arange(m.nrows), np.diff(m.indptr))
            rows.append(r)
            cols.append(m.indices)
            vals.append(m.values)
        mat = linalg.from_triplet_arrays(
            self.ndofs, self.ndofs,
            np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))
        return AssembledSystem(mat, self.rhs.copy(), self.ndofs)


def upwind_side(face: CutFace, signed_weight: float) -> Cell:
    """Cell supplying the upwind trace: the plus side when the averaged
    normal weight is >= 0 (ties included), else the minus side."""
    return face.kplus if signed_weight >= 0.0 else face.kminus


def face_mean_weight(domain: DomainReconstruction, face: CutFace, weight) -> float:
    """Average of the two one-sided weights, dotted with the face normal and
    integrated over the clipped face (the per-face upwind selector)."""
    nu = face.face.normal
    total = 0.0
    for (x, w) in zip(face.points, face.weights):
        wp = weight(face.kplus, x)
        wm = weight(face.kminus, x)
        total += w * 0.5 * ((wp[0] + wm[0]) * nu[0] + (wp[1] + wm[1]) * nu[1])
    return total


def assemble_blocks(domain: DomainReconstruction, space: DGSpace,
                    params: SchemeParams, u_old, weight=None) -> SchemeBlocks:
    """Assemble all blocks of the step system.

    ``u_old`` is any callable x -> value on the old interface. ``weight``
    maps (cell, x) to the velocity-times-gradient-magnitude vector; by
    default it is built from the reconstruction's level-set data and
    params.velocity_mode.
    """
    if weight is None:
        weight = make_weight_provider(domain.dls, domain.field,
                                      params.velocity_mode, params.tau)
    for segs in (domain.gamma_new, domain.gamma_old):
        if segs and len(segs[0].points) != params.quad_order:
            raise ValueError(
                f"geometry carries {len(segs[0].points)}-point segment rules "
                f"but params.quad_order = {params.quad_order}; rebuild the "
                "domain with the matching order")
    n = space.ndofs
    npc = space.dofs_per_cell
    scale = params.tau / params.gamma

    mass_r, mass_c, mass_v = [], [], []
    for seg in domain.gamma_new:
        lo = space.block(seg.owner)
        for (x, w) in zip(seg.points, seg.weights):
            phi = space.basis_at(seg.owner, x)
            for i in range(npc):
                for j in range(npc):
                    mass_r.append(lo + i)
                    mass_c.append(lo + j)
                    mass_v.append(w * phi[i] * phi[j])

    flux_r, flux_c, flux_v = [], [], []
    sign_varying = 0
    for cf in domain.skeleton:
        if cf.kplus not in domain.cut_cells or cf.kminus not in domain.cut_cells:
            raise RuntimeError(
                f"skeleton face {cf.face} touches an inactive cell; "
                "geometry reconstruction is inconsistent")
        nu = cf.face.normal
        avg = []
        for x in cf.points:
            wp = weight(cf.kplus, x)
            wm = weight(cf.kminus, x)
            avg.append(0.5 * ((wp[0] + wm[0]) * nu[0] + (wp[1] + wm[1]) * nu[1]))
        mean = sum(w * a for w, a in zip(cf.weights, avg))
        if any(a > 0 for a in avg) and any(a < 0 for a in avg):
            sign_varying += 1
        up = upwind_side(cf, mean)
        lo_up = space.block(up)
        lo_p = space.block(cf.kplus)
        lo_m = space.block(cf.kminus)
        for (x, w, a) in zip(cf.points, cf.weights, avg):
            bu = space.basis_at(up, x)
            bp = space.basis_at(cf.kplus, x)
            bm = space.basis_at(cf.kminus, x)
            c = scale * w * a
            for i in range(npc):
                for j in range(npc):
                    flux_r.append(lo_p + i)
                    flux_c.append(lo_up + j)
                    flux_v.append(c * bp[i] * bu[j])
                    flux_r.append(lo_m + i)
                    flux_c.append(lo_up + j)
                    flux_v.append(-c * bm[i] * bu[j])

    vol_r, vol_c, vol_v = [], [], []
    if space.degree > 0:  # gradient of the constant basis vanishes
        for cell, cc in domain.cut_cells.items():
            lo = space.block(cell)
            for (x, w) in zip(cc.vol_points, cc.vol_weights):
                wv = weight(cell, x)
                b = space.basis_at(cell, x)
                gb = space.basis_grad_at(cell, x)
                for i in range(npc):
                    adv = wv[0] * gb[i, 0] + wv[1] * gb[i, 1]
                    for j in range(npc):
                        vol_r.append(lo + i)
                        vol_c.append(lo + j)
                        vol_v.append(-scale * w * adv * b[j])

    reg_r, reg_c, reg_v = [], [], []
    if params.eps_reg > 0.0:
        for cell, cc in domain.cut_cells.items():
            lo = space.block(cell)
            for (x, w) in zip(cc.vol_points, cc.vol_weights):
                b = space.basis_at(cell, x)
                for i in range(npc):
                    for j in range(npc):
                        reg_r.append(lo + i)
                        reg_c.append(lo + j)
                        reg_v.append(params.eps_reg * w * b[i] * b[j])

    rhs = np.zeros(n)
    for seg in domain.gamma_old:
        lo = space.block(seg.owner)
        for (x, w) in zip(seg.points, seg.weights):
            phi = space.basis_at(seg.owner, x)
            val = u_old(x)
            for i in range(npc):
                rhs[lo + i] += w * val * phi[i]

    def build(r, c, v):
        return linalg.from_triplet_arrays(n, n, r, c, v)

    return SchemeBlocks(build(mass_r, mass_c, mass_v),
                        build(flux_r, flux_c, flux_v),
                        build(vol_r, vol_c, vol_v),
                        build(reg_r, reg_c, reg_v),
                        rhs, n, sign_varying)


def assemble(domain: DomainReconstruction, space: DGSpace, params: SchemeParams,
             u_old, weight=None) -> AssembledSystem:
    return assemble_blocks(domain, space, params, u_old, weight).combined()


def solve_step(domain: DomainReconstruction, space: DGSpace, params: SchemeParams,
               u_old, weight=None, tol: float = linalg.DEFAULT_TOL,
               force_iterative: bool = False):
    """Assemble and solve one step; returns (solution vector, SolveReport)."""
    system = assemble(domain, space, params, u_old, weight)
    if system.ndofs <= linalg.DIRECT_SIZE_LIMIT and not force_iterative:
        x = linalg.solve_direct(system.matrix, system.rhs)
        rhs_norm = float(np.linalg.norm(system.rhs))
        res = float(np.linalg.norm(system.matrix.matvec(x) - system.rhs))
        report = linalg.SolveReport("direct", 0,
                                    res / rhs_norm if rhs_norm else res,
                                    params.eps_reg)
        return x, report
    try:
        x, report = linalg.solve_iterative(system.matrix, system.rhs, tol=tol)
    except linalg.IterationError as exc:
        raise RuntimeError(
            f"linear solve failed: {exc}; if the system is singular "
            "(unresolved domain boundary) retry with eps_reg > 0") from exc
    report.regularization = params.eps_reg
    return x, report


def interface_mass(domain: DomainReconstruction, space: DGSpace,
                   solution: np.ndarray, which: str = "new") -> float:
    """Quadrature of the traced DG solution over the chosen interface."""
    segs = domain.gamma_new if which == "new" else domain.gamma_old
    total = 0.0
    for seg in segs:
        for (x, w) in zip(seg.points, seg.weights):
            total += w * space.evaluate(solution, seg.owner, x)
    return total


def old_data_mass(domain: DomainReconstruction, u_old) -> float:
    """Mass that enters the step: quadrature of the given data over the old interface."""
    total = 0.0
    for seg in domain.gamma_old:
        for (x, w) in zip(seg.points, seg.weights):
            total += w * u_old(x)
    return total


def error_norms(domain: DomainReconstruction, space: DGSpace,
                solution: np.ndarray, exact) -> tuple[float, float, float]:
    """L1, L2 and Linf distance to ``exact`` on the new interface."""
    l1 = 0.0
    l2 = 0.0
    linf = 0.0
    for seg in domain.gamma_new:
        for (x, w) in zip(seg.points, seg.weights):
            err = abs(space.evaluate(solution, seg.owner, x) - exact(x))
            l1 += w * err
            l2 += w * err * err
            linf = max(linf, err)
    return l1, math.sqrt(l2), linf
