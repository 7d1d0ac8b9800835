"""Analytic and discretized level-set descriptions of the moving curve.

An analytic field knows its value, spatial gradient and time derivative
at any space-time point. A :class:`DiscreteLevelSet` holds the bilinear
nodal interpolant of the field at the two time levels of one step and is
the only geometry input the reconstruction and the scheme ever see.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grid import CartesianGrid, Cell

# Gradients below this (relative to the field's natural length scale) are
# treated as vanishing. The continuous problem assumes a nonvanishing
# gradient, so hitting this is a usage error, not a feature.
GRAD_TOL = 1e-12

# Nodal values within this relative tolerance of zero are snapped to zero,
# so interfaces that hit grid vertices up to rounding (aligned strips,
# extents that are not exact binary fractions) classify deterministically.
SNAP_TOL = 1e-12


class VelocityMode(enum.Enum):
    """How the scheme obtains the interface velocity."""

    ANALYTIC_NORMAL = "analytic"
    LEVELSET_BACKWARD_DIFFERENCE = "lsdiff"


class LevelSetField:
    """Base class for analytic space-time level sets Phi(x, t)."""

    def evaluate(self, x, t: float) -> tuple[float, tuple[float, float], float]:
        """Return (value, spatial gradient, time derivative) at (x, t)."""
        raise NotImplementedError

    def normal_velocity(self, x, t: float) -> float:
        """Speed of the zero set along its outward normal, -Phi_t / |grad Phi|."""
        _, grad, dt = self.evaluate(x, t)
        norm = math.hypot(grad[0], grad[1])
        return -dt / norm


@dataclass(frozen=True)
class ShrinkingCircle(LevelSetField):
    """Circle of initial radius r0 shrinking with constant normal speed.

    Phi(x, t) = |x - center| - (r0 - speed * t), a signed distance function.
    """

    center: tuple[float, float] = (0.0, 0.0)
    r0: float = 1.0
    speed: float = 1.0

    def evaluate(self, x, t):
        dx = x[0] - self.center[0]
        dy = x[1] - self.center[1]
        r = math.hypot(dx, dy)
        if r < GRAD_TOL * max(self.r0, 1.0):
            raise ValueError("level-set gradient undefined at the circle center")
        return r - (self.r0 - self.speed * t), (dx / r, dy / r), self.speed

    def radius(self, t: float) -> float:
        return self.r0 - self.speed * t


@dataclass(frozen=True)
class TranslatingCircle(LevelSetField):
    """Circle of fixed radius whose center moves with a constant velocity."""

    center0: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    velocity: tuple[float, float] = (1.0, 0.0)

    def center(self, t: float) -> tuple[float, float]:
        return (self.center0[0] + self.velocity[0] * t, self.center0[1] + self.velocity[1] * t)

    def evaluate(self, x, t):
        cx, cy = self.center(t)
        dx = x[0] - cx
        dy = x[1] - cy
        r = math.hypot(dx, dy)
        if r < GRAD_TOL * max(self.radius, 1.0):
            raise ValueError("level-set gradient undefined at the circle center")
        nu = (dx / r, dy / r)
        dt = -(self.velocity[0] * nu[0] + self.velocity[1] * nu[1])
        return r - self.radius, nu, dt


@dataclass(frozen=True)
class Affine1D(LevelSetField):
    """Point moving right with constant speed, Phi(x, t) = x - speed * t.

    Works for scalar x or for 2D points (the y-coordinate is inert), which
    embeds the one-dimensional model on an Nx1 strip.
    """

    speed: float = 1.0

    def evaluate(self, x, t):
        x0 = x[0] if hasattr(x, "__len__") else x
        return x0 - self.speed * t, (1.0, 0.0), -self.speed


class DiscreteLevelSet:
    """Bilinear nodal interpolant of the level set at the two time levels.

    Immutable after construction. ``node_new[i, j]`` is Phi(vertex(i,j), t_new)
    and ``node_old`` the same at t_old = t_new - tau.
    """

    def __init__(self, grid: CartesianGrid, node_new: np.ndarray, node_old: np.ndarray,
                 t_new: float, t_old: float):
        node_new = np.asarray(node_new, dtype=float)
        node_old = np.asarray(node_old, dtype=float)
        expected = (grid.nx + 1, grid.ny + 1)
        if node_new.shape != expected or node_old.shape != expected:
            raise ValueError(f"node arrays must have shape {expected}")
        self.grid = grid
        self.node_new = _snap_zeros(node_new)
        self.node_old = _snap_zeros(node_old)
        self.node_new.setflags(write=False)
        self.node_old.setflags(write=False)
        self.t_new = float(t_new)
        self.t_old = float(t_old)

    @property
    def tau(self) -> float:
        return self.t_new - self.t_old

    def corner_values(self, cell: Cell, level: str) -> tuple[float, float, float, float]:
        """Nodal values at the cell corners in counter-clockwise order."""
        i, j = cell
        nodes = self.node_new if level == "new" else self.node_old
        return (
            float(nodes[i, j]),
            float(nodes[i + 1, j]),
            float(nodes[i + 1, j + 1]),
            float(nodes[i, j + 1]),
        )

    def value_in_cell(self, cell: Cell, x, level: str = "new") -> float:
        v00, v10, v11, v01 = self.corner_values(cell, level)
        s, t = self._local(cell, x)
        return (v00 * (1 - s) * (1 - t) + v10 * s * (1 - t)
                + v01 * (1 - s) * t + v11 * s * t)

    def gradient_in_cell(self, cell: Cell, x, level: str = "new") -> tuple[float, float]:
        v00, v10, v11, v01 = self.corner_values(cell, level)
        s, t = self._local(cell, x)
        gx = ((v10 - v00) * (1 - t) + (v11 - v01) * t) / self.grid.hx
        gy = ((v01 - v00) * (1 - s) + (v11 - v10) * s) / self.grid.hy
        return (gx, gy)

    def value(self, x, level: str = "new") -> float:
        return self.value_in_cell(self.grid.locate(x), x, level)

    def gradient(self, x, level: str = "new") -> tuple[float, float]:
        return self.gradient_in_cell(self.grid.locate(x), x, level)

    def _local(self, cell: Cell, x) -> tuple[float, float]:
        i, j = cell
        g = self.grid
        return ((x[0] - (g.origin[0] + i * g.hx)) / g.hx,
                (x[1] - (g.origin[1] + j * g.hy)) / g.hy)


def _snap_zeros(values: np.ndarray) -> np.ndarray:
    scale = float(np.max(np.abs(values))) or 1.0
    out = values.copy()
    out[np.abs(out) < SNAP_TOL * scale] = 0.0
    return out


def interpolate(field: LevelSetField, grid: CartesianGrid,
                t_new: float, t_old: float) -> DiscreteLevelSet:
    """Sample the analytic field at all grid vertices at the two time levels."""
    node_new = np.empty((grid.nx + 1, grid.ny + 1))
    node_old = np.empty_like(node_new)
    for i in range(grid.nx + 1):
        for j in range(grid.ny + 1):
            v = grid.vertex(i, j)
            node_new[i, j] = field.evaluate(v, t_new)[0]
            node_old[i, j] = field.evaluate(v, t_old)[0]
    return DiscreteLevelSet(grid, node_new, node_old, t_new, t_old)


def weight_in_cell(dls: DiscreteLevelSet, field: LevelSetField | None,
                   mode: VelocityMode, cell: Cell, x, tau: float | None = None) -> tuple[float, float]:
    """The product w_h * |grad Phi_h(., t_new)| as one vector, evaluated with
    the bilinear data of a given cell.

    The scheme only ever consumes this product, so it is never split into a
    velocity and a gradient magnitude; that keeps the evaluation stable where
    the discrete gradient is small.
    """
    gx, gy = dls.gradient_in_cell(cell, x, "new")
    gnorm = math.hypot(gx, gy)
    if gnorm < GRAD_TOL / max(dls.grid.extent):
        raise ValueError(f"vanishing discrete level-set gradient at {tuple(x)}")
    if mode is VelocityMode.ANALYTIC_NORMAL:
        if field is None:
            raise ValueError("analytic velocity mode needs the analytic field")
        wn = field.normal_velocity(x, dls.t_new)
        # speed from the continuous field, direction and |grad Phi_h| factor
        # from the interpolant: (w.nu) * nu_h * |grad Phi_h| = (w.nu) * grad Phi_h
        return (wn * gx, wn * gy)
    if tau is None:
        tau = dls.tau
    dphi = dls.value_in_cell(cell, x, "new") - dls.value_in_cell(cell, x, "old")
    factor = -dphi / (tau * gnorm)
    return (factor * gx, factor * gy)


def discrete_velocity_weight(dls: DiscreteLevelSet, field: LevelSetField | None,
                             mode: VelocityMode, x, tau: float | None = None) -> tuple[float, float]:
    """Cell-agnostic variant of :func:`weight_in_cell`; locates the owner cell."""
    return weight_in_cell(dls, field, mode, dls.grid.locate(x), x, tau)


def make_weight_provider(dls: DiscreteLevelSet, field: LevelSetField | None,
                         mode: VelocityMode, tau: float | None = None):
    """Bind a (cell, x) -> weight-vector callable for the assembler."""
    def provider(cell: Cell, x) -> tuple[float, float]:
        return weight_in_cell(dls, field, mode, cell, x, tau)
    return provider
