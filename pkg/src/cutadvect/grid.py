"""Structured Cartesian quadrilateral background mesh.

The mesh covers a rectangular box and is deliberately dumb: cells, faces
and vertices are addressed by integer indices and all coordinates are
recomputed from integers on each call, so there is no accumulated
floating-point drift between neighbouring entities.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

Cell = tuple[int, int]

# Face orientation axes. An x-face separates two cells that are neighbours
# in the x-direction; its unit normal is +x. Analogously for y-faces.
AXIS_X = 0
AXIS_Y = 1


@dataclass(frozen=True)
class Face:
    """Interior face identified by its axis and the cell on its negative side.

    The normal always points along the positive axis, which fixes the
    plus/minus convention once and for all: ``kplus`` is the cell the
    normal points out of, ``kminus`` the cell it points into.
    """

    axis: int
    i: int
    j: int

    @property
    def kplus(self) -> Cell:
        return (self.i, self.j)

    @property
    def kminus(self) -> Cell:
        if self.axis == AXIS_X:
            return (self.i + 1, self.j)
        return (self.i, self.j + 1)

    @property
    def normal(self) -> tuple[float, float]:
        return (1.0, 0.0) if self.axis == AXIS_X else (0.0, 1.0)


@dataclass(frozen=True)
class CartesianGrid:
    """Uniform nx-by-ny quadrilateral mesh over the box [x0, x0+Lx] x [y0, y0+Ly]."""

    origin: tuple[float, float]
    extent: tuple[float, float]
    nx: int
    ny: int

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid needs at least one cell per axis, got {self.nx}x{self.ny}")
        if self.extent[0] <= 0.0 or self.extent[1] <= 0.0:
            raise ValueError(f"grid extents must be positive, got {self.extent}")

    @property
    def hx(self) -> float:
        return self.extent[0] / self.nx

    @property
    def hy(self) -> float:
        return self.extent[1] / self.ny

    @property
    def h(self) -> float:
        """Maximum element size, the resolution reported in convergence tables."""
        return max(self.hx, self.hy)

    @property
    def ncells(self) -> int:
        return self.nx * self.ny

    def vertex(self, i: int, j: int) -> tuple[float, float]:
        if not (0 <= i <= self.nx and 0 <= j <= self.ny):
            raise IndexError(f"vertex ({i},{j}) outside {self.nx}x{self.ny} grid")
        return (self.origin[0] + i * self.hx, self.origin[1] + j * self.hy)

    def cell_vertices(self, cell: Cell) -> tuple[tuple[float, float], ...]:
        """The four corners of a cell in counter-clockwise order."""
        i, j = cell
        self._check_cell(cell)
        return (
            self.vertex(i, j),
            self.vertex(i + 1, j),
            self.vertex(i + 1, j + 1),
            self.vertex(i, j + 1),
        )

    def cell_center(self, cell: Cell) -> tuple[float, float]:
        i, j = cell
        self._check_cell(cell)
        return (
            self.origin[0] + (i + 0.5) * self.hx,
            self.origin[1] + (j + 0.5) * self.hy,
        )

    def cell_neighbors(self, cell: Cell) -> list[Cell]:
        """Edge neighbours (up to four), in -x, +x, -y, +y order."""
        i, j = cell
        self._check_cell(cell)
        out = []
        if i > 0:
            out.append((i - 1, j))
        if i < self.nx - 1:
            out.append((i + 1, j))
        if j > 0:
            out.append((i, j - 1))
        if j < self.ny - 1:
            out.append((i, j + 1))
        return out

    def interior_faces(self) -> Iterator[Face]:
        """All interior faces, each exactly once, x-faces first."""
        for j in range(self.ny):
            for i in range(self.nx - 1):
                yield Face(AXIS_X, i, j)
        for j in range(self.ny - 1):
            for i in range(self.nx):
                yield Face(AXIS_Y, i, j)

    def face_endpoints(self, face: Face) -> tuple[tuple[float, float], tuple[float, float]]:
        if face.axis == AXIS_X:
            return (self.vertex(face.i + 1, face.j), self.vertex(face.i + 1, face.j + 1))
        return (self.vertex(face.i, face.j + 1), self.vertex(face.i + 1, face.j + 1))

    def locate(self, x: tuple[float, float]) -> Cell:
        """Cell containing a point; points on shared edges go to the higher cell index."""
        i = int((x[0] - self.origin[0]) / self.hx)
        j = int((x[1] - self.origin[1]) / self.hy)
        i = min(max(i, 0), self.nx - 1)
        j = min(max(j, 0), self.ny - 1)
        return (i, j)

    def cells(self) -> Iterator[Cell]:
        for j in range(self.ny):
            for i in range(self.nx):
                yield (i, j)

    def cell_order(self, cell: Cell) -> int:
        """Deterministic row-major linear index used to order assembly."""
        i, j = cell
        return j * self.nx + i

    def _check_cell(self, cell: Cell) -> None:
        i, j = cell
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise IndexError(f"cell ({i},{j}) outside {self.nx}x{self.ny} grid")
