"""One-dimensional finite-volume model of a single advection step.

A point moves right with speed w across N equal cells. When the domain
ends exactly at the old and new point positions the step system is
uniquely solvable and conserves mass. When the domain is extended by one
and a half cells on each side without reconstructing the swept region,
the system turns singular (pure Neumann) and must be regularized by a
small mass term; its small-regularization limit loses mass and the value
in the last cell blows up like 1/eps. Both systems are built and solved
exactly here, as printed references for the 2D code.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg


@dataclass(frozen=True)
class OneDConfig:
    n: int
    w: float
    tau: float
    gamma: float
    u_old: float
    eps: float = 0.0

    def __post_init__(self):
        if self.w <= 0.0 or self.tau <= 0.0 or self.gamma <= 0.0:
            raise ValueError("w, tau and gamma must be positive")


def aligned_system(cfg: OneDConfig):
    """Matrix and right-hand side when the domain ends at the interfaces.

    Row 1 receives the old-interface inflow, interior rows carry pure
    upwind differences, the last row couples the new-interface mass to the
    upstream flux.
    """
    if cfg.n < 3:
        raise ValueError("aligned system needs at least 3 cells")
    n = cfg.n
    a = cfg.w / cfg.gamma
    entries = [(0, 0, a)]
    for j in range(1, n - 1):
        entries.append((j, j, a))
        entries.append((j, j - 1, -a))
    entries.append((n - 1, n - 1, 1.0 / cfg.tau))
    entries.append((n - 1, n - 2, -a))
    rhs = np.zeros(n)
    rhs[0] = cfg.u_old / cfg.tau
    return linalg.from_triplets(n, entries), rhs


def solve_aligned(cfg: OneDConfig) -> np.ndarray:
    mat, rhs = aligned_system(cfg)
    return linalg.solve_direct(mat, rhs)


def aligned_closed_form(cfg: OneDConfig) -> np.ndarray:
    """u_j = gamma/(tau w) u_old up to the last cell, which returns u_old."""
    u = np.full(cfg.n, cfg.gamma / (cfg.tau * cfg.w) * cfg.u_old)
    u[-1] = cfg.u_old
    return u


def extended_system(cfg: OneDConfig):
    """Matrix and right-hand side for the domain extended past both interfaces.

    The old interface sits inside cell 2 and the new one inside cell n-1
    (1-based); without the eps mass term on the diagonal the last row is
    rank deficient.
    """
    if cfg.n < 5:
        raise ValueError("extended system needs at least 5 cells")
    if cfg.eps <= 0.0:
        raise ValueError("extended system needs eps > 0")
    n = cfg.n
    a = cfg.w / cfg.gamma
    entries = [(j, j, cfg.eps) for j in range(n)]
    entries.append((0, 0, a))
    entries.append((1, 1, a))
    entries.append((1, 0, -a))
    for j in range(2, n - 2):
        entries.append((j, j, a))
        entries.append((j, j - 1, -a))
    entries.append((n - 2, n - 2, 1.0 / cfg.tau + a))
    entries.append((n - 2, n - 3, -a))
    entries.append((n - 1, n - 2, -a))
    rhs = np.zeros(n)
    rhs[1] = cfg.u_old / cfg.tau
    return linalg.from_triplets(n, entries), rhs


def solve_extended(cfg: OneDConfig) -> np.ndarray:
    mat, rhs = extended_system(cfg)
    return linalg.solve_direct(mat, rhs)


def extended_limit(cfg: OneDConfig) -> np.ndarray:
    """The eps -> 0 limit where it exists; the last entry diverges and is inf."""
    u = np.full(cfg.n, cfg.gamma / (cfg.tau * cfg.w) * cfg.u_old)
    u[0] = 0.0
    u[-2] = cfg.gamma / (cfg.tau * cfg.w + cfg.gamma) * cfg.u_old
    u[-1] = np.inf if cfg.u_old != 0.0 else 0.0
    return u
