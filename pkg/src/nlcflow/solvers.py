"""Inner linear solvers: fast sine/cosine-transform Helmholtz/Poisson solvers
used as preconditioners, and a matrix-free preconditioned conjugate gradient.

The cell-centered Dirichlet Laplacian (ghost = 2g - interior) is diagonalized
by the type-II DST; the node-centered Dirichlet Laplacian (MAC normal
direction) by the type-I DST; the cell-centered zero-Neumann Laplacian
(mirror ghost) by the type-II DCT. Reductions use the fixed-order BLAS dot
(single-threaded), so results are bitwise reproducible for a fixed
configuration.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dst, idst, dstn, idstn, dctn, idctn

from .errors import LinearSolveFailure
from .grid import GridSpec


def _eig_cell_dirichlet(n: int, h: float) -> np.ndarray:
    k = np.arange(1, n + 1)
    return 2.0 * (np.cos(k * np.pi / n) - 1.0) / h**2


def _eig_node_dirichlet(n: int, h: float) -> np.ndarray:
    # interior nodes 1..n-1 of a segment split into n intervals
    k = np.arange(1, n)
    return 2.0 * (np.cos(k * np.pi / n) - 1.0) / h**2


def _eig_cell_neumann(n: int, h: float) -> np.ndarray:
    k = np.arange(n)
    return 2.0 * (np.cos(k * np.pi / n) - 1.0) / h**2


class CellHelmholtz:
    """Direct solver for (a - c*Lap) x = b, cell-centered scalars with
    homogeneous Dirichlet walls (linear-extrapolation ghosts)."""

    def __init__(self, grid: GridSpec, a: float, c: float):
        self.a, self.c = a, c
        lx = _eig_cell_dirichlet(grid.nx, grid.hx)
        ly = _eig_cell_dirichlet(grid.ny, grid.hy)
        self._denom = a - c * (lx[:, None] + ly[None, :])

    def solve(self, b: np.ndarray) -> np.ndarray:
        w = dstn(b, type=2, axes=(0, 1))
        w /= self._denom
        return idstn(w, type=2, axes=(0, 1))


class FaceHelmholtz:
    """Direct solver for (a - c*Lap) on one MAC component's interior faces.

    axis=0 for u (node-centered in x, cell-centered in y with -interior
    ghosts), axis=1 for v. Operates on arrays holding interior faces only:
    shape (nx-1, ny) for u, (nx, ny-1) for v.
    """

    def __init__(self, grid: GridSpec, a: float, c: float, axis: int):
        self.axis = axis
        if axis == 0:
            ln = _eig_node_dirichlet(grid.nx, grid.hx)
            lt = _eig_cell_dirichlet(grid.ny, grid.hy)
            self._denom = a - c * (ln[:, None] + lt[None, :])
            self._types = (1, 2)
        else:
            ln = _eig_node_dirichlet(grid.ny, grid.hy)
            lt = _eig_cell_dirichlet(grid.nx, grid.hx)
            self._denom = a - c * (lt[:, None] + ln[None, :])
            self._types = (2, 1)

    def solve(self, b: np.ndarray) -> np.ndarray:
        t0, t1 = self._types
        w = dst(dst(b, type=t0, axis=0), type=t1, axis=1)
        w /= self._denom
        return idst(idst(w, type=t1, axis=1), type=t0, axis=0)


class NeumannPoisson:
    """Direct solver for -coeff*Lap x = b with zero-Neumann walls and zero
    mean; the constant mode of b is discarded."""

    def __init__(self, grid: GridSpec, coeff: float):
        lx = _eig_cell_neumann(grid.nx, grid.hx)
        ly = _eig_cell_neumann(grid.ny, grid.hy)
        denom = -coeff * (lx[:, None] + ly[None, :])
        denom[0, 0] = 1.0  # null mode, zeroed below
        self._denom = denom

    def solve(self, b: np.ndarray) -> np.ndarray:
        w = dctn(b, type=2, axes=(0, 1))
        w /= self._denom
        w[0, 0] = 0.0
        return idctn(w, type=2, axes=(0, 1))


def pcg(apply_a, b: np.ndarray, precond=None, tol_rel: float = 1e-10,
        tol_abs_inf: float | None = None, maxiter: int = 500,
        project=None) -> np.ndarray:
    """Preconditioned conjugate gradient on 2D arrays, zero initial guess.

    Stops when ||r||_2 <= tol_rel * ||b||_2, or (if given) when
    ||r||_inf <= tol_abs_inf. `project` (e.g. mean removal for the singular
    Neumann problem) is applied to b and to every residual.
    Raises LinearSolveFailure at the iteration cap.
    """
    if project is not None:
        b = project(b)
    bnorm = np.sqrt(float(np.vdot(b, b)))
    x = np.zeros_like(b)
    if bnorm == 0.0:
        return x
    r = b.copy()
    z = precond(r) if precond is not None else r
    if project is not None:
        z = project(z)
    p = z.copy()
    rz = float(np.vdot(r, z))
    for _ in range(maxiter):
        if _converged(r, bnorm, tol_rel, tol_abs_inf):
            return x
        ap = apply_a(p)
        alpha = rz / float(np.vdot(p, ap))
        x += alpha * p
        r -= alpha * ap
        if project is not None:
            r = project(r)
        z = precond(r) if precond is not None else r
        if project is not None:
            z = project(z)
        rz_new = float(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    if _converged(r, bnorm, tol_rel, tol_abs_inf):
        return x
    raise LinearSolveFailure(
        f"CG hit iteration cap {maxiter}; "
        f"||r||/||b|| = {np.sqrt(float(np.vdot(r, r))) / bnorm:.3e}")


def _converged(r, bnorm, tol_rel, tol_abs_inf) -> bool:
    if tol_abs_inf is not None and np.abs(r).max() <= tol_abs_inf:
        return True
    return np.sqrt(float(np.vdot(r, r))) <= tol_rel * bnorm
