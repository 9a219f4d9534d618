"""Dense assembled operators and parity reduction for the periodic line.

The Fourier-collocation second derivative is a dense circulant matrix; all
operators built from it (L_plus, L_minus, the block linearization) commute
with the reflection x -> -x when their coefficient profiles are even, so
eigenproblems and linear solves are performed on the even/odd reduced
sectors.  Reductions are orthonormal, which keeps symmetric matrices
symmetric.
"""

from __future__ import annotations

import numpy as np

from .grids import LINE1D, Grid

_CACHE = {}


def _grid_cache(grid: Grid):
    key = (grid.mode, grid.n, grid.half_width)
    if key not in _CACHE:
        _CACHE[key] = {}
    return _CACHE[key]


def d2_matrix(grid: Grid) -> np.ndarray:
    """Dense spectral second-derivative matrix (circulant, symmetric)."""
    if grid.mode != LINE1D:
        raise ValueError("d2_matrix is line1d-only; radial uses banded stencils")
    cache = _grid_cache(grid)
    if "d2" not in cache:
        col = np.fft.ifft(-(grid.wavenumbers**2)).real
        idx = np.arange(grid.n)
        cache["d2"] = col[(idx[:, None] - idx[None, :]) % grid.n]
    return cache["d2"]


class ParityReduction:
    """Orthonormal reduction onto even/odd sectors of the periodic grid.

    Reflection maps node j to (n - j) mod n; nodes 0 (x = -L) and n/2
    (x = 0) are fixed.  Even sector dimension n/2 + 1, odd n/2 - 1.
    """

    def __init__(self, grid: Grid):
        n = grid.n
        self.grid = grid
        self.half = n // 2
        self.pair_lo = np.arange(1, self.half)          # j
        self.pair_hi = n - self.pair_lo                 # n - j
        self.fixed = np.array([0, self.half])

    # --- vectors ---------------------------------------------------------

    def restrict_even(self, u):
        """Coefficients in the orthonormal even basis."""
        u = np.asarray(u)
        vals = np.concatenate(
            [u[self.fixed], (u[self.pair_lo] + u[self.pair_hi]) / np.sqrt(2.0)]
        )
        return vals

    def restrict_odd(self, u):
        u = np.asarray(u)
        return (u[self.pair_lo] - u[self.pair_hi]) / np.sqrt(2.0)

    def extend_even(self, coeffs):
        u = np.zeros(self.grid.n, dtype=np.asarray(coeffs).dtype)
        u[self.fixed] = coeffs[:2]
        u[self.pair_lo] = coeffs[2:] / np.sqrt(2.0)
        u[self.pair_hi] = coeffs[2:] / np.sqrt(2.0)
        return u

    def extend_odd(self, coeffs):
        u = np.zeros(self.grid.n, dtype=np.asarray(coeffs).dtype)
        u[self.pair_lo] = coeffs / np.sqrt(2.0)
        u[self.pair_hi] = -coeffs / np.sqrt(2.0)
        return u

    def split(self, u):
        """Even and odd parts of a full-grid sample array."""
        even = self.extend_even(self.restrict_even(u))
        return even, u - even

    # --- matrices --------------------------------------------------------

    def fold(self, a, parity):
        """Reduce a reflection-commuting dense matrix onto one sector."""
        lo, hi, fx = self.pair_lo, self.pair_hi, self.fixed
        if parity == "even":
            cols = np.concatenate(
                [a[:, fx], (a[:, lo] + a[:, hi]) / np.sqrt(2.0)], axis=1
            )
            return np.concatenate(
                [cols[fx, :], (cols[lo, :] + cols[hi, :]) / np.sqrt(2.0)], axis=0
            )
        cols = (a[:, lo] - a[:, hi]) / np.sqrt(2.0)
        return (cols[lo, :] - cols[hi, :]) / np.sqrt(2.0)


def parity(grid: Grid) -> ParityReduction:
    cache = _grid_cache(grid)
    if "parity" not in cache:
        cache["parity"] = ParityReduction(grid)
    return cache["parity"]


def schroedinger_matrix(grid: Grid, coeff) -> np.ndarray:
    """Dense matrix of -d^2/dx^2 + coeff(x)."""
    return -d2_matrix(grid) + np.diag(np.asarray(coeff, dtype=float))


def folded_schroedinger(grid: Grid, coeff, sector: str) -> np.ndarray:
    """Reduced matrix of -d^2/dx^2 + coeff(x) on the even or odd sector.

    coeff must be even on the grid (coeff[j] == coeff[n-j mod n]).
    """
    p = parity(grid)
    d2f = _folded_d2(grid, sector)
    coeff = np.asarray(coeff, dtype=float)
    if sector == "even":
        diag = np.concatenate([coeff[p.fixed], coeff[p.pair_lo]])
    else:
        diag = coeff[p.pair_lo]
    return -d2f + np.diag(diag)


def _folded_d2(grid: Grid, sector: str) -> np.ndarray:
    cache = _grid_cache(grid)
    key = f"d2_{sector}"
    if key not in cache:
        cache[key] = parity(grid).fold(d2_matrix(grid), sector)
    return cache[key]


def radial_laplacian_matrix(grid: Grid) -> np.ndarray:
    """Dense matrix of u'' + (2/r) u' on the staggered radial grid.

    Matches grids._radial_laplacian: 4th-order stencils, even extension
    through r = 0, zero ghosts beyond R.
    """
    cache = _grid_cache(grid)
    if "radial_lap" in cache:
        return cache["radial_lap"]
    n, dr, r = grid.n, grid.dx, grid.nodes
    a = np.zeros((n, n))
    w2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12 * dr**2)
    w1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12 * dr)
    for off, (c2, c1) in zip(range(-2, 3), zip(w2, w1)):
        for i in range(n):
            j = i + off
            w = c2 + (2.0 / r[i]) * c1
            if j >= n:
                continue  # zero outer ghosts
            if j < 0:
                j = -j - 1  # even extension: sample at (-j-1/2)dr equals (j+1/2)dr
            a[i, j] += w
    cache["radial_lap"] = a
    return a
