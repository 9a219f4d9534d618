"""Spatial grids, fields, differential operators and inner products.

Two discretizations are supported:

* ``line1d`` -- uniform periodic grid on [-L, L) with Fourier-collocation
  derivatives (spectral accuracy for smooth fields),
* ``radial3d`` -- uniform grid on (0, R] with 4th-order finite differences
  and an even-extension regularity condition at r = 0.

Everything here is a pure function of its inputs; field sample arrays are
frozen after construction so values can be shared freely across workers.
"""

from __future__ import annotations

import io

import numpy as np

from .errors import GridMismatch, NonFiniteInput

LINE1D = "line1d"
RADIAL3D = "radial3d"


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


class Grid:
    """Uniform spatial grid, either periodic line or radial.

    Attributes
    ----------
    mode : str
        ``"line1d"`` or ``"radial3d"``.
    n : int
        Number of nodes (a power of two for ``line1d``).
    half_width : float
        L for the periodic box [-L, L); R_max for the radial grid.
    dx : float
        Node spacing, 2L/n (line) or R/n (radial).
    nodes : ndarray
        Node coordinates: -L + j*dx (line), j*dr for j = 1..n (radial).
    """

    def __init__(self, mode, n, half_width):
        if mode not in (LINE1D, RADIAL3D):
            raise ValueError(f"unknown grid mode {mode!r}")
        n = int(n)
        if n < 16:
            raise ValueError("grid too coarse (n < 16)")
        if mode == LINE1D and (n & (n - 1)) != 0:
            raise ValueError("line1d point count must be a power of two")
        L = float(half_width)
        if not np.isfinite(L) or L <= 0:
            raise ValueError("half_width must be positive and finite")
        self.mode = mode
        self.n = n
        self.half_width = L
        if mode == LINE1D:
            self.dx = 2.0 * L / n
            self.nodes = _frozen(-L + self.dx * np.arange(n))
            # Fourier wavenumbers of the periodic box
            self.wavenumbers = _frozen(2.0 * np.pi * np.fft.fftfreq(n, d=self.dx))
        else:
            # staggered nodes (j - 1/2) dr: even extension through r=0 maps
            # ghost nodes onto sample nodes without needing a value at r=0
            self.dx = L / n
            self.nodes = _frozen(self.dx * (np.arange(n) + 0.5))
            self.wavenumbers = None
        self._weights = {}

    @classmethod
    def line(cls, n, half_width):
        return cls(LINE1D, n, half_width)

    @classmethod
    def radial(cls, n, r_max):
        return cls(RADIAL3D, n, r_max)

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.mode == other.mode
            and self.n == other.n
            and self.half_width == other.half_width
        )

    def __hash__(self):
        return hash((self.mode, self.n, self.half_width))

    def __repr__(self):
        return f"Grid({self.mode}, n={self.n}, half_width={self.half_width})"

    def integrate(self, samples):
        """Integral of a sampled function over the domain.

        line1d: periodic rectangle rule (= trapezoid, spectrally accurate).
        radial3d: midpoint rule of 4*pi*r^2*f over the cell-centered nodes.
        """
        samples = np.asarray(samples)
        if self.mode == LINE1D:
            return samples.sum() * self.dx
        return (4.0 * np.pi * self.nodes**2 * samples).sum() * self.dx

    def weight(self, nu):
        """Samples of rho_nu(x) = (1 + |x|^2)^(-nu/2)."""
        nu = float(nu)
        if nu < 0:
            raise ValueError("weight exponent nu must be >= 0")
        if nu not in self._weights:
            self._weights[nu] = _frozen((1.0 + self.nodes**2) ** (-nu / 2.0))
        return self._weights[nu]


class WeightProfile:
    """Polynomial confinement weight rho_nu on a grid."""

    def __init__(self, grid, nu):
        self.grid = grid
        self.nu = float(nu)
        self.samples = grid.weight(nu)


def _check_samples(grid, values):
    values = np.asarray(values)
    if values.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} samples, got shape {values.shape}")
    if not (np.all(np.isfinite(values.real)) and np.all(np.isfinite(values.imag))):
        raise NonFiniteInput("field samples contain NaN/inf")
    return values


class ComplexField:
    """A sampled complex wavefunction on a grid."""

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=np.complex128)
        self.grid = grid
        self.values = _frozen(_check_samples(grid, values))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.n, dtype=np.complex128))

    def real_part(self):
        return np.real(self.values)

    def imag_part(self):
        return np.imag(self.values)

    def norm2(self):
        return float(np.sqrt(self.grid.integrate(np.abs(self.values) ** 2).real))

    def sup(self):
        return float(np.max(np.abs(self.values)))

    def __add__(self, other):
        _same_grid(self, other)
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return ComplexField(self.grid, self.values - other.values)

    def __mul__(self, c):
        return ComplexField(self.grid, self.values * c)

    __rmul__ = __mul__

    def to_csv(self, path):
        write_field_csv(path, self)

    @classmethod
    def from_csv(cls, path):
        grid, cols = read_field_csv(path)
        return cls(grid, cols[0] + 1j * cols[1])


class TwoComponentField:
    """Pair of sampled components (vector unknowns, eigenfunctions).

    Components may be real- or complex-valued depending on use; they are
    stored as complex arrays.
    """

    def __init__(self, grid, first, second):
        first = np.asarray(first, dtype=np.complex128)
        second = np.asarray(second, dtype=np.complex128)
        self.grid = grid
        self.first = _frozen(_check_samples(grid, first))
        self.second = _frozen(_check_samples(grid, second))

    @classmethod
    def zeros(cls, grid):
        z = np.zeros(grid.n, dtype=np.complex128)
        return cls(grid, z, z.copy())

    def stack(self):
        return np.concatenate([self.first, self.second])

    @classmethod
    def from_stack(cls, grid, w):
        w = np.asarray(w)
        return cls(grid, w[: grid.n], w[grid.n :])

    def norm2(self):
        dens = np.abs(self.first) ** 2 + np.abs(self.second) ** 2
        return float(np.sqrt(self.grid.integrate(dens).real))

    def conj(self):
        return TwoComponentField(self.grid, np.conj(self.first), np.conj(self.second))

    def __add__(self, other):
        _same_grid(self, other)
        return TwoComponentField(self.grid, self.first + other.first, self.second + other.second)

    def __sub__(self, other):
        _same_grid(self, other)
        return TwoComponentField(self.grid, self.first - other.first, self.second - other.second)

    def __mul__(self, c):
        return TwoComponentField(self.grid, self.first * c, self.second * c)

    __rmul__ = __mul__


def _same_grid(u, v):
    if u.grid != v.grid:
        raise GridMismatch(f"fields live on different grids: {u.grid} vs {v.grid}")


# ---------------------------------------------------------------------------
# differential operators


def laplacian_samples(grid, values):
    """Laplacian acting on a raw sample array (no field wrapping)."""
    values = np.asarray(values, dtype=np.complex128)
    if grid.mode == LINE1D:
        return np.fft.ifft(-(grid.wavenumbers**2) * np.fft.fft(values))
    return _radial_laplacian(grid, values)


def _radial_derivatives(grid, u):
    """4th-order first and second derivatives on the staggered radial grid.

    Inner boundary: even extension through r=0 (u'(0)=0 for regular
    profiles); node -r_j coincides with r_j on the staggered grid.
    Outer boundary: zero ghosts (fields are assumed decayed).
    """
    n, dr = grid.n, grid.dx
    # padded samples at (-3/2, -1/2, 1/2, ..., n-1/2, n+1/2, n+3/2)*dr
    up = np.concatenate([u[1::-1], u, np.zeros(2, dtype=u.dtype)])
    a, b, c, d, e = up[0:n], up[1 : n + 1], up[2 : n + 2], up[3 : n + 3], up[4 : n + 4]
    d1 = (a - 8 * b + 8 * d - e) / (12 * dr)
    d2 = (-a + 16 * b - 30 * c + 16 * d - e) / (12 * dr**2)
    return d1, d2


def _radial_laplacian(grid, u):
    d1, d2 = _radial_derivatives(grid, u)
    return d2 + 2.0 * d1 / grid.nodes


def laplacian(u: ComplexField) -> ComplexField:
    """Spatial Laplacian: spectral on line1d, 4th-order FD on radial3d."""
    return ComplexField(u.grid, laplacian_samples(u.grid, u.values))


def derivative_samples(grid, values):
    """First spatial derivative of raw samples (spectral on line1d)."""
    values = np.asarray(values, dtype=np.complex128)
    if grid.mode == LINE1D:
        return np.fft.ifft(1j * grid.wavenumbers * np.fft.fft(values))
    d1, _ = _radial_derivatives(grid, values)
    return d1


def derivative(u: ComplexField) -> ComplexField:
    return ComplexField(u.grid, derivative_samples(u.grid, u.values))


# ---------------------------------------------------------------------------
# inner products and norms


def inner(u: ComplexField, v: ComplexField) -> complex:
    """L^2 inner product  integral conj(u) v  (conjugate-linear in u)."""
    _same_grid(u, v)
    return complex(u.grid.integrate(np.conj(u.values) * v.values))


def real_pairing(u: ComplexField, v: ComplexField) -> float:
    """Real inner product Re integral conj(u) v."""
    return inner(u, v).real


def symplectic(u: ComplexField, v: ComplexField) -> float:
    """Symplectic form  Im integral conj(u) v."""
    return inner(u, v).imag


def weighted_norm(u, nu) -> float:
    """|| rho_nu u ||_2 with rho_nu = (1 + |x|^2)^(-nu/2).

    Accepts a ComplexField or a TwoComponentField (component-wise density).
    """
    nu = float(nu)
    if nu < 0:
        raise ValueError("nu must be >= 0")
    grid = u.grid
    rho2 = grid.weight(nu) ** 2
    if isinstance(u, TwoComponentField):
        dens = np.abs(u.first) ** 2 + np.abs(u.second) ** 2
    else:
        dens = np.abs(u.values) ** 2
    return float(np.sqrt(grid.integrate(rho2 * dens).real))


# ---------------------------------------------------------------------------
# serialization: columnar CSV with a header comment recording the grid


def write_field_csv(path, field):
    if isinstance(field, TwoComponentField):
        cols = np.column_stack(
            [field.grid.nodes, field.first.real, field.first.imag, field.second.real, field.second.imag]
        )
        names = "x,re1,im1,re2,im2"
    else:
        cols = np.column_stack([field.grid.nodes, field.values.real, field.values.imag])
        names = "x,re,im"
    g = field.grid
    with open(path, "w") as fh:
        fh.write(f"# mode={g.mode} n={g.n} half_width={g.half_width:.17g}\n")
        fh.write(names + "\n")
        np.savetxt(fh, cols, delimiter=",", fmt="%.17g")


def read_field_csv(path):
    with open(path) as fh:
        header = fh.readline().strip()
        fh.readline()  # column names
        data = np.loadtxt(io.StringIO(fh.read()), delimiter=",")
    meta = dict(item.split("=") for item in header.lstrip("# ").split())
    grid = Grid(meta["mode"], int(meta["n"]), float(meta["half_width"]))
    return grid, [data[:, j] for j in range(1, data.shape[1])]
