"""Periodic grids, Fourier transforms, and Mittag-Leffler multipliers.

The box is [-L/2, L/2)^dim with M cells per axis and the transform pair

    f_hat(xi) = integral e^{-2 pi i x.xi} f(x) dx,   xi = m/L,

discretized so that the Laplacian has symbol -4 pi^2 |xi|^2.  With nodes
x_j = -L/2 + j h the forward DFT picks up a (-1)^m phase per axis, absorbed
here once and for all.  Coefficients are stored in numpy's FFT layout.

The solution operators act by the radial symbols

    G_{alpha,1}(t):  E_{alpha,1}(-4 pi^2 t^alpha |xi|^2)
    G_{alpha,2}(t):  t E_{alpha,2}(-4 pi^2 t^alpha |xi|^2)
    G_{alpha,alpha}(t):  t^{alpha-1} E_{alpha,alpha}(-4 pi^2 t^alpha |xi|^2)

and are evaluated once per radial class |m|^2, not per mode.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .mlf import DomainError, ml_neg_axis

__all__ = [
    "ShapeMismatch",
    "FileFormatError",
    "Grid",
    "Field",
    "SpectralField",
    "MultiplierSpec",
    "transform_forward",
    "transform_inverse",
    "apply_G",
    "riesz",
    "gradient",
    "eval_at_points",
    "eval_on_lattice",
    "dealias",
    "save_field",
    "load_field",
]

_G_KINDS = ("one", "two", "alpha_alpha")


class ShapeMismatch(ValueError):
    """Array shape is inconsistent with the grid it claims to live on."""


class FileFormatError(ValueError):
    """Field file is not valid FHF1."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L/2, L/2)^dim.

    points_per_axis must be an even power of two (>= 16); frequencies are
    the integers m in [-M/2, M/2) per axis, physical frequency xi = m/L.
    """

    dim: int
    points_per_axis: int
    length: float

    def __post_init__(self):
        m = self.points_per_axis
        if self.dim not in (1, 2):
            raise DomainError(f"dim must be 1 or 2, got {self.dim}")
        if m < 16 or (m & (m - 1)) != 0:
            raise DomainError(
                f"points_per_axis must be a power of two >= 16, got {m}")
        if not self.length > 0.0:
            raise DomainError(f"length must be positive, got {self.length}")

    @property
    def h(self) -> float:
        return self.length / self.points_per_axis

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def axis_nodes(self) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        return -0.5 * self.length + self.h * np.arange(self.points_per_axis)

    def freq_integers(self) -> list:
        """Integer frequency vector m per axis, numpy FFT layout."""
        m = self.points_per_axis
        return [np.rint(np.fft.fftfreq(m) * m).astype(int)] * self.dim

    def xi_squared(self) -> np.ndarray:
        """|xi|^2 = |m/L|^2 on the full coefficient array."""
        ms = self.freq_integers()
        if self.dim == 1:
            q = ms[0].astype(float) ** 2
        else:
            q = ms[0].astype(float)[:, None] ** 2 + \
                ms[1].astype(float)[None, :] ** 2
        return q / self.length ** 2


def _check(grid: Grid, arr: np.ndarray):
    if arr.shape != grid.shape:
        raise ShapeMismatch(f"array shape {arr.shape} vs grid {grid.shape}")


@dataclass(frozen=True)
class Field:
    """Real values, one per cell, row-major over the grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        _check(self.grid, self.values)
        if not np.all(np.isfinite(self.values)):
            raise DomainError("field contains non-finite values")


@dataclass(frozen=True)
class SpectralField:
    """Complex coefficients indexed by integer frequency (FFT layout).

    When the field it represents is real the coefficients are Hermitian:
    coeffs(-m) = conj(coeffs(m)).
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        _check(self.grid, self.coeffs)


@dataclass(frozen=True)
class MultiplierSpec:
    """One of the three solution-operator symbols at a fixed time."""

    alpha: float
    j: str
    t: float

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise DomainError(f"alpha must lie in (1, 2), got {self.alpha}")
        if self.j not in _G_KINDS:
            raise DomainError(f"j must be one of {_G_KINDS}, got {self.j!r}")
        if self.t < 0.0:
            raise DomainError(f"t must be nonnegative, got {self.t}")

    @property
    def beta_ml(self) -> float:
        return {"one": 1.0, "two": 2.0, "alpha_alpha": self.alpha}[self.j]

    def prefactor(self) -> float:
        """The t^{j-1} factor in front of the Mittag-Leffler symbol."""
        if self.j == "one":
            return 1.0
        if self.j == "two":
            return self.t
        return self.t ** (self.alpha - 1.0)


def _phase(grid: Grid) -> np.ndarray:
    # (-1)^{m_1+...+m_d}: the shift from index space to x_j = -L/2 + j h
    signs = [1.0 - 2.0 * (np.abs(m) % 2) for m in grid.freq_integers()]
    if grid.dim == 1:
        return signs[0]
    return signs[0][:, None] * signs[1][None, :]


def transform_forward(f: Field) -> SpectralField:
    """Forward transform; coeffs[m] approximates f_hat(m/L).

    Normalization: coeffs = h^dim * (-1)^{sum m} * FFT(values), which makes
    Parseval read  sum |f|^2 h^dim = sum |coeffs|^2 / L^dim.
    """
    c = f.grid.cell_volume * _phase(f.grid) * np.fft.fftn(f.values)
    return SpectralField(f.grid, c)


def transform_inverse(F: SpectralField) -> Field:
    """Inverse of transform_forward; imaginary residue is discarded."""
    v = np.fft.ifftn(F.coeffs * _phase(F.grid)).real / F.grid.cell_volume
    return Field(F.grid, v)


def _radial_apply(grid: Grid, coeffs: np.ndarray, alpha: float,
                  beta_ml: float, scale: float) -> np.ndarray:
    """Multiply coeffs by E_{alpha,beta}(-scale * |xi|^2), one ML evaluation
    per radial class |m|^2 rather than per mode."""
    q = grid.xi_squared()
    uniq, inv = np.unique(np.round(q * grid.length ** 2).astype(np.int64),
                          return_inverse=True)
    vals = ml_neg_axis(alpha, beta_ml,
                       scale * uniq.astype(float) / grid.length ** 2)
    return coeffs * vals[inv].reshape(coeffs.shape)


def apply_G(spec: MultiplierSpec, f: Field) -> Field:
    """Apply the solution operator G_{alpha,j}(t) as a Fourier multiplier."""
    if spec.t == 0.0:
        if spec.j == "one":
            return f
        return Field(f.grid, np.zeros_like(f.values))
    F = transform_forward(f)
    scale = 4.0 * np.pi ** 2 * spec.t ** spec.alpha
    c = _radial_apply(f.grid, F.coeffs, spec.alpha, spec.beta_ml, scale)
    out = transform_inverse(SpectralField(f.grid, c)).values
    return Field(f.grid, spec.prefactor() * out)


def riesz(s: float, f: Field) -> Field:
    """Riesz power (-Laplace)^{s/2}: multiply coeffs by (2 pi |xi|)^s.

    The zero mode is annihilated for every s, so for s < 0 the operator is
    the inverse power on the mean-zero complement (norms built on it are
    understood modulo constants).  Supported range is s in [-2, 2].
    """
    F = transform_forward(f)
    q = f.grid.xi_squared()
    mult = np.zeros_like(q)
    nz = q > 0.0
    mult[nz] = (2.0 * np.pi * np.sqrt(q[nz])) ** s
    return transform_inverse(SpectralField(f.grid, F.coeffs * mult))


def gradient(f: Field) -> list:
    """Spectral gradient: component k is (2 pi i xi_k f_hat)^{inverse}.

    The one-sided Nyquist mode (even M) is dropped -- keeping it breaks
    the odd symmetry a real derivative must have.
    """
    F = transform_forward(f)
    ms = f.grid.freq_integers()
    m_count = f.grid.points_per_axis
    out = []
    for axis in range(f.grid.dim):
        m = ms[axis].astype(float)
        m[np.abs(m) == m_count / 2.0] = 0.0
        shape = [1] * f.grid.dim
        shape[axis] = -1
        factor = 2.0j * np.pi * m.reshape(shape) / f.grid.length
        out.append(transform_inverse(SpectralField(f.grid, F.coeffs * factor)))
    return out


def eval_at_points(F: SpectralField, pts) -> np.ndarray:
    """Trigonometric interpolation at arbitrary in-box points.

    Direct evaluation of (1/L^dim) sum_m coeffs(m) e^{2 pi i m.x / L};
    O(n_pts * M^dim) via per-axis phase matrices.  Real part returned.
    """
    grid = F.grid
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != grid.dim:
        raise ShapeMismatch(
            f"points have dim {pts.shape[1]}, grid has {grid.dim}")
    ms = grid.freq_integers()
    phases = [np.exp(2.0j * np.pi * np.outer(pts[:, k], ms[k]) / grid.length)
              for k in range(grid.dim)]
    if grid.dim == 1:
        vals = phases[0] @ F.coeffs
    else:
        vals = np.einsum("pm,mn,pn->p", phases[0], F.coeffs, phases[1],
                         optimize=True)
    return vals.real / grid.length ** grid.dim


def eval_on_lattice(F: SpectralField, axes) -> np.ndarray:
    """Trigonometric interpolation on a tensor-product lattice.

    Separable variant of eval_at_points: for query axes (a_1, ..., a_dim)
    the cost is O(n M^dim) per axis instead of O(n^dim M^dim) points.
    """
    grid = F.grid
    if len(axes) != grid.dim:
        raise ShapeMismatch(f"{len(axes)} axes for a dim-{grid.dim} grid")
    ms = grid.freq_integers()
    phases = [np.exp(2.0j * np.pi * np.outer(np.asarray(a, float), ms[k])
                     / grid.length) for k, a in enumerate(axes)]
    if grid.dim == 1:
        vals = phases[0] @ F.coeffs
    else:
        vals = phases[0] @ F.coeffs @ phases[1].T
    return vals.real / grid.length ** grid.dim


def dealias(F: SpectralField) -> SpectralField:
    """2/3-rule: zero every coefficient with any |m_k| > M/3."""
    cut = F.grid.points_per_axis / 3.0
    ms = F.grid.freq_integers()
    keep = np.abs(ms[0]) <= cut
    if F.grid.dim == 1:
        mask = keep
    else:
        mask = keep[:, None] & (np.abs(ms[1]) <= cut)[None, :]
    return SpectralField(F.grid, np.where(mask, F.coeffs, 0.0))


# ---------------------------------------------------------------------------
# FHF1 field files: magic, LE u32 dim, LE u32 points_per_axis, LE f64 L,
# then row-major f64 values.

_FHF1_MAGIC = b"FHF1"


def save_field(path, f: Field) -> None:
    with open(path, "wb") as fh:
        fh.write(_FHF1_MAGIC)
        fh.write(struct.pack("<IId", f.grid.dim, f.grid.points_per_axis,
                             f.grid.length))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_field(path) -> Field:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _FHF1_MAGIC:
            raise FileFormatError(f"bad magic {magic!r}, expected FHF1")
        dim, m, length = struct.unpack("<IId", fh.read(16))
        grid = Grid(dim, m, length)
        raw = fh.read(8 * m ** dim)
        if len(raw) != 8 * m ** dim:
            raise FileFormatError("truncated FHF1 payload")
        values = np.frombuffer(raw, dtype="<f8").reshape(grid.shape).copy()
    return Field(grid, values)
