"""Periodic grid, discrete Fourier machinery and frequency-space operators.

The domain is the symmetric interval [-L, L) sampled at n equispaced points
(n a power of two).  Fourier coefficients follow the plane-wave convention

    u(x) = sum_j  u_hat[j] * exp(i * xi_j * x),      xi_j = pi * j / L,

so a unit-amplitude plane wave exp(i*xi_j*x) carries coefficient exactly 1
in bin j, and the discrete Parseval identity reads

    ||u||_{L^2}^2 = dx * sum |u_m|^2 = 2L * sum_j |u_hat[j]|^2.

All operators in this module are Fourier multipliers except the
pseudoproduct and the nonlinear flux, which are genuinely bilinear or
pointwise and are dealiased by zero padding.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "PhysicalField",
    "SpectralField",
    "Trajectory",
    "SizeMismatchError",
    "UnresolvedFieldError",
    "transform",
    "inverse_transform",
    "l2_norm",
    "spatial_derivative",
    "bessel_potential",
    "riesz_potential",
    "smooth_cutoff",
    "dyadic_bump",
    "dyadic_band",
    "lp_project",
    "lp_project_below",
    "lp_low_block",
    "airy_propagate",
    "dissipative_propagate",
    "smoothing_constant",
    "pseudoproduct",
    "nonlinear_flux",
    "flux_coefficients",
    "spectral_tail_fraction",
    "tail_fraction_of_spectrum",
    "trajectory_transform",
    "trajectory_from_spacetime",
]


class SizeMismatchError(ValueError):
    """Fields on different grids were combined."""


class UnresolvedFieldError(ValueError):
    """A field whose spectral tail exceeds the resolution threshold."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-half_length, half_length)."""

    half_length: float
    n: int

    def __post_init__(self):
        if self.n <= 0 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two, got {self.n}")
        if not np.isfinite(self.half_length) or self.half_length <= 0:
            raise ValueError(f"invalid half length {self.half_length}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return -self.half_length + self.dx * np.arange(self.n)

    @cached_property
    def xi(self) -> np.ndarray:
        """Wavenumbers pi*j/L in FFT (wrap-around) ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Signed integer mode index j in FFT ordering."""
        return np.rint(self.xi * self.half_length / np.pi).astype(int)

    @property
    def xi_max(self) -> float:
        return np.pi * (self.n // 2) / self.half_length

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.half_length, self.n * factor)


@dataclass(frozen=True)
class PhysicalField:
    """Real samples of a function on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise SizeMismatchError(
                f"field shape {vals.shape} does not match grid size {self.grid.n}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", vals)

    def __add__(self, other):
        self._check(other)
        return PhysicalField(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return PhysicalField(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return PhysicalField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def _check(self, other):
        if not isinstance(other, PhysicalField) or other.grid != self.grid:
            raise SizeMismatchError("fields live on different grids")

    @classmethod
    def zero(cls, grid: Grid) -> "PhysicalField":
        return cls(grid, np.zeros(grid.n))

    @classmethod
    def sample(cls, grid: Grid, fn) -> "PhysicalField":
        return cls(grid, np.asarray(fn(grid.x), dtype=float))


@dataclass(frozen=True)
class SpectralField:
    """Complex plane-wave coefficients per wavenumber bin (FFT ordering)."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n,):
            raise SizeMismatchError(
                f"coefficient shape {c.shape} does not match grid size {self.grid.n}"
            )
        object.__setattr__(self, "coeffs", c)

    def hermitian_defect(self) -> float:
        """Max deviation from u_hat(-xi) == conj(u_hat(xi)), relative."""
        c = self.coeffs
        n = self.grid.n
        idx = (-np.arange(n)) % n
        defect = np.max(np.abs(c[idx] - np.conj(c)))
        scale = max(np.max(np.abs(c)), 1e-300)
        return float(defect / scale)

    def apply_multiplier(self, symbol: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * symbol)


@dataclass
class Trajectory:
    """Uniformly time-sampled sequence of fields on a shared grid."""

    grid: Grid
    t0: float
    dt: float
    fields: list
    completed: bool = True
    abort_reason: str | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("sample spacing must be positive")
        for f in self.fields:
            if f.grid != self.grid:
                raise SizeMismatchError("trajectory fields live on different grids")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.fields))

    @property
    def duration(self) -> float:
        return self.dt * (len(self.fields) - 1)

    def values_matrix(self) -> np.ndarray:
        """(n_times, n_space) array of samples."""
        return np.stack([f.values for f in self.fields])

    def __len__(self):
        return len(self.fields)


# ----------------------------------------------------------------------
# transforms

def _phase(grid: Grid) -> np.ndarray:
    # exp(-i*xi_j*x_0) with x_0 = -L reduces to (-1)^j for integer modes
    return np.exp(1j * grid.xi * grid.half_length)


def transform(f: PhysicalField) -> SpectralField:
    """Forward transform to plane-wave coefficients."""
    coeffs = _phase(f.grid) * np.fft.fft(f.values) / f.grid.n
    return SpectralField(f.grid, coeffs)


def inverse_transform(F: SpectralField) -> PhysicalField:
    """Inverse of :func:`transform`; imaginary residue is discarded."""
    vals = np.fft.ifft(F.coeffs * F.grid.n / _phase(F.grid))
    return PhysicalField(F.grid, vals.real)


def l2_norm(f: PhysicalField) -> float:
    return float(np.sqrt(f.grid.dx * np.sum(f.values ** 2)))


# ----------------------------------------------------------------------
# multiplier operators

def spatial_derivative(F: SpectralField, order: int) -> SpectralField:
    """d^k/dx^k as the multiplier (i*xi)^k, k in {1,2,3}.

    The Nyquist bin of odd derivatives is zeroed; it has no conjugate
    partner on an even grid so keeping it breaks realness.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
    symbol = (1j * F.grid.xi) ** order
    if order % 2 == 1:
        symbol = symbol.copy()
        symbol[F.grid.n // 2] = 0.0
    return F.apply_multiplier(symbol)


def bessel_potential(F: SpectralField, s: float) -> SpectralField:
    """Multiplier (1 + xi^2)^(s/2)."""
    return F.apply_multiplier((1.0 + F.grid.xi ** 2) ** (s / 2.0))


def riesz_potential(F: SpectralField, s: float) -> SpectralField:
    """Multiplier |xi|^s; the zero mode is annihilated for every s."""
    xi = F.grid.xi
    symbol = np.zeros(F.grid.n)
    nz = xi != 0
    symbol[nz] = np.abs(xi[nz]) ** s
    return F.apply_multiplier(symbol)


# ----------------------------------------------------------------------
# Littlewood-Paley machinery

def smooth_cutoff(x) -> np.ndarray:
    """Even bump: 1 on |x|<=1, glued to 0 across 1<|x|<2, 0 beyond."""
    ax = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(ax)
    out[ax <= 1.0] = 1.0
    mid = (ax > 1.0) & (ax < 2.0)
    y = ax[mid] - 1.0
    with np.errstate(divide="ignore", over="ignore"):
        out[mid] = np.exp(1.0 - 1.0 / (1.0 - y * y))
    return out


def dyadic_bump(x) -> np.ndarray:
    """phi(x) = eta(x) - eta(2x), supported on 1/2 <= |x| <= 2."""
    return smooth_cutoff(x) - smooth_cutoff(2.0 * np.asarray(x, dtype=float))


def dyadic_band(grid: Grid) -> np.ndarray:
    """Dyadic blocks N = 2^l resolvable on the grid.

    The band runs from the smallest power of two at or above the
    fundamental wavenumber pi/L up to the smallest one at or above the
    Nyquist wavenumber, so that the blocks plus one residual low block
    partition unity exactly on every grid frequency.
    """
    xi_min = np.pi / grid.half_length
    l_lo = int(np.ceil(np.log2(xi_min) - 1e-12))
    l_hi = int(np.ceil(np.log2(grid.xi_max) - 1e-12))
    return 2.0 ** np.arange(l_lo, l_hi + 1)


def lp_project(F: SpectralField, N: float) -> SpectralField:
    """Dyadic block projector with symbol phi(xi/N)."""
    band = dyadic_band(F.grid)
    if not np.any(np.isclose(band, N)):
        raise ValueError(f"block {N} outside resolvable band {band[0]}..{band[-1]}")
    return F.apply_multiplier(dyadic_bump(F.grid.xi / N))


def lp_project_below(F: SpectralField, N: float) -> SpectralField:
    """Projector onto frequencies below the block N, symbol eta(xi/N)."""
    return F.apply_multiplier(smooth_cutoff(F.grid.xi / N))


def lp_low_block(F: SpectralField) -> SpectralField:
    """Residual low block completing the dyadic partition on the grid."""
    nmin = dyadic_band(F.grid)[0]
    return F.apply_multiplier(smooth_cutoff(2.0 * F.grid.xi / nmin))


# ----------------------------------------------------------------------
# propagators

def airy_propagate(F: SpectralField, t: float) -> SpectralField:
    """Exact solution operator of u_t + u_xxx = 0: multiplier e^{i t xi^3}."""
    return F.apply_multiplier(np.exp(1j * t * F.grid.xi ** 3))


def dissipative_propagate(F: SpectralField, t: float, mu: float) -> SpectralField:
    """Multiplier e^{(i xi^3 - mu xi^2) t}; mu=0 recovers the Airy group."""
    if mu < 0:
        raise ValueError("viscosity must be non-negative")
    if mu > 0 and t < 0:
        raise ValueError("dissipative propagation is forward-only for mu > 0")
    xi = F.grid.xi
    return F.apply_multiplier(np.exp((1j * xi ** 3 - mu * xi ** 2) * t))


def smoothing_constant(r: float, a_lo: float = 1e-6, a_hi: float = 1e3) -> float:
    """Uniform constant C_r with sup_xi <xi>^r e^{-a xi^2} <= C_r (1 + a^-r)^(1/2),
    a = mu*t, obtained by one-dimensional maximization over xi and a."""
    if r < 0:
        raise ValueError("smoothing order must be non-negative")

    def symbol_sup(a):
        # maximize (r/2) log(1+y) - a*y over y >= 0; critical y = r/(2a) - 1
        y_star = max(r / (2.0 * a) - 1.0, 0.0)
        return np.exp(0.5 * r * np.log1p(y_star) - a * y_star)

    a_grid = np.logspace(np.log10(a_lo), np.log10(a_hi), 4001)
    ratios = [symbol_sup(a) / np.sqrt(1.0 + (2.0 * a) ** (-r)) for a in a_grid]
    return float(np.max(ratios))


# ----------------------------------------------------------------------
# bilinear machinery

def pseudoproduct(f: SpectralField, g: SpectralField, chi=None) -> SpectralField:
    """Bilinear operator with spectral symbol chi(xi, xi1).

    Output bin xi holds sum_{xi1} f_hat(xi1) g_hat(xi - xi1) chi(xi, xi1),
    the plane-wave coefficient convolution of the defining integral.  The
    sum runs over true (unwrapped) frequencies, so the result is free of
    aliasing; contributions beyond the grid band are dropped.  With
    chi identically 1 this is the dealiased pointwise product f*g.
    """
    if f.grid != g.grid:
        raise SizeMismatchError("pseudoproduct factors live on different grids")
    grid = f.grid
    n = grid.n
    order = np.argsort(grid.mode_index)
    j_sorted = grid.mode_index[order]          # -n/2 .. n/2-1
    fc = f.coeffs[order]
    gc = g.coeffs[order]

    # gather g_hat(xi - xi1) with zero extension outside the band
    g_ext = np.zeros(2 * n, dtype=complex)
    g_ext[j_sorted + n] = gc                    # index = mode + n
    out_modes = j_sorted                        # output band equals grid band
    diff = out_modes[:, None] - j_sorted[None, :]
    valid = (diff >= -n // 2) & (diff <= n // 2 - 1)
    gather = np.where(valid, g_ext[np.clip(diff + n, 0, 2 * n - 1)], 0.0)

    if chi is None:
        weights = np.ones((n, n))
    else:
        xi_out = np.pi * out_modes / grid.half_length
        xi_in = np.pi * j_sorted / grid.half_length
        weights = np.asarray(chi(xi_out[:, None], xi_in[None, :]), dtype=complex)

    conv = (gather * weights) @ fc
    inv = np.empty(n, dtype=int)
    inv[order] = np.arange(n)
    return SpectralField(grid, conv[inv])


def _pad_spectrum(F: SpectralField, n_pad: int):
    """Embed coefficients into a larger band, returning (samples, padded grid)."""
    grid = F.grid
    big = Grid(grid.half_length, n_pad)
    coeffs = np.zeros(n_pad, dtype=complex)
    j = grid.mode_index
    keep = np.abs(j) < grid.n // 2            # drop the lone Nyquist bin
    coeffs[j[keep] % n_pad] = F.coeffs[keep]
    return inverse_transform(SpectralField(big, coeffs)), big


def _truncate_spectrum(f_big: PhysicalField, grid: Grid) -> PhysicalField:
    F_big = transform(f_big)
    j_big = f_big.grid.mode_index
    coeffs = np.zeros(grid.n, dtype=complex)
    keep = np.abs(j_big) < grid.n // 2
    coeffs[j_big[keep] % grid.n] = F_big.coeffs[keep]
    return inverse_transform(SpectralField(grid, coeffs))


def tail_fraction_of_spectrum(grid: Grid, coeffs: np.ndarray,
                              floor: float = 1e-20) -> float:
    # fields below amplitude ~sqrt(floor) are roundoff noise and count as
    # resolved; a genuine resolution breach happens at O(1) amplitudes
    j = np.abs(grid.mode_index)
    total = np.sum(np.abs(coeffs) ** 2)
    tail = np.sum(np.abs(coeffs[j >= (3 * (grid.n // 2)) // 4]) ** 2)
    return float(np.sqrt(tail / max(total, floor)))


def spectral_tail_fraction(f: PhysicalField) -> float:
    """Fraction of spectral l2 mass in the top quarter of the band."""
    return tail_fraction_of_spectrum(f.grid, transform(f).coeffs)


def flux_coefficients(spec: SpectralField, bg, nl, t: float,
                      rule: str = "auto") -> np.ndarray:
    """Spectral coefficients of the dealiased flux f(u+Psi) - f(Psi).

    rule "auto" pads polynomial fluxes and low-passes transcendental ones;
    rule "lowpass" forces the low-pass path for every nonlinearity.
    """
    if rule not in ("auto", "lowpass"):
        raise ValueError(f"unknown dealias rule {rule!r}")
    grid = spec.grid
    degree = nl.polynomial_degree()
    if rule == "lowpass":
        degree = None
    if degree is not None and degree >= 2:
        pad = 1 << int(np.ceil(np.log2(grid.n * (degree + 1) / 2.0)))
        u_big, big = _pad_spectrum(spec, pad)
        psi_big = bg.profile(t, big.x)
        flux_big = PhysicalField(big, nl.f(u_big.values + psi_big) - nl.f(psi_big))
        big_coeffs = transform(flux_big).coeffs
        j_big = big.mode_index
        out = np.zeros(grid.n, dtype=complex)
        keep = np.abs(j_big) < grid.n // 2
        out[j_big[keep] % grid.n] = big_coeffs[keep]
        return out
    psi = bg.profile(t, grid.x)
    u_vals = inverse_transform(spec).values
    raw = PhysicalField(grid, nl.f(u_vals + psi) - nl.f(psi))
    coeffs = transform(raw).coeffs
    if degree is None:
        cutoff = 2.0 * grid.xi_max / 3.0
        coeffs = coeffs * (np.abs(grid.xi) <= cutoff)
    return coeffs


def nonlinear_flux(u: PhysicalField, bg, nl, t: float,
                   tail_threshold: float = 1e-6,
                   rule: str = "auto") -> PhysicalField:
    """Pointwise difference f(u + Psi(t)) - f(Psi(t)), dealiased.

    Polynomial nonlinearities of degree d are evaluated on a grid padded
    by the factor (d+1)/2, which removes every aliased image from the
    retained band.  Transcendental nonlinearities are evaluated pointwise
    on the native grid and low-passed at two thirds of the Nyquist band.
    """
    spec = transform(u)
    tail = tail_fraction_of_spectrum(u.grid, spec.coeffs)
    if tail > tail_threshold:
        raise UnresolvedFieldError(
            f"spectral tail {tail:.2e} exceeds threshold {tail_threshold:.2e}"
        )
    return inverse_transform(
        SpectralField(u.grid, flux_coefficients(spec, bg, nl, t, rule=rule)))


# ----------------------------------------------------------------------
# space-time transforms for trajectories

def trajectory_transform(traj: Trajectory):
    """Space-time plane-wave coefficients of a trajectory.

    The stored window is treated as one temporal period of length
    W = dt * n_times.  Returns (coeffs, taus, xis) with coeffs indexed
    as [temporal bin, spatial bin] in FFT ordering on both axes.
    """
    mat = traj.values_matrix()
    nt, nx = mat.shape
    window = traj.dt * nt
    taus = 2.0 * np.pi * np.fft.fftfreq(nt, d=traj.dt)
    xis = traj.grid.xi
    coeffs = np.fft.fft2(mat) / (nt * nx)
    phase_t = np.exp(-1j * taus * traj.t0)
    phase_x = np.exp(1j * xis * traj.grid.half_length)
    coeffs *= phase_t[:, None] * phase_x[None, :]
    return coeffs, taus, xis


def trajectory_from_spacetime(coeffs: np.ndarray, traj_like: Trajectory) -> Trajectory:
    """Inverse of :func:`trajectory_transform` onto the same lattice."""
    nt, nx = coeffs.shape
    taus = 2.0 * np.pi * np.fft.fftfreq(nt, d=traj_like.dt)
    xis = traj_like.grid.xi
    phase_t = np.exp(-1j * taus * traj_like.t0)
    phase_x = np.exp(1j * xis * traj_like.grid.half_length)
    mat = np.fft.ifft2(coeffs / (phase_t[:, None] * phase_x[None, :]) * (nt * nx))
    fields = [PhysicalField(traj_like.grid, row.real) for row in mat]
    return Trajectory(traj_like.grid, traj_like.t0, traj_like.dt, fields)
