"""Sobolev, frequency-enveloped and space-time (modulation-weighted) norms.

Space-time norms treat the stored trajectory window as one temporal period;
trajectories must decay at both window ends (extend them compactly first if
they do not), which makes the periodization exact to rounding.  Modulation
machinery weights space-time Fourier mass by its distance |tau - xi^3| to
the dispersive characteristic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .spectral import (
    Grid,
    PhysicalField,
    SpectralField,
    Trajectory,
    airy_propagate,
    bessel_potential,
    dyadic_band,
    dyadic_bump,
    inverse_transform,
    l2_norm,
    lp_low_block,
    lp_project,
    smooth_cutoff,
    trajectory_from_spacetime,
    trajectory_transform,
    transform,
)

__all__ = [
    "WeightSequence",
    "sobolev_norm",
    "enveloped_norm",
    "bourgain_norm",
    "modulation_band",
    "modulation_project",
    "modulation_partition_defect",
    "extend_trajectory",
    "resonance",
    "resonance_vanishing_check",
    "ResonanceCheck",
    "strichartz_certificate",
    "StrichartzCertificate",
    "trajectory_l2_linf",
    "trajectory_sup_sobolev",
    "trajectory_l2_sobolev",
]


# ----------------------------------------------------------------------
# spatial norms

def sobolev_norm(f: PhysicalField, s: float) -> float:
    """H^s norm via the Bessel multiplier and discrete Parseval."""
    coeffs = transform(f).coeffs
    weights = (1.0 + f.grid.xi ** 2) ** s
    return float(np.sqrt(2.0 * f.grid.half_length *
                         np.sum(weights * np.abs(coeffs) ** 2)))


@dataclass(frozen=True)
class WeightSequence:
    """Slowly varying dyadic weights {w_N} with growth exponent eps."""

    blocks: tuple
    weights: tuple
    eps: float

    def __post_init__(self):
        blocks = tuple(float(b) for b in self.blocks)
        weights = tuple(float(w) for w in self.weights)
        if len(blocks) != len(weights):
            raise ValueError("one weight per dyadic block required")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        growth = 2.0 ** self.eps
        for w0, w1 in zip(weights, weights[1:]):
            if not (w0 <= w1 * (1 + 1e-12) and w1 <= growth * w0 * (1 + 1e-12)):
                raise ValueError("weights must be nondecreasing with ratio <= 2^eps")
        if abs(weights[0] - 1.0) > 1e-6:
            raise ValueError("weights must approach 1 at the low edge")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "weights", weights)

    def __getitem__(self, block: float) -> float:
        for b, w in zip(self.blocks, self.weights):
            if np.isclose(b, block):
                return w
        raise KeyError(f"block {block} not in weight sequence")

    @classmethod
    def ones(cls, grid: Grid) -> "WeightSequence":
        blocks = dyadic_band(grid)
        return cls(tuple(blocks), (1.0,) * len(blocks), eps=0.0)

    @classmethod
    def bracket_power(cls, grid: Grid, eps: float) -> "WeightSequence":
        """w_N = (1 + N^2)^(eps/2), strictly increasing, ratio below 2^eps."""
        blocks = dyadic_band(grid)
        low = (1.0 + blocks[0] ** 2) ** (eps / 2.0)
        weights = ((1.0 + blocks ** 2) ** (eps / 2.0)) / low
        return cls(tuple(blocks), tuple(weights), eps=eps)


def enveloped_norm(f: PhysicalField, s: float, omega: WeightSequence) -> float:
    """Dyadic-block weighted H^s norm; the residual low block has weight 1."""
    spec = transform(f)
    total = l2_norm(inverse_transform(bessel_potential(lp_low_block(spec), s))) ** 2
    for block, weight in zip(omega.blocks, omega.weights):
        piece = l2_norm(inverse_transform(
            bessel_potential(lp_project(spec, block), s)))
        total += weight ** 2 * piece ** 2
    return float(np.sqrt(total))


# ----------------------------------------------------------------------
# trajectory norms

def _check_decaying_ends(traj: Trajectory, rel: float = 1e-10):
    mat = traj.values_matrix()
    peak = np.max(np.abs(mat))
    if peak == 0.0:
        return
    ends = max(np.max(np.abs(mat[0])), np.max(np.abs(mat[-1])))
    if ends > rel * peak:
        raise ValueError(
            "trajectory does not decay at its window ends; "
            "extend it compactly before taking space-time norms"
        )


def bourgain_norm(traj: Trajectory, s: float, b: float) -> float:
    """Dispersive-modulation weighted space-time norm.

    Weights each space-time Fourier coefficient by
    (1 + |tau - xi^3|)^(2b) <xi>^(2s); b = 0 collapses to the L^2_t H^s
    norm of the stored window.  The temporal lattice must reach beyond
    max |xi|^3 for b > 0 to be meaningful.
    """
    _check_decaying_ends(traj)
    coeffs, taus, xis = trajectory_transform(traj)
    modulation = 1.0 + np.abs(taus[:, None] - xis[None, :] ** 3)
    spatial = (1.0 + xis ** 2) ** s
    window = traj.dt * len(traj)
    mass = np.sum(modulation ** (2.0 * b) * spatial[None, :] *
                  np.abs(coeffs) ** 2)
    return float(np.sqrt(2.0 * traj.grid.half_length * window * mass))


def trajectory_l2_sobolev(traj: Trajectory, s: float) -> float:
    """L^2 in time of the spatial H^s norm over the stored window."""
    vals = [sobolev_norm(f, s) ** 2 for f in traj.fields]
    return float(np.sqrt(traj.dt * np.sum(vals)))


def trajectory_sup_sobolev(traj: Trajectory, s: float) -> float:
    return float(max(sobolev_norm(f, s) for f in traj.fields))


def trajectory_l2_linf(traj: Trajectory) -> float:
    """L^2 in time of the spatial sup norm."""
    sups = [np.max(np.abs(f.values)) ** 2 for f in traj.fields]
    return float(np.sqrt(traj.dt * np.sum(sups)))


# ----------------------------------------------------------------------
# modulation projectors

def modulation_band(traj: Trajectory) -> np.ndarray:
    """Nonhomogeneous dyadic blocks 1, 2, 4, ... covering the lattice."""
    _, taus, xis = trajectory_transform_shapes(traj)
    m_max = np.max(np.abs(taus[:, None] - xis[None, :] ** 3))
    l_hi = max(int(np.ceil(np.log2(max(m_max, 2.0)))), 1)
    return 2.0 ** np.arange(0, l_hi + 1)


def trajectory_transform_shapes(traj: Trajectory):
    nt = len(traj)
    taus = 2.0 * np.pi * np.fft.fftfreq(nt, d=traj.dt)
    xis = traj.grid.xi
    return nt, taus, xis


def _modulation_symbol(traj: Trajectory, L: float) -> np.ndarray:
    _, taus, xis = trajectory_transform_shapes(traj)
    m = taus[:, None] - xis[None, :] ** 3
    if L == 1.0:
        return smooth_cutoff(m)
    return dyadic_bump(m / L)


def modulation_project(traj: Trajectory, L: float) -> Trajectory:
    """Space-time multiplier localizing |tau - xi^3| to the block L."""
    _check_decaying_ends(traj)
    band = modulation_band(traj)
    if not np.any(np.isclose(band, L)):
        raise ValueError(f"modulation block {L} outside lattice band")
    coeffs, _, _ = trajectory_transform(traj)
    return trajectory_from_spacetime(coeffs * _modulation_symbol(traj, L), traj)


def modulation_partition_defect(traj: Trajectory) -> float:
    """Max deviation of the summed modulation symbols from 1 on the lattice."""
    band = modulation_band(traj)
    total = sum(_modulation_symbol(traj, L) for L in band)
    return float(np.max(np.abs(total - 1.0)))


# ----------------------------------------------------------------------
# compact extension of a time-restricted trajectory

def extend_trajectory(traj: Trajectory, window_half: float = 2.0) -> Trajectory:
    """Extend a trajectory on [0, T] to a compactly supported window.

    Implements  t -> U(t) eta(t) U(-clamp(t)) u(clamp(t))  on the lattice
    containing the input samples: inside [0, T] this restores the input
    exactly (for T <= 1 where the cutoff is flat), beyond it the last and
    first fields are propagated freely and damped by the smooth cutoff, so
    the output vanishes identically for |t| >= 2.
    """
    T = traj.duration
    if not 0.0 < T < 2.0:
        raise ValueError("extension requires a window duration in (0, 2)")
    if abs(traj.t0) > 1e-14:
        raise ValueError("extension expects a trajectory starting at t = 0")
    k_half = int(np.ceil(window_half / traj.dt))
    ks = np.arange(-k_half, k_half)
    fields = []
    spec_first = transform(traj.fields[0])
    spec_last = transform(traj.fields[-1])
    n_in = len(traj) - 1
    for k in ks:
        t = k * traj.dt
        cut = float(smooth_cutoff(np.array([t]))[0])
        if cut == 0.0:
            fields.append(PhysicalField.zero(traj.grid))
            continue
        if k < 0:
            prop = airy_propagate(spec_first, t)
            fields.append(PhysicalField(traj.grid,
                                        cut * inverse_transform(prop).values))
        elif k > n_in:
            prop = airy_propagate(spec_last, t - T)
            fields.append(PhysicalField(traj.grid,
                                        cut * inverse_transform(prop).values))
        else:
            fields.append(PhysicalField(traj.grid,
                                        cut * traj.fields[k].values))
    return Trajectory(traj.grid, -k_half * traj.dt, traj.dt, fields)


# ----------------------------------------------------------------------
# resonance arithmetic

def resonance(frequencies, factorized: bool = False):
    """Sum of cubes of the interacting frequencies.

    With three frequencies summing to zero the factorization
    3*xi1*xi2*xi3 is also returned when requested.
    """
    freqs = np.asarray(frequencies, dtype=float)
    total = float(np.sum(freqs ** 3))
    if not factorized:
        return total
    if freqs.size != 3:
        raise ValueError("factorized form is defined for three frequencies")
    if abs(np.sum(freqs)) > 1e-9 * max(np.max(np.abs(freqs)), 1.0):
        raise ValueError("factorized form requires frequencies summing to zero")
    return total, float(3.0 * freqs[0] * freqs[1] * freqs[2])


class ResonanceCheck(NamedTuple):
    magnitude: float
    scale: float
    vanishing_threshold: float
    vanishing_expected: bool
    n_terms: int


def _block_support(N: float, L: float, dxi: float, dtau: float):
    """Lattice points (j, k) where the block multipliers can be nonzero."""
    j_lo = int(np.floor(N / 2.0 / dxi))
    j_hi = int(np.ceil(2.0 * N / dxi))
    js = np.concatenate([np.arange(j_lo, j_hi + 1),
                         -np.arange(j_lo, j_hi + 1)])
    pts_j, pts_k = [], []
    width = 2.0 if L == 1.0 else 2.0 * L
    for j in js:
        center = (j * dxi) ** 3
        k_lo = int(np.floor((center - width) / dtau))
        k_hi = int(np.ceil((center + width) / dtau))
        for k in range(k_lo, k_hi + 1):
            pts_j.append(j)
            pts_k.append(k)
    return np.asarray(pts_j, dtype=np.int64), np.asarray(pts_k, dtype=np.int64)


def _synthetic_coeff(j, k, N, L, dxi, dtau, phase_t, phase_x):
    """Closed-form spectrum of a real field on the prescribed block."""
    xi = j * dxi
    tau = k * dtau
    m = tau - xi ** 3
    if L == 1.0:
        mod = smooth_cutoff(m)
    else:
        mod = dyadic_bump(m / L)
    return dyadic_bump(xi / N) * mod * np.exp(1j * (phase_t * tau + phase_x * xi))


def resonance_vanishing_check(space_blocks, modulation_blocks, chi=None,
                              domain_half_length: float = 8.0 * np.pi,
                              window_half_length: float = np.pi,
                              seed: int = 0) -> ResonanceCheck:
    """Multilinear space-time integral over prescribed frequency blocks.

    Synthesizes one real space-time field per block pair (space block N_i,
    modulation block L_i) with an analytic spectrum supported exactly where
    the block multipliers are nonzero, and evaluates the k-linear integral
    of their product (the first pair weighted by chi) as an exact lattice
    convolution.  Support arithmetic makes the integral vanish identically
    whenever every achievable resonance level exceeds the combined
    modulation budget.
    """
    Ns = [float(N) for N in space_blocks]
    Ls = [float(L) for L in modulation_blocks]
    if len(Ns) != len(Ls) or len(Ns) < 3:
        raise ValueError("need matching block lists of length at least 3")
    k_factors = len(Ns)
    dxi = np.pi / domain_half_length
    dtau = np.pi / window_half_length
    rng = np.random.default_rng(seed)
    phases = rng.uniform(-1.0, 1.0, size=(k_factors, 2))

    supports = [_block_support(N, L, dxi, dtau) for N, L in zip(Ns, Ls)]

    def coeff(i, j, k):
        return _synthetic_coeff(j, k, Ns[i], Ls[i], dxi, dtau,
                                phases[i, 0], phases[i, 1])

    def nonzero_support(i):
        js, ks = supports[i]
        if js.size:
            vals = coeff(i, js, ks)
            keep = np.abs(vals) > 0.0
            js, ks, vals = js[keep], ks[keep], vals[keep]
        else:
            vals = np.zeros(0, dtype=complex)
        if js.size == 0:
            raise ValueError(
                f"block (N={Ns[i]}, L={Ls[i]}) has empty support on this "
                f"lattice"
            )
        return js, ks, vals

    for i in range(k_factors):
        nonzero_support(i)
    j1, k1, v1 = nonzero_support(0)
    j2, k2, v2 = nonzero_support(1)
    if k_factors == 4:
        j3, k3, v3_vals = nonzero_support(2)

    total = 0.0 + 0.0j
    abs_total = 0.0
    chunk = max(1, int(2e6 // max(j2.size, 1)))
    for start in range(0, j1.size, chunk):
        sl = slice(start, start + chunk)
        ja = j1[sl][:, None]
        ka = k1[sl][:, None]
        va = v1[sl][:, None]
        jb = j2[None, :]
        kb = k2[None, :]
        vb = v2[None, :]
        j12 = ja + jb
        k12 = ka + kb
        pair = va * vb
        if chi is not None:
            pair = pair * chi((ja + jb) * dxi, ja * dxi)
        if k_factors == 3:
            v3 = _synthetic_coeff(-j12, -k12, Ns[2], Ls[2], dxi, dtau,
                                  phases[2, 0], phases[2, 1])
            total += np.sum(pair * v3)
            abs_total += np.sum(np.abs(pair) * np.abs(v3))
        elif k_factors == 4:
            for idx in range(j3.size):
                j123 = j12 + j3[idx]
                k123 = k12 + k3[idx]
                rest = pair * v3_vals[idx]
                v4 = _synthetic_coeff(-j123, -k123, Ns[3], Ls[3],
                                      dxi, dtau, phases[3, 0], phases[3, 1])
                total += np.sum(rest * v4)
                abs_total += np.sum(np.abs(rest) * np.abs(v4))
        else:
            raise NotImplementedError(
                "lattice integral implemented for 3 or 4 factors"
            )

    measure = (2.0 * domain_half_length) * (2.0 * window_half_length)
    magnitude = float(np.abs(total)) * measure
    scale = float(abs_total) * measure
    if scale == 0.0:
        block_norms = [float(np.sqrt(np.sum(np.abs(nonzero_support(i)[2]) ** 2)))
                       for i in range(k_factors)]
        scale = float(np.prod(block_norms)) * measure

    vanishing_threshold = Ns[0] * Ns[1] * Ns[2] / (2.0 ** 9 * k_factors)
    return ResonanceCheck(
        magnitude=magnitude,
        scale=scale,
        vanishing_threshold=vanishing_threshold,
        vanishing_expected=max(Ls) < vanishing_threshold,
        n_terms=int(j1.size) * int(j2.size),
    )


# ----------------------------------------------------------------------
# refined-Strichartz certificate

class StrichartzCertificate(NamedTuple):
    lhs: float
    rhs_state: float
    rhs_forcing: float

    def ratio(self) -> float:
        denom = self.rhs_state + self.rhs_forcing
        if denom == 0.0:
            return 0.0
        return self.lhs / denom


def _bessel_applied(f: PhysicalField, s: float) -> PhysicalField:
    return inverse_transform(bessel_potential(transform(f), s))


def strichartz_certificate(traj: Trajectory, forcing: Trajectory,
                           delta: float, theta: float,
                           residual_tol: float = 1e-4) -> StrichartzCertificate:
    """Smoothing-estimate certificate for a forced dispersive trajectory.

    Checks that traj solves u_t + u_xxx = forcing on its lattice (one-step
    Duhamel residual against the stated tolerance), then returns the triple

        ( ||u||_{L^2_T L^inf},
          T^(3/8) ||J^(-(1-delta)/4 + theta) u||_{L^inf_T L^2},
          T^(3/8) ||J^(-(1+3delta)/4 + theta) F||_{L^2_T L^2} ).

    A configuration passes when lhs <= C (rhs1 + rhs2) for the pinned C.
    """
    if delta < 0 or theta <= 0:
        raise ValueError("need delta >= 0 and theta > 0")
    if len(traj) != len(forcing) or abs(traj.dt - forcing.dt) > 1e-15:
        raise ValueError("state and forcing trajectories must share a lattice")

    peak = max(np.max(np.abs(traj.values_matrix())), 1e-300)
    worst = 0.0
    for m in range(len(traj) - 1):
        u0 = transform(traj.fields[m])
        u1 = traj.fields[m + 1].values
        f0 = transform(forcing.fields[m])
        f1 = transform(forcing.fields[m + 1])
        h = traj.dt
        free = airy_propagate(u0, h)
        duhamel = 0.5 * h * (airy_propagate(f0, h).coeffs + f1.coeffs)
        predicted = inverse_transform(
            SpectralField(traj.grid, free.coeffs + duhamel)).values
        worst = max(worst, float(np.max(np.abs(predicted - u1))))
    if worst > residual_tol * peak:
        raise ValueError(
            f"trajectory does not solve the forced dispersive equation: "
            f"residual {worst:.3e} vs tolerance {residual_tol:.1e} * {peak:.3e}"
        )

    T = traj.duration
    kappa = 3.0 / 8.0
    lhs = trajectory_l2_linf(traj)
    s_state = -(1.0 - delta) / 4.0 + theta
    s_forcing = -(1.0 + 3.0 * delta) / 4.0 + theta
    rhs_state = T ** kappa * max(
        l2_norm(_bessel_applied(f, s_state)) for f in traj.fields)
    rhs_forcing = T ** kappa * float(np.sqrt(traj.dt * np.sum(
        [l2_norm(_bessel_applied(f, s_forcing)) ** 2 for f in forcing.fields])))
    return StrichartzCertificate(float(lhs), float(rhs_state), float(rhs_forcing))
