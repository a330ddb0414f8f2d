"""Conserved functionals, growth monitors and quantitative stability experiments.

The functionals follow the catalog conventions exactly: the energy carries
no 1/2 on the gradient term while the modified energy does; both are kept
as written rather than reconciled.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .background import Background, residual_S
from .nonlinearity import AnalyticNonlinearity
from .norms import WeightSequence, enveloped_norm, sobolev_norm
from .solver import SolverConfig, boundary_mass_fraction, evolve
from .spectral import (
    Grid,
    PhysicalField,
    Trajectory,
    inverse_transform,
    l2_norm,
    lp_project,
    spatial_derivative,
    transform,
)

__all__ = [
    "invariants_I",
    "modified_energy",
    "l2_growth_monitor",
    "GrowthVerdict",
    "flow_lipschitz_experiment",
    "LipschitzTable",
    "envelope_tail_monitor",
    "DiagnosticsReport",
    "collect_report",
]


def _integrate(grid: Grid, values: np.ndarray) -> float:
    """Periodic quadrature; exact for band-limited integrands."""
    return float(grid.dx * np.sum(values))


def invariants_I(v: PhysicalField, nl: AnalyticNonlinearity):
    """Mean, mass and energy of a localized field.

    I1 = int v,  I2 = int v^2,  I3 = int (v_x^2 - F(v)).
    """
    grid = v.grid
    v_x = inverse_transform(spatial_derivative(transform(v), 1)).values
    i1 = _integrate(grid, v.values)
    i2 = _integrate(grid, v.values ** 2)
    i3 = _integrate(grid, v_x ** 2 - nl.F(v.values))
    return i1, i2, i3


def modified_energy(u: PhysicalField, bg: Background, nl: AnalyticNonlinearity,
                    t: float) -> float:
    """Energy adapted to the background:

        E = 1/2 int u_x^2 - int ( F(u+Psi) - F(Psi) - u f(Psi) ).

    The second integrand is quadratic in u near u = 0, so it decays
    wherever u decays and the truncated integral converges on refinement.
    """
    grid = u.grid
    psi = bg.profile(t, grid.x)
    u_x = inverse_transform(spatial_derivative(transform(u), 1)).values
    bulk = nl.F(u.values + psi) - nl.F(psi) - u.values * nl.f(psi)
    return 0.5 * _integrate(grid, u_x ** 2) - _integrate(grid, bulk)


@dataclass(frozen=True)
class GrowthVerdict:
    holds: bool
    forcing_level: float          # A = sup_t ||S||_L2^2
    growth_rate: float            # B = 1 + M * sup |Psi_x|
    curvature_bound: float        # M over the attained range, padded
    worst_margin: float           # min over samples of bound - ||u||^2

    def __bool__(self):
        return self.holds


def l2_growth_monitor(traj: Trajectory, bg: Background,
                      nl: AnalyticNonlinearity) -> GrowthVerdict:
    """Check the exponential mass bound with reconstructed constants.

    Pointwise in time the monitor requires

        ||u(t)||^2 <= ( ||u(0)||^2 + t*A ) * exp(B*t),

    with A the worst forcing mass sup_t ||S||^2 and B = 1 + M*sup|Psi_x|,
    where M bounds |f''| over the attained range of u + Psi padded by 10%.
    The constants retrace the energy argument: Young's inequality on the
    forcing pairing and the second-order Taylor remainder of f.
    """
    grid = traj.grid
    lo, hi = np.inf, -np.inf
    sup_psi_x = 0.0
    sup_forcing_sq = 0.0
    for t in traj.times:
        jet = bg.jet(float(t), grid.x)
        total = traj.fields[int(round((t - traj.t0) / traj.dt))].values + jet.psi
        lo = min(lo, float(np.min(total)))
        hi = max(hi, float(np.max(total)))
        sup_psi_x = max(sup_psi_x, float(np.max(np.abs(jet.psi_x))))
        forcing = residual_S(bg, nl, float(t), grid)
        sup_forcing_sq = max(sup_forcing_sq, l2_norm(forcing) ** 2)
    pad = 0.1 * max(abs(lo), abs(hi), 1e-30)
    M = nl.gwp_bound(lo - pad, hi + pad).M
    B = 1.0 + M * sup_psi_x
    A = sup_forcing_sq

    mass0 = l2_norm(traj.fields[0]) ** 2
    worst = np.inf
    holds = True
    for t, f in zip(traj.times, traj.fields):
        bound = (mass0 + float(t) * A) * np.exp(B * float(t))
        margin = bound - l2_norm(f) ** 2
        worst = min(worst, margin)
        if margin < -1e-9 * max(bound, 1.0):
            holds = False
    return GrowthVerdict(holds, A, B, M, float(worst))


@dataclass(frozen=True)
class LipschitzTable:
    deltas: tuple
    ratios: tuple

    def bounded_by(self, limit: float) -> bool:
        return all(r <= limit for r in self.ratios)

    def spread(self) -> float:
        return max(self.ratios) / min(self.ratios) - 1.0


def flow_lipschitz_experiment(u0: PhysicalField, bg: Background,
                              nl: AnalyticNonlinearity, config: SolverConfig,
                              deltas, s: float = 1.0,
                              profile: PhysicalField | None = None) -> LipschitzTable:
    """Growth ratio of solution separation against data separation.

    For each delta, runs the flow from u0 and from u0 + delta*g (g a fixed
    unit-H^(s-1) profile) and records

        R(delta) = sup_{t<=T} ||u - v||_{H^(s-1)} / ||u0 - v0||_{H^(s-1)}.

    A bounded, delta-stable table is the quantitative trace of Lipschitz
    continuity of the flow map at the difference regularity.
    """
    deltas = [float(d) for d in deltas]
    if any(d <= 0 for d in deltas):
        raise ValueError("perturbation sizes must be positive")
    grid = u0.grid
    if profile is None:
        bump = np.exp(-((grid.x + 3.0) / 1.5) ** 2)
        profile = PhysicalField(grid, bump)
    norm_g = sobolev_norm(profile, s - 1.0)
    g = PhysicalField(grid, profile.values / norm_g)

    base = evolve(u0, bg, nl, config)
    ratios = []
    for delta in deltas:
        shifted = PhysicalField(grid, u0.values + delta * g.values)
        run = evolve(shifted, bg, nl, config)
        denom = sobolev_norm(shifted - u0, s - 1.0)
        worst = max(
            sobolev_norm(a - b, s - 1.0)
            for a, b in zip(run.fields, base.fields)
        )
        ratios.append(float(worst / denom))
    return LipschitzTable(tuple(deltas), tuple(ratios))


def envelope_tail_monitor(traj: Trajectory, s: float, omega: WeightSequence):
    """sup over time of the weighted dyadic mass above each cut block.

    Returns {N*: sup_t sum_{N > N*} w_N^2 <N>^2s ||P_N u(t)||_L2^2} for every
    block in the band; tails decreasing in N* witness the equicontinuity
    behind flow-map continuity.  The weights must increase strictly toward
    the band edge, otherwise the tails carry no envelope information.
    """
    if not all(a < b for a, b in zip(omega.weights, omega.weights[1:])):
        raise ValueError("tail monitoring needs strictly increasing weights")
    blocks = np.asarray(omega.blocks)
    tails = {float(nstar): 0.0 for nstar in blocks}
    for f in traj.fields:
        spec = transform(f)
        masses = []
        for block, weight in zip(omega.blocks, omega.weights):
            piece = lp_project(spec, block)
            mass = (weight ** 2 * (1.0 + block ** 2) ** s *
                    l2_norm(inverse_transform(piece)) ** 2)
            masses.append(mass)
        cum = np.cumsum(masses[::-1])[::-1]
        for i, nstar in enumerate(blocks):
            tail = float(cum[i + 1]) if i + 1 < len(cum) else 0.0
            tails[float(nstar)] = max(tails[float(nstar)], tail)
    return tails


@dataclass
class DiagnosticsReport:
    """Per-sample functional series plus experiment verdicts."""

    times: list = field(default_factory=list)
    i1: list = field(default_factory=list)
    i2: list = field(default_factory=list)
    i3: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    hs: list = field(default_factory=list)
    hs_enveloped: list = field(default_factory=list)
    boundary: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)

    def validate(self):
        ts = np.asarray(self.times)
        if ts.size > 1 and not np.all(np.diff(ts) > 0):
            raise ValueError("sample times must be strictly increasing")
        for series in (self.i1, self.i2, self.i3, self.energy, self.hs,
                       self.hs_enveloped, self.boundary):
            if not np.all(np.isfinite(series)):
                raise ValueError("report contains non-finite entries")

    def write_csv(self, path):
        self.validate()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "I1", "I2", "I3", "E", "Hs", "Hs_omega",
                             "boundary_mass"])
            for row in zip(self.times, self.i1, self.i2, self.i3, self.energy,
                           self.hs, self.hs_enveloped, self.boundary):
                writer.writerow([f"{v:.16e}" for v in row])

    def write_verdicts(self, path):
        with open(path, "w") as fh:
            for name, (passed, detail) in sorted(self.verdicts.items()):
                status = "PASS" if passed else "FAIL"
                fh.write(f"{name}: {status} ({detail})\n")

    @property
    def all_pass(self) -> bool:
        return all(flag for flag, _ in self.verdicts.values())


def collect_report(traj: Trajectory, bg: Background, nl: AnalyticNonlinearity,
                   s: float, omega: WeightSequence | None = None,
                   buffer_fraction: float = 0.1) -> DiagnosticsReport:
    """Evaluate the standard functional series along a trajectory."""
    omega = omega or WeightSequence.ones(traj.grid)
    report = DiagnosticsReport()
    for t, f in zip(traj.times, traj.fields):
        i1, i2, i3 = invariants_I(f, nl)
        report.times.append(float(t))
        report.i1.append(i1)
        report.i2.append(i2)
        report.i3.append(i3)
        report.energy.append(modified_energy(f, bg, nl, float(t)))
        report.hs.append(sobolev_norm(f, s))
        report.hs_enveloped.append(enveloped_norm(f, s, omega))
        report.boundary.append(boundary_mass_fraction(f, buffer_fraction))
    report.validate()
    return report
