import numpy as np
import pytest
from scipy.integrate import quad

from gkdvlab.norms import (
    ResonanceCheck,
    WeightSequence,
    bourgain_norm,
    enveloped_norm,
    extend_trajectory,
    modulation_band,
    modulation_partition_defect,
    modulation_project,
    resonance,
    resonance_vanishing_check,
    sobolev_norm,
    strichartz_certificate,
    trajectory_l2_sobolev,
    trajectory_sup_sobolev,
)
from gkdvlab.spectral import (
    Grid,
    PhysicalField,
    SpectralField,
    Trajectory,
    airy_propagate,
    dyadic_band,
    inverse_transform,
    l2_norm,
    transform,
)


def free_trajectory(grid, u0, T, m, t0=0.0):
    spec = transform(u0)
    fields = [inverse_transform(airy_propagate(spec, t0 + k * T / m))
              for k in range(m + 1)]
    return Trajectory(grid, t0, T / m, fields)


# ----------------------------------------------------------------------
# Sobolev norms

def test_sobolev_zero_order_is_l2():
    grid = Grid(20.0, 256)
    rng = np.random.default_rng(0)
    f = PhysicalField(grid, rng.standard_normal(grid.n))
    assert abs(sobolev_norm(f, 0.0) - l2_norm(f)) < 1e-12


def test_sobolev_single_mode():
    grid = Grid(20.0, 256)
    j, A, s = 6, 1.7, 1.3
    xi1 = np.pi * j / grid.half_length
    f = PhysicalField(grid, A * np.cos(xi1 * grid.x))
    # two conjugate bins of amplitude A/2 each
    expected = A * np.sqrt(grid.half_length) * (1.0 + xi1 ** 2) ** (s / 2.0)
    assert abs(sobolev_norm(f, s) - expected) < 1e-10


def test_sobolev_gaussian_vs_quadrature():
    grid = Grid(20.0, 512)
    f = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    i0 = quad(lambda x: np.exp(-2 * x ** 2), -np.inf, np.inf)[0]
    i1 = quad(lambda x: (2 * x * np.exp(-x ** 2)) ** 2, -np.inf, np.inf)[0]
    oracle = np.sqrt(i0 + i1)
    assert abs(sobolev_norm(f, 1.0) - oracle) / oracle < 1e-8


def test_sobolev_monotone_in_order():
    grid = Grid(20.0, 256)
    rng = np.random.default_rng(1)
    f = PhysicalField(grid, rng.standard_normal(grid.n))
    values = [sobolev_norm(f, s) for s in (-1.0, -0.25, 0.0, 0.5, 1.0, 2.0)]
    assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


# ----------------------------------------------------------------------
# weight sequences and enveloped norms

def test_weight_sequence_validation():
    grid = Grid(20.0, 256)
    blocks = tuple(dyadic_band(grid))
    with pytest.raises(ValueError):
        WeightSequence(blocks, (1.0,) * (len(blocks) - 1), eps=0.1)
    with pytest.raises(ValueError):
        WeightSequence(blocks, tuple(2.0 ** np.arange(len(blocks))), eps=0.1)
    ws = WeightSequence.bracket_power(grid, 0.25)
    ratios = [b / a for a, b in zip(ws.weights, ws.weights[1:])]
    assert all(r <= 2 ** 0.25 + 1e-12 for r in ratios)
    assert abs(ws.weights[0] - 1.0) < 1e-6


def test_enveloped_zero_field():
    grid = Grid(20.0, 256)
    assert enveloped_norm(PhysicalField.zero(grid), 1.0,
                          WeightSequence.ones(grid)) == 0.0


def test_enveloped_two_sided_comparison():
    # with unit weights the enveloped norm differs from H^s only through
    # the overlap of the squared block symbols, measured per grid
    grid = Grid(20.0, 256)
    from gkdvlab.spectral import dyadic_bump, smooth_cutoff

    band = dyadic_band(grid)
    overlap = smooth_cutoff(2.0 * grid.xi / band[0]) ** 2
    for N in band:
        overlap = overlap + dyadic_bump(grid.xi / N) ** 2
    c1, c2 = np.sqrt(np.min(overlap)), np.sqrt(np.max(overlap))
    assert 0.0 < c1 <= c2 <= 1.5

    ws = WeightSequence.ones(grid)
    rng = np.random.default_rng(2)
    for seed in range(20):
        f = PhysicalField(grid, np.random.default_rng(seed).standard_normal(grid.n))
        h = sobolev_norm(f, 0.8)
        e = enveloped_norm(f, 0.8, ws)
        assert c1 * h - 1e-9 <= e <= c2 * h + 1e-9


def test_enveloped_single_mode_structure():
    grid = Grid(16.0 * np.pi, 512)
    band = dyadic_band(grid)
    N = band[len(band) // 2]
    j = int(round(N * grid.half_length / np.pi))
    xi1 = np.pi * j / grid.half_length
    f = PhysicalField(grid, np.cos(xi1 * grid.x))
    ws = WeightSequence.bracket_power(grid, 0.3)
    expected = ws[N] * (1.0 + xi1 ** 2) ** 0.5 * np.sqrt(grid.half_length)
    # the mode sits at a block center where only one block contributes
    assert abs(enveloped_norm(f, 1.0, ws) - expected) < 1e-8 * expected


# ----------------------------------------------------------------------
# space-time norms

def test_bourgain_b0_collapse():
    grid = Grid(20.0, 128)
    u0 = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    traj = extend_trajectory(free_trajectory(grid, u0, 0.5, 256))
    assert abs(bourgain_norm(traj, 1.0, 0.0)
               - trajectory_l2_sobolev(traj, 1.0)) < 1e-8


def test_bourgain_plane_wave_on_characteristic():
    # a single space-time plane wave with tau = xi^3 carries modulation
    # weight one: its X^{s,b} norm is b-independent
    grid = Grid(16.0 * np.pi, 64)
    j = 8
    xi1 = np.pi * j / grid.half_length
    tau = xi1 ** 3
    window = 2.0 * np.pi / tau * 64
    dt = window / 256
    fields = [PhysicalField(grid, np.cos(xi1 * grid.x + tau * (k * dt)))
              for k in range(256)]
    traj = Trajectory(grid, 0.0, dt, fields)
    # the wave is genuinely time-periodic, so read the lattice spectrum
    # directly instead of going through the decay precondition
    from gkdvlab.spectral import trajectory_transform

    coeffs, taus, xis = trajectory_transform(traj)
    mod = 1.0 + np.abs(taus[:, None] - xis[None, :] ** 3)
    mass = np.abs(coeffs) ** 2
    weighted = np.sum(mod[mass > 1e-20] * mass[mass > 1e-20])
    plain = np.sum(mass)
    assert abs(weighted / plain - 1.0) < 1e-6


def test_bourgain_requires_decaying_ends():
    grid = Grid(20.0, 64)
    u0 = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    traj = free_trajectory(grid, u0, 0.5, 64)
    with pytest.raises(ValueError):
        bourgain_norm(traj, 1.0, 1.0)


def test_free_solution_bound_pinned():
    # ||ext(U(t)u0)||_{X^{1,1}} / ||u0||_{H^1} measured once: about 3.12
    grid = Grid(20.0, 128)
    u0 = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    traj = extend_trajectory(free_trajectory(grid, u0, 0.5, 256))
    ratio = bourgain_norm(traj, 1.0, 1.0) / sobolev_norm(u0, 1.0)
    assert 2.5 < ratio < 3.8


# ----------------------------------------------------------------------
# modulation projectors

def test_modulation_partition_exact():
    grid = Grid(20.0, 128)
    u0 = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    traj = extend_trajectory(free_trajectory(grid, u0, 0.5, 256))
    assert modulation_partition_defect(traj) < 1e-12


def test_modulation_reconstruction():
    grid = Grid(20.0, 64)
    u0 = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    traj = extend_trajectory(free_trajectory(grid, u0, 0.5, 128))
    total = np.zeros((len(traj), grid.n))
    for L in modulation_band(traj):
        piece = modulation_project(traj, L)
        total += piece.values_matrix()
    assert np.max(np.abs(total - traj.values_matrix())) < 1e-10


def test_modulation_zero_trajectory():
    grid = Grid(20.0, 64)
    fields = [PhysicalField.zero(grid) for _ in range(64)]
    traj = Trajectory(grid, -1.0, 2.0 / 64, fields)
    out = modulation_project(traj, 1.0)
    assert np.max(np.abs(out.values_matrix())) == 0.0


def test_windowed_free_solution_concentrates_at_low_modulation():
    grid = Grid(20.0, 128)
    u0 = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    dt = 1.0 / 512
    K = int(7.5 / dt)
    spec = transform(u0)
    fields = []
    for k in range(-K, K):
        t = k * dt
        w = np.exp(-(t / 1.5) ** 2)
        fields.append(PhysicalField(
            grid, w * inverse_transform(airy_propagate(spec, t)).values))
    traj = Trajectory(grid, -K * dt, dt, fields)

    def mass(tr):
        return sum(np.sum(f.values ** 2) for f in tr.fields)

    q1 = modulation_project(traj, 1.0)
    q2 = modulation_project(traj, 2.0)
    low = Trajectory(grid, traj.t0, traj.dt,
                     [PhysicalField(grid, a.values + b.values)
                      for a, b in zip(q1.fields, q2.fields)])
    assert mass(low) / mass(traj) >= 0.99


# ----------------------------------------------------------------------
# compact extension

def test_extension_restriction_identity():
    grid = Grid(20.0, 128)
    u0 = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    traj = free_trajectory(grid, u0, 0.5, 64)
    ext = extend_trajectory(traj)
    offset = int(round(-ext.t0 / ext.dt))
    for k in range(len(traj)):
        assert np.array_equal(ext.fields[offset + k].values,
                              traj.fields[k].values)


def test_extension_vanishes_outside_support():
    grid = Grid(20.0, 128)
    u0 = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    ext = extend_trajectory(free_trajectory(grid, u0, 0.5, 64))
    for t, f in zip(ext.times, ext.fields):
        if abs(t) >= 2.0:
            assert np.max(np.abs(f.values)) == 0.0


def test_extension_of_free_solution_is_windowed_free_solution():
    grid = Grid(20.0, 128)
    u0 = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    traj = free_trajectory(grid, u0, 0.5, 64)
    ext = extend_trajectory(traj)
    from gkdvlab.spectral import smooth_cutoff

    spec = transform(u0)
    for t, f in zip(ext.times, ext.fields):
        w = float(smooth_cutoff(np.array([t]))[0])
        expected = w * inverse_transform(airy_propagate(spec, float(t))).values
        assert np.max(np.abs(f.values - expected)) < 1e-12


def test_extension_rejects_long_windows():
    grid = Grid(20.0, 64)
    u0 = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    with pytest.raises(ValueError):
        extend_trajectory(free_trajectory(grid, u0, 2.5, 64))


# ----------------------------------------------------------------------
# resonance arithmetic

def test_resonance_trivial_cancellation():
    assert resonance([1.3, -1.3, 0.0]) == 0.0


def test_resonance_integer_identity():
    total, fact = resonance([1.0, 2.0, -3.0], factorized=True)
    assert total == -18.0
    assert fact == -18.0


def test_resonance_random_triples():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a, b = rng.uniform(-5, 5, size=2)
        c = -(a + b)
        total, fact = resonance([a, b, c], factorized=True)
        assert abs(total - fact) < 1e-10 * max(abs(total), 1.0)


def test_resonance_factorization_needs_zero_sum():
    with pytest.raises(ValueError):
        resonance([1.0, 2.0, 3.0], factorized=True)


# ----------------------------------------------------------------------
# block-localized multilinear integral

def test_resonance_vanishing_three_factors():
    chk = resonance_vanishing_check([32, 32, 16], [1, 1, 1])
    assert isinstance(chk, ResonanceCheck)
    assert chk.vanishing_expected
    assert chk.magnitude <= 1e-12 * chk.scale


def test_resonance_vanishing_four_factors():
    chk = resonance_vanishing_check(
        [16, 16, 8, 1], [1, 1, 1, 1],
        domain_half_length=4.0 * np.pi, window_half_length=np.pi / 2.0)
    assert chk.magnitude <= 1e-12 * chk.scale


def test_resonance_witness_nonzero():
    chk = resonance_vanishing_check([4, 4, 2], [1, 1, 32])
    assert not chk.vanishing_expected
    assert chk.magnitude > 1e-6 * chk.scale


def test_resonance_zero_factor():
    # a block with no lattice support is a configuration error
    with pytest.raises(ValueError):
        resonance_vanishing_check([32, 32, 0.001], [1, 1, 1])


def test_norm_values_regression_fixture():
    # deterministic fixture pinned at first release; values must be stable
    grid = Grid(20.0, 128)
    rng = np.random.default_rng(42)
    c = np.zeros(grid.n, dtype=complex)
    amps = rng.standard_normal(15) + 1j * rng.standard_normal(15)
    c[1:16] = amps
    c[-15:] = np.conj(amps[::-1])
    c[0] = 0.5
    u0 = inverse_transform(SpectralField(grid, c))
    spec = transform(u0)
    m = 256
    fields = [inverse_transform(airy_propagate(spec, k * 0.5 / m))
              for k in range(m + 1)]
    traj = Trajectory(grid, 0.0, 0.5 / m, fields)
    ext = extend_trajectory(traj)
    pinned = {
        "sup_sobolev": 59.098775402482936,
        "l2_sobolev": 41.87068471927492,
        "bourgain11": 188.3473733971492,
    }
    got = {
        "sup_sobolev": trajectory_sup_sobolev(traj, 1.0),
        "l2_sobolev": trajectory_l2_sobolev(traj, 1.0),
        "bourgain11": bourgain_norm(ext, 1.0, 1.0),
    }
    for key, want in pinned.items():
        assert abs(got[key] - want) <= 1e-10 * want, (key, got[key])


# ----------------------------------------------------------------------
# smoothing certificate

def test_strichartz_zero_trajectory():
    grid = Grid(20.0, 128)
    fields = [PhysicalField.zero(grid) for _ in range(33)]
    traj = Trajectory(grid, 0.0, 0.5 / 32, fields)
    forcing = Trajectory(grid, 0.0, 0.5 / 32,
                         [PhysicalField.zero(grid) for _ in range(33)])
    cert = strichartz_certificate(traj, forcing, delta=0.0, theta=0.01)
    assert cert.lhs == 0.0 and cert.rhs_state == 0.0 and cert.rhs_forcing == 0.0


def test_strichartz_free_gaussian_pinned():
    grid = Grid(20.0, 256)
    u0 = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    m = 128
    traj = free_trajectory(grid, u0, 0.5, m)
    zero = Trajectory(grid, 0.0, 0.5 / m,
                      [PhysicalField.zero(grid) for _ in range(m + 1)])
    cert = strichartz_certificate(traj, zero, delta=0.0, theta=0.01,
                                  residual_tol=1e-10)
    # measured once: ratio about 0.72; pinned with a regression band
    assert 0.4 < cert.ratio() < 1.5


def test_strichartz_forced_solver_run():
    from gkdvlab.background import ZeroBackground
    from gkdvlab.nonlinearity import AnalyticNonlinearity
    from gkdvlab.solver import SolverConfig, evolve
    from gkdvlab.spectral import nonlinear_flux, spatial_derivative

    bg = ZeroBackground()
    nl = AnalyticNonlinearity.kdv()
    grid = Grid(50.0, 512)
    u0 = PhysicalField.sample(grid, lambda x: np.exp(-x ** 2))
    cfg = SolverConfig(dt=1e-4, horizon=0.5, cadence=5)
    run = evolve(u0, bg, nl, cfg)
    forcing_fields = []
    for t, f in zip(run.times, run.fields):
        flux = nonlinear_flux(f, bg, nl, float(t))
        forcing_fields.append(
            inverse_transform(spatial_derivative(transform(flux), 1)) * -1.0)
    forcing = Trajectory(grid, 0.0, run.dt, forcing_fields)
    cert = strichartz_certificate(run, forcing, delta=1.0, theta=0.01,
                                  residual_tol=1e-5)
    # measured once: ratio about 0.53; the pinned constant 1.5 covers the
    # free and the forced configurations
    assert cert.ratio() <= 1.5


def test_strichartz_rejects_non_solutions():
    grid = Grid(20.0, 128)
    rng = np.random.default_rng(4)
    fields = [PhysicalField(grid, rng.standard_normal(grid.n))
              for _ in range(17)]
    traj = Trajectory(grid, 0.0, 0.5 / 16, fields)
    zero = Trajectory(grid, 0.0, 0.5 / 16,
                      [PhysicalField.zero(grid) for _ in range(17)])
    with pytest.raises(ValueError):
        strichartz_certificate(traj, zero, delta=0.0, theta=0.01,
                               residual_tol=1e-6)
