"""Heat-capacity scan, peak finding, and per-organism regime estimates."""

import math

import numpy as np
import pytest

import oracles
from isingforage.criticality import (
    CriticalityParams,
    HeatCapacityCurve,
    default_grid,
    estimate_energy_variance,
    find_c_crit,
    heat_capacity_curve,
    organism_delta,
    population_delta,
    validate_criticality_params,
)
from isingforage.genome import random_genome
from isingforage.seeds import derive_rng


def exact_heat_capacity(genome, sensor_values, grid):
    """Exact C(c_beta) by full enumeration of the free-spin configurations."""
    energies = oracles.enumerate_energies(
        genome.adjacency, genome.weights, sensor_values,
        genome.n_hidden + genome.n_motors,
    )
    return energies, np.array([
        (c * genome.beta) ** 2
        * oracles.boltzmann_energy_variance(energies, c * genome.beta)
        for c in grid
    ])


def oracle_family_genome(k: int):
    """8-free-spin genome plus clamped sensor snapshot, content-keyed on k."""
    genome = random_genome(4, 4, 4, 1.0, derive_rng(77, "hc-oracle", "genome", k), 0.5)
    sensors = derive_rng(77, "hc-oracle", "sensors", k).uniform(-1.0, 1.0, 4)
    return genome, sensors


# ---------------------------------------------------------------- estimator


def test_variance_estimator_matches_enumeration_at_fast_points():
    # Grid points are kept only where the exact relaxation analysis says a
    # 2e5-sweep chain resolves Var(E) to well under a percent, so the 3%
    # bound is ~5 sigma. Slow (glassy) points are the acceptance suite's
    # business at much larger budgets.
    genome, sensors = oracle_family_genome(550)
    grid = default_grid(CriticalityParams())
    energies, exact = exact_heat_capacity(genome, sensors, grid)
    active = np.flatnonzero(exact > 0.01 * exact.max())
    fast = [
        int(i) for i in active
        if oracles.glauber_required_sweeps(energies, grid[i]) <= 5e3
    ]
    assert len(fast) >= 10
    params = CriticalityParams(n_therm=2000, n_sample=200000)
    for i in fast:
        var = estimate_energy_variance(
            genome, sensors, float(grid[i]), params, derive_rng(42, "fastpt", i)
        )
        mc = (grid[i] * genome.beta) ** 2 * var
        assert abs(mc - exact[i]) / exact[i] < 0.03


def test_trapped_chain_underestimates_glassy_variance():
    # Genome 0 of the oracle family needs ~1e17 sweeps at its worst active
    # point: the excited basin behind a multi-flip barrier carries most of
    # Var(E), and a 2e5-sweep chain started from the ground state never sees
    # it. This failure mode is why estimator budgets must respect the
    # relaxation requirement rather than a fixed sample count.
    genome, sensors = oracle_family_genome(0)
    grid = default_grid(CriticalityParams())
    energies, exact = exact_heat_capacity(genome, sensors, grid)
    i = 43
    assert oracles.glauber_required_sweeps(energies, grid[i]) > 1e9
    params = CriticalityParams(n_therm=2000, n_sample=200000)
    var = estimate_energy_variance(
        genome, sensors, float(grid[i]), params, derive_rng(900, "glassy", 0)
    )
    mc = (grid[i] * genome.beta) ** 2 * var
    assert mc < 0.5 * exact[i]


def test_estimator_rejects_nonpositive_scale():
    genome, sensors = oracle_family_genome(550)
    params = CriticalityParams(n_sample=100)
    with pytest.raises(ValueError):
        estimate_energy_variance(genome, sensors, 0.0, params, derive_rng(1))
    with pytest.raises(ValueError):
        estimate_energy_variance(genome, sensors, -1.0, params, derive_rng(1))


# ---------------------------------------------------------------- curve


def test_heat_capacity_curve_is_deterministic():
    genome, sensors = oracle_family_genome(550)
    grid = np.logspace(-1, 1, 8)
    params = CriticalityParams(n_therm=200, n_sample=2000)
    a = heat_capacity_curve(genome, sensors, grid, params, derive_rng(7, "det"))
    b = heat_capacity_curve(genome, sensors, grid, params, derive_rng(7, "det"))
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.grid, grid)
    assert a.n_therm == 200 and a.n_sample == 2000 and a.stride == 1


def test_heat_capacity_curve_copies_sensor_snapshot():
    genome, sensors = oracle_family_genome(550)
    sensors = np.asarray(sensors, dtype=float)
    params = CriticalityParams(n_therm=100, n_sample=500)
    curve = heat_capacity_curve(genome, sensors, [0.5, 1.0], params, derive_rng(3))
    sensors[0] = 99.0
    assert curve.sensor_values[0] != 99.0


def test_heat_capacity_curve_rejects_bad_grids():
    genome, sensors = oracle_family_genome(550)
    params = CriticalityParams(n_therm=100, n_sample=500)
    for bad in ([], [1.0, 1.0], [2.0, 1.0], [-1.0, 1.0], [0.0, 1.0]):
        with pytest.raises(ValueError):
            heat_capacity_curve(genome, sensors, bad, params, derive_rng(3))


def test_edgeless_network_curve_is_flat_zero():
    genome = random_genome(4, 4, 4, 1.0, derive_rng(5, "edgeless"), 0.0)
    assert not genome.adjacency.any()
    sensors = derive_rng(5, "edgeless-s").uniform(-1.0, 1.0, 4)
    grid = np.logspace(-1, 1, 8)
    params = CriticalityParams(n_therm=200, n_sample=2000)
    curve = heat_capacity_curve(genome, sensors, grid, params, derive_rng(5, "run"))
    assert np.all(curve.values == 0.0)


def test_rescaled_beta_shifts_peak_by_log_factor():
    # With identical weights, dynamics at (c, 2*beta) match (2c, beta), so
    # the fitted peak must slide down by log10(2) on the log grid.
    genome, sensors = oracle_family_genome(550)
    doubled = genome.copy()
    doubled.beta = 2.0
    grid = default_grid(CriticalityParams())
    params = CriticalityParams(n_therm=1000, n_sample=20000)
    est1 = find_c_crit(heat_capacity_curve(genome, sensors, grid, params,
                                           derive_rng(11, "scale", 1)))
    est2 = find_c_crit(heat_capacity_curve(doubled, sensors, grid, params,
                                           derive_rng(11, "scale", 2)))
    assert est1.flag == "ok" and est2.flag == "ok"
    step = math.log10(grid[1] / grid[0])
    assert abs((est1.delta - est2.delta) - math.log10(2.0)) < 2 * step


# ---------------------------------------------------------------- peak finding


def synthetic_curve(values, grid=None):
    grid = np.logspace(-2, 2, len(values)) if grid is None else grid
    return HeatCapacityCurve(
        grid=np.asarray(grid, dtype=float),
        values=np.asarray(values, dtype=float),
        n_therm=0, n_sample=0, stride=1, sensor_values=np.zeros(1),
    )


def test_find_c_crit_recovers_parabolic_peak_exactly():
    # A parabola in log10(c) passes through 3-point smoothing with its
    # vertex intact, so the refinement should hit it to float precision.
    grid = np.logspace(-2, 2, 64)
    x = np.log10(grid)
    est = find_c_crit(synthetic_curve(5.0 - 3.0 * (x - 0.5) ** 2, grid))
    assert est.flag == "ok"
    assert abs(est.delta - 0.5) < 1e-9
    assert est.c_beta_crit == pytest.approx(10.0 ** 0.5, rel=1e-9)


def test_find_c_crit_delta_is_log10_of_peak():
    x = np.log10(np.logspace(-2, 2, 32))
    est = find_c_crit(synthetic_curve(1.0 - (x + 1.0) ** 2))
    assert est.flag == "ok"
    assert est.delta == math.log10(est.c_beta_crit)


def test_find_c_crit_flags_boundary_peaks():
    x = np.log10(np.logspace(-2, 2, 16))
    rising = find_c_crit(synthetic_curve(np.exp(x)))
    assert rising.flag == "boundary"
    assert rising.c_beta_crit == pytest.approx(100.0)
    falling = find_c_crit(synthetic_curve(np.exp(-x)))
    assert falling.flag == "boundary"
    assert falling.c_beta_crit == pytest.approx(0.01)


def test_find_c_crit_flags_degenerate_curve():
    est = find_c_crit(synthetic_curve(np.zeros(16)))
    assert est.flag == "degenerate"
    assert math.isnan(est.delta) and math.isnan(est.c_beta_crit)


def test_find_c_crit_rejects_empty_curve():
    with pytest.raises(ValueError):
        find_c_crit(synthetic_curve([]))


def test_find_c_crit_noise_spike_smoothed_away():
    # One-point spikes come from sampling noise; the 3-point average must
    # prefer a broad peak over a taller isolated spike.
    x = np.log10(np.logspace(-2, 2, 64))
    values = np.exp(-((x - 1.0) ** 2) / 0.5)
    values[10] += 1.5 * values.max()
    est = find_c_crit(synthetic_curve(values))
    assert est.flag == "ok"
    assert abs(est.delta - 1.0) < 0.2


# ---------------------------------------------------------------- params


def test_params_validation():
    validate_criticality_params(CriticalityParams())
    for bad in (
        CriticalityParams(n_therm=-1),
        CriticalityParams(n_sample=1),
        CriticalityParams(stride=0),
        CriticalityParams(grid_points=2),
        CriticalityParams(grid_min=0.0),
        CriticalityParams(grid_min=2.0, grid_max=1.0),
        CriticalityParams(min_energy_restarts=0),
    ):
        with pytest.raises(ValueError):
            validate_criticality_params(bad)


def test_default_grid_shape_and_bounds():
    params = CriticalityParams()
    grid = default_grid(params)
    assert grid.shape == (64,)
    assert grid[0] == pytest.approx(1e-2)
    assert grid[-1] == pytest.approx(1e2)
    assert np.all(np.diff(np.log10(grid)) > 0)


# ---------------------------------------------------------------- population


def small_params():
    return CriticalityParams(n_therm=300, n_sample=1500, grid_points=16)


def test_organism_delta_edgeless_is_degenerate():
    genome = random_genome(4, 4, 4, 1.0, derive_rng(5, "edgeless"), 0.0)
    sensors = np.zeros(4)
    est = organism_delta(genome, sensors, small_params(), derive_rng(6))
    assert est.flag == "degenerate"
    assert math.isnan(est.delta)
    assert est.curve is None
    kept = organism_delta(genome, sensors, small_params(), derive_rng(6),
                          keep_curve=True)
    assert kept.curve is not None


def test_population_delta_is_permutation_invariant():
    genomes = [random_genome(4, 2, 2, 1.0, derive_rng(55, "tiny", k), 0.5)
               for k in range(3)]
    snaps = [derive_rng(55, "tiny-s", k).uniform(-1.0, 1.0, 4) for k in range(3)]
    fwd = population_delta(genomes, small_params(), derive_rng(21), snapshots=snaps)
    rev = population_delta(genomes[::-1], small_params(), derive_rng(21),
                           snapshots=snaps[::-1])
    assert np.array_equal(fwd.deltas, rev.deltas[::-1])
    assert fwd.mean == pytest.approx(rev.mean)
    assert fwd.spread == pytest.approx(rev.spread)


def test_population_delta_identical_organisms_agree():
    genome = random_genome(4, 2, 2, 1.0, derive_rng(55, "tiny", 7), 0.5)
    snap = derive_rng(55, "tiny-s", 7).uniform(-1.0, 1.0, 4)
    out = population_delta([genome, genome.copy()], small_params(),
                           derive_rng(31), snapshots=[snap, snap.copy()])
    assert out.deltas[0] == out.deltas[1]
    assert out.spread == 0.0


def test_population_delta_excludes_degenerate_from_aggregates():
    normal = random_genome(4, 2, 2, 1.0, derive_rng(55, "tiny", 7), 0.5)
    edgeless = random_genome(4, 4, 4, 1.0, derive_rng(5, "edgeless"), 0.0)
    out = population_delta(
        [normal, edgeless], small_params(), derive_rng(41),
        snapshots=[np.zeros(4), np.zeros(4)],
    )
    assert out.flags[1] == "degenerate"
    assert math.isnan(out.deltas[1])
    assert out.mean == out.deltas[0]
    assert out.median == out.deltas[0]
    assert out.spread == 0.0


def test_population_delta_rejects_bad_snapshots():
    genome = random_genome(4, 2, 2, 1.0, derive_rng(55, "tiny", 7), 0.5)
    with pytest.raises(ValueError):
        population_delta([genome], small_params(), derive_rng(1), snapshots=[])
    with pytest.raises(ValueError):
        population_delta([genome], small_params(), derive_rng(1),
                         snapshots=[np.zeros(3)])
