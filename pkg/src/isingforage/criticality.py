"""Dynamical-regime measurement via the heat capacity of the controller.

The network is scanned over a log grid of inverse-temperature scaling
factors c_beta with the sensors clamped to a fixed snapshot. At each point
the heat capacity is C(c_beta) = c_beta^2 * beta^2 * Var(E) from Glauber
sampling started at a minimum-energy state. The scaling factor maximizing
the (smoothed) curve locates the critical point; its base-10 logarithm,
delta, is the organism's distance from criticality: delta < 0 means the
native dynamics are subcritical (frozen), delta > 0 supercritical
(disordered), delta near 0 critical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import min_energy_state, sample_energies
from .genome import Genome, genome_to_json
from .seeds import derive_rng


@dataclass
class CriticalityParams:
    n_therm: int = 2000        # discarded sweeps before sampling
    n_sample: int = 10000      # recorded sweeps
    stride: int = 1            # keep every stride-th recorded energy
    grid_points: int = 64
    grid_min: float = 1e-2
    grid_max: float = 1e2
    resync_every: int = 1024   # full energy recomputation interval
    min_energy_restarts: int = 10


def validate_criticality_params(params: CriticalityParams) -> None:
    if params.n_therm < 0 or params.n_sample < 2:
        raise ValueError("need n_therm >= 0 and n_sample >= 2")
    if params.stride < 1 or params.grid_points < 3:
        raise ValueError("need stride >= 1 and grid_points >= 3")
    if not (0 < params.grid_min < params.grid_max):
        raise ValueError("grid bounds must satisfy 0 < grid_min < grid_max")
    if params.min_energy_restarts < 1:
        raise ValueError("min_energy_restarts must be positive")


def default_grid(params: CriticalityParams) -> np.ndarray:
    return np.logspace(
        math.log10(params.grid_min), math.log10(params.grid_max), params.grid_points
    )


@dataclass
class HeatCapacityCurve:
    grid: np.ndarray          # c_beta values, strictly increasing
    values: np.ndarray        # C(c_beta) per grid point, >= 0
    n_therm: int
    n_sample: int
    stride: int
    sensor_values: np.ndarray


@dataclass
class RegimeEstimate:
    c_beta_crit: float
    delta: float              # log10(c_beta_crit); NaN when flag == "degenerate"
    flag: str                 # "ok" | "boundary" | "degenerate"
    curve: HeatCapacityCurve | None = None


def estimate_energy_variance(
    genome: Genome,
    sensor_values,
    c_beta: float,
    params: CriticalityParams,
    rng: np.random.Generator,
) -> float:
    """Sample variance of the post-sweep energy at scaling factor c_beta.

    Sampling starts from a minimum-energy state under the clamped sensors so
    cold grid points begin in the dominant mode instead of waiting for a
    slow quench.
    """
    if c_beta <= 0:
        raise ValueError("c_beta must be positive")
    state = min_energy_state(
        genome, sensor_values, rng, restarts=params.min_energy_restarts
    )
    energies = sample_energies(
        genome, state, c_beta, params.n_therm, params.n_sample, rng,
        resync_every=params.resync_every,
    )
    if params.stride > 1:
        energies = energies[:: params.stride]
    return float(np.var(energies, ddof=1))


def heat_capacity_curve(
    genome: Genome,
    sensor_values,
    grid,
    params: CriticalityParams,
    rng: np.random.Generator,
) -> HeatCapacityCurve:
    """C(c_beta) over the grid; each point runs on its own derived stream."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be positive and strictly increasing")
    seeds = rng.integers(0, 2**63, size=grid.size)
    values = np.empty(grid.size)
    for k in range(grid.size):
        sub = np.random.Generator(np.random.Philox(int(seeds[k])))
        var = estimate_energy_variance(genome, sensor_values, float(grid[k]), params, sub)
        values[k] = (grid[k] * genome.beta) ** 2 * var
    return HeatCapacityCurve(
        grid=grid,
        values=values,
        n_therm=params.n_therm,
        n_sample=params.n_sample,
        stride=params.stride,
        sensor_values=np.asarray(sensor_values, dtype=float).copy(),
    )


def _smooth3(values: np.ndarray) -> np.ndarray:
    """3-point moving average with truncated windows at the ends."""
    out = np.empty_like(values)
    n = values.size
    for i in range(n):
        lo = max(0, i - 1)
        hi = min(n, i + 2)
        out[i] = values[lo:hi].mean()
    return out


def find_c_crit(curve: HeatCapacityCurve) -> RegimeEstimate:
    """Peak of the smoothed curve, refined parabolically on the log grid."""
    v = curve.values
    if v.size == 0:
        raise ValueError("empty curve")
    if not np.any(v > 0):
        return RegimeEstimate(math.nan, math.nan, "degenerate", curve)
    smooth = _smooth3(v)
    k = int(np.argmax(smooth))
    x = np.log10(curve.grid)
    if k == 0 or k == v.size - 1:
        c_crit = float(curve.grid[k])
        return RegimeEstimate(c_crit, math.log10(c_crit), "boundary", curve)
    denom = smooth[k - 1] - 2.0 * smooth[k] + smooth[k + 1]
    if denom >= 0.0:
        x_star = x[k]
    else:
        h = 0.5 * (x[k + 1] - x[k - 1])
        x_star = x[k] + 0.5 * h * (smooth[k - 1] - smooth[k + 1]) / denom
        x_star = min(max(x_star, x[k - 1]), x[k + 1])
    c_crit = 10.0 ** float(x_star)
    return RegimeEstimate(c_crit, math.log10(c_crit), "ok", curve)


def organism_delta(
    genome: Genome,
    sensor_values,
    params: CriticalityParams,
    rng: np.random.Generator,
    keep_curve: bool = False,
) -> RegimeEstimate:
    curve = heat_capacity_curve(genome, sensor_values, default_grid(params), params, rng)
    estimate = find_c_crit(curve)
    if not keep_curve:
        estimate.curve = None
    return estimate


@dataclass
class PopulationDelta:
    deltas: np.ndarray
    flags: list[str]
    mean: float
    median: float
    spread: float


def population_delta(
    organisms,
    params: CriticalityParams,
    rng: np.random.Generator,
    snapshots=None,
) -> PopulationDelta:
    """Per-organism delta with sensors clamped to each end-of-lifetime snapshot.

    Each organism's stream is keyed on its genome and snapshot content (plus
    one base draw from `rng`), so the result is invariant under reordering
    the population. Flagged degenerate estimates are excluded from the
    aggregates.
    """
    if snapshots is None:
        snapshots = [
            org.state.values[: org.genome.n_sensors].copy() for org in organisms
        ]
    if len(snapshots) != len(organisms):
        raise ValueError("one sensor snapshot per organism is required")
    base = int(rng.integers(0, 2**63))
    deltas = np.empty(len(organisms))
    flags = []
    for k, org in enumerate(organisms):
        genome = org.genome if hasattr(org, "genome") else org
        snapshot = np.asarray(snapshots[k], dtype=float)
        if snapshot.shape != (genome.n_sensors,):
            raise ValueError(f"snapshot {k} has wrong length")
        sub = derive_rng(base, "organism-delta", genome_to_json(genome),
                         repr(snapshot.tolist()))
        estimate = organism_delta(genome, snapshot, params, sub)
        deltas[k] = estimate.delta
        flags.append(estimate.flag)
    valid = deltas[~np.isnan(deltas)]
    if valid.size == 0:
        mean = median = spread = math.nan
    else:
        mean = float(valid.mean())
        median = float(np.median(valid))
        spread = float(valid.std(ddof=1)) if valid.size > 1 else 0.0
    return PopulationDelta(deltas, flags, mean, median, spread)
