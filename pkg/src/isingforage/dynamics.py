"""Ising network dynamics: energy, Glauber sweeps, descent to minimum energy.

Sensor neurons hold continuous clamped values in [-1, 1]; all other neurons
are binary spins updated sequentially in a random order redrawn each sweep.
The flip rule p = 1 / (1 + exp(beta_eff * dE)) with dE the energy change of
the flip satisfies detailed balance for the Boltzmann distribution
exp(-beta_eff * E) / Z over the free spins.

The numba kernels below consume numpy Generator streams directly and are the
single implementation used both by the public operations and by the lifetime
fast path, so composing public calls reproduces kernel runs bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .genome import Genome

# exp argument beyond this saturates the logistic to 0 or 1 in float64
_EXP_CLIP = 700.0


@dataclass
class SpinState:
    """Network state: `values` per neuron, `clamped` = sensor index set."""

    values: np.ndarray   # (N,) float64; free entries exactly +-1
    clamped: np.ndarray  # sorted int64 indices of clamped (sensor) neurons

    @property
    def n_neurons(self) -> int:
        return self.values.shape[0]

    def free_indices(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n_neurons), self.clamped)

    def copy(self) -> "SpinState":
        return SpinState(self.values.copy(), self.clamped)


def random_state(genome: Genome, sensor_values, rng: np.random.Generator) -> SpinState:
    """State with sensors clamped to `sensor_values` and random +-1 free spins."""
    sensors = _check_sensors(genome, sensor_values)
    values = np.empty(genome.n_neurons)
    values[: genome.n_sensors] = sensors
    n_free = genome.n_neurons - genome.n_sensors
    values[genome.n_sensors :] = rng.integers(0, 2, size=n_free) * 2.0 - 1.0
    return SpinState(values, np.arange(genome.n_sensors))


def _check_sensors(genome: Genome, sensor_values) -> np.ndarray:
    sensors = np.asarray(sensor_values, dtype=float)
    if sensors.shape != (genome.n_sensors,):
        raise ValueError(f"expected {genome.n_sensors} sensor values")
    if np.abs(sensors).max(initial=0.0) > 1.0:
        raise ValueError("sensor values must lie in [-1, 1]")
    return sensors


def _check_state(genome: Genome, state: SpinState) -> None:
    if state.values.shape[0] != genome.n_neurons:
        raise ValueError(
            f"state has {state.values.shape[0]} entries, genome has "
            f"{genome.n_neurons} neurons"
        )


@njit(cache=True)
def _energy(values, coupling):
    n = values.shape[0]
    e = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            e -= coupling[i, j] * values[i] * values[j]
    return e


@njit(cache=True)
def _shuffle(order, rng):
    """Fisher-Yates using floor(u*(i+1)) index draws, one rng.random() per step.

    The floor draw has a relative bias below 1e-15 for the array sizes used
    here; any state-independent visit-order distribution leaves the Boltzmann
    law invariant, so the bias is harmless. This replaces rng.shuffle, whose
    compiled form is an order of magnitude slower for short arrays.
    """
    for i in range(order.shape[0] - 1, 0, -1):
        j = int(rng.random() * (i + 1))
        tmp = order[i]
        order[i] = order[j]
        order[j] = tmp


@njit(cache=True)
def _flip(x, u):
    """Flip decision u < 1/(1+exp(x)), decided without exp when saturated.

    For x >= 37 the probability is below 2^-53, the smallest positive value
    rng.random() can return, so u < p holds exactly for u == 0; beyond 700
    the probability clamps to 0. For x <= -37 the probability exceeds the
    largest double below 1, so every u accepts. Decisions are bit-identical
    to evaluating the logistic.
    """
    if x >= 37.0:
        return u == 0.0 and x <= 700.0
    if x <= -37.0:
        return True
    return u < 1.0 / (1.0 + np.exp(x))


@njit(cache=True)
def _sweep(values, coupling, free_idx, order, beta_eff, rng):
    """One Glauber sweep in place; returns the summed energy change.

    `order` is a scratch buffer of free_idx's length; the visiting order is
    refilled from free_idx and reshuffled every call.
    """
    n = values.shape[0]
    order[:] = free_idx
    _shuffle(order, rng)
    acc = 0.0
    for k in range(order.shape[0]):
        i = order[k]
        h = 0.0
        for j in range(n):
            h += coupling[i, j] * values[j]
        d = 2.0 * values[i] * h
        if _flip(beta_eff * d, rng.random()):
            values[i] = -values[i]
            acc += d
    return acc


@njit(cache=True)
def _compute_fields(values, coupling, fields):
    n = values.shape[0]
    for i in range(n):
        h = 0.0
        for j in range(n):
            h += coupling[i, j] * values[j]
        fields[i] = h


@njit(cache=True)
def _sweep_cached(values, fields, coupling, free_idx, order, beta_eff, rng):
    """Glauber sweep using maintained local fields; returns summed energy change.

    Fields drift by float rounding as flips accumulate; callers resynchronize
    them periodically with _compute_fields. The flip decision repeats _flip
    inline; keep the two in sync.
    """
    n = values.shape[0]
    order[:] = free_idx
    _shuffle(order, rng)
    acc = 0.0
    for k in range(order.shape[0]):
        i = order[k]
        d = 2.0 * values[i] * fields[i]
        x = beta_eff * d
        u = rng.random()
        if x >= 37.0:
            flip = u == 0.0 and x <= 700.0
        elif x <= -37.0:
            flip = True
        else:
            flip = u < 1.0 / (1.0 + np.exp(x))
        if flip:
            old = values[i]
            values[i] = -old
            acc += d
            for j in range(n):
                fields[j] -= 2.0 * coupling[j, i] * old
    return acc


@njit(cache=True)
def _descent_sweeps(values, coupling, free_idx, rng):
    """Zero-temperature sweeps (flip only on strictly negative dE) to a local minimum."""
    n = values.shape[0]
    order = free_idx.copy()
    while True:
        _shuffle(order, rng)
        flipped = False
        for k in range(order.shape[0]):
            i = order[k]
            h = 0.0
            for j in range(n):
                h += coupling[i, j] * values[j]
            if 2.0 * values[i] * h < 0.0:
                values[i] = -values[i]
                flipped = True
        if not flipped:
            return


@njit(cache=True)
def _sample_energies(values, coupling, free_idx, beta_eff, n_therm, resync, rng, out):
    """Thermalize, then record the post-sweep energy for each of len(out) sweeps.

    Energy and local fields are tracked incrementally from per-flip changes
    and recomputed in full every `resync` sweeps to stop float drift.
    """
    order = np.empty_like(free_idx)
    fields = np.empty_like(values)
    _compute_fields(values, coupling, fields)
    for _ in range(n_therm):
        _sweep_cached(values, fields, coupling, free_idx, order, beta_eff, rng)
    e = _energy(values, coupling)
    _compute_fields(values, coupling, fields)
    for t in range(out.shape[0]):
        e += _sweep_cached(values, fields, coupling, free_idx, order, beta_eff, rng)
        if resync > 0 and (t + 1) % resync == 0:
            e = _energy(values, coupling)
            _compute_fields(values, coupling, fields)
        out[t] = e


@njit(cache=True)
def _sample_codes(values, coupling, free_idx, beta_eff, n_therm, resync, rng, out):
    """Thermalize, then record the free-spin configuration code after each sweep."""
    order = np.empty_like(free_idx)
    fields = np.empty_like(values)
    _compute_fields(values, coupling, fields)
    for _ in range(n_therm):
        _sweep_cached(values, fields, coupling, free_idx, order, beta_eff, rng)
    for t in range(out.shape[0]):
        _sweep_cached(values, fields, coupling, free_idx, order, beta_eff, rng)
        if resync > 0 and (t + 1) % resync == 0:
            _compute_fields(values, coupling, fields)
        code = 0
        for k in range(free_idx.shape[0]):
            if values[free_idx[k]] > 0.0:
                code |= 1 << k
        out[t] = code


def network_energy(genome: Genome, state: SpinState) -> float:
    """Energy -sum over present edges of J_ij * s_i * s_j, each edge once."""
    _check_state(genome, state)
    return float(_energy(state.values, genome.coupling()))


def delta_energy(genome: Genome, state: SpinState, i: int) -> float:
    """Energy change caused by flipping free neuron i, from its local field."""
    _check_state(genome, state)
    if not (0 <= i < genome.n_neurons):
        raise ValueError(f"neuron index {i} out of range")
    if i in state.clamped:
        raise ValueError(f"neuron {i} is clamped")
    h = float(genome.coupling()[i] @ state.values)
    return 2.0 * float(state.values[i]) * h


def flip_probability(delta_e: float, beta_effective: float) -> float:
    """Glauber acceptance 1 / (1 + exp(beta_effective * delta_e))."""
    if beta_effective <= 0.0:
        raise ValueError("beta_effective must be positive")
    x = beta_effective * delta_e
    if x > _EXP_CLIP:
        return 0.0
    if x < -_EXP_CLIP:
        return 1.0
    return 1.0 / (1.0 + math.exp(x))


def glauber_sweep(
    genome: Genome, state: SpinState, c_beta: float, rng: np.random.Generator
) -> SpinState:
    """One sweep at inverse temperature c_beta * beta; returns the new state.

    Every free neuron is visited exactly once in a freshly shuffled order;
    flips are sequential, so later visits see earlier flips.
    """
    _check_state(genome, state)
    if c_beta <= 0.0:
        raise ValueError("c_beta must be positive")
    out = state.copy()
    free_idx = state.free_indices()
    _sweep(out.values, genome.coupling(), free_idx, np.empty_like(free_idx), c_beta * genome.beta, rng)
    return out


def network_update(
    genome: Genome, state: SpinState, rng: np.random.Generator, iterations: int = 10
) -> SpinState:
    """`iterations` Glauber sweeps at the genome's native temperature (c_beta = 1)."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    _check_state(genome, state)
    out = state.copy()
    coupling = genome.coupling()
    free_idx = state.free_indices()
    order = np.empty_like(free_idx)
    for _ in range(iterations):
        _sweep(out.values, coupling, free_idx, order, genome.beta, rng)
    return out


def min_energy_state(
    genome: Genome,
    sensor_values,
    rng: np.random.Generator,
    restarts: int = 10,
    method: str = "auto",
) -> SpinState:
    """Lowest-energy state with sensors clamped to `sensor_values`.

    Exact enumeration over the 2^k free configurations when k <= 16,
    otherwise the best of `restarts` zero-temperature descents from random
    starting assignments. `method` forces one path ("enumerate"/"descent").
    """
    sensors = _check_sensors(genome, sensor_values)
    n_free = genome.n_hidden + genome.n_motors
    if method == "auto":
        method = "enumerate" if n_free <= 16 else "descent"
    if method == "enumerate":
        if n_free > 16:
            raise ValueError("enumeration supports at most 16 free neurons")
        return _enumerate_minimum(genome, sensors)
    if method != "descent":
        raise ValueError(f"unknown method {method!r}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    coupling = genome.coupling()
    best_values = None
    best_e = math.inf
    for _ in range(restarts):
        state = random_state(genome, sensors, rng)
        _descent_sweeps(state.values, coupling, state.free_indices(), rng)
        e = _energy(state.values, coupling)
        if e < best_e:
            best_e = e
            best_values = state.values
    return SpinState(best_values, np.arange(genome.n_sensors))


def _enumerate_minimum(genome: Genome, sensors: np.ndarray) -> SpinState:
    k = genome.n_hidden + genome.n_motors
    patterns = ((np.arange(2**k)[:, None] >> np.arange(k)) & 1) * 2.0 - 1.0
    configs = np.empty((2**k, genome.n_neurons))
    configs[:, : genome.n_sensors] = sensors
    configs[:, genome.n_sensors :] = patterns
    coupling = genome.coupling()
    energies = -0.5 * np.einsum("ij,jk,ik->i", configs, coupling, configs)
    return SpinState(configs[int(np.argmin(energies))].copy(), np.arange(genome.n_sensors))


def sample_energies(
    genome: Genome,
    state: SpinState,
    c_beta: float,
    n_therm: int,
    n_sample: int,
    rng: np.random.Generator,
    resync_every: int = 1024,
) -> np.ndarray:
    """Post-sweep energies of `n_sample` sweeps after `n_therm` thermalization sweeps.

    The input state is not modified.
    """
    _check_state(genome, state)
    if c_beta <= 0.0:
        raise ValueError("c_beta must be positive")
    work = state.copy()
    out = np.empty(n_sample)
    _sample_energies(
        work.values,
        genome.coupling(),
        state.free_indices(),
        c_beta * genome.beta,
        n_therm,
        resync_every,
        rng,
        out,
    )
    return out


def sample_configurations(
    genome: Genome,
    state: SpinState,
    c_beta: float,
    n_therm: int,
    n_sample: int,
    rng: np.random.Generator,
    resync_every: int = 1024,
) -> np.ndarray:
    """Free-spin configuration codes after each of `n_sample` post-thermalization sweeps.

    Bit k of a code is 1 iff the k-th free neuron (ascending index) is +1.
    """
    _check_state(genome, state)
    if c_beta <= 0.0:
        raise ValueError("c_beta must be positive")
    work = state.copy()
    out = np.empty(n_sample, dtype=np.int64)
    _sample_codes(
        work.values,
        genome.coupling(),
        state.free_indices(),
        c_beta * genome.beta,
        n_therm,
        resync_every,
        rng,
        out,
    )
    return out


def configuration_code(state: SpinState) -> int:
    """Integer code of the free spins, matching sample_configurations' convention."""
    code = 0
    for k, i in enumerate(state.free_indices()):
        if state.values[i] > 0.0:
            code |= 1 << k
    return int(code)
