"""Periodic 2D foraging world: sensing, motor decoding, kinematics, eating.

One world holds a shared food set that all organisms compete for. A time step
advances organisms in fixed index order: sense, write sensors into the
network, ten Glauber sweeps, decode motors, integrate kinematics, try to eat.
The per-step numba kernel and the public operations share the same helper
functions, so composing the public operations reproduces `run_lifetime`
bit for bit when fed the same random stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dynamics import SpinState, _compute_fields, _sweep_cached, random_state
from .genome import Genome

N_SENSORS = 4
N_MOTORS = 4


@dataclass
class WorldConfig:
    arena_side: float = 16.0
    n_food: int = 100
    n_organisms: int = 50
    dt: float = 1.0
    food_energy: float = 1.0
    move_cost: float = 0.01
    max_speed: float = 0.5
    lin_accel_gain: float = 0.05
    rot_accel_gain: float = 0.2
    eat_radius: float = 0.3
    hard_task: bool = False
    v_threshold: float = 0.05
    lifetime: int = 2000
    initial_energy: float = 2.0


def validate_world_config(config: WorldConfig) -> None:
    positive = [
        "arena_side", "n_food", "n_organisms", "dt", "food_energy",
        "max_speed", "lin_accel_gain", "rot_accel_gain", "eat_radius",
        "v_threshold", "lifetime", "initial_energy",
    ]
    for name in positive:
        if not (getattr(config, name) > 0):
            raise ValueError(f"world config field {name} must be positive")
    if config.move_cost < 0:
        raise ValueError("world config field move_cost must be nonnegative")
    if not (config.v_threshold < config.max_speed):
        raise ValueError("v_threshold must be below max_speed")


@dataclass
class Organism:
    genome: Genome
    state: SpinState
    position: np.ndarray    # (2,) in [0, arena_side)^2
    heading: float          # radians
    speed: float            # signed, |speed| <= max_speed
    energy: float
    fitness_accumulator: float = 0.0
    operator_tag: str = "init"


@dataclass
class World:
    """Arena plus the shared food set, stored as an (n_food, 2) position array."""

    config: WorldConfig
    food: np.ndarray


def new_world(config: WorldConfig, rng: np.random.Generator) -> World:
    validate_world_config(config)
    food = rng.random((config.n_food, 2)) * config.arena_side
    return World(config, food)


def spawn_organisms(
    genomes: list[Genome], config: WorldConfig, rng: np.random.Generator
) -> list[Organism]:
    """Organisms at uniform positions and headings, at rest, with random free spins."""
    organisms = []
    for genome in genomes:
        position = rng.random(2) * config.arena_side
        heading = rng.random() * 2.0 * math.pi
        state = random_state(genome, np.zeros(N_SENSORS), rng)
        organisms.append(
            Organism(genome, state, position, heading, 0.0, config.initial_energy)
        )
    return organisms


@njit(cache=True)
def _wrap_delta(d, arena):
    return (d + 0.5 * arena) % arena - 0.5 * arena


@njit(cache=True)
def _nearest_food(px, py, food, arena):
    """Min-image displacement (dx, dy) and distance to the nearest particle."""
    best = np.inf
    bx = 0.0
    by = 0.0
    for f in range(food.shape[0]):
        dx = _wrap_delta(food[f, 0] - px, arena)
        dy = _wrap_delta(food[f, 1] - py, arena)
        d2 = dx * dx + dy * dy
        if d2 < best:
            best = d2
            bx = dx
            by = dy
    return bx, by, np.sqrt(best)


@njit(cache=True)
def _write_sensors(values, px, py, heading, speed, energy, food, arena, max_speed):
    dx, dy, d = _nearest_food(px, py, food, arena)
    bearing = math.atan2(dy, dx) - heading
    bearing = (bearing + math.pi) % (2.0 * math.pi) - math.pi
    values[0] = bearing / math.pi
    values[1] = 2.0 * math.exp(-d / (arena / 4.0)) - 1.0
    values[2] = speed / max_speed
    values[3] = math.tanh(energy / 4.0)


@njit(cache=True)
def _decode_motors(values, lin_gain, rot_gain):
    n = values.shape[0]
    a_lin = lin_gain * (values[n - 4] + values[n - 3]) / 2.0
    a_rot = rot_gain * (values[n - 2] + values[n - 1]) / 2.0
    return a_lin, a_rot


@njit(cache=True)
def _kinematics(px, py, heading, speed, energy, a_lin, a_rot,
                arena, dt, move_cost, max_speed):
    heading = heading + a_rot * dt
    speed = min(max(speed + a_lin * dt, -max_speed), max_speed)
    px = (px + speed * dt * math.cos(heading)) % arena
    py = (py + speed * dt * math.sin(heading)) % arena
    energy = energy - move_cost * abs(speed) * dt
    return px, py, heading, speed, energy


@njit(cache=True)
def _consume(px, py, speed, energy, food, arena, eat_radius, food_energy,
             hard_task, v_threshold, rng):
    """Eat every particle within reach (unless moving too fast on the hard task).

    Eaten particles respawn uniformly; the count stays fixed.
    """
    if hard_task and abs(speed) > v_threshold:
        return energy, 0
    eaten = 0
    r2 = eat_radius * eat_radius
    for f in range(food.shape[0]):
        dx = _wrap_delta(food[f, 0] - px, arena)
        dy = _wrap_delta(food[f, 1] - py, arena)
        if dx * dx + dy * dy <= r2:
            energy += food_energy
            food[f, 0] = arena * rng.random()
            food[f, 1] = arena * rng.random()
            eaten += 1
    return energy, eaten


@njit(cache=True)
def _step_world(values, couplings, betas, positions, headings, speeds, energies,
                food, eaten_out, free_idx, order, fields, sweeps, arena, dt,
                move_cost, max_speed, lin_gain, rot_gain, eat_radius, food_energy,
                hard_task, v_threshold, rng):
    for i in range(positions.shape[0]):
        _write_sensors(values[i], positions[i, 0], positions[i, 1], headings[i],
                       speeds[i], energies[i], food, arena, max_speed)
        _compute_fields(values[i], couplings[i], fields)
        for _ in range(sweeps):
            _sweep_cached(values[i], fields, couplings[i], free_idx, order,
                          betas[i], rng)
        a_lin, a_rot = _decode_motors(values[i], lin_gain, rot_gain)
        px, py, heading, speed, energy = _kinematics(
            positions[i, 0], positions[i, 1], headings[i], speeds[i], energies[i],
            a_lin, a_rot, arena, dt, move_cost, max_speed)
        energy, eaten = _consume(px, py, speed, energy, food, arena, eat_radius,
                                 food_energy, hard_task, v_threshold, rng)
        positions[i, 0] = px
        positions[i, 1] = py
        headings[i] = heading
        speeds[i] = speed
        energies[i] = energy
        eaten_out[i] = eaten


def sense(world: World, organism: Organism) -> np.ndarray:
    """Sensor vector [bearing/pi, distance code, speed code, energy code]."""
    if world.food.shape[0] == 0:
        raise ValueError("no food particles to sense")
    out = np.empty(N_SENSORS)
    _write_sensors(out, organism.position[0], organism.position[1],
                   organism.heading, organism.speed, organism.energy,
                   world.food, world.config.arena_side, world.config.max_speed)
    return out


def decode_motors(state: SpinState, config: WorldConfig) -> tuple[float, float]:
    """Linear and rotational acceleration from the two motor pairs (last 4 entries)."""
    a_lin, a_rot = _decode_motors(
        state.values, config.lin_accel_gain, config.rot_accel_gain
    )
    return float(a_lin), float(a_rot)


def step_kinematics(
    organism: Organism, a_lin: float, a_rot: float, config: WorldConfig
) -> Organism:
    """Integrate heading, clamped speed, wrapped position; charge the move cost."""
    px, py, heading, speed, energy = _kinematics(
        organism.position[0], organism.position[1], organism.heading,
        organism.speed, organism.energy, a_lin, a_rot, config.arena_side,
        config.dt, config.move_cost, config.max_speed)
    organism.position[0] = px
    organism.position[1] = py
    organism.heading = heading
    organism.speed = speed
    organism.energy = energy
    return organism


def try_consume(world: World, organism: Organism, rng: np.random.Generator) -> int:
    energy, eaten = _consume(
        organism.position[0], organism.position[1], organism.speed,
        organism.energy, world.food, world.config.arena_side,
        world.config.eat_radius, world.config.food_energy,
        world.config.hard_task, world.config.v_threshold, rng)
    organism.energy = energy
    return int(eaten)


def run_lifetime(
    population: list[Organism],
    world: World,
    rng: np.random.Generator,
    network_iterations: int = 10,
    trace_hook=None,
) -> np.ndarray:
    """Advance the whole population through a lifetime; return mean energies.

    Every step and organism follows sense -> network update -> decode ->
    kinematics -> consume, sharing `world.food` and the single stream `rng`.
    Fitness is the mean post-step energy over the lifetime. `trace_hook`,
    when given, is called after each step as
    trace_hook(t, positions, headings, speeds, energies, eaten) with copies.
    """
    if not population:
        raise ValueError("population is empty")
    config = world.config
    n_org = len(population)
    n = population[0].genome.n_neurons
    for org in population:
        if org.genome.n_neurons != n:
            raise ValueError("organisms must share one network size")

    values = np.stack([org.state.values for org in population])
    couplings = np.stack([org.genome.coupling() for org in population])
    betas = np.array([org.genome.beta for org in population])
    positions = np.stack([org.position for org in population]).astype(float)
    headings = np.array([org.heading for org in population])
    speeds = np.array([org.speed for org in population])
    energies = np.array([org.energy for org in population])
    eaten = np.zeros(n_org, dtype=np.int64)
    free_idx = np.arange(N_SENSORS, n)
    order = np.empty_like(free_idx)
    fields = np.empty(n)
    fitness_acc = np.zeros(n_org)

    for t in range(1, config.lifetime + 1):
        _step_world(values, couplings, betas, positions, headings, speeds,
                    energies, world.food, eaten, free_idx, order, fields,
                    network_iterations, config.arena_side, config.dt,
                    config.move_cost, config.max_speed, config.lin_accel_gain,
                    config.rot_accel_gain, config.eat_radius,
                    config.food_energy, config.hard_task, config.v_threshold,
                    rng)
        fitness_acc += energies
        if trace_hook is not None:
            trace_hook(t, positions.copy(), headings.copy(), speeds.copy(),
                       energies.copy(), eaten.copy())

    fitness = fitness_acc / config.lifetime
    for i, org in enumerate(population):
        org.state.values[:] = values[i]
        org.position[:] = positions[i]
        org.heading = float(headings[i])
        org.speed = float(speeds[i])
        org.energy = float(energies[i])
        org.fitness_accumulator = float(fitness[i])
    return fitness
