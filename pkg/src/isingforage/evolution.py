"""Generational evolutionary algorithm over Ising-controller genomes.

Each generation: evaluate the whole population in one shared world, select
the fittest by truncation, rebuild the population from exact copies of the
top ranks, mutated copies of random selected parents, and mated offspring of
random distinct selected pairs. Every offspring carries the tag of the last
operator applied to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .genome import WEIGHT_BOUND, Genome, allowed_mask, random_genome
from .seeds import derive_rng
from .world import N_MOTORS, N_SENSORS, WorldConfig, new_world, run_lifetime, spawn_organisms


@dataclass
class EvolutionConfig:
    generations: int = 4000
    population_size: int = 50
    n_selected: int = 20
    n_copy: int = 10
    n_mutants: int = 20
    n_mated: int = 20
    p_edge_add: float = 0.1
    p_edge_del: float = 0.1
    beta_noise_sd: float = 0.02
    seed: int = 0
    n_hidden: int = 4
    beta_init: float = 1.0
    edge_density: float = 0.5
    delta_stride: int = 0    # measure per-organism delta every this many generations; 0 = never


def validate_evolution_config(config: EvolutionConfig) -> None:
    if config.generations < 0:
        raise ValueError("generations must be nonnegative")
    if config.n_copy + config.n_mutants + config.n_mated != config.population_size:
        raise ValueError("n_copy + n_mutants + n_mated must equal population_size")
    if not (0 < config.n_selected <= config.population_size):
        raise ValueError("n_selected must be in [1, population_size]")
    if not (1 <= config.n_copy <= config.n_selected):
        raise ValueError("n_copy must be in [1, n_selected]")
    if config.n_mated > 0 and config.n_selected < 2:
        raise ValueError("mating needs at least two selected genomes")
    for name in ("p_edge_add", "p_edge_del"):
        if not (0.0 <= getattr(config, name) <= 1.0):
            raise ValueError(f"{name} must be a probability")
    if not (config.beta_noise_sd > 0):
        raise ValueError("beta_noise_sd must be positive")
    if not (config.beta_init > 0):
        raise ValueError("beta_init must be positive")
    if not (0.0 <= config.edge_density <= 1.0):
        raise ValueError("edge_density must be in [0, 1]")
    if config.n_hidden < 0 or config.delta_stride < 0:
        raise ValueError("n_hidden and delta_stride must be nonnegative")


@dataclass
class GenerationRecord:
    generation: int
    fitness: np.ndarray           # per organism
    operator_tags: list[str]      # per organism: init | copy | mutate | mate
    delta: np.ndarray | None      # per organism, only on measured generations
    mean_fitness: float
    max_fitness: float
    mean_delta: float | None


def select(fitness: np.ndarray, n_selected: int) -> np.ndarray:
    """Indices of the n_selected highest fitness values, ties to the lower index."""
    fitness = np.asarray(fitness, dtype=float)
    if n_selected > fitness.shape[0]:
        raise ValueError("n_selected exceeds population size")
    return np.argsort(-fitness, kind="stable")[:n_selected]


def _upper_pairs(genome: Genome) -> tuple[np.ndarray, np.ndarray]:
    mask = allowed_mask(genome.n_sensors, genome.n_hidden, genome.n_motors)
    return np.nonzero(np.triu(mask, k=1))


def op_mutate(genome: Genome, config: EvolutionConfig, rng: np.random.Generator) -> Genome:
    """Edge add / edge delete (each with its own coin), one weight resample,
    multiplicative positive noise on beta."""
    child = genome.copy()
    iu, ju = _upper_pairs(child)
    present = child.adjacency[iu, ju].copy()

    if rng.random() < config.p_edge_add:
        absent = np.nonzero(~present)[0]
        if absent.size:
            k = absent[rng.integers(absent.size)]
            i, j = iu[k], ju[k]
            child.adjacency[i, j] = child.adjacency[j, i] = True
            child.weights[i, j] = child.weights[j, i] = rng.uniform(-WEIGHT_BOUND, WEIGHT_BOUND)
            present[k] = True

    if rng.random() < config.p_edge_del:
        idx = np.nonzero(present)[0]
        if idx.size:
            k = idx[rng.integers(idx.size)]
            i, j = iu[k], ju[k]
            child.adjacency[i, j] = child.adjacency[j, i] = False
            child.weights[i, j] = child.weights[j, i] = 0.0
            present[k] = False

    idx = np.nonzero(present)[0]
    if idx.size:
        k = idx[rng.integers(idx.size)]
        i, j = iu[k], ju[k]
        child.weights[i, j] = child.weights[j, i] = rng.uniform(-WEIGHT_BOUND, WEIGHT_BOUND)

    noise = rng.normal(1.0, config.beta_noise_sd)
    while noise <= 0.0:
        noise = rng.normal(1.0, config.beta_noise_sd)
    child.beta *= noise
    return child


def op_mate(
    parent_a: Genome,
    parent_b: Genome,
    rng: np.random.Generator,
    w: float | None = None,
) -> Genome:
    """Blend of two parents with a single weight share w ~ U(0,1).

    Edges present in both parents get the w-weighted average weight; an edge
    present in exactly one parent is inherited (with that parent's weight)
    with probability equal to that parent's share. One uniform is drawn per
    mask-allowed pair regardless of the case, so the stream position after
    mating depends only on the architecture.
    """
    arch = (parent_a.n_sensors, parent_a.n_hidden, parent_a.n_motors)
    if arch != (parent_b.n_sensors, parent_b.n_hidden, parent_b.n_motors):
        raise ValueError("parents have different architectures")
    if w is None:
        w = float(rng.random())
    iu, ju = _upper_pairs(parent_a)
    u = rng.random(iu.size)

    in_a = parent_a.adjacency[iu, ju]
    in_b = parent_b.adjacency[iu, ju]
    both = in_a & in_b
    only_a = in_a & ~in_b
    only_b = in_b & ~in_a
    keep = both | (only_a & (u < w)) | (only_b & (u < 1.0 - w))
    blended = w * parent_a.weights[iu, ju] + (1.0 - w) * parent_b.weights[iu, ju]
    wts = np.where(both, blended, np.where(only_a, parent_a.weights[iu, ju],
                                           parent_b.weights[iu, ju]))

    n = parent_a.n_neurons
    adjacency = np.zeros((n, n), dtype=bool)
    weights = np.zeros((n, n))
    ki, kj, kw = iu[keep], ju[keep], wts[keep]
    adjacency[ki, kj] = adjacency[kj, ki] = True
    weights[ki, kj] = kw
    weights[kj, ki] = kw
    beta = w * parent_a.beta + (1.0 - w) * parent_b.beta
    return Genome(*arch, weights, adjacency, float(beta))


def next_generation(
    selected: list[Genome], config: EvolutionConfig, rng: np.random.Generator
) -> list[tuple[Genome, str]]:
    """Offspring list from rank-ordered selected genomes (best first)."""
    if len(selected) != config.n_selected:
        raise ValueError("selected list does not match n_selected")
    offspring: list[tuple[Genome, str]] = []
    for k in range(config.n_copy):
        offspring.append((selected[k].copy(), "copy"))
    for _ in range(config.n_mutants):
        parent = selected[int(rng.integers(len(selected)))]
        offspring.append((op_mutate(parent, config, rng), "mutate"))
    for _ in range(config.n_mated):
        i = int(rng.integers(len(selected)))
        j = int(rng.integers(len(selected) - 1))
        if j >= i:
            j += 1
        offspring.append((op_mate(selected[i], selected[j], rng), "mate"))
    return offspring


def evolve(
    world_config: WorldConfig,
    config: EvolutionConfig,
    delta_fn=None,
    snapshot_hook=None,
) -> list[GenerationRecord]:
    """Run the full loop and return one record per generation (including 0).

    Generation 0 is the evaluation of the random initial population. Each
    later generation is built by select + next_generation and evaluated in a
    freshly reset world (new food, positions, spins, energies).

    `delta_fn(organism, rng) -> float`, when given together with a positive
    delta_stride, is applied to every evaluated organism on measured
    generations (the organism then carries its end-of-lifetime state).
    `snapshot_hook(generation, genomes, record)` runs after each evaluation.
    All randomness is derived from config.seed, so the record stream is a
    pure function of the two configs.
    """
    validate_evolution_config(config)
    if world_config.n_organisms != config.population_size:
        raise ValueError("world n_organisms must equal population_size")
    seed = config.seed

    init_rng = derive_rng(seed, "init")
    genomes = [
        random_genome(N_SENSORS, config.n_hidden, N_MOTORS, config.beta_init,
                      init_rng, config.edge_density)
        for _ in range(config.population_size)
    ]
    tags = ["init"] * config.population_size

    records: list[GenerationRecord] = []
    for g in range(config.generations + 1):
        world_rng = derive_rng(seed, "world", g)
        world = new_world(world_config, world_rng)
        population = spawn_organisms(genomes, world_config, world_rng)
        for org, tag in zip(population, tags):
            org.operator_tag = tag
        fitness = run_lifetime(population, world, world_rng)

        deltas = None
        measure = (
            delta_fn is not None
            and config.delta_stride > 0
            and (g % config.delta_stride == 0 or g == config.generations)
        )
        if measure:
            deltas = np.array([
                delta_fn(org, derive_rng(seed, "delta", g, k))
                for k, org in enumerate(population)
            ])
        record = GenerationRecord(
            generation=g,
            fitness=fitness.copy(),
            operator_tags=list(tags),
            delta=deltas,
            mean_fitness=float(fitness.mean()),
            max_fitness=float(fitness.max()),
            mean_delta=None if deltas is None else float(deltas.mean()),
        )
        records.append(record)
        if snapshot_hook is not None:
            snapshot_hook(g, genomes, record)
        if g == config.generations:
            break

        order = select(fitness, config.n_selected)
        selected = [genomes[i] for i in order]
        offspring = next_generation(selected, config, derive_rng(seed, "offspring", g))
        genomes = [child for child, _ in offspring]
        tags = [tag for _, tag in offspring]
    return records
