"""Post-run analyses of evolved foragers.

Four independent toolkits: lifetime-extension generalizability (does the
energy-accumulation rate survive running far past the training horizon),
weight-perturbation robustness with an exponential decay fit, per-operator
fitness histograms over a generation window, and a nonparametric comparison
of regime (delta) distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .genome import WEIGHT_BOUND, Genome
from .seeds import derive_rng
from .world import WorldConfig, new_world, run_lifetime, spawn_organisms


def _genome_of(entry) -> Genome:
    return entry.genome if hasattr(entry, "genome") else entry


# ------------------------------------------------------------ generalizability


@dataclass
class GeneralizabilityResult:
    gamma: float
    t_train: int
    t_extend: int
    fitness_train: float     # population-mean energy at step t_train
    fitness_extend: float    # population-mean energy at step t_extend
    flag: str = "ok"         # "ok" | "zero-training-rate"
    cluster: str | None = None


def gamma_from_trace(trace, t_train: int, t_extend: int) -> tuple[float, str]:
    """Rate ratio (E(t_extend)/t_extend) / (E(t_train)/t_train) from a trace.

    `trace` holds the population-mean energy after each step, trace[t-1] for
    step t. gamma = 1 means energy keeps growing at the training-window
    rate; gamma near t_train/t_extend means growth stopped at t_train. A
    non-positive training-window energy leaves the ratio undefined and is
    flagged; a non-positive extended energy reads as full collapse, gamma 0.
    """
    if not (0 < t_train <= t_extend):
        raise ValueError("need 0 < t_train <= t_extend")
    trace = np.asarray(trace, dtype=float)
    if trace.size < t_extend:
        raise ValueError("trace shorter than t_extend")
    e_train = float(trace[t_train - 1])
    e_extend = float(trace[t_extend - 1])
    if e_train <= 0.0:
        return math.nan, "zero-training-rate"
    return max(0.0, (e_extend / t_extend) / (e_train / t_train)), "ok"


def generalizability(
    population,
    world_config: WorldConfig,
    t_train: int = 2000,
    t_extend: int = 50000,
    rng: np.random.Generator | None = None,
    overfit_threshold: float = 0.5,
) -> GeneralizabilityResult:
    """Run one extended lifetime and compare energy rates at the two horizons.

    The population (genomes or organisms; only genomes are read) is spawned
    fresh into a new arena and run for t_extend steps; the energy trace is
    read at t_train on the way through. Results below `overfit_threshold`
    are labeled "overfit", the rest "generalizes".
    """
    if not (0 < t_train < t_extend):
        raise ValueError("need 0 < t_train < t_extend")
    if rng is None:
        rng = derive_rng(0, "generalizability")
    genomes = [_genome_of(entry) for entry in population]
    config = replace(world_config, lifetime=t_extend, n_organisms=len(genomes))
    world = new_world(config, rng)
    organisms = spawn_organisms(genomes, config, rng)

    trace = np.empty(t_extend)

    def record_mean_energy(t, positions, headings, speeds, energies, eaten):
        trace[t - 1] = energies.mean()

    run_lifetime(organisms, world, rng, trace_hook=record_mean_energy)
    gamma, flag = gamma_from_trace(trace, t_train, t_extend)
    cluster = None
    if flag == "ok":
        cluster = "overfit" if gamma < overfit_threshold else "generalizes"
    return GeneralizabilityResult(
        gamma=gamma,
        t_train=t_train,
        t_extend=t_extend,
        fitness_train=float(trace[t_train - 1]),
        fitness_extend=float(trace[t_extend - 1]),
        flag=flag,
        cluster=cluster,
    )


# ------------------------------------------------------------ perturbations


def perturb_weights(genome: Genome, f_pert: float, rng: np.random.Generator) -> Genome:
    """Add or subtract f_pert on every present edge with independent fair coins.

    One coin per undirected edge keeps the matrix symmetric; results are
    clipped into the weight bounds. Mask and beta are untouched.
    """
    if f_pert < 0:
        raise ValueError("f_pert must be nonnegative")
    out = genome.copy()
    iu, ju = np.nonzero(np.triu(out.adjacency, k=1))
    signs = np.where(rng.random(iu.size) < 0.5, 1.0, -1.0)
    for i, j, s in zip(iu, ju, signs):
        w = float(np.clip(out.weights[i, j] + s * f_pert,
                          -WEIGHT_BOUND, WEIGHT_BOUND))
        out.weights[i, j] = w
        out.weights[j, i] = w
    return out


@dataclass
class PerturbationCurve:
    f_grid: np.ndarray         # perturbation magnitudes, increasing from 0
    mean_fitness: np.ndarray   # over organisms and seed replicates, per point
    fitness_sd: np.ndarray     # replicate spread (ddof=1; 0 for one seed)
    samples: np.ndarray        # (n_points, n_seeds) per-replicate means
    alpha: float               # fitted exponent, NaN when fit refused
    amplitude: float           # fitted prefactor, NaN when fit refused
    fit_ok: bool
    excluded: list[int]        # grid indices dropped from the fit


def fit_exponential(f_grid, values) -> tuple[float, float, bool, list[int]]:
    """Least squares of log(values) on f_grid: values ~ amplitude*exp(alpha*f).

    Non-positive values cannot enter the log fit; their indices are
    reported, and fewer than 3 usable points refuses the fit.
    """
    f_grid = np.asarray(f_grid, dtype=float)
    values = np.asarray(values, dtype=float)
    usable = values > 0
    excluded = [int(i) for i in np.flatnonzero(~usable)]
    if usable.sum() < 3:
        return math.nan, math.nan, False, excluded
    alpha, log_amp = np.polyfit(f_grid[usable], np.log(values[usable]), 1)
    return float(alpha), float(math.exp(log_amp)), True, excluded


def _perturbation_point(genomes, world_config, f_pert, base, point, seed):
    """Mean population fitness for one (grid point, seed replicate) cell."""
    sub = derive_rng(base, "perturb", point, seed)
    perturbed = [perturb_weights(g, f_pert, sub) for g in genomes]
    config = replace(world_config, n_organisms=len(perturbed))
    world = new_world(config, sub)
    organisms = spawn_organisms(perturbed, config, sub)
    return float(run_lifetime(organisms, world, sub).mean())


def perturbation_sweep(
    population,
    world_config: WorldConfig,
    f_grid,
    n_seeds: int,
    rng: np.random.Generator,
    executor=None,
) -> PerturbationCurve:
    """Fitness as a function of perturbation magnitude, with exponential fit.

    Every (grid point, seed) cell perturbs each genome independently and
    runs a full lifetime on its own derived stream, so the curve does not
    depend on evaluation order; pass an executor to spread the cells over
    workers. The fit runs on the per-point means.
    """
    f_grid = np.asarray(f_grid, dtype=float)
    if f_grid.size == 0 or f_grid[0] != 0.0:
        raise ValueError("f_grid must start at 0")
    if np.any(np.diff(f_grid) <= 0):
        raise ValueError("f_grid must be strictly increasing")
    if n_seeds < 1:
        raise ValueError("n_seeds must be positive")
    genomes = [_genome_of(entry) for entry in population]
    if not genomes:
        raise ValueError("population is empty")
    base = int(rng.integers(0, 2**63))

    cells = [(point, seed) for point in range(f_grid.size) for seed in range(n_seeds)]
    if executor is None:
        results = [
            _perturbation_point(genomes, world_config, float(f_grid[point]),
                                base, point, seed)
            for point, seed in cells
        ]
    else:
        futures = [
            executor.submit(_perturbation_point, genomes, world_config,
                            float(f_grid[point]), base, point, seed)
            for point, seed in cells
        ]
        results = [fut.result() for fut in futures]

    samples = np.array(results).reshape(f_grid.size, n_seeds)
    mean_fitness = samples.mean(axis=1)
    fitness_sd = samples.std(axis=1, ddof=1) if n_seeds > 1 else np.zeros(f_grid.size)
    alpha, amplitude, fit_ok, excluded = fit_exponential(f_grid, mean_fitness)
    return PerturbationCurve(
        f_grid=f_grid,
        mean_fitness=mean_fitness,
        fitness_sd=fitness_sd,
        samples=samples,
        alpha=alpha,
        amplitude=amplitude,
        fit_ok=fit_ok,
        excluded=excluded,
    )


# ------------------------------------------------------------ operator histograms


@dataclass
class OperatorHistograms:
    bin_edges: np.ndarray
    counts: dict[str, np.ndarray]   # per operator tag, shared bin edges
    totals: dict[str, int]
    gen_lo: int
    gen_hi: int


def operator_fitness_histograms(
    records, gen_lo: int, gen_hi: int, n_bins: int = 30
) -> OperatorHistograms:
    """Fitness histograms keyed by the operator that produced each organism.

    Pools every organism of the generations in [gen_lo, gen_hi) and bins all
    tags on one shared edge set, so the per-tag shapes are comparable.
    """
    if gen_lo >= gen_hi:
        raise ValueError("need gen_lo < gen_hi")
    if n_bins < 1:
        raise ValueError("n_bins must be positive")
    fitness_by_tag: dict[str, list[float]] = {}
    pooled: list[float] = []
    for record in records:
        if not (gen_lo <= record.generation < gen_hi):
            continue
        for fit, tag in zip(record.fitness, record.operator_tags):
            fitness_by_tag.setdefault(tag, []).append(float(fit))
            pooled.append(float(fit))
    if not pooled:
        raise ValueError("no organisms in the requested generation window")
    edges = np.histogram_bin_edges(pooled, bins=n_bins)
    counts = {
        tag: np.histogram(values, bins=edges)[0]
        for tag, values in sorted(fitness_by_tag.items())
    }
    totals = {tag: len(values) for tag, values in sorted(fitness_by_tag.items())}
    return OperatorHistograms(edges, counts, totals, gen_lo, gen_hi)


# ------------------------------------------------------------ regime comparison


@dataclass
class RegimeComparison:
    p_value: float
    u_statistic: float
    mean_a: float
    mean_b: float
    n_a: int
    n_b: int
    flag: str     # "ok" | "degenerate"


def regime_distribution_test(deltas_a, deltas_b) -> RegimeComparison:
    """Two-sided Mann-Whitney U comparison of two delta samples.

    NaN entries (degenerate regime estimates) are dropped before testing;
    each sample must keep at least 3 values. Fully tied data carries no
    ordering information and is flagged instead of tested.
    """
    a = np.asarray(deltas_a, dtype=float)
    b = np.asarray(deltas_b, dtype=float)
    a = a[~np.isnan(a)]
    b = b[~np.isnan(b)]
    if a.size < 3 or b.size < 3:
        raise ValueError("both samples need at least 3 finite values")
    if np.unique(np.concatenate([a, b])).size == 1:
        return RegimeComparison(math.nan, math.nan, float(a.mean()),
                                float(b.mean()), a.size, b.size, "degenerate")
    result = stats.mannwhitneyu(a, b, alternative="two-sided")
    return RegimeComparison(
        p_value=float(result.pvalue),
        u_statistic=float(result.statistic),
        mean_a=float(a.mean()),
        mean_b=float(b.mean()),
        n_a=a.size,
        n_b=b.size,
        flag="ok",
    )
