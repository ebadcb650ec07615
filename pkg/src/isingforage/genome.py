"""Genotype of an Ising controller: couplings, adjacency mask, inverse temperature.

Neuron layout is fixed throughout the package: sensor neurons first, then
hidden neurons, then motor neurons. Sensor-sensor and sensor-motor edges are
never allowed; everything else (sensor-hidden, hidden-hidden, hidden-motor,
motor-motor) is fair game for evolution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

WEIGHT_BOUND = 2.0
SCHEMA_VERSION = 1


class GenomeError(ValueError):
    """Raised for genomes violating the architecture or weight constraints."""


@dataclass
class Genome:
    """Evolvable genotype: symmetric weights J, binary mask A and beta > 0.

    `weights` is kept zero wherever `adjacency` is zero, so two genomes are
    behaviourally identical iff their arrays compare equal.
    """

    n_sensors: int
    n_hidden: int
    n_motors: int
    weights: np.ndarray      # (N, N) float64, symmetric, zero diagonal
    adjacency: np.ndarray    # (N, N) bool, symmetric, zero diagonal
    beta: float

    @property
    def n_neurons(self) -> int:
        return self.n_sensors + self.n_hidden + self.n_motors

    @property
    def sensor_indices(self) -> np.ndarray:
        return np.arange(self.n_sensors)

    @property
    def free_indices(self) -> np.ndarray:
        """Non-sensor neurons, the ones Glauber dynamics may flip."""
        return np.arange(self.n_sensors, self.n_neurons)

    @property
    def motor_slice(self) -> slice:
        start = self.n_sensors + self.n_hidden
        return slice(start, start + self.n_motors)

    def coupling(self) -> np.ndarray:
        """Masked symmetric coupling matrix actually entering the energy."""
        return self.weights * self.adjacency

    def edges(self) -> list[tuple[int, int, float]]:
        """Present edges as (i, j, weight) with i < j, sorted."""
        iu, ju = np.nonzero(np.triu(self.adjacency, k=1))
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(iu, ju)]

    def copy(self) -> "Genome":
        return Genome(
            self.n_sensors,
            self.n_hidden,
            self.n_motors,
            self.weights.copy(),
            self.adjacency.copy(),
            self.beta,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Genome):
            return NotImplemented
        return (
            (self.n_sensors, self.n_hidden, self.n_motors) ==
            (other.n_sensors, other.n_hidden, other.n_motors)
            and self.beta == other.beta
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.adjacency, other.adjacency)
        )


def allowed_mask(n_sensors: int, n_hidden: int, n_motors: int) -> np.ndarray:
    """Boolean matrix of evolvable pairs: no self, sensor-sensor or sensor-motor."""
    n = n_sensors + n_hidden + n_motors
    mask = np.ones((n, n), dtype=bool)
    np.fill_diagonal(mask, False)
    sensors = np.arange(n_sensors)
    motors = np.arange(n_sensors + n_hidden, n)
    mask[np.ix_(sensors, sensors)] = False
    mask[np.ix_(sensors, motors)] = False
    mask[np.ix_(motors, sensors)] = False
    return mask


def validate_genome(genome: Genome) -> None:
    """Raise GenomeError if any structural invariant is violated."""
    n = genome.n_neurons
    j, a = genome.weights, genome.adjacency
    if j.shape != (n, n) or a.shape != (n, n):
        raise GenomeError(f"matrix shape mismatch for {n} neurons")
    if not np.array_equal(a, a.T):
        raise GenomeError("adjacency not symmetric")
    if not np.array_equal(j, j.T):
        raise GenomeError("weights not symmetric")
    if a[np.diag_indices(n)].any():
        raise GenomeError("self-edges present")
    if (a & ~allowed_mask(genome.n_sensors, genome.n_hidden, genome.n_motors)).any():
        raise GenomeError("adjacency violates the sensor-sensor / sensor-motor mask")
    if np.abs(j).max(initial=0.0) > WEIGHT_BOUND:
        raise GenomeError(f"weight outside [-{WEIGHT_BOUND}, {WEIGHT_BOUND}]")
    if (j[~a] != 0.0).any():
        raise GenomeError("nonzero weight on an absent edge")
    if not (genome.beta > 0.0):
        raise GenomeError("beta must be positive")


def random_genome(
    n_sensors: int,
    n_hidden: int,
    n_motors: int,
    beta: float,
    rng: np.random.Generator,
    edge_density: float = 0.5,
) -> Genome:
    """Random genome: each allowed pair present with `edge_density`, weights U(-2, 2)."""
    n = n_sensors + n_hidden + n_motors
    mask = allowed_mask(n_sensors, n_hidden, n_motors)
    iu, ju = np.nonzero(np.triu(mask, k=1))
    present = rng.random(iu.size) < edge_density
    w = rng.uniform(-WEIGHT_BOUND, WEIGHT_BOUND, size=iu.size)
    adjacency = np.zeros((n, n), dtype=bool)
    weights = np.zeros((n, n))
    keep_i, keep_j, keep_w = iu[present], ju[present], w[present]
    adjacency[keep_i, keep_j] = adjacency[keep_j, keep_i] = True
    weights[keep_i, keep_j] = weights[keep_j, keep_i] = keep_w
    return Genome(n_sensors, n_hidden, n_motors, weights, adjacency, float(beta))


def genome_to_dict(genome: Genome) -> dict:
    return {
        "n_sensors": genome.n_sensors,
        "n_hidden": genome.n_hidden,
        "n_motors": genome.n_motors,
        "beta": genome.beta,
        "edges": [{"i": i, "j": j, "w": w} for i, j, w in genome.edges()],
    }


def genome_from_dict(doc: dict) -> Genome:
    try:
        ns, nh, nm = int(doc["n_sensors"]), int(doc["n_hidden"]), int(doc["n_motors"])
        beta = float(doc["beta"])
        edges = doc["edges"]
    except (KeyError, TypeError) as exc:
        raise GenomeError(f"malformed genome document: {exc}") from exc
    n = ns + nh + nm
    mask = allowed_mask(ns, nh, nm)
    adjacency = np.zeros((n, n), dtype=bool)
    weights = np.zeros((n, n))
    for entry in edges:
        i, j, w = int(entry["i"]), int(entry["j"]), float(entry["w"])
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise GenomeError(f"edge ({i}, {j}) out of range")
        if not mask[i, j]:
            raise GenomeError(f"edge ({i}, {j}) violates the adjacency mask")
        if abs(w) > WEIGHT_BOUND:
            raise GenomeError(f"edge ({i}, {j}) weight {w} outside bounds")
        adjacency[i, j] = adjacency[j, i] = True
        weights[i, j] = weights[j, i] = w
    genome = Genome(ns, nh, nm, weights, adjacency, beta)
    validate_genome(genome)
    return genome


def genome_to_json(genome: Genome) -> str:
    return json.dumps(genome_to_dict(genome), sort_keys=True, separators=(",", ":"))


def genome_from_json(text: str) -> Genome:
    return genome_from_dict(json.loads(text))
