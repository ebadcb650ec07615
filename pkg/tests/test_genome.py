"""Genome structure, mask rules and edge-list serialization."""

import numpy as np
import pytest

from isingforage.genome import (
    Genome,
    GenomeError,
    allowed_mask,
    genome_from_json,
    genome_to_json,
    random_genome,
    validate_genome,
)
from isingforage.seeds import derive_rng


class TestAllowedMask:
    def test_forbidden_pairs(self):
        mask = allowed_mask(2, 3, 2)
        assert not mask.diagonal().any()
        assert not mask[0, 1] and not mask[1, 0]          # sensor-sensor
        assert not mask[0, 5] and not mask[5, 0]          # sensor-motor
        assert not mask[1, 6] and not mask[6, 1]

    def test_permitted_pairs(self):
        mask = allowed_mask(2, 3, 2)
        assert mask[0, 2] and mask[2, 0]                  # sensor-hidden
        assert mask[2, 3]                                 # hidden-hidden
        assert mask[2, 5]                                 # hidden-motor
        assert mask[5, 6]                                 # motor-motor

    def test_symmetric(self):
        mask = allowed_mask(4, 4, 4)
        assert np.array_equal(mask, mask.T)


class TestRandomGenome:
    def test_respects_mask_and_bounds(self):
        g = random_genome(4, 4, 4, 1.0, derive_rng(0, "rg"), edge_density=0.9)
        validate_genome(g)

    def test_edge_density_extremes(self):
        empty = random_genome(4, 4, 4, 1.0, derive_rng(1, "rg"), edge_density=0.0)
        assert empty.adjacency.sum() == 0
        full = random_genome(4, 4, 4, 1.0, derive_rng(2, "rg"), edge_density=1.0)
        assert np.array_equal(full.adjacency, allowed_mask(4, 4, 4))

    def test_reproducible(self):
        a = random_genome(4, 4, 4, 1.0, derive_rng(3, "rg"), edge_density=0.5)
        b = random_genome(4, 4, 4, 1.0, derive_rng(3, "rg"), edge_density=0.5)
        assert a == b


class TestValidation:
    def test_rejects_masked_edge(self):
        g = random_genome(2, 2, 2, 1.0, derive_rng(4, "v"), edge_density=0.5)
        g.adjacency[0, 1] = g.adjacency[1, 0] = True      # sensor-sensor
        with pytest.raises(GenomeError):
            validate_genome(g)

    def test_rejects_out_of_bound_weight(self):
        g = random_genome(2, 2, 2, 1.0, derive_rng(5, "v"), edge_density=1.0)
        i, j = g.edges()[0][:2]
        g.weights[i, j] = g.weights[j, i] = 2.5
        with pytest.raises(GenomeError):
            validate_genome(g)

    def test_rejects_asymmetry_and_self_edges(self):
        g = random_genome(2, 2, 2, 1.0, derive_rng(6, "v"), edge_density=1.0)
        bad = g.copy()
        bad.adjacency[2, 3] = not bad.adjacency[2, 3]
        with pytest.raises(GenomeError):
            validate_genome(bad)
        bad2 = g.copy()
        bad2.adjacency[3, 3] = True
        with pytest.raises(GenomeError):
            validate_genome(bad2)

    def test_rejects_nonpositive_beta(self):
        g = random_genome(2, 2, 2, 1.0, derive_rng(7, "v"), edge_density=0.5)
        g.beta = 0.0
        with pytest.raises(GenomeError):
            validate_genome(g)


class TestSerialization:
    def test_round_trip(self):
        g = random_genome(4, 4, 4, 1.7, derive_rng(8, "ser"), edge_density=0.5)
        assert genome_from_json(genome_to_json(g)) == g

    def test_rejects_masked_edge_in_document(self):
        g = random_genome(2, 2, 2, 1.0, derive_rng(9, "ser"), edge_density=0.5)
        doc = genome_to_json(g).replace('"edges":[', '"edges":[{"i":0,"j":1,"w":0.5},')
        with pytest.raises(GenomeError):
            genome_from_json(doc)

    def test_rejects_out_of_bound_weight_in_document(self):
        text = (
            '{"n_sensors":1,"n_hidden":2,"n_motors":1,"beta":1.0,'
            '"edges":[{"i":1,"j":2,"w":3.0}]}'
        )
        with pytest.raises(GenomeError):
            genome_from_json(text)

    def test_rejects_malformed_document(self):
        with pytest.raises(GenomeError):
            genome_from_json('{"n_sensors": 1}')
