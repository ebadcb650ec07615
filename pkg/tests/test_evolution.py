"""Selection, variation operators, generation loop bookkeeping."""

import hashlib
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isingforage.evolution import (
    EvolutionConfig,
    evolve,
    next_generation,
    op_mate,
    op_mutate,
    select,
    validate_evolution_config,
)
from isingforage.genome import genome_to_json, random_genome, validate_genome
from isingforage.seeds import derive_rng
from isingforage.world import WorldConfig

SMALL_EVO = EvolutionConfig(
    generations=3, population_size=6, n_selected=3, n_copy=2, n_mutants=2,
    n_mated=2, seed=77,
)
SMALL_WORLD = WorldConfig(n_food=10, n_organisms=6, lifetime=20)


class TestConfigValidation:
    def test_defaults_valid(self):
        validate_evolution_config(EvolutionConfig())

    def test_rejects_bad_split(self):
        with pytest.raises(ValueError):
            validate_evolution_config(EvolutionConfig(n_copy=11))

    def test_rejects_oversized_selection(self):
        with pytest.raises(ValueError):
            validate_evolution_config(EvolutionConfig(n_selected=51))

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            validate_evolution_config(EvolutionConfig(p_edge_add=1.5))


class TestSelect:
    def test_simple_ranking(self):
        assert select(np.array([3.0, 1.0, 2.0]), 2).tolist() == [0, 2]

    def test_ties_break_to_lower_index(self):
        assert select(np.ones(5), 3).tolist() == [0, 1, 2]

    def test_full_selection_is_rank_permutation(self):
        fitness = np.array([0.5, 2.0, 1.5, 3.0])
        assert select(fitness, 4).tolist() == [3, 1, 2, 0]

    def test_oversized_request_rejected(self):
        with pytest.raises(ValueError):
            select(np.ones(3), 4)


class TestOpMutate:
    def test_edgeless_genome_changes_only_beta(self):
        cfg = EvolutionConfig(p_edge_add=0.0, p_edge_del=0.0)
        g = random_genome(4, 0, 4, 1.0, derive_rng(1, "m"), edge_density=0.0)
        child = op_mutate(g, cfg, derive_rng(1, "mut"))
        assert child.adjacency.sum() == 0
        assert np.array_equal(child.weights, g.weights)
        assert child.beta != g.beta

    def test_beta_noise_moments(self):
        cfg = EvolutionConfig(p_edge_add=0.0, p_edge_del=0.0)
        g = random_genome(2, 0, 2, 1.0, derive_rng(2, "m"), edge_density=0.0)
        rng = derive_rng(2, "mut")
        betas = np.array([op_mutate(g, cfg, rng).beta for _ in range(100_000)])
        assert abs(betas.mean() - 1.0) < 0.001
        assert abs(betas.std(ddof=1) - 0.02) < 0.002

    def test_invariants_preserved_under_repeated_mutation(self):
        cfg = EvolutionConfig()
        g = random_genome(4, 4, 4, 1.0, derive_rng(3, "m"), edge_density=1.0)
        rng = derive_rng(3, "mut")
        for _ in range(2000):
            g = op_mutate(g, cfg, rng)
            validate_genome(g)

    def test_input_genome_untouched(self):
        cfg = EvolutionConfig()
        g = random_genome(4, 4, 4, 1.0, derive_rng(4, "m"), edge_density=0.5)
        w0, a0, b0 = g.weights.copy(), g.adjacency.copy(), g.beta
        op_mutate(g, cfg, derive_rng(4, "mut"))
        assert np.array_equal(g.weights, w0) and np.array_equal(g.adjacency, a0)
        assert g.beta == b0


class TestOpMate:
    def test_identical_parents_fixed_point(self):
        g = random_genome(4, 4, 4, 1.4, derive_rng(5, "m"), edge_density=0.5)
        child = op_mate(g, g, derive_rng(5, "mate"))
        assert child == g

    def test_endpoint_share_returns_parent_a(self):
        a = random_genome(4, 4, 4, 1.0, derive_rng(6, "a"), edge_density=0.5)
        b = random_genome(4, 4, 4, 2.0, derive_rng(6, "b"), edge_density=0.5)
        child = op_mate(a, b, derive_rng(6, "mate"), w=1.0)
        assert child == a

    def test_beta_affine_combination(self):
        a = random_genome(2, 0, 2, 1.0, derive_rng(7, "a"), edge_density=0.0)
        b = random_genome(2, 0, 2, 3.0, derive_rng(7, "b"), edge_density=0.0)
        child = op_mate(a, b, derive_rng(7, "mate"), w=0.25)
        assert child.beta == 0.25 * 1.0 + 0.75 * 3.0

    def test_architecture_mismatch_rejected(self):
        a = random_genome(4, 4, 4, 1.0, derive_rng(8, "a"), edge_density=0.5)
        b = random_genome(4, 5, 4, 1.0, derive_rng(8, "b"), edge_density=0.5)
        with pytest.raises(ValueError):
            op_mate(a, b, derive_rng(8, "mate"))

    def test_child_edges_within_parent_union(self):
        a = random_genome(4, 4, 4, 1.0, derive_rng(9, "a"), edge_density=0.4)
        b = random_genome(4, 4, 4, 2.0, derive_rng(9, "b"), edge_density=0.4)
        child = op_mate(a, b, derive_rng(9, "mate"))
        union = a.adjacency | b.adjacency
        assert not (child.adjacency & ~union).any()
        validate_genome(child)


@given(seed=st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_mate_always_yields_valid_genome(seed):
    a = random_genome(4, 4, 4, 1.0, derive_rng(seed, "pa"), edge_density=0.5)
    b = random_genome(4, 4, 4, 2.5, derive_rng(seed, "pb"), edge_density=0.5)
    validate_genome(op_mate(a, b, derive_rng(seed, "pm")))


class TestNextGeneration:
    def make_selected(self, n):
        return [random_genome(4, 4, 4, 1.0, derive_rng(10, "sel", k), 0.5)
                for k in range(n)]

    def test_tag_counts_match_config(self):
        cfg = EvolutionConfig()
        selected = self.make_selected(20)
        offspring = next_generation(selected, cfg, derive_rng(10, "ng"))
        assert len(offspring) == 50
        counts = Counter(tag for _, tag in offspring)
        assert counts == {"copy": 10, "mutate": 20, "mate": 20}

    def test_elitism_copies_top_ranks_unchanged(self):
        cfg = EvolutionConfig()
        selected = self.make_selected(20)
        offspring = next_generation(selected, cfg, derive_rng(11, "ng"))
        for k in range(cfg.n_copy):
            assert offspring[k][0] == selected[k]

    def test_fixed_seed_reproduces_offspring(self):
        cfg = EvolutionConfig()
        selected = self.make_selected(20)
        one = next_generation(selected, cfg, derive_rng(12, "ng"))
        two = next_generation(selected, cfg, derive_rng(12, "ng"))
        digest = hashlib.sha256(
            "".join(genome_to_json(g) for g, _ in one).encode()
        ).hexdigest()
        assert digest == hashlib.sha256(
            "".join(genome_to_json(g) for g, _ in two).encode()
        ).hexdigest()

    def test_wrong_selected_length_rejected(self):
        with pytest.raises(ValueError):
            next_generation(self.make_selected(5), EvolutionConfig(), derive_rng(13, "ng"))


class TestEvolve:
    def test_zero_generations_single_record(self):
        cfg = EvolutionConfig(generations=0, population_size=6, n_selected=3,
                              n_copy=2, n_mutants=2, n_mated=2, seed=5)
        records = evolve(SMALL_WORLD, cfg)
        assert len(records) == 1
        assert records[0].generation == 0
        assert records[0].operator_tags == ["init"] * 6

    def test_record_bookkeeping(self):
        records = evolve(SMALL_WORLD, SMALL_EVO)
        assert len(records) == SMALL_EVO.generations + 1
        for rec in records:
            assert rec.fitness.shape == (6,)
            assert len(rec.operator_tags) == 6
            assert rec.mean_fitness == pytest.approx(rec.fitness.mean())
            assert rec.max_fitness == rec.fitness.max()
        for rec in records[1:]:
            assert Counter(rec.operator_tags) == {"copy": 2, "mutate": 2, "mate": 2}

    def test_elitism_across_generations(self):
        pools = []
        evolve(SMALL_WORLD, SMALL_EVO,
               snapshot_hook=lambda g, genomes, rec: pools.append(
                   (rec.fitness.copy(), [x.copy() for x in genomes])))
        for g in range(len(pools) - 1):
            fitness, genomes = pools[g]
            best = genomes[int(np.argmax(fitness))]
            assert any(best == cand for cand in pools[g + 1][1])

    def test_all_genomes_stay_valid(self):
        evolve(SMALL_WORLD, SMALL_EVO,
               snapshot_hook=lambda g, genomes, rec: [validate_genome(x) for x in genomes])

    def test_reproducible_record_stream(self):
        a = evolve(SMALL_WORLD, SMALL_EVO)
        b = evolve(SMALL_WORLD, SMALL_EVO)
        for ra, rb in zip(a, b):
            assert np.array_equal(ra.fitness, rb.fitness)
            assert ra.operator_tags == rb.operator_tags

    def test_delta_measurement_stride(self):
        calls = []

        def fake_delta(organism, rng):
            calls.append(organism.genome.beta)
            return -0.5

        cfg = EvolutionConfig(generations=4, population_size=6, n_selected=3,
                              n_copy=2, n_mutants=2, n_mated=2, seed=9,
                              delta_stride=2)
        records = evolve(SMALL_WORLD, cfg, delta_fn=fake_delta)
        measured = [r.generation for r in records if r.delta is not None]
        assert measured == [0, 2, 4]
        for r in records:
            if r.delta is not None:
                assert r.delta.shape == (6,)
                assert r.mean_delta == pytest.approx(-0.5)
            else:
                assert r.mean_delta is None
        assert len(calls) == 3 * 6

    def test_population_config_mismatch_rejected(self):
        with pytest.raises(ValueError):
            evolve(WorldConfig(n_organisms=5, n_food=10, lifetime=10), SMALL_EVO)
