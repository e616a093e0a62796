
import numpy as np
import pytest

from helpers import brute_force_sparseness
from rcspace import (
    BehaviourPoint,
    ConfigurationError,
    EchoStateNetwork,
    NoveltySearch,
    NsParams,
    random_search,
    sparseness,
    update_rho_min,
)
from rcspace import persistence


def stub_evaluate(genotype):
    g = genotype.genes
    return BehaviourPoint(
        kr=int(round(float(g[:4].sum()) * 3)),
        gr=int(round(float(g[4:8].sum()) * 2)),
        mc=float(g.sum()),
    )


def small_search(seed=0, **overrides):
    params = dict(
        generations=30, population=10, deme=3, recombination_rate=0.5,
        mutation_rate=0.2, rho_min=0.8, rho_min_interval=10, k_nearest=4,
    )
    params.update(overrides)
    substrate = EchoStateNetwork(n_nodes=2)
    return NoveltySearch(
        substrate, stub_evaluate, NsParams(**params),
        rng=np.random.default_rng(np.random.SeedSequence(seed)),
    )


class TestSparseness:
    def test_two_points_distance(self):
        assert sparseness([0.0, 0.0, 0.0], [[3.0, 4.0, 0.0]], k=1) == pytest.approx(5.0)

    def test_coincident_neighbours_score_zero(self):
        x = [1.0, 2.0, 3.0]
        assert sparseness(x, [x] * 6, k=4) == 0.0

    def test_matches_brute_force_oracle(self, rng):
        pts = rng.uniform(0, 30, size=(20, 3))
        for _ in range(10):
            x = rng.uniform(0, 30, size=3)
            assert sparseness(x, pts, k=15) == pytest.approx(brute_force_sparseness(x, pts, 15), rel=1e-12)

    def test_empty_reference_is_maximally_novel(self):
        assert sparseness([1.0, 1.0, 1.0], np.empty((0, 3)), k=3) == float("inf")

    def test_k_capped_at_reference_size(self):
        assert sparseness([0.0, 0.0, 0.0], [[1.0, 0.0, 0.0]], k=15) == pytest.approx(1.0)


class TestRhoSchedule:
    def test_raised_twenty_percent(self):
        assert update_rho_min(3.0, 12) == pytest.approx(3.6)

    def test_lowered_five_percent(self):
        assert update_rho_min(3.0, 0) == pytest.approx(2.85)

    def test_unchanged_between(self):
        assert update_rho_min(3.0, 5) == 3.0
        assert update_rho_min(3.0, 10) == 3.0
        assert update_rho_min(3.0, 11) == pytest.approx(3.6)


class TestGenerationMechanics:
    def test_three_novelty_evaluations_per_generation(self):
        search = small_search().run(20)
        assert search.sparseness_evaluations == 3 * 20

    def test_database_size_is_population_plus_generations(self):
        search = small_search().run(30)
        assert len(search.database) == 10 + 30

    def test_population_size_constant(self):
        search = small_search().run(30)
        assert len(search.population) == 10

    def test_deme_locality(self):
        search = small_search(deme=3).run(30)
        for rec in search.tournament_log:
            ring = min(abs(rec.first - rec.second), 10 - abs(rec.first - rec.second))
            assert 1 <= ring <= 3

    def test_archive_admissions_exceeded_threshold_in_force(self):
        search = small_search().run(30)
        admitted = [e for e in search.archive_log if not e.seeded]
        assert admitted, "expected at least one admission in 30 generations"
        for entry in admitted:
            assert entry.novelty > entry.rho_min

    def test_rho_updates_logged_on_interval(self):
        search = small_search(rho_min_interval=10).run(30)
        assert [g for g, *_ in search.rho_history] == [10, 20, 30]

    def test_step_before_initialise_rejected(self):
        with pytest.raises(ConfigurationError):
            small_search().step()

    def test_archive_stack_bound(self):
        search = small_search(rho_min=0.0, archive_max_size=5).run(30)
        assert len(search.archive) <= 5
        # full log still keeps every admission
        assert len(search.archive_log) > 5

    def test_archive_behaviours_are_a_subset_of_the_database(self):
        search = small_search().run(30)
        db_points = {tuple(ind.behaviour.as_array()) for ind in search.database}
        for entry in search.archive_log:
            assert tuple(entry.behaviour.as_array()) in db_points


class TestReplayOracle:
    def test_full_trace_matches_reference_replay(self):
        seed = 42
        params = dict(generations=12, population=10, deme=3, recombination_rate=0.5,
                      mutation_rate=0.2, rho_min=0.8, rho_min_interval=5, k_nearest=4)
        search = small_search(seed=seed, **params).run(12)

        substrate = EchoStateNetwork(n_nodes=2)
        n_genes = substrate.n_genes
        rng = np.random.default_rng(np.random.SeedSequence(seed))

        def eval_genes(genes):
            from rcspace import Genotype

            return stub_evaluate(Genotype(genes, substrate)).as_array()

        pop_genes, pop_beh, db, archive = [], [], [], []
        for _ in range(10):
            genes = rng.random(n_genes)
            b = eval_genes(genes)
            pop_genes.append(genes)
            pop_beh.append(b)
            db.append(b)
            archive.append(b)
        rho, added = 0.8, 0

        def novelty(point, exclude):
            refs = [b for s, b in enumerate(pop_beh) if s != exclude] + archive
            return brute_force_sparseness(point, refs, 4)

        for gen in range(1, 13):
            i = int(rng.integers(10))
            j = (i + 1 + int(rng.integers(3))) % 10
            winner, loser = (i, j) if novelty(pop_beh[i], i) >= novelty(pop_beh[j], j) else (j, i)
            take = rng.random(n_genes) < 0.5
            child = np.where(take, pop_genes[winner], pop_genes[loser])
            flip = rng.random(n_genes) < 0.2
            fresh = rng.random(n_genes)
            child = np.where(flip, fresh, child)
            b = eval_genes(child)
            pop_genes[loser], pop_beh[loser] = child, b
            db.append(b)
            if novelty(b, loser) > rho:
                archive.append(b)
                added += 1
            if gen % 5 == 0:
                rho = update_rho_min(rho, added)
                added = 0

        got = np.array([ind.behaviour.as_array() for ind in search.database])
        np.testing.assert_array_equal(got, np.array(db))
        np.testing.assert_array_equal(search.archive, np.array(archive))
        assert search.rho_min == pytest.approx(rho)
        got_pop = np.array([ind.genotype.genes for ind in search.population])
        np.testing.assert_array_equal(got_pop, np.array(pop_genes))


class TestRandomSearch:
    def test_zero_evaluations_empty_database(self):
        substrate = EchoStateNetwork(n_nodes=2)
        assert random_search(substrate, stub_evaluate, 0, np.random.default_rng(0)) == []

    def test_database_size_equals_evaluations(self):
        substrate = EchoStateNetwork(n_nodes=2)
        db = random_search(substrate, stub_evaluate, 17, np.random.default_rng(0))
        assert len(db) == 17
        assert [ind.generation for ind in db] == list(range(17))

    def test_rerun_with_same_seed_identical(self):
        substrate = EchoStateNetwork(n_nodes=2)
        a = random_search(substrate, stub_evaluate, 9, np.random.default_rng(5))
        b = random_search(substrate, stub_evaluate, 9, np.random.default_rng(5))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.genotype.genes, y.genotype.genes)
            assert x.behaviour == y.behaviour


class TestRestore:
    def test_split_run_matches_straight_run(self, tmp_path):
        straight = small_search(seed=3).run(24)

        first = small_search(seed=3).run(12)
        db_path, arc_path = str(tmp_path / "db.ndjson"), str(tmp_path / "arc.ndjson")
        persistence.save_database(db_path, first.database)
        persistence.save_archive_log(arc_path, first.archive_log)
        state = first.state_dict()

        substrate = EchoStateNetwork(n_nodes=2)
        resumed = NoveltySearch.restore(
            substrate,
            stub_evaluate,
            first.params,
            persistence.load_database(db_path, substrate),
            persistence.load_archive_log(arc_path),
            state,
        ).run(24)

        assert len(resumed.database) == len(straight.database)
        for a, b in zip(resumed.database, straight.database):
            np.testing.assert_array_equal(a.genotype.genes, b.genotype.genes)
            assert a.behaviour == b.behaviour
        np.testing.assert_array_equal(resumed.archive, straight.archive)
        assert resumed.rho_min == straight.rho_min


class TestParamValidation:
    def test_deme_must_be_smaller_than_population(self):
        with pytest.raises(ConfigurationError):
            NsParams(population=10, deme=10)

    def test_rates_must_be_probabilities(self):
        with pytest.raises(ConfigurationError):
            NsParams(mutation_rate=1.2)

    def test_defaults_are_full_scale(self):
        p = NsParams()
        assert (p.generations, p.population, p.deme) == (2000, 200, 40)
        assert (p.recombination_rate, p.mutation_rate) == (0.5, 0.1)
        assert (p.rho_min, p.rho_min_interval, p.k_nearest) == (3.0, 200, 15)
