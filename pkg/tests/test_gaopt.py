import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regionseg._validation import uniform_weights
from regionseg.cluster import KMeansConfig, WeightedKMeans, davies_bouldin
from regionseg.gaopt import (
    GaConfig,
    GeneticWeightOptimizer,
    blend_crossover,
    evaluate_fitness,
    gaussian_mutate,
    init_population,
    repair_weights,
    run_ga,
    tournament_select,
)

from corpora import planted_noise_corpus


class StubRng:
    """Duck-typed generator feeding scripted draws to the GA operators."""

    def __init__(self, scalars=(), vectors=(), normals=(), ints=()):
        self.scalars = list(scalars)
        self.vectors = [np.asarray(v, dtype=float) for v in vectors]
        self.normals = [np.asarray(v, dtype=float) for v in normals]
        self.ints = [np.asarray(v) for v in ints]

    def random(self, size=None):
        if size is None:
            return self.scalars.pop(0)
        return self.vectors.pop(0)

    def normal(self, loc, scale, size=None):
        return self.normals.pop(0)

    def integers(self, low, high=None, size=None):
        return self.ints.pop(0)


SMALL_KMEANS = KMeansConfig(n_init=2, max_iter=100, seed=0)


# ------------------------------------------------------------------ repair

def test_repair_clamps_negatives_then_normalizes():
    out = repair_weights([-0.2, 0.5, 0.7])
    assert np.allclose(out, [0.0, 5 / 12, 7 / 12], atol=1e-15)


def test_repair_all_zero_becomes_uniform():
    assert np.allclose(repair_weights([0.0, 0.0, 0.0]), [1 / 3] * 3)


def test_repair_is_identity_on_valid_vectors():
    w = np.array([0.25, 0.5, 0.25])
    assert np.allclose(repair_weights(w), w, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=8))
def test_repair_always_lands_on_the_simplex(genome):
    out = repair_weights(genome)
    assert np.all(out >= 0)
    assert out.sum() == pytest.approx(1.0, abs=1e-9)


# ------------------------------------------------------------- tournament

def test_tournament_picks_highest_fitness():
    fitness = np.array([0.1, 0.9, 0.5])
    rng = StubRng(ints=[np.array([0, 1, 2])])
    assert tournament_select(fitness, 3, rng) == 1


def test_tournament_population_of_one():
    rng = StubRng(ints=[np.array([0, 0, 0])])
    assert tournament_select(np.array([0.42]), 3, rng) == 0


def test_tournament_tie_goes_to_first_drawn():
    fitness = np.array([0.7, 0.7, 0.7])
    rng = StubRng(ints=[np.array([2, 0, 1])])
    assert tournament_select(fitness, 3, rng) == 2


# -------------------------------------------------------------- crossover

def test_blend_midpoint_gene():
    cfg = GaConfig(seed=0)
    p1 = np.array([0.2, 0.8])
    p2 = np.array([0.6, 0.4])
    rng = StubRng(scalars=[0.0], vectors=[np.array([0.5, 0.5])])
    c1, c2 = blend_crossover(p1, p2, cfg, rng)
    # gamma = 0.5 -> plain midpoint; already on the simplex, repair no-op
    assert np.allclose(c1, [0.4, 0.6], atol=1e-15)
    assert np.allclose(c2, [0.4, 0.6], atol=1e-15)


def test_blend_gamma_range_at_extreme_u():
    cfg = GaConfig(seed=0)
    p1 = np.array([0.2, 0.8])
    p2 = np.array([0.6, 0.4])
    rng = StubRng(scalars=[0.0], vectors=[np.array([0.0, 1.0])])
    c1, c2 = blend_crossover(p1, p2, cfg, rng)
    # gamma = -0.5 and 1.5: children extend 0.5*delta beyond each parent
    raw_c1 = np.array([1.5 * 0.2 - 0.5 * 0.6, 1.5 * 0.4 - 0.5 * 0.8])
    raw_c2 = np.array([1.5 * 0.6 - 0.5 * 0.2, 1.5 * 0.8 - 0.5 * 0.4])
    assert np.allclose(c1, repair_weights(raw_c1), atol=1e-12)
    assert np.allclose(c2, repair_weights(raw_c2), atol=1e-12)


def test_blend_skipped_returns_copies():
    cfg = GaConfig(seed=0)  # crossover_prob = 0.7
    p1 = np.array([0.3, 0.7])
    p2 = np.array([0.9, 0.1])
    rng = StubRng(scalars=[0.95])
    c1, c2 = blend_crossover(p1, p2, cfg, rng)
    assert np.array_equal(c1, p1) and np.array_equal(c2, p2)
    assert c1 is not p1 and c2 is not p2


def test_blend_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        blend_crossover(np.ones(2), np.ones(3), GaConfig(), StubRng([0.0]))


# --------------------------------------------------------------- mutation

def test_mutate_zero_noise_keeps_genome():
    cfg = GaConfig()
    genome = repair_weights([0.2, 0.3, 0.5])
    rng = StubRng(vectors=[np.array([0.0, 0.0, 0.0])],
                  normals=[np.zeros(3)])
    assert np.allclose(gaussian_mutate(genome, cfg, rng), genome, atol=1e-15)


def test_mutate_disabled_gene_probability():
    cfg = GaConfig(gene_mutation_prob=0.0)
    genome = repair_weights([0.6, 0.4])
    out = gaussian_mutate(genome, cfg, np.random.default_rng(0))
    assert np.allclose(out, genome, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mutate_output_is_always_a_weight_vector(seed):
    rng = np.random.default_rng(seed)
    genome = repair_weights(rng.random(5))
    out = gaussian_mutate(genome, GaConfig(), rng)
    assert np.all(out >= 0)
    assert out.sum() == pytest.approx(1.0, abs=1e-9)


# ----------------------------------------------------------- init & fitness

def test_init_population_default_size_and_validity():
    pop = init_population(3, GaConfig(seed=1), np.random.default_rng(1))
    assert pop.shape == (52, 3)
    assert np.all(pop >= 0)
    assert np.allclose(pop.sum(axis=1), 1.0, atol=1e-9)


def test_init_population_injects_seed_individual_verbatim():
    seed_w = np.array([0.6, 0.3, 0.1])
    pop = init_population(3, GaConfig(seed=1), np.random.default_rng(1),
                          seed_individual=seed_w)
    assert np.array_equal(pop[0], seed_w)


def test_init_population_deterministic():
    a = init_population(4, GaConfig(), np.random.default_rng(9))
    b = init_population(4, GaConfig(), np.random.default_rng(9))
    assert np.array_equal(a, b)


def test_fitness_is_inverse_davies_bouldin(rng):
    X = rng.random((80, 3))
    w = uniform_weights(3)
    fit = evaluate_fitness(w, X, 3, SMALL_KMEANS, random_state=123)
    model = WeightedKMeans(3, weights=w, n_init=SMALL_KMEANS.n_init,
                           max_iter=SMALL_KMEANS.max_iter,
                           random_state=123).fit(X)
    db = davies_bouldin(X, model.labels_, model.cluster_centers_, w)
    assert fit * db == pytest.approx(1.0, abs=1e-9)


def test_fitness_zero_for_degenerate_clustering():
    X = np.zeros((6, 2))  # all points identical -> coincident centroids
    assert evaluate_fitness(uniform_weights(2), X, 2, SMALL_KMEANS) == 0.0


def test_fitness_prefers_informative_weights():
    X, _ = planted_noise_corpus(n_rows=1_500, seed=4)
    oracle = np.array([0.5, 0.5, 0.0, 0.0, 0.0])
    uni = uniform_weights(5)
    f_oracle = evaluate_fitness(oracle, X, 3, SMALL_KMEANS, random_state=5)
    f_uniform = evaluate_fitness(uni, X, 3, SMALL_KMEANS, random_state=5)
    assert f_oracle > f_uniform


# ------------------------------------------------------------------ run_ga

FAST_GA = GaConfig(population=10, generations=6, seed=3)
FAST_KMEANS = KMeansConfig(n_init=1, max_iter=50, seed=0)


def ga_fixture_corpus():
    X, _ = planted_noise_corpus(n_rows=600, seed=8, n_noise=2)
    return X


def test_run_ga_best_fitness_is_exactly_non_decreasing():
    X = ga_fixture_corpus()
    result = run_ga(X, 3, FAST_GA, FAST_KMEANS)
    best = result.trace.best_fitness
    assert len(best) == FAST_GA.generations + 1
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))


def test_run_ga_zero_generations_returns_initial_best():
    X = ga_fixture_corpus()
    cfg = GaConfig(population=8, generations=0, seed=5)
    result = run_ga(X, 3, cfg, FAST_KMEANS)
    assert len(result.trace.best_fitness) == 1
    assert result.best_fitness == result.trace.best_fitness[0]


def test_run_ga_deterministic_under_seed():
    X = ga_fixture_corpus()
    r1 = run_ga(X, 3, FAST_GA, FAST_KMEANS)
    r2 = run_ga(X, 3, FAST_GA, FAST_KMEANS)
    assert np.array_equal(r1.best_weights, r2.best_weights)
    assert r1.trace.best_fitness == r2.trace.best_fitness
    assert r1.trace.mean_fitness == r2.trace.mean_fitness


def test_run_ga_traced_genomes_live_on_the_simplex():
    X = ga_fixture_corpus()
    result = run_ga(X, 3, FAST_GA, FAST_KMEANS)
    for genome in result.trace.best_genome:
        assert np.all(genome >= 0)
        assert genome.sum() == pytest.approx(1.0, abs=1e-9)


def test_run_ga_seed_individual_can_only_help():
    X = ga_fixture_corpus()
    seed_w = repair_weights([0.5, 0.5, 0.0, 0.0])
    with_seed = run_ga(X, 3, FAST_GA, FAST_KMEANS, seed_weights=seed_w)
    assert with_seed.trace.best_fitness[0] > 0


def test_trace_csv_layout():
    X = ga_fixture_corpus()
    result = run_ga(X, 3, GaConfig(population=6, generations=2, seed=1),
                    FAST_KMEANS)
    lines = result.trace.to_csv().splitlines()
    assert lines[0] == "generation,best_fitness,mean_fitness"
    assert len(lines) == 4


def test_estimator_facade_matches_functional_api():
    X = ga_fixture_corpus()
    opt = GeneticWeightOptimizer(
        n_clusters=3, population=10, generations=6,
        kmeans_n_init=1, kmeans_max_iter=50, random_state=3,
    ).fit(X)
    functional = run_ga(X, 3, FAST_GA,
                        KMeansConfig(n_init=1, max_iter=50))
    assert np.array_equal(opt.best_weights_, functional.best_weights)
    assert opt.trace_.best_fitness == functional.trace.best_fitness
