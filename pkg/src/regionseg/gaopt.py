"""Elitist genetic search over distance-weight vectors.

Individuals are weight vectors on the unit simplex; fitness is the inverse
Davies-Bouldin score of the weighted k-means clustering they induce at a
fixed k. Selection is tournament-based, crossover blends parent genes, and
mutation adds Gaussian noise; every operator is followed by a repair step
that projects the genome back onto the simplex.
"""

from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import (
    as_feature_matrix,
    check_weights,
    derive_seed,
    uniform_weights,
)
from .cluster import KMeansConfig, WeightedKMeans

FITNESS_CAP = 1e12


@dataclass(frozen=True)
class GaConfig:
    population: int = 52
    generations: int = 30
    tournament_size: int = 3
    crossover_prob: float = 0.7
    blend_alpha: float = 0.5
    mutation_sigma: float = 0.2
    gene_mutation_prob: float = 0.2
    elites: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        for name in ("crossover_prob", "gene_mutation_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 1 <= self.elites <= self.population:
            raise ValueError("elites must be in [1, population]")


@dataclass
class GaTrace:
    """Per-generation progress of the search (generation 0 = initial pool)."""

    best_fitness: list[float] = field(default_factory=list)
    mean_fitness: list[float] = field(default_factory=list)
    best_genome: list[np.ndarray] = field(default_factory=list)

    def record(self, population: np.ndarray, fitness: np.ndarray):
        best = int(np.argmax(fitness))
        self.best_fitness.append(float(fitness[best]))
        self.mean_fitness.append(float(fitness.mean()))
        self.best_genome.append(population[best].copy())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["generation", "best_fitness", "mean_fitness"])
        for gen, (best, mean) in enumerate(zip(self.best_fitness,
                                               self.mean_fitness)):
            writer.writerow([gen, repr(best), repr(mean)])
        return buf.getvalue()


@dataclass(frozen=True)
class GaResult:
    best_weights: np.ndarray
    best_fitness: float
    trace: GaTrace


def repair_weights(genome) -> np.ndarray:
    """Project a raw genome onto the simplex: clamp negatives to zero, then
    normalize; an all-zero genome becomes uniform."""
    g = np.maximum(np.asarray(genome, dtype=np.float64), 0.0)
    total = g.sum()
    if total <= 0.0:
        return uniform_weights(g.size)
    return g / total


def tournament_select(fitness: np.ndarray, size: int,
                      rng: np.random.Generator) -> int:
    """Index of the fittest of `size` uniform draws (with replacement);
    ties go to the first drawn."""
    draws = rng.integers(0, fitness.shape[0], size=size)
    best = draws[0]
    for idx in draws[1:]:
        if fitness[idx] > fitness[best]:
            best = idx
    return int(best)


def blend_crossover(p1: np.ndarray, p2: np.ndarray, cfg: GaConfig,
                    rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Blend parents gene-wise with probability ``crossover_prob``.

    Per gene, gamma = (1 + 2*alpha)*u - alpha with u ~ U(0,1); children are
    the gamma-interpolations of the parents and are repaired. A skipped
    crossover returns plain copies.
    """
    if p1.shape != p2.shape:
        raise ValueError("parents must have equal dimension")
    if rng.random() >= cfg.crossover_prob:
        return p1.copy(), p2.copy()
    u = rng.random(p1.shape[0])
    gamma = (1.0 + 2.0 * cfg.blend_alpha) * u - cfg.blend_alpha
    c1 = (1.0 - gamma) * p1 + gamma * p2
    c2 = gamma * p1 + (1.0 - gamma) * p2
    return repair_weights(c1), repair_weights(c2)


def gaussian_mutate(genome: np.ndarray, cfg: GaConfig,
                    rng: np.random.Generator) -> np.ndarray:
    """Add N(0, sigma^2) noise to each gene independently with probability
    ``gene_mutation_prob``; repair afterward."""
    mask = rng.random(genome.shape[0]) < cfg.gene_mutation_prob
    noise = rng.normal(0.0, cfg.mutation_sigma, size=genome.shape[0])
    return repair_weights(genome + mask * noise)


def evaluate_fitness(weights, X, k: int, kmeans: KMeansConfig,
                     random_state: int | None = None) -> float:
    """Inverse Davies-Bouldin of the weighted k-means clustering.

    Degenerate clusterings (undefined or infinite index) score 0; a
    vanishing index is capped at 1e12 to keep selection well-defined.
    """
    w = check_weights(weights, np.asarray(X).shape[1])
    model = WeightedKMeans(
        n_clusters=k, weights=w, n_init=kmeans.n_init,
        max_iter=kmeans.max_iter, tol=kmeans.tol,
        random_state=kmeans.seed if random_state is None else random_state,
    ).fit(X)
    db = model.davies_bouldin_
    if db is None or not math.isfinite(db):
        return 0.0
    if db < 1e-12:
        return FITNESS_CAP
    return 1.0 / db


def init_population(d: int, cfg: GaConfig, rng: np.random.Generator,
                    seed_individual=None) -> np.ndarray:
    """Initial pool: the importance-derived individual (when given) takes
    slot 0 verbatim; the rest are uniform draws repaired onto the simplex."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    population = np.empty((cfg.population, d))
    start = 0
    if seed_individual is not None:
        population[0] = check_weights(seed_individual, d)
        start = 1
    for i in range(start, cfg.population):
        population[i] = repair_weights(rng.random(d))
    return population


def run_ga(
    X,
    k: int,
    cfg: GaConfig | None = None,
    kmeans: KMeansConfig | None = None,
    seed_weights=None,
) -> GaResult:
    """Full generational loop; returns the best-ever weights and the trace.

    The top ``elites`` individuals are copied unchanged (fitness included)
    into the next generation, which makes the best-fitness sequence exactly
    non-decreasing. Each new individual's k-means evaluation uses a seed
    derived from (ga seed, generation, slot), so reruns are identical no
    matter how evaluations are scheduled.
    """
    cfg = cfg or GaConfig()
    kmeans = kmeans or KMeansConfig()
    X = as_feature_matrix(X)
    d = X.shape[1]
    base_seed = cfg.seed
    if base_seed is None:
        base_seed = int(np.random.SeedSequence().generate_state(1)[0])
    rng = np.random.default_rng(base_seed)

    population = init_population(d, cfg, rng, seed_individual=seed_weights)
    fitness = np.array([
        evaluate_fitness(population[i], X, k, kmeans,
                         random_state=derive_seed(base_seed, 0, i))
        for i in range(cfg.population)
    ])
    trace = GaTrace()
    trace.record(population, fitness)

    for gen in range(1, cfg.generations + 1):
        elite_order = np.argsort(-fitness, kind="stable")[:cfg.elites]
        next_pop = [population[i].copy() for i in elite_order]
        next_fit = [float(fitness[i]) for i in elite_order]
        while len(next_pop) < cfg.population:
            i1 = tournament_select(fitness, cfg.tournament_size, rng)
            i2 = tournament_select(fitness, cfg.tournament_size, rng)
            c1, c2 = blend_crossover(population[i1], population[i2], cfg, rng)
            for child in (c1, c2):
                if len(next_pop) >= cfg.population:
                    break
                child = gaussian_mutate(child, cfg, rng)
                slot = len(next_pop)
                next_pop.append(child)
                next_fit.append(evaluate_fitness(
                    child, X, k, kmeans,
                    random_state=derive_seed(base_seed, gen, slot)))
        population = np.array(next_pop)
        fitness = np.array(next_fit)
        trace.record(population, fitness)

    best = int(np.argmax(trace.best_fitness))
    return GaResult(
        best_weights=trace.best_genome[best].copy(),
        best_fitness=float(trace.best_fitness[best]),
        trace=trace,
    )


class GeneticWeightOptimizer(BaseEstimator):
    """Estimator facade over :func:`run_ga`.

    fit(X) populates ``best_weights_``, ``best_fitness_`` and ``trace_``.
    ``initial_weights`` (typically the EDA importance vector) seeds slot 0
    of the first generation.
    """

    def __init__(self, n_clusters: int = 2, population: int = 52,
                 generations: int = 30, tournament_size: int = 3,
                 crossover_prob: float = 0.7, blend_alpha: float = 0.5,
                 mutation_sigma: float = 0.2, gene_mutation_prob: float = 0.2,
                 elites: int = 1, initial_weights=None,
                 kmeans_n_init: int = 2, kmeans_max_iter: int = 300,
                 kmeans_tol: float = 1e-4, random_state: int | None = None):
        self.n_clusters = n_clusters
        self.population = population
        self.generations = generations
        self.tournament_size = tournament_size
        self.crossover_prob = crossover_prob
        self.blend_alpha = blend_alpha
        self.mutation_sigma = mutation_sigma
        self.gene_mutation_prob = gene_mutation_prob
        self.elites = elites
        self.initial_weights = initial_weights
        self.kmeans_n_init = kmeans_n_init
        self.kmeans_max_iter = kmeans_max_iter
        self.kmeans_tol = kmeans_tol
        self.random_state = random_state

    def fit(self, X, y=None):
        cfg = GaConfig(
            population=self.population,
            generations=self.generations,
            tournament_size=self.tournament_size,
            crossover_prob=self.crossover_prob,
            blend_alpha=self.blend_alpha,
            mutation_sigma=self.mutation_sigma,
            gene_mutation_prob=self.gene_mutation_prob,
            elites=self.elites,
            seed=self.random_state,
        )
        kmeans = KMeansConfig(
            n_init=self.kmeans_n_init,
            max_iter=self.kmeans_max_iter,
            tol=self.kmeans_tol,
        )
        result = run_ga(X, self.n_clusters, cfg, kmeans,
                        seed_weights=self.initial_weights)
        self.best_weights_ = result.best_weights
        self.best_fitness_ = result.best_fitness
        self.trace_ = result.trace
        return self
