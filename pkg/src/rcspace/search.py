"""Behaviour-space exploration with novelty search on a microbial GA.

One generation runs a two-individual tournament: the first parent is
drawn uniformly, the second from a ring-shaped deme around it, and the
more novel parent infects the loser (horizontal gene transfer followed
by point mutation). The offspring always replaces the loser in the
population and is appended to the database; it also enters the archive
when its novelty exceeds the adaptive threshold rho_min. Novelty is the
mean distance to the k nearest behaviours among the current population
and the archive, excluding the individual's own population slot
(coincident behaviours from other individuals do count).

Exactly three novelty evaluations happen per generation: both parents
and the offspring.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .exceptions import ConfigurationError, NumericalError
from .measures import BehaviourPoint
from .substrates import Genotype, SubstrateBase, infect, mutate
from .validation import as_rng, check_rate

RHO_RAISE_FACTOR = 1.2
RHO_RAISE_THRESHOLD = 10
RHO_LOWER_FACTOR = 0.95


@dataclasses.dataclass
class NsParams:
    """Search parameters; the defaults are full-scale values, shrink for quick runs."""

    generations: int = 2000
    population: int = 200
    deme: int = 40
    recombination_rate: float = 0.5
    mutation_rate: float = 0.1
    rho_min: float = 3.0
    rho_min_interval: int = 200
    k_nearest: int = 15
    archive_random_add_prob: float = 0.0
    archive_max_size: int | None = None

    def __post_init__(self):
        if int(self.population) < 2:
            raise ConfigurationError("population must be >= 2")
        if not 1 <= int(self.deme) < int(self.population):
            raise ConfigurationError("deme must satisfy 1 <= deme < population")
        check_rate(self.recombination_rate, "recombination_rate")
        check_rate(self.mutation_rate, "mutation_rate")
        check_rate(self.archive_random_add_prob, "archive_random_add_prob")
        if int(self.k_nearest) < 1:
            raise ConfigurationError("k_nearest must be >= 1")
        if int(self.rho_min_interval) < 1:
            raise ConfigurationError("rho_min_interval must be >= 1")
        if int(self.generations) < 0:
            raise ConfigurationError("generations must be >= 0")
        if self.archive_max_size is not None and int(self.archive_max_size) < 1:
            raise ConfigurationError("archive_max_size must be >= 1 when set")


@dataclasses.dataclass
class SearchIndividual:
    genotype: Genotype
    behaviour: BehaviourPoint
    generation: int
    run_id: int


@dataclasses.dataclass
class ArchiveEntry:
    behaviour: BehaviourPoint
    generation: int
    novelty: float | None
    rho_min: float | None
    seeded: bool = False


@dataclasses.dataclass
class TournamentRecord:
    generation: int
    first: int
    second: int
    winner: int
    child_novelty: float
    admitted: bool
    rho_min: float


def sparseness(x, others, k: int) -> float:
    """Mean Euclidean distance from ``x`` to its k nearest behaviours.

    ``others`` is an (n, 3) array of reference behaviours; an empty
    reference set is maximally novel (+inf). ``k`` is capped at n.
    """
    x = x.as_array() if isinstance(x, BehaviourPoint) else np.asarray(x, dtype=float)
    others = np.asarray(others, dtype=float).reshape(-1, x.size)
    if others.shape[0] == 0:
        return float("inf")
    k = min(int(k), others.shape[0])
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    dists = np.sort(np.linalg.norm(others - x, axis=1))
    return float(dists[:k].sum() / k)


def update_rho_min(rho_min: float, added_count: int) -> float:
    """Adapt the archive-admission threshold after an update interval.

    Raised by 20% when more than 10 individuals were added, lowered by
    5% when none were, otherwise unchanged.
    """
    if added_count > RHO_RAISE_THRESHOLD:
        return rho_min * RHO_RAISE_FACTOR
    if added_count == 0:
        return rho_min * RHO_LOWER_FACTOR
    return rho_min


class NoveltySearch:
    """Stateful explorer for one evolutionary run.

    ``evaluate`` maps a genotype to its behaviour point (typically a
    measures.BehaviourEvaluator); evaluation failures are recorded as
    the degenerate behaviour and the offspring still enters the
    population.
    """

    def __init__(self, substrate: SubstrateBase, evaluate, params: NsParams | None = None, rng=None, run_id: int = 0):
        self.substrate = substrate
        self.evaluate = evaluate
        self.params = params if params is not None else NsParams()
        self.rng = as_rng(rng)
        self.run_id = int(run_id)

        self.population: list[SearchIndividual] = []
        self.database: list[SearchIndividual] = []
        self.archive_log: list[ArchiveEntry] = []
        self.tournament_log: list[TournamentRecord] = []
        self.rho_history: list[tuple[int, float, float, int]] = []
        self.generation = 0
        self.rho_min = float(self.params.rho_min)
        self.added_since_update = 0
        self.sparseness_evaluations = 0
        self._pop_behaviours = np.zeros((int(self.params.population), 3))
        self._slot_db_index: list[int] = []
        self._archive_points: list[np.ndarray] = []
        self._archive_start = 0  # first live entry when the archive is bounded

    # -- setup ---------------------------------------------------------

    def initialise(self) -> "NoveltySearch":
        """Draw and evaluate the starting population; seed archive and database."""
        if self.population:
            raise ConfigurationError("search already initialised")
        for slot in range(int(self.params.population)):
            genotype = self.substrate.random_genotype(self.rng)
            individual = SearchIndividual(genotype, self._safe_evaluate(genotype), 0, self.run_id)
            self.population.append(individual)
            self._pop_behaviours[slot] = individual.behaviour.as_array()
            self._slot_db_index.append(len(self.database))
            self.database.append(individual)
            self._archive_append(ArchiveEntry(individual.behaviour, 0, None, None, seeded=True))
        return self

    def _safe_evaluate(self, genotype: Genotype) -> BehaviourPoint:
        try:
            return self.evaluate(genotype)
        except NumericalError:
            return BehaviourPoint.degenerate_point()

    # -- archive -------------------------------------------------------

    def _archive_append(self, entry: ArchiveEntry):
        self.archive_log.append(entry)
        self._archive_points.append(entry.behaviour.as_array())
        if self.params.archive_max_size is not None:
            live = len(self._archive_points) - self._archive_start
            if live > int(self.params.archive_max_size):
                self._archive_start += live - int(self.params.archive_max_size)

    @property
    def archive(self) -> np.ndarray:
        """Live archive behaviours, oldest first."""
        pts = self._archive_points[self._archive_start :]
        return np.asarray(pts).reshape(len(pts), 3)

    # -- novelty -------------------------------------------------------

    def _novelty(self, point: BehaviourPoint, exclude_slot: int | None) -> float:
        pop = self._pop_behaviours
        if exclude_slot is not None:
            pop = np.delete(pop, exclude_slot, axis=0)
        ref = np.concatenate([pop, self.archive], axis=0)
        self.sparseness_evaluations += 1
        return sparseness(point, ref, self.params.k_nearest)

    # -- evolution -----------------------------------------------------

    def step(self) -> SearchIndividual:
        """Run one generation and return the offspring."""
        if not self.population:
            raise ConfigurationError("initialise() must run before step()")
        p = self.params
        pop_size = int(p.population)
        first = int(self.rng.integers(pop_size))
        second = (first + 1 + int(self.rng.integers(int(p.deme)))) % pop_size

        novelty_first = self._novelty(self.population[first].behaviour, first)
        novelty_second = self._novelty(self.population[second].behaviour, second)
        # The first-picked parent wins ties, which keeps replays exact.
        if novelty_first >= novelty_second:
            winner, loser = first, second
        else:
            winner, loser = second, first

        child_genotype = infect(
            self.population[winner].genotype, self.population[loser].genotype, p.recombination_rate, self.rng
        )
        child_genotype = mutate(child_genotype, p.mutation_rate, self.rng)

        self.generation += 1
        child = SearchIndividual(child_genotype, self._safe_evaluate(child_genotype), self.generation, self.run_id)
        self.population[loser] = child
        self._pop_behaviours[loser] = child.behaviour.as_array()
        self._slot_db_index[loser] = len(self.database)
        self.database.append(child)

        child_novelty = self._novelty(child.behaviour, loser)
        admitted = child_novelty > self.rho_min
        if not admitted and p.archive_random_add_prob > 0:
            admitted = bool(self.rng.random() < p.archive_random_add_prob)
        if admitted:
            self._archive_append(
                ArchiveEntry(child.behaviour, self.generation, child_novelty, self.rho_min)
            )
            self.added_since_update += 1

        self.tournament_log.append(
            TournamentRecord(self.generation, first, second, winner, child_novelty, admitted, self.rho_min)
        )

        if self.generation % int(p.rho_min_interval) == 0:
            new_rho = update_rho_min(self.rho_min, self.added_since_update)
            self.rho_history.append((self.generation, self.rho_min, new_rho, self.added_since_update))
            self.rho_min = new_rho
            self.added_since_update = 0
        return child

    def run(self, generations: int | None = None) -> "NoveltySearch":
        if not self.population:
            self.initialise()
        target = int(self.params.generations if generations is None else generations)
        while self.generation < target:
            self.step()
        return self

    # -- persistence hooks ----------------------------------------------

    def state_dict(self) -> dict:
        return {
            "generation": self.generation,
            "rho_min": self.rho_min,
            "added_since_update": self.added_since_update,
            "sparseness_evaluations": self.sparseness_evaluations,
            "archive_start": self._archive_start,
            "population_ids": list(self._slot_db_index),
            "rng_state": self.rng.bit_generator.state,
        }

    @classmethod
    def restore(
        cls,
        substrate: SubstrateBase,
        evaluate,
        params: NsParams,
        database: list[SearchIndividual],
        archive_log: list[ArchiveEntry],
        state: dict,
    ) -> "NoveltySearch":
        search = cls(substrate, evaluate, params, rng=np.random.default_rng(), run_id=database[0].run_id if database else 0)
        search.rng.bit_generator.state = state["rng_state"]
        search.generation = int(state["generation"])
        search.rho_min = float(state["rho_min"])
        search.added_since_update = int(state["added_since_update"])
        search.sparseness_evaluations = int(state["sparseness_evaluations"])
        search.database = list(database)
        search.archive_log = list(archive_log)
        search._archive_points = [e.behaviour.as_array() for e in archive_log]
        search._archive_start = int(state["archive_start"])
        search._slot_db_index = [int(i) for i in state["population_ids"]]
        search.population = [database[i] for i in search._slot_db_index]
        for slot, individual in enumerate(search.population):
            search._pop_behaviours[slot] = individual.behaviour.as_array()
        return search


def random_search(substrate: SubstrateBase, evaluate, evals: int, rng=None, run_id: int = 0) -> list[SearchIndividual]:
    """Baseline: evaluate uniform-random genotypes into a database.

    The i-th record carries generation stamp i so coverage curves over
    evaluations stay comparable with the novelty-search database.
    """
    if int(evals) < 0:
        raise ConfigurationError("evals must be >= 0")
    rng = as_rng(rng)
    database = []
    for i in range(int(evals)):
        genotype = substrate.random_genotype(rng)
        try:
            point = evaluate(genotype)
        except NumericalError:
            point = BehaviourPoint.degenerate_point()
        database.append(SearchIndividual(genotype, point, i, run_id))
    return database
