"""Seed allocations, strategy profiles, and expected-payoff computation.

Payoffs can be computed three ways: Monte Carlo replication (`estimate_payoffs`),
exhaustive enumeration of every stochastic branch (`exact_payoffs`), and — for
layered graphs — the dynamic program in `layered.py`.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .dynamics import (
    AdoptionFunction,
    LayerOrder,
    ParallelRounds,
    RandomSequential,
    SimOutcome,
    SinglePassOrder,
    UpdateSchedule,
    filter_phase_candidates,
    run_contagion,
)
from .errors import StateSpaceCapError, ValidationError
from .graphs import BLUE, RED, UNINFECTED, Graph, neighbor_fractions

EXACT_ENUMERATION = "exact-enumeration"
EXACT_LAYERED_DP = "exact-layered-dp"
MONTE_CARLO = "monte-carlo"

DEFAULT_TRIALS = 20_000
# The enumeration oracle explores at most this many tree nodes before giving up
# (22 binary branchings' worth of outcomes).
DEFAULT_NODE_CAP = 1 << 22


# ---------------------------------------------------------------------------
# Allocations and profiles.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Allocation:
    """Per-vertex nonnegative integer seed counts for one player."""

    counts: tuple[int, ...]

    def __post_init__(self):
        raw = self.counts
        # Vectorized path for very long count vectors (per-element loops below
        # would dominate evaluation time on graphs with millions of vertices).
        if isinstance(raw, (tuple, list)) and len(raw) >= 100_000:
            arr = None
            try:
                arr = np.asarray(raw)
            except (TypeError, ValueError):
                arr = None
            if arr is not None and arr.ndim == 1 and arr.dtype.kind in "iu":
                if arr.size and int(arr.min()) < 0:
                    i = int(np.argmin(arr))
                    raise ValidationError(
                        f"allocation count at vertex {i} must be a nonnegative integer, got {int(arr[i])!r}")
                object.__setattr__(self, "counts", tuple(arr.tolist()))
                return
        try:
            counts = tuple(int(c) if isinstance(c, (int, np.integer)) else c
                           for c in raw)
        except TypeError:
            raise ValidationError(f"allocation counts must be a sequence, got {self.counts!r}") from None
        for i, c in enumerate(counts):
            if not isinstance(c, int) or c < 0:
                raise ValidationError(f"allocation count at vertex {i} must be a nonnegative integer, got {c!r}")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return len(self.counts)

    @property
    def budget(self) -> int:
        return sum(self.counts)

    def seeded_vertices(self) -> tuple[int, ...]:
        cached = getattr(self, "_seeded", None)
        if cached is None:
            cached = tuple(v for v, c in enumerate(self.counts) if c > 0)
            object.__setattr__(self, "_seeded", cached)
        return cached

    @staticmethod
    def empty(n: int) -> "Allocation":
        return Allocation((0,) * n)

    @staticmethod
    def from_seeds(n: int, vertices: Sequence[int]) -> "Allocation":
        counts = [0] * n
        for v in vertices:
            if not (isinstance(v, (int, np.integer)) and 0 <= v < n):
                raise ValidationError(f"seed vertex {v!r} is not a vertex id in 0..{n - 1}")
            counts[int(v)] += 1
        return Allocation(tuple(counts))

    def move_seed(self, src: int, dst: int) -> "Allocation":
        """A copy with one seed relocated from src to dst."""
        if self.counts[src] < 1:
            raise ValidationError(f"no seed at vertex {src} to move")
        counts = list(self.counts)
        counts[src] -= 1
        counts[dst] += 1
        return Allocation(tuple(counts))


@dataclass(frozen=True)
class MixedAllocation:
    """Finite-support distribution over allocations of equal budget."""

    entries: tuple[tuple[float, Allocation], ...]

    def __post_init__(self):
        entries = tuple((float(p), a) for p, a in self.entries)
        if not entries:
            raise ValidationError("a mixed allocation needs at least one entry")
        total = 0.0
        n = entries[0][1].n
        budget = entries[0][1].budget
        for p, a in entries:
            if not (0.0 <= p <= 1.0):
                raise ValidationError(f"mixed-allocation probability {p} outside [0, 1]")
            if a.n != n:
                raise ValidationError("mixed-allocation entries disagree on vertex count")
            if a.budget != budget:
                raise ValidationError("mixed-allocation entries disagree on budget")
            total += p
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"mixed-allocation probabilities sum to {total}, not 1")
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries[0][1].n

    @property
    def budget(self) -> int:
        return self.entries[0][1].budget


PlayerStrategy = Union[Allocation, MixedAllocation]


@dataclass(frozen=True)
class StrategyProfile:
    red: PlayerStrategy
    blue: PlayerStrategy

    def __post_init__(self):
        if self.red.n != self.blue.n:
            raise ValidationError("the two players' strategies disagree on vertex count")

    @property
    def is_pure(self) -> bool:
        return isinstance(self.red, Allocation) and isinstance(self.blue, Allocation)

    def support_pairs(self) -> tuple[tuple[float, Allocation, Allocation], ...]:
        """(probability, red allocation, blue allocation) over the joint support."""
        reds = ((1.0, self.red),) if isinstance(self.red, Allocation) else self.red.entries
        blues = ((1.0, self.blue),) if isinstance(self.blue, Allocation) else self.blue.entries
        return tuple((pr * pb, ar, ab) for pr, ar in reds for pb, ab in blues)

    def to_json_dict(self) -> dict:
        def side(strategy: PlayerStrategy):
            if isinstance(strategy, Allocation):
                return {"counts": list(strategy.counts)}
            return [{"p": p, "counts": list(a.counts)} for p, a in strategy.entries]

        return {"red": side(self.red), "blue": side(self.blue)}


def _parse_strategy(doc, side: str) -> PlayerStrategy:
    if isinstance(doc, dict):
        counts = doc.get("counts")
        if not isinstance(counts, list):
            raise ValidationError(f"profile side '{side}' needs a 'counts' list")
        return Allocation(tuple(counts))
    if isinstance(doc, list):
        entries = []
        for item in doc:
            if not isinstance(item, dict) or "p" not in item or "counts" not in item:
                raise ValidationError(
                    f"profile side '{side}' entries need 'p' and 'counts' fields")
            entries.append((item["p"], Allocation(tuple(item["counts"]))))
        return MixedAllocation(tuple(entries))
    raise ValidationError(
        f"profile side '{side}' must be an object with counts or a list of weighted entries")


def load_profile(document: str | dict) -> StrategyProfile:
    """Parse a profile document: each side is {"counts": [...]} for a pure
    allocation or [{"p": 0.5, "counts": [...]}, ...] for a mixed one."""
    if isinstance(document, str):
        try:
            obj = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"profile document is not valid JSON: {exc}") from None
    else:
        obj = document
    if not isinstance(obj, dict) or "red" not in obj or "blue" not in obj:
        raise ValidationError("profile document needs 'red' and 'blue' sides")
    return StrategyProfile(_parse_strategy(obj["red"], "red"),
                           _parse_strategy(obj["blue"], "blue"))


@dataclass(frozen=True)
class GameSpec:
    graph: Graph
    dynamics: AdoptionFunction
    schedule: UpdateSchedule
    budget_red: int
    budget_blue: int

    def __post_init__(self):
        for name, k in (("budget_red", self.budget_red), ("budget_blue", self.budget_blue)):
            if not (isinstance(k, int) and k >= 1):
                raise ValidationError(f"{name} must be a positive integer, got {k!r}")


@dataclass(frozen=True)
class PayoffEstimate:
    pi_R: float
    pi_B: float
    method: str
    n_trials: int
    stderr_R: float
    stderr_B: float

    CSV_HEADER = ("pi_R", "pi_B", "method", "n_trials", "stderr_R", "stderr_B")

    @property
    def joint(self) -> float:
        return self.pi_R + self.pi_B

    def to_json_dict(self) -> dict:
        return {
            "pi_R": self.pi_R,
            "pi_B": self.pi_B,
            "method": self.method,
            "n_trials": self.n_trials,
            "stderr_R": self.stderr_R,
            "stderr_B": self.stderr_B,
        }

    def to_csv_row(self) -> tuple:
        return (self.pi_R, self.pi_B, self.method, self.n_trials, self.stderr_R, self.stderr_B)


# ---------------------------------------------------------------------------
# Seed resolution and single-run evaluation.
# ---------------------------------------------------------------------------


def resolve_contested_seeds(red: Allocation, blue: Allocation, rng) -> list[int]:
    """Initial state vector: seeded vertices infected, contested ones resolved
    proportionally to seed counts, independently across vertices."""
    if red.n != blue.n:
        raise ValidationError("allocations disagree on vertex count")
    state = [UNINFECTED] * red.n
    for v in range(red.n):
        ar, ab = red.counts[v], blue.counts[v]
        if ar > 0 and ab > 0:
            state[v] = RED if rng.random() < ar / (ar + ab) else BLUE
        elif ar > 0:
            state[v] = RED
        elif ab > 0:
            state[v] = BLUE
    return state


def run_profile_once(game: GameSpec, red: Allocation, blue: Allocation, rng) -> SimOutcome:
    initial = resolve_contested_seeds(red, blue, rng)
    return run_contagion(game.graph, initial, game.dynamics, game.schedule, rng)


def _replication_rng(master_seed: int, index: int):
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=(index,)))


def _sample_support(pairs, rng):
    if len(pairs) == 1:
        return pairs[0][1], pairs[0][2]
    u = rng.random()
    acc = 0.0
    for p, ar, ab in pairs:
        acc += p
        if u < acc:
            return ar, ab
    return pairs[-1][1], pairs[-1][2]


def _mc_chunk(game: GameSpec, pairs, master_seed: int, lo: int, hi: int):
    chi_r = np.empty(hi - lo, dtype=np.float64)
    chi_b = np.empty(hi - lo, dtype=np.float64)
    for i in range(lo, hi):
        rng = _replication_rng(master_seed, i)
        red, blue = _sample_support(pairs, rng)
        out = run_profile_once(game, red, blue, rng)
        chi_r[i - lo] = out.chi_R
        chi_b[i - lo] = out.chi_B
    return chi_r, chi_b


def estimate_payoffs(game: GameSpec, profile: StrategyProfile, n_trials: int = DEFAULT_TRIALS,
                     master_seed: int = 0, threads: Optional[int] = None) -> PayoffEstimate:
    """Monte Carlo payoff estimate over independent replications.

    Replication i derives its generator from (master_seed, i), so results are
    bit-identical for a given master seed regardless of `threads`.
    """
    if not (isinstance(n_trials, int) and n_trials >= 1):
        raise ValidationError(f"n_trials must be a positive integer, got {n_trials!r}")
    pairs = profile.support_pairs()
    if threads is not None and threads > 1 and n_trials >= 64:
        bounds = np.linspace(0, n_trials, threads + 1).astype(int)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_mc_chunk, *zip(*[(game, pairs, master_seed, int(lo), int(hi))
                                                    for lo, hi in zip(bounds, bounds[1:]) if hi > lo])))
        chi_r = np.concatenate([p[0] for p in parts])
        chi_b = np.concatenate([p[1] for p in parts])
    else:
        chi_r, chi_b = _mc_chunk(game, pairs, master_seed, 0, n_trials)

    def stderr(samples) -> float:
        if len(samples) < 2:
            return 0.0
        return float(np.std(samples, ddof=1) / math.sqrt(len(samples)))

    return PayoffEstimate(
        pi_R=float(np.mean(chi_r)), pi_B=float(np.mean(chi_b)),
        method=MONTE_CARLO, n_trials=n_trials,
        stderr_R=stderr(chi_r), stderr_B=stderr(chi_b),
    )


# ---------------------------------------------------------------------------
# Exact enumeration oracle.
# ---------------------------------------------------------------------------


class _NodeBudget:
    __slots__ = ("remaining",)

    def __init__(self, cap: int):
        self.remaining = cap

    def spend(self, k: int = 1):
        self.remaining -= k
        if self.remaining < 0:
            raise StateSpaceCapError(
                "exact enumeration exceeded the configured state-space cap; "
                "fall back to Monte Carlo (estimate_payoffs)")


def _last_appearance(schedule: UpdateSchedule, n: int) -> Optional[list[int]]:
    """For one-shot schedules: the phase index at which each vertex is updated
    (-1 if never).  None for schedules that may revisit vertices."""
    last = [-1] * n
    if isinstance(schedule, SinglePassOrder):
        for i, v in enumerate(schedule.order):
            last[v] = i
        return last
    if isinstance(schedule, LayerOrder):
        for i, layer in enumerate(schedule.layers):
            for v in layer:
                last[v] = i
        return last
    return None


def exact_payoffs(game: GameSpec, profile: StrategyProfile,
                  node_cap: int = DEFAULT_NODE_CAP) -> PayoffEstimate:
    """Exact expected payoffs by exhaustive enumeration of every contested-seed
    resolution and every stochastic update outcome under the schedule.

    Raises StateSpaceCapError when the outcome tree exceeds `node_cap` nodes.
    Wherever a vertex's outcome cannot influence anything downstream (for
    example, a vertex with no out-neighbors in a one-shot schedule, or any
    candidate in the final round), its expectation is accumulated marginally
    instead of branching, which keeps the common fixtures branch-free.
    """
    budget = _NodeBudget(node_cap)
    er = eb = 0.0
    for p, red, blue in profile.support_pairs():
        if p == 0.0:
            continue
        r, b = _exact_profile_expectation(game, red, blue, budget)
        er += p * r
        eb += p * b
    return PayoffEstimate(pi_R=er, pi_B=eb, method=EXACT_ENUMERATION,
                          n_trials=0, stderr_R=0.0, stderr_B=0.0)


def _exact_profile_expectation(game: GameSpec, red: Allocation, blue: Allocation,
                               budget: _NodeBudget) -> tuple[float, float]:
    graph, dyn, schedule = game.graph, game.dynamics, game.schedule
    schedule.validate_for_graph(graph)
    n = graph.n
    if red.n != n or blue.n != n:
        raise ValidationError("allocation length does not match the graph")

    base = [UNINFECTED] * n
    contested: list[tuple[int, float]] = []
    cr0 = cb0 = 0
    mr0 = mb0 = 0.0
    for v in range(n):
        ar, ab = red.counts[v], blue.counts[v]
        if ar > 0 and ab > 0:
            p_red = ar / (ar + ab)
            if not graph.out_neighbors[v]:
                # The color of a sink seed affects only the final tally.
                base[v] = RED
                mr0 += p_red
                mb0 += 1.0 - p_red
            else:
                contested.append((v, p_red))
        elif ar > 0:
            base[v] = RED
            cr0 += 1
        elif ab > 0:
            base[v] = BLUE
            cb0 += 1

    last_app = _last_appearance(schedule, n)
    is_parallel = isinstance(schedule, ParallelRounds)
    no_immune = (False,) * n
    total_r = total_b = 0.0

    # Entries: ("seed", w, idx, state, cr, cb, mr, mb)
    #          ("phase", w, state, immune, cursor, cr, cb, mr, mb)
    #          ("micro", w, state, immune, next_cursor, cands, i, pending, failed,
    #           cr, cb, mr, mb)
    stack: list[tuple] = [("seed", 1.0, 0, base, cr0, cb0, mr0, mb0)]
    while stack:
        entry = stack.pop()
        kind = entry[0]

        if kind == "seed":
            _, w, idx, state, cr, cb, mr, mb = entry
            if idx == len(contested):
                stack.append(("phase", w, state, no_immune,
                              schedule.initial_cursor(), cr, cb, mr, mb))
                budget.spend()
                continue
            v, p_red = contested[idx]
            for prob, color in ((p_red, RED), (1.0 - p_red, BLUE)):
                if prob <= 0.0:
                    continue
                child = list(state)
                child[v] = color
                stack.append(("seed", w * prob, idx + 1, child,
                              cr + (color == RED), cb + (color == BLUE), mr, mb))
                budget.spend()
            continue

        if kind == "phase":
            _, w, state, immune, cursor, cr, cb, mr, mb = entry
            options = schedule.phase_options(graph, state, immune, cursor)
            if options is None:
                total_r += w * (cr + mr)
                total_b += w * (cb + mb)
                continue
            for opt_prob, phase, nxt in options:
                cands = filter_phase_candidates(graph, state, immune, phase)
                final_round = is_parallel and nxt >= schedule.max_rounds
                mr2, mb2 = mr, mb
                branching: list[tuple[int, float, float, float]] = []
                sure_failures: list[int] = []
                for v in cands:
                    a, b = neighbor_fractions(graph, state, v)
                    pr, pb, pu = dyn.update_probs(a, b)
                    if pr == 0.0 and pb == 0.0:
                        sure_failures.append(v)
                        continue
                    marginal = final_round or (
                        last_app is not None
                        and all(state[w_out] != UNINFECTED or last_app[w_out] <= cursor
                                for w_out in graph.out_neighbors[v]))
                    if marginal:
                        mr2 += pr
                        mb2 += pb
                    else:
                        branching.append((v, pr, pb, pu))
                stack.append(("micro", w * opt_prob, state, immune, nxt,
                              branching, 0, (), tuple(sure_failures), cr, cb, mr2, mb2))
                budget.spend()
            continue

        # kind == "micro"
        _, w, state, immune, nxt, cands, i, pending, failed, cr, cb, mr, mb = entry
        if i == len(cands):
            if pending:
                new_state = list(state)
                for v, color in pending:
                    new_state[v] = color
                    if color == RED:
                        cr += 1
                    else:
                        cb += 1
            else:
                new_state = state
            if schedule.immunity and failed:
                new_immune = list(immune)
                for v in failed:
                    new_immune[v] = True
                new_immune = tuple(new_immune)
            else:
                new_immune = immune
            if schedule.stop_on_no_change and not pending and (cands or failed):
                total_r += w * (cr + mr)
                total_b += w * (cb + mb)
                continue
            stack.append(("phase", w, new_state, new_immune, nxt, cr, cb, mr, mb))
            budget.spend()
            continue
        v, pr, pb, pu = cands[i]
        for prob, color in ((pr, RED), (pb, BLUE), (pu, None)):
            if prob <= 0.0:
                continue
            if color is None:
                stack.append(("micro", w * prob, state, immune, nxt, cands, i + 1,
                              pending, failed + (v,) if schedule.immunity else failed,
                              cr, cb, mr, mb))
            else:
                stack.append(("micro", w * prob, state, immune, nxt, cands, i + 1,
                              pending + ((v, color),), failed, cr, cb, mr, mb))
            budget.spend()

    return total_r, total_b
