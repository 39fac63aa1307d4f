"""Learning algorithms that recover a hidden coalition structure by querying
the observation oracle with designed games.

Each learner owns its oracle for the duration of a run (queries are adaptive),
returns the recovered partition with the transcript as evidence, and is
accountable to the exact round budget of its family.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

from .core import CoalitionStructure, upper_bound
from .games import (
    AuctionGame,
    BraessFactor,
    CongestionGame,
    FactoredNormalFormGame,
    PrisonerDilemmaFactor,
    all_pairs_braess,
    all_pairs_game,
    auction_gadget,
    braess_product,
    classify_auction,
    first_move_game,
    graphical_view,
)
from .oracle import HiddenOracle, Transcript

StateHook = Callable[[str, dict], None]


@dataclass
class LearnerReport:
    """Outcome of one run: the recovered partition, rounds spent, the budget
    the learner is accountable to, and the per-round evidence."""

    recovered: CoalitionStructure
    rounds: int
    budget: int
    transcript: Transcript


def _finish(oracle: HiddenOracle, start: int, recovered: CoalitionStructure, budget: int) -> LearnerReport:
    records = oracle.transcript.records[start:]
    return LearnerReport(recovered, len(records), budget, Transcript(list(records)))


def _merge_singletons(n: int, targets: dict[int, list[int]]) -> CoalitionStructure:
    s = CoalitionStructure.singletons(n)
    for j, t in targets.items():
        if t:
            s = s.merge(t[0], j)
    return s


def _pd_query(n: int, pairs: Iterable[tuple[int, int]]) -> FactoredNormalFormGame:
    return FactoredNormalFormGame(n, tuple(PrisonerDilemmaFactor(i, j) for i, j in pairs))


def _braess_query(n: int, pairs: Iterable[tuple[int, int]]) -> CongestionGame:
    return braess_product(n, (BraessFactor(i, j) for i, j in pairs))


def _simultaneous_binary_search(
    oracle: HiddenOracle,
    family: str,
    first_game,
    build_query,
    state_hook: StateHook | None,
) -> LearnerReport:
    """Shared engine of the normal-form and congestion learners.

    Opening all-pairs query marks every agent that has a lower-indexed
    teammate; then one joint query per halving step binary-searches, for all
    marked agents at once, the smallest index in their coalition.
    """
    n = oracle.n
    budget = upper_bound(family, n)
    start = oracle.rounds_used
    if n == 1:
        return _finish(oracle, start, CoalitionStructure.singletons(1), budget)
    obs = oracle.observe(first_game)
    targets = {j: list(range(1, j)) if obs.bit(j) else [] for j in range(1, n + 1)}
    if state_hook:
        state_hook("search", {j: tuple(t) for j, t in targets.items()})
    while any(len(t) >= 2 for t in targets.values()):
        lows: dict[int, list[int]] = {}
        pairs: list[tuple[int, int]] = []
        for j in range(1, n + 1):
            t = targets[j]
            lows[j] = t[: len(t) // 2]
            pairs.extend((i, j) for i in lows[j])
        obs = oracle.observe(build_query(n, pairs))
        for j in range(1, n + 1):
            t = targets[j]
            targets[j] = lows[j] if obs.bit(j) else t[len(t) // 2 :]
        if state_hook:
            state_hook("search", {j: tuple(t) for j, t in targets.items()})
    return _finish(oracle, start, _merge_singletons(n, targets), budget)


def learn_normal_form(oracle: HiddenOracle, state_hook: StateHook | None = None) -> LearnerReport:
    """Simultaneous binary search with prisoner-dilemma products."""
    return _simultaneous_binary_search(
        oracle, "normal-form", all_pairs_game(oracle.n), _pd_query, state_hook
    )


def learn_congestion(oracle: HiddenOracle, state_hook: StateHook | None = None) -> LearnerReport:
    """Simultaneous binary search with Braess-gadget congestion games."""
    return _simultaneous_binary_search(
        oracle, "congestion", all_pairs_braess(oracle.n), _braess_query, state_hook
    )


@lru_cache(maxsize=None)
def _graphical_sweep_games(n: int, d: int) -> tuple[FactoredNormalFormGame, ...]:
    """One query per block-index gap: the gap-delta query pairs each agent with
    the whole block exactly delta blocks below, keeping every agent inside the
    degree limit (at most two blocks' worth of factors)."""
    size = d // 2
    cnt = -(-n // size)
    games = []
    for delta in range(cnt):
        pairs = [
            (i, j)
            for j in range(1, n + 1)
            for i in range(1, j)
            if (j - 1) // size - (i - 1) // size == delta
        ]
        games.append(_pd_query(n, pairs))
    return tuple(games)


def learn_graphical(
    oracle: HiddenOracle, d: int, state_hook: StateHook | None = None
) -> LearnerReport:
    """Block decomposition plus simultaneous binary search under a degree cap.

    Finds each agent's predecessor (largest smaller-indexed teammate): a sweep
    over block gaps locates the predecessor's block, then two rounds of
    simultaneous binary search pin it down, querying the upper half and
    keeping it on True since the target is the largest qualifying index.
    """
    n = oracle.n
    budget = upper_bound("graphical", n, d=d)
    start = oracle.rounds_used
    size = d // 2
    belong = lambda a: (a - 1) // size

    hit_gaps: dict[int, list[int]] = {j: [] for j in range(1, n + 1)}
    for delta, game in enumerate(_graphical_sweep_games(n, d)):
        obs = oracle.observe(game)
        for j in range(1, n + 1):
            if obs.bit(j):
                hit_gaps[j].append(delta)
    gap = {j: (hits[0] if hits else -1) for j, hits in hit_gaps.items()}
    targets = {
        j: (
            [i for i in range(1, j) if belong(j) - belong(i) == gap[j]]
            if gap[j] != -1
            else []
        )
        for j in range(1, n + 1)
    }
    if state_hook:
        state_hook("search", {j: tuple(t) for j, t in targets.items()})

    for selector in (lambda j: gap[j] == 0, lambda j: gap[j] >= 1):
        group = [j for j in range(1, n + 1) if selector(j)]
        while any(len(targets[j]) >= 2 for j in group):
            highs: dict[int, list[int]] = {}
            pairs: list[tuple[int, int]] = []
            for j in group:
                t = targets[j]
                highs[j] = t[len(t) // 2 :]
                pairs.extend((i, j) for i in highs[j])
            obs = oracle.observe(_pd_query(n, pairs))
            for j in group:
                t = targets[j]
                targets[j] = highs[j] if obs.bit(j) else t[: len(t) // 2]
            if state_hook:
                state_hook("search", {j: tuple(t) for j, t in targets.items()})

    return _finish(oracle, start, _merge_singletons(n, targets), budget)


def learn_auction_iterative(oracle: HiddenOracle) -> LearnerReport:
    """Scan-and-peel with auction gadgets: test the head agent against the
    rest of the pool; every query retires exactly one agent, so n-1 rounds."""
    n = oracle.n
    budget = upper_bound("auction-iterative", n)
    start = oracle.rounds_used
    everyone = frozenset(range(1, n + 1))
    recovered = CoalitionStructure.singletons(n)
    pool = list(range(1, n + 1))
    while len(pool) >= 2:
        head = pool[0]
        while len(pool) >= 2 and head in pool:
            y = frozenset(pool) - {head}
            z = everyone - frozenset(pool)
            obs = oracle.observe(auction_gadget(n, {head}, y, z))
            trues = obs.true_agents()
            if trues:
                partner = trues[0]
                recovered = recovered.merge(head, partner)
                pool.remove(partner)
            else:
                pool.remove(head)
    return _finish(oracle, start, recovered, budget)


def learn_auction_bitwise(
    oracle: HiddenOracle, state_hook: StateHook | None = None
) -> LearnerReport:
    """Bitwise search with auction gadgets.

    The opening query elects one representative per coalition; everyone else
    reconstructs their representative's index one binary bit at a time, by
    peeling deviators out of repeated membership-test gadgets.
    """
    n = oracle.n
    start = oracle.rounds_used
    everyone = frozenset(range(1, n + 1))
    obs = oracle.observe(first_move_game(n))
    reps = frozenset(obs.true_agents())
    followers = [i for i in range(1, n + 1) if i not in reps]
    alpha = {i: 0 for i in followers}
    for b in range(n.bit_length()):  # b = 0 .. floor(log2 n)
        x = frozenset(i for i in reps if (i >> b) & 1)
        undecided = set(followers)
        while True:
            y = frozenset(undecided)
            z = everyone - x - y
            obs = oracle.observe(auction_gadget(n, x, y, z))
            deviators = {i for i in undecided if obs.bit(i)}
            undecided -= deviators
            if not deviators:
                break
        for i in followers:
            if i not in undecided:
                alpha[i] += 1 << b
        if state_hook:
            state_hook("bit", {"b": b, "x": x, "stayed": frozenset(undecided)})
    if state_hook:
        state_hook("alpha", dict(alpha))
    recovered = CoalitionStructure.singletons(n)
    for i, rep in alpha.items():
        if not 1 <= rep <= n:
            raise RuntimeError(f"reconstructed representative {rep} of agent {i} out of range")
        recovered = recovered.merge(i, rep)
    budget = upper_bound("auction-bitwise", n, c=recovered.max_block_size())
    return _finish(oracle, start, recovered, budget)


def run_learner(family: str, oracle: HiddenOracle, d: int | None = None) -> LearnerReport:
    if family == "normal-form":
        return learn_normal_form(oracle)
    if family == "congestion":
        return learn_congestion(oracle)
    if family == "graphical":
        if d is None:
            raise ValueError("graphical learner needs the degree limit d")
        return learn_graphical(oracle, d)
    if family == "auction-iterative":
        return learn_auction_iterative(oracle)
    if family == "auction-bitwise":
        return learn_auction_bitwise(oracle)
    raise ValueError(f"unknown family {family!r}")


@dataclass
class VerificationResult:
    ok: bool
    failures: list[str]


def _query_violation(family: str, game, d: int | None) -> str | None:
    if family in ("normal-form",):
        if not isinstance(game, FactoredNormalFormGame):
            return f"query is a {type(game).__name__}, not a factored normal-form game"
    elif family == "congestion":
        if not isinstance(game, CongestionGame):
            return f"query is a {type(game).__name__}, not a congestion game"
        try:
            game.validate()
        except ValueError as exc:
            return f"congestion game invariant violated: {exc}"
    elif family == "graphical":
        if not isinstance(game, FactoredNormalFormGame):
            return f"query is a {type(game).__name__}, not a factored normal-form game"
        degree = graphical_view(game).max_degree
        if degree > d:
            return f"query degree {degree} exceeds limit {d}"
    else:
        if not isinstance(game, AuctionGame):
            return f"query is a {type(game).__name__}, not an auction"
        if classify_auction(game)[0] == "general":
            return "auction query is outside the gadget and first-move shapes"
    return None


def verify_report(
    report: LearnerReport,
    truth: CoalitionStructure,
    family: str,
    d: int | None = None,
) -> VerificationResult:
    """Audit one run: exact recovery, budget compliance (recomputed from the
    truth, not the learner's claim), and family constraints on every query."""
    failures: list[str] = []
    if report.recovered != truth:
        failures.append(
            f"recovered {report.recovered.to_json()} differs from truth {truth.to_json()}"
        )
    c = truth.max_block_size() if family == "auction-bitwise" else None
    dd = d if family == "graphical" else None
    budget = upper_bound(family, truth.n, d=dd, c=c)
    if report.rounds > budget:
        failures.append(f"rounds {report.rounds} exceed budget {budget}")
    if report.rounds != len(report.transcript):
        failures.append(
            f"rounds counter {report.rounds} disagrees with transcript length {len(report.transcript)}"
        )
    for rec in report.transcript.records:
        problem = _query_violation(family, rec.game, d)
        if problem:
            failures.append(f"round {rec.round}: {problem}")
    return VerificationResult(not failures, failures)
