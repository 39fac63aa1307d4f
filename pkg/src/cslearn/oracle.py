"""The deviation-observation oracle.

Given a hidden coalition structure and a game-strategy pair, each coalition
jointly best-responds to everyone else's specified strategies; the observation
reports, per agent, whether that response changes the agent's own strategy.
Fast closed-form rules cover the gadget constructions; an exhaustive reference
oracle covers everything small enough to enumerate. When several joint best
responses exist, a deterministic adversary policy picks one, which
operationalizes worst-case analysis as a reproducible sweep over policies.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, TypeVar

from .core import CoalitionStructure
from .games import (
    AuctionGame,
    CongestionGame,
    FactoredNormalFormGame,
    Game,
    classify_auction,
    game_key,
    game_to_json,
)

T = TypeVar("T")

DEFAULT_STRATEGY_CAP = 10**6


def stable_hash(key: str) -> int:
    """64-bit integer digest that is stable across runs and platforms."""
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


@dataclass(frozen=True)
class AdversaryPolicy:
    """Deterministic rule selecting among admissible joint best responses.

    kind "first" and "last" pick the extremes of the canonically ordered
    choice list; "seeded" picks by a stable digest of (seed, choice key), so
    identical inputs always yield identical selections.
    """

    kind: str
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("first", "last", "seeded"):
            raise ValueError(f"unknown adversary policy kind {self.kind!r}")

    @staticmethod
    def first() -> "AdversaryPolicy":
        return AdversaryPolicy("first")

    @staticmethod
    def last() -> "AdversaryPolicy":
        return AdversaryPolicy("last")

    @staticmethod
    def seeded(seed: int) -> "AdversaryPolicy":
        return AdversaryPolicy("seeded", seed)

    def choose(self, options: Sequence[T], key: str) -> T:
        if not options:
            raise ValueError("no options to choose from")
        if self.kind == "first":
            return options[0]
        if self.kind == "last":
            return options[-1]
        return options[stable_hash(f"{self.seed}|{key}") % len(options)]

    def label(self) -> str:
        return f"seeded:{self.seed}" if self.kind == "seeded" else self.kind

    @staticmethod
    def parse(label: str) -> "AdversaryPolicy":
        if label in ("first", "last"):
            return AdversaryPolicy(label)
        if label.startswith("seeded:"):
            return AdversaryPolicy.seeded(int(label.split(":", 1)[1]))
        raise ValueError(f"cannot parse adversary policy {label!r}")


@dataclass(frozen=True)
class Observation:
    """Per-agent deviation decisions; bit i is True when agent i would move."""

    bits: tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.bits)

    def bit(self, agent: int) -> bool:
        return self.bits[agent - 1]

    def true_agents(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits, start=1) if b)

    def as_bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)


def observe_factored(
    truth: CoalitionStructure,
    game: FactoredNormalFormGame,
    policy: AdversaryPolicy | None = None,
) -> Observation:
    """Closed-form observation for prisoner-dilemma products.

    The decider of a factor deviates exactly when the factor's beneficiary is
    a teammate; the bit is the OR over the agent's decider factors. Cooperate
    is strictly better or strictly worse in each factor, so best responses are
    unique and the policy never matters.
    """
    _check_sizes(truth, game)
    labels = truth.labels()
    bits = [False] * game.n
    for i, j in game.factors:
        if labels[i] == labels[j]:
            bits[j - 1] = True
    return Observation(tuple(bits))


def observe_braess(
    truth: CoalitionStructure,
    game: CongestionGame,
    policy: AdversaryPolicy | None = None,
) -> Observation:
    """Closed-form observation for Braess-gadget products; same deviation rule
    as the prisoner-dilemma product (teammates make the bypass worth taking)."""
    _check_sizes(truth, game)
    if game.braess_factors is None:
        raise ValueError("not gadget-built; use brute_force_observe for general congestion games")
    labels = truth.labels()
    bits = [False] * game.n
    for i, j in game.braess_factors:
        if labels[i] == labels[j]:
            bits[j - 1] = True
    return Observation(tuple(bits))


def observe_auction(
    truth: CoalitionStructure, game: AuctionGame, policy: AdversaryPolicy
) -> Observation:
    """Closed-form observation for constructor-shaped auctions.

    Gadget: a block straddling X and Y sends exactly one of its Y members
    forward. First-move: every block sends exactly one member forward. The
    policy picks which member.
    """
    _check_sizes(truth, game)
    shape = classify_auction(game)
    if shape[0] == "general":
        raise ValueError("auction outside constructor shapes; use brute_force_observe")
    bits = [False] * game.n
    if shape[0] == "first-move":
        base = f"fm:{game.n}"
        for block in truth.blocks:
            chosen = policy.choose(block, f"{base}|S={block}")
            bits[chosen - 1] = True
    else:
        _, x, y, _ = shape
        base = f"g:{game.n}|X={sorted(x)}|Y={sorted(y)}"
        for block in truth.blocks:
            if any(m in x for m in block):
                in_y = tuple(m for m in block if m in y)
                if in_y:
                    chosen = policy.choose(in_y, f"{base}|S={block}")
                    bits[chosen - 1] = True
    return Observation(tuple(bits))


def admissible_observations(truth: CoalitionStructure, game: Game) -> frozenset[tuple[bool, ...]]:
    """Every observation some admissible best-response selection can produce
    via the closed-form rules. Exponential in the number of deviating blocks;
    meant for small cross-check instances."""
    if isinstance(game, FactoredNormalFormGame):
        return frozenset({observe_factored(truth, game).bits})
    if isinstance(game, CongestionGame):
        return frozenset({observe_braess(truth, game).bits})
    shape = classify_auction(game)
    if shape[0] == "general":
        raise ValueError("auction outside constructor shapes; use brute-force admissible set")
    per_block: list[list[int | None]] = []
    for block in truth.blocks:
        if shape[0] == "first-move":
            per_block.append(list(block))
        else:
            _, x, y, _ = shape
            if any(m in x for m in block) and any(m in y for m in block):
                per_block.append([m for m in block if m in y])
            else:
                per_block.append([None])
    out = set()
    for picks in itertools.product(*per_block):
        bits = [False] * game.n
        for chosen in picks:
            if chosen is not None:
                bits[chosen - 1] = True
        out.add(tuple(bits))
    return frozenset(out)


def _check_sizes(truth: CoalitionStructure, game: Game) -> None:
    if truth.n != game.n:
        raise ValueError(f"population mismatch: truth has {truth.n} agents, game has {game.n}")


# ---------------------------------------------------------------------------
# Brute-force reference oracle
# ---------------------------------------------------------------------------

_BID_GRID = (Fraction(0), Fraction(1, 2), Fraction(1))


def _member_options(game: Game, agent: int) -> list:
    """Canonically ordered strategy list of one agent; specified comes first
    for factored games by construction of the ordering."""
    if isinstance(game, FactoredNormalFormGame):
        k = len(game.decider_factors(agent))
        return list(itertools.product((False, True), repeat=k))
    if isinstance(game, CongestionGame):
        return list(game.strategy_spaces[agent - 1])
    grid = set(_BID_GRID)
    grid.add(Fraction(game.specified_bids[agent - 1]))
    return sorted(grid)


def _specified_strategy(game: Game, agent: int):
    if isinstance(game, FactoredNormalFormGame):
        return (False,) * len(game.decider_factors(agent))
    if isinstance(game, CongestionGame):
        return game.specified_profile[agent - 1]
    return Fraction(game.specified_bids[agent - 1])


def _factored_block_utility(game, members, block_set, decider_factors, assignment):
    util = 0
    for m, choice in zip(members, assignment):
        for pos, x in enumerate(decider_factors[m]):
            if choice[pos]:
                util -= 1
                if game.factors[x].beneficiary in block_set:
                    util += 2
    return util


def _congestion_block_utility(game, members, assignment):
    loads: dict[str, int] = {}
    for agent in range(1, game.n + 1):
        for r in game.specified_profile[agent - 1]:
            loads[r] = loads.get(r, 0) + 1
    for m, chosen in zip(members, assignment):
        for r in game.specified_profile[m - 1]:
            loads[r] -= 1
        for r in chosen:
            loads[r] = loads.get(r, 0) + 1
    total = Fraction(0)
    for chosen in assignment:
        for r in chosen:
            total -= Fraction(game.cost_tables[r][loads[r]])
    return total


def _auction_block_utility(game, members, block_set, assignment):
    """Expected joint utility under uniform tie-breaking: the winner pays
    max(second-highest bid, own reserve) only when bidding strictly above the
    reserve, and the item lands with the block's highest-value member."""
    bids = [Fraction(b) for b in game.specified_bids]
    for m, bid in zip(members, assignment):
        bids[m - 1] = bid
    top = max(bids)
    winners = [i for i, b in enumerate(bids, start=1) if b == top]
    block_value = max(Fraction(game.valuations[m - 1]) for m in block_set)
    total = Fraction(0)
    for w in winners:
        reserve = Fraction(game.reserves[w - 1])
        if w in block_set and bids[w - 1] > reserve:
            rest = list(bids)
            rest.pop(w - 1)
            price = max(max(rest, default=Fraction(0)), reserve)
            total += block_value - price
    return total / len(winners)


def _block_argmax(game: Game, block: tuple[int, ...], cap: int):
    """All utility-maximizing joint strategies of one block, in canonical
    enumeration order, with the block's specified sub-profile alongside."""
    members = block
    options = [_member_options(game, m) for m in members]
    space = 1
    for opts in options:
        space *= len(opts)
        if space > cap:
            raise ValueError(
                f"joint strategy space of block {block} exceeds cap {cap}"
            )
    block_set = frozenset(block)
    if isinstance(game, FactoredNormalFormGame):
        decider_factors = {m: game.decider_factors(m) for m in members}
        utility = lambda a: _factored_block_utility(game, members, block_set, decider_factors, a)
    elif isinstance(game, CongestionGame):
        utility = lambda a: _congestion_block_utility(game, members, a)
    else:
        utility = lambda a: _auction_block_utility(game, members, block_set, a)
    best = None
    argmax: list[tuple] = []
    for assignment in itertools.product(*options):
        u = utility(assignment)
        if best is None or u > best:
            best, argmax = u, [assignment]
        elif u == best:
            argmax.append(assignment)
    specified = tuple(_specified_strategy(game, m) for m in members)
    return argmax, specified


def brute_force_observe(
    truth: CoalitionStructure,
    game: Game,
    policy: AdversaryPolicy,
    cap: int = DEFAULT_STRATEGY_CAP,
) -> Observation:
    """Reference oracle: enumerate each block's joint strategies against the
    outsiders' specified profile, take the argmax set, prefer the specified
    sub-profile when it ties for the maximum, otherwise let the policy pick."""
    _check_sizes(truth, game)
    key_base = game_key(game)
    bits = [False] * game.n
    for block in truth.blocks:
        argmax, specified = _block_argmax(game, block, cap)
        if specified in argmax:
            continue
        chosen = policy.choose(argmax, f"{key_base}|S={block}")
        for m, strategy, sigma in zip(block, chosen, specified):
            if strategy != sigma:
                bits[m - 1] = True
    return Observation(tuple(bits))


def brute_force_admissible_observations(
    truth: CoalitionStructure, game: Game, cap: int = DEFAULT_STRATEGY_CAP
) -> frozenset[tuple[bool, ...]]:
    """Every observation any admissible selection can produce, by exhaustive
    enumeration. The spread across blocks multiplies; small instances only."""
    _check_sizes(truth, game)
    per_block: list[set[tuple[bool, ...]]] = []
    for block in truth.blocks:
        argmax, specified = _block_argmax(game, block, cap)
        if specified in argmax:
            per_block.append({(False,) * len(block)})
        else:
            per_block.append(
                {
                    tuple(s != sig for s, sig in zip(choice, specified))
                    for choice in argmax
                }
            )
    out = set()
    for picks in itertools.product(*per_block):
        bits = [False] * game.n
        for block, pattern in zip(truth.blocks, picks):
            for m, b in zip(block, pattern):
                if b:
                    bits[m - 1] = True
        out.add(tuple(bits))
    return frozenset(out)


# ---------------------------------------------------------------------------
# Stateful oracle with transcript
# ---------------------------------------------------------------------------


@dataclass
class TranscriptRecord:
    round: int
    game: Game
    observation: Observation


@dataclass
class Transcript:
    """Ordered evidence of an interaction: one record per query."""

    records: list[TranscriptRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: TranscriptRecord) -> None:
        self.records.append(record)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {
                    "round": rec.round,
                    "game": game_to_json(rec.game),
                    "observation": rec.observation.as_bitstring(),
                },
                sort_keys=True,
                separators=(",", ":"),
            )
            for rec in self.records
        ]
        return "\n".join(lines)


class HiddenOracle:
    """Holds the hidden coalition structure and answers queries.

    Learners see only `n` and `observe`; the truth stays private to the
    oracle. Each query is appended to the transcript, so rounds_used always
    equals the transcript length. One oracle serves one line of interaction
    at a time; run independent experiments on independent instances.
    """

    def __init__(
        self,
        truth: CoalitionStructure,
        policy: AdversaryPolicy | None = None,
        cap: int = DEFAULT_STRATEGY_CAP,
    ):
        if truth.n < 1:
            raise ValueError("oracle needs at least one agent")
        self.truth = truth
        self.policy = policy if policy is not None else AdversaryPolicy.first()
        self.cap = cap
        self.transcript = Transcript()

    @property
    def n(self) -> int:
        return self.truth.n

    @property
    def rounds_used(self) -> int:
        return len(self.transcript)

    def observe(self, game: Game) -> Observation:
        _check_sizes(self.truth, game)
        if isinstance(game, FactoredNormalFormGame):
            obs = observe_factored(self.truth, game, self.policy)
        elif isinstance(game, CongestionGame):
            if game.braess_factors is not None:
                obs = observe_braess(self.truth, game, self.policy)
            else:
                obs = brute_force_observe(self.truth, game, self.policy, self.cap)
        elif isinstance(game, AuctionGame):
            if classify_auction(game)[0] == "general":
                obs = brute_force_observe(self.truth, game, self.policy, self.cap)
            else:
                obs = observe_auction(self.truth, game, self.policy)
        else:
            raise TypeError(f"cannot observe a {type(game).__name__}")
        self.transcript.append(TranscriptRecord(self.rounds_used + 1, game, obs))
        return obs
