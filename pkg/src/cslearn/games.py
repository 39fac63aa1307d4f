"""Gadget constructors for the four game families and the product composition
used to batch many pairwise membership tests into one query.

All games here are paired with their specified strategy profile. Product games
stay in factored form; the full payoff tensor is never expanded.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple, Sequence


class PrisonerDilemmaFactor(NamedTuple):
    """One pairwise test: the decider may pay 1 to hand the beneficiary 2."""

    beneficiary: int
    decider: int


class BraessFactor(NamedTuple):
    """Congestion-game counterpart of a prisoner-dilemma factor."""

    beneficiary: int
    decider: int


# Fixed payoffs of a prisoner-dilemma factor when the decider cooperates.
PD_BENEFIT = 2
PD_COST = -1


def _check_pairs(n: int, pairs: Sequence[tuple[int, int]]) -> None:
    seen: set[tuple[int, int]] = set()
    for i, j in pairs:
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"factor ({i},{j}) references agents outside 1..{n}")
        if i == j:
            raise ValueError(f"factor ({i},{j}) pairs an agent with itself")
        if (i, j) in seen:
            raise ValueError(f"duplicate factor ({i},{j})")
        seen.add((i, j))


@dataclass(frozen=True)
class FactoredNormalFormGame:
    """Product of prisoner-dilemma factors over a population of n agents.

    Agents absent from every factor have the single action D and are kept
    implicit; an agent's action space is one C/D choice per factor it decides.
    """

    n: int
    factors: tuple[PrisonerDilemmaFactor, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"population size must be >= 1, got {self.n}")
        _check_pairs(self.n, self.factors)

    def decider_factors(self, agent: int) -> tuple[int, ...]:
        """Indices of the factors in which `agent` is the decider."""
        return tuple(x for x, f in enumerate(self.factors) if f.decider == agent)


def prisoner_dilemma(n: int, beneficiary: int, decider: int) -> FactoredNormalFormGame:
    return FactoredNormalFormGame(n, (PrisonerDilemmaFactor(beneficiary, decider),))


def product(games: Iterable[FactoredNormalFormGame]) -> FactoredNormalFormGame:
    """Compose factored games by concatenating factor lists.

    Utilities add and action spaces multiply, so playing the product is the
    same as playing every factor side by side.
    """
    games = list(games)
    if not games:
        raise ValueError("product of zero games is ambiguous: population size unknown")
    n = games[0].n
    for g in games:
        if g.n != n:
            raise ValueError(f"population size mismatch in product: {g.n} != {n}")
    factors = tuple(itertools.chain.from_iterable(g.factors for g in games))
    return FactoredNormalFormGame(n, factors)


@lru_cache(maxsize=None)
def all_pairs_game(n: int) -> FactoredNormalFormGame:
    """One factor per pair (i, j) with i < j: the opening query that tells each
    agent whether any lower-indexed teammate exists."""
    factors = tuple(
        PrisonerDilemmaFactor(i, j) for j in range(1, n + 1) for i in range(1, j)
    )
    return FactoredNormalFormGame(n, factors)


@dataclass(frozen=True)
class GraphicalGameView:
    """Interaction structure of a factored game: which pairs touch, and the
    highest number of factor occurrences of any single agent."""

    underlying: FactoredNormalFormGame
    edge_set: frozenset[tuple[int, int]]
    max_degree: int


def graphical_view(game: FactoredNormalFormGame) -> GraphicalGameView:
    occurrences = [0] * (game.n + 1)
    edges = set()
    for i, j in game.factors:
        occurrences[i] += 1
        occurrences[j] += 1
        edges.add((i, j) if i < j else (j, i))
    return GraphicalGameView(game, frozenset(edges), max(occurrences))


@dataclass(frozen=True)
class StrategySpace:
    """An agent's strategies as independent choice groups over disjoint
    resources: a strategy picks one subset per group and takes the union.

    Zero groups encode the degenerate space {empty set}. Groups must not share
    resources, which keeps membership decomposable without enumeration.
    """

    groups: tuple[tuple[frozenset[str], ...], ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for group in self.groups:
            if not group:
                raise ValueError("empty choice group: strategy space would be empty")
            universe = frozenset().union(*group)
            if universe & seen:
                raise ValueError("choice groups must use disjoint resources")
            seen |= universe

    def size(self) -> int:
        out = 1
        for group in self.groups:
            out *= len(group)
        return out

    def __iter__(self) -> Iterator[frozenset[str]]:
        for picks in itertools.product(*self.groups):
            yield frozenset().union(*picks) if picks else frozenset()

    def __contains__(self, strategy: frozenset[str]) -> bool:
        leftover = set(strategy)
        for group in self.groups:
            universe = frozenset().union(*group)
            part = strategy & universe
            if part not in group:
                return False
            leftover -= part
        return not leftover


@dataclass(frozen=True, eq=False)
class CongestionGame:
    """Resource-allocation game: each agent picks a resource subset from its
    strategy space and pays each chosen resource's cost at its load.

    Gadget-built instances carry their factor list, which fast observation and
    compact serialization rely on; hand-built games leave it as None.
    """

    n: int
    resources: tuple[str, ...]
    cost_tables: dict[str, dict[int, float]]
    strategy_spaces: tuple[StrategySpace, ...]
    specified_profile: tuple[frozenset[str], ...]
    braess_factors: tuple[BraessFactor, ...] | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"population size must be >= 1, got {self.n}")
        if len(self.strategy_spaces) != self.n or len(self.specified_profile) != self.n:
            raise ValueError("strategy spaces and specified profile must cover every agent")
        self.validate()

    def validate(self) -> None:
        """Check the structural invariants; raises ValueError on the first hole."""
        known = set(self.resources)
        if len(known) != len(self.resources):
            raise ValueError("duplicate resource ids")
        missing = known - self.cost_tables.keys()
        if missing:
            raise ValueError(f"resources without cost tables: {sorted(missing)[:3]}")
        for agent0, (space, sigma) in enumerate(zip(self.strategy_spaces, self.specified_profile)):
            for group in space.groups:
                for option in group:
                    if not option <= known:
                        raise ValueError(f"agent {agent0 + 1} strategy uses unknown resources")
            if sigma not in space:
                raise ValueError(
                    f"specified strategy of agent {agent0 + 1} is outside its strategy space"
                )

    def utility(self, profile: Sequence[frozenset[str]], agent: int) -> float:
        """Negative total cost of agent's chosen resources under `profile`."""
        loads: dict[str, int] = {}
        for chosen in profile:
            for r in chosen:
                loads[r] = loads.get(r, 0) + 1
        return -sum(self.cost_tables[r][loads[r]] for r in profile[agent - 1])


# Shared Braess cost tables: the direct road congests linearly, the bypass is a
# flat 2.5, the shortcut is free. Loads never exceed 2 by construction.
_ROAD_COSTS = {1: 1.0, 2: 2.0}
_BYPASS_COSTS = {1: 2.5}
_SHORTCUT_COSTS = {1: 0.0}


def braess_product(n: int, factors: Iterable[BraessFactor]) -> CongestionGame:
    """Disjoint-union product of Braess gadgets: one congestion game whose
    resource set concatenates every factor's three roads."""
    factors = tuple(BraessFactor(*f) for f in factors)
    _check_pairs(n, factors)
    resources: list[str] = []
    cost_tables: dict[str, dict[int, float]] = {}
    groups: list[list[tuple[frozenset[str], ...]]] = [[] for _ in range(n)]
    profile_parts: list[list[str]] = [[] for _ in range(n)]
    for x, (i, j) in enumerate(factors):
        road, bypass, shortcut = f"road@{x}", f"bypass@{x}", f"shortcut@{x}"
        resources += [road, bypass, shortcut]
        cost_tables[road] = _ROAD_COSTS
        cost_tables[bypass] = _BYPASS_COSTS
        cost_tables[shortcut] = _SHORTCUT_COSTS
        road_only = frozenset((road,))
        groups[i - 1].append((road_only,))
        groups[j - 1].append((frozenset((bypass,)), frozenset((road, shortcut))))
        profile_parts[i - 1].append(road)
        profile_parts[j - 1] += [road, shortcut]
    spaces = tuple(StrategySpace(tuple(g)) for g in groups)
    profile = tuple(frozenset(p) for p in profile_parts)
    return CongestionGame(n, tuple(resources), cost_tables, spaces, profile, factors)


def braess(n: int, beneficiary: int, decider: int) -> CongestionGame:
    return braess_product(n, (BraessFactor(beneficiary, decider),))


@lru_cache(maxsize=None)
def all_pairs_braess(n: int) -> CongestionGame:
    pairs = tuple(BraessFactor(i, j) for j in range(1, n + 1) for i in range(1, j))
    return braess_product(n, pairs)


@dataclass(frozen=True)
class AuctionGame:
    """Second-price auction with personalized reserves, plus specified bids.

    The highest bid wins (ties uniform at random); the item is allocated only
    when the winner's bid strictly exceeds their reserve, at a price of
    max(second-highest bid, winner's reserve), and may be passed around inside
    the winner's coalition.
    """

    n: int
    valuations: tuple[float, ...]
    reserves: tuple[float, ...]
    specified_bids: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"population size must be >= 1, got {self.n}")
        for name, vec in (
            ("valuations", self.valuations),
            ("reserves", self.reserves),
            ("specified_bids", self.specified_bids),
        ):
            if len(vec) != self.n:
                raise ValueError(f"{name} must have length {self.n}, got {len(vec)}")
        if not all(0 <= v <= 1 for v in self.valuations):
            raise ValueError("valuations must lie in [0, 1]")
        if not all(0 <= r <= 1 for r in self.reserves):
            raise ValueError("reserves must lie in [0, 1]")
        if not all(b >= 0 for b in self.specified_bids):
            raise ValueError("bids must be nonnegative")


def auction_gadget(
    n: int, x_set: Iterable[int], y_set: Iterable[int], z_set: Iterable[int]
) -> AuctionGame:
    """Membership-test auction: X wants the item but is priced out by its own
    reserve, Y can win it cheaply but does not want it, Z is frozen out.

    A coalition profits exactly when it straddles X and Y, and then exactly
    one of its Y members raises their bid.
    """
    x, y, z = frozenset(x_set), frozenset(y_set), frozenset(z_set)
    if x & y or x & z or y & z:
        raise ValueError("X, Y, Z must be disjoint")
    union = x | y | z
    if union != frozenset(range(1, n + 1)):
        raise ValueError(f"X, Y, Z must cover 1..{n} exactly")
    valuations = tuple(1.0 if i in x else 0.0 for i in range(1, n + 1))
    reserves = tuple(0.0 if i in y else 1.0 for i in range(1, n + 1))
    return AuctionGame(n, valuations, reserves, (0.0,) * n)


def first_move_game(n: int) -> AuctionGame:
    """Everyone values the item at 1 with zero reserve and bids 0: every
    coalition profitably sends exactly one member forward."""
    if n < 1:
        raise ValueError(f"population size must be >= 1, got {n}")
    return AuctionGame(n, (1.0,) * n, (0.0,) * n, (0.0,) * n)


def classify_auction(game: AuctionGame):
    """Recognize constructor shapes: ("first-move",), ("gadget", X, Y, Z), or
    ("general",) for anything the closed-form observation rules do not cover."""
    if any(b != 0 for b in game.specified_bids):
        return ("general",)
    vr = list(zip(game.valuations, game.reserves))
    if all(v == 1 and r == 0 for v, r in vr):
        return ("first-move",)
    x, y, z = [], [], []
    for agent, (v, r) in enumerate(vr, start=1):
        if v == 1 and r == 1:
            x.append(agent)
        elif v == 0 and r == 0:
            y.append(agent)
        elif v == 0 and r == 1:
            z.append(agent)
        else:
            return ("general",)
    return ("gadget", frozenset(x), frozenset(y), frozenset(z))


Game = FactoredNormalFormGame | CongestionGame | AuctionGame


def game_to_json(game: Game) -> dict:
    """Tagged wire form of any game-strategy pair."""
    if isinstance(game, FactoredNormalFormGame):
        return {
            "family": "normal-form",
            "n": game.n,
            "factors": [[i, j] for i, j in game.factors],
        }
    if isinstance(game, CongestionGame):
        if game.braess_factors is not None:
            return {
                "family": "congestion",
                "n": game.n,
                "factors": [[i, j] for i, j in game.braess_factors],
            }
        return {
            "family": "congestion",
            "n": game.n,
            "resources": list(game.resources),
            "costs": {r: {str(k): v for k, v in t.items()} for r, t in game.cost_tables.items()},
            "spaces": [
                [[sorted(opt) for opt in group] for group in space.groups]
                for space in game.strategy_spaces
            ],
            "profile": [sorted(s) for s in game.specified_profile],
        }
    if isinstance(game, AuctionGame):
        return {
            "family": "auction",
            "n": game.n,
            "v": list(game.valuations),
            "r": list(game.reserves),
            "bids": list(game.specified_bids),
        }
    raise TypeError(f"not a known game type: {type(game).__name__}")


def game_from_json(payload: dict) -> Game:
    family = payload["family"]
    n = payload["n"]
    if family == "normal-form":
        return FactoredNormalFormGame(
            n, tuple(PrisonerDilemmaFactor(i, j) for i, j in payload["factors"])
        )
    if family == "congestion":
        if "factors" in payload:
            return braess_product(n, (BraessFactor(i, j) for i, j in payload["factors"]))
        spaces = tuple(
            StrategySpace(tuple(tuple(frozenset(opt) for opt in group) for group in groups))
            for groups in payload["spaces"]
        )
        costs = {r: {int(k): v for k, v in t.items()} for r, t in payload["costs"].items()}
        profile = tuple(frozenset(s) for s in payload["profile"])
        return CongestionGame(n, tuple(payload["resources"]), costs, spaces, profile)
    if family == "auction":
        return AuctionGame(n, tuple(payload["v"]), tuple(payload["r"]), tuple(payload["bids"]))
    raise ValueError(f"unknown game family {family!r}")


def game_key(game: Game) -> str:
    """Stable string identity of a game, used to key adversary decisions."""
    return json.dumps(game_to_json(game), sort_keys=True, separators=(",", ":"))
