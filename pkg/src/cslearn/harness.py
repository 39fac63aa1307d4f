"""Experiment campaigns: truth generators, grid sweeps over families,
population sizes, degrees and adversary policies, with verified results
emitted as deterministic CSV or JSON."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from math import comb
from typing import Iterable

from .core import CoalitionStructure, bell_number, info_lower_bound, upper_bound
from .learners import LearnerReport, run_learner, verify_report
from .oracle import AdversaryPolicy, HiddenOracle, stable_hash

CSV_HEADER = "family,n,d,c,policy,seed,rounds,budget,lower_bound,recovered_ok"


def random_partition(n: int, rng: random.Random) -> CoalitionStructure:
    """Uniform draw over all B_n partitions.

    Sequential urn construction: the block of the smallest unplaced agent has
    size k with probability C(m-1, k-1) * B_(m-k) / B_m over the m agents still
    unplaced; exact Bell-number ratios keep the draw unbiased.
    """
    if n < 1:
        raise ValueError(f"population size must be >= 1, got {n}")
    remaining = list(range(1, n + 1))
    blocks: list[list[int]] = []
    while remaining:
        m = len(remaining)
        ticket = rng.randrange(bell_number(m))
        acc = 0
        k = m
        for size in range(1, m + 1):
            acc += comb(m - 1, size - 1) * bell_number(m - size)
            if ticket < acc:
                k = size
                break
        head, rest = remaining[0], remaining[1:]
        companions = rng.sample(rest, k - 1)
        blocks.append([head, *companions])
        chosen = set(companions)
        remaining = [a for a in rest if a not in chosen]
    return CoalitionStructure(blocks)


def chinese_restaurant_partition(n: int, theta: float, rng: random.Random) -> CoalitionStructure:
    """Chinese-restaurant process: agent i joins a block with probability
    proportional to its size, or opens a new one with weight theta."""
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    blocks: list[list[int]] = []
    for i in range(1, n + 1):
        ticket = rng.random() * (i - 1 + theta)
        for b in blocks:
            ticket -= len(b)
            if ticket < 0:
                b.append(i)
                break
        else:
            blocks.append([i])
    return CoalitionStructure(blocks)


def max_coalition_partition(n: int, c: int, rng: random.Random) -> CoalitionStructure:
    """Random partition with every block capped at c members: each agent joins
    a uniformly chosen non-full block or opens a new one."""
    if c < 1:
        raise ValueError(f"coalition cap must be >= 1, got {c}")
    blocks: list[list[int]] = []
    for i in range(1, n + 1):
        open_blocks = [b for b in blocks if len(b) < c]
        pick = rng.randrange(len(open_blocks) + 1)
        if pick == len(open_blocks):
            blocks.append([i])
        else:
            open_blocks[pick].append(i)
    return CoalitionStructure(blocks)


@dataclass(frozen=True)
class TruthModel:
    """How hidden coalition structures are drawn for each run."""

    kind: str  # "uniform" | "fixed" | "crp" | "max-coalition"
    blocks: tuple[tuple[int, ...], ...] | None = None
    theta: float | None = None
    c: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "fixed", "crp", "max-coalition"):
            raise ValueError(f"unknown truth model {self.kind!r}")
        if self.kind == "fixed" and self.blocks is None:
            raise ValueError("fixed truth model needs blocks")
        if self.kind == "crp" and (self.theta is None or self.theta <= 0):
            raise ValueError("crp truth model needs theta > 0")
        if self.kind == "max-coalition" and (self.c is None or self.c < 1):
            raise ValueError("max-coalition truth model needs c >= 1")

    def sample(self, n: int, rng: random.Random) -> CoalitionStructure:
        if self.kind == "uniform":
            return random_partition(n, rng)
        if self.kind == "fixed":
            truth = CoalitionStructure(self.blocks)
            if truth.n != n:
                raise ValueError(f"fixed truth has {truth.n} agents, campaign point has {n}")
            return truth
        if self.kind == "crp":
            return chinese_restaurant_partition(n, self.theta, rng)
        return max_coalition_partition(n, self.c, rng)

    def label(self) -> str:
        if self.kind == "fixed":
            return "fixed:" + json.dumps([list(b) for b in self.blocks], separators=(",", ":"))
        if self.kind == "crp":
            return f"crp:{self.theta}"
        if self.kind == "max-coalition":
            return f"max-coalition:{self.c}"
        return "uniform"

    @staticmethod
    def parse(label: str) -> "TruthModel":
        if label == "uniform":
            return TruthModel("uniform")
        if label.startswith("crp:"):
            return TruthModel("crp", theta=float(label.split(":", 1)[1]))
        if label.startswith("max-coalition:"):
            return TruthModel("max-coalition", c=int(label.split(":", 1)[1]))
        if label.startswith("fixed:"):
            blocks = tuple(tuple(b) for b in json.loads(label.split(":", 1)[1]))
            return TruthModel("fixed", blocks=blocks)
        raise ValueError(f"cannot parse truth model {label!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    n_range: tuple[int, ...]
    truth_model: TruthModel = TruthModel("uniform")
    d_values: tuple[int, ...] = ()
    policies: tuple[AdversaryPolicy, ...] = (AdversaryPolicy.first(),)
    repetitions: int = 1
    seed: int = 0
    output_path: str | None = None

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(n < 1 for n in self.n_range):
            raise ValueError("all population sizes must be >= 1")
        if self.family == "graphical":
            if not self.d_values:
                raise ValueError("graphical campaigns need d_values")
            if any(d % 2 != 0 or d < 2 for d in self.d_values):
                raise ValueError("all degree limits must be even and >= 2")

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "n_range": list(self.n_range),
            "truth_model": self.truth_model.label(),
            "d_values": list(self.d_values),
            "policies": [p.label() for p in self.policies],
            "repetitions": self.repetitions,
            "seed": self.seed,
            "output_path": self.output_path,
        }

    @staticmethod
    def from_json(payload: dict) -> "ExperimentConfig":
        return ExperimentConfig(
            family=payload["family"],
            n_range=tuple(payload["n_range"]),
            truth_model=TruthModel.parse(payload.get("truth_model", "uniform")),
            d_values=tuple(payload.get("d_values", ())),
            policies=tuple(
                AdversaryPolicy.parse(p) for p in payload.get("policies", ["first"])
            ),
            repetitions=payload.get("repetitions", 1),
            seed=payload.get("seed", 0),
            output_path=payload.get("output_path"),
        )


@dataclass(frozen=True)
class CampaignRow:
    family: str
    n: int
    d: int | None
    c: int | None
    policy: str
    seed: int
    rounds: int
    budget: int
    lower_bound: int
    recovered_ok: bool


@dataclass(frozen=True)
class CampaignResult:
    rows: tuple[CampaignRow, ...]

    def to_json(self) -> str:
        return json.dumps(
            {"rows": [asdict(r) for r in self.rows]}, sort_keys=True, separators=(",", ":")
        )

    @staticmethod
    def from_json(text: str) -> "CampaignResult":
        payload = json.loads(text)
        return CampaignResult(tuple(CampaignRow(**r) for r in payload["rows"]))


class CampaignError(RuntimeError):
    """A verified-correctness failure; carries the offending run, serialized."""

    def __init__(self, message: str, details: dict):
        super().__init__(f"{message}\n{json.dumps(details, sort_keys=True)}")
        self.details = details


def report_to_json(
    report: LearnerReport, family: str, params: dict, seed: int
) -> dict:
    return {
        "family": family,
        "n": report.recovered.n,
        "params": params,
        "rounds": report.rounds,
        "budget": report.budget,
        "recovered": json.loads(report.recovered.to_json()),
        "seed": seed,
    }


def _run_seed(master: int, family: str, n: int, d: int | None, rep: int) -> int:
    return stable_hash(f"run|{master}|{family}|{n}|{d if d is not None else '-'}|{rep}")


def run_campaign(cfg: ExperimentConfig) -> CampaignResult:
    """Sweep the grid; every run is verified before its row is recorded, and
    any verification failure aborts the whole campaign with the run attached.

    The truth seed depends on (seed, family, n, d, repetition) but not on the
    policy, so policy sweeps face identical hidden structures.
    """
    rows: list[CampaignRow] = []
    for n in cfg.n_range:
        if cfg.family == "graphical":
            d_grid: Iterable[int | None] = [d for d in cfg.d_values if d <= n]
        else:
            d_grid = [None]
        for d in d_grid:
            for rep in range(cfg.repetitions):
                seed = _run_seed(cfg.seed, cfg.family, n, d, rep)
                truth = cfg.truth_model.sample(n, random.Random(seed))
                c = truth.max_block_size() if cfg.family == "auction-bitwise" else None
                for policy in cfg.policies:
                    oracle = HiddenOracle(truth, policy)
                    report = run_learner(cfg.family, oracle, d=d)
                    verdict = verify_report(report, truth, cfg.family, d=d)
                    if not verdict.ok:
                        raise CampaignError(
                            "campaign run failed verification",
                            {
                                "failures": verdict.failures,
                                "truth": json.loads(truth.to_json()),
                                "policy": policy.label(),
                                "run": report_to_json(
                                    report, cfg.family, {"d": d, "c": c}, seed
                                ),
                            },
                        )
                    rows.append(
                        CampaignRow(
                            family=cfg.family,
                            n=n,
                            d=d,
                            c=c,
                            policy=policy.label(),
                            seed=seed,
                            rounds=report.rounds,
                            budget=report.budget,
                            lower_bound=info_lower_bound(n),
                            recovered_ok=True,
                        )
                    )
    rows.sort(key=lambda r: (r.family, r.n, r.d or 0, r.c or 0, r.policy, r.seed))
    return CampaignResult(tuple(rows))


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def render_csv(result: CampaignResult) -> str:
    lines = [CSV_HEADER]
    for r in result.rows:
        lines.append(
            ",".join(
                _csv_cell(v)
                for v in (
                    r.family,
                    r.n,
                    r.d,
                    r.c,
                    r.policy,
                    r.seed,
                    r.rounds,
                    r.budget,
                    r.lower_bound,
                    r.recovered_ok,
                )
            )
        )
    return "\n".join(lines) + "\n"


def emit(result: CampaignResult, fmt: str, path: str) -> str:
    """Write the result to `path` as csv or json; byte-stable for equal inputs."""
    if fmt == "csv":
        text = render_csv(result)
    elif fmt == "json":
        text = result.to_json() + "\n"
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path
