"""Seeded synthetic population and transaction-stream generator.

Produces two annual cycles of ordinary transactions for a mixed client
population, with a configurable number of accounts whose second-cycle
behavior is replaced by one of four laundering scenarios. Ground truth
labels make quantitative recall/false-positive evaluation possible.

Generation is lazy: transactions are re-derived per (account, month) from
the seed, so arbitrarily large populations never have to be materialized
at once, and two runs with the same config are byte-identical.
"""

from __future__ import annotations

import dataclasses
import enum
import gzip
import logging
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Iterator

import numpy as np

from .ingest import (
    ConfigurationError,
    client_header,
    serialize_client,
    serialize_transaction,
    transaction_header,
)
from .model import (
    AccountKey,
    ClientKind,
    ClientRecord,
    DEFAULT_BAND_SCHEMA,
    Destination,
    Direction,
    ProfileClass,
    Transaction,
    TxKind,
)

LOGGER = logging.getLogger(__name__)


class Scenario(str, enum.Enum):
    SMURFING = "smurfing"
    PASS_THROUGH = "pass_through"
    DORMANT_BURST = "dormant_burst"
    DROP_OFF = "drop_off"
    NONE = "none"


INJECTED_SCENARIOS = (
    Scenario.SMURFING,
    Scenario.PASS_THROUGH,
    Scenario.DORMANT_BURST,
    Scenario.DROP_OFF,
)


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    clients: int = 50_000
    #: Share of clients that are legal entities; their transaction amounts
    #: are scaled so a small head of the population carries most value.
    entity_ratio: float = 0.08
    entity_amount_multiplier: float = 600.0
    cycle1_year: int = 2025
    cycle2_year: int = 2026
    # Archetype population mix (must sum to 1).
    low_usage_share: float = 0.25
    standard_share: float = 0.50
    risk1_share: float = 0.10
    risk2_share: float = 0.075
    risk3_share: float = 0.075
    # Monthly activity: mean movement count and median amount per archetype.
    low_usage_rate: float = 1.5
    low_usage_amount: float = 250.0
    standard_rate: float = 5.0
    standard_amount: float = 900.0
    risk1_rate: float = 8.0
    risk1_amount: float = 3_000.0
    risk2_rate: float = 10.0
    risk2_amount: float = 4_000.0
    risk3_rate: float = 12.0
    risk3_amount: float = 8_000.0
    amount_sigma: float = 0.9
    # Injected scenario counts.
    smurfing: int = 10
    pass_through: int = 10
    dormant_burst: int = 10
    drop_off: int = 10

    def validate(self) -> None:
        if self.clients < 0 or self.seed < 0:
            raise ConfigurationError("clients and seed must be non-negative")
        if not 0.0 <= self.entity_ratio <= 1.0:
            raise ConfigurationError("entity_ratio must be in [0, 1]")
        shares = (
            self.low_usage_share,
            self.standard_share,
            self.risk1_share,
            self.risk2_share,
            self.risk3_share,
        )
        if any(not 0.0 <= s <= 1.0 for s in shares):
            raise ConfigurationError("archetype shares must be in [0, 1]")
        if abs(sum(shares) - 1.0) > 1e-9:
            raise ConfigurationError("archetype shares must sum to 1")
        injections = (self.smurfing, self.pass_through, self.dormant_burst, self.drop_off)
        if any(n < 0 for n in injections):
            raise ConfigurationError("scenario counts must be non-negative")
        if sum(injections) > self.clients:
            raise ConfigurationError(
                f"{sum(injections)} injections exceed {self.clients} clients"
            )

    def injection_counts(self) -> dict[Scenario, int]:
        return {
            Scenario.SMURFING: self.smurfing,
            Scenario.PASS_THROUGH: self.pass_through,
            Scenario.DORMANT_BURST: self.dormant_burst,
            Scenario.DROP_OFF: self.drop_off,
        }


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(GeneratorConfig)}


def load_config(path: str | Path) -> GeneratorConfig:
    """Read a key=value config file; '#' starts a comment, blanks ignored."""
    values: dict[str, object] = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {line_no}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FIELD_TYPES:
            raise ConfigurationError(f"line {line_no}: unknown setting {key!r}")
        kind = _FIELD_TYPES[key]
        try:
            values[key] = int(value) if kind == "int" else float(value)
        except ValueError as exc:
            raise ConfigurationError(f"line {line_no}: bad value for {key}: {value!r}") from exc
    config = GeneratorConfig(**values)
    config.validate()
    return config


def write_config(config: GeneratorConfig, path: str | Path) -> None:
    lines = [f"{f.name} = {getattr(config, f.name)}" for f in dataclasses.fields(config)]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class GroundTruth:
    labels: dict[AccountKey, Scenario] = field(default_factory=dict)

    def label(self, key: AccountKey) -> Scenario:
        return self.labels.get(key, Scenario.NONE)

    def injected(self) -> list[AccountKey]:
        return sorted(self.labels)


@dataclass(frozen=True)
class _Archetype:
    rate: float
    amount_median: float


def _archetypes(cfg: GeneratorConfig) -> dict[ProfileClass, _Archetype]:
    return {
        ProfileClass.LOW_USAGE: _Archetype(cfg.low_usage_rate, cfg.low_usage_amount),
        ProfileClass.STANDARD: _Archetype(cfg.standard_rate, cfg.standard_amount),
        ProfileClass.RISK1: _Archetype(cfg.risk1_rate, cfg.risk1_amount),
        ProfileClass.RISK2: _Archetype(cfg.risk2_rate, cfg.risk2_amount),
        ProfileClass.RISK3: _Archetype(cfg.risk3_rate, cfg.risk3_amount),
    }


#: How often a movement is a debit, and how outbound debits are routed,
#: per archetype. Risk archetypes move value out to other banks far more.
_DEBIT_SHARE = {
    ProfileClass.LOW_USAGE: 0.45,
    ProfileClass.STANDARD: 0.50,
    ProfileClass.RISK1: 0.55,
    ProfileClass.RISK2: 0.60,
    ProfileClass.RISK3: 0.65,
}
_TED_SHARE = {
    ProfileClass.LOW_USAGE: 0.05,
    ProfileClass.STANDARD: 0.10,
    ProfileClass.RISK1: 0.20,
    ProfileClass.RISK2: 0.35,
    ProfileClass.RISK3: 0.45,
}


@dataclass(frozen=True)
class _AccountSpec:
    index: int
    key: AccountKey
    kind: ClientKind
    archetype: ProfileClass
    scenario: Scenario
    opened: date


@dataclass
class Dataset:
    config: GeneratorConfig
    clients: list[ClientRecord]
    ground_truth: GroundTruth
    specs: list[_AccountSpec]

    @property
    def analysis_date(self) -> date:
        """First day after cycle 2; the analysis window is its last month."""
        return date(self.config.cycle2_year + 1, 1, 1)

    def iter_cycle(
        self, which: int, accounts: set[AccountKey] | None = None
    ) -> Iterator[Transaction]:
        if which not in (1, 2):
            raise ValueError("cycle must be 1 or 2")
        year = self.config.cycle1_year if which == 1 else self.config.cycle2_year
        for spec in self.specs:
            if accounts is not None and spec.key not in accounts:
                continue
            for month in range(1, 13):
                yield from self._month(spec, year, month, which)

    def iter_window(
        self, accounts: set[AccountKey] | None = None
    ) -> Iterator[Transaction]:
        """Just the analysis window (the last month of cycle 2)."""
        for spec in self.specs:
            if accounts is not None and spec.key not in accounts:
                continue
            yield from self._month(spec, self.config.cycle2_year, 12, 2)

    def _month(
        self, spec: _AccountSpec, year: int, month: int, cycle: int
    ) -> Iterator[Transaction]:
        rng = np.random.default_rng(
            [self.config.seed, spec.index, year, month]
        )
        in_window = cycle == 2 and month == 12
        if spec.scenario is not Scenario.NONE:
            yield from self._scenario_month(spec, rng, year, month, cycle, in_window)
            return
        yield from self._background_month(spec, rng, year, month)

    def _background_month(
        self, spec: _AccountSpec, rng: np.random.Generator, year: int, month: int,
        rate: float | None = None,
    ) -> Iterator[Transaction]:
        cfg = self.config
        arch = _archetypes(cfg)[spec.archetype]
        n = int(rng.poisson(rate if rate is not None else arch.rate))
        if n == 0:
            return
        multiplier = (
            cfg.entity_amount_multiplier if spec.kind is ClientKind.LEGAL_ENTITY else 1.0
        )
        amounts = rng.lognormal(math.log(arch.amount_median), cfg.amount_sigma, n)
        for i in range(n):
            cents = max(100, int(round(amounts[i] * multiplier * 100)))
            debit = rng.random() < _DEBIT_SHARE[spec.archetype]
            if debit:
                roll = rng.random()
                if roll < _TED_SHARE[spec.archetype]:
                    destination = Destination.OTHER_BANK_TED
                elif roll < _TED_SHARE[spec.archetype] + 0.10:
                    destination = Destination.OTHER_BANK_DOC
                elif roll < _TED_SHARE[spec.archetype] + 0.30:
                    destination = Destination.SAME_BANK
                else:
                    destination = Destination.NONE
            else:
                destination = Destination.NONE
            yield self._tx(spec, rng, year, month, cents, debit, destination)

    def _scenario_month(
        self, spec: _AccountSpec, rng: np.random.Generator,
        year: int, month: int, cycle: int, in_window: bool,
    ) -> Iterator[Transaction]:
        scenario = spec.scenario
        if scenario is Scenario.DORMANT_BURST:
            if in_window:
                # 20 movements on an account that never saw more than one.
                for _ in range(20):
                    cents = int(rng.integers(20_000, 300_000))
                    yield self._tx(spec, rng, year, month, cents, True,
                                   Destination.SAME_BANK)
            else:
                cents = int(rng.integers(5_000, 40_000))
                yield self._tx(spec, rng, year, month, cents, False, Destination.NONE)
            return
        if scenario is Scenario.DROP_OFF:
            if in_window:
                cents = int(rng.integers(5_000, 40_000))
                yield self._tx(spec, rng, year, month, cents, False, Destination.NONE)
            else:
                yield from self._background_month(spec, rng, year, month, rate=60.0)
            return
        if scenario is Scenario.SMURFING:
            if in_window:
                # Structured deposits packed just under the top threshold.
                for _ in range(12):
                    cents = int(rng.integers(5_500_000, 9_500_000))
                    yield self._tx(spec, rng, year, month, cents, False,
                                   Destination.NONE)
            else:
                yield from self._background_month(spec, rng, year, month)
            return
        if scenario is Scenario.PASS_THROUGH:
            if in_window:
                # Large credits leave in full to other banks within the month.
                for _ in range(6):
                    cents = int(rng.integers(1_500_000, 4_500_000))
                    yield self._tx(spec, rng, year, month, cents, False,
                                   Destination.NONE)
                    yield self._tx(spec, rng, year, month, cents, True,
                                   Destination.OTHER_BANK_TED)
            else:
                yield from self._background_month(spec, rng, year, month)
            return
        raise AssertionError(f"unhandled scenario {scenario}")  # pragma: no cover

    def _tx(
        self, spec: _AccountSpec, rng: np.random.Generator,
        year: int, month: int, cents: int, debit: bool, destination: Destination,
    ) -> Transaction:
        days = _days_in_month(year, month)
        ts = datetime(
            year, month,
            int(rng.integers(1, days + 1)),
            int(rng.integers(8, 20)),
            int(rng.integers(0, 60)),
        )
        return Transaction(
            client_id=spec.key.client_id,
            agency=spec.key.agency,
            account=spec.key.account,
            timestamp=ts,
            amount_cents=cents,
            direction=Direction.DEBIT if debit else Direction.CREDIT,
            service_code=int(rng.integers(1, 7)),
            destination=destination,
            kind=TxKind.ORDINARY,
        )


def _days_in_month(year: int, month: int) -> int:
    import calendar

    return calendar.monthrange(year, month)[1]


def generate(config: GeneratorConfig) -> Dataset:
    """Deterministic population + ground truth for the given config."""
    config.validate()
    rng = np.random.default_rng([config.seed])
    n = config.clients
    n_entities = int(round(n * config.entity_ratio))
    kinds = np.array(
        [ClientKind.LEGAL_ENTITY] * n_entities
        + [ClientKind.SINGULAR_PERSON] * (n - n_entities),
        dtype=object,
    )
    rng.shuffle(kinds)

    shares = [
        (ProfileClass.LOW_USAGE, config.low_usage_share),
        (ProfileClass.STANDARD, config.standard_share),
        (ProfileClass.RISK1, config.risk1_share),
        (ProfileClass.RISK2, config.risk2_share),
        (ProfileClass.RISK3, config.risk3_share),
    ]
    archetypes = rng.choice(
        np.array([c for c, _ in shares], dtype=object),
        size=n,
        p=[s for _, s in shares],
    )

    # Injected accounts are drawn from the singular-person population so the
    # scenario amounts stay on the personal scale.
    singular_idx = [i for i in range(n) if kinds[i] is ClientKind.SINGULAR_PERSON]
    injections = config.injection_counts()
    needed = sum(injections.values())
    if needed > len(singular_idx):
        raise ConfigurationError("not enough singular clients for the injections")
    chosen = rng.choice(np.array(singular_idx), size=needed, replace=False)
    scenario_of: dict[int, Scenario] = {}
    cursor = 0
    for scenario in INJECTED_SCENARIOS:
        for _ in range(injections[scenario]):
            scenario_of[int(chosen[cursor])] = scenario
            cursor += 1

    width = max(4, len(str(max(n - 1, 0))))
    cycle1_start = date(config.cycle1_year, 1, 1)
    clients: list[ClientRecord] = []
    specs: list[_AccountSpec] = []
    truth = GroundTruth()
    for i in range(n):
        client_id = f"C{i:0{width}d}"
        opened = cycle1_start - timedelta(days=int(rng.integers(400, 6000)))
        record = ClientRecord(client_id, kinds[i], opened)
        clients.append(record)
        key = AccountKey(client_id, "0001", "A1")
        scenario = scenario_of.get(i, Scenario.NONE)
        archetype = archetypes[i]
        if scenario is Scenario.DORMANT_BURST:
            archetype = ProfileClass.LOW_USAGE
        specs.append(_AccountSpec(i, key, kinds[i], archetype, scenario, opened))
        if scenario is not Scenario.NONE:
            truth.labels[key] = scenario
    return Dataset(config=config, clients=clients, ground_truth=truth, specs=specs)


# --- emission ----------------------------------------------------------------

def emit(dataset: Dataset, directory: str | Path, compress: bool = False) -> dict[str, Path]:
    """Write the population in the parser's file formats.

    Returns the written paths keyed by logical name (clients, cycle1,
    cycle2). With compress=True the files are gzip members; the parser
    detects that from magic bytes, not the name.
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {directory}: {exc}") from exc
    suffix = ".csv.gz" if compress else ".csv"
    opener = (lambda p: gzip.open(p, "wt", encoding="utf-8")) if compress else (
        lambda p: open(p, "w", encoding="utf-8")
    )
    paths: dict[str, Path] = {}

    path = directory / f"clients{suffix}"
    with opener(path) as fh:
        fh.write(client_header() + "\n")
        for record in dataset.clients:
            fh.write(serialize_client(record) + "\n")
    paths["clients"] = path

    for which in (1, 2):
        path = directory / f"transactions_cycle{which}{suffix}"
        count = 0
        with opener(path) as fh:
            fh.write(transaction_header() + "\n")
            for tx in dataset.iter_cycle(which):
                fh.write(serialize_transaction(tx) + "\n")
                count += 1
        LOGGER.info("wrote %d transactions to %s", count, path)
        paths[f"cycle{which}"] = path

    path = directory / "ground_truth.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("account;scenario\n")
        for key in dataset.ground_truth.injected():
            fh.write(f"{key.as_str()};{dataset.ground_truth.labels[key].value}\n")
    paths["truth"] = path
    return paths


def read_ground_truth(path: str | Path) -> GroundTruth:
    truth = GroundTruth()
    with open(path, encoding="utf-8") as fh:
        next(fh)  # header
        for line in fh:
            account, _, scenario = line.strip().partition(";")
            truth.labels[AccountKey.from_str(account)] = Scenario(scenario)
    return truth


# --- generator self-check ------------------------------------------------------

def self_check(dataset: Dataset) -> list[AccountKey]:
    """Injected accounts that would NOT trip any shipped normative rule
    at zero margin; an empty list means the generator kept its promise."""
    from .profiler import Cycle, build_profiles, merge_window, window_profile
    from .predicates import evaluate
    from .ruleengine import apply_mar, builtin_normative_rules

    schema = DEFAULT_BAND_SCHEMA
    registry = {c.client_id: c for c in dataset.clients}
    injected = set(dataset.ground_truth.labels)
    base = build_profiles(
        dataset.iter_cycle(1, accounts=injected),
        Cycle(dataset.config.cycle1_year, 1),
        schema,
        registry,
    )
    fragments = window_profile(
        dataset.iter_window(accounts=injected), dataset.analysis_date, schema
    )
    merged = merge_window(base, fragments, registry, dataset.analysis_date)
    rules = [(r, r.compiled()) for r in builtin_normative_rules()]
    missed = []
    for key in sorted(injected):
        profile = merged.get(key)
        if profile is None:
            missed.append(key)
            continue
        limits = apply_mar(ProfileClass.STANDARD, profile, 0.0)
        if not any(evaluate(ast, profile, limits) for _, ast in rules):
            missed.append(key)
    return missed
