"""Core domain types shared across the monitoring pipeline.

Money is carried as integer cents everywhere; band thresholds and limit
comparisons must be exact, so binary floats never touch raw amounts.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import date, datetime


class Direction(str, enum.Enum):
    DEBIT = "D"
    CREDIT = "C"


class Destination(str, enum.Enum):
    SAME_BANK = "SB"
    OTHER_BANK_TED = "TED"
    OTHER_BANK_DOC = "DOC"
    NONE = "-"


class TxKind(str, enum.Enum):
    ORDINARY = "ORD"
    FEE = "FEE"
    COMMISSION = "COM"
    INTEREST = "INT"
    TAX = "TAX"


class ClientKind(str, enum.Enum):
    SINGULAR_PERSON = "PF"
    LEGAL_ENTITY = "PJ"


class ProfileClass(str, enum.Enum):
    LOW_USAGE = "low_usage"
    STANDARD = "standard"
    RISK1 = "risk1"
    RISK2 = "risk2"
    RISK3 = "risk3"


#: Classes that may be promoted to a risk class at analysis time.
RECLASSIFIABLE = frozenset(
    {ProfileClass.LOW_USAGE, ProfileClass.STANDARD, ProfileClass.RISK1}
)


class LimitBasis(str, enum.Enum):
    ANNUAL_TOTAL = "annual_total"
    MONTHLY_MAX = "monthly_max"


def limit_basis(cls: ProfileClass) -> LimitBasis:
    """Which stored value a rule limit is computed from, per profile class."""
    if cls in (ProfileClass.RISK1, ProfileClass.RISK2, ProfileClass.RISK3):
        return LimitBasis.MONTHLY_MAX
    return LimitBasis.ANNUAL_TOTAL


def is_reclassifiable(cls: ProfileClass) -> bool:
    return cls in RECLASSIFIABLE


@dataclass(frozen=True, slots=True)
class Transaction:
    client_id: str
    agency: str
    account: str
    timestamp: datetime
    amount_cents: int
    direction: Direction
    service_code: int
    destination: Destination
    kind: TxKind

    def __post_init__(self) -> None:
        if self.amount_cents < 0:
            raise ValueError("amount must be non-negative")


@dataclass(frozen=True, slots=True)
class ClientRecord:
    client_id: str
    kind: ClientKind
    opened: date


@dataclass(frozen=True, slots=True, order=True)
class AccountKey:
    client_id: str
    agency: str
    account: str

    def as_str(self) -> str:
        return f"{self.client_id}/{self.agency}/{self.account}"

    @classmethod
    def from_str(cls, text: str) -> "AccountKey":
        client_id, agency, account = text.split("/")
        return cls(client_id, agency, account)


@dataclass(slots=True)
class AttributeTriple:
    """One behavioral attribute: annual total / max monthly value / window value."""

    annual_total: float = 0.0
    monthly_max: float = 0.0
    window_value: float = 0.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.annual_total, self.monthly_max, self.window_value)


#: Canonical ordering of the triple-valued attributes. Together with the
#: account age these make the 12 behavioral attributes.
TRIPLE_ATTRIBUTES = (
    "serv",
    "movl",
    "band1",
    "band2",
    "band3",
    "band4",
    "band5",
    "band6",
    "pct_deb",
    "pct_ted",
    "pct_doc",
)

BAND_ATTRIBUTES = ("band1", "band2", "band3", "band4", "band5", "band6")

#: Feature ordering used for clustering and rule induction: account age plus
#: the annual totals of the 11 triple attributes.
FEATURE_NAMES = ("age",) + TRIPLE_ATTRIBUTES


@dataclass(slots=True)
class ClientProfile:
    key: AccountKey
    client_kind: ClientKind
    account_age_years: int = 0
    serv: AttributeTriple = field(default_factory=AttributeTriple)
    movl: AttributeTriple = field(default_factory=AttributeTriple)
    band1: AttributeTriple = field(default_factory=AttributeTriple)
    band2: AttributeTriple = field(default_factory=AttributeTriple)
    band3: AttributeTriple = field(default_factory=AttributeTriple)
    band4: AttributeTriple = field(default_factory=AttributeTriple)
    band5: AttributeTriple = field(default_factory=AttributeTriple)
    band6: AttributeTriple = field(default_factory=AttributeTriple)
    pct_deb: AttributeTriple = field(default_factory=AttributeTriple)
    pct_ted: AttributeTriple = field(default_factory=AttributeTriple)
    pct_doc: AttributeTriple = field(default_factory=AttributeTriple)

    def attribute(self, name: str) -> AttributeTriple:
        if name not in TRIPLE_ATTRIBUTES:
            raise KeyError(f"unknown profile attribute: {name}")
        return getattr(self, name)

    def features(self) -> list[float]:
        """Feature vector (see FEATURE_NAMES) built from annual totals."""
        row = [float(self.account_age_years)]
        row.extend(self.attribute(a).annual_total for a in TRIPLE_ATTRIBUTES)
        return row


@dataclass(frozen=True, slots=True)
class BandSchema:
    """Five strictly increasing cent thresholds delimiting 6 half-open bands.

    Band b covers [thresholds[b-2], thresholds[b-1]) with sentinels 0 and
    infinity; an amount equal to a threshold falls in the upper band.
    """

    thresholds: tuple[int, int, int, int, int]

    def __post_init__(self) -> None:
        if len(self.thresholds) != 5:
            raise ValueError("exactly 5 thresholds required")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")
        if self.thresholds[0] <= 0:
            raise ValueError("thresholds must be positive")

    def band(self, amount_cents: int) -> int:
        if amount_cents <= 0:
            raise ValueError("band defined only for positive amounts")
        for i, t in enumerate(self.thresholds):
            if amount_cents < t:
                return i + 1
        return 6


#: Default band edges in currency units: 1k, 5k, 10k, 50k, 100k.
DEFAULT_BAND_SCHEMA = BandSchema(
    (1_000_00, 5_000_00, 10_000_00, 50_000_00, 100_000_00)
)


def parse_cents(text: str) -> int:
    """Parse a decimal money string into integer cents, exactly."""
    text = text.strip()
    if not text:
        raise ValueError("empty amount")
    sign = 1
    if text[0] in "+-":
        sign = -1 if text[0] == "-" else 1
        text = text[1:]
    whole, _, frac = text.partition(".")
    if len(frac) > 2:
        raise ValueError(f"more than 2 decimal places: {text!r}")
    frac = (frac + "00")[:2]
    if not (whole or frac):
        raise ValueError(f"malformed amount: {text!r}")
    return sign * (int(whole or "0") * 100 + int(frac))


def format_cents(cents: int) -> str:
    sign = "-" if cents < 0 else ""
    cents = abs(cents)
    return f"{sign}{cents // 100}.{cents % 100:02d}"
