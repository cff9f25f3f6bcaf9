"""Aggregation of relevant transactions into behavioral profiles.

A profile row is keyed by the (client, agency, account) triple and carries
12 attributes: the account age plus 11 triple-valued attributes, each as
(annual total, max monthly value, current-window value). Aggregation is a
commutative fold per key, so shards may be processed independently and
merged.
"""

from __future__ import annotations

import calendar
import logging
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import IO, Iterable

from .model import (
    AccountKey,
    AttributeTriple,
    BandSchema,
    ClientKind,
    ClientProfile,
    ClientRecord,
    Destination,
    Direction,
    TRIPLE_ATTRIBUTES,
    Transaction,
)

LOGGER = logging.getLogger(__name__)

#: Ceiling applied to debit/credit percentage when a month has debits but
#: no credits at all.
PCT_CEILING = 999.99


@dataclass(frozen=True, slots=True)
class Cycle:
    """Twelve consecutive calendar months starting at (year, month)."""

    year: int
    month: int

    def month_index(self, ts: datetime | date) -> int | None:
        idx = (ts.year - self.year) * 12 + (ts.month - self.month)
        return idx if 0 <= idx < 12 else None

    @property
    def start(self) -> date:
        return date(self.year, self.month, 1)

    @property
    def end(self) -> date:
        """First day after the last month of the cycle."""
        y, m = divmod(self.month - 1 + 12, 12)
        return date(self.year + y, m + 1, 1)


def one_month_back(d: date) -> date:
    """Same day-of-month one month earlier, clamped at month ends."""
    if d.month == 1:
        y, m = d.year - 1, 12
    else:
        y, m = d.year, d.month - 1
    return date(y, m, min(d.day, calendar.monthrange(y, m)[1]))


def account_age_years(opened: date, as_of: date) -> int:
    years = as_of.year - opened.year
    if (as_of.month, as_of.day) < (opened.month, opened.day):
        years -= 1
    return max(years, 0)


class _Cell:
    """Accumulator for one (account, period) bucket."""

    __slots__ = ("services", "movl", "bands", "deb", "cred", "ted", "doc")

    def __init__(self) -> None:
        self.services: set[int] = set()
        self.movl = 0
        self.bands = [0, 0, 0, 0, 0, 0]
        self.deb = 0
        self.cred = 0
        self.ted = 0
        self.doc = 0

    def add(self, tx: Transaction, schema: BandSchema) -> None:
        self.services.add(tx.service_code)
        self.movl += 1
        self.bands[schema.band(tx.amount_cents) - 1] += 1
        if tx.direction is Direction.DEBIT:
            self.deb += tx.amount_cents
            if tx.destination is Destination.OTHER_BANK_TED:
                self.ted += tx.amount_cents
            elif tx.destination in (Destination.OTHER_BANK_DOC, Destination.SAME_BANK):
                self.doc += tx.amount_cents
        else:
            self.cred += tx.amount_cents

    def pct_deb(self) -> float:
        return _pct_ratio(self.deb, self.cred)

    def pct_ted(self) -> float:
        return 0.0 if self.deb == 0 else round(100.0 * self.ted / self.deb, 2)

    def pct_doc(self) -> float:
        return 0.0 if self.deb == 0 else round(100.0 * self.doc / self.deb, 2)

    def values(self) -> dict[str, float]:
        out = {"serv": float(len(self.services)), "movl": float(self.movl)}
        for i, n in enumerate(self.bands):
            out[f"band{i + 1}"] = float(n)
        out["pct_deb"] = self.pct_deb()
        out["pct_ted"] = self.pct_ted()
        out["pct_doc"] = self.pct_doc()
        return out


def _pct_ratio(deb_cents: int, cred_cents: int, ceiling: float = PCT_CEILING) -> float:
    if cred_cents == 0:
        return 0.0 if deb_cents == 0 else ceiling
    return min(round(100.0 * deb_cents / cred_cents, 2), ceiling)


def pct_debit_month(month_txs: list[Transaction]) -> float:
    """Debited value as a percentage of credited value for one month.

    100 means balance; values above 100 mean more left the account than
    entered it. No credits and no debits gives 0; debits without credits
    are capped at the configured ceiling.
    """
    if not month_txs:
        return 0.0
    keys = {(tx.client_id, tx.agency, tx.account) for tx in month_txs}
    if len(keys) > 1:
        raise ValueError("transactions span more than one account")
    months = {(tx.timestamp.year, tx.timestamp.month) for tx in month_txs}
    if len(months) > 1:
        raise ValueError("transactions span more than one calendar month")
    deb = sum(t.amount_cents for t in month_txs if t.direction is Direction.DEBIT)
    cred = sum(t.amount_cents for t in month_txs if t.direction is Direction.CREDIT)
    return _pct_ratio(deb, cred)


def value_band(amount_cents: int, schema: BandSchema) -> int:
    """Band index in 1..6 for a positive amount; half-open upper bound."""
    return schema.band(amount_cents)


@dataclass
class ProfilingStats:
    skipped_outside_cycle: int = 0
    skipped_zero_amount: int = 0


def build_profiles(
    txs: Iterable[Transaction],
    cycle: Cycle,
    schema: BandSchema,
    registry: dict[str, ClientRecord],
    stats: ProfilingStats | None = None,
) -> dict[AccountKey, ClientProfile]:
    """One profile per account with any activity in the annual cycle.

    Annual totals sum the 12 monthly values, monthly maxima are taken per
    attribute independently, window values stay 0 (filled by window merge).
    Transactions outside the cycle are skipped and counted; zero-amount
    transactions are not movements and are skipped likewise.
    """
    stats = stats if stats is not None else ProfilingStats()
    cells: dict[AccountKey, dict[int, _Cell]] = {}
    for tx in txs:
        idx = cycle.month_index(tx.timestamp)
        if idx is None:
            stats.skipped_outside_cycle += 1
            continue
        if tx.amount_cents == 0:
            stats.skipped_zero_amount += 1
            continue
        key = AccountKey(tx.client_id, tx.agency, tx.account)
        month_cells = cells.get(key)
        if month_cells is None:
            month_cells = cells[key] = {}
        cell = month_cells.get(idx)
        if cell is None:
            cell = month_cells[idx] = _Cell()
        cell.add(tx, schema)
    if stats.skipped_outside_cycle:
        LOGGER.info(
            "skipped %d transactions outside cycle %d-%02d",
            stats.skipped_outside_cycle,
            cycle.year,
            cycle.month,
        )
    profiles: dict[AccountKey, ClientProfile] = {}
    as_of = cycle.end
    for key, month_cells in cells.items():
        rec = registry.get(key.client_id)
        kind = rec.kind if rec else ClientKind.SINGULAR_PERSON
        age = account_age_years(rec.opened, as_of) if rec else 0
        profile = ClientProfile(key=key, client_kind=kind, account_age_years=age)
        monthly = [cell.values() for cell in month_cells.values()]
        # Count attributes add across months; percent attributes are
        # value-weighted over the whole year, not averaged.
        for name in TRIPLE_ATTRIBUTES:
            triple = profile.attribute(name)
            per_month = [m[name] for m in monthly]
            triple.monthly_max = max(per_month)
            if not name.startswith("pct"):
                triple.annual_total = sum(per_month)
        deb = sum(c.deb for c in month_cells.values())
        cred = sum(c.cred for c in month_cells.values())
        ted = sum(c.ted for c in month_cells.values())
        doc = sum(c.doc for c in month_cells.values())
        profile.pct_deb.annual_total = _pct_ratio(deb, cred)
        profile.pct_ted.annual_total = 0.0 if deb == 0 else round(100.0 * ted / deb, 2)
        profile.pct_doc.annual_total = 0.0 if deb == 0 else round(100.0 * doc / deb, 2)
        profiles[key] = profile
    return profiles


def window_profile(
    txs: Iterable[Transaction],
    analysis_date: date,
    schema: BandSchema,
) -> dict[AccountKey, dict[str, float]]:
    """Window values per attribute over [analysis_date − 1 month, analysis_date).

    Accounts with no activity inside the window are absent from the output;
    a window profile is never fabricated.
    """
    start = one_month_back(analysis_date)
    cells: dict[AccountKey, _Cell] = {}
    for tx in txs:
        d = tx.timestamp.date()
        if not (start <= d < analysis_date):
            continue
        if tx.amount_cents == 0:
            continue
        key = AccountKey(tx.client_id, tx.agency, tx.account)
        cell = cells.get(key)
        if cell is None:
            cell = cells[key] = _Cell()
        cell.add(tx, schema)
    return {key: cell.values() for key, cell in cells.items()}


def merge_window(
    base: dict[AccountKey, ClientProfile],
    fragments: dict[AccountKey, dict[str, float]],
    registry: dict[str, ClientRecord],
    analysis_date: date,
) -> dict[AccountKey, ClientProfile]:
    """Combine the annual reference base with current-window fragments.

    The result covers exactly the accounts active in the window. Accounts
    without a reference profile get zero annual/max values (fresh accounts
    are still subject to the normative rules).
    """
    merged: dict[AccountKey, ClientProfile] = {}
    for key, values in fragments.items():
        ref = base.get(key)
        if ref is not None:
            profile = ClientProfile(
                key=key,
                client_kind=ref.client_kind,
                account_age_years=ref.account_age_years,
            )
            for name in TRIPLE_ATTRIBUTES:
                src = ref.attribute(name)
                dst = profile.attribute(name)
                dst.annual_total = src.annual_total
                dst.monthly_max = src.monthly_max
        else:
            rec = registry.get(key.client_id)
            profile = ClientProfile(
                key=key,
                client_kind=rec.kind if rec else ClientKind.SINGULAR_PERSON,
                account_age_years=(
                    account_age_years(rec.opened, analysis_date) if rec else 0
                ),
            )
        for name in TRIPLE_ATTRIBUTES:
            profile.attribute(name).window_value = values[name]
        merged[key] = profile
    return merged


def activity_filter(
    profiles: dict[AccountKey, ClientProfile],
    min_movements: float = 1,
) -> dict[AccountKey, ClientProfile]:
    """Keep profiles with at least min_movements movements in the window."""
    return {
        k: p for k, p in profiles.items() if p.movl.window_value >= min_movements
    }


# ---------------------------------------------------------------------------
# Profile store file: one record per account, all attributes x 3 values.

def _fmt(value: float) -> str:
    return str(int(value)) if value == int(value) else repr(value)


PROFILE_HEADER = ";".join(
    ["client_id", "agency", "account", "client_kind", "age_years"]
    + [
        f"{attr}_{part}"
        for attr in TRIPLE_ATTRIBUTES
        for part in ("total", "max", "win")
    ]
)


def write_profiles(profiles: dict[AccountKey, ClientProfile], out: IO[str]) -> None:
    out.write(PROFILE_HEADER + "\n")
    for key in sorted(profiles):
        p = profiles[key]
        row = [key.client_id, key.agency, key.account, p.client_kind.value,
               str(p.account_age_years)]
        for attr in TRIPLE_ATTRIBUTES:
            t = p.attribute(attr)
            row.extend((_fmt(t.annual_total), _fmt(t.monthly_max), _fmt(t.window_value)))
        out.write(";".join(row) + "\n")


def read_profiles(source: IO[str]) -> dict[AccountKey, ClientProfile]:
    header = source.readline().rstrip("\n")
    if header != PROFILE_HEADER:
        raise ValueError("unrecognized profile store header")
    profiles: dict[AccountKey, ClientProfile] = {}
    for line in source:
        parts = line.rstrip("\n").split(";")
        if len(parts) < 5:
            continue
        key = AccountKey(parts[0], parts[1], parts[2])
        profile = ClientProfile(
            key=key,
            client_kind=ClientKind(parts[3]),
            account_age_years=int(parts[4]),
        )
        pos = 5
        for attr in TRIPLE_ATTRIBUTES:
            t = profile.attribute(attr)
            t.annual_total = float(parts[pos])
            t.monthly_max = float(parts[pos + 1])
            t.window_value = float(parts[pos + 2])
            pos += 3
        profiles[key] = profile
    return profiles
