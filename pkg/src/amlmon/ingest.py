"""Parsing, relevance filtering and client segmentation for raw input files.

Input files are semicolon-delimited UTF-8 with a mandatory header line and
may be gzip-compressed (detected by magic bytes, not extension).
"""

from __future__ import annotations

import gzip
import io
import logging
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import IO, Iterable, Iterator

from .model import (
    ClientKind,
    ClientRecord,
    Destination,
    Direction,
    Transaction,
    TxKind,
    parse_cents,
    format_cents,
)

LOGGER = logging.getLogger(__name__)

TRANSACTION_COLUMNS = (
    "client_id",
    "agency",
    "account",
    "timestamp",
    "amount",
    "direction",
    "service_code",
    "destination",
    "kind",
)

CLIENT_COLUMNS = ("client_id", "kind", "opened")


class ConfigurationError(Exception):
    """Bad schema mapping or otherwise unusable parser configuration."""


@dataclass(frozen=True, slots=True)
class ParseError:
    line_no: int
    message: str
    raw: str


@dataclass(frozen=True, slots=True)
class RoutingError:
    client_id: str
    count: int


def _column_schema(header: str, expected: tuple[str, ...]) -> dict[str, int]:
    names = [c.strip() for c in header.rstrip("\n").split(";")]
    mapping = {name: i for i, name in enumerate(names)}
    missing = [c for c in expected if c not in mapping]
    if missing:
        raise ConfigurationError(f"header missing columns: {', '.join(missing)}")
    return mapping


def open_text(path: str | Path) -> IO[str]:
    """Open a data file, transparently decompressing gzip (magic 1f 8b)."""
    path = Path(path)
    with open(path, "rb") as probe:
        magic = probe.read(2)
    if magic == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def _parse_tx_line(parts: list[str], schema: dict[str, int]) -> Transaction:
    get = lambda col: parts[schema[col]].strip()  # noqa: E731
    return Transaction(
        client_id=get("client_id"),
        agency=get("agency"),
        account=get("account"),
        timestamp=datetime.fromisoformat(get("timestamp")),
        amount_cents=parse_cents(get("amount")),
        direction=Direction(get("direction")),
        service_code=int(get("service_code")),
        destination=Destination(get("destination")),
        kind=TxKind(get("kind")),
    )


def parse_transactions(
    source: Iterable[str] | IO[str],
    schema: dict[str, int] | None = None,
) -> tuple[list[Transaction], list[ParseError]]:
    """Parse a transaction stream; malformed lines never abort the batch.

    The first line must be a header unless an explicit column schema is
    given. Returns the parsed transactions plus one ParseError per bad line.
    """
    txs: list[Transaction] = []
    errors: list[ParseError] = []
    lines = iter(source)
    line_no = 0
    if schema is None:
        try:
            header = next(lines)
        except StopIteration:
            return [], []
        line_no = 1
        schema = _column_schema(header, TRANSACTION_COLUMNS)
    else:
        missing = [c for c in TRANSACTION_COLUMNS if c not in schema]
        if missing:
            raise ConfigurationError(f"schema missing columns: {', '.join(missing)}")
    width = max(schema.values()) + 1
    for line in lines:
        line_no += 1
        stripped = line.rstrip("\n")
        if not stripped:
            continue
        parts = stripped.split(";")
        if len(parts) < width:
            errors.append(ParseError(line_no, "truncated record", stripped))
            continue
        try:
            txs.append(_parse_tx_line(parts, schema))
        except (ValueError, KeyError) as exc:
            errors.append(ParseError(line_no, str(exc), stripped))
    return txs, errors


def parse_clients(
    source: Iterable[str] | IO[str],
) -> tuple[dict[str, ClientRecord], list[ParseError]]:
    records: dict[str, ClientRecord] = {}
    errors: list[ParseError] = []
    lines = iter(source)
    try:
        header = next(lines)
    except StopIteration:
        return {}, []
    schema = _column_schema(header, CLIENT_COLUMNS)
    line_no = 1
    for line in lines:
        line_no += 1
        stripped = line.rstrip("\n")
        if not stripped:
            continue
        parts = stripped.split(";")
        if len(parts) < len(schema):
            errors.append(ParseError(line_no, "truncated record", stripped))
            continue
        try:
            rec = ClientRecord(
                client_id=parts[schema["client_id"]].strip(),
                kind=ClientKind(parts[schema["kind"]].strip()),
                opened=date.fromisoformat(parts[schema["opened"]].strip()),
            )
        except ValueError as exc:
            errors.append(ParseError(line_no, str(exc), stripped))
            continue
        records[rec.client_id] = rec
    return records, errors


def serialize_transaction(tx: Transaction) -> str:
    return ";".join(
        (
            tx.client_id,
            tx.agency,
            tx.account,
            tx.timestamp.isoformat(),
            format_cents(tx.amount_cents),
            tx.direction.value,
            str(tx.service_code),
            tx.destination.value,
            tx.kind.value,
        )
    )


def transaction_header() -> str:
    return ";".join(TRANSACTION_COLUMNS)


def serialize_client(rec: ClientRecord) -> str:
    return ";".join((rec.client_id, rec.kind.value, rec.opened.isoformat()))


def client_header() -> str:
    return ";".join(CLIENT_COLUMNS)


def filter_relevant(txs: Iterable[Transaction]) -> list[Transaction]:
    """Keep only movements that can carry laundering: ordinary transactions.

    Fees, commissions, interest and taxes are excluded. Order preserved,
    idempotent.
    """
    return [tx for tx in txs if tx.kind is TxKind.ORDINARY]


def iter_relevant(txs: Iterable[Transaction]) -> Iterator[Transaction]:
    for tx in txs:
        if tx.kind is TxKind.ORDINARY:
            yield tx


def segment_clients(
    txs: Iterable[Transaction],
    registry: dict[str, ClientRecord],
) -> tuple[list[Transaction], list[Transaction], list[RoutingError]]:
    """Split transactions into singular-person and legal-entity streams.

    Transactions for client ids absent from the registry are dropped from
    both outputs and reported, never silently defaulted.
    """
    singular: list[Transaction] = []
    entity: list[Transaction] = []
    unknown: dict[str, int] = {}
    for tx in txs:
        rec = registry.get(tx.client_id)
        if rec is None:
            unknown[tx.client_id] = unknown.get(tx.client_id, 0) + 1
        elif rec.kind is ClientKind.SINGULAR_PERSON:
            singular.append(tx)
        else:
            entity.append(tx)
    errors = [RoutingError(cid, n) for cid, n in sorted(unknown.items())]
    if errors:
        LOGGER.warning(
            "dropped %d transactions for %d unknown clients",
            sum(e.count for e in errors),
            len(errors),
        )
    return singular, entity, errors
