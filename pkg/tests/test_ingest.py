import gzip
import io

import pytest
from hypothesis import given, strategies as st

from amlmon import ingest
from amlmon.model import ClientKind, Direction, Destination, TxKind, parse_cents

from conftest import make_tx, make_registry

HEADER = ingest.transaction_header()
GOOD_LINE = "c1;0001;A1;2025-03-05T10:00:00;1234.56;D;3;TED;ORD"


def test_parse_empty_stream():
    assert ingest.parse_transactions([]) == ([], [])


def test_parse_single_line_field_by_field():
    txs, errors = ingest.parse_transactions([HEADER, GOOD_LINE])
    assert errors == []
    assert len(txs) == 1
    tx = txs[0]
    assert tx.client_id == "c1"
    assert tx.agency == "0001"
    assert tx.account == "A1"
    assert tx.timestamp.isoformat() == "2025-03-05T10:00:00"
    assert tx.amount_cents == 123456
    assert tx.direction is Direction.DEBIT
    assert tx.service_code == 3
    assert tx.destination is Destination.OTHER_BANK_TED
    assert tx.kind is TxKind.ORDINARY


def test_truncated_line_reported_not_fatal():
    txs, errors = ingest.parse_transactions([HEADER, GOOD_LINE, "c2;0001;A2"])
    assert len(txs) == 1
    assert len(errors) == 1
    assert errors[0].line_no == 3


def test_bad_enum_value_reported():
    bad = GOOD_LINE.replace(";ORD", ";XXX")
    txs, errors = ingest.parse_transactions([HEADER, bad])
    assert txs == []
    assert errors[0].line_no == 2


def test_missing_header_column_is_fatal():
    with pytest.raises(ingest.ConfigurationError):
        ingest.parse_transactions(["client_id;agency", "x;y"])


def test_explicit_schema_must_be_complete():
    with pytest.raises(ingest.ConfigurationError):
        ingest.parse_transactions([GOOD_LINE], schema={"client_id": 0})


def test_roundtrip_serialize_parse():
    tx = make_tx(amount="0.07", direction="D", destination="SB", kind="FEE")
    line = ingest.serialize_transaction(tx)
    txs, errors = ingest.parse_transactions([HEADER, line])
    assert errors == []
    assert txs[0] == tx


@given(
    cents=st.integers(min_value=0, max_value=10**10),
    direction=st.sampled_from(["D", "C"]),
    kind=st.sampled_from(["ORD", "FEE", "COM", "INT", "TAX"]),
)
def test_roundtrip_property(cents, direction, kind):
    tx = make_tx(amount=f"{cents // 100}.{cents % 100:02d}", direction=direction, kind=kind)
    line = ingest.serialize_transaction(tx)
    txs, errors = ingest.parse_transactions([HEADER, line])
    assert errors == [] and txs == [tx]


def test_gzip_detection(tmp_path):
    raw = (HEADER + "\n" + GOOD_LINE + "\n").encode("utf-8")
    plain = tmp_path / "plain.csv"
    plain.write_bytes(raw)
    gz = tmp_path / "data.bin"  # deliberately no .gz extension
    gz.write_bytes(gzip.compress(raw))
    for path in (plain, gz):
        with ingest.open_text(path) as fh:
            txs, errors = ingest.parse_transactions(fh)
        assert len(txs) == 1 and errors == []


def test_filter_relevant_keeps_only_ordinary():
    txs = [make_tx(kind=k) for k in ("ORD", "FEE", "TAX", "ORD")]
    out = ingest.filter_relevant(txs)
    assert out == [txs[0], txs[3]]


def test_filter_relevant_idempotent_and_shrinking():
    txs = [make_tx(kind=k) for k in ("ORD", "FEE", "COM", "INT", "TAX", "ORD")]
    once = ingest.filter_relevant(txs)
    assert ingest.filter_relevant(once) == once
    assert len(once) <= len(txs)


def test_segment_clients_split():
    registry = make_registry("p1") | make_registry("e1", kind="PJ")
    txs = [make_tx(client="p1")] * 3 + [make_tx(client="e1")] * 2
    singular, entity, errors = ingest.segment_clients(txs, registry)
    assert (len(singular), len(entity), errors) == (3, 2, [])


def test_segment_clients_empty():
    assert ingest.segment_clients([], {}) == ([], [], [])


def test_segment_unknown_client_dropped_and_reported():
    registry = make_registry("p1")
    txs = [make_tx(client="p1"), make_tx(client="ghost"), make_tx(client="ghost")]
    singular, entity, errors = ingest.segment_clients(txs, registry)
    assert len(singular) == 1 and entity == []
    assert len(errors) == 1
    assert errors[0].client_id == "ghost" and errors[0].count == 2
    # Partition: routed plus dropped equals input.
    assert len(singular) + len(entity) + sum(e.count for e in errors) == len(txs)


def test_client_registry_roundtrip():
    registry = make_registry("p1") | make_registry("e9", kind="PJ", opened="2001-06-15")
    lines = [ingest.client_header()] + [
        ingest.serialize_client(r) for r in registry.values()
    ]
    parsed, errors = ingest.parse_clients(lines)
    assert errors == [] and parsed == registry
