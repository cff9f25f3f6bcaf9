from __future__ import annotations

from datetime import date, datetime

import pytest

from amlmon.model import (
    ClientKind,
    ClientRecord,
    Destination,
    Direction,
    DEFAULT_BAND_SCHEMA,
    Transaction,
    TxKind,
    parse_cents,
)


def make_tx(
    client="c1",
    agency="0001",
    account="A1",
    ts="2025-03-05T10:00:00",
    amount="100.00",
    direction="C",
    service=1,
    destination="-",
    kind="ORD",
) -> Transaction:
    return Transaction(
        client_id=client,
        agency=agency,
        account=account,
        timestamp=datetime.fromisoformat(ts),
        amount_cents=parse_cents(amount),
        direction=Direction(direction),
        service_code=service,
        destination=Destination(destination),
        kind=TxKind(kind),
    )


def make_registry(*ids, kind="PF", opened="2010-01-01") -> dict[str, ClientRecord]:
    return {
        cid: ClientRecord(cid, ClientKind(kind), date.fromisoformat(opened))
        for cid in ids
    }


@pytest.fixture
def band_schema():
    return DEFAULT_BAND_SCHEMA


def make_profile(key=None, kind=ClientKind.SINGULAR_PERSON, **attrs):
    """Profile with attr triples given as name=(total, max, window)."""
    from amlmon.model import AccountKey, ClientProfile

    profile = ClientProfile(
        key=key or AccountKey("c", "0001", "A"),
        client_kind=kind,
        account_age_years=attrs.pop("age", 5),
    )
    for name, (total, mx, win) in attrs.items():
        t = profile.attribute(name)
        t.annual_total, t.monthly_max, t.window_value = (
            float(total),
            float(mx),
            float(win),
        )
    return profile


def trivial_model(
    segment=ClientKind.SINGULAR_PERSON,
    cls=None,
    reclass_entries=(),
):
    """Segment model whose rule set places every profile in one class."""
    import numpy as np

    from amlmon.induction import ClassificationRule, InducedRuleSet, RuleAlgorithm
    from amlmon.kmeans import KMeansResult
    from amlmon.learning import (
        ProfileClassification,
        ReclassTable,
        Scaler,
        SegmentModel,
    )
    from amlmon.model import FEATURE_NAMES, ProfileClass

    cls = cls or ProfileClass.STANDARD
    d = len(FEATURE_NAMES)
    return SegmentModel(
        segment=segment,
        scaler=Scaler(mean=np.zeros(d), std=np.ones(d)),
        clustering=KMeansResult(
            k=1,
            centroids=np.zeros((1, d)),
            labels=np.zeros(0, dtype=int),
            inertia=0.0,
            n_iter=0,
            inertia_history=[],
        ),
        assignment={},
        ruleset=InducedRuleSet(
            RuleAlgorithm.DECISION_LIST, [ClassificationRule((), 0)], 0
        ),
        classification=ProfileClassification(segment, {0: cls}),
        reclass=ReclassTable(entries=list(reclass_entries)),
        version="01062026.01",
    )
