"""JSON-friendly encoding of domain objects for traces and persistence."""

from __future__ import annotations

from datetime import date
from typing import Any

from .model import (
    AccountKey,
    ClientKind,
    ClientProfile,
    ProfileClass,
    TRIPLE_ATTRIBUTES,
)
from .ruleengine import Suspicion, TriggeredRule


def profile_to_dict(profile: ClientProfile) -> dict[str, Any]:
    return {
        "key": profile.key.as_str(),
        "client_kind": profile.client_kind.value,
        "age_years": profile.account_age_years,
        "attributes": {
            name: list(profile.attribute(name).as_tuple())
            for name in TRIPLE_ATTRIBUTES
        },
    }


def profile_from_dict(doc: dict[str, Any]) -> ClientProfile:
    profile = ClientProfile(
        key=AccountKey.from_str(doc["key"]),
        client_kind=ClientKind(doc["client_kind"]),
        account_age_years=doc["age_years"],
    )
    for name, (total, mx, win) in doc["attributes"].items():
        t = profile.attribute(name)
        t.annual_total, t.monthly_max, t.window_value = total, mx, win
    return profile


def suspicion_to_dict(s: Suspicion) -> dict[str, Any]:
    return {
        "key": s.key.as_str(),
        "segment": s.segment.value,
        "analysis_class": s.analysis_class.value,
        "original_class": s.original_class.value,
        "triggered": [
            {"rule_id": t.rule_id, "text": t.text, "citation": t.citation}
            for t in s.triggered
        ],
        "profile": profile_to_dict(s.profile),
        "analysis_date": s.analysis_date.isoformat(),
        "mar": s.mar,
    }


def suspicion_from_dict(doc: dict[str, Any]) -> Suspicion:
    return Suspicion(
        key=AccountKey.from_str(doc["key"]),
        segment=ClientKind(doc["segment"]),
        analysis_class=ProfileClass(doc["analysis_class"]),
        original_class=ProfileClass(doc["original_class"]),
        triggered=[
            TriggeredRule(t["rule_id"], t["text"], t.get("citation", ""))
            for t in doc["triggered"]
        ],
        profile=profile_from_dict(doc["profile"]),
        analysis_date=date.fromisoformat(doc["analysis_date"]),
        mar=doc["mar"],
    )
