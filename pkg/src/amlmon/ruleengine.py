"""Operational rule bank and the two capture phases.

Phase 1 promotes reclassifiable profiles through the confusion-matrix
table (analysis-time only, the stored class never changes); phase 2
evaluates the bank against every window profile under the effective
limits produced by the additional risk margin.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable

import numpy as np

from . import predicates
from .learning import SegmentModel
from .model import (
    AccountKey,
    ClientKind,
    ClientProfile,
    LimitBasis,
    ProfileClass,
    TRIPLE_ATTRIBUTES,
    limit_basis,
)

RULE_ID_RE = re.compile(r"^[BP]CXX\d{4}\d{3}$")

ALL_CLASSES = frozenset(ProfileClass)
RISK_CLASSES = frozenset({ProfileClass.RISK1, ProfileClass.RISK2, ProfileClass.RISK3})
BASELINE_CLASSES = frozenset({ProfileClass.LOW_USAGE, ProfileClass.STANDARD})


class BankValidationError(Exception):
    pass


class MarginError(Exception):
    pass


@dataclass(frozen=True)
class OperationalRule:
    id: str
    version: str
    applicable_classes: frozenset[ProfileClass]
    predicate_src: str
    text: str
    citation: str = ""

    def __post_init__(self) -> None:
        if not RULE_ID_RE.match(self.id):
            raise BankValidationError(f"bad rule id: {self.id!r}")

    def compiled(self):
        node = predicates.parse(self.predicate_src)
        predicates.validate(node)
        return node


@dataclass
class RuleBank:
    normative: list[OperationalRule]
    profile_based: list[OperationalRule]
    learned: dict[ClientKind, "SegmentModel"] = field(default_factory=dict)

    @property
    def total_rules(self) -> int:
        learned = sum(m.ruleset.n_rules for m in self.learned.values())
        return len(self.normative) + len(self.profile_based) + learned

    def validate(self) -> list:
        """Compile every predicate up front; a bank that references an
        undeclared attribute is rejected before any evaluation."""
        compiled = []
        seen: set[str] = set()
        for rule in self.normative + self.profile_based:
            if rule.id in seen:
                raise BankValidationError(f"duplicate rule id: {rule.id}")
            seen.add(rule.id)
            try:
                compiled.append((rule, rule.compiled()))
            except predicates.PredicateError as exc:
                raise BankValidationError(f"{rule.id}: {exc}") from exc
        return compiled


def apply_mar(
    analysis_class: ProfileClass,
    profile: ClientProfile,
    mar: float,
) -> dict[str, float]:
    """Effective per-attribute limits after the additional risk margin.

    Risk2/Risk3 limits shrink from the monthly maximum, LowUsage/Standard
    from the annual total; Risk1 is the alert class and keeps raw monthly
    maxima regardless of the margin.
    """
    if not (0 <= mar < 100):
        raise MarginError(f"margin must be in [0, 100): {mar}")
    basis = limit_basis(analysis_class)
    factor = 1.0 if analysis_class is ProfileClass.RISK1 else 1.0 - mar / 100.0
    limits: dict[str, float] = {}
    for attr in TRIPLE_ATTRIBUTES:
        triple = profile.attribute(attr)
        base = (
            triple.monthly_max
            if basis is LimitBasis.MONTHLY_MAX
            else triple.annual_total
        )
        limits[attr] = base * factor
    return limits


def reclassify(
    profile: ClientProfile,
    original_class: ProfileClass,
    model: SegmentModel,
) -> ProfileClass:
    return model.reclass.resolve(
        original_class, np.asarray(profile.features(), dtype=float)
    )


@dataclass(frozen=True)
class TriggeredRule:
    rule_id: str
    text: str
    citation: str = ""


@dataclass
class Suspicion:
    key: AccountKey
    segment: ClientKind
    analysis_class: ProfileClass
    original_class: ProfileClass
    triggered: list[TriggeredRule]
    profile: ClientProfile
    analysis_date: date
    mar: float

    @property
    def suspicion_id(self) -> str:
        return f"{self.analysis_date.isoformat()}:{self.key.as_str()}"


@dataclass
class ClassShift:
    """Per-class profile counts before and after phase-1 reclassification."""

    original: dict[ProfileClass, int]
    adjusted: dict[ProfileClass, int]

    def delta(self, cls: ProfileClass) -> int:
        return self.adjusted.get(cls, 0) - self.original.get(cls, 0)


def capture(
    profiles: dict[AccountKey, ClientProfile],
    model: SegmentModel,
    bank: RuleBank,
    mar: float,
    analysis_date: date,
) -> tuple[list[Suspicion], ClassShift]:
    """Run both phases over one segment's window profiles.

    Deterministic and pure: suspicions come back sorted by account key,
    each listing every rule that fired for it.
    """
    compiled = bank.validate()
    keys = sorted(profiles)
    shift = ClassShift(
        original={cls: 0 for cls in ProfileClass},
        adjusted={cls: 0 for cls in ProfileClass},
    )
    if not keys:
        return [], shift
    X = np.asarray([profiles[k].features() for k in keys], dtype=float)
    original_classes = model.classify_matrix(X)
    suspicions: list[Suspicion] = []
    for i, key in enumerate(keys):
        profile = profiles[key]
        original = original_classes[i]
        analysis = model.reclass.resolve(original, X[i])
        shift.original[original] += 1
        shift.adjusted[analysis] += 1
        limits = apply_mar(analysis, profile, mar)
        triggered: list[TriggeredRule] = []
        for rule, node in compiled:
            if analysis not in rule.applicable_classes:
                continue
            if predicates.evaluate(node, profile, limits):
                triggered.append(TriggeredRule(rule.id, rule.text, rule.citation))
        if triggered:
            suspicions.append(
                Suspicion(
                    key=key,
                    segment=model.segment,
                    analysis_class=analysis,
                    original_class=original,
                    triggered=triggered,
                    profile=profile,
                    analysis_date=analysis_date,
                    mar=mar,
                )
            )
    return suspicions, shift


# ---------------------------------------------------------------------------
# Built-in bank: 5 normative-style rules + 20 profile-based templates.

def _norm(seq: int, version: str, predicate: str, text: str, citation: str = "") -> OperationalRule:
    return OperationalRule(
        id=f"BCXX{version[4:8]}{seq:03d}",
        version=version,
        applicable_classes=ALL_CLASSES,
        predicate_src=predicate,
        text=text,
        citation=citation,
    )


def _prof(
    seq: int, version: str, classes: frozenset[ProfileClass], predicate: str, text: str
) -> OperationalRule:
    return OperationalRule(
        id=f"PCXX{version[4:8]}{seq:03d}",
        version=version,
        applicable_classes=classes,
        predicate_src=predicate,
        text=text,
    )


def builtin_normative_rules(version: str = "01062026.01") -> list[OperationalRule]:
    """The five shipped normative-style rules.

    Round-amount repetition is not observable from the profile attributes,
    so its slot is a single-band repetition rule (every window movement in
    one value band), the closest expressible analogue.
    """
    return [
        _norm(
            1,
            version,
            "max(movl) >= 50 and window(movl) >= 1 and window(movl) <= 0.05 * max(movl)",
            "Sharp drop in movement for a high-activity profile",
            "CC.3542.1.IV.f",
        ),
        _norm(
            2,
            version,
            "window(band5) >= 10 and window(band5) >= 0.8 * window(movl)",
            "Movement concentrated just under the reporting threshold",
            "CC.3542.1.II.a",
        ),
        _norm(
            3,
            version,
            "window(pct_ted) >= 95 and window(movl) >= 6 and "
            "window(pct_deb) >= 60 and window(pct_deb) <= 140 and "
            "window(band4) + window(band5) + window(band6) >= 0.9 * window(movl)",
            "Large credits fully transferred out of the account",
            "CC.3542.1.III.c",
        ),
        _norm(
            4,
            version,
            "max(movl) <= 2 and window(movl) >= 15",
            "Burst of movement on a previously dormant account",
            "CC.3542.1.I.b",
        ),
        _norm(
            5,
            version,
            "window(movl) >= 12 and (window(band1) >= window(movl) or "
            "window(band2) >= window(movl) or window(band3) >= window(movl) or "
            "window(band4) >= window(movl) or window(band5) >= window(movl))",
            "Repetitive movement of near-identical values in a single bounded band",
            "CC.3542.1.II.d",
        ),
    ]


def builtin_profile_rules(version: str = "01062026.01") -> list[OperationalRule]:
    """Twenty profile-based rule templates parameterized by the effective
    limits: one burst rule per attribute for the risk classes (monthly-max
    basis) and for the baseline classes (annual basis), plus the outbound
    transfer family."""
    rules: list[OperationalRule] = []
    seq = 1
    rules.append(
        _prof(
            seq,
            version,
            RISK_CLASSES,
            "window(movl) > 1.5 * limit(movl) and window(movl) >= 10",
            "Monthly movement count above the historical monthly limit",
        )
    )
    seq += 1
    for b in range(1, 7):
        rules.append(
            _prof(
                seq,
                version,
                RISK_CLASSES,
                f"window(band{b}) > 2 * limit(band{b}) and window(band{b}) >= 6",
                f"Value band {b} movement above the historical monthly limit",
            )
        )
        seq += 1
    rules.append(
        _prof(
            seq,
            version,
            RISK_CLASSES,
            "window(serv) > 2 * limit(serv) and window(serv) >= 5",
            "Distinct services used far above the historical monthly limit",
        )
    )
    seq += 1
    rules.append(
        _prof(
            seq,
            version,
            RISK_CLASSES,
            "window(pct_ted) > limit(pct_ted) and "
            "window(band4) + window(band5) + window(band6) >= 0.9 * window(movl)",
            "Outbound transfer share above monthly maximum with movement "
            "concentrated in the top bands (risk profiles)",
        )
    )
    seq += 1
    rules.append(
        _prof(
            seq,
            version,
            RISK_CLASSES,
            "window(pct_doc) > limit(pct_doc) and "
            "window(band4) + window(band5) + window(band6) >= 0.9 * window(movl)",
            "Same-bank transfer share above monthly maximum with movement "
            "concentrated in the top bands (risk profiles)",
        )
    )
    seq += 1
    rules.append(
        _prof(
            seq,
            version,
            RISK_CLASSES,
            "window(pct_deb) > 2 * limit(pct_deb) and window(pct_deb) >= 500 "
            "and window(movl) >= 8",
            "Debit ratio spiking past every observed month",
        )
    )
    seq += 1
    rules.append(
        _prof(
            seq,
            version,
            BASELINE_CLASSES,
            "window(movl) > limit(movl) and window(movl) >= 10",
            "Window movement count exceeding the whole reference year",
        )
    )
    seq += 1
    for b in range(1, 7):
        rules.append(
            _prof(
                seq,
                version,
                BASELINE_CLASSES,
                f"window(band{b}) > limit(band{b}) and window(band{b}) >= 5",
                f"Value band {b} window movement exceeding the whole reference year",
            )
        )
        seq += 1
    rules.append(
        _prof(
            seq,
            version,
            BASELINE_CLASSES,
            "window(serv) > limit(serv) and window(serv) >= 5",
            "Distinct services used exceeding the whole reference year",
        )
    )
    seq += 1
    rules.append(
        _prof(
            seq,
            version,
            BASELINE_CLASSES,
            "window(pct_ted) > limit(pct_ted) and window(pct_ted) >= 90 "
            "and window(movl) >= 8",
            "Near-total outbound transfer share on a baseline profile",
        )
    )
    assert seq == 20, seq
    return rules


def build_default_bank(
    learned: dict[ClientKind, SegmentModel] | None = None,
    version: str = "01062026.01",
) -> RuleBank:
    return RuleBank(
        normative=builtin_normative_rules(version),
        profile_based=builtin_profile_rules(version),
        learned=dict(learned or {}),
    )


# ---------------------------------------------------------------------------
# Rule bank file: id|version|classes|predicate|text|citation

def _classes_repr(classes: frozenset[ProfileClass]) -> str:
    if classes == ALL_CLASSES:
        return "*"
    return ",".join(sorted(c.value for c in classes))


def _classes_parse(text: str) -> frozenset[ProfileClass]:
    if text.strip() == "*":
        return ALL_CLASSES
    return frozenset(ProfileClass(part.strip()) for part in text.split(","))


def write_bank_file(rules: Iterable[OperationalRule], path: Path) -> None:
    lines = [
        "|".join(
            (
                r.id,
                r.version,
                _classes_repr(r.applicable_classes),
                r.predicate_src,
                r.text,
                r.citation,
            )
        )
        for r in rules
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_bank_file(path: Path) -> list[OperationalRule]:
    rules: list[OperationalRule] = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("|")
        if len(parts) != 6:
            raise BankValidationError(f"{path}:{line_no}: expected 6 fields")
        rule_id, version, classes, predicate, text, citation = parts
        rules.append(
            OperationalRule(
                id=rule_id,
                version=version,
                applicable_classes=_classes_parse(classes),
                predicate_src=predicate,
                text=text,
                citation=citation,
            )
        )
    return rules
