"""Segment learning pipeline: cluster annual profiles, induce rule sets,
map clusters to risk classes and derive the reclassification table.

Everything downstream treats the persisted model bundle as immutable; a
fixed seed and identical input reproduce it byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from .induction import (
    ClassificationRule,
    Condition,
    InducedRuleSet,
    RuleAlgorithm,
    induce_decision_list,
    induce_decision_tree,
    select_best,
)
from .kmeans import KMeansResult, kmeans
from .model import (
    AccountKey,
    ClientKind,
    ClientProfile,
    FEATURE_NAMES,
    ProfileClass,
    is_reclassifiable,
)

_IDX = {name: i for i, name in enumerate(FEATURE_NAMES)}

#: Class filling order when a segment has fewer clusters than classes.
#: Risk1 (the alert class) is the first one omitted, mirroring segments
#: where no alert cluster exists.
_ASSIGN_ORDER = (
    ProfileClass.STANDARD,
    ProfileClass.RISK3,
    ProfileClass.LOW_USAGE,
    ProfileClass.RISK2,
    ProfileClass.RISK1,
)


def version_string(day: date, seq: int = 1) -> str:
    return f"{day.strftime('%d%m%Y')}.{seq:02d}"


@dataclass
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        std = X.std(axis=0)
        std[std == 0.0] = 1.0
        return cls(mean=X.mean(axis=0), std=std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


@dataclass
class ProfileClassification:
    segment: ClientKind
    mapping: dict[int, ProfileClass]
    confirmed: bool = False

    def class_of(self, cluster: int) -> ProfileClass:
        return self.mapping[cluster]


@dataclass(frozen=True)
class ReclassEntry:
    rule: ClassificationRule
    from_class: ProfileClass
    to_class: ProfileClass


@dataclass
class ReclassTable:
    entries: list[ReclassEntry] = field(default_factory=list)

    def resolve(self, original: ProfileClass, row: np.ndarray) -> ProfileClass:
        """Analysis-time class: first matching entry wins, the stored
        class is never touched. Risk2/Risk3 originals are identity."""
        if not is_reclassifiable(original):
            return original
        for entry in self.entries:
            if entry.from_class is original and entry.rule.matches_row(row):
                return entry.to_class
        return original


@dataclass
class SegmentModel:
    segment: ClientKind
    scaler: Scaler
    clustering: KMeansResult
    assignment: dict[AccountKey, int]
    ruleset: InducedRuleSet
    classification: ProfileClassification
    reclass: ReclassTable
    version: str

    def classify_matrix(self, X: np.ndarray) -> list[ProfileClass]:
        labels = self.ruleset.predict(np.asarray(X, dtype=float))
        fallback = self.classification.mapping.get(0, ProfileClass.STANDARD)
        return [
            self.classification.mapping.get(int(c), fallback) for c in labels
        ]


def feature_matrix(
    profiles: dict[AccountKey, ClientProfile],
) -> tuple[list[AccountKey], np.ndarray]:
    keys = sorted(profiles)
    if not keys:
        return [], np.zeros((0, len(FEATURE_NAMES)))
    X = np.array([profiles[k].features() for k in keys], dtype=float)
    return keys, X


def map_risk(
    labels: np.ndarray, X_raw: np.ndarray, k: int, segment: ClientKind
) -> ProfileClassification:
    """Heuristic cluster-to-class mapping, emitted for human confirmation.

    Standard is the most populated cluster; Risk3 combines heavy top-band
    activity with outbound transfer share; LowUsage is the least active;
    Risk2 concentrates movements just under the top band threshold; any
    remaining clusters are alerts (Risk1).
    """
    pops = np.bincount(labels, minlength=k).astype(float)
    means = np.zeros((k, X_raw.shape[1]))
    for c in range(k):
        mask = labels == c
        if mask.any():
            means[c] = X_raw[mask].mean(axis=0)
    movl = means[:, _IDX["movl"]]
    high_bands = means[:, [_IDX["band4"], _IDX["band5"], _IDX["band6"]]].sum(axis=1)
    ted = means[:, _IDX["pct_ted"]]
    band5_share = means[:, _IDX["band5"]] / np.maximum(movl, 1.0)

    scores = {
        ProfileClass.STANDARD: pops,
        ProfileClass.RISK3: high_bands * (ted + 1.0),
        ProfileClass.LOW_USAGE: -movl,
        ProfileClass.RISK2: band5_share,
    }
    mapping: dict[int, ProfileClass] = {}
    available = set(range(k))
    for cls in _ASSIGN_ORDER:
        if not available:
            break
        if cls is ProfileClass.RISK1:
            for c in sorted(available):
                mapping[c] = ProfileClass.RISK1
            available.clear()
            break
        score = scores[cls]
        choice = min(sorted(available), key=lambda c: (-score[c], c))
        mapping[choice] = cls
        available.discard(choice)
    return ProfileClassification(segment=segment, mapping=mapping)


def _rule_coverage(ruleset: InducedRuleSet, X: np.ndarray) -> list[np.ndarray]:
    """Row masks covered by each rule under the set's match semantics."""
    open_rows = np.ones(len(X), dtype=bool)
    covers: list[np.ndarray] = []
    for rule in ruleset.rules:
        hit = open_rows & rule.mask(X)
        covers.append(hit)
        open_rows &= ~hit
    return covers


def build_reclass_table(
    ruleset: InducedRuleSet,
    X: np.ndarray,
    labels: np.ndarray,
    classification: ProfileClassification,
) -> ReclassTable:
    """Confusion-matrix derived promotions: a rule predicting a risk
    cluster that also covers training members of reclassifiable classes
    yields one entry per (rule, covered class)."""
    covers = _rule_coverage(ruleset, np.asarray(X, dtype=float))
    true_classes = np.array(
        [classification.mapping[int(c)].value for c in labels]
    )
    risk2_entries: list[ReclassEntry] = []
    risk3_entries: list[ReclassEntry] = []
    for rule, cover in zip(ruleset.rules, covers):
        to_cls = classification.mapping.get(rule.label)
        if to_cls not in (ProfileClass.RISK2, ProfileClass.RISK3):
            continue
        covered = true_classes[cover]
        for cls in (ProfileClass.LOW_USAGE, ProfileClass.STANDARD, ProfileClass.RISK1):
            if cls is to_cls:
                continue
            if (covered == cls.value).any():
                entry = ReclassEntry(rule, cls, to_cls)
                (risk3_entries if to_cls is ProfileClass.RISK3 else risk2_entries).append(entry)
    # Higher-severity targets first: ties resolve toward the higher risk.
    return ReclassTable(entries=risk3_entries + risk2_entries)


def learn_segment(
    profiles: dict[AccountKey, ClientProfile],
    segment: ClientKind,
    k: int,
    seed: int = 0,
    version: str = "",
) -> SegmentModel:
    """Full per-segment pipeline: standardize, cluster, induce with both
    algorithms, select the better set, map risk and derive reclassing."""
    keys, X_raw = feature_matrix(profiles)
    if len(keys) < k:
        raise ValueError("fewer profiles than clusters requested")
    scaler = Scaler.fit(X_raw)
    clustering = kmeans(scaler.transform(X_raw), k, seed=seed)
    labels = clustering.labels
    candidates = [
        induce_decision_list(X_raw, labels, seed=seed),
        induce_decision_tree(X_raw, labels, seed=seed),
    ]
    best = select_best(candidates)
    best.version = version
    classification = map_risk(labels, X_raw, k, segment)
    reclass = build_reclass_table(best, X_raw, labels, classification)
    return SegmentModel(
        segment=segment,
        scaler=scaler,
        clustering=clustering,
        assignment={key: int(c) for key, c in zip(keys, labels)},
        ruleset=best,
        classification=classification,
        reclass=reclass,
        version=version,
    )


@dataclass
class SweepEntry:
    k: int
    clustering: KMeansResult
    ruleset: InducedRuleSet


def sweep_k(
    X_raw: np.ndarray,
    k_range: range | list[int] | None = None,
    seed: int = 0,
) -> list[SweepEntry]:
    """Run the clustering + induction pipeline across a k range.

    The default range 2..12 gives the attribute-count-minus-one executions;
    the chosen k is a human decision persisted with the model.
    """
    if k_range is None:
        k_range = range(2, 13)
    X_raw = np.asarray(X_raw, dtype=float)
    scaler = Scaler.fit(X_raw)
    Z = scaler.transform(X_raw)
    entries: list[SweepEntry] = []
    for k in k_range:
        clustering = kmeans(Z, k, seed=seed)
        best = select_best(
            [
                induce_decision_list(X_raw, clustering.labels, seed=seed),
                induce_decision_tree(X_raw, clustering.labels, seed=seed),
            ]
        )
        entries.append(SweepEntry(k=k, clustering=clustering, ruleset=best))
    return entries


# ---------------------------------------------------------------------------
# Model bundle persistence: one directory per segment, versioned JSON text.

SEGMENT_DIRS = {
    ClientKind.SINGULAR_PERSON: "singular",
    ClientKind.LEGAL_ENTITY: "entity",
}


def _dump(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )


def _rules_payload(rules: list[ClassificationRule]) -> list[dict]:
    return [
        {
            "conditions": [[c.feature, c.op, c.threshold] for c in r.conditions],
            "label": r.label,
            "coverage": r.coverage,
        }
        for r in rules
    ]


def _rules_from_payload(payload: list[dict]) -> list[ClassificationRule]:
    return [
        ClassificationRule(
            tuple(Condition(int(f), op, float(t)) for f, op, t in r["conditions"]),
            int(r["label"]),
            int(r["coverage"]),
        )
        for r in payload
    ]


def save_segment_model(model: SegmentModel, root: Path) -> Path:
    seg_dir = Path(root) / SEGMENT_DIRS[model.segment]
    seg_dir.mkdir(parents=True, exist_ok=True)
    _dump(
        seg_dir / "clustering.json",
        {
            "version": model.version,
            "k": model.clustering.k,
            "features": list(FEATURE_NAMES),
            "scaler_mean": model.scaler.mean.tolist(),
            "scaler_std": model.scaler.std.tolist(),
            "centroids": model.clustering.centroids.tolist(),
            "inertia": model.clustering.inertia,
            "cluster_sizes": np.bincount(
                model.clustering.labels, minlength=model.clustering.k
            ).tolist(),
        },
    )
    _dump(
        seg_dir / "ruleset.json",
        {
            "version": model.version,
            "algorithm": model.ruleset.algorithm.value,
            "misclassified": model.ruleset.misclassified,
            "rules": _rules_payload(model.ruleset.rules),
        },
    )
    _dump(
        seg_dir / "classification.json",
        {
            "version": model.version,
            "segment": model.segment.value,
            "confirmed": model.classification.confirmed,
            "mapping": {str(c): cls.value for c, cls in model.classification.mapping.items()},
        },
    )
    _dump(
        seg_dir / "reclass.json",
        {
            "version": model.version,
            "entries": [
                {
                    "rule": _rules_payload([e.rule])[0],
                    "from": e.from_class.value,
                    "to": e.to_class.value,
                }
                for e in model.reclass.entries
            ],
        },
    )
    return seg_dir


def load_segment_model(root: Path, segment: ClientKind) -> SegmentModel:
    seg_dir = Path(root) / SEGMENT_DIRS[segment]
    clustering_doc = json.loads((seg_dir / "clustering.json").read_text())
    rules_doc = json.loads((seg_dir / "ruleset.json").read_text())
    class_doc = json.loads((seg_dir / "classification.json").read_text())
    reclass_doc = json.loads((seg_dir / "reclass.json").read_text())
    centroids = np.array(clustering_doc["centroids"], dtype=float)
    clustering = KMeansResult(
        k=clustering_doc["k"],
        centroids=centroids,
        labels=np.zeros(0, dtype=int),
        inertia=clustering_doc["inertia"],
        n_iter=0,
        inertia_history=[],
    )
    ruleset = InducedRuleSet(
        algorithm=RuleAlgorithm(rules_doc["algorithm"]),
        rules=_rules_from_payload(rules_doc["rules"]),
        misclassified=rules_doc["misclassified"],
        version=rules_doc["version"],
    )
    classification = ProfileClassification(
        segment=segment,
        mapping={int(c): ProfileClass(v) for c, v in class_doc["mapping"].items()},
        confirmed=class_doc["confirmed"],
    )
    reclass = ReclassTable(
        entries=[
            ReclassEntry(
                _rules_from_payload([e["rule"]])[0],
                ProfileClass(e["from"]),
                ProfileClass(e["to"]),
            )
            for e in reclass_doc["entries"]
        ]
    )
    return SegmentModel(
        segment=segment,
        scaler=Scaler(
            mean=np.array(clustering_doc["scaler_mean"]),
            std=np.array(clustering_doc["scaler_std"]),
        ),
        clustering=clustering,
        assignment={},
        ruleset=ruleset,
        classification=classification,
        reclass=reclass,
        version=clustering_doc["version"],
    )
