"""Single-directory embedded store for models, rule banks, runs and decisions.

Layout under the data root:

    inputs/                 raw files consumed by learn/capture
    models/<segment>/       learned segment models (versioned JSON)
    bank/normative.rules    pipe-delimited operational rules
    bank/profile.rules
    profiles/annual.csv     the annual reference profiles
    runs/<run_id>.json      immutable analysis runs
    decisions.ndjson        append-only analyst/agent decision log
    suggestions.json        pending profile-evolution suggestions

Runs are idempotent by fingerprint: starting a run with parameters identical
to a stored one returns the stored run. The decision matrix is never stored;
it is folded from the log on demand (event sourcing).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any

from .agents import DecisionRecord
from .learning import SEGMENT_DIRS, SegmentModel, load_segment_model, save_segment_model
from .model import AccountKey, ClientKind, ClientProfile
from .profiler import read_profiles, write_profiles
from .ruleengine import OperationalRule, RuleBank, read_bank_file, write_bank_file

LOGGER = logging.getLogger(__name__)

DATA_DIR_ENV = "AMLMON_DATA"


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "data"))


class StoreError(Exception):
    """Missing or malformed store content, with a setup hint."""


@dataclass
class AnalysisRun:
    """One immutable three-phase capture run."""

    run_id: str
    analysis_date: date
    mar: float
    scope: dict[str, str]
    bank_versions: dict[str, str]
    profile_count: int
    adjustments: dict[str, dict[str, dict[str, int]]]  # segment -> orig/adj -> class -> n
    items: list[dict[str, Any]]  # ordered triage items (suspicion + APD verdict)
    phase_times: dict[str, str]
    rule_counts: dict[str, int] = field(default_factory=dict)
    recall: float | None = None

    def fingerprint(self) -> str:
        return run_fingerprint(
            self.analysis_date, self.mar, self.scope, self.bank_versions
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "analysis_date": self.analysis_date.isoformat(),
            "mar": self.mar,
            "scope": self.scope,
            "bank_versions": self.bank_versions,
            "profile_count": self.profile_count,
            "adjustments": self.adjustments,
            "items": self.items,
            "phase_times": self.phase_times,
            "rule_counts": self.rule_counts,
            "recall": self.recall,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "AnalysisRun":
        return cls(
            run_id=doc["run_id"],
            analysis_date=date.fromisoformat(doc["analysis_date"]),
            mar=doc["mar"],
            scope=doc["scope"],
            bank_versions=doc["bank_versions"],
            profile_count=doc["profile_count"],
            adjustments=doc["adjustments"],
            items=doc["items"],
            phase_times=doc["phase_times"],
            rule_counts=doc.get("rule_counts", {}),
            recall=doc.get("recall"),
        )


def run_fingerprint(
    analysis_date: date, mar: float, scope: dict[str, str], versions: dict[str, str]
) -> str:
    payload = json.dumps(
        {
            "date": analysis_date.isoformat(),
            "mar": mar,
            "scope": scope,
            "versions": versions,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


class Store:
    def __init__(self, root: Path | str | None = None):
        self.root = Path(root) if root is not None else default_data_dir()

    # -- layout helpers --

    @property
    def inputs_dir(self) -> Path:
        return self.root / "inputs"

    @property
    def models_dir(self) -> Path:
        return self.root / "models"

    @property
    def bank_dir(self) -> Path:
        return self.root / "bank"

    @property
    def runs_dir(self) -> Path:
        return self.root / "runs"

    @property
    def profiles_path(self) -> Path:
        return self.root / "profiles" / "annual.csv"

    @property
    def decisions_path(self) -> Path:
        return self.root / "decisions.ndjson"

    @property
    def suggestions_path(self) -> Path:
        return self.root / "suggestions.json"

    def input_path(self, stem: str) -> Path:
        """Input file by stem, accepting plain or gzip variants."""
        for suffix in (".csv", ".csv.gz"):
            path = self.inputs_dir / f"{stem}{suffix}"
            if path.exists():
                return path
        raise StoreError(
            f"missing input {stem}.csv under {self.inputs_dir}; "
            "generate one with 'amlmon datagen' or copy your extracts there"
        )

    # -- models & banks --

    def save_models(self, models: dict[ClientKind, SegmentModel]) -> None:
        for model in models.values():
            save_segment_model(model, self.models_dir)

    def load_models(self) -> dict[ClientKind, SegmentModel]:
        models: dict[ClientKind, SegmentModel] = {}
        for segment, name in SEGMENT_DIRS.items():
            if (self.models_dir / name / "clustering.json").exists():
                models[segment] = load_segment_model(self.models_dir, segment)
        if not models:
            raise StoreError(
                f"no learned models under {self.models_dir}; run 'amlmon learn' first"
            )
        return models

    def save_bank(self, bank: RuleBank) -> None:
        self.bank_dir.mkdir(parents=True, exist_ok=True)
        write_bank_file(bank.normative, self.bank_dir / "normative.rules")
        write_bank_file(bank.profile_based, self.bank_dir / "profile.rules")

    def load_bank(self) -> RuleBank:
        normative = self.bank_dir / "normative.rules"
        profile = self.bank_dir / "profile.rules"
        if not normative.exists() or not profile.exists():
            raise StoreError(
                f"rule bank files missing under {self.bank_dir}; run 'amlmon learn' first"
            )
        bank = RuleBank(
            normative=read_bank_file(normative),
            profile_based=read_bank_file(profile),
            learned=self.load_models(),
        )
        bank.validate()
        return bank

    def save_profiles(self, profiles: dict[AccountKey, ClientProfile]) -> None:
        self.profiles_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.profiles_path, "w", encoding="utf-8") as fh:
            write_profiles(profiles, fh)

    def load_profiles(self) -> dict[AccountKey, ClientProfile]:
        if not self.profiles_path.exists():
            raise StoreError(
                f"no reference profiles at {self.profiles_path}; run 'amlmon learn' first"
            )
        with open(self.profiles_path, encoding="utf-8") as fh:
            return read_profiles(fh)

    # -- runs --

    def save_run(self, run: AnalysisRun) -> None:
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        path = self.runs_dir / f"{run.run_id}.json"
        path.write_text(
            json.dumps(run.to_dict(), sort_keys=True, indent=1) + "\n", encoding="utf-8"
        )

    def load_run(self, run_id: str) -> AnalysisRun:
        path = self.runs_dir / f"{run_id}.json"
        if not path.exists():
            raise KeyError(run_id)
        return AnalysisRun.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def list_runs(self) -> list[AnalysisRun]:
        if not self.runs_dir.exists():
            return []
        runs = [
            AnalysisRun.from_dict(json.loads(p.read_text(encoding="utf-8")))
            for p in sorted(self.runs_dir.glob("*.json"))
        ]
        runs.sort(key=lambda r: r.phase_times.get("started", ""))
        return runs

    def find_run(self, fingerprint: str) -> AnalysisRun | None:
        for run in self.list_runs():
            if run.run_id == fingerprint:
                return run
        return None

    # -- decision log --

    def append_decision(self, record: DecisionRecord) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.decisions_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")

    def read_decisions(self) -> list[DecisionRecord]:
        if not self.decisions_path.exists():
            return []
        records = []
        with open(self.decisions_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    records.append(DecisionRecord.from_dict(json.loads(line)))
        return records

    def analyst_verdicts(self) -> dict[str, DecisionRecord]:
        """Latest-wins is unnecessary: analyst verdicts are write-once."""
        out: dict[str, DecisionRecord] = {}
        for record in self.read_decisions():
            if record.source.value == "analyst" and record.suspicion_id not in out:
                out[record.suspicion_id] = record
        return out

    # -- profile suggestions --

    def save_suggestions(self, candidates: list[dict]) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        self.suggestions_path.write_text(
            json.dumps({"candidates": candidates}, sort_keys=True, indent=1) + "\n",
            encoding="utf-8",
        )

    def load_suggestions(self) -> list[dict]:
        if not self.suggestions_path.exists():
            return []
        return json.loads(self.suggestions_path.read_text(encoding="utf-8"))["candidates"]
