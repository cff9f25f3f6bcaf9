"""Pipeline orchestration: learning the model bundle and executing runs.

`learn_all` turns the raw input files into segment models, reference
profiles and the default rule bank. `run_analysis` executes the three
capture phases through the agent runtime and persists an immutable,
idempotent AnalysisRun.
"""

from __future__ import annotations

import logging
from datetime import date, datetime
from typing import Callable

from . import serde
from .agents import (
    ANALYST_ID,
    GCT_ID,
    AllScansComplete,
    AnalyzeRequest,
    ApdAgent,
    CtsAgent,
    DecisionOutcome,
    DecisionRecord,
    DecisionSource,
    GctAgent,
    Runtime,
    ScanMode,
    matrix_from_log,
)
from .datagen import read_ground_truth
from .ingest import filter_relevant, open_text, parse_clients, parse_transactions
from .learning import learn_segment, version_string
from .model import (
    AccountKey,
    ClientKind,
    ClientProfile,
    ClientRecord,
    DEFAULT_BAND_SCHEMA,
    ProfileClass,
)
from .profiler import Cycle, build_profiles, merge_window, window_profile
from .ruleengine import build_default_bank
from .store import AnalysisRun, Store, StoreError, run_fingerprint

LOGGER = logging.getLogger(__name__)

#: Cluster counts per segment for the default deployment.
DEFAULT_K = {ClientKind.SINGULAR_PERSON: 5, ClientKind.LEGAL_ENTITY: 4}

PRODUCT_OF_SEGMENT = {
    ClientKind.SINGULAR_PERSON: "singular-accounts",
    ClientKind.LEGAL_ENTITY: "entity-accounts",
}


def _load_registry(store: Store) -> dict[str, ClientRecord]:
    with open_text(store.input_path("clients")) as fh:
        clients, errors = parse_clients(fh)
    for err in errors[:5]:
        LOGGER.warning("client file line %d: %s", err.line_no, err.message)
    return clients


def _load_transactions(store: Store, stem: str):
    with open_text(store.input_path(stem)) as fh:
        txs, errors = parse_transactions(fh)
    for err in errors[:5]:
        LOGGER.warning("%s line %d: %s", stem, err.line_no, err.message)
    return filter_relevant(txs)


def learn_all(
    store: Store,
    seed: int = 0,
    as_of: date | None = None,
    k_by_segment: dict[ClientKind, int] | None = None,
) -> dict[ClientKind, "object"]:
    """Profile the reference cycle and learn both segment models.

    Also persists the reference profiles and the default rule bank, leaving
    the store ready for capture runs.
    """
    registry = _load_registry(store)
    txs = _load_transactions(store, "transactions_cycle1")
    if not txs:
        raise StoreError("reference transaction file has no usable movements")
    first = min(tx.timestamp for tx in txs)
    cycle = Cycle(first.year, 1)
    profiles = build_profiles(txs, cycle, DEFAULT_BAND_SCHEMA, registry)
    LOGGER.info("profiled %d accounts over %s", len(profiles), cycle)

    version = version_string(as_of or date.today())
    ks = k_by_segment or DEFAULT_K
    models = {}
    for segment in (ClientKind.SINGULAR_PERSON, ClientKind.LEGAL_ENTITY):
        subset = {k: p for k, p in profiles.items() if p.client_kind is segment}
        if len(subset) < ks[segment]:
            LOGGER.warning(
                "segment %s has %d profiles, fewer than k=%d; skipped",
                segment.value, len(subset), ks[segment],
            )
            continue
        models[segment] = learn_segment(
            subset, segment, k=ks[segment], seed=seed, version=version
        )
    if not models:
        raise StoreError("no segment had enough profiles to learn from")

    store.save_models(models)
    store.save_profiles(profiles)
    store.save_bank(build_default_bank(version=version))
    return models


def _rule_counts(bank) -> dict[str, int]:
    counts = {
        "normative": len(bank.normative),
        "profile": len(bank.profile_based),
    }
    for segment, model in bank.learned.items():
        counts[f"learned_{PRODUCT_OF_SEGMENT[segment].split('-')[0]}"] = (
            model.ruleset.n_rules
        )
    counts["total"] = bank.total_rules
    return counts


def run_analysis(
    store: Store,
    analysis_date: date,
    mar: float,
    scope: dict[str, str] | None = None,
    clock: Callable[[], datetime] | None = None,
) -> AnalysisRun:
    """Execute phases 1-3 through the agents and persist the run.

    Idempotent per (date, mar, scope, model/bank versions): if an identical
    run is already stored it is returned as-is, with no new side effects.
    """
    scope = scope or {"kind": "all"}
    clock = clock or datetime.now
    models = store.load_models()
    bank = store.load_bank()
    versions = {
        PRODUCT_OF_SEGMENT[seg]: model.version for seg, model in models.items()
    }
    versions["bank"] = bank.normative[0].version if bank.normative else ""
    run_id = run_fingerprint(analysis_date, mar, scope, versions)
    existing = store.find_run(run_id)
    if existing is not None:
        return existing

    times = {"started": clock().isoformat(sep=" ", timespec="seconds")}
    registry = _load_registry(store)
    base = store.load_profiles()
    current = _load_transactions(store, "transactions_cycle2")
    fragments = window_profile(current, analysis_date, DEFAULT_BAND_SCHEMA)
    merged = merge_window(base, fragments, registry, analysis_date)

    runtime = Runtime()
    gct = GctAgent(
        client_products={
            c.client_id: {PRODUCT_OF_SEGMENT[c.kind]} for c in registry.values()
        }
    )
    runtime.register(gct)
    cts_by_product: dict[str, CtsAgent] = {}
    for segment, model in models.items():
        product = PRODUCT_OF_SEGMENT[segment]
        profiles = {
            k: p for k, p in merged.items() if p.client_kind is segment
        }
        agent = CtsAgent(product, profiles, model, bank)
        cts_by_product[product] = agent
        gct.add_cts(product)
        runtime.register(agent)
    apd = ApdAgent(matrix_from_log(store.read_decisions()))
    runtime.register(apd)

    mode = ScanMode.BY_CLIENT if scope["kind"] == "client" else ScanMode.BY_TRANSACTION
    if scope["kind"] == "product":
        in_scope = cts_by_product.get(scope.get("product"))
        profile_count = len(in_scope.profiles) if in_scope else 0
    elif scope["kind"] == "client":
        profile_count = sum(
            1 for k in merged if k.client_id == scope.get("client")
        )
    else:
        profile_count = len(merged)
    runtime.send(
        GCT_ID,
        AnalyzeRequest(
            mode=mode,
            analysis_date=analysis_date,
            mar=mar,
            product=scope.get("product"),
            request_id=run_id,
            client_id=scope.get("client"),
        ),
    )
    runtime.run()
    done = next(
        e.msg for e in runtime.sink if isinstance(e.msg, AllScansComplete)
    )
    times["phase2"] = clock().isoformat(sep=" ", timespec="seconds")

    adjustments = {}
    for product, agent in cts_by_product.items():
        shift = agent.last_shift
        if shift is None:
            continue
        adjustments[product] = {
            "original": {c.value: n for c, n in shift.original.items()},
            "adjusted": {c.value: n for c, n in shift.adjusted.items()},
        }
    times["phase1"] = times["phase2"]  # phases 1 and 2 run in one capture pass

    outcomes = {o.suspicion_id: o for o in apd.outcomes}
    items = []
    for ordinal, suspicion in enumerate(done.suspicions, start=1):
        outcome = outcomes[suspicion.suspicion_id]
        items.append(
            {
                "ordinal": ordinal,
                "suspicion": serde.suspicion_to_dict(suspicion),
                "apd_verdict": outcome.verdict.value,
                "matrix_key": outcome.matrix_key,
            }
        )
        store.append_decision(
            DecisionRecord(
                suspicion_id=suspicion.suspicion_id,
                matrix_key=outcome.matrix_key,
                verdict=outcome.verdict,
                source=DecisionSource.AGENT,
                timestamp=times["phase2"],
            )
        )
    times["phase3"] = clock().isoformat(sep=" ", timespec="seconds")

    recall = None
    try:
        truth_path = store.inputs_dir / "ground_truth.csv"
        if scope["kind"] == "all" and truth_path.exists():
            truth = read_ground_truth(truth_path)
            if truth.labels:
                flagged = {s.key for s in done.suspicions}
                hit = sum(1 for key in truth.labels if key in flagged)
                recall = round(hit / len(truth.labels), 4)
    except OSError:  # pragma: no cover - best-effort metric
        pass

    run = AnalysisRun(
        run_id=run_id,
        analysis_date=analysis_date,
        mar=mar,
        scope=scope,
        bank_versions=versions,
        profile_count=profile_count,
        adjustments=adjustments,
        items=items,
        phase_times=times,
        rule_counts=_rule_counts(bank),
        recall=recall,
    )
    store.save_run(run)
    if done.errors:
        LOGGER.warning("run %s finished with errors: %s", run_id, done.errors)
    return run
