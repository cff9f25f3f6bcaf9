"""HTTP JSON API for the analyst triage workflow.

All routes live under /api/v1/. The API never computes detection results
itself: runs come from the orchestration pipeline, verdicts append to the
decision log, and profile suggestions round-trip through the evolution
agent's validation flow.
"""

from __future__ import annotations

import logging
import threading
from datetime import date, datetime
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .agents import DecisionRecord, DecisionSource, Verdict, ebp_evolve
from .learning import version_string
from .model import ClientKind, ProfileClass
from .report import render_phase_reports
from .service import PRODUCT_OF_SEGMENT, run_analysis
from .store import AnalysisRun, Store, StoreError

LOGGER = logging.getLogger(__name__)

SEGMENT_BY_NAME = {v: k for k, v in PRODUCT_OF_SEGMENT.items()}


class RunRequest(BaseModel):
    analysis_date: date
    mar: float = 0.0
    scope: dict[str, str] = Field(default_factory=lambda: {"kind": "all"})


class VerdictRequest(BaseModel):
    verdict: str
    note: str = ""


class ValidationRequest(BaseModel):
    accepted: list[str] = Field(default_factory=list)
    rejected: list[str] = Field(default_factory=list)


class WhatIfRequest(BaseModel):
    analysis_date: date
    mars: list[float]
    scope: dict[str, str] = Field(default_factory=lambda: {"kind": "all"})


def _run_summary(run: AnalysisRun) -> dict[str, Any]:
    return {
        "run_id": run.run_id,
        "analysis_date": run.analysis_date.isoformat(),
        "mar": run.mar,
        "scope": run.scope,
        "profile_count": run.profile_count,
        "suspicions": len(run.items),
        "phase_times": run.phase_times,
        "rule_counts": run.rule_counts,
        "recall": run.recall,
    }


def _item_view(
    run: AnalysisRun, item: dict[str, Any], analyst: dict[str, DecisionRecord]
) -> dict[str, Any]:
    suspicion = item["suspicion"]
    suspicion_id = f"{suspicion['analysis_date']}:{suspicion['key']}"
    record = analyst.get(suspicion_id)
    return {
        "ordinal": item["ordinal"],
        "of": len(run.items),
        "suspicion_id": suspicion_id,
        "suspicion": suspicion,
        "apd_verdict": item["apd_verdict"],
        "matrix_key": item["matrix_key"],
        "analyst_verdict": record.verdict.value if record else None,
    }


def create_app(
    store: Store,
    token: str | None = None,
    frontend_dir: Path | str | None = None,
) -> FastAPI:
    app = FastAPI(title="transaction monitoring service", version="1.0")
    # One analysis run at a time; API reads stay concurrent.
    run_lock = threading.Lock()

    def run_serialized(analysis_date: date, mar: float, scope: dict[str, str]) -> AnalysisRun:
        with run_lock:
            return run_analysis(store, analysis_date, mar, scope)

    async def require_token(request: Request) -> None:
        if token is None:
            return
        provided = request.headers.get("authorization", "")
        if provided != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or bad token")

    authed = Depends(require_token)

    def load_run_or_404(run_id: str) -> AnalysisRun:
        try:
            return store.load_run(run_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id}")

    @app.get("/api/v1/runs", dependencies=[authed])
    def list_runs() -> list[dict[str, Any]]:
        return [_run_summary(r) for r in store.list_runs()]

    @app.post("/api/v1/runs", dependencies=[authed])
    def start_run(req: RunRequest) -> dict[str, Any]:
        try:
            run = run_serialized(req.analysis_date, req.mar, req.scope)
        except StoreError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return _run_summary(run)

    @app.get("/api/v1/runs/{run_id}", dependencies=[authed])
    def run_status(run_id: str) -> dict[str, Any]:
        return _run_summary(load_run_or_404(run_id))

    @app.get("/api/v1/runs/{run_id}/report", dependencies=[authed])
    def run_report(run_id: str, masked: bool = True) -> dict[str, str]:
        return {"report": render_phase_reports(load_run_or_404(run_id), masked=masked)}

    @app.get("/api/v1/runs/{run_id}/queue", dependencies=[authed])
    def queue(
        run_id: str,
        rule: str | None = Query(default=None),
        profile_class: str | None = Query(default=None),
    ) -> dict[str, Any]:
        run = load_run_or_404(run_id)
        if profile_class is not None:
            try:
                ProfileClass(profile_class)
            except ValueError:
                raise HTTPException(status_code=422, detail="unknown profile class")
        analyst = store.analyst_verdicts()
        items = []
        for item in run.items:
            s = item["suspicion"]
            if rule and rule not in {t["rule_id"] for t in s["triggered"]}:
                continue
            if profile_class and s["analysis_class"] != profile_class:
                continue
            items.append(_item_view(run, item, analyst))
        return {"run_id": run_id, "total": len(run.items), "items": items}

    @app.get("/api/v1/runs/{run_id}/items/{ordinal}", dependencies=[authed])
    def item_detail(run_id: str, ordinal: int) -> dict[str, Any]:
        run = load_run_or_404(run_id)
        if not 1 <= ordinal <= len(run.items):
            raise HTTPException(status_code=404, detail="no such item")
        return _item_view(run, run.items[ordinal - 1], store.analyst_verdicts())

    @app.post("/api/v1/runs/{run_id}/items/{ordinal}/verdict", dependencies=[authed])
    def post_verdict(run_id: str, ordinal: int, req: VerdictRequest) -> dict[str, Any]:
        run = load_run_or_404(run_id)
        if not 1 <= ordinal <= len(run.items):
            raise HTTPException(status_code=404, detail="no such item")
        try:
            verdict = Verdict(req.verdict)
        except ValueError:
            raise HTTPException(status_code=422, detail=f"bad verdict {req.verdict!r}")
        if verdict is Verdict.ESCALATED:
            raise HTTPException(
                status_code=422, detail="analysts confirm or reject; escalation is automatic"
            )
        item = run.items[ordinal - 1]
        view = _item_view(run, item, store.analyst_verdicts())
        if view["analyst_verdict"] is not None:
            raise HTTPException(
                status_code=409,
                detail=f"item already decided: {view['analyst_verdict']}",
            )
        store.append_decision(
            DecisionRecord(
                suspicion_id=view["suspicion_id"],
                matrix_key=item["matrix_key"],
                verdict=verdict,
                source=DecisionSource.ANALYST,
                timestamp=datetime.now().isoformat(sep=" ", timespec="seconds"),
            )
        )
        return _item_view(run, item, store.analyst_verdicts())

    @app.get("/api/v1/suggestions", dependencies=[authed])
    def list_suggestions() -> dict[str, Any]:
        return {"candidates": store.load_suggestions()}

    @app.post("/api/v1/suggestions/refresh", dependencies=[authed])
    def refresh_suggestions() -> dict[str, Any]:
        """Re-learn clusters from the stored profiles and diff per segment."""
        models = store.load_models()
        profiles = store.load_profiles()
        candidates: list[dict] = []
        for segment, model in models.items():
            subset = {k: p for k, p in profiles.items() if p.client_kind is segment}
            suggestion = ebp_evolve(subset, model, k=model.clustering.k + 1)
            for c in suggestion.candidates:
                doc = dict(c)
                doc["segment"] = segment.value
                doc["id"] = f"{segment.value}-{doc['id']}"
                candidates.append(doc)
        store.save_suggestions(candidates)
        return {"candidates": candidates}

    @app.post("/api/v1/suggestions/validate", dependencies=[authed])
    def validate_suggestions(req: ValidationRequest) -> dict[str, Any]:
        pending = {c["id"]: c for c in store.load_suggestions()}
        unknown = [i for i in req.accepted + req.rejected if i not in pending]
        if unknown:
            raise HTTPException(status_code=404, detail=f"unknown candidates: {unknown}")
        applied = []
        models = store.load_models()
        for cid in req.accepted:
            candidate = pending.pop(cid)
            segment = ClientKind(candidate["segment"])
            model = models[segment]
            z = (
                np.array(candidate["centroid"]) - model.scaler.mean
            ) / model.scaler.std
            model.clustering.centroids = np.vstack([model.clustering.centroids, z])
            new_cluster = model.clustering.k
            model.clustering.k += 1
            model.classification.mapping[new_cluster] = ProfileClass.RISK1
            seq = int(model.version.rsplit(".", 1)[1]) + 1 if "." in model.version else 2
            model.version = version_string(date.today(), seq)
            applied.append(cid)
        for cid in req.rejected:
            pending.pop(cid, None)
        if applied:
            store.save_models(models)
        store.save_suggestions(list(pending.values()))
        return {"applied": applied, "remaining": list(pending)}

    @app.post("/api/v1/whatif", dependencies=[authed])
    def whatif(req: WhatIfRequest) -> dict[str, Any]:
        results = []
        for mar in req.mars:
            try:
                run = run_serialized(req.analysis_date, mar, req.scope)
            except StoreError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            results.append(
                {"mar": mar, "run_id": run.run_id, "suspicions": len(run.items)}
            )
        return {"results": results}

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount(
            "/", StaticFiles(directory=str(frontend_dir), html=True), name="frontend"
        )
    return app
