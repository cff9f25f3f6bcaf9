"""Message-passing runtime for the capture/decision agent architecture.

Four roles cooperate through an in-process mailbox with at-least-once
local delivery: per-product capture agents (CTS), the capture manager
(GCT, sole holder of the CTS roster), the decision-support agent (APD)
with its learned decision matrix, and the profile-evolution agent (EBP).
Each agent is a single-threaded state machine owning its state; handlers
are idempotent per message id, so delivery order and duplication only
affect scheduling, never results.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field, replace
from datetime import date
from typing import Any, Callable

import numpy as np

from . import serde
from .learning import SegmentModel
from .kmeans import kmeans
from .model import AccountKey, ClientProfile, ProfileClass, TRIPLE_ATTRIBUTES
from .ruleengine import RuleBank, Suspicion, capture


class Role(str, enum.Enum):
    CTS = "cts"
    GCT = "gct"
    APD = "apd"
    EBP = "ebp"
    ANALYST = "analyst"  # sink for outcomes and escalations


@dataclass(frozen=True, slots=True)
class AgentId:
    role: Role
    product: str | None = None

    def __str__(self) -> str:
        return f"{self.role.value}:{self.product}" if self.product else self.role.value


GCT_ID = AgentId(Role.GCT)
APD_ID = AgentId(Role.APD)
EBP_ID = AgentId(Role.EBP)
ANALYST_ID = AgentId(Role.ANALYST)


class ScanMode(str, enum.Enum):
    BY_TRANSACTION = "by_transaction"
    BY_CLIENT = "by_client"


class Verdict(str, enum.Enum):
    CONFIRMED = "confirmed"
    REJECTED = "rejected"
    ESCALATED = "escalated"


class DecisionSource(str, enum.Enum):
    AGENT = "agent"
    ANALYST = "analyst"


# --- message union ----------------------------------------------------------

@dataclass(frozen=True)
class AnalyzeRequest:
    mode: ScanMode
    analysis_date: date
    mar: float
    product: str | None
    request_id: str
    client_id: str | None = None


@dataclass(frozen=True)
class ClientScanRequest:
    request_id: str
    client_id: str
    product: str
    analysis_date: date
    mar: float


@dataclass(frozen=True)
class SuspicionFound:
    request_id: str
    suspicion: Suspicion
    product: str


@dataclass(frozen=True)
class ScanResult:
    request_id: str
    product: str
    suspicions: tuple[Suspicion, ...]
    scanned: int
    error: str | None = None


@dataclass(frozen=True)
class AllScansComplete:
    request_id: str
    suspicions: tuple[Suspicion, ...]
    scanned: int
    errors: tuple[str, ...] = ()


@dataclass(frozen=True)
class DecisionOutcome:
    suspicion_id: str
    verdict: Verdict
    source: DecisionSource
    matrix_key: str
    request_id: str = ""


@dataclass(frozen=True)
class ProfileSuggestion:
    candidates: tuple[dict, ...]


@dataclass(frozen=True)
class ProfileValidation:
    accepted: tuple[str, ...]
    rejected: tuple[str, ...]


Message = (
    AnalyzeRequest
    | ClientScanRequest
    | SuspicionFound
    | ScanResult
    | AllScansComplete
    | DecisionOutcome
    | ProfileSuggestion
    | ProfileValidation
)


def message_to_dict(msg: Message) -> dict[str, Any]:
    """Line-JSON encoding used for trace capture and replay."""
    doc: dict[str, Any] = {"type": type(msg).__name__}
    for name in msg.__dataclass_fields__:
        value = getattr(msg, name)
        if isinstance(value, Suspicion):
            value = serde.suspicion_to_dict(value)
        elif isinstance(value, tuple) and value and isinstance(value[0], Suspicion):
            value = [serde.suspicion_to_dict(s) for s in value]
        elif isinstance(value, tuple):
            value = list(value)
        elif isinstance(value, enum.Enum):
            value = value.value
        elif isinstance(value, date):
            value = value.isoformat()
        doc[name] = value
    return doc


# --- runtime ----------------------------------------------------------------

@dataclass
class Envelope:
    msg_id: int
    dest: AgentId
    msg: Message


class Agent:
    id: AgentId

    def __init__(self, agent_id: AgentId):
        self.id = agent_id
        self._seen: set[int] = set()

    def receive(self, envelope: Envelope, ctx: "Runtime") -> None:
        if envelope.msg_id in self._seen:
            return
        self._seen.add(envelope.msg_id)
        self.handle(envelope.msg, ctx)

    def handle(self, msg: Message, ctx: "Runtime") -> None:  # pragma: no cover
        raise NotImplementedError


class Runtime:
    """In-process mailbox scheduler.

    With order_seed unset delivery is FIFO; with a seed the next envelope
    is drawn at random, which the protocol tests use to permute delivery
    orders. duplicate_every > 0 re-delivers every nth envelope to exercise
    at-least-once semantics.
    """

    def __init__(self, order_seed: int | None = None, duplicate_every: int = 0):
        self.agents: dict[AgentId, Agent] = {}
        self.queue: list[Envelope] = []
        self.sink: list[Envelope] = []
        self._sink_seen: set[int] = set()
        self.trace: list[dict] = []
        self._next_id = 0
        self._rng = random.Random(order_seed) if order_seed is not None else None
        self._duplicate_every = duplicate_every
        self._delivered = 0

    def register(self, agent: Agent) -> None:
        if agent.id in self.agents:
            raise ValueError(f"duplicate agent id {agent.id}")
        self.agents[agent.id] = agent

    def deregister(self, agent_id: AgentId) -> None:
        self.agents.pop(agent_id, None)

    def send(self, dest: AgentId, msg: Message) -> None:
        env = Envelope(self._next_id, dest, msg)
        self._next_id += 1
        self.queue.append(env)
        if self._duplicate_every and env.msg_id % self._duplicate_every == 0:
            self.queue.append(Envelope(env.msg_id, dest, msg))

    def run(self, max_steps: int = 100_000) -> None:
        steps = 0
        while self.queue:
            steps += 1
            if steps > max_steps:
                raise RuntimeError("runtime did not quiesce")
            idx = self._rng.randrange(len(self.queue)) if self._rng else 0
            env = self.queue.pop(idx)
            self.trace.append(
                {"msg_id": env.msg_id, "dest": str(env.dest), "msg": message_to_dict(env.msg)}
            )
            if env.dest == ANALYST_ID:
                if env.msg_id not in self._sink_seen:
                    self._sink_seen.add(env.msg_id)
                    self.sink.append(env)
                continue
            agent = self.agents.get(env.dest)
            if agent is not None:
                agent.receive(env, self)

    def trace_jsonl(self) -> str:
        return "\n".join(json.dumps(e, sort_keys=True) for e in self.trace)


# --- CTS: per-product capture -----------------------------------------------

class CtsAgent(Agent):
    def __init__(
        self,
        product: str,
        profiles: dict[AccountKey, ClientProfile],
        model: SegmentModel,
        bank: RuleBank | None,
    ):
        super().__init__(AgentId(Role.CTS, product))
        self.product = product
        self.profiles = profiles
        self.model = model
        self.bank = bank
        self.last_shift = None

    def _scan(self, profiles, analysis_date, mar) -> tuple[list[Suspicion], int]:
        suspicions, shift = capture(profiles, self.model, self.bank, mar, analysis_date)
        self.last_shift = shift
        return suspicions, len(profiles)

    def handle(self, msg: Message, ctx: Runtime) -> None:
        if isinstance(msg, AnalyzeRequest):
            if self.bank is None:
                ctx.send(
                    GCT_ID,
                    ScanResult(msg.request_id, self.product, (), 0, "no rule bank loaded"),
                )
                return
            suspicions, scanned = self._scan(self.profiles, msg.analysis_date, msg.mar)
            for s in suspicions:
                ctx.send(GCT_ID, SuspicionFound(msg.request_id, s, self.product))
            ctx.send(
                GCT_ID, ScanResult(msg.request_id, self.product, tuple(suspicions), scanned)
            )
        elif isinstance(msg, ClientScanRequest):
            if self.bank is None:
                ctx.send(
                    GCT_ID,
                    ScanResult(msg.request_id, self.product, (), 0, "no rule bank loaded"),
                )
                return
            subset = {
                k: p for k, p in self.profiles.items() if k.client_id == msg.client_id
            }
            suspicions, scanned = self._scan(subset, msg.analysis_date, msg.mar)
            for s in suspicions:
                ctx.send(GCT_ID, SuspicionFound(msg.request_id, s, self.product))
            ctx.send(
                GCT_ID, ScanResult(msg.request_id, self.product, tuple(suspicions), scanned)
            )


# --- GCT: capture manager ----------------------------------------------------

@dataclass
class _PendingRequest:
    awaiting: int = 0
    suspicions: dict = field(default_factory=dict)  # key str -> Suspicion
    scanned: int = 0
    errors: list[str] = field(default_factory=list)
    fanned_out: set[tuple[str, str]] = field(default_factory=set)  # (client, product)
    completed: bool = False
    params: tuple[date, float] | None = None


class GctAgent(Agent):
    """Routes scans to the product CTSs and aggregates their replies.

    Only the GCT knows how many CTSs exist. A suspicion reported by one
    CTS triggers a by-client scan on every other product present in that
    client's profile; the fan-out is deduplicated per (client, product),
    so repeated or reordered deliveries cannot loop.
    """

    def __init__(self, client_products: dict[str, set[str]] | None = None):
        super().__init__(GCT_ID)
        self.roster: dict[str, AgentId] = {}
        self.client_products = client_products or {}
        self.pending: dict[str, _PendingRequest] = {}

    def add_cts(self, product: str) -> None:
        self.roster[product] = AgentId(Role.CTS, product)

    def remove_cts(self, product: str) -> None:
        self.roster.pop(product, None)

    def _dispatch_client_scans(
        self, req: _PendingRequest, request_id: str, client_id: str,
        origin_product: str | None, ctx: Runtime,
    ) -> None:
        analysis_date, mar = req.params
        products = self.client_products.get(client_id, set())
        for product in sorted(products):
            if product == origin_product or product not in self.roster:
                continue
            tag = (client_id, product)
            if tag in req.fanned_out:
                continue
            req.fanned_out.add(tag)
            req.awaiting += 1
            ctx.send(
                self.roster[product],
                ClientScanRequest(request_id, client_id, product, analysis_date, mar),
            )

    def _maybe_complete(self, request_id: str, ctx: Runtime) -> None:
        req = self.pending[request_id]
        if req.completed or req.awaiting > 0:
            return
        req.completed = True
        suspicions = tuple(s for _, s in sorted(req.suspicions.items()))
        done = AllScansComplete(request_id, suspicions, req.scanned, tuple(req.errors))
        ctx.send(APD_ID, done)
        ctx.send(ANALYST_ID, done)

    def handle(self, msg: Message, ctx: Runtime) -> None:
        if isinstance(msg, AnalyzeRequest):
            req = self.pending.setdefault(msg.request_id, _PendingRequest())
            req.params = (msg.analysis_date, msg.mar)
            if msg.mode is ScanMode.BY_TRANSACTION:
                if msg.product is not None and msg.product not in self.roster:
                    req.errors.append(f"unknown product: {msg.product}")
                    self._maybe_complete(msg.request_id, ctx)
                    return
                targets = (
                    [msg.product] if msg.product is not None else sorted(self.roster)
                )
                for product in targets:
                    req.awaiting += 1
                    ctx.send(self.roster[product], msg)
            else:
                if msg.client_id is None:
                    req.errors.append("by-client scan without a client id")
                    self._maybe_complete(msg.request_id, ctx)
                    return
                self._dispatch_client_scans(
                    req, msg.request_id, msg.client_id, None, ctx
                )
                self._maybe_complete(msg.request_id, ctx)
        elif isinstance(msg, SuspicionFound):
            req = self.pending.get(msg.request_id)
            if req is None or req.completed:
                return
            self._dispatch_client_scans(
                req, msg.request_id, msg.suspicion.key.client_id, msg.product, ctx
            )
        elif isinstance(msg, ScanResult):
            req = self.pending.get(msg.request_id)
            if req is None:
                return
            req.awaiting -= 1
            req.scanned += msg.scanned
            if msg.error:
                req.errors.append(f"{msg.product}: {msg.error}")
            for s in msg.suspicions:
                req.suspicions.setdefault(s.key.as_str(), s)
                # Fan out before completion so secondary scans are counted.
                self._dispatch_client_scans(
                    req, msg.request_id, s.key.client_id, msg.product, ctx
                )
            self._maybe_complete(msg.request_id, ctx)


# --- APD: decision support ----------------------------------------------------

_RATIO_BUCKETS = ("0", "L", "M", "H")  # zero, (0,.5], (.5,1], >1


def _bucket(window: float, monthly_max: float) -> str:
    if window == 0:
        return "0"
    ratio = window / monthly_max if monthly_max > 0 else float("inf")
    if ratio <= 0.5:
        return "L"
    if ratio <= 1.0:
        return "M"
    return "H"


def matrix_key(suspicion: Suspicion) -> str:
    """(triggered rule set, analysis class, discretized attribute signature)."""
    rules = ",".join(sorted({t.rule_id for t in suspicion.triggered}))
    signature = "".join(
        _bucket(
            suspicion.profile.attribute(a).window_value,
            suspicion.profile.attribute(a).monthly_max,
        )
        for a in TRIPLE_ATTRIBUTES
    )
    return f"{rules}|{suspicion.analysis_class.value}|{signature}"


@dataclass
class DecisionRecord:
    suspicion_id: str
    matrix_key: str
    verdict: Verdict
    source: DecisionSource
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "suspicion_id": self.suspicion_id,
            "matrix_key": self.matrix_key,
            "verdict": self.verdict.value,
            "source": self.source.value,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DecisionRecord":
        return cls(
            doc["suspicion_id"],
            doc["matrix_key"],
            Verdict(doc["verdict"]),
            DecisionSource(doc["source"]),
            doc["timestamp"],
        )


@dataclass
class DecisionMatrix:
    threshold: float = 0.9
    min_support: int = 5
    cells: dict[str, list[int]] = field(default_factory=dict)  # key -> [confirm, reject]

    def decide(self, key: str) -> Verdict:
        confirm, reject = self.cells.get(key, (0, 0))
        total = confirm + reject
        if total >= self.min_support and max(confirm, reject) / total >= self.threshold:
            return Verdict.CONFIRMED if confirm >= reject else Verdict.REJECTED
        return Verdict.ESCALATED

    def to_json(self) -> str:
        return json.dumps(
            {
                "threshold": self.threshold,
                "min_support": self.min_support,
                "cells": self.cells,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "DecisionMatrix":
        doc = json.loads(text)
        return cls(
            threshold=doc["threshold"],
            min_support=doc["min_support"],
            cells={k: list(v) for k, v in doc["cells"].items()},
        )


@dataclass(frozen=True)
class MatrixProposal:
    key: str
    verdict: Verdict
    weight: int


def apd_decide(suspicion: Suspicion, matrix: DecisionMatrix) -> DecisionOutcome:
    key = matrix_key(suspicion)
    return DecisionOutcome(
        suspicion_id=suspicion.suspicion_id,
        verdict=matrix.decide(key),
        source=DecisionSource.AGENT,
        matrix_key=key,
    )


def apd_learn(record: DecisionRecord, matrix: DecisionMatrix) -> MatrixProposal:
    """Turn one decision record into a matrix update proposal.

    Only analyst verdicts train the matrix (weight 1); agent-sourced
    records carry weight 0 to avoid the agent reinforcing itself. The
    proposal mutates nothing until applied after validation.
    """
    weight = 1 if record.source is DecisionSource.ANALYST else 0
    return MatrixProposal(record.matrix_key, record.verdict, weight)


def apply_proposal(matrix: DecisionMatrix, proposal: MatrixProposal) -> None:
    if proposal.weight == 0 or proposal.verdict is Verdict.ESCALATED:
        return
    cell = matrix.cells.setdefault(proposal.key, [0, 0])
    if proposal.verdict is Verdict.CONFIRMED:
        cell[0] += proposal.weight
    else:
        cell[1] += proposal.weight


def matrix_from_log(
    records: list[DecisionRecord], threshold: float = 0.9, min_support: int = 5
) -> DecisionMatrix:
    """Replaying the append-only decision log reconstructs the matrix."""
    matrix = DecisionMatrix(threshold=threshold, min_support=min_support)
    for record in records:
        apply_proposal(matrix, apd_learn(record, matrix))
    return matrix


class ApdAgent(Agent):
    def __init__(self, matrix: DecisionMatrix):
        super().__init__(APD_ID)
        self.matrix = matrix
        self.outcomes: list[DecisionOutcome] = []

    def handle(self, msg: Message, ctx: Runtime) -> None:
        if isinstance(msg, AllScansComplete):
            for suspicion in msg.suspicions:
                outcome = replace(
                    apd_decide(suspicion, self.matrix), request_id=msg.request_id
                )
                self.outcomes.append(outcome)
                ctx.send(ANALYST_ID, outcome)


# --- EBP: profile-base evolution ----------------------------------------------

def ebp_evolve(
    new_profiles: dict[AccountKey, ClientProfile],
    current_model: SegmentModel,
    k: int | None = None,
    seed: int = 0,
    min_profiles: int = 50,
    shift_threshold: float = 1.0,
) -> ProfileSuggestion:
    """Re-learn clusters on a newer cycle and diff against the live model.

    Candidates are new centroids farther than shift_threshold (in the
    current standardized space) from every live centroid. Nothing is
    applied until a ProfileValidation accepts specific candidate ids.
    """
    from .learning import feature_matrix

    if len(new_profiles) < min_profiles:
        return ProfileSuggestion(candidates=())
    _, X = feature_matrix(new_profiles)
    Z = current_model.scaler.transform(X)
    k = k if k is not None else current_model.clustering.k
    result = kmeans(Z, k, seed=seed)
    current = current_model.clustering.centroids
    candidates = []
    for i, centroid in enumerate(result.centroids):
        distance = float(np.min(np.linalg.norm(current - centroid, axis=1)))
        if distance > shift_threshold:
            raw = centroid * current_model.scaler.std + current_model.scaler.mean
            candidates.append(
                {
                    "id": f"candidate-{i}",
                    "distance": round(distance, 6),
                    "centroid": [round(float(v), 6) for v in raw],
                    "members": int((result.labels == i).sum()),
                }
            )
    candidates.sort(key=lambda c: -c["distance"])
    return ProfileSuggestion(candidates=tuple(candidates))


class EbpAgent(Agent):
    def __init__(self, model: SegmentModel):
        super().__init__(EBP_ID)
        self.model = model
        self.pending_suggestion: ProfileSuggestion | None = None
        self.applied: list[dict] = []

    def suggest(
        self, new_profiles: dict[AccountKey, ClientProfile], ctx: Runtime, **kwargs
    ) -> ProfileSuggestion:
        suggestion = ebp_evolve(new_profiles, self.model, **kwargs)
        self.pending_suggestion = suggestion
        ctx.send(ANALYST_ID, suggestion)
        return suggestion

    def handle(self, msg: Message, ctx: Runtime) -> None:
        if isinstance(msg, ProfileValidation):
            if self.pending_suggestion is None:
                return
            by_id = {c["id"]: c for c in self.pending_suggestion.candidates}
            for cid in msg.accepted:
                candidate = by_id.get(cid)
                if candidate is None:
                    continue
                self.applied.append(candidate)
                z = (
                    np.array(candidate["centroid"]) - self.model.scaler.mean
                ) / self.model.scaler.std
                clustering = self.model.clustering
                clustering.centroids = np.vstack([clustering.centroids, z])
                new_cluster = clustering.k
                clustering.k += 1
                # New behavior profiles enter as alerts until reviewed.
                self.model.classification.mapping[new_cluster] = ProfileClass.RISK1
            self.pending_suggestion = None
