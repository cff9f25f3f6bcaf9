"""Plain-text rendering of the three analysis phases of a stored run.

The renderer is a pure function of the run document, so regenerating the
report for a stored run is deterministic. Client identifiers are masked by
default; pass masked=False only in trusted contexts.
"""

from __future__ import annotations

from decimal import Decimal, ROUND_HALF_UP

from .model import ProfileClass, TRIPLE_ATTRIBUTES
from .store import AnalysisRun

CLASS_ORDER = (
    ProfileClass.LOW_USAGE,
    ProfileClass.STANDARD,
    ProfileClass.RISK1,
    ProfileClass.RISK2,
    ProfileClass.RISK3,
)

CLASS_LABELS = {
    ProfileClass.LOW_USAGE: "low usage",
    ProfileClass.STANDARD: "standard",
    ProfileClass.RISK1: "risk 1",
    ProfileClass.RISK2: "risk 2",
    ProfileClass.RISK3: "risk 3",
}


def mask_identifier(value: str) -> str:
    """Hide all but the trailing two characters of an identifier."""
    if len(value) <= 2:
        return "*" * len(value)
    return "*" * (len(value) - 2) + value[-2:]


def integer_percentage(part: int, whole: int) -> int:
    """Half-up integer percentage; per-class values are NOT renormalized,
    so a distribution column may legitimately sum to 99 or 101."""
    if whole == 0:
        return 0
    return int(
        (Decimal(part) * 100 / Decimal(whole)).quantize(0, rounding=ROUND_HALF_UP)
    )


def _fmt_value(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else f"{v:.2f}"


def _header(run: AnalysisRun, lines: list[str]) -> None:
    lines.append(
        f"== Capture run {run.run_id} started {run.phase_times.get('started', '-')} =="
    )
    lines.append(
        f"Environment: {run.profile_count} profiles in window"
        f" | additional risk margin: {run.mar:g}%"
    )
    counts = run.rule_counts
    if counts:
        parts = [f"{counts.get('normative', 0)} normative",
                 f"{counts.get('profile', 0)} profile-based"]
        for name in ("singular", "entity"):
            key = f"learned_{name}"
            if key in counts:
                parts.append(f"{counts[key]} learned ({name})")
        lines.append(
            "Rule bank: " + " + ".join(parts) + f" = {counts.get('total', 0)} rules"
        )
    lines.append("")


def _phase1(run: AnalysisRun, lines: list[str]) -> None:
    lines.append("Phase 1 - Profile reclassification (class-matrix adjustment)")
    for product in sorted(run.adjustments):
        shift = run.adjustments[product]
        version = run.bank_versions.get(product, "-")
        lines.append(f"  Segment: {product} (model {version})")
        lines.append(f"    {'class':<12}{'original':>10}{'adjusted':>10}{'delta':>8}")
        for cls in CLASS_ORDER:
            orig = shift["original"].get(cls.value, 0)
            adj = shift["adjusted"].get(cls.value, 0)
            lines.append(
                f"    {CLASS_LABELS[cls]:<12}{orig:>10}{adj:>10}{adj - orig:>+8}"
            )
    lines.append("")


def _phase2(run: AnalysisRun, lines: list[str]) -> None:
    n = len(run.items)
    rate = 100.0 * n / run.profile_count if run.profile_count else 0.0
    lines.append("Phase 2 - Suspicious-movement capture")
    lines.append(
        f"  Suspicions: {n} of {run.profile_count} profiles ({rate:.4f}%)"
    )
    if run.recall is not None:
        lines.append(f"  Ground-truth recall: {run.recall:.4f}")
    lines.append("")


def _phase3(run: AnalysisRun, lines: list[str], masked: bool) -> None:
    lines.append("Phase 3 - Suspect analysis")
    total = len(run.items)
    by_class = {cls: 0 for cls in CLASS_ORDER}
    activations: dict[str, int] = {}
    for item in run.items:
        s = item["suspicion"]
        by_class[ProfileClass(s["analysis_class"])] += 1
        for rule in s["triggered"]:
            activations[rule["rule_id"]] = activations.get(rule["rule_id"], 0) + 1
    lines.append("  Distribution of suspects by class:")
    for cls in CLASS_ORDER:
        pct = integer_percentage(by_class[cls], total)
        lines.append(f"    {CLASS_LABELS[cls]:<12}{by_class[cls]:>6}  {pct}%")
    total_hits = sum(activations.values())
    lines.append(
        f"  {len(activations)} distinct rules fired, {total_hits} activations:"
    )
    for rule_id in sorted(activations):
        lines.append(f"    {rule_id}: {activations[rule_id]}")
    lines.append("")

    for item in run.items:
        s = item["suspicion"]
        client, agency, account = s["key"].split("/")
        if masked:
            client = mask_identifier(client)
            agency = mask_identifier(agency)
            account = mask_identifier(account)
        lines.append(f"  Suspect: {item['ordinal']} / {total}")
        lines.append(
            f"    Client: {client}  Agency: {agency}  Account: {account}"
            f"  Segment: {s['segment']}"
        )
        lines.append(
            f"    Class: {s['analysis_class']}"
            f" (original: {s['original_class']})"
            f"  Account age: {s['profile']['age_years']} years"
        )
        lines.append(f"    Automated verdict: {item['apd_verdict']}")
        lines.append("    attribute   annual total / monthly max / window")
        for name in TRIPLE_ATTRIBUTES:
            total_v, max_v, win_v = s["profile"]["attributes"][name]
            lines.append(
                f"    {name:<10}  "
                f"{_fmt_value(total_v)} / {_fmt_value(max_v)} / {_fmt_value(win_v)}"
            )
        lines.append("    Triggered rules:")
        for rule in s["triggered"]:
            lines.append(f"      {rule['rule_id']}: {rule['text']}")
        lines.append("")


def render_phase_reports(run: AnalysisRun, masked: bool = True) -> str:
    lines: list[str] = []
    _header(run, lines)
    _phase1(run, lines)
    _phase2(run, lines)
    _phase3(run, lines, masked)
    return "\n".join(lines).rstrip("\n") + "\n"
