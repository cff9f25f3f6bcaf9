"""Store, orchestration and report tests over a small synthetic deployment."""

from datetime import date, datetime, timedelta
from pathlib import Path

import pytest

from amlmon.datagen import GeneratorConfig, emit, generate
from amlmon.report import integer_percentage, mask_identifier, render_phase_reports
from amlmon.service import learn_all, run_analysis
from amlmon.store import AnalysisRun, Store, StoreError, run_fingerprint

CONFIG = GeneratorConfig(seed=7, clients=300, smurfing=3, pass_through=3,
                         dormant_burst=3, drop_off=3)
ANALYSIS_DATE = date(2027, 1, 1)


@pytest.fixture(scope="module")
def deployment(tmp_path_factory):
    """A learned store over a small generated population."""
    root = tmp_path_factory.mktemp("store")
    store = Store(root)
    emit(generate(CONFIG), store.inputs_dir)
    learn_all(store, seed=0, as_of=date(2026, 6, 1))
    return store


def fixed_clock():
    t = datetime(2027, 1, 2, 20, 16, 30)
    state = {"n": 0}

    def tick():
        state["n"] += 1
        return t + timedelta(seconds=state["n"])

    return tick


class TestLearnAndRun:
    def test_learn_persists_models_profiles_and_bank(self, deployment):
        models = deployment.load_models()
        assert len(models) == 2
        bank = deployment.load_bank()
        assert len(bank.normative) == 5
        assert len(bank.profile_based) == 20
        assert bank.total_rules == 25 + sum(
            m.ruleset.n_rules for m in models.values()
        )
        assert len(deployment.load_profiles()) == CONFIG.clients

    def test_run_detects_injected_accounts(self, deployment):
        run = run_analysis(deployment, ANALYSIS_DATE, 0.0, clock=fixed_clock())
        flagged = {item["suspicion"]["key"] for item in run.items}
        injected = {k.as_str() for k in generate(CONFIG).ground_truth.labels}
        assert injected <= flagged
        assert run.recall == 1.0
        assert run.profile_count > 0

    def test_run_is_idempotent(self, deployment):
        first = run_analysis(deployment, ANALYSIS_DATE, 0.0, clock=fixed_clock())
        decisions_before = len(deployment.read_decisions())
        second = run_analysis(deployment, ANALYSIS_DATE, 0.0, clock=fixed_clock())
        assert second.run_id == first.run_id
        assert second.to_dict() == first.to_dict()
        # replay appends no new agent decisions
        assert len(deployment.read_decisions()) == decisions_before

    def test_reclassification_conserves_counts(self, deployment):
        run = run_analysis(deployment, ANALYSIS_DATE, 0.0, clock=fixed_clock())
        for shift in run.adjustments.values():
            assert sum(shift["original"].values()) == sum(shift["adjusted"].values())

    def test_client_scope_restricts_run(self, deployment):
        run_all = run_analysis(deployment, ANALYSIS_DATE, 0.0, clock=fixed_clock())
        client = run_all.items[0]["suspicion"]["key"].split("/")[0]
        run = run_analysis(
            deployment, ANALYSIS_DATE, 0.0,
            scope={"kind": "client", "client": client}, clock=fixed_clock(),
        )
        assert run.run_id != run_all.run_id
        assert {i["suspicion"]["key"].split("/")[0] for i in run.items} == {client}

    def test_missing_model_gives_setup_error(self, tmp_path):
        with pytest.raises(StoreError, match="learn"):
            run_analysis(Store(tmp_path), ANALYSIS_DATE, 0.0)

    def test_run_round_trips_through_store(self, deployment):
        run = run_analysis(deployment, ANALYSIS_DATE, 0.0, clock=fixed_clock())
        assert deployment.load_run(run.run_id).to_dict() == run.to_dict()

    def test_fingerprint_depends_on_parameters(self):
        versions = {"bank": "01062026.01"}
        base = run_fingerprint(ANALYSIS_DATE, 0.0, {"kind": "all"}, versions)
        assert run_fingerprint(ANALYSIS_DATE, 5.0, {"kind": "all"}, versions) != base
        assert run_fingerprint(
            ANALYSIS_DATE, 0.0, {"kind": "all"}, {"bank": "02062026.01"}
        ) != base


class TestReport:
    def test_mask_identifier(self):
        assert mask_identifier("C0042") == "***42"
        assert mask_identifier("A1") == "**"

    def test_integer_percentage_half_up(self):
        assert integer_percentage(1, 8) == 13  # 12.5 rounds up
        assert integer_percentage(0, 25) == 0
        assert integer_percentage(25, 25) == 100

    def test_report_layout(self, deployment):
        run = run_analysis(deployment, ANALYSIS_DATE, 0.0, clock=fixed_clock())
        text = render_phase_reports(run)
        assert "Phase 1 - Profile reclassification" in text
        assert "Phase 2 - Suspicious-movement capture" in text
        assert "Phase 3 - Suspect analysis" in text
        rate = 100.0 * len(run.items) / run.profile_count
        assert f"({rate:.4f}%)" in text
        assert f"Suspect: 1 / {len(run.items)}" in text

    def test_report_masks_identifiers_by_default(self, deployment):
        run = run_analysis(deployment, ANALYSIS_DATE, 0.0, clock=fixed_clock())
        client = run.items[0]["suspicion"]["key"].split("/")[0]
        assert client not in render_phase_reports(run)
        assert client in render_phase_reports(run, masked=False)

    def test_report_regeneration_is_deterministic(self, deployment):
        run = run_analysis(deployment, ANALYSIS_DATE, 0.0, clock=fixed_clock())
        reloaded = deployment.load_run(run.run_id)
        assert render_phase_reports(run) == render_phase_reports(reloaded)

    def test_report_matches_golden_file(self, deployment):
        run = run_analysis(deployment, ANALYSIS_DATE, 0.0, clock=fixed_clock())
        golden = Path(__file__).parent / "golden" / "report.txt"
        assert render_phase_reports(run) == golden.read_text()

    def test_single_suspect_single_rule_histogram(self):
        run = AnalysisRun(
            run_id="r1",
            analysis_date=ANALYSIS_DATE,
            mar=0.0,
            scope={"kind": "all"},
            bank_versions={},
            profile_count=10,
            adjustments={},
            items=[{
                "ordinal": 1,
                "suspicion": {
                    "key": "c1/0001/A1",
                    "segment": "PF",
                    "analysis_class": "risk3",
                    "original_class": "standard",
                    "triggered": [{"rule_id": "BCXX2026004", "text": "burst",
                                   "citation": ""}],
                    "profile": {
                        "age_years": 4,
                        "attributes": {
                            a: [0.0, 0.0, 0.0]
                            for a in ("serv", "movl", "band1", "band2", "band3",
                                      "band4", "band5", "band6", "pct_deb",
                                      "pct_ted", "pct_doc")
                        },
                    },
                },
                "apd_verdict": "escalated",
                "matrix_key": "k",
            }],
            phase_times={"started": "2027-01-02 20:16:30"},
        )
        text = render_phase_reports(run)
        assert "1 distinct rules fired, 1 activations" in text
        assert "BCXX2026004: 1" in text
        assert "(10.0000%)" in text
