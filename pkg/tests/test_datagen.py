"""Generator determinism, round-trips, and scenario detectability."""

import dataclasses
import filecmp

import pytest

from amlmon.datagen import (
    GeneratorConfig,
    GroundTruth,
    Scenario,
    emit,
    generate,
    load_config,
    self_check,
    write_config,
)
from amlmon.ingest import (
    ConfigurationError,
    open_text,
    parse_clients,
    parse_transactions,
)
from amlmon.model import ClientKind, DEFAULT_BAND_SCHEMA, ProfileClass
from amlmon.profiler import Cycle, build_profiles, merge_window, window_profile
from amlmon.ruleengine import RuleBank, builtin_normative_rules, capture

from conftest import trivial_model

SMALL = GeneratorConfig(seed=11, clients=60, smurfing=2, pass_through=2,
                        dormant_burst=2, drop_off=2)


class TestConfig:
    def test_defaults_validate(self):
        GeneratorConfig().validate()

    def test_shares_must_sum_to_one(self):
        cfg = dataclasses.replace(GeneratorConfig(), standard_share=0.6)
        with pytest.raises(ConfigurationError):
            cfg.validate()

    def test_too_many_injections_rejected(self):
        cfg = GeneratorConfig(clients=5)
        with pytest.raises(ConfigurationError):
            cfg.validate()

    def test_entity_ratio_bounds(self):
        with pytest.raises(ConfigurationError):
            GeneratorConfig(entity_ratio=1.2).validate()

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "gen.conf"
        write_config(SMALL, path)
        assert load_config(path) == SMALL

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "gen.conf"
        path.write_text("clients = 10\nvolume = 3\n")
        with pytest.raises(ConfigurationError, match="volume"):
            load_config(path)

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "gen.conf"
        path.write_text("clients = many\n")
        with pytest.raises(ConfigurationError, match="clients"):
            load_config(path)

    def test_comments_and_blanks_ignored(self, tmp_path):
        path = tmp_path / "gen.conf"
        path.write_text("# population\n\nclients = 80  # total\nseed = 3\n")
        cfg = load_config(path)
        assert (cfg.clients, cfg.seed) == (80, 3)


class TestGenerate:
    def test_deterministic_across_runs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        emit(generate(SMALL), a)
        emit(generate(SMALL), b)
        for name in ("clients.csv", "transactions_cycle1.csv", "transactions_cycle2.csv"):
            assert filecmp.cmp(a / name, b / name, shallow=False), name

    def test_zero_injections_means_empty_truth(self):
        cfg = GeneratorConfig(clients=20, smurfing=0, pass_through=0,
                              dormant_burst=0, drop_off=0)
        ds = generate(cfg)
        assert ds.ground_truth.labels == {}
        assert ds.ground_truth.label(ds.specs[0].key) is Scenario.NONE

    def test_ground_truth_counts_match_config(self):
        ds = generate(SMALL)
        by_scenario = {}
        for scenario in ds.ground_truth.labels.values():
            by_scenario[scenario] = by_scenario.get(scenario, 0) + 1
        assert by_scenario == {
            Scenario.SMURFING: 2,
            Scenario.PASS_THROUGH: 2,
            Scenario.DORMANT_BURST: 2,
            Scenario.DROP_OFF: 2,
        }

    def test_all_archetypes_present(self):
        ds = generate(GeneratorConfig(clients=400))
        assert {s.archetype for s in ds.specs} == set(ProfileClass)

    def test_population_value_shape(self):
        ds = generate(GeneratorConfig(clients=400))
        entity_count = sum(
            1 for c in ds.clients if c.kind is ClientKind.LEGAL_ENTITY
        )
        assert entity_count <= 0.1 * len(ds.clients)
        value = {ClientKind.LEGAL_ENTITY: 0, ClientKind.SINGULAR_PERSON: 0}
        kinds = {c.client_id: c.kind for c in ds.clients}
        for tx in ds.iter_cycle(1):
            value[kinds[tx.client_id]] += tx.amount_cents
        total = sum(value.values())
        assert value[ClientKind.LEGAL_ENTITY] / total >= 0.9


class TestEmit:
    def test_round_trip_through_parser(self, tmp_path):
        ds = generate(SMALL)
        paths = emit(ds, tmp_path)
        with open_text(paths["cycle2"]) as fh:
            parsed, errors = parse_transactions(fh)
        assert errors == []
        assert sorted(parsed, key=lambda t: (t.client_id, t.timestamp, t.amount_cents)) \
            == sorted(ds.iter_cycle(2),
                      key=lambda t: (t.client_id, t.timestamp, t.amount_cents))

    def test_record_counts_match_dataset(self, tmp_path):
        cfg = GeneratorConfig(seed=2, clients=10, smurfing=0, pass_through=0,
                              dormant_burst=0, drop_off=0)
        ds = generate(cfg)
        paths = emit(ds, tmp_path)
        with open_text(paths["clients"]) as fh:
            clients, _ = parse_clients(fh)
        assert len(clients) == 10
        for which in (1, 2):
            expected = sum(1 for _ in ds.iter_cycle(which))
            n_lines = sum(
                1 for _ in open(paths[f"cycle{which}"], encoding="utf-8")
            )
            assert n_lines == expected + 1  # header

    def test_gzip_mode_round_trips(self, tmp_path):
        ds = generate(SMALL)
        paths = emit(ds, tmp_path, compress=True)
        assert paths["cycle1"].suffix == ".gz"
        with open_text(paths["cycle1"]) as fh:
            parsed, errors = parse_transactions(fh)
        assert errors == []
        assert len(parsed) == sum(1 for _ in ds.iter_cycle(1))


class TestScenarios:
    def test_self_check_passes(self):
        assert self_check(generate(SMALL)) == []

    def test_self_check_on_default_config(self):
        assert self_check(generate(GeneratorConfig(seed=5))) == []

    def test_injected_accounts_are_captured(self):
        ds = generate(SMALL)
        schema = DEFAULT_BAND_SCHEMA
        registry = {c.client_id: c for c in ds.clients}
        base = build_profiles(
            ds.iter_cycle(1), Cycle(ds.config.cycle1_year, 1), schema, registry
        )
        fragments = window_profile(ds.iter_window(), ds.analysis_date, schema)
        merged = merge_window(base, fragments, registry, ds.analysis_date)
        bank = RuleBank(normative=builtin_normative_rules(), profile_based=[])
        model = trivial_model(cls=ProfileClass.STANDARD)
        suspicions, _ = capture(merged, model, bank, 0.0, ds.analysis_date)
        flagged = {s.key for s in suspicions}
        assert set(ds.ground_truth.labels) <= flagged

    def test_pass_through_trips_outbound_rule(self):
        ds = generate(SMALL)
        schema = DEFAULT_BAND_SCHEMA
        registry = {c.client_id: c for c in ds.clients}
        base = build_profiles(
            ds.iter_cycle(1), Cycle(ds.config.cycle1_year, 1), schema, registry
        )
        fragments = window_profile(ds.iter_window(), ds.analysis_date, schema)
        merged = merge_window(base, fragments, registry, ds.analysis_date)
        bank = RuleBank(normative=builtin_normative_rules(), profile_based=[])
        model = trivial_model(cls=ProfileClass.STANDARD)
        suspicions, _ = capture(merged, model, bank, 0.0, ds.analysis_date)
        by_key = {s.key: {t.rule_id for t in s.triggered} for s in suspicions}
        for key, scenario in ds.ground_truth.labels.items():
            if scenario is Scenario.PASS_THROUGH:
                assert "BCXX2026003" in by_key[key]
