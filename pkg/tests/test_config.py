"""Scenario file validation and the resolved round trip."""

import copy

import pytest
import yaml

from gridpulse.config import (
    ConfigError,
    config_from_dict,
    load_config,
    resolved_dict,
    save_config,
)

FRIDGE_DOC = {
    "source": {
        "v_source": 110.0,
        "r_source": 0.5,
        "v_nominal": 100.0,
        "disturbances": [[50, 100.0]],
    },
    "agents": {
        "kind": "fridge",
        "count": 4,
        "r_base": 200.0,
        "r_flex": [400.0, 400.0, 380.0, 420.0],
        "on_duration": 2,
        "off_duration": 6,
    },
    "policy": {"act_probability": 0.5, "resume_wait_max": 3},
    "coordinator": {"mode": "none"},
    "run": {"n_ticks": 100, "seed": 9},
}

WASHER_DOC = {
    "source": {"v_source": 110.0, "r_source": 0.5, "v_nominal": 100.0},
    "agents": {
        "kind": "washer",
        "count": 3,
        "r_base": 200.0,
        "r_flex": 300.0,
        "job_length": [5, 10],
        "deadline_horizon": 40,
        "arrival_gap": [10, 20],
        "first_arrival_max": 5,
        "initial_reference_price": [20.0, 60.0],
    },
    "policy": {"voltage_check_enabled": True, "voltage_limit": 0.95},
    "market": {"mean": 40.0, "reversion": 0.1, "noise_std": 2.0},
    "run": {"n_ticks": 100, "seed": 9},
}


def test_fridge_doc_parses_with_defaults():
    cfg = config_from_dict(copy.deepcopy(FRIDGE_DOC))
    assert cfg.kind == "fridge"
    assert cfg.agents.r_base == [200.0] * 4
    assert cfg.agents.max_postpone is None
    assert cfg.coordinator.mode == "none"
    assert cfg.coordinator.permits_per_tick is None
    assert cfg.market is None
    assert cfg.run.band == [0.98, 1.02]
    assert cfg.policy.act_probability == 0.5


def test_washer_doc_parses():
    cfg = config_from_dict(copy.deepcopy(WASHER_DOC))
    assert cfg.kind == "washer"
    assert cfg.agents.deadline_horizon == [40, 40]
    assert cfg.market.period_length == 60
    assert cfg.policy.voltage_check_enabled is True


@pytest.mark.parametrize(
    "mutate, needle",
    [
        (lambda d: d.__setitem__("extra", {}), "extra"),
        (lambda d: d["agents"].__setitem__("volts", 3), "agents.volts"),
        (lambda d: d["agents"].pop("count"), "agents.count"),
        (lambda d: d["policy"].__setitem__("act_probability", 1.5), "act_probability"),
        (lambda d: d["source"].__setitem__("r_source", -1), "source.r_source"),
        (lambda d: d["source"].__setitem__("r_source", 0), "source.r_source"),
        (lambda d: d["run"].__setitem__("n_ticks", -5), "run.n_ticks"),
        (lambda d: d["run"].__setitem__("band", [1.02, 0.98]), "run.band"),
        (
            lambda d: d["source"].__setitem__("disturbances", [[10, 100.0], [10, 90.0]]),
            "duplicate",
        ),
        (lambda d: d["coordinator"].__setitem__("permits_per_tick", 3), "permits_per_tick"),
        (lambda d: d["agents"].__setitem__("kind", "toaster"), "agents.kind"),
        (lambda d: d.__setitem__("market", {"mean": 4.0}), "market"),
    ],
)
def test_fridge_doc_rejections_name_the_key(mutate, needle):
    doc = copy.deepcopy(FRIDGE_DOC)
    mutate(doc)
    with pytest.raises(ConfigError, match=needle):
        config_from_dict(doc)


@pytest.mark.parametrize(
    "mutate, needle",
    [
        (lambda d: d.pop("market"), "market"),
        (lambda d: d["market"].pop("mean"), "market.mean"),
        (lambda d: d["market"].__setitem__("file", "p.csv"), "not allowed"),
        (lambda d: d["market"].__setitem__("baseline_share", 0.2), "feedback_slope"),
        (
            lambda d: d["market"].__setitem__("feedback_slope", 5.0),
            "market.baseline_share",
        ),
        (lambda d: d["agents"].__setitem__("job_length", [10, 5]), "agents.job_length"),
        (lambda d: d["agents"].__setitem__("arrival_gap", 0), "agents.arrival_gap"),
        (lambda d: d["policy"].__setitem__("ewma_lambda", 0.0), "ewma_lambda"),
    ],
)
def test_washer_doc_rejections_name_the_key(mutate, needle):
    doc = copy.deepcopy(WASHER_DOC)
    mutate(doc)
    with pytest.raises(ConfigError, match=needle):
        config_from_dict(doc)


def test_time_division_requires_permits():
    doc = copy.deepcopy(FRIDGE_DOC)
    doc["coordinator"] = {"mode": "time_division"}
    with pytest.raises(ConfigError, match="permits_per_tick"):
        config_from_dict(doc)
    doc["coordinator"] = {"mode": "time_division", "permits_per_tick": 2}
    assert config_from_dict(doc).coordinator.permits_per_tick == 2


def test_coordinator_defaults_to_none():
    doc = copy.deepcopy(FRIDGE_DOC)
    del doc["coordinator"]
    assert config_from_dict(doc).coordinator.mode == "none"


def test_n_ticks_zero_is_legal():
    doc = copy.deepcopy(FRIDGE_DOC)
    doc["run"]["n_ticks"] = 0
    assert config_from_dict(doc).run.n_ticks == 0


def test_seed_is_optional_until_run():
    doc = copy.deepcopy(FRIDGE_DOC)
    del doc["run"]["seed"]
    assert config_from_dict(doc).run.seed is None


def test_disturbances_sorted_by_tick():
    doc = copy.deepcopy(FRIDGE_DOC)
    doc["source"]["disturbances"] = [[80, 90.0], [20, 105.0]]
    cfg = config_from_dict(doc)
    assert cfg.source.disturbances == [[20, 105.0], [80, 90.0]]


@pytest.mark.parametrize("doc", [FRIDGE_DOC, WASHER_DOC])
def test_resolved_dict_round_trips_to_equal_config(doc):
    cfg = config_from_dict(copy.deepcopy(doc))
    resolved = resolved_dict(cfg)
    again = config_from_dict(copy.deepcopy(resolved))
    # defaults are materialised on the way out, so resolve once more
    assert resolved_dict(again) == resolved
    assert again.policy == cfg.policy
    assert again.run == cfg.run
    assert again.source == cfg.source


def test_resolved_dict_materialises_defaults():
    cfg = config_from_dict(copy.deepcopy(FRIDGE_DOC))
    resolved = resolved_dict(cfg)
    assert resolved["agents"]["max_postpone"] == 18  # 3 * off_duration
    assert resolved["run"]["band"] == [0.98, 1.02]
    assert resolved["policy"]["threshold_low"] == 0.98


def test_save_and_load_are_stable(tmp_path):
    cfg = config_from_dict(copy.deepcopy(WASHER_DOC))
    path = tmp_path / "scenario.yaml"
    save_config(cfg, path)
    first = path.read_bytes()
    save_config(load_config(path), path)
    assert path.read_bytes() == first


def test_load_config_prefixes_path_on_errors(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump({"source": {}}))
    with pytest.raises(ConfigError, match="bad.yaml"):
        load_config(path)


def test_per_agent_resistance_length_mismatch():
    doc = copy.deepcopy(FRIDGE_DOC)
    doc["agents"]["r_flex"] = [400.0, 400.0]
    with pytest.raises(ConfigError, match="agents.r_flex"):
        config_from_dict(doc)
