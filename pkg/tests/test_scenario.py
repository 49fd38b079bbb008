"""Scenario loading, validation, canonicalization, and compare legs."""

from __future__ import annotations

import copy

import pytest

from railwarn.antenna import LinearArrayAntenna, OmniAntenna
from railwarn.channel import PowerClass, ReceptionModel
from railwarn.exceptions import ScenarioError
from railwarn.scenario import (
    COMPARE_AXES,
    compare_legs,
    load_scenario,
    scenario_from_dict,
    scenario_hash,
    scenario_to_dict,
    with_seed,
)


def fields_of(err: ScenarioError) -> set[str]:
    return {i.field for i in err.issues}


class TestLoadBundledConfigs:
    def test_demo_loads(self, demo_path):
        sc = load_scenario(demo_path)
        assert sc.train.train_id == "train"
        assert sc.rsu.relay_enabled is False
        assert len(sc.obus) == 1
        assert sc.reception is ReceptionModel.HARD
        assert isinstance(sc.train.antenna, LinearArrayAntenna)
        assert sc.train.antenna.elements == 8

    def test_sweep_loads(self, sweep_path):
        sc = load_scenario(sweep_path)
        assert len(sc.obus) == 2
        assert {o.obu_id for o in sc.obus} == {"obu_boresight", "obu_offaxis"}


class TestDefaults:
    def test_rsu_inherits_train_radio_and_antenna(self, line_dict):
        del line_dict["rsu"]["radio"]
        del line_dict["rsu"]["antenna"]
        sc = scenario_from_dict(line_dict)
        assert sc.rsu.radio == sc.train.radio
        assert sc.rsu.antenna == sc.train.antenna

    def test_obu_defaults(self, line_dict):
        del line_dict["obus"][0]["radio"]
        del line_dict["obus"][0]["antenna"]
        sc = scenario_from_dict(line_dict)
        assert sc.obus[0].radio == sc.train.radio
        assert sc.obus[0].antenna == OmniAntenna(0.0)
        assert sc.obus[0].hold_time_ms == 3000

    def test_timing_defaults(self, line_dict):
        for key in ("broadcast_period_ms", "clear_margin_m"):
            line_dict.pop(key, None)
        sc = scenario_from_dict(line_dict)
        assert sc.broadcast_period_ms == 100
        assert sc.clear_margin_m == 100.0


class TestValidation:
    def test_collects_all_issues_in_one_error(self, line_dict):
        line_dict["duration_ms"] = -5
        line_dict["timestep_ms"] = 0
        line_dict["train"]["radio"]["mcs"] = "MCS9"
        line_dict["obus"][0]["road_index"] = 7
        with pytest.raises(ScenarioError) as ei:
            scenario_from_dict(line_dict)
        assert {
            "duration_ms",
            "timestep_ms",
            "train.radio.mcs",
            "obus[0].road_index",
        } <= fields_of(ei.value)

    def test_period_must_divide_into_timesteps(self, line_dict):
        line_dict["timestep_ms"] = 100
        line_dict["broadcast_period_ms"] = 150
        with pytest.raises(ScenarioError) as ei:
            scenario_from_dict(line_dict)
        assert "broadcast_period_ms" in fields_of(ei.value)

    def test_crossing_must_lie_on_track(self, line_dict):
        line_dict["crossing_arclength_m"] = 99_999.0
        with pytest.raises(ScenarioError) as ei:
            scenario_from_dict(line_dict)
        assert "crossing_arclength_m" in fields_of(ei.value)

    def test_obu_arclength_bounds(self, line_dict):
        line_dict["obus"][0]["initial_arclength_m"] = 500.0  # road is 20 m long
        with pytest.raises(ScenarioError) as ei:
            scenario_from_dict(line_dict)
        assert any("initial_arclength_m" in f for f in fields_of(ei.value))

    def test_unknown_power_class(self, line_dict):
        line_dict["train"]["radio"]["power_class"] = "military"
        with pytest.raises(ScenarioError) as ei:
            scenario_from_dict(line_dict)
        assert "train.radio.power_class" in fields_of(ei.value)

    def test_unknown_antenna_kind(self, line_dict):
        line_dict["train"]["antenna"] = {"kind": "parabolic"}
        with pytest.raises(ScenarioError):
            scenario_from_dict(line_dict)

    def test_unknown_reception_model(self, line_dict):
        line_dict["reception"] = "fuzzy"
        with pytest.raises(ScenarioError) as ei:
            scenario_from_dict(line_dict)
        assert "reception" in fields_of(ei.value)

    def test_duplicate_unit_ids(self, line_dict):
        line_dict["obus"][0]["id"] = "rsu"
        with pytest.raises(ScenarioError):
            scenario_from_dict(line_dict)

    def test_free_space_rejects_other_exponent(self, line_dict):
        line_dict["path_loss"] = {"kind": "free_space", "exponent": 2.8}
        with pytest.raises(ScenarioError) as ei:
            scenario_from_dict(line_dict)
        assert any("path_loss" in f for f in fields_of(ei.value))

    def test_unknown_path_loss_kind(self, line_dict):
        line_dict["path_loss"] = {"kind": "two_ray"}
        with pytest.raises(ScenarioError):
            scenario_from_dict(line_dict)

    def test_relay_delay_must_align_to_timestep(self, line_dict):
        line_dict["rsu"]["relay_delay_ms"] = 150
        with pytest.raises(ScenarioError) as ei:
            scenario_from_dict(line_dict)
        assert "rsu.relay_delay_ms" in fields_of(ei.value)

    def test_non_dict_input(self):
        with pytest.raises(ScenarioError):
            scenario_from_dict([1, 2, 3])


class TestPowerOverride:
    def test_override_rejected_without_flag(self, line_dict):
        line_dict["train"]["radio"]["tx_power_dbm"] = 30.0
        with pytest.raises(ScenarioError) as ei:
            scenario_from_dict(line_dict)
        assert "train.radio.tx_power_dbm" in fields_of(ei.value)

    def test_override_allowed_with_flag(self, line_dict):
        line_dict["train"]["radio"]["allow_power_override"] = True
        line_dict["train"]["radio"]["tx_power_dbm"] = 30.0
        sc = scenario_from_dict(line_dict)
        assert sc.train.radio.tx_power_dbm == 30.0
        assert sc.train.radio.power_class is PowerClass.PRIVATE


class TestSensitivityOverrides:
    def test_table_override_applies(self, line_dict):
        line_dict["sensitivity_dbm"] = {"MCS4": -85.0}
        sc = scenario_from_dict(line_dict)
        assert sc.train.radio.sensitivity_dbm == -85.0

    def test_other_entries_keep_defaults(self, line_dict):
        line_dict["sensitivity_dbm"] = {"MCS4": -85.0}
        line_dict["rsu"]["radio"]["mcs"] = "MCS0"
        sc = scenario_from_dict(line_dict)
        assert sc.rsu.radio.sensitivity_dbm == -94.0


class TestCanonicalization:
    def test_round_trip_preserves_scenario(self, demo_path):
        sc = load_scenario(demo_path)
        again = scenario_from_dict(scenario_to_dict(sc))
        assert again == sc

    def test_hash_is_stable(self, demo_path):
        sc = load_scenario(demo_path)
        h1 = scenario_hash(sc)
        h2 = scenario_hash(load_scenario(demo_path))
        assert h1 == h2
        assert len(h1) == 16
        int(h1, 16)  # hex digest prefix

    def test_hash_changes_with_content(self, demo_path):
        sc = load_scenario(demo_path)
        assert scenario_hash(with_seed(sc, sc.seed + 1)) != scenario_hash(sc)

    def test_with_seed(self, demo_path):
        sc = load_scenario(demo_path)
        sc2 = with_seed(sc, 99)
        assert sc2.seed == 99
        assert sc2.track == sc.track


class TestCompareLegs:
    def test_axes_constant(self):
        assert COMPARE_AXES == ("antenna", "relay", "power")

    def test_relay_axis(self, line_dict):
        sc = scenario_from_dict(line_dict)
        (lbl_a, a), (lbl_b, b) = compare_legs(sc, "relay")
        assert (lbl_a, lbl_b) == ("relay_on", "relay_off")
        assert a.rsu.relay_enabled is True
        assert b.rsu.relay_enabled is False

    def test_power_axis_varies_both_transmitters(self, line_dict):
        sc = scenario_from_dict(line_dict)
        (lbl_a, a), (lbl_b, b) = compare_legs(sc, "power")
        assert (lbl_a, lbl_b) == ("public_safety_23dbm", "private_11dbm")
        assert a.train.radio.power_class is PowerClass.PUBLIC_SAFETY
        assert a.rsu.radio.power_class is PowerClass.PUBLIC_SAFETY
        assert b.train.radio.power_class is PowerClass.PRIVATE
        assert b.rsu.radio.power_class is PowerClass.PRIVATE

    def test_antenna_axis_swaps_train_array_for_element(self, demo_path):
        sc = load_scenario(demo_path)
        (lbl_a, a), (lbl_b, b) = compare_legs(sc, "antenna")
        assert (lbl_a, lbl_b) == ("array", "omni")
        assert isinstance(a.train.antenna, LinearArrayAntenna)
        assert b.train.antenna == OmniAntenna(a.train.antenna.element_gain_dbi)

    def test_antenna_axis_requires_array(self, line_dict):
        sc = scenario_from_dict(line_dict)
        with pytest.raises(ScenarioError):
            compare_legs(sc, "antenna")

    def test_unknown_axis(self, line_dict):
        sc = scenario_from_dict(line_dict)
        with pytest.raises(ScenarioError):
            compare_legs(sc, "sideways")
