"""RF channel tests.

Free-space values are checked against an independently derived constant:
20*log10(4*pi*f/c) at 5.9 GHz and 1 m is 47.86482345472626 dB, and every
distance doubling adds 20*log10(2) = 6.0205999132796240 dB.
"""

from __future__ import annotations

import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from railwarn.channel import (
    CARRIER_HZ,
    DEFAULT_SENSITIVITY_DBM,
    ChannelError,
    LinkResult,
    PathLossModel,
    PowerClass,
    Radio,
    ReceptionModel,
    evaluate_link,
    free_space_path_loss_db,
    packet_rng,
    packet_success,
    received_power_dbm,
)

FSPL_1M_5G9_DB = 47.86482345472626
DOUBLING_DB = 20.0 * math.log10(2.0)


class TestFreeSpacePathLoss:
    def test_reference_value_at_one_metre(self):
        assert free_space_path_loss_db(1.0) == pytest.approx(FSPL_1M_5G9_DB, abs=1e-9)

    def test_doubling_distance_adds_six_db(self):
        for d in (1.0, 10.0, 123.0):
            delta = free_space_path_loss_db(2 * d) - free_space_path_loss_db(d)
            assert delta == pytest.approx(DOUBLING_DB, abs=1e-9)

    def test_scales_with_frequency(self):
        low = free_space_path_loss_db(100.0, 2.95e9)
        high = free_space_path_loss_db(100.0, 5.9e9)
        assert high - low == pytest.approx(DOUBLING_DB, abs=1e-9)

    @pytest.mark.parametrize("d", [0.0, -1.0])
    def test_nonpositive_distance_rejected(self, d):
        with pytest.raises(ChannelError):
            free_space_path_loss_db(d)

    def test_nonpositive_frequency_rejected(self):
        with pytest.raises(ChannelError):
            free_space_path_loss_db(10.0, 0.0)


class TestPathLossModel:
    def test_exponent_two_reduces_to_free_space(self):
        m = PathLossModel(exponent=2.0, ref_distance_m=1.0)
        for d in (1.0, 37.0, 4000.0):
            assert m.mean_loss_db(d) == pytest.approx(free_space_path_loss_db(d), abs=1e-9)

    def test_anchored_at_reference_distance(self):
        m = PathLossModel(exponent=3.1, ref_distance_m=10.0)
        assert m.mean_loss_db(10.0) == pytest.approx(free_space_path_loss_db(10.0), abs=1e-9)

    def test_clamps_inside_reference(self):
        m = PathLossModel(exponent=2.8, ref_distance_m=5.0)
        assert m.mean_loss_db(0.5) == m.mean_loss_db(5.0)

    def test_slope_per_decade(self):
        m = PathLossModel(exponent=2.8, ref_distance_m=1.0)
        assert m.mean_loss_db(1000.0) - m.mean_loss_db(100.0) == pytest.approx(28.0, abs=1e-9)

    @pytest.mark.parametrize("exp", [1.59, 6.01, 0.0, -2.0])
    def test_exponent_bounds(self, exp):
        with pytest.raises(ChannelError):
            PathLossModel(exponent=exp)

    def test_other_validation(self):
        with pytest.raises(ChannelError):
            PathLossModel(ref_distance_m=0.0)
        with pytest.raises(ChannelError):
            PathLossModel(shadow_sigma_db=-1.0)

    @given(
        exp=st.floats(min_value=1.6, max_value=6.0),
        ref=st.floats(min_value=0.1, max_value=100.0),
        d1=st.floats(min_value=0.1, max_value=50_000.0),
        d2=st.floats(min_value=0.1, max_value=50_000.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_mean_loss_monotone_in_distance(self, exp, ref, d1, d2):
        m = PathLossModel(exponent=exp, ref_distance_m=ref)
        lo, hi = sorted((d1, d2))
        assert m.mean_loss_db(lo) <= m.mean_loss_db(hi) + 1e-12


class TestPowerClassAndRadio:
    def test_class_powers(self):
        assert PowerClass.PRIVATE.value == 11.0
        assert PowerClass.PUBLIC_SAFETY.value == 23.0
        assert PowerClass.PUBLIC_SAFETY.value - PowerClass.PRIVATE.value == 12.0

    def test_parse(self):
        assert PowerClass.parse("private") is PowerClass.PRIVATE
        assert PowerClass.parse("PUBLIC_SAFETY") is PowerClass.PUBLIC_SAFETY
        with pytest.raises(ChannelError):
            PowerClass.parse("commercial")

    def test_sensitivity_table(self):
        assert DEFAULT_SENSITIVITY_DBM == {"MCS0": -94.0, "MCS2": -88.0, "MCS4": -82.0}

    def test_radio_resolves_sensitivity_from_mcs(self):
        r = Radio(PowerClass.PRIVATE, mcs="MCS0")
        assert r.sensitivity_dbm == -94.0
        assert r.tx_power_dbm == 11.0

    def test_radio_explicit_sensitivity_wins(self):
        r = Radio(PowerClass.PRIVATE, mcs="MCS0", sensitivity_dbm=-70.0)
        assert r.sensitivity_dbm == -70.0

    def test_radio_unknown_mcs_rejected(self):
        with pytest.raises(ChannelError, match="MCS"):
            Radio(PowerClass.PRIVATE, mcs="MCS9")

    def test_tx_power_override(self):
        r = Radio(PowerClass.PRIVATE, tx_power_override_dbm=17.5)
        assert r.tx_power_dbm == 17.5


class TestPacketRng:
    def test_deterministic(self):
        a = packet_rng(7, 3, "obu", "train", "soft").random()
        b = packet_rng(7, 3, "obu", "train", "soft").random()
        assert a == b

    def test_sensitive_to_every_component(self):
        base = packet_rng(7, 3, "obu", "train", "soft").random()
        assert packet_rng(8, 3, "obu", "train", "soft").random() != base
        assert packet_rng(7, 4, "obu", "train", "soft").random() != base
        assert packet_rng(7, 3, "obu2", "train", "soft").random() != base
        assert packet_rng(7, 3, "obu", "rsu", "soft").random() != base
        assert packet_rng(7, 3, "obu", "train", "shadow").random() != base


class TestPacketSuccess:
    def test_hard_threshold_with_tie(self):
        assert packet_success(-88.0, -88.0) is True
        assert packet_success(-87.999, -88.0) is True
        assert packet_success(-88.001, -88.0) is False

    def test_soft_requires_rng(self):
        with pytest.raises(ChannelError, match="rng"):
            packet_success(-80.0, -88.0, ReceptionModel.SOFT)

    def test_soft_rate_tracks_logistic(self):
        # at margin 0 the logistic gives exactly 1/2
        for margin, expected in ((0.0, 0.5), (2.0, 1 / (1 + math.exp(-2.0))), (-3.0, 1 / (1 + math.exp(3.0)))):
            rng = random.Random(123)
            n = 20_000
            hits = sum(
                packet_success(-88.0 + margin, -88.0, ReceptionModel.SOFT, rng) for _ in range(n)
            )
            assert hits / n == pytest.approx(expected, abs=0.01)

    def test_soft_saturates(self):
        rng = random.Random(0)
        assert all(packet_success(-40.0, -88.0, ReceptionModel.SOFT, rng) for _ in range(100))
        assert not any(packet_success(-130.0, -88.0, ReceptionModel.SOFT, rng) for _ in range(100))


class TestEvaluateLink:
    def test_budget_composition(self):
        res = evaluate_link(
            tx_power_dbm=23.0,
            tx_gain_dbi=12.0,
            rx_gain_dbi=6.0,
            distance_m=100.0,
            sensitivity_dbm=-88.0,
            path_loss=PathLossModel(),
            reception=ReceptionModel.HARD,
        )
        want = 23.0 + 12.0 + 6.0 - free_space_path_loss_db(100.0)
        assert res.rx_power_dbm == pytest.approx(want, abs=1e-9)
        assert res.margin_db == pytest.approx(want + 88.0, abs=1e-9)
        assert res.received is True

    def test_threshold_crossing_distance(self):
        # 11 dBm, unity gains, MCS4: budget zero at 10^(45.135.../20) m
        d_star = 10.0 ** ((11.0 + 82.0 - FSPL_1M_5G9_DB) / 20.0)
        model = PathLossModel()
        near = evaluate_link(11.0, 0.0, 0.0, d_star * 0.999, -82.0, model, ReceptionModel.HARD)
        far = evaluate_link(11.0, 0.0, 0.0, d_star * 1.001, -82.0, model, ReceptionModel.HARD)
        assert near.received is True
        assert far.received is False

    def test_coincident_endpoints_rejected(self):
        with pytest.raises(ChannelError, match="degenerate link geometry"):
            evaluate_link(23.0, 0.0, 0.0, 0.0, -88.0, PathLossModel(), ReceptionModel.HARD)

    def test_shadowing_requires_rng(self):
        model = PathLossModel(shadow_sigma_db=4.0)
        with pytest.raises(ChannelError, match="rng"):
            evaluate_link(23.0, 0.0, 0.0, 100.0, -88.0, model, ReceptionModel.HARD)

    def test_shadowing_perturbs_mean(self):
        model = PathLossModel(shadow_sigma_db=6.0)
        prx = [
            evaluate_link(
                23.0, 0.0, 0.0, 100.0, -88.0, model, ReceptionModel.HARD,
                shadow_rng=packet_rng(1, seq, "rx", "tx", "shadow"),
            ).rx_power_dbm
            for seq in range(400)
        ]
        mean = sum(prx) / len(prx)
        var = sum((p - mean) ** 2 for p in prx) / (len(prx) - 1)
        clear = 23.0 - free_space_path_loss_db(100.0)
        assert mean == pytest.approx(clear, abs=1.0)
        assert math.sqrt(var) == pytest.approx(6.0, abs=1.0)

    def test_received_power_helper(self):
        assert received_power_dbm(23.0, 12.0, 6.0, 90.0) == -49.0

    def test_link_result_fields(self):
        r = LinkResult(rx_power_dbm=-80.0, margin_db=8.0, received=True)
        assert (r.rx_power_dbm, r.margin_db, r.received) == (-80.0, 8.0, True)


class TestSoftModelStability:
    def test_identical_streams_reproduce_decisions(self):
        model = PathLossModel(exponent=2.8, shadow_sigma_db=5.5)
        outcomes = []
        for trial in range(2):
            hits = []
            for seq in range(200):
                res = evaluate_link(
                    23.0, 0.0, 0.0, 180.0, -88.0, model, ReceptionModel.SOFT,
                    shadow_rng=packet_rng(7, seq, "rx", "tx", "shadow"),
                    soft_rng=packet_rng(7, seq, "rx", "tx", "soft"),
                )
                hits.append(res.received)
            outcomes.append(hits)
        assert outcomes[0] == outcomes[1]
        assert len(Counter(outcomes[0])) == 2  # both True and False occur
