"""Warning protocol state-machine tests."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from railwarn.geo import GeoPoint
from railwarn.protocol import (
    ObuState,
    ProtocolError,
    RsuState,
    TrainState,
    WarningMessage,
    next_broadcast,
    obu_ingest,
    obu_warning_active,
    rsu_ingest,
    warning_active,
)

POS = GeoPoint(39.0, -105.0)


def make_msg(seq=0, relayed=False, relay_id=None, train_id="train", ts=0):
    return WarningMessage(
        train_id=train_id,
        seq=seq,
        position=POS,
        speed_mps=25.0,
        heading_deg=180.0,
        timestamp_ms=ts,
        relayed=relayed,
        relay_id=relay_id,
    )


class TestWarningMessage:
    def test_negative_seq_rejected(self):
        with pytest.raises(ProtocolError):
            make_msg(seq=-1)

    def test_relay_flag_consistency(self):
        with pytest.raises(ProtocolError):
            make_msg(relayed=True, relay_id=None)
        with pytest.raises(ProtocolError):
            make_msg(relayed=False, relay_id="rsu")
        assert make_msg(relayed=True, relay_id="rsu").relay_id == "rsu"


class TestWarningActive:
    def test_approaching_is_active(self):
        assert warning_active(0.0, 9000.0, 100.0) is True
        assert warning_active(8999.0, 9000.0, 100.0) is True

    def test_at_crossing_is_active(self):
        assert warning_active(9000.0, 9000.0, 100.0) is True

    def test_inside_margin_past_crossing_is_active(self):
        assert warning_active(9100.0, 9000.0, 100.0) is True

    def test_past_margin_clears(self):
        assert warning_active(9100.000001, 9000.0, 100.0) is False
        assert warning_active(12000.0, 9000.0, 100.0) is False


class TestNextBroadcast:
    def test_emits_on_epoch(self):
        state = TrainState("train")
        msg = next_broadcast(state, 0, 100, True, POS, 25.0, 180.0)
        assert msg is not None and msg.seq == 0 and msg.timestamp_ms == 0
        assert msg.relayed is False and msg.relay_id is None

    def test_silent_off_epoch(self):
        state = TrainState("train")
        assert next_broadcast(state, 150, 100, True, POS, 25.0, 180.0) is None
        assert state.next_seq == 0

    def test_inactive_does_not_consume_seq(self):
        state = TrainState("train")
        assert next_broadcast(state, 100, 100, False, POS, 25.0, 180.0) is None
        msg = next_broadcast(state, 200, 100, True, POS, 25.0, 180.0)
        assert msg is not None and msg.seq == 0

    def test_sequence_increments_per_emission(self):
        state = TrainState("train")
        seqs = []
        for t in range(0, 1000, 100):
            m = next_broadcast(state, t, 200, True, POS, 25.0, 180.0)
            if m is not None:
                seqs.append((t, m.seq))
        assert seqs == [(0, 0), (200, 1), (400, 2), (600, 3), (800, 4)]

    def test_rejects_bad_period(self):
        with pytest.raises(ProtocolError):
            next_broadcast(TrainState("t"), 0, 0, True, POS, 25.0, 180.0)


class TestRsuIngest:
    def test_relays_fresh_message(self):
        state = RsuState("rsu")
        out = rsu_ingest(state, make_msg(seq=5))
        assert out is not None
        assert out.relayed is True and out.relay_id == "rsu"
        assert (out.train_id, out.seq, out.timestamp_ms) == ("train", 5, 0)

    def test_payload_preserved(self):
        state = RsuState("rsu")
        out = rsu_ingest(state, make_msg(seq=5))
        assert out.position == POS and out.speed_mps == 25.0 and out.heading_deg == 180.0

    def test_duplicate_suppressed(self):
        state = RsuState("rsu")
        assert rsu_ingest(state, make_msg(seq=5)) is not None
        assert rsu_ingest(state, make_msg(seq=5)) is None
        assert rsu_ingest(state, make_msg(seq=6)) is not None

    def test_relayed_copy_never_rerelayed(self):
        state = RsuState("rsu")
        assert rsu_ingest(state, make_msg(seq=1, relayed=True, relay_id="other")) is None

    def test_disabled_rsu_is_silent(self):
        state = RsuState("rsu", relay_enabled=False)
        assert rsu_ingest(state, make_msg(seq=1)) is None

    def test_dedup_is_per_train(self):
        state = RsuState("rsu")
        assert rsu_ingest(state, make_msg(seq=5, train_id="a")) is not None
        assert rsu_ingest(state, make_msg(seq=5, train_id="b")) is not None


class TestObuLatch:
    def test_no_message_means_inactive(self):
        assert obu_warning_active(ObuState("obu"), 12345) is False

    def test_hold_window_inclusive(self):
        state = ObuState("obu", hold_time_ms=3000)
        obu_ingest(state, make_msg(), now_ms=1000)
        assert obu_warning_active(state, 1000) is True
        assert obu_warning_active(state, 4000) is True
        assert obu_warning_active(state, 4001) is False

    def test_new_message_extends_hold(self):
        state = ObuState("obu", hold_time_ms=3000)
        obu_ingest(state, make_msg(seq=0), now_ms=1000)
        obu_ingest(state, make_msg(seq=1, relayed=True, relay_id="rsu"), now_ms=3000)
        assert obu_warning_active(state, 6000) is True
        assert obu_warning_active(state, 6001) is False

    def test_negative_hold_rejected(self):
        with pytest.raises(ProtocolError):
            ObuState("obu", hold_time_ms=-1)

    @given(
        hold=st.integers(min_value=0, max_value=10_000),
        rx=st.integers(min_value=0, max_value=10_000),
        probe=st.integers(min_value=0, max_value=30_000),
    )
    @settings(max_examples=200, deadline=None)
    def test_latch_matches_window_arithmetic(self, hold, rx, probe):
        state = ObuState("obu", hold_time_ms=hold)
        obu_ingest(state, make_msg(), now_ms=rx)
        assert obu_warning_active(state, probe) == (probe - rx <= hold)
