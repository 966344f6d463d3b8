import random
from collections import Counter

import pytest

from haina.errors import CampaignError, IntegrityError, UsageError
from haina.frames import Frame, MsgType
from haina.nodefile import make_node_file, node_index, parse_node_file, update_node_file
from haina.por import (
    BYTES_PER_GB,
    CandidateRecord,
    PorConfig,
    ProvisionalRecords,
    check_rate,
    judge,
    pick_first_beginner,
    run_campaign,
)


class TestJudge:
    def test_direct_arithmetic(self):
        assert judge(100, 50, 1.0) == 2.0

    def test_zero_capacity(self):
        assert judge(0, 10, 1.0) == 0.0

    def test_clamp_then_scale(self):
        assert judge(8, 0.25, 0.5) == 4.0

    def test_negative_capacity_rejected(self):
        with pytest.raises(UsageError):
            judge(-1, 10)

    def test_bad_k_rejected(self):
        with pytest.raises(UsageError):
            judge(1, 1, k=0)
        with pytest.raises(UsageError):
            judge(1, 1, k=1.5)

    def test_common_scaling_preserves_order(self):
        rng = random.Random(11)
        for _ in range(30):
            pairs = [(rng.uniform(0, 100), rng.uniform(0.1, 200)) for _ in range(8)]
            factor = rng.uniform(0.1, 50)
            base = sorted(range(8), key=lambda i: -judge(*pairs[i]))
            scaled_nc = sorted(range(8), key=lambda i: -judge(pairs[i][0] * factor, pairs[i][1]))
            assert base == scaled_nc


class TestPickFirstBeginner:
    NF = make_node_file([f"h{i:02d}:1" for i in range(1, 48)])

    def test_modular_index(self):
        assert pick_first_beginner(self.NF, 52) == self.NF.addresses[52 % 47]

    def test_zero_draw(self):
        assert pick_first_beginner(self.NF, 0) == self.NF.addresses[0]

    def test_empty_roster_rejected(self):
        with pytest.raises(UsageError):
            pick_first_beginner(make_node_file([]), 1)

    def test_seeded_draws_cover_all_indices(self):
        rng = random.Random(7)
        hits = Counter(pick_first_beginner(self.NF, rng.getrandbits(32)) for _ in range(10_000))
        assert set(hits) == set(self.NF.addresses)
        # rough uniformity: every node within a factor of 2 of the mean
        mean = 10_000 / 47
        assert all(mean / 2 < c < mean * 2 for c in hits.values())


class StubTransport:
    """Scripted follower replies: addr -> (freespace bytes, rtt ms) or None."""

    def __init__(self, replies):
        self.replies = replies

    def broadcast(self, origin, dsts, frame, timeout_ms):
        out = {}
        for dst in dsts:
            entry = self.replies.get(dst)
            if entry is None:
                out[dst] = None
            elif entry == "refuse":
                out[dst] = (Frame(MsgType.REFUSE, {"freespace": "0"}), 1.0)
            else:
                free, rtt = entry
                out[dst] = (Frame(MsgType.TAKEPART, {"freespace": str(free)}), rtt)
        return out


class TestRunCampaign:
    def test_values_sorted_descending(self):
        nf = make_node_file(["b:1", "n1:1", "n2:1", "n3:1"])
        transport = StubTransport(
            {
                "n1:1": (100 * BYTES_PER_GB, 50.0),
                "n2:1": (100 * BYTES_PER_GB, 10.0),
                "n3:1": (5 * BYTES_PER_GB, 1.0),
            }
        )
        result = run_campaign(transport, "b:1", 1024, nf, PorConfig())
        assert [c.address for c in result.candidates] == ["n2:1", "n3:1", "n1:1"]
        assert [c.value for c in result.candidates] == [10.0, 5.0, 2.0]

    def test_beginner_excluded_from_poll(self):
        nf = make_node_file(["b:1", "n1:1"])
        seen = []

        class Spy(StubTransport):
            def broadcast(self, origin, dsts, frame, timeout_ms):
                seen.extend(dsts)
                return super().broadcast(origin, dsts, frame, timeout_ms)

        run_campaign(Spy({"n1:1": (BYTES_PER_GB, 5.0)}), "b:1", 1, nf, PorConfig())
        assert seen == ["n1:1"]

    def test_insufficient_freespace_never_appears(self):
        nf = make_node_file(["b:1", "small:1", "big:1"])
        transport = StubTransport({"small:1": (10, 1.0), "big:1": (BYTES_PER_GB, 1.0)})
        result = run_campaign(transport, "b:1", 1000, nf, PorConfig())
        assert [c.address for c in result.candidates] == ["big:1"]

    def test_tie_break_keeps_roster_order(self):
        nf = make_node_file(["b:1", "x1:1", "x2:1"])
        transport = StubTransport({"x1:1": (BYTES_PER_GB, 5.0), "x2:1": (BYTES_PER_GB, 5.0)})
        result = run_campaign(transport, "b:1", 1, nf, PorConfig())
        assert [c.address for c in result.candidates] == ["x1:1", "x2:1"]

    def test_refusals_and_silence_omitted(self):
        nf = make_node_file(["b:1", "mute:1", "no:1", "yes:1"])
        transport = StubTransport({"mute:1": None, "no:1": "refuse", "yes:1": (BYTES_PER_GB, 2.0)})
        result = run_campaign(transport, "b:1", 1, nf, PorConfig())
        assert [c.address for c in result.candidates] == ["yes:1"]
        assert result.elapsed_ms == PorConfig().timeout_ms  # waited out the silent node

    def test_zero_candidates_raises(self):
        nf = make_node_file(["b:1", "no:1"])
        with pytest.raises(CampaignError):
            run_campaign(StubTransport({"no:1": "refuse"}), "b:1", 1, nf, PorConfig())


def _cands(*addresses):
    return [
        CandidateRecord(address=a, freespace_gb=1.0, rtt_ms=1.0, value=1.0 - i * 0.01, nf_index=i + 1)
        for i, a in enumerate(addresses)
    ]


class TestCheckRate:
    def test_rule_a_prefers_empty_node(self):
        records = ProvisionalRecords(total_blocks=20, counts={"a:1": 1})
        chosen, rate, escalated = check_rate(_cands("a:1", "b:1"), records, 0.1, 0.1)
        assert chosen == "b:1" and not escalated and rate == 0.1

    def test_rule_b_skips_over_threshold_node(self):
        # 20 blocks, rate 0.1: a node holding 2 would go to 3/20 > 0.1
        records = ProvisionalRecords(total_blocks=20, counts={"a:1": 2, "b:1": 1})
        chosen, rate, escalated = check_rate(_cands("a:1", "b:1"), records, 0.1, 0.1)
        assert chosen == "b:1" and not escalated

    def test_rule_a_beats_rule_b(self):
        records = ProvisionalRecords(total_blocks=20, counts={"a:1": 1})
        chosen, _, _ = check_rate(_cands("a:1", "c:1"), records, 0.1, 0.1)
        assert chosen == "c:1"

    def test_all_empty_takes_top_value(self):
        records = ProvisionalRecords(total_blocks=20)
        chosen, _, escalated = check_rate(_cands("a:1", "b:1"), records, 0.1, 0.1)
        assert chosen == "a:1" and not escalated

    def test_rule_c_escalates(self):
        records = ProvisionalRecords(total_blocks=20, counts={"a:1": 2})
        chosen, rate, escalated = check_rate(_cands("a:1"), records, 0.1, 0.1)
        assert chosen == "a:1" and escalated
        assert rate == pytest.approx(0.2)


class TestProvisionalRecords:
    def test_tally_and_unrecord(self):
        records = ProvisionalRecords(total_blocks=3)
        records.record("a:1")
        records.record("a:1")
        assert records.count("a:1") == 2
        records.unrecord("a:1")
        assert records.count("a:1") == 1

    def test_cannot_exceed_event_total(self):
        records = ProvisionalRecords(total_blocks=1)
        records.record("a:1")
        with pytest.raises(UsageError):
            records.record("b:1")


class TestNodeFile:
    def test_canonical_sorted_with_trailing_newline(self):
        nf = make_node_file(["b:2", "a:1", "b:2"])
        assert nf.canonical_bytes() == b"a:1\nb:2\n"
        assert parse_node_file(nf.canonical_bytes()) == nf

    def test_update_short_circuits_on_equal_digest(self):
        nf = make_node_file(["a:1"])
        assert update_node_file(nf, nf.digest, lambda: (_ for _ in ()).throw(AssertionError)) is nf

    def test_update_adopts_verified_remote(self):
        local = make_node_file(["a:1"])
        remote = make_node_file(["a:1", "b:2"])
        adopted = update_node_file(local, remote.digest, remote.canonical_bytes)
        assert adopted == remote

    def test_tampered_remote_rejected(self):
        local = make_node_file(["a:1"])
        remote = make_node_file(["a:1", "b:2"])
        body = bytearray(remote.canonical_bytes())
        body[0] ^= 1
        with pytest.raises(IntegrityError):
            update_node_file(local, remote.digest, lambda: bytes(body))

    def test_node_index_is_one_based(self):
        nf = make_node_file(["a:1", "b:2"])
        assert node_index(nf, "a:1") == 1
        assert node_index(nf, "b:2") == 2
