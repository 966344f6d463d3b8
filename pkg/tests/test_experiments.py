import json

import pytest

from haina.errors import ParseError, UsageError
from haina.experiments import ClusterSpec, parse_cluster_spec, run_experiment
from haina.metrics import MetricsRow, rows_from_csv, rows_to_csv


class TestClusterSpec:
    def test_parse_defaults(self):
        spec = parse_cluster_spec(json.dumps({"nodes": 5, "seed": 1}))
        assert spec.nodes == 5 and spec.rate == 0.1 and spec.blocks == 20

    def test_unknown_field_named(self):
        with pytest.raises(ParseError, match="bogus"):
            parse_cluster_spec(json.dumps({"nodes": 5, "seed": 1, "bogus": 2}))

    @pytest.mark.parametrize(
        "field,value", [("nodes", 1), ("rate", 0.0), ("k", 2.0), ("events", 0), ("blocks", 0)]
    )
    def test_invalid_value_named(self, field, value):
        doc = {"nodes": 5, "seed": 1, field: value}
        with pytest.raises(ParseError, match=field):
            parse_cluster_spec(json.dumps(doc))

    def test_not_json(self):
        with pytest.raises(ParseError):
            parse_cluster_spec("not json")


class TestMetricsCsv:
    def test_roundtrip(self):
        rows = [
            MetricsRow("e1", "decision_ms", 12.5, {"block": "1"}),
            MetricsRow("e1", "block_node", 2.0, {"node": "a:1", "x": "y"}),
        ]
        text = rows_to_csv(rows)
        assert text.splitlines()[0] == "event_id,kind,value,context"
        back = rows_from_csv(text)
        assert [(r.event_id, r.kind, r.value) for r in back] == [
            ("e1", "decision_ms", 12.5),
            ("e1", "block_node", 2.0),
        ]

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            MetricsRow("e", "nope", 1.0)


def _spec(**kw):
    base = dict(nodes=5, seed=42, events=3, file_bytes=2000, blocks=8, latency_ms=5.0)
    base.update(kw)
    return ClusterSpec(**base)


class TestExperiments:
    def test_unknown_experiment_rejected(self):
        with pytest.raises(UsageError):
            run_experiment(_spec(), "nope")

    def test_fairness_rows_respect_rate_cap(self):
        spec = _spec(nodes=10, blocks=20, events=5)
        rows = run_experiment(spec, "fairness")
        placements = [r for r in rows if r.kind == "block_node"]
        escalated = {r.event_id for r in rows if r.context.get("stage") == "rate_escalation"}
        cap = int(spec.rate * spec.blocks)
        for row in placements:
            if row.event_id not in escalated:
                assert row.value <= cap
        per_event = {}
        for row in placements:
            per_event[row.event_id] = per_event.get(row.event_id, 0) + row.value
        assert all(total == spec.blocks for total in per_event.values())

    def test_decision_time_bounded_by_link_model(self):
        spec = _spec(latency_ms=25.0)
        rows = run_experiment(spec, "decision_time")
        values = [r.value for r in rows if r.kind == "decision_ms"]
        assert values
        mean = sum(values) / len(values)
        assert 2 * 25.0 <= mean <= 4 * 25.0

    def test_bdam_speedup_rows(self):
        rows = run_experiment(_spec(blocks=21, file_bytes=4000, events=2), "bdam_speedup")
        speedups = [r.value for r in rows if r.kind == "speedup_pct"]
        assert len(speedups) == 2
        for pct in speedups:
            assert 40.0 <= pct <= 55.0

    def test_capacity_totals_match_exactly(self):
        rows = run_experiment(_spec(), "capacity")
        by_stage = {r.context["stage"]: r.value for r in rows if "stage" in r.context}
        assert by_stage["total_stored_bytes"] == by_stage["total_chain_bytes"]

    def test_same_spec_same_seed_identical_csv(self):
        a = rows_to_csv(run_experiment(_spec(), "fairness"))
        b = rows_to_csv(run_experiment(_spec(), "fairness"))
        assert a == b

    def test_different_seed_differs(self):
        # with jitter the per-campaign timings are seed-sensitive
        a = rows_to_csv(run_experiment(_spec(jitter_ms=2.0), "decision_time"))
        b = rows_to_csv(run_experiment(_spec(jitter_ms=2.0, seed=43), "decision_time"))
        assert a != b
