import json
import random
import socket

import pytest
from click.testing import CliRunner

from haina.blockstore import BlockStore
from haina.cli import main
from haina.metafile import parse_meta_file
from haina.metrics import rows_from_csv
from haina.node import NodeServer, NodeService
from haina.nodefile import make_node_file
from haina.realnet import RealNet


def _run(*args, **kw):
    return CliRunner().invoke(main, list(args), **kw)


def _spec_file(tmp_path, **overrides):
    doc = dict(nodes=5, seed=42, events=3, file_bytes=2000, blocks=8, latency_ms=5.0)
    doc.update(overrides)
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestSimCommand:
    def test_writes_csv(self, tmp_path):
        out = tmp_path / "rows.csv"
        result = _run("sim", "--spec", _spec_file(tmp_path), "--experiment", "fairness", "--out", str(out))
        assert result.exit_code == 0, result.output
        rows = rows_from_csv(out.read_text())
        assert rows and any(r.kind == "block_node" for r in rows)

    def test_same_seed_byte_identical(self, tmp_path):
        spec = _spec_file(tmp_path)
        outputs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            result = _run("sim", "--spec", spec, "--experiment", "decision_time", "--out", str(out))
            assert result.exit_code == 0, result.output
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_bad_spec_exits_2(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"nodes": 5, "seed": 1, "bogus": True}))
        result = _run("sim", "--spec", str(spec), "--experiment", "fairness", "--out", str(tmp_path / "x.csv"))
        assert result.exit_code == 2
        assert "bogus" in result.output

    def test_unknown_experiment_rejected_by_click(self, tmp_path):
        result = _run("sim", "--spec", _spec_file(tmp_path), "--experiment", "nope", "--out", "x.csv")
        assert result.exit_code == 2


class TestUsageErrors:
    def test_missing_nf_file(self, tmp_path):
        data = tmp_path / "f.bin"
        data.write_bytes(b"x")
        result = _run("upload", "--file", str(data), "--nf", str(tmp_path / "missing.nf"))
        assert result.exit_code == 2

    def test_corrupt_meta_exits_2(self, tmp_path):
        meta = tmp_path / "f.haina.meta"
        meta.write_text("not json")
        nf = tmp_path / "cluster.nf"
        nf.write_bytes(make_node_file(["h:1"]).canonical_bytes())
        result = _run("download", "--meta", str(meta), "--nf", str(nf), "--out", str(tmp_path / "out"))
        assert result.exit_code == 2

    def test_unreachable_cluster_exits_3(self, tmp_path):
        dead = []
        for _ in range(2):
            with socket.socket() as probe:
                probe.bind(("127.0.0.1", 0))
                dead.append(f"127.0.0.1:{probe.getsockname()[1]}")
        data = tmp_path / "f.bin"
        data.write_bytes(b"payload")
        nf = tmp_path / "cluster.nf"
        nf.write_bytes(make_node_file(dead).canonical_bytes())
        result = _run("upload", "--file", str(data), "--blocks", "1", "--nf", str(nf), "--seed", "1")
        assert result.exit_code == 3


@pytest.fixture
def live_cluster(tmp_path):
    servers = []
    addresses = []
    for _ in range(3):
        with socket.socket() as probe:
            probe.bind(("127.0.0.1", 0))
            addresses.append(f"127.0.0.1:{probe.getsockname()[1]}")
    nf = make_node_file(addresses)
    for addr in addresses:
        service = NodeService(addr, BlockStore(10**9), nf, transport=RealNet())
        host, port = addr.rsplit(":", 1)
        server = NodeServer((host, int(port)), service)
        server.serve_background()
        servers.append(server)
    nf_path = tmp_path / "cluster.nf"
    nf_path.write_bytes(nf.canonical_bytes())
    yield str(nf_path)
    for server in servers:
        server.shutdown()
        server.server_close()


class TestLiveRoundTrip:
    def test_upload_then_download(self, tmp_path, live_cluster):
        payload = random.Random(5).randbytes(3000)
        src = tmp_path / "file.bin"
        src.write_bytes(payload)
        csv_path = tmp_path / "up.csv"
        result = _run(
            "upload", "--file", str(src), "--blocks", "6", "--nf", live_cluster,
            "--seed", "9", "--csv-out", str(csv_path),
        )
        assert result.exit_code == 0, result.output
        meta_path = tmp_path / "file.bin.haina.meta"
        assert meta_path.exists()  # default meta path uses the .haina.meta suffix
        meta = parse_meta_file(meta_path.read_bytes())
        assert meta.block_count == 6
        rows = rows_from_csv(csv_path.read_text())
        assert sum(1 for r in rows if r.kind == "block_node") == 6

        out = tmp_path / "restored.bin"
        for mode in ("bi", "uni"):
            result = _run(
                "download", "--meta", str(meta_path), "--nf", live_cluster,
                "--out", str(out), "--mode", mode,
            )
            assert result.exit_code == 0, result.output
            assert out.read_bytes() == payload
