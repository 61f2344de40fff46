import os
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest
from click.testing import CliRunner

from salp.cli import main

BLOB_ARGS = ["--kind", "blobs", "--blobs", "3", "--dims", "5", "--n", "60",
             "--sep", "8", "--seed", "1"]
FAST_RUN = ["--fractions", "0.2,0.5,0.3", "--perplexity", "5", "--iters", "150"]


def invoke(*args):
    runner = CliRunner()
    return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)


@pytest.fixture
def blob_manifest(tmp_path):
    result = invoke("synth", *BLOB_ARGS, "--out", tmp_path / "data")
    assert result.exit_code == 0
    return tmp_path / "data" / "manifest.txt"


def archive_bytes(directory: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file()}


class TestStages:
    def test_synth_split_project_propagate_chain(self, tmp_path, blob_manifest):
        sess = tmp_path / "sess"
        for args in (
            ["split", "--manifest", blob_manifest, "--fractions", "0.2,0.5,0.3",
             "--seed", "1", "--out", sess],
            ["project", "--manifest", blob_manifest, "--perplexity", "5",
             "--iters", "150", "--seed", "1", "--out", sess],
            ["propagate", "--manifest", blob_manifest, "--tau", "0.75",
             "--out", sess],
        ):
            result = invoke(*args)
            assert result.exit_code == 0, result.output
        for name in ("split.txt", "projection.txt", "propagation.txt", "tau.txt",
                     "labels_manual.txt", "session.txt"):
            assert (sess / name).exists()

    def test_featurize_reduces_dims(self, tmp_path, blob_manifest):
        result = invoke("featurize", "--manifest", blob_manifest, "--k", "2",
                        "--seed", "0", "--out", tmp_path / "reduced")
        assert result.exit_code == 0
        from salp.data import load_dataset_full
        reduced = load_dataset_full(tmp_path / "reduced" / "manifest.txt")
        assert reduced.features.shape == (60, 2)
        assert reduced.has_labels

    def test_archive_roundtrip_byte_identical(self, tmp_path, blob_manifest):
        sess = tmp_path / "sess"
        invoke("split", "--manifest", blob_manifest, "--fractions", "0.2,0.5,0.3",
               "--seed", "1", "--out", sess)
        invoke("project", "--manifest", blob_manifest, "--perplexity", "5",
               "--iters", "150", "--seed", "1", "--out", sess)
        invoke("propagate", "--manifest", blob_manifest, "--tau", "0.75", "--out", sess)
        before = archive_bytes(sess)
        from salp.session import load_archive, save_archive
        bundle = load_archive(sess)
        save_archive(sess, bundle)
        assert archive_bytes(sess) == before


class TestRun:
    def test_run_writes_reports(self, tmp_path, blob_manifest):
        out = tmp_path / "run"
        result = invoke("run", "--manifest", blob_manifest, "--protocol", "alp2d",
                        *FAST_RUN, "--seeds", "1,2", "--out", out)
        assert result.exit_code == 0, result.output
        lines = (out / "report_alp2d.lines").read_text().splitlines()
        assert len(lines) == 2
        assert all(line.startswith("alp2d") for line in lines)
        assert (out / "report_alp2d.txt").exists()

    def test_nlp_reports_no_propagation(self, tmp_path, blob_manifest):
        out = tmp_path / "run"
        result = invoke("run", "--manifest", blob_manifest, "--protocol", "nlp",
                        *FAST_RUN, "--seeds", "1", "--out", out)
        assert result.exit_code == 0
        fields = (out / "report_nlp.lines").read_text().split()
        assert fields[3] == "-" and fields[5] == "0" and fields[6] == "0"

    def test_repeat_run_byte_identical(self, tmp_path, blob_manifest):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            result = invoke("run", "--manifest", blob_manifest, "--protocol", "salp",
                            "--tau", "0.75", *FAST_RUN, "--seeds", "1,2", "--out", out)
            assert result.exit_code == 0
        assert archive_bytes(out_a) == archive_bytes(out_b)

    def test_compare_two_runs(self, tmp_path, blob_manifest):
        for protocol in ("nlp", "alp2d"):
            invoke("run", "--manifest", blob_manifest, "--protocol", protocol,
                   *FAST_RUN, "--seeds", "1,2", "--out", tmp_path / protocol)
        result = invoke("compare", tmp_path / "nlp", tmp_path / "alp2d")
        assert result.exit_code == 0
        assert "NLP" in result.output and "ALP-2D" in result.output

    def test_compare_single_run_rejected(self, tmp_path, blob_manifest):
        invoke("run", "--manifest", blob_manifest, "--protocol", "nlp",
               *FAST_RUN, "--seeds", "1", "--out", tmp_path / "only")
        runner = CliRunner()
        result = runner.invoke(main, ["compare", str(tmp_path / "only")])
        assert result.exit_code == 2

    def test_compare_mismatched_seeds_rejected(self, tmp_path, blob_manifest):
        invoke("run", "--manifest", blob_manifest, "--protocol", "nlp",
               *FAST_RUN, "--seeds", "1", "--out", tmp_path / "r1")
        invoke("run", "--manifest", blob_manifest, "--protocol", "alp2d",
               *FAST_RUN, "--seeds", "2", "--out", tmp_path / "r2")
        runner = CliRunner()
        result = runner.invoke(main, ["compare", str(tmp_path / "r1"),
                                      str(tmp_path / "r2")])
        assert result.exit_code == 2


class TestExitCodes:
    def test_missing_manifest_is_data_error(self, tmp_path):
        runner = CliRunner()
        result = runner.invoke(main, ["split", "--manifest",
                                      str(tmp_path / "nope.txt"),
                                      "--out", str(tmp_path / "s")])
        assert result.exit_code == 3

    def test_bad_fractions_is_config_error(self, tmp_path, blob_manifest):
        runner = CliRunner()
        result = runner.invoke(main, ["run", "--manifest", str(blob_manifest),
                                      "--protocol", "nlp", "--fractions", "0.2,0.5",
                                      "--out", str(tmp_path / "r")])
        assert result.exit_code == 2

    def test_corrupt_archive_serve_is_data_error(self, tmp_path):
        archive = tmp_path / "broken"
        archive.mkdir()
        (archive / "session.txt").write_text("manifest=/nonexistent/manifest.txt\n")
        runner = CliRunner()
        result = runner.invoke(main, ["serve", "--archive", str(archive),
                                      "--port", "1"])
        assert result.exit_code == 3


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.mark.slow
class TestServeProcess:
    def _build_archive(self, tmp_path) -> Path:
        invoke("synth", *BLOB_ARGS, "--out", tmp_path / "data")
        manifest = tmp_path / "data" / "manifest.txt"
        sess = tmp_path / "sess"
        invoke("split", "--manifest", manifest, "--fractions", "0.2,0.5,0.3",
               "--seed", "1", "--out", sess)
        invoke("project", "--manifest", manifest, "--perplexity", "5",
               "--iters", "150", "--seed", "1", "--out", sess)
        invoke("propagate", "--manifest", manifest, "--tau", "0.9", "--out", sess)
        return sess

    def _spawn(self, archive: Path, port: int) -> subprocess.Popen:
        return subprocess.Popen(
            [sys.executable, "-m", "salp", "serve", "--archive", str(archive),
             "--port", str(port)],
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT)

    def _wait_ready(self, port: int, timeout: float = 30.0) -> None:
        import httpx
        deadline = time.time() + timeout
        while time.time() < deadline:
            try:
                httpx.get(f"http://127.0.0.1:{port}/api/session", timeout=2.0)
                return
            except Exception:
                time.sleep(0.3)
        raise TimeoutError("server did not come up")

    def test_untouched_session_round_trips_byte_identical(self, tmp_path):
        archive = self._build_archive(tmp_path)
        before = archive_bytes(archive)
        port = _free_port()
        proc = self._spawn(archive, port)
        try:
            self._wait_ready(port)
        finally:
            proc.send_signal(signal.SIGINT)
            proc.wait(timeout=30)
        assert archive_bytes(archive) == before

    def test_posted_labels_persist_on_shutdown(self, tmp_path):
        import httpx
        archive = self._build_archive(tmp_path)
        port = _free_port()
        proc = self._spawn(archive, port)
        try:
            self._wait_ready(port)
            snapshot = httpx.get(f"http://127.0.0.1:{port}/api/session").json()
            residue = [p["id"] for p in snapshot["points"]
                       if p["state"] == "unlabeled"]
            assert residue, "expected a non-empty residue at tau=0.9"
            target = residue[0]
            response = httpx.post(f"http://127.0.0.1:{port}/api/labels",
                                  json={"assignments": [{"id": target, "label": 2}]})
            assert response.json()["applied"] == 1
        finally:
            proc.send_signal(signal.SIGINT)
            proc.wait(timeout=30)
        manual = (archive / "labels_manual.txt").read_text().split()
        assert manual == [str(target), "2"]
