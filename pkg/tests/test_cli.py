"""CLI subcommands: exit codes, stdout payloads, end-to-end bench."""

import json
import struct
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from percept.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def depth_npy(tmp_path):
    path = tmp_path / "depth.npy"
    np.save(path, (np.arange(64, dtype=np.float32) / 63).reshape(8, 8))
    return path


class TestCompile:
    def test_depth_to_file(self, capsys, tmp_path, depth_npy):
        out = tmp_path / "depth.p2"
        code, _, _ = run_cli(capsys, "compile", "--modality", "depth",
                             "--input", str(depth_npy), "--output", str(out),
                             "--grid", "2", "--tau", "0.05")
        assert code == 0
        assert out.read_text().startswith("modality: depth\n")

    def test_depth_to_stdout(self, capsys, depth_npy):
        code, out, _ = run_cli(capsys, "compile", "--modality", "depth",
                               "--input", str(depth_npy), "--grid", "2")
        assert code == 0 and out.startswith("modality: depth\n")

    def test_bad_flo_magic_exits_1(self, capsys, tmp_path):
        bad = tmp_path / "bad.flo"
        bad.write_bytes(b"NOPE" + b"\x00" * 16)
        code, _, err = run_cli(capsys, "compile", "--modality", "flow",
                               "--input", str(bad))
        assert code == 1 and "magic" in err

    def test_grid_too_fine_exits_2(self, capsys, depth_npy):
        code, _, _ = run_cli(capsys, "compile", "--modality", "depth",
                             "--input", str(depth_npy), "--grid", "64")
        assert code == 2

    def test_points_json(self, capsys, tmp_path):
        doc = tmp_path / "points.json"
        doc.write_text(json.dumps({
            "image": {"width": 100, "height": 100},
            "points": [{"label": "REF", "point": [10, 10]},
                       {"label": "A", "point": [12, 13]},
                       {"label": "B", "point": [80, 80]}],
        }))
        code, out, _ = run_cli(capsys, "compile", "--modality", "points",
                               "--input", str(doc))
        assert code == 0 and "p: REF" in out

    def test_idempotent_over_identical_inputs(self, capsys, tmp_path, depth_npy):
        first = tmp_path / "one.p2"
        second = tmp_path / "two.p2"
        for out in (first, second):
            assert run_cli(capsys, "compile", "--modality", "depth",
                           "--input", str(depth_npy), "--output", str(out),
                           "--grid", "4")[0] == 0
        assert first.read_bytes() == second.read_bytes()

    def test_jigsaw_from_images(self, capsys, tmp_path, nprng):
        from PIL import Image

        src = (nprng.random((40, 40, 3)) * 255).astype(np.uint8)
        cut = src[20:, 20:]
        Image.fromarray(src).save(tmp_path / "src.png")
        Image.fromarray(cut).save(tmp_path / "a.png")
        Image.fromarray(255 - cut).save(tmp_path / "b.png")
        code, out, _ = run_cli(
            capsys, "compile", "--modality", "jigsaw",
            "--source", str(tmp_path / "src.png"),
            "--candidate-a", str(tmp_path / "a.png"),
            "--candidate-b", str(tmp_path / "b.png"),
            "--region", "20,20,40,40", "--strip-width", "4")
        assert code == 0
        assert "left_A" in out and "top_B" in out


class TestValidate:
    def test_valid_file(self, capsys, tmp_path, depth_npy):
        p2 = tmp_path / "d.p2"
        run_cli(capsys, "compile", "--modality", "depth", "--input", str(depth_npy),
                "--output", str(p2), "--grid", "2")
        code, out, _ = run_cli(capsys, "validate", "--input", str(p2))
        assert code == 0
        assert json.loads(out) == {"valid": True, "violations": []}

    def test_violations_exit_2(self, capsys, tmp_path):
        p2 = tmp_path / "bad.p2"
        p2.write_text("modality: depth\nimages:\n  - {id: img0, width: 4, height: 4}\n"
                      "items:\n  - {p: cell_0, c: [0, 0], r: [0.1, 0.2]}\n"
                      "relations:\n  - [cell_0, behind, ghost]\n")
        code, out, _ = run_cli(capsys, "validate", "--input", str(p2))
        assert code == 2
        report = json.loads(out)
        assert report["valid"] is False
        assert any("dangling" in v for v in report["violations"])

    def test_parse_error_exit_1(self, capsys, tmp_path):
        p2 = tmp_path / "junk.p2"
        p2.write_text("modality: sonar\n")
        code, out, _ = run_cli(capsys, "validate", "--input", str(p2))
        assert code == 1
        assert json.loads(out)["valid"] is False


class TestSolve:
    def test_semantic(self, capsys, tmp_path):
        p2 = tmp_path / "sem.p2"
        p2.write_text(
            "modality: semantic_correspondence\n"
            "images:\n  - {id: img0, width: 100, height: 100}\n"
            "items:\n"
            "  - {p: A, c: [10, 10], r: 0.910}\n"
            "  - {p: B, c: [20, 20], r: 0.400}\n"
            "  - {p: C, c: [30, 30], r: 0.220}\n"
            "  - {p: D, c: [40, 40], r: 0.630}\n")
        code, out, _ = run_cli(capsys, "solve", "--task", "semantic_correspondence",
                               "--input", str(p2))
        assert code == 0 and out.strip() == "A"

    def test_multi_view(self, capsys, tmp_path):
        p2 = tmp_path / "flow.p2"
        p2.write_text(
            "modality: flow\nimages:\n  - {id: img0, width: 4, height: 4}\n"
            "grid: {rows: 2, cols: 2}\n"
            "items:\n"
            "  - {p: cell_0, c: [125, 125], r: left}\n"
            "  - {p: cell_1, c: [625, 125], r: left}\n"
            "  - {p: cell_2, c: [125, 625], r: left}\n"
            "  - {p: cell_3, c: [625, 625], r: right}\n")
        code, out, _ = run_cli(capsys, "solve", "--task", "multi_view",
                               "--flow", str(p2))
        assert code == 0 and out.strip() == "right"

    def test_localization(self, capsys, tmp_path):
        det = tmp_path / "det.p2"
        det.write_text(
            "modality: detection\nimages:\n  - {id: img0, width: 100, height: 100}\n"
            "items:\n  - {p: det_0, c: [100, 100, 300, 300], r: 0.900, b: dog}\n")
        boxes = tmp_path / "boxes.json"
        boxes.write_text(json.dumps({
            "image": {"width": 100, "height": 100},
            "candidates": [{"label": "A", "box": [10, 10, 30, 30]},
                           {"label": "B", "box": [60, 60, 90, 90]}],
        }))
        code, out, _ = run_cli(capsys, "solve", "--task", "object_localization",
                               "--detections", str(det), "--boxes", str(boxes),
                               "--target", "dog")
        assert code == 0 and out.strip() == "A"


class TestEval:
    def test_kendall_identical_rankings(self, capsys, tmp_path):
        a = tmp_path / "a.json"
        a.write_text(json.dumps(["x", "y", "z"]))
        code, out, _ = run_cli(capsys, "eval", "--metric", "kendall",
                               "--a", str(a), "--b", str(a))
        assert code == 0 and out.strip() == "1.0000"

    def test_kendall_from_depth_programs(self, capsys, tmp_path, depth_npy):
        p2 = tmp_path / "d.p2"
        run_cli(capsys, "compile", "--modality", "depth", "--input", str(depth_npy),
                "--output", str(p2), "--grid", "2")
        code, out, _ = run_cli(capsys, "eval", "--metric", "kendall",
                               "--a", str(p2), "--b", str(p2))
        assert code == 0 and out.strip() == "1.0000"

    def test_displacement(self, capsys, tmp_path):
        truth = tmp_path / "matches.json"
        truth.write_text(json.dumps({
            "ref": {"width": 1000, "height": 1000},
            "tgt": {"width": 1000, "height": 1000},
            "matches": [[[100, 100], [400, 500]]],
        }))
        pred = tmp_path / "pred.p2"
        pred.write_text(
            "modality: visual_correspondence\n"
            "images:\n  - {id: img0, width: 1000, height: 1000}\n"
            "  - {id: img1, width: 1000, height: 1000}\n"
            "items:\n  - {p: m0, c: [100, 100], r: [400, 500]}\n")
        code, out, err = run_cli(capsys, "eval", "--metric", "displacement",
                                 "--truth", str(truth), "--predicted", str(pred))
        assert code == 0
        row = json.loads(out.splitlines()[0])
        assert row["error_pct"] == 0.0
        assert "copied-input" in err


class ChatStubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers["Content-Length"])
        self.rfile.read(length)
        body = json.dumps({
            "choices": [{"message": {"content": "Looks clear. The answer is (A)."}}],
            "usage": {"prompt_tokens": 21, "completion_tokens": 9},
        }).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def chat_stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), ChatStubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}/v1"
    server.shutdown()


class TestBench:
    def test_end_to_end_over_http(self, capsys, tmp_path, chat_stub_server):
        manifest = tmp_path / "tasks.jsonl"
        lines = [
            {"id": f"t{i}", "kind": "jigsaw", "images": [],
             "question": f"Q{i}?", "options": {"A": "1", "B": "2"}, "answer": "A"}
            for i in range(3)
        ]
        manifest.write_text("\n".join(json.dumps(x) for x in lines) + "\n")
        cfg = tmp_path / "endpoint.cfg"
        cfg.write_text(f"base_url = {chat_stub_server}\nmodel = stub\n"
                       "max_attempts = 2\nbackoff_base = 0\n")
        out = tmp_path / "results.jsonl"
        code, stdout, _ = run_cli(capsys, "bench", "--manifest", str(manifest),
                                  "--setting", "standard", "--config", str(cfg),
                                  "--out", str(out), "--concurrency", "2")
        assert code == 0
        summary = json.loads(stdout)
        assert summary["total"] == 3
        assert summary["accuracy_pct"] == 100.0
        assert summary["mean_prompt_tokens"] == 21.0
        assert len(out.read_text().splitlines()) == 3
