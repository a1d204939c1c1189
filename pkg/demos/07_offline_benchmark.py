"""Benchmark loop end to end without a network.

Spins up a local chat-completions stub, writes a three-task manifest, and
drives `percept bench` machinery against it: prompts are assembled from
templates, answers extracted, records appended to JSONL, accuracy
summarized per task kind.
"""

import json
import tempfile
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from percept.harness import EndpointConfig, run_benchmark, summarize_records
from percept.ingestion import read_task_set


class StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        self.rfile.read(int(self.headers["Content-Length"]))
        body = json.dumps({
            "choices": [{"message": {"content": "Clear case. The answer is (A)."}}],
            "usage": {"prompt_tokens": 40, "completion_tokens": 8},
        }).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


server = ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
threading.Thread(target=server.serve_forever, daemon=True).start()

with tempfile.TemporaryDirectory() as tmp:
    manifest = Path(tmp) / "tasks.jsonl"
    manifest.write_text("\n".join(json.dumps({
        "id": f"t{i}", "kind": "jigsaw", "images": [],
        "question": f"Which piece completes image {i}?",
        "options": {"A": "piece 1", "B": "piece 2"},
        "answer": "A",
    }) for i in range(3)) + "\n")

    cfg = EndpointConfig(base_url=f"http://127.0.0.1:{server.server_address[1]}/v1",
                         model="stub-model", max_attempts=2, backoff_base=0.0)
    records, summary = run_benchmark(read_task_set(manifest), "standard", cfg,
                                     Path(tmp) / "results.jsonl", concurrency=2)
    for record in records:
        print(record.task_id, record.extracted, "ok" if record.correct else "WRONG")
    print("accuracy:", summary.accuracy_pct, "by kind:", summary.accuracy_by_kind)

server.shutdown()
