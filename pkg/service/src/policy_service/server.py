"""Newline-delimited JSON policy server.

Per connection, requests are processed strictly in arrival order and each
reply is written before the next request is read, so replies can only
arrive in request order.  Request: {"id", "rules", "c0", "cinf"}; reply:
{"id", "probs": [9 floats]} with the distribution already masked to the
grammatically valid rules and renormalized.  {"op": "ping"} answers
{"op": "pong"}; malformed requests get {"id", "error"} replies.
"""

from __future__ import annotations

import json
import socketserver
import threading

from .model import NextRuleModel, masked_probs
from .vocab import InvalidSequenceError


class PolicyService:
    """Shared model with serialized inference access."""

    def __init__(self, model: NextRuleModel):
        self.model = model
        self._lock = threading.Lock()

    def probs(self, rules, c0: int, cinf: int) -> list[float]:
        with self._lock:
            return masked_probs(self.model, rules, c0, cinf)

    def handle_line(self, line: str) -> dict:
        try:
            req = json.loads(line)
        except json.JSONDecodeError as exc:
            return {"id": None, "error": f"malformed JSON: {exc}"}
        if not isinstance(req, dict):
            return {"id": None, "error": "request must be a JSON object"}
        if req.get("op") == "ping":
            return {"op": "pong"}
        req_id = req.get("id")
        rules = req.get("rules")
        if not isinstance(rules, list):
            return {"id": req_id, "error": "rules must be a list of rule ids"}
        try:
            c0 = int(req.get("c0", 0))
            cinf = int(req.get("cinf", 0))
        except (TypeError, ValueError):
            return {"id": req_id, "error": "c0 and cinf must be integers"}
        try:
            probs = self.probs(rules, c0, cinf)
        except InvalidSequenceError as exc:
            return {"id": req_id, "error": str(exc)}
        return {"id": req_id, "probs": probs}


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for line in self.rfile:
            text = line.decode("utf-8").strip()
            if not text:
                continue
            reply = self.server.service.handle_line(text)
            self.wfile.write((json.dumps(reply) + "\n").encode("utf-8"))
            self.wfile.flush()


class PolicyServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, service: PolicyService, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _Handler)
        self.service = service

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"


def serve_forever(model: NextRuleModel, host: str, port: int, ready=None) -> None:
    server = PolicyServer(PolicyService(model), host, port)
    if ready is not None:
        ready(server)
    print(f"policy service listening on {server.endpoint}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def start_background(model: NextRuleModel, host: str = "127.0.0.1",
                     port: int = 0) -> PolicyServer:
    """Start a server thread and return it once it is accepting connections."""
    server = PolicyServer(PolicyService(model), host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
