"""Session-oriented HTTP/JSON API: versioned networks, match enumeration,
checked rule application with value deltas, undo, and export.

Run with: python -m divnet.service --listen 127.0.0.1:8000
"""

from __future__ import annotations

import argparse
import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .convex import ConvexFunctionSpec, get_generator
from .errors import DivnetError, PhiViolation, StaleMatch
from .evaluator import phi_breakdown
from .netmodel import (Network, network_from_json, network_to_json,
                       resolve_coordinates, to_dot)
from .rewrite import (Derivation, DerivationStep, RuleId, RuleMatch,
                      all_matches, apply_match, list_matches)


@dataclass
class Version:
    network: Network
    step: Optional[DerivationStep]
    phi: float
    breakdown: dict


@dataclass
class Session:
    id: str
    spec: ConvexFunctionSpec
    history: list[Version]
    cursor: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def current(self) -> Version:
        return self.history[self.cursor]

    def derivation(self) -> Derivation:
        steps = [v.step for v in self.history[1:self.cursor + 1] if v.step]
        return Derivation(self.spec.id, self.history[0].network, steps,
                          self.current.network)


def _evaluate(net: Network, spec: ConvexFunctionSpec) -> tuple[float, dict]:
    bd = phi_breakdown(net, spec)
    return bd.total, bd.to_json()


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"code": code, "message": message})


def create_app(snapshot_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="divnet service")
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()

    def _snapshot(session: Session) -> None:
        if not snapshot_dir:
            return
        path = Path(snapshot_dir) / f"{session.id}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(session.derivation().to_json(), fh, indent=2, sort_keys=True)

    @app.exception_handler(DivnetError)
    async def _divnet_error(_request: Request, exc: DivnetError):
        status = 400
        if isinstance(exc, StaleMatch):
            status = 409
        elif isinstance(exc, PhiViolation):
            status = 422
        return _error(status, exc.code, str(exc))

    def _get_session(session_id: str) -> Session | None:
        return sessions.get(session_id)

    def _session_payload(s: Session) -> dict:
        v = s.current
        return {"session_id": s.id,
                "generator": s.spec.id,
                "version": s.cursor,
                "versions": len(s.history),
                "network": network_to_json(v.network),
                "phi": v.phi,
                "breakdown": v.breakdown,
                "history": [{"version": i,
                             "phi": h.phi,
                             "rule": h.step.match.rule.value if h.step else None,
                             "direction": h.step.match.direction if h.step else None,
                             "residual": h.step.residual if h.step else 0.0}
                            for i, h in enumerate(s.history)]}

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        if "network" not in body:
            return _error(400, "bad_request", "body needs a 'network' field")
        net = network_from_json(body["network"])
        generator = body.get("generator") or net.generator_id
        spec = get_generator(generator, net.dim() or 1)
        if net.generator_id != spec.id:
            net = Network(dict(net.nodes), dict(net.edges), spec.id)
        total, bd = _evaluate(net, spec)
        sid = uuid.uuid4().hex[:12]
        session = Session(sid, spec, [Version(net, None, total, bd)])
        with store_lock:
            sessions[sid] = session
        return {"session_id": sid, "phi": total, "breakdown": bd,
                "network": network_to_json(net)}

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        s = _get_session(session_id)
        if s is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        return _session_payload(s)

    @app.get("/sessions/{session_id}/matches")
    async def get_matches(session_id: str, rule: str | None = None):
        s = _get_session(session_id)
        if s is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        net = s.current.network
        try:
            if rule:
                matches = list_matches(net, RuleId(rule), s.spec)
            else:
                matches = all_matches(net, s.spec)
        except ValueError:
            return _error(400, "bad_request", f"unknown rule {rule!r}")
        return {"matches": [m.to_json() for m in matches]}

    @app.post("/sessions/{session_id}/apply")
    async def apply_rule(session_id: str, body: dict):
        s = _get_session(session_id)
        if s is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        if "match" not in body:
            return _error(400, "bad_request", "body needs a 'match' field")
        try:
            match = RuleMatch.from_json(body["match"])
        except (KeyError, ValueError) as exc:
            return _error(400, "bad_request", f"malformed match: {exc}")
        with s.lock:
            net = s.current.network
            new_net, step = apply_match(net, match, s.spec, check=True)
            total, bd = _evaluate(new_net, s.spec)
            del s.history[s.cursor + 1:]
            s.history.append(Version(new_net, step, total, bd))
            s.cursor += 1
            _snapshot(s)
            return {"new_version": s.cursor,
                    "phi_before": step.phi_before,
                    "phi_after": step.phi_after,
                    "residual": step.residual,
                    "phi": total,
                    "breakdown": bd,
                    "network": network_to_json(new_net)}

    @app.post("/sessions/{session_id}/undo")
    async def undo(session_id: str):
        s = _get_session(session_id)
        if s is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        with s.lock:
            if s.cursor == 0:
                return _error(409, "at_origin", "nothing to undo")
            s.cursor -= 1
            v = s.current
            return {"version": s.cursor, "phi": v.phi, "breakdown": v.breakdown,
                    "network": network_to_json(v.network)}

    @app.get("/sessions/{session_id}/export")
    async def export(session_id: str, format: str = "json"):
        s = _get_session(session_id)
        if s is None:
            return _error(404, "unknown_session", f"no session {session_id!r}")
        net = s.current.network
        if format == "json":
            return network_to_json(net)
        if format == "dot":
            try:
                coords = resolve_coordinates(net, s.spec)
            except DivnetError:
                coords = None
            return PlainTextResponse(to_dot(net, coords))
        if format == "derivation":
            return s.derivation().to_json()
        return _error(400, "bad_request", f"unknown format {format!r}")

    ui_dir = Path(__file__).resolve().parents[2] / "workbench"
    if (ui_dir / "index.html").is_file() and (ui_dir / "dist").is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="divnet-service")
    parser.add_argument("--listen", default="127.0.0.1:8000",
                        help="host:port to bind")
    parser.add_argument("--snapshot-dir", default=None,
                        help="write session derivations here after each change")
    args = parser.parse_args(argv)
    host, _, port = args.listen.rpartition(":")
    import uvicorn
    uvicorn.run(create_app(args.snapshot_dir), host=host or "127.0.0.1",
                port=int(port), log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
