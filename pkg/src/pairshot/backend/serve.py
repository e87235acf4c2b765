"""Server side of the backend protocol, hosting the toy models.

Run as a module to expose a toy backend over stdio (the subprocess
transport) or a TCP port:

    python -m pairshot.backend.serve
    python -m pairshot.backend.serve --tcp 9321 --config backend.json

Any process speaking the same protocol can stand in for this server,
which is how transformer-scale backends plug into the engines.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys

from ..errors import PairshotError
from ..prompting import ClozeInput
from .toy import BackendConfig, ToyBackend, default_backend_config


class BackendServer:
    """Dispatches protocol verbs onto a toy backend instance."""

    def __init__(self, backend: ToyBackend | None = None) -> None:
        self.backend = backend or ToyBackend()
        self._models: dict[str, object] = {}

    # -- model registry ----------------------------------------------------

    def _scorer(self, params: dict):
        name = params["model"]
        if name not in self._models:
            self._models[name] = self.backend.create_scorer(int(params.get("init_seed", 0)))
        return self._models[name]

    def _classifier(self, params: dict):
        name = params["model"]
        if name not in self._models:
            self._models[name] = self.backend.create_classifier(
                tuple(params["labels"]), int(params.get("init_seed", 0))
            )
        return self._models[name]

    def _encoder(self, params: dict):
        name = params["model"]
        if name not in self._models:
            self._models[name] = self.backend.create_encoder(int(params.get("init_seed", 0)))
        return self._models[name]

    # -- verbs ---------------------------------------------------------------

    def handle(self, request: dict) -> dict:
        request_id = request.get("id")
        try:
            verb = request.get("verb")
            params = request.get("params", {})
            if not isinstance(params, dict):
                raise ValueError("params must be an object")
            handler = getattr(self, f"_verb_{verb}", None)
            if handler is None:
                raise ValueError(f"unknown verb {verb!r}")
            result = handler(params)
            return {"id": request_id, "ok": True, "result": result}
        except PairshotError as exc:
            return {
                "id": request_id,
                "ok": False,
                "error": str(exc),
                "kind": type(exc).__name__,
            }
        except Exception as exc:  # malformed requests become protocol errors
            return {"id": request_id, "ok": False, "error": str(exc), "kind": "AdapterError"}

    def _verb_hello(self, params: dict) -> dict:
        return {
            "mask_token": self.backend.mask_token,
            "separator_token": self.backend.separator_token,
            "default_lr": self.backend.default_lr,
            "embedding_dim": self.backend.config.embedding_dim,
            "length_model": "whitespace",
        }

    @staticmethod
    def _cloze(payload: dict) -> ClozeInput:
        return ClozeInput(
            payload["text"], payload.get("mask_position", -1), payload.get("segment_boundary")
        )

    def _verb_score(self, params: dict) -> dict:
        scorer = self._scorer(params)
        scores = scorer.score(self._cloze(params["cloze"]), params["candidates"])
        return {"scores": scores}

    def _verb_train_mlm(self, params: dict) -> dict:
        scorer = self._scorer(params)
        rendered = [(self._cloze(cloze), target) for cloze, target in params["rows"]]
        scorer.train(
            rendered,
            int(params["steps"]),
            int(params["batch"]),
            float(params["lr"]),
            int(params["seed"]),
            params.get("candidates"),
        )
        return {"trained": len(rendered)}

    def _verb_train_clf(self, params: dict) -> dict:
        classifier = self._classifier(params)
        rows = [(text, dist) for text, dist in params["rows"]]
        classifier.train(
            rows,
            int(params["steps"]),
            int(params["batch"]),
            float(params["lr"]),
            int(params["seed"]),
        )
        return {"trained": len(rows)}

    def _verb_predict(self, params: dict) -> dict:
        classifier = self._classifier(params)
        return {"scores": [float(s) for s in classifier.predict(params["text"])]}

    def _verb_encode(self, params: dict) -> dict:
        encoder = self._encoder(params)
        return {"vector": [float(x) for x in encoder.encode(params["text"])]}

    def _verb_fit_encoder(self, params: dict) -> dict:
        encoder = self._encoder(params)
        triplets = [(a, b, float(sim)) for a, b, sim in params["triplets"]]
        encoder.fit(
            triplets,
            int(params["epochs"]),
            int(params["batch"]),
            float(params["lr"]),
            int(params["seed"]),
        )
        return {"fitted": len(triplets)}


def serve_stdio(server: BackendServer) -> None:
    """One request per stdin line, one response per stdout line."""
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            response = {"id": None, "ok": False, "error": f"invalid JSON: {exc}", "kind": "AdapterError"}
        else:
            response = server.handle(request)
        sys.stdout.write(json.dumps(response) + "\n")
        sys.stdout.flush()


def serve_tcp(server: BackendServer, host: str, port: int) -> None:
    """Serve clients sequentially over TCP (one in flight at a time)."""
    with socket.create_server((host, port)) as listener:
        sys.stderr.write(f"listening on {listener.getsockname()[0]}:{listener.getsockname()[1]}\n")
        sys.stderr.flush()
        while True:
            conn, _ = listener.accept()
            with conn, conn.makefile("rw", encoding="utf-8", newline="\n") as stream:
                for line in stream:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        request = json.loads(line)
                    except json.JSONDecodeError as exc:
                        response = {
                            "id": None,
                            "ok": False,
                            "error": f"invalid JSON: {exc}",
                            "kind": "AdapterError",
                        }
                    else:
                        response = server.handle(request)
                    stream.write(json.dumps(response) + "\n")
                    stream.flush()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Serve a toy backend over the JSON-lines protocol")
    parser.add_argument("--config", help="JSON file with backend config overrides")
    parser.add_argument("--tcp", type=int, metavar="PORT", help="serve on a TCP port instead of stdio")
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args(argv)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        payload["vocabulary"] = tuple(payload["vocabulary"])
        config = BackendConfig(**payload)
    else:
        config = default_backend_config()
    server = BackendServer(ToyBackend(config))
    if args.tcp is not None:
        serve_tcp(server, args.host, args.tcp)
    else:
        serve_stdio(server)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
