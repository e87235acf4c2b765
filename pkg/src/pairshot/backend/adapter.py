"""Client side of the line-delimited JSON backend protocol.

An external backend is a process that answers one JSON object per line.
Requests carry an id, a verb, and params; responses echo the id and
carry either a result or an error.  Verbs: hello, score, train_mlm,
train_clf, predict, encode, fit_encoder.  Transports: a subprocess pipe
or a TCP socket.

The remote side owns the models; the client refers to them by names it
invents (scorer-1, classifier-2, ...) and ships an init_seed so the
server can create them lazily and deterministically.
"""

from __future__ import annotations

import json
import socket
import subprocess
from typing import Callable, Sequence

import numpy as np

from .. import errors as errors_module
from ..errors import PairshotError
from ..prompting import ClozeInput


class AdapterError(PairshotError):
    """Transport failure or protocol violation talking to a backend."""


class _Transport:
    def request(self, payload: dict) -> dict:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class SubprocessTransport(_Transport):
    """Runs the backend as a child process, one JSON line per message."""

    def __init__(self, command: Sequence[str]) -> None:
        self._proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def request(self, payload: dict) -> dict:
        if self._proc.poll() is not None:
            raise AdapterError("backend process has exited")
        assert self._proc.stdin and self._proc.stdout
        self._proc.stdin.write(json.dumps(payload) + "\n")
        self._proc.stdin.flush()
        line = self._proc.stdout.readline()
        if not line:
            raise AdapterError("backend process closed its output")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"backend sent invalid JSON: {line!r}") from exc

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


class SocketTransport(_Transport):
    """Talks to a backend listening on a local TCP port."""

    def __init__(self, host: str, port: int, timeout: float = 60.0) -> None:
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._file = self._sock.makefile("rw", encoding="utf-8", newline="\n")

    def request(self, payload: dict) -> dict:
        self._file.write(json.dumps(payload) + "\n")
        self._file.flush()
        line = self._file.readline()
        if not line:
            raise AdapterError("backend socket closed")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"backend sent invalid JSON: {line!r}") from exc

    def close(self) -> None:
        try:
            self._file.close()
        finally:
            self._sock.close()


def _raise_remote(response: dict) -> None:
    kind = response.get("kind", "")
    message = response.get("error", "remote backend error")
    exc_type = getattr(errors_module, kind, None)
    if isinstance(exc_type, type) and issubclass(exc_type, PairshotError):
        raise exc_type(message)
    raise AdapterError(message)


class RemoteBackend:
    """Backend implementation backed by a protocol transport.

    Satisfies the same factory contract as the in-process backend, so
    engines cannot tell the difference.
    """

    def __init__(self, transport: _Transport) -> None:
        self._transport = transport
        self._next_id = 0
        self._counter = 0
        hello = self.call("hello", {})
        self._mask_token = hello["mask_token"]
        self._separator_token = hello["separator_token"]
        self._default_lr = float(hello["default_lr"])
        self._dim = int(hello["embedding_dim"])
        length_model = hello.get("length_model", "whitespace")
        if length_model != "whitespace":
            raise AdapterError(f"unsupported length model {length_model!r}")

    def call(self, verb: str, params: dict) -> dict:
        self._next_id += 1
        request_id = self._next_id
        response = self._transport.request({"id": request_id, "verb": verb, "params": params})
        if response.get("id") != request_id:
            raise AdapterError(
                f"response id {response.get('id')!r} does not match request id {request_id}"
            )
        if not response.get("ok"):
            _raise_remote(response)
        result = response.get("result")
        if not isinstance(result, dict):
            raise AdapterError("response carries no result object")
        return result

    def close(self) -> None:
        self._transport.close()

    def _fresh_name(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}-{self._counter}"

    @property
    def mask_token(self) -> str:
        return self._mask_token

    @property
    def separator_token(self) -> str:
        return self._separator_token

    @property
    def default_lr(self) -> float:
        return self._default_lr

    @property
    def length_fn(self) -> Callable[[str], int]:
        return lambda text: len(text.split())

    def create_scorer(self, seed: int = 0) -> "RemoteScorer":
        return RemoteScorer(self, self._fresh_name("scorer"), seed)

    def create_classifier(self, labels: Sequence[str], seed: int = 0) -> "RemoteClassifier":
        return RemoteClassifier(self, self._fresh_name("classifier"), tuple(labels), seed)

    def create_encoder(self, seed: int = 0) -> "RemoteEncoder":
        return RemoteEncoder(self, self._fresh_name("encoder"), seed)


def _cloze_payload(cloze: ClozeInput) -> dict:
    return {
        "text": cloze.text,
        "mask_position": cloze.mask_position,
        "segment_boundary": cloze.segment_boundary,
    }


class RemoteScorer:
    def __init__(self, backend: RemoteBackend, name: str, seed: int) -> None:
        self._backend = backend
        self._name = name
        self._seed = seed

    def score(self, cloze: ClozeInput, candidates: Sequence[str]) -> dict[str, float]:
        result = self._backend.call(
            "score",
            {
                "model": self._name,
                "init_seed": self._seed,
                "cloze": _cloze_payload(cloze),
                "candidates": list(candidates),
            },
        )
        scores = result["scores"]
        return {tok: float(scores[tok]) for tok in candidates}

    def train(
        self,
        rendered: Sequence[tuple[ClozeInput, str]],
        steps: int,
        batch: int,
        lr: float,
        seed: int,
        candidates: Sequence[str] | None = None,
    ) -> None:
        self._backend.call(
            "train_mlm",
            {
                "model": self._name,
                "init_seed": self._seed,
                "rows": [[_cloze_payload(cloze), target] for cloze, target in rendered],
                "steps": steps,
                "batch": batch,
                "lr": lr,
                "seed": seed,
                "candidates": None if candidates is None else list(candidates),
            },
        )


class RemoteClassifier:
    def __init__(self, backend: RemoteBackend, name: str, labels: tuple[str, ...], seed: int) -> None:
        self._backend = backend
        self._name = name
        self.labels = labels
        self._seed = seed

    def predict(self, text: str) -> np.ndarray:
        result = self._backend.call(
            "predict",
            {
                "model": self._name,
                "init_seed": self._seed,
                "labels": list(self.labels),
                "text": text,
            },
        )
        return np.asarray(result["scores"], dtype=np.float64)

    def train(
        self,
        rows: Sequence[tuple[str, Sequence[float]]],
        steps: int,
        batch: int,
        lr: float,
        seed: int,
    ) -> None:
        self._backend.call(
            "train_clf",
            {
                "model": self._name,
                "init_seed": self._seed,
                "labels": list(self.labels),
                "rows": [[text, list(map(float, dist))] for text, dist in rows],
                "steps": steps,
                "batch": batch,
                "lr": lr,
                "seed": seed,
            },
        )


class RemoteEncoder:
    def __init__(self, backend: RemoteBackend, name: str, seed: int) -> None:
        self._backend = backend
        self._name = name
        self._seed = seed
        self.dim = backend._dim

    def encode(self, text: str) -> np.ndarray:
        result = self._backend.call(
            "encode",
            {"model": self._name, "init_seed": self._seed, "text": text},
        )
        return np.asarray(result["vector"], dtype=np.float64)

    def fit(
        self,
        triplets: Sequence[tuple[str, str, float]],
        epochs: int,
        batch: int,
        lr: float,
        seed: int,
    ) -> None:
        self._backend.call(
            "fit_encoder",
            {
                "model": self._name,
                "init_seed": self._seed,
                "triplets": [[a, b, float(sim)] for a, b, sim in triplets],
                "epochs": epochs,
                "batch": batch,
                "lr": lr,
                "seed": seed,
            },
        )


def connect_subprocess(command: Sequence[str]) -> RemoteBackend:
    """Spawn a backend process and complete the handshake."""
    return RemoteBackend(SubprocessTransport(command))


def connect_tcp(host: str, port: int) -> RemoteBackend:
    """Connect to a backend serving the protocol over TCP."""
    return RemoteBackend(SocketTransport(host, port))
