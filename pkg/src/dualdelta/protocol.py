"""Wire protocol for evaluating implementations hosted in child processes.

One JSON object per line over stdio.  Matrix payloads encode each binary64
element as its 16-hex-digit raw bit pattern, row-major, space-separated,
which round-trips every non-NaN value bit-exactly across languages without
shortest-round-trip decimal subtleties.  See docs/protocol.md for the
normative message grammar (protocol version "1").
"""
from __future__ import annotations

import json
import os
import select
import shlex
import subprocess
import time

import numpy as np

from .matrix import Matrix

__all__ = [
    "PROTOCOL_VERSION",
    "ProtocolError",
    "encode_matrix",
    "decode_matrix",
    "ExternalProcess",
]

PROTOCOL_VERSION = "1"

MESSAGE_KINDS = ("hello", "eval_request", "eval_response", "error", "shutdown")


class ProtocolError(RuntimeError):
    """Violation of the child-process evaluation protocol."""


def encode_matrix(m) -> str:
    """Row-major hex bit patterns, 16 digits per element, space-separated."""
    data = np.ascontiguousarray(getattr(m, "data", m), dtype=np.float64)
    if np.isnan(data).any():
        raise ValueError("NaN is forbidden in matrix payloads")
    raw = data.astype(">f8").tobytes().hex()
    return " ".join(raw[i:i + 16] for i in range(0, len(raw), 16))


def decode_matrix(payload: str, rows: int, cols: int) -> Matrix:
    """Inverse of :func:`encode_matrix`; validates counts and hex tokens."""
    tokens = payload.split()
    if len(tokens) != rows * cols:
        raise ValueError(f"expected {rows * cols} elements, got {len(tokens)}")
    for t in tokens:
        if len(t) != 16:
            raise ValueError(f"malformed hex element {t!r}: expected 16 hex digits")
    try:
        raw = bytes.fromhex("".join(tokens))
    except ValueError as exc:
        raise ValueError(f"malformed hex payload: {exc}") from None
    data = np.frombuffer(raw, dtype=">f8").astype(np.float64).reshape(rows, cols)
    if np.isnan(data).any():
        raise ValueError("NaN is forbidden in matrix payloads")
    return Matrix(data)


def _dump(kind: str, **fields) -> str:
    msg = {"kind": kind}
    msg.update(fields)
    return json.dumps(msg, separators=(",", ":"))


def _parse(line: str) -> dict:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed message line: {exc}: {line[:120]!r}") from None
    if not isinstance(msg, dict) or msg.get("kind") not in MESSAGE_KINDS:
        raise ProtocolError(f"unknown message kind in line {line[:120]!r}")
    return msg


class ExternalProcess:
    """Client side of the protocol: drives one child implementation.

    Not thread-safe; callers serialize so at most one request is in flight,
    matching the one-request-per-child contract.
    """

    def __init__(self, command, label: str = "", timeout: float = 30.0):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.label = label
        self.timeout = float(timeout)
        self.child_label: str | None = None
        self._proc: subprocess.Popen | None = None
        self._buf = b""

    # -- plumbing ---------------------------------------------------------

    def _write_line(self, line: str) -> None:
        assert self._proc is not None and self._proc.stdin is not None
        try:
            self._proc.stdin.write(line.encode("utf-8") + b"\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"child process pipe closed: {exc}") from None

    def _read_line(self, timeout: float) -> str:
        assert self._proc is not None and self._proc.stdout is not None
        fd = self._proc.stdout.fileno()
        deadline = time.monotonic() + timeout
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ProtocolError(f"timed out after {timeout:g}s waiting for child response")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, 1 << 16)
            if not chunk:
                raise ProtocolError("child process closed its output stream")
            self._buf += chunk
        line, _, self._buf = self._buf.partition(b"\n")
        return line.decode("utf-8")

    # -- lifecycle --------------------------------------------------------

    def start(self) -> None:
        if self._proc is not None:
            return
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        except OSError as exc:
            raise ProtocolError(f"failed to launch {self.command!r}: {exc}") from None
        hello = _parse(self._read_line(self.timeout))
        if hello.get("kind") != "hello":
            raise ProtocolError(f"expected hello, got {hello.get('kind')!r}")
        version = hello.get("protocol_version")
        if version != PROTOCOL_VERSION:
            self.close()
            raise ProtocolError(
                f"protocol version mismatch: child speaks {version!r}, "
                f"client speaks {PROTOCOL_VERSION!r}")
        self.child_label = str(hello.get("impl_label", ""))
        if not self.label:
            self.label = self.child_label or "external"

    def eval(self, trial_id: int, a: Matrix, b: Matrix) -> Matrix:
        """One request/response round trip for the given trial."""
        if self._proc is None:
            self.start()
        self._write_line(_dump(
            "eval_request",
            trial_id=trial_id,
            rows_a=a.rows, cols_a=a.cols,
            rows_b=b.rows, cols_b=b.cols,
            data_a=encode_matrix(a), data_b=encode_matrix(b),
        ))
        msg = _parse(self._read_line(self.timeout))
        if msg["kind"] == "error":
            raise ProtocolError(f"child reported error: {msg.get('message', '')}")
        if msg["kind"] != "eval_response":
            raise ProtocolError(f"expected eval_response, got {msg['kind']!r}")
        if msg.get("trial_id") != trial_id:
            raise ProtocolError(
                f"trial_id mismatch: sent {trial_id}, got {msg.get('trial_id')!r}")
        rows, cols = int(msg["rows"]), int(msg["cols"])
        if (rows, cols) != (a.rows, b.cols):
            raise ProtocolError(
                f"response shape {rows}x{cols} does not match expected {a.rows}x{b.cols}")
        try:
            return decode_matrix(msg["data"], rows, cols)
        except (KeyError, ValueError) as exc:
            raise ProtocolError(f"bad response payload: {exc}") from None

    def shutdown(self) -> None:
        if self._proc is None:
            return
        try:
            self._write_line(_dump("shutdown"))
        except ProtocolError:
            pass
        self.close()

    def close(self) -> None:
        if self._proc is None:
            return
        proc, self._proc = self._proc, None
        try:
            if proc.stdin:
                proc.stdin.close()
            proc.wait(timeout=5)
        except (subprocess.TimeoutExpired, OSError):
            proc.kill()
            proc.wait()

    def __enter__(self) -> "ExternalProcess":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()
