"""Clients for external scorer / translator processes.

The toolkit never bundles reward or translation models. It talks to them as
child processes over a line-delimited JSON protocol: one request object per
line on stdin, one response object per line on stdout, same order. Responses
must be flushed per line.

Scorer:      {"id": ..., "text": ..., "image_ref": ...} -> {"id": ..., "reward": <real>}
Translator:  {"id": ..., "text": ..., "target_lang": ...} -> {"id": ..., "text": ...}
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
from queue import Queue
from typing import Callable, Sequence

from .errors import ExternalToolError

# In-process alternatives, mainly for tests and embedding: a scorer maps
# (id, text, image_ref) -> reward; a translator maps (id, text, lang) -> text.
ScorerFn = Callable[[str, str, "str | None"], float]
TranslatorFn = Callable[[str, str, str], str]


class LineProtocolClient:
    """Owns one child process speaking the line protocol."""

    def __init__(self, argv: Sequence[str]):
        self.argv = list(argv)
        self._lock = threading.Lock()
        try:
            self._proc = subprocess.Popen(
                self.argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ExternalToolError(f"cannot start worker {self.argv!r}: {exc}") from exc

    def request(self, payload: dict) -> dict:
        with self._lock:
            if self._proc.poll() is not None:
                raise ExternalToolError(
                    f"worker {self.argv!r} exited with code {self._proc.returncode}"
                )
            try:
                self._proc.stdin.write(json.dumps(payload, ensure_ascii=False) + "\n")
                self._proc.stdin.flush()
                line = self._proc.stdout.readline()
            except (OSError, ValueError) as exc:
                raise ExternalToolError(f"worker {self.argv!r} pipe failure: {exc}") from exc
        if not line:
            stderr = ""
            if self._proc.poll() is not None:
                stderr = (self._proc.stderr.read() or "").strip()[:500]
            raise ExternalToolError(
                f"worker {self.argv!r} closed its stdout"
                + (f" (stderr: {stderr})" if stderr else "")
            )
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ExternalToolError(
                f"worker {self.argv!r} sent invalid JSON: {line!r}"
            ) from exc
        if not isinstance(response, dict):
            raise ExternalToolError(f"worker {self.argv!r} sent a non-object response")
        return response

    def close(self) -> None:
        proc = self._proc
        for stream in (proc.stdin, proc.stdout, proc.stderr):
            try:
                if stream:
                    stream.close()
            except OSError:
                pass
        if proc.poll() is None:
            proc.terminate()
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    def __enter__(self) -> "LineProtocolClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class SubprocessScorer:
    """Scorer handle backed by a worker command."""

    def __init__(self, command: str | Sequence[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self._client = LineProtocolClient(argv)

    def __call__(self, record_id: str, text: str, image_ref: str | None) -> float:
        response = self._client.request(
            {"id": record_id, "text": text, "image_ref": image_ref}
        )
        if response.get("id") != record_id:
            raise ExternalToolError(
                f"scorer answered for id {response.get('id')!r}, expected {record_id!r}"
            )
        if "reward" not in response:
            raise ExternalToolError(f"scorer response for {record_id!r} lacks 'reward'")
        try:
            return float(response["reward"])
        except (TypeError, ValueError) as exc:
            raise ExternalToolError(
                f"scorer reward for {record_id!r} is not numeric: {response['reward']!r}"
            ) from exc

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "SubprocessScorer":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class SubprocessTranslator:
    """Translator handle backed by a worker command."""

    def __init__(self, command: str | Sequence[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self._client = LineProtocolClient(argv)

    def __call__(self, job_id: str, text: str, target_lang: str) -> str:
        response = self._client.request(
            {"id": job_id, "text": text, "target_lang": target_lang}
        )
        if response.get("id") != job_id:
            raise ExternalToolError(
                f"translator answered for id {response.get('id')!r}, expected {job_id!r}"
            )
        if "text" not in response:
            raise ExternalToolError(f"translator response for {job_id!r} lacks 'text'")
        return str(response["text"])

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "SubprocessTranslator":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def _outcome(func: Callable, item) -> tuple[bool, object]:
    try:
        return (True, func(item))
    except ExternalToolError as exc:
        return (False, exc)


def bounded_map(func: Callable, items: Sequence, jobs: int = 1) -> list[tuple[bool, object]]:
    """Apply ``func`` with at most ``jobs`` concurrent calls.

    Outcomes come back in input order regardless of completion order, so
    downstream files stay deterministic. Worker failures surface as
    ``(False, error)`` entries instead of aborting the batch.
    """
    if jobs <= 1 or len(items) <= 1:
        return [_outcome(func, item) for item in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda item: _outcome(func, item), items))


class Multiplexed:
    """Fan one callable interface out over several independent workers.

    Each call checks a worker out of the idle queue, so concurrent callers
    land on distinct processes instead of serializing on one pipe.
    """

    def __init__(self, workers: Sequence[Callable]):
        self._workers = list(workers)
        self._idle: Queue = Queue()
        for worker in self._workers:
            self._idle.put(worker)

    def __call__(self, *args):
        worker = self._idle.get()
        try:
            return worker(*args)
        finally:
            self._idle.put(worker)

    def close(self) -> None:
        for worker in self._workers:
            close = getattr(worker, "close", None)
            if close:
                close()

    def __enter__(self) -> "Multiplexed":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
