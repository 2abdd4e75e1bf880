"""Run `flowgraft serve` as a real subprocess for end-to-end tests."""

from __future__ import annotations

import signal
import socket
import subprocess
import sys
import time

import requests


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class EngineProc:
    """A live engine process on its own journal and port."""

    def __init__(self, journal_path, port: int | None = None):
        self.journal_path = str(journal_path)
        self.port = port or free_port()
        self.proc: subprocess.Popen | None = None

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def start(self, wait: bool = True) -> "EngineProc":
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "flowgraft.cli", "serve",
             "--listen", f"127.0.0.1:{self.port}",
             "--journal", self.journal_path],
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT)
        if wait:
            self.wait_healthy()
        return self

    def wait_healthy(self, timeout: float = 15.0) -> dict:
        deadline = time.time() + timeout
        last_error = None
        while time.time() < deadline:
            if self.proc.poll() is not None:
                out = self.proc.stdout.read().decode("utf-8", "replace")
                raise RuntimeError(f"engine exited early:\n{out}")
            try:
                resp = requests.get(self.base_url + "/monitor/health",
                                    timeout=1)
                if resp.status_code == 200:
                    return resp.json()
            except requests.RequestException as exc:
                last_error = exc
            time.sleep(0.05)
        raise RuntimeError(f"engine never became healthy: {last_error}")

    @property
    def pid(self) -> int:
        return self.proc.pid

    def kill(self) -> None:
        """SIGKILL: the crash, not a shutdown."""
        if self.proc and self.proc.poll() is None:
            self.proc.kill()
            self.proc.wait(timeout=10)

    def stop(self) -> None:
        if self.proc and self.proc.poll() is None:
            self.proc.send_signal(signal.SIGINT)
            try:
                self.proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait(timeout=10)

    def __enter__(self) -> "EngineProc":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
