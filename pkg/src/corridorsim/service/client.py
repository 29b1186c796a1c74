"""Client used by the CLI to talk to the service.

Without a server URL the requests run against the application in-process
(same wire format, no socket), which keeps command-line runs deterministic
and self-contained; with ``--server`` the same calls go over HTTP.
"""
from __future__ import annotations

import warnings

import httpx


class ServiceError(RuntimeError):
    def __init__(self, status_code: int, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.status_code = status_code
        self.code = code
        self.message = message


class ServiceClient:
    def __init__(self, server_url: str | None = None, timeout: float | None = None):
        if server_url:
            self._client = httpx.Client(base_url=server_url, timeout=timeout)
            self._local = False
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient
            from .app import app
            self._client = TestClient(app)
            self._local = True

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _handle(self, response: httpx.Response) -> dict:
        if response.status_code < 400:
            return response.json()
        try:
            body = response.json()
        except ValueError:
            body = {}
        code = body.get("code", "http_error")
        if response.status_code == 422 and "code" not in body:
            code = "invalid_request"
        message = body.get("message") or str(body.get("detail", response.text))
        raise ServiceError(response.status_code, code, message)

    def get(self, path: str) -> dict:
        return self._handle(self._client.get(path))

    def post(self, path: str, payload: dict) -> dict:
        return self._handle(self._client.post(path, json=payload))

    # convenience wrappers -------------------------------------------------

    def health(self) -> dict:
        return self.get("/health")

    def run(self, payload: dict) -> dict:
        return self.post("/run", payload)

    def sweep(self, payload: dict) -> dict:
        return self.post("/sweep", payload)

    def train(self, payload: dict) -> dict:
        return self.post("/train", payload)

    def evaluate(self, payload: dict) -> dict:
        return self.post("/evaluate", payload)
