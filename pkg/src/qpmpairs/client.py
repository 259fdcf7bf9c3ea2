"""Thin client for the computation service.

By default the client mounts the FastAPI application in-process (no server,
no sockets), so CLI runs stay self-contained and deterministic; pass a
``server_url`` to talk to a remote instance over HTTP instead.  Either way
the wire format is identical.
"""

from __future__ import annotations

from typing import Any

import httpx

__all__ = ["ClientError", "ServiceClient"]

# Error categories, aligned with the CLI exit codes.
VALIDATION = "validation"
SOLVER = "solver"
IO = "io"


class ClientError(Exception):
    """A service call failed; ``category`` explains how."""

    def __init__(self, category: str, message: str):
        self.category = category
        super().__init__(message)


class ServiceClient:
    """Synchronous client over an in-process app or a remote server."""

    def __init__(self, server_url: str | None = None, timeout: float = 300.0):
        if server_url:
            self._http = httpx.Client(base_url=server_url, timeout=timeout)
        else:
            import warnings

            with warnings.catch_warnings():
                # starlette's TestClient import warns on some httpx pairings
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._http = TestClient(create_app())

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _post(self, path: str, payload: dict) -> Any:
        try:
            response = self._http.post(path, json=payload)
        except httpx.HTTPError as exc:
            raise ClientError(IO, f"service unreachable: {exc}") from exc
        if response.status_code == 200:
            return response.json()
        try:
            body = response.json()
        except ValueError:
            body = {}
        if isinstance(body, dict) and "error" in body:
            err = body["error"]
            category = SOLVER if response.status_code == 409 else VALIDATION
            raise ClientError(category, f"{err.get('type')}: {err.get('message')}")
        if response.status_code == 422:
            raise ClientError(VALIDATION, f"request rejected: {body.get('detail')}")
        raise ClientError(IO, f"HTTP {response.status_code}: {response.text[:500]}")

    def health(self) -> dict:
        try:
            response = self._http.get("/health")
        except httpx.HTTPError as exc:
            raise ClientError(IO, f"service unreachable: {exc}") from exc
        return response.json()

    def pm_curve(self, payload: dict) -> dict:
        return self._post("/pm-curve", payload)

    def epm_find(self, payload: dict) -> dict:
        return self._post("/epm-find", payload)

    def shg_sweep(self, payload: dict) -> dict:
        return self._post("/shg-sweep", payload)

    def spdc_spectrum(self, payload: dict) -> dict:
        return self._post("/spdc-spectrum", payload)

    def bell_sim(self, payload: dict) -> dict:
        return self._post("/bell-sim", payload)

    def chsh_analyze(self, payload: dict) -> dict:
        return self._post("/chsh-analyze", payload)

    def rate_estimate(self, payload: dict) -> dict:
        return self._post("/rate-estimate", payload)
