"""Service layer: FastAPI app factory and request/response schemas.

Run with, e.g.: ``uvicorn qpmpairs.service:app``.
"""

from .app import create_app

app = create_app()

__all__ = ["create_app", "app"]
