"""HTTP service layer: pydantic schemas plus the FastAPI app factory."""

from .app import app, create_app

__all__ = ["app", "create_app"]
