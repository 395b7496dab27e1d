"""FastAPI service wrapping the toolkit; see :func:`create_app`."""

from .app import create_app

__all__ = ["create_app"]
