"""Annotation persistence and serving."""

from affmt.backend.service import STORE_ENV_VAR, create_app, store_from_env
from affmt.backend.store import AnnotationStore, VideoEntry

__all__ = [
    "AnnotationStore",
    "VideoEntry",
    "create_app",
    "store_from_env",
    "STORE_ENV_VAR",
]
