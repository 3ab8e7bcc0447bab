"""Persistent episode cache."""

from aimgraph.cache.sqlite_cache import CacheStore

__all__ = ["CacheStore"]
