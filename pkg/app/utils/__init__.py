# app/utils/__init__.py

"""
Utilities Package

Deterministic file writers shared by the experiment services.
"""

from app.utils.io import content_hash, sha256_file, write_csv, write_jsonl, write_manifest

__all__ = [
    "content_hash",
    "sha256_file",
    "write_csv",
    "write_jsonl",
    "write_manifest",
]
