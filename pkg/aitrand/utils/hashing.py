import hashlib
from pathlib import Path

_READ_BLOCK = 1 << 20


def hash_bytes(data: bytes) -> str:
    """SHA-256 of in-memory data; tags raw bodies posted to the HTTP surface."""
    return hashlib.sha256(data).hexdigest()


def hash_file(path: str | Path) -> str:
    """SHA-256 of a file, read in blocks so multi-gigabyte dumps are fine."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(_READ_BLOCK), b""):
            digest.update(block)
    return digest.hexdigest()
