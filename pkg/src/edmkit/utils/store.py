import pickle
from pathlib import Path
from typing import Any

from edmkit.errors import BlobFormatError

COLLECTION_MAGIC = b"EDMC1"
PIPELINE_MAGIC = b"EDMP1"


def dump_blob(magic: bytes, payload: Any) -> bytes:
    """
    Serialize ``payload`` behind a magic header.

    Args:
        magic (bytes): Header identifying format and version.
        payload (Any): Picklable object.

    Returns:
        bytes: ``magic`` followed by the pickled payload.
    """
    return magic + pickle.dumps(payload, protocol=4)


def load_blob(magic: bytes, blob: bytes) -> Any:
    """
    Inverse of :func:`dump_blob`.

    Raises:
        BlobFormatError: If the header does not match ``magic``.
    """
    if not blob.startswith(magic):
        raise BlobFormatError(f"Expected blob header {magic!r}, got {blob[:len(magic)]!r}")
    return pickle.loads(blob[len(magic):])


class ModelStore:
    def __init__(self, cache_dir: str = "models"):
        """
        Initialize ModelStore.

        Args:
            cache_dir (str): Directory holding pipeline blobs.
        """
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def path_for(self, name: str) -> Path:
        return self.cache_dir / f"{name}.edmp"

    def exists(self, name: str) -> bool:
        """
        Check whether a pipeline blob is stored under ``name``.

        Returns:
            bool: True if the blob file exists.
        """
        return self.path_for(name).exists()

    def save(self, name: str, blob: bytes) -> Path:
        """
        Write a pipeline blob to disk.

        Args:
            name (str): Blob name (file stem).
            blob (bytes): Serialized pipeline.

        Returns:
            Path: Location of the written file.
        """
        path = self.path_for(name)
        path.write_bytes(blob)
        return path

    def load(self, name: str) -> bytes:
        """
        Read a pipeline blob back.

        Returns:
            bytes: The stored blob, or None when nothing is stored under ``name``.
        """
        if not self.exists(name):
            return None
        return self.path_for(name).read_bytes()
