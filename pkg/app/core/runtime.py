import hashlib

from app.logger import log_debug


def derive_seed(root_seed: int, stage: str) -> int:
    """Named substream seed for one pipeline stage, stable across processes."""
    digest = hashlib.sha256(f"{int(root_seed)}:{stage}".encode("utf-8")).digest()
    seed = int.from_bytes(digest[:8], "big")
    log_debug("pipeline", f"seed_derived: stage='{stage}' seed={seed}")
    return seed
