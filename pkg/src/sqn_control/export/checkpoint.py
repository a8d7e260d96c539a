"""
Checkpoint files for resuming a training run.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import torch

logger = logging.getLogger(__name__)


def checkpoint_path(output_dir: Path, algorithm: str, seed: int) -> Path:
    return output_dir / "checkpoints" / f"{algorithm}_seed{seed}.pt"


def save_checkpoint(path: Path, payload: dict[str, Any]) -> Path:
    """
    Write a checkpoint atomically (temporary file, then rename).

    Args:
        path: Destination file
        payload: Picklable state: state dicts, numpy arrays, plain values
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)
    logger.debug(f"Checkpoint written: {path}")
    return path


def load_checkpoint(path: str | Path) -> dict[str, Any]:
    """Read a checkpoint written by ``save_checkpoint``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    # Payloads hold numpy arrays and RNG states, not just tensors
    return torch.load(path, weights_only=False)  # type: ignore[no-any-return]
