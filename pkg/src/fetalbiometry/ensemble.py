"""Uniformly weighted ensembling of per-pixel class probabilities, plus the
majority-voting variant and the final decision rules."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError
from .raster import validate_label_mask, validate_prob_map

CLS_THRESHOLD = 0.5  # inclusive positive


def _check_members(members: list[np.ndarray]) -> list[np.ndarray]:
    if not members:
        raise ValueError("ensemble needs at least one member")
    members = [validate_prob_map(m) for m in members]
    shape = members[0].shape
    for i, m in enumerate(members[1:], start=1):
        if m.shape != shape:
            raise DimensionMismatchError(f"member {i} has shape {m.shape}, expected {shape}")
    return members


def average(members: list[np.ndarray]) -> np.ndarray:
    """Per-pixel, per-channel arithmetic mean of the members (pairwise reduction)."""
    members = _check_members(members)
    acc = _pairwise_sum([m.astype(np.float64) for m in members])
    return acc / len(members)


def _pairwise_sum(arrays: list[np.ndarray]) -> np.ndarray:
    # fixed tree reduction so results do not depend on accumulation order
    while len(arrays) > 1:
        arrays = [
            arrays[i] + arrays[i + 1] if i + 1 < len(arrays) else arrays[i]
            for i in range(0, len(arrays), 2)
        ]
    return arrays[0]


def vote(members: list[np.ndarray]) -> np.ndarray:
    """Per-pixel majority vote of member argmaxes; ties to the lowest class index."""
    members = _check_members(members)
    channels = members[0].shape[2]
    votes = np.stack([m.argmax(axis=2) for m in members])
    counts = np.stack([(votes == c).sum(axis=0) for c in range(channels)], axis=0)
    return validate_label_mask(counts.argmax(axis=0).astype(np.uint8))


def decide(p: np.ndarray) -> np.ndarray:
    """Per-pixel argmax label mask (ties to the lowest class index)."""
    p = validate_prob_map(p)
    return validate_label_mask(p.argmax(axis=2).astype(np.uint8))


def decide_cls(v) -> int:
    """Binary decision from a (negative, positive) probability vector."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size != 2:
        raise ValueError(f"expected a 2-class probability vector, got {v.size} entries")
    return int(v[1] >= CLS_THRESHOLD)
