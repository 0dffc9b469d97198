"""Observation pipeline: running normalization and 4-frame stacking.

Policies see the last four monitoring snapshots. Each real snapshot is
normalized per feature by running mean/std (clipped to +-10 std) and
missing history at episode start is padded with zero frames in the
normalized space. Statistics update only while training; evaluation
runs with them frozen.
"""

from __future__ import annotations

from collections import deque

import numpy as np

N_FRAMES = 4
CLIP_SIGMA = 10.0
VAR_FLOOR = 1e-8


class RunningNorm:
    """Per-feature running mean/std accumulated with Welford updates."""

    def __init__(self, dim: int):
        self.dim = dim
        self.count = 0.0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def update(self, rows: np.ndarray) -> None:
        rows = np.asarray(rows, dtype=np.float64).reshape(-1, self.dim)
        n = rows.shape[0]
        if n == 0:
            return
        batch_mean = rows.mean(axis=0)
        batch_m2 = ((rows - batch_mean) ** 2).sum(axis=0)
        if self.count == 0.0:
            self.count = float(n)
            self.mean = batch_mean
            self.m2 = batch_m2
            return
        total = self.count + n
        delta = batch_mean - self.mean
        self.mean = self.mean + delta * (n / total)
        self.m2 = self.m2 + batch_m2 + delta * delta * (self.count * n / total)
        self.count = total

    def std(self) -> np.ndarray:
        if self.count < 2.0:
            return np.ones(self.dim)
        return np.sqrt(np.maximum(self.m2 / self.count, VAR_FLOOR))

    def normalize(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.float64)
        if self.count < 2.0:
            return np.clip(rows, -CLIP_SIGMA, CLIP_SIGMA)
        out = (rows - self.mean) / self.std()
        return np.clip(out, -CLIP_SIGMA, CLIP_SIGMA)

    def state_dict(self) -> dict:
        return {"count": np.array([self.count]), "mean": self.mean.copy(),
                "m2": self.m2.copy()}

    def load_state_dict(self, state: dict) -> None:
        self.count = float(np.asarray(state["count"]).reshape(-1)[0])
        self.mean = np.asarray(state["mean"], dtype=np.float64).copy()
        self.m2 = np.asarray(state["m2"], dtype=np.float64).copy()


class FrameStack:
    """Last-N history of per-row feature matrices with zero padding.

    Rows are keyed to a fixed universe (the episode's initial directed
    edge list); each pushed frame may cover only surviving rows, and
    stacked() re-slices history onto the rows requested now.
    """

    def __init__(self, n_rows: int, dim: int, n_frames: int = N_FRAMES):
        self.n_rows = n_rows
        self.dim = dim
        self.n_frames = n_frames
        self.frames: deque = deque(maxlen=n_frames)

    def reset(self) -> None:
        self.frames.clear()

    def push(self, rows_idx: np.ndarray, feats: np.ndarray) -> None:
        frame = np.zeros((self.n_rows, self.dim))
        frame[rows_idx] = feats
        self.frames.append(frame)

    def stacked(self, rows_idx: np.ndarray) -> np.ndarray:
        """Concatenate the last frames oldest-first for the given rows."""
        n_sel = len(rows_idx)
        parts = []
        pad = self.n_frames - len(self.frames)
        for _ in range(pad):
            parts.append(np.zeros((n_sel, self.dim)))
        for frame in self.frames:
            parts.append(frame[rows_idx])
        return np.concatenate(parts, axis=1)


class VectorStack:
    """FrameStack specialization for a single global feature vector."""

    def __init__(self, dim: int, n_frames: int = N_FRAMES):
        self.dim = dim
        self.n_frames = n_frames
        self.frames: deque = deque(maxlen=n_frames)

    def reset(self) -> None:
        self.frames.clear()

    def push(self, vec: np.ndarray) -> None:
        self.frames.append(np.asarray(vec, dtype=np.float64).copy())

    def stacked(self) -> np.ndarray:
        parts = [np.zeros(self.dim)] * (self.n_frames - len(self.frames))
        parts.extend(self.frames)
        return np.concatenate(parts)
