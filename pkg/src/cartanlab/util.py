"""Shared numeric utilities: torus wrapping, deterministic sampling, grid fields.

Conventions used across the package:

* Points on the torus are numpy float arrays with values in [0, 1); batches
  are shaped (n, d).  Lifts are arbitrary real vectors; reduction is the
  componentwise fractional part.
* All randomness flows from one 64-bit seed through counter-based Philox
  substreams (`substream`), so results are independent of thread count and
  evaluation order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import ndimage


def reduce_point(lift) -> np.ndarray:
    """Map a lift (or batch of lifts) to the fundamental domain [0, 1)^d."""
    x = np.asarray(lift, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite coordinates cannot be reduced to the torus")
    frac = x - np.floor(x)
    # x - floor(x) rounds up to exactly 1.0 for tiny negative x
    return np.where(frac >= 1.0, 0.0, frac)


def wrap_half(delta) -> np.ndarray:
    """Wrap a displacement componentwise into [-1/2, 1/2)."""
    d = np.asarray(delta, dtype=float)
    return d - np.floor(d + 0.5)


def torus_distance(x, y) -> np.ndarray:
    """Euclidean distance on the torus (per point for batched input)."""
    diff = wrap_half(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    return np.sqrt(np.sum(diff * diff, axis=-1))


def as_batch(x, dim: int) -> tuple[np.ndarray, bool]:
    """Return (batch of shape (n, dim), was_single_point)."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        if a.shape[0] != dim:
            raise ValueError(f"expected a point of dimension {dim}, got shape {a.shape}")
        return a[None, :], True
    if a.ndim != 2 or a.shape[1] != dim:
        raise ValueError(f"expected shape (n, {dim}), got {a.shape}")
    return a, False


def substream(seed: int, *indices: int) -> np.random.Generator:
    """Deterministic Philox substream keyed by (seed, flattened indices).

    Counter-based splitting: the same (seed, indices) always yields the same
    stream, no matter how many other streams were drawn or on which thread.
    """
    mask = 0xFFFFFFFFFFFFFFFF
    key = int(seed) & mask
    mixed = 0x9E3779B97F4A7C15
    for ix in indices:
        # splitmix-style avalanche keeps distinct index tuples well separated
        z = (int(ix) + mixed) & mask
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        mixed = (z ^ (z >> 31)) & mask
    bg = np.random.Philox(key=(key << 64) | mixed)
    return np.random.Generator(bg)


def thread_count(explicit: int | None = None) -> int:
    """Worker count: explicit argument, else CARTANLAB_THREADS, else 1."""
    if explicit is not None:
        return max(1, int(explicit))
    env = os.environ.get("CARTANLAB_THREADS")
    if env:
        return max(1, int(env))
    return 1


def thread_map(fn, items, threads: int | None = None) -> list:
    """Parallel map with a deterministic, input-ordered result list.

    Each item must be an independent work unit; results are merged by input
    index so the output is identical for any worker count.
    """
    items = list(items)
    n = thread_count(threads)
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


def low_discrepancy(n: int, dim: int) -> np.ndarray:
    """First n points of the additive-recurrence (Kronecker) sequence in [0,1)^d.

    Uses the generalized golden-ratio constant (unique real root of
    x^(d+1) = x + 1), a standard low-discrepancy lattice.  Deterministic and
    seedless by design: it serves as a fixed off-grid certification set.
    """
    if n <= 0:
        return np.zeros((0, dim))
    phi = 2.0
    for _ in range(64):
        phi = (1.0 + phi) ** (1.0 / (dim + 1))
    alphas = np.array([phi ** -(j + 1) for j in range(dim)])
    idx = np.arange(1, n + 1, dtype=float)[:, None]
    return np.mod(0.5 + idx * alphas[None, :], 1.0)


class PeriodicGridField:
    """Vector field sampled on a regular periodic grid with spline evaluation.

    values: array of shape (N,)*dim + (ncomp,) holding samples at grid points
    i/N.  Evaluation accepts arbitrary lifts; coordinates wrap periodically.
    order=3 is interpolating cubic B-spline (prefiltered), order=1 trilinear.
    """

    def __init__(self, values: np.ndarray, order: int = 3):
        values = np.asarray(values, dtype=float)
        self.dim = values.ndim - 1
        self.ncomp = values.shape[-1]
        self.grid_n = values.shape[0]
        if values.shape[: self.dim] != (self.grid_n,) * self.dim:
            raise ValueError("grid must be square in every axis")
        if order not in (1, 3):
            raise ValueError("interpolation order must be 1 or 3")
        self.order = order
        self.values = values
        if order == 3:
            self._coef = [
                ndimage.spline_filter(values[..., c], order=3, mode="grid-wrap")
                for c in range(self.ncomp)
            ]
        else:
            self._coef = [values[..., c] for c in range(self.ncomp)]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        coords = (pts * self.grid_n).T
        out = np.empty((pts.shape[0], self.ncomp))
        for c in range(self.ncomp):
            out[:, c] = ndimage.map_coordinates(
                self._coef[c], coords, order=self.order, mode="grid-wrap", prefilter=False
            )
        return out[0] if single else out
