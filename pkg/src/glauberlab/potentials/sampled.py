"""Grid-sampled functions on a centred periodic window."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def grid_axis(L: float, n: int) -> np.ndarray:
    """Node coordinates ``-L/2 + k*L/n`` for ``k = 0..n-1``."""
    return -0.5 * L + (L / n) * np.arange(n)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values of a real function on the uniform grid of ``[-L/2, L/2)^d``.

    The node at index ``n // 2`` along every axis is the origin.
    """

    values: np.ndarray
    L: float
    dimension: int = 1
    origin_value: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != self.dimension:
            raise ValueError(f"values must have {self.dimension} axes, got {values.ndim}")
        n = values.shape[0]
        if any(s != n for s in values.shape):
            raise ValueError("grid must have the same number of points per axis")
        if not _is_power_of_two(n):
            raise ValueError(f"grid size {n} is not a power of two")
        if np.isnan(values).any():
            raise ValueError("sampled values contain NaN")
        if self.L <= 0:
            raise ValueError("window length L must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def step(self) -> float:
        return self.L / self.n

    @property
    def axis(self) -> np.ndarray:
        return grid_axis(self.L, self.n)

    def points(self) -> np.ndarray:
        """All grid nodes as an array of shape ``(n, ..., n, d)``."""
        mesh = np.meshgrid(*([self.axis] * self.dimension), indexing="ij")
        return np.stack(mesh, axis=-1)

    def at_origin(self) -> float:
        """Value at 0 of the underlying function (before any image summation)."""
        if self.origin_value is not None:
            return float(self.origin_value)
        return float(self.values[(self.n // 2,) * self.dimension])

    @classmethod
    def from_callable(cls, f: Callable[[np.ndarray], np.ndarray], L: float, n: int,
                      dimension: int = 1, images: int = 0) -> "SampledFunction":
        """Sample ``f`` on the grid, optionally summing over periodic images.

        ``f`` receives an array of shape ``(..., d)``. With ``images = J`` the
        sample at ``x`` is ``sum f(x + j L)`` over ``j`` in ``{-J..J}^d``.
        """
        if not _is_power_of_two(n):
            raise ValueError(f"grid size {n} is not a power of two")
        axis = grid_axis(L, n)
        pts = np.stack(np.meshgrid(*([axis] * dimension), indexing="ij"), axis=-1)
        total = np.zeros((n,) * dimension)
        for shift in itertools.product(range(-images, images + 1), repeat=dimension):
            total += np.asarray(f(pts + L * np.asarray(shift, dtype=float)), dtype=float)
        origin = float(np.asarray(f(np.zeros(dimension)), dtype=float)) if images else None
        return cls(total, L, dimension, origin)

    def periodic_interpolator(self) -> Callable[[np.ndarray], np.ndarray]:
        """Multilinear interpolation, periodic with period ``L`` on every axis."""
        h, n, d = self.step, self.n, self.dimension
        vals = self.values

        def interp(x):
            x = np.asarray(x, dtype=float)
            if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
                x = x[..., None]
            u = (x + 0.5 * self.L) / h
            i0 = np.floor(u).astype(int)
            frac = u - i0
            out = np.zeros(x.shape[:-1])
            for corner in itertools.product((0, 1), repeat=d):
                c = np.asarray(corner)
                idx = tuple(np.mod(i0[..., k] + c[k], n) for k in range(d))
                weight = np.prod(np.where(c == 1, frac, 1.0 - frac), axis=-1)
                out = out + weight * vals[idx]
            return out

        return interp

    def to_csv(self, path: str | Path) -> None:
        pts = self.points().reshape(-1, self.dimension)
        vals = self.values.reshape(-1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{k + 1}" for k in range(self.dimension)] + ["value"])
            for p, v in zip(pts, vals):
                w.writerow([repr(float(c)) for c in p] + [repr(float(v))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "SampledFunction":
        """Read a CSV written by :meth:`to_csv` (rows may come in any order)."""
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        try:
            float(header[0])
            body = rows  # no header line
        except ValueError:
            pass
        data = np.array([[float(c) for c in r] for r in body if r])
        d = data.shape[1] - 1
        n = round(len(data) ** (1.0 / d))
        if n ** d != len(data):
            raise ValueError("CSV rows do not form a full square grid")
        axis = np.unique(data[:, 0])
        if len(axis) != n:
            raise ValueError("CSV coordinates are not on a uniform grid")
        h = axis[1] - axis[0] if n > 1 else 1.0
        L = n * h
        idx = np.rint((data[:, :d] + 0.5 * L) / h).astype(int)
        values = np.empty((n,) * d)
        values[tuple(idx.T)] = data[:, d]
        return cls(values, float(L), d)
