"""Finite configurations on a periodic box and functions of them.

Configurations are immutable multisets of points stored in lexicographic
order, so two configurations holding the same points compare (and hash)
equal regardless of how they were built.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .potentials.core import PairPotential


@dataclass(frozen=True)
class Box:
    """The torus ``[0, L)^d`` with the minimum-image metric."""

    L: float
    dimension: int = 1

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("box side must be positive")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def volume(self) -> float:
        return self.L ** self.dimension

    def wrap(self, x) -> np.ndarray:
        return np.mod(np.asarray(x, dtype=float), self.L)

    def displacement(self, x, y) -> np.ndarray:
        """Minimum-image ``y - x`` (broadcasts over leading axes)."""
        delta = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        return delta - self.L * np.round(delta / self.L)

    def check_potential(self, potential: PairPotential) -> None:
        """Warn when the box is too small for the potential's cutoff."""
        if potential.images == 0 and not (self.L > 2.0 * potential.cutoff_radius):
            warnings.warn(f"box side {self.L} does not exceed twice the cutoff radius "
                          f"{potential.cutoff_radius}; interactions are truncated at L/2",
                          stacklevel=2)


def torus_distance(b: Box, x, y) -> float | np.ndarray:
    delta = b.displacement(_pt(x, b.dimension), _pt(y, b.dimension))
    out = np.sqrt(np.sum(delta * delta, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def _pt(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    return x


def _canonical(points: np.ndarray) -> np.ndarray:
    if len(points) <= 1:
        return points
    order = np.lexsort(points.T[::-1])
    return points[order]


class Configuration:
    """A finite multiset of points in R^d (positions are not wrapped automatically)."""

    __slots__ = ("points", "_key")

    def __init__(self, points=None, dimension: int = 1):
        if points is None:
            arr = np.zeros((0, dimension))
        else:
            arr = np.asarray(points, dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(-1, dimension) if dimension > 1 else arr[:, None]
            if arr.ndim != 2:
                raise ValueError("points must be a (n, d) array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("points must be finite")
        arr = _canonical(arr.copy())
        arr.setflags(write=False)
        self.points = arr
        self._key = None

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def __iter__(self):
        return iter(self.points)

    def key(self) -> bytes:
        if self._key is None:
            self._key = self.points.tobytes() + bytes([self.dimension])
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, Configuration) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"Configuration({self.points.tolist()})"

    def insert(self, x) -> "Configuration":
        """``gamma + delta_x``."""
        x = _pt(x, self.dimension).reshape(1, self.dimension)
        return Configuration(np.vstack([self.points, x]), self.dimension)

    def index_of(self, x) -> int:
        x = _pt(x, self.dimension).reshape(self.dimension)
        hits = np.nonzero(np.all(self.points == x, axis=1))[0]
        return int(hits[0]) if len(hits) else -1

    def __contains__(self, x) -> bool:
        return self.index_of(x) >= 0

    def remove(self, x) -> "Configuration":
        """``gamma - delta_x``; removes one copy, raises ``KeyError`` if ``x`` is absent."""
        i = self.index_of(x)
        if i < 0:
            raise KeyError(f"point {np.asarray(x).tolist()} is not in the configuration")
        return Configuration(np.delete(self.points, i, axis=0), self.dimension)

    def remove_index(self, i: int) -> "Configuration":
        return Configuration(np.delete(self.points, i, axis=0), self.dimension)

    def union(self, other: "Configuration") -> "Configuration":
        return Configuration(np.vstack([self.points, other.points]), self.dimension)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{k + 1}" for k in range(self.dimension)])
            for p in self.points:
                w.writerow([repr(float(c)) for c in p])

    @classmethod
    def from_csv(cls, path: str | Path) -> "Configuration":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        if rows and not _is_number(rows[0][0]):
            header, rows = rows[0], rows[1:]
            d = len(header)
        else:
            d = len(rows[0]) if rows else 1
        return cls(np.array([[float(c) for c in r] for r in rows]).reshape(-1, d), d)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


# cylinder functions ------------------------------------------------------


@dataclass(frozen=True)
class Bump:
    """A compactly supported profile on the torus centred at ``center``.

    ``kind="cosine"``: ``amplitude * prod_j cos^2(pi u_j / (2 w))`` for ``|u_j| < w``;
    ``kind="gauss"``: ``amplitude * exp(-|u|^2 / (2 w^2))`` truncated at ``|u| < cutoff``.
    """

    center: tuple[float, ...]
    width: float
    amplitude: float = 1.0
    kind: str = "cosine"
    cutoff: float | None = None

    def __call__(self, b: Box, x: np.ndarray) -> np.ndarray:
        u = b.displacement(np.asarray(self.center), x)
        if self.kind == "cosine":
            inside = np.all(np.abs(u) < self.width, axis=-1)
            vals = np.prod(np.cos(0.5 * math.pi * u / self.width) ** 2, axis=-1)
            return self.amplitude * np.where(inside, vals, 0.0)
        if self.kind == "gauss":
            r2 = np.sum(u * u, axis=-1)
            rc = self.cutoff if self.cutoff is not None else 3.0 * self.width
            return self.amplitude * np.where(r2 < rc * rc, np.exp(-0.5 * r2 / self.width ** 2), 0.0)
        raise ValueError(f"unknown bump kind {self.kind!r}")


@dataclass(frozen=True)
class Affine:
    intercept: float
    coeffs: tuple[float, ...]

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return self.intercept + s @ np.asarray(self.coeffs)


@dataclass(frozen=True)
class Polynomial:
    """``c0 + a.s + s^T Q s + sum_k c3_k s_k^3`` (degree at most 3)."""

    c0: float
    linear: tuple[float, ...]
    quadratic: tuple[tuple[float, ...], ...] = ()
    cubic: tuple[float, ...] = ()

    def __call__(self, s: np.ndarray) -> np.ndarray:
        out = self.c0 + s @ np.asarray(self.linear)
        if self.quadratic:
            Q = np.asarray(self.quadratic)
            out = out + np.einsum("...i,ij,...j->...", s, Q, s)
        if self.cubic:
            out = out + (s ** 3) @ np.asarray(self.cubic)
        return out


@dataclass(frozen=True)
class Sigmoid:
    """Bounded rational sigmoid ``c0 + scale * u / (1 + |u|)`` with ``u = w.s + shift``."""

    c0: float
    scale: float
    weights: tuple[float, ...]
    shift: float = 0.0

    def __call__(self, s: np.ndarray) -> np.ndarray:
        u = s @ np.asarray(self.weights) + self.shift
        return self.c0 + self.scale * u / (1.0 + np.abs(u))


@dataclass(frozen=True)
class CylinderFunction:
    """``F(gamma) = g(<psi_1, gamma>, ..., <psi_N, gamma>)``."""

    box: Box
    profiles: tuple[Bump, ...]
    outer: Affine | Polynomial | Sigmoid

    def __post_init__(self):
        if len(self.profiles) < 1:
            raise ValueError("a cylinder function needs at least one profile")

    def pairings(self, g: Configuration) -> np.ndarray:
        if len(g) == 0:
            return np.zeros(len(self.profiles))
        return np.array([float(np.sum(p(self.box, g.points))) for p in self.profiles])

    def profile_values(self, x) -> np.ndarray:
        """``(psi_1(x), ..., psi_N(x))`` for points of shape ``(..., d)``."""
        x = _pt(x, self.box.dimension)
        return np.stack([p(self.box, x) for p in self.profiles], axis=-1)

    def __call__(self, g: Configuration) -> float:
        return float(self.outer(self.pairings(g)))


def eval_cylinder(F: CylinderFunction, g: Configuration) -> float:
    return F(g)


def random_cylinder(box: Box, rng: np.random.Generator, n_profiles: int = 2,
                    outer: str | None = None, width: float | None = None) -> CylinderFunction:
    """A cylinder function with random bumps and a random outer map."""
    width = width if width is not None else 0.3 * box.L
    profiles = []
    for _ in range(n_profiles):
        kind = rng.choice(["cosine", "gauss"])
        w = width * rng.uniform(0.5, 1.0) if kind == "cosine" else 0.4 * width * rng.uniform(0.5, 1.0)
        profiles.append(Bump(tuple(rng.uniform(0, box.L, box.dimension)), float(w),
                             float(rng.uniform(0.5, 1.5)), str(kind)))
    outer = outer or str(rng.choice(["affine", "polynomial", "sigmoid"]))
    N = n_profiles
    if outer == "affine":
        g = Affine(float(rng.normal()), tuple(rng.normal(size=N)))
    elif outer == "polynomial":
        Q = rng.normal(size=(N, N)) * 0.5
        g = Polynomial(float(rng.normal()), tuple(rng.normal(size=N)),
                       tuple(map(tuple, 0.5 * (Q + Q.T))), tuple(0.2 * rng.normal(size=N)))
    elif outer == "sigmoid":
        g = Sigmoid(float(rng.normal()), float(rng.uniform(0.5, 2.0)), tuple(rng.normal(size=N)),
                    float(rng.normal()))
    else:
        raise ValueError(f"unknown outer map {outer!r}")
    return CylinderFunction(box, tuple(profiles), g)


# Gibbs specification -----------------------------------------------------


@dataclass(frozen=True)
class GibbsSpec:
    """Activity ``z``, inverse temperature ``beta`` and pair potential."""

    potential: PairPotential
    z: float = 1.0
    beta: float = 1.0
    effective: PairPotential = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.z) and self.z > 0):
            raise ValueError("activity z must be finite and > 0")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError("beta must be finite and > 0")
        eff = self.potential if self.beta == 1.0 else self.potential.scaled(self.beta)
        object.__setattr__(self, "effective", eff)

    def pair_energy(self, b: Box, delta: np.ndarray) -> np.ndarray:
        """``beta * phi`` at minimum-image displacements, cut off at the potential's radius.

        Periodised special-class components are not cut off (their images already
        account for the whole torus).
        """
        return _pair_energy(self.effective, delta)


def _pair_energy(p: PairPotential, delta: np.ndarray) -> np.ndarray:
    if p.kind == "zero":
        return np.zeros(delta.shape[:-1])
    if p.kind == "sum":
        total = np.zeros(delta.shape[:-1])
        for c in p.components:
            total = total + _pair_energy(c, delta)
        return p.beta * total if p.beta != 1.0 else total
    vals = p(delta)
    if p.images == 0 and math.isfinite(p.cutoff_radius):
        r = np.sqrt(np.sum(delta * delta, axis=-1))
        vals = np.where(r <= p.cutoff_radius, vals, 0.0)
    return vals


def local_energy(spec: GibbsSpec, b: Box, x, g: Configuration, exclude_self: bool = False) -> float:
    """``E(x, gamma) = beta * sum_{y in gamma} phi(x - y)``; +inf if any term is.

    With ``exclude_self`` the energy is taken relative to ``gamma - delta_x``.
    """
    if exclude_self:
        g = g.remove(x)
    if len(g) == 0:
        return 0.0
    x = _pt(x, b.dimension).reshape(b.dimension)
    vals = spec.pair_energy(b, b.displacement(x, g.points))
    if np.any(np.isposinf(vals)):
        return math.inf
    return float(np.sum(vals))


def local_energies(spec: GibbsSpec, b: Box, xs: np.ndarray, g: Configuration) -> np.ndarray:
    """Vectorised :func:`local_energy` for an array of points ``xs`` of shape ``(M, d)``."""
    xs = np.asarray(xs, dtype=float).reshape(-1, b.dimension)
    if len(g) == 0:
        return np.zeros(len(xs))
    vals = spec.pair_energy(b, b.displacement(xs[:, None, :], g.points[None, :, :]))
    inf = np.any(np.isposinf(vals), axis=1)
    safe = np.where(np.isposinf(vals), 0.0, vals)
    return np.where(inf, np.inf, np.sum(safe, axis=1))


def boltzmann_rate(spec: GibbsSpec, energy):
    """``z * exp(-E)`` with ``E = +inf`` giving exactly 0."""
    energy = np.asarray(energy, dtype=float)
    with np.errstate(over="ignore"):  # very negative energies give +inf, reported by callers
        out = np.where(np.isposinf(energy), 0.0, spec.z * np.exp(-np.where(np.isposinf(energy), 0.0, energy)))
    return float(out) if out.ndim == 0 else out


def papangelou(spec: GibbsSpec, b: Box, x, g: Configuration, exclude_self: bool = False) -> float:
    """``r(x, gamma) = z exp(-E(x, gamma))``."""
    return boltzmann_rate(spec, local_energy(spec, b, x, g, exclude_self))


def d_minus(F, g: Configuration, x) -> float:
    """``F(gamma - delta_x) - F(gamma)``; ``x`` must belong to ``gamma``."""
    if x not in g:
        raise KeyError("d_minus requires x in gamma")
    return F(g.remove(x)) - F(g)


def d_plus(F, g: Configuration, x) -> float:
    """``F(gamma) - F(gamma + delta_x)``."""
    return F(g) - F(g.insert(x))


__all__: Sequence[str] = [
    "Box", "Configuration", "CylinderFunction", "Bump", "Affine", "Polynomial", "Sigmoid", "GibbsSpec",
    "torus_distance", "local_energy", "local_energies", "papangelou", "boltzmann_rate", "d_minus", "d_plus",
    "eval_cylinder", "random_cylinder",
]
