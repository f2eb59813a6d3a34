"""Pair potentials: zero, explicit closed forms, the ``-log(1 - f)`` class, and sums."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Callable, Mapping, Union

import numpy as np

from . import families
from .sampled import SampledFunction

ProfileSource = Union["Profile", "CallableProfile", SampledFunction]

CUTOFF_THRESHOLD = 1e-10


def as_points(x, dimension: int) -> np.ndarray:
    """Coerce ``x`` to an array of shape ``(..., d)``."""
    x = np.asarray(x, dtype=float)
    if dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        return x[..., None]
    if x.shape[-1] != dimension:
        raise ValueError(f"points must have trailing dimension {dimension}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class Profile:
    """A closed-form positive definite candidate ``f`` (amplitude times modulation).

    ``family`` may carry the modulation as a suffix, e.g. ``"gauss_cos"``.
    """

    family: str
    params: Mapping[str, object] = field(default_factory=dict)
    dimension: int = 1
    modulation: str = "none"

    def __post_init__(self):
        fam, mod = self.family, self.modulation
        for suffix in ("_cos", "_sinc"):
            if fam.endswith(suffix) and fam[: -len(suffix)] in families.AMPLITUDES:
                fam, mod = fam[: -len(suffix)], suffix[1:]
        params = {k: (np.asarray(v, dtype=float) if isinstance(v, (list, tuple, np.ndarray)) else v)
                  for k, v in dict(self.params).items()}
        families.validate_profile(fam, params, mod, self.dimension)
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "modulation", mod)
        object.__setattr__(self, "params", MappingProxyType(params))

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)[0]

    def evaluate(self, x):
        """Return ``(f(x), 1 - f(x))``."""
        return families.profile(as_points(x, self.dimension), self.family, dict(self.params),
                                self.modulation)

    @property
    def name(self) -> str:
        return self.family if self.modulation == "none" else f"{self.family}_{self.modulation}"


@dataclass(frozen=True)
class CallableProfile:
    """A user-supplied ``f(x)`` on points of shape ``(..., d)``."""

    func: Callable[[np.ndarray], np.ndarray]
    dimension: int = 1

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.func(as_points(x, self.dimension)), dtype=float)

    def evaluate(self, x):
        f = self(x)
        return f, 1.0 - f

    @property
    def name(self) -> str:
        return getattr(self.func, "__name__", "callable")


def _profile_eval(source: ProfileSource, x: np.ndarray):
    if isinstance(source, SampledFunction):
        f = source.periodic_interpolator()(x)
        return f, 1.0 - f
    return source.evaluate(x)


def _phi_from_profile(f, omf):
    """``-log(1 - f)``, +inf where ``f >= 1``; ``log1p`` branch keeps small ``f`` exact."""
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.abs(f) < 0.5
        phi = np.where(small, -np.log1p(-np.where(small, f, 0.0)),
                       -np.log(np.where(omf > 0, omf, 1.0)))
    return np.where((f >= 1.0) | (omf <= 0.0), np.inf, phi)


@dataclass(frozen=True, eq=False)
class PairPotential:
    """A symmetric pair interaction ``phi: R^d -> (-inf, +inf]``.

    Use the constructors (:func:`zero`, :func:`explicit`, :func:`make_special_class`,
    :func:`sum_of`) rather than instantiating directly. ``beta`` multiplies the
    whole potential; ``images`` > 0 makes the special-class profile periodic with
    period ``period`` by summing that many images per axis.
    """

    kind: str
    dimension: int = 1
    family: str | None = None
    params: Mapping[str, float] = field(default_factory=dict)
    profile: ProfileSource | None = None
    components: tuple["PairPotential", ...] = ()
    cutoff_radius: float = 0.0
    lower_bound: float = 0.0
    beta: float = 1.0
    period: float | None = None
    images: int = 0

    # evaluation -------------------------------------------------------

    def profile_values(self, x) -> tuple[np.ndarray, np.ndarray]:
        """``f`` and ``1 - f`` for a special-class potential (periodised if configured)."""
        if self.kind != "special":
            raise TypeError("only special-class potentials carry a profile")
        x = as_points(x, self.dimension)
        if self.images == 0 or self.period is None:
            return _profile_eval(self.profile, x)
        f = np.zeros(x.shape[:-1])
        for shift in itertools.product(range(-self.images, self.images + 1), repeat=self.dimension):
            f = f + _profile_eval(self.profile, x + self.period * np.asarray(shift, dtype=float))[0]
        return f, 1.0 - f

    def _raw(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(x.shape[:-1])
        if self.kind == "explicit":
            return families.explicit_phi(x, self.family, dict(self.params))
        if self.kind == "special":
            return _phi_from_profile(*self.profile_values(x))
        if self.kind == "sum":
            total = np.zeros(x.shape[:-1])
            for c in self.components:
                total = total + c(x)  # +inf absorbs; components are bounded below
            return total
        raise ValueError(f"unknown potential kind {self.kind!r}")

    def __call__(self, x) -> np.ndarray:
        """Evaluate ``beta * phi(x)`` for points of shape ``(..., d)`` (or scalars when d = 1)."""
        x = as_points(x, self.dimension)
        out = self._raw(x)
        return out if self.beta == 1.0 else self.beta * out

    def boltzmann(self, x) -> np.ndarray:
        """``exp(-beta phi(x))`` with ``+inf`` mapped to exactly 0."""
        v = self(x)
        return np.where(np.isposinf(v), 0.0, np.exp(-np.where(np.isposinf(v), 0.0, v)))

    def mayer(self, x) -> np.ndarray:
        """``1 - exp(-beta phi(x))`` evaluated without cancellation for special profiles."""
        if self.kind == "special" and self.beta == 1.0:
            f, omf = self.profile_values(x)
            return np.where(f >= 1.0, 1.0, f)
        v = self(x)
        return np.where(np.isposinf(v), 1.0, -np.expm1(-np.where(np.isposinf(v), 0.0, v)))

    # metadata ---------------------------------------------------------

    @property
    def is_special_class(self) -> bool:
        return self.kind == "special"

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind == "sum" and all(c.is_zero for c in self.components))

    def breakpoints(self) -> tuple[float, ...]:
        if self.kind == "explicit":
            return families.explicit_breakpoints(self.family, dict(self.params))
        if self.kind == "special" and isinstance(self.profile, Profile) and self.profile.family == "triangle":
            return (float(self.profile.params["a"]),)
        if self.kind == "sum":
            return tuple(sorted({b for c in self.components for b in c.breakpoints()}))
        return ()

    def scaled(self, beta: float) -> "PairPotential":
        """The potential ``beta * phi``."""
        if beta <= 0:
            raise ValueError("beta must be > 0")
        return replace(self, beta=self.beta * beta,
                       lower_bound=self.lower_bound * beta)

    def periodized(self, period: float, images: int = 1) -> "PairPotential":
        """Make every special-class profile periodic by summing ``images`` images per axis."""
        if self.kind == "special":
            return replace(self, period=float(period), images=int(images))
        if self.kind == "sum":
            return replace(self, components=tuple(c.periodized(period, images) for c in self.components))
        return self

    def describe(self) -> dict:
        out = {"kind": self.kind, "dimension": self.dimension, "beta": self.beta,
               "cutoff_radius": self.cutoff_radius, "lower_bound": self.lower_bound}
        if self.kind == "explicit":
            out.update(family=self.family, params=dict(self.params))
        elif self.kind == "special":
            if isinstance(self.profile, Profile):
                out.update(family=self.profile.name,
                           params={k: (v.tolist() if isinstance(v, np.ndarray) else v)
                                   for k, v in self.profile.params.items()})
            elif isinstance(self.profile, CallableProfile):
                out.update(family=self.profile.name)
            else:
                out.update(family="sampled", L=self.profile.L, n=self.profile.n)
            if self.images:
                out.update(period=self.period, images=self.images)
        elif self.kind == "sum":
            out["components"] = [c.describe() for c in self.components]
        return out


# constructors ---------------------------------------------------------


def default_cutoff(phi, dimension: int, r_max: float = 1e4, threshold: float = CUTOFF_THRESHOLD) -> float:
    """Smallest sampled radius beyond which ``|phi| < threshold`` along sampled directions."""
    radii = np.concatenate([np.linspace(0.0, 10.0, 2001)[1:], np.geomspace(10.0, r_max, 400)[1:]])
    dirs = _directions(dimension)
    vals = np.abs(np.asarray(phi(radii[:, None, None] * dirs[None, :, :]), dtype=float))
    worst = np.max(vals, axis=1)
    above = np.nonzero(~(worst < threshold))[0]
    if len(above) == 0:
        return 0.0
    last = above[-1]
    if last == len(radii) - 1:
        return float("inf")
    return float(radii[last + 1])


def _directions(dimension: int) -> np.ndarray:
    if dimension == 1:
        return np.array([[1.0], [-1.0]])
    dirs = [np.eye(dimension)[k] for k in range(dimension)]
    dirs += [-v for v in dirs]
    diag = np.ones(dimension) / np.sqrt(dimension)
    dirs += [diag, -diag]
    rng = np.random.default_rng(12345)
    extra = rng.standard_normal((8, dimension))
    dirs += list(extra / np.linalg.norm(extra, axis=1, keepdims=True))
    return np.array(dirs)


def zero(dimension: int = 1) -> PairPotential:
    """The free (Poisson) case ``phi = 0``."""
    return PairPotential(kind="zero", dimension=dimension)


def explicit(family: str, dimension: int = 1, cutoff: float | None = None, **params) -> PairPotential:
    """A potential given directly in closed form, e.g. ``explicit("square_well", height=1, radius=1)``."""
    if family == "zero":
        return zero(dimension)
    families.validate_explicit(family, params)
    pot = PairPotential(kind="explicit", dimension=dimension, family=family, params=MappingProxyType(dict(params)),
                        lower_bound=families.explicit_lower_bound(family, params))
    if cutoff is None:
        cutoff = default_cutoff(pot, dimension)
        # discontinuous families: cut exactly at the jump
        bps = pot.breakpoints()
        if bps:
            cutoff = max(bps)
    return replace(pot, cutoff_radius=float(cutoff))


def make_special_class(f: ProfileSource, dimension: int | None = None, cutoff: float | None = None,
                       check_L: float | None = None, check_n: int | None = None,
                       atol: float = 1e-12) -> PairPotential:
    """Build ``phi = -log(1 - f)`` from a profile ``f``.

    Rejects ``f(0) > 1`` and sampled ``|f(x)| > f(0) + atol`` (a necessary
    condition for positive definiteness). The profile identity
    ``1 - exp(-phi) = f`` then holds by construction.
    """
    if not isinstance(f, (SampledFunction, Profile, CallableProfile)):
        if dimension is None:
            raise ValueError("a plain callable profile needs dimension=")
        f = CallableProfile(f, dimension)
    if isinstance(f, SampledFunction):
        d = f.dimension
        values, f0 = f.values, f.at_origin()
    else:
        d = f.dimension
        L = check_L if check_L is not None else 40.0
        n = check_n if check_n is not None else (4096 if d == 1 else 64)
        values = SampledFunction.from_callable(f, L, n, d).values
        f0 = float(f(np.zeros(d)))
    if dimension is not None and dimension != d:
        raise ValueError("dimension does not match the profile")
    if f0 > 1.0 + atol:
        raise ValueError(f"f(0) = {f0} exceeds 1")
    worst = float(np.max(np.abs(values)))
    if worst > f0 + atol:
        raise ValueError(f"sampled |f| reaches {worst} > f(0) = {f0}: f is not positive definite")
    pot = PairPotential(kind="special", dimension=d, profile=f)
    # f >= -f(0) everywhere, so phi >= -log(1 + f(0)) >= -log 2
    pot = replace(pot, lower_bound=-float(np.log1p(max(f0, 0.0))))
    if cutoff is None:
        cutoff = default_cutoff(pot, d) if not isinstance(f, SampledFunction) else 0.5 * f.L
    return replace(pot, cutoff_radius=float(cutoff))


def special(family: str, dimension: int = 1, modulation: str = "none", cutoff: float | None = None,
            **params) -> PairPotential:
    """Shorthand: ``special("gauss_cos", t=1, a=2)``."""
    return make_special_class(Profile(family, params, dimension, modulation), cutoff=cutoff)


def sum_of(*components: PairPotential) -> PairPotential:
    """Pointwise sum; ``+inf`` absorbs."""
    if not components:
        raise ValueError("sum of no potentials")
    d = components[0].dimension
    if any(c.dimension != d for c in components):
        raise ValueError("all components must share the dimension")
    return PairPotential(kind="sum", dimension=d, components=tuple(components),
                         cutoff_radius=max(c.cutoff_radius for c in components),
                         lower_bound=sum(c.lower_bound for c in components))
