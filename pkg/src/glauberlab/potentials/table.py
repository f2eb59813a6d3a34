"""The worked examples of positive definite profiles, with the grids used to certify them.

Grid settings are chosen so that truncation of slowly decaying profiles
(Cauchy, Bessel) stays far below the 1e-8 relative tolerance: those entries
are periodised by summing images before the Fourier check.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Profile
from .families import poisson_kernel_constant
from .sampled import SampledFunction


@dataclass(frozen=True)
class TableEntry:
    name: str
    profile: Profile
    L: float
    n: int
    images: int = 0

    def samples(self) -> SampledFunction:
        return SampledFunction.from_callable(self.profile, self.L, self.n, self.profile.dimension, self.images)


def _one_d() -> list[TableEntry]:
    rows = []
    for mod in ("cos", "sinc"):
        rows += [
            TableEntry(f"gauss_{mod}", Profile("gauss", {"t": 1.0, "a": 2.0}, 1, mod), 40.0, 4096),
            TableEntry(f"exp_{mod}", Profile("exp", {"t": 1.0, "a": 3.0}, 1, mod), 40.0, 4096),
            TableEntry(f"cauchy_{mod}", Profile("cauchy", {"sigma": 1.0, "a": 2.0}, 1, mod), 40.0, 4096, images=50),
            TableEntry(f"triangle_{mod}", Profile("triangle", {"a": 1.5, "b": 2.0}, 1, mod), 40.0, 4096),
        ]
    return rows


def _d_dim(d: int = 2) -> list[TableEntry]:
    a = [1.5, 0.5, 1.0][:d]
    n = 128 if d == 2 else 32
    t_pk = 1.01 * poisson_kernel_constant(d + 2) ** (1.0 / (d + 2))  # keeps f(0) < 1
    return [
        TableEntry(f"gauss_cos_d{d}", Profile("gauss", {"t": 1.0, "a": a}, d, "cos"), 16.0, n),
        TableEntry(f"gauss_sinc_d{d}", Profile("gauss", {"t": 1.0, "a": a}, d, "sinc"), 16.0, n),
        TableEntry(f"bessel_d{d}", Profile("bessel", {"r": 2.0, "n": 21}, d), 32.0, n, images=1),
        TableEntry(f"poisson_kernel_d{d}", Profile("poisson_kernel", {"t": t_pk, "n": d + 2}, d), 32.0, n),
    ]


TABLE_1D: tuple[TableEntry, ...] = tuple(_one_d())
TABLE_DD: tuple[TableEntry, ...] = tuple(_d_dim(2)) + tuple(_d_dim(3))


def indicator_counterexample(L: float = 40.0, n: int = 4096) -> SampledFunction:
    """``1`` on ``[-1, 1]``, ``0`` elsewhere: bounded by its value at 0 but not positive definite."""
    return SampledFunction.from_callable(lambda x: (abs(x[..., 0]) <= 1.0).astype(float), L, n, 1)
