"""Closed-form function families used to build pair potentials.

A positive definite profile ``f`` is the product of an amplitude ``A(x)`` and
an optional modulation ``M(x)`` (``cos(a.x)`` or ``prod_j sin(a_j x_j)/(a_j x_j)``).
Every family also returns ``1 - f`` computed without cancellation, which the
special-class potential ``-log(1 - f)`` needs near the origin.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

AMPLITUDES = ("gauss", "exp", "cauchy", "triangle", "stretched_exp", "bessel", "poisson_kernel")
MODULATIONS = ("none", "cos", "sinc")
EXPLICIT = ("zero", "square_well", "gaussian", "inverse_power")


def _norm(x):
    return np.sqrt(np.sum(x * x, axis=-1))


def _one_minus_sinc(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    z2 = z * z
    series = z2 / 6.0 - z2 * z2 / 120.0 + z2 * z2 * z2 / 5040.0
    return np.where(small, series, 1.0 - np.sin(zs) / zs)


def _sinc(z):
    return 1.0 - _one_minus_sinc(z)


def _modulation(x, kind, a):
    """Return ``(M, 1 - M)``."""
    if kind == "none":
        one = np.ones(x.shape[:-1])
        return one, np.zeros_like(one)
    a = np.broadcast_to(np.asarray(a, dtype=float), (x.shape[-1],))
    if kind == "cos":
        phase = x @ a
        return np.cos(phase), 2.0 * np.sin(0.5 * phase) ** 2
    if kind == "sinc":
        u = _one_minus_sinc(x * a)  # (..., d)
        m = np.prod(1.0 - u, axis=-1)
        positive = np.all(u < 1.0, axis=-1)
        logs = np.sum(np.log1p(-np.where(u < 1.0, u, 0.0)), axis=-1)
        om = np.where(positive, -np.expm1(logs), 1.0 - m)
        return m, om
    raise ValueError(f"unknown modulation {kind!r}")


def _bessel_profile(r_abs, r, n):
    """``(r/|x|)^(n/2) J_(n/2)(r|x|)`` with its finite limit at 0."""
    nu = 0.5 * n
    z = r * r_abs
    small = z < 1e-3
    zs = np.where(small, 1.0, z)
    big = r ** (2 * nu) * zs ** (-nu) * special.jv(nu, zs)
    q = -0.25 * z * z
    series = (1.0 + q / (nu + 1.0) + q * q / (2.0 * (nu + 1.0) * (nu + 2.0)))
    series = r ** (2 * nu) * 2.0 ** (-nu) / math.gamma(nu + 1.0) * series
    return np.where(small, series, big)


def poisson_kernel_constant(n: float) -> float:
    return 2.0 ** (0.5 * n) * math.gamma(0.5 * (n + 1)) / math.sqrt(math.pi)


def _amplitude(x, kind, p):
    """Return ``(A, 1 - A)``."""
    r_abs = _norm(x)
    if kind == "gauss":
        u = p["t"] * r_abs ** 2
        return np.exp(-u), -np.expm1(-u)
    if kind == "exp":
        u = p["t"] * r_abs
        return np.exp(-u), -np.expm1(-u)
    if kind == "stretched_exp":
        u = p["t"] * r_abs ** p["p"]
        return np.exp(-u), -np.expm1(-u)
    if kind == "cauchy":
        s2 = (p["sigma"] * r_abs) ** 2
        return 1.0 / (1.0 + s2), s2 / (1.0 + s2)
    if kind == "triangle":
        inside = r_abs <= p["a"]
        A = np.where(inside, 1.0 - r_abs / p["a"], 0.0)
        return A, np.where(inside, r_abs / p["a"], 1.0)
    if kind == "bessel":
        A = _bessel_profile(r_abs, p["r"], p["n"])
        return A, 1.0 - A
    if kind == "poisson_kernel":
        c = poisson_kernel_constant(p["n"])
        A = c * p["t"] / (r_abs ** 2 + p["t"] ** 2) ** (0.5 * (p["n"] + 1))
        return A, 1.0 - A
    raise ValueError(f"unknown amplitude family {kind!r}")


def validate_profile(kind: str, params: dict, modulation: str, dimension: int) -> None:
    if kind not in AMPLITUDES:
        raise ValueError(f"unknown family {kind!r}; expected one of {AMPLITUDES}")
    if modulation not in MODULATIONS:
        raise ValueError(f"unknown modulation {modulation!r}")

    def need(name, cond, msg):
        if name not in params:
            raise ValueError(f"family {kind!r} requires parameter {name!r}")
        if not cond(params[name]):
            raise ValueError(f"family {kind!r}: {msg}")

    if kind in ("gauss", "exp", "stretched_exp"):
        need("t", lambda v: v > 0, "t must be > 0")
    if kind == "stretched_exp":
        need("p", lambda v: v > 0, "p must be > 0")
    if kind == "cauchy":
        need("sigma", lambda v: v > 0, "sigma must be > 0")
    if kind == "triangle":
        need("a", lambda v: v > 0, "a must be > 0")
        if dimension != 1:
            raise ValueError("the triangle family is only defined for d = 1")
    if kind == "bessel":
        need("r", lambda v: v >= 0, "r must be >= 0")
        need("n", lambda v: v > 2 * dimension - 1, "n must exceed 2d - 1")
    if kind == "poisson_kernel":
        need("t", lambda v: v > 0, "t must be > 0")
        need("n", lambda v: v > dimension - 1, "n must exceed d - 1")
    if modulation != "none" and "a" not in params and kind != "triangle":
        raise ValueError(f"modulation {modulation!r} requires parameter 'a'")
    if kind == "triangle" and modulation != "none" and "b" not in params:
        raise ValueError("triangle modulation uses frequency parameter 'b'")


def profile(x, kind: str, params: dict, modulation: str = "none"):
    """Evaluate ``f`` and ``1 - f`` at points ``x`` of shape ``(..., d)``."""
    A, omA = _amplitude(x, kind, params)
    freq = params.get("b") if kind == "triangle" else params.get("a", 0.0)
    M, omM = _modulation(x, modulation, freq)
    return A * M, omA + A * omM


def explicit_phi(x, kind: str, params: dict):
    r_abs = _norm(x)
    if kind == "zero":
        return np.zeros_like(r_abs)
    if kind == "square_well":
        return np.where(r_abs <= params.get("radius", 1.0), params.get("height", 1.0), 0.0)
    if kind == "gaussian":
        return params.get("amplitude", 1.0) * np.exp(-params.get("t", 1.0) * r_abs ** 2)
    if kind == "inverse_power":
        with np.errstate(divide="ignore"):
            return np.where(r_abs > 0, params.get("c", 1.0) / np.where(r_abs > 0, r_abs, 1.0) ** params.get("p", 1.0), np.inf)
    raise ValueError(f"unknown explicit family {kind!r}; expected one of {EXPLICIT}")


def validate_explicit(kind: str, params: dict) -> None:
    if kind not in EXPLICIT:
        raise ValueError(f"unknown explicit family {kind!r}; expected one of {EXPLICIT}")
    if kind == "square_well" and params.get("radius", 1.0) <= 0:
        raise ValueError("square_well radius must be > 0")
    if kind == "gaussian" and params.get("t", 1.0) <= 0:
        raise ValueError("gaussian t must be > 0")
    if kind == "inverse_power":
        if params.get("p", 1.0) <= 0:
            raise ValueError("inverse_power p must be > 0")
        if params.get("c", 1.0) < 0:
            raise ValueError("inverse_power c must be >= 0 (bounded below)")


def explicit_breakpoints(kind: str, params: dict) -> tuple[float, ...]:
    if kind == "square_well":
        return (float(params.get("radius", 1.0)),)
    return ()


def explicit_lower_bound(kind: str, params: dict) -> float:
    if kind == "square_well":
        return min(0.0, params.get("height", 1.0))
    if kind == "gaussian":
        return min(0.0, params.get("amplitude", 1.0))
    return 0.0
