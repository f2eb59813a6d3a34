"""Numerical certificates for pair potentials.

Every check returns a :class:`CheckReport`. The positive-definiteness check is
an exact statement about the periodic grid; stability is a falsification probe
only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate

from .core import PairPotential, _directions, as_points
from .sampled import SampledFunction

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class CheckReport:
    kind: str
    passed: bool
    witness: dict[str, Any] = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "passed": bool(self.passed), "witness": _jsonable(self.witness),
                "note": self.note}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# positive definiteness -------------------------------------------------


def grid_spectrum(s: SampledFunction) -> np.ndarray:
    """DFT of the samples with the origin moved to index 0.

    For a symmetric function this is real; by Bochner it is nonnegative
    exactly when the periodic grid function is positive definite.
    """
    return np.fft.fftn(np.fft.ifftshift(s.values))


def check_positive_definite(s: SampledFunction, tol: float = DEFAULT_TOL) -> CheckReport:
    """Fourier certificate: min real DFT value >= -tol * max |DFT| and ``s(0) <= 1 + tol``."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    spec = grid_spectrum(s)
    scale = float(np.max(np.abs(spec)))
    re, im = spec.real, spec.imag
    k_min = np.unravel_index(int(np.argmin(re)), re.shape)
    min_val = float(re[k_min])
    max_imag = float(np.max(np.abs(im)))
    f0 = s.at_origin()
    # frequency index signed so that it reads as a wavenumber
    n = s.n
    freq = [int(k if k <= n // 2 else k - n) for k in k_min]
    passed = (min_val >= -tol * scale) and (max_imag <= max(tol, 1e-12) * scale) and (f0 <= 1.0 + tol)
    return CheckReport(
        "PositiveDefinite", bool(passed),
        {"min_fourier": min_val, "min_relative": (min_val / scale) if scale > 0 else 0.0,
         "frequency_index": freq, "max_fourier": scale, "max_imag": max_imag, "f0": f0, "tol": tol},
    )


def quadratic_form_minimum(s: SampledFunction, points: int = 32, trials: int = 2000, seed: int = 0) -> float:
    """Smallest ``sum psi_i psi_j f(x_i - x_j)`` over random unit ``psi`` on a coarse 1-d grid.

    An independent (non-Fourier) probe used to corroborate failures.
    """
    if s.dimension != 1:
        raise ValueError("quadratic_form_minimum is one-dimensional")
    interp = s.periodic_interpolator()
    xs = np.linspace(-0.25 * s.L, 0.25 * s.L, points)
    gram = interp((xs[:, None] - xs[None, :]))
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal((trials, points))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    forms = np.einsum("ti,ij,tj->t", psi, gram, psi)
    return float(min(forms.min(), np.linalg.eigvalsh(gram)[0]))


# regularity -------------------------------------------------------------


def _radial_sup(p: PairPotential, radii: np.ndarray) -> np.ndarray:
    dirs = _directions(p.dimension)
    vals = np.abs(p(radii[:, None, None] * dirs[None, :, :]))
    return np.max(vals, axis=1)


def check_regularity(p: PairPotential, R: float = 1.0, r_max: float = 1e4, points: int = 4000,
                     tol: float = 1e-6) -> CheckReport:
    """Integrability of ``t^(d-1) phi*(t)`` on ``[R, inf)``.

    ``phi*`` is the smallest decreasing majorant of the radial sup of ``|phi|``
    on a log grid up to ``r_max``; the tail beyond ``r_max`` is extrapolated
    from a power-law fit on the last decade.
    """
    if not math.isfinite(p.lower_bound):
        raise ValueError("not regular by definition: potential is unbounded below")
    if R <= 0:
        raise ValueError("R must be > 0")
    d = p.dimension
    t = np.geomspace(R, r_max, points)
    sup = _radial_sup(p, t)
    if not np.all(np.isfinite(sup)):
        return CheckReport("Regular", False, {"integral": float("inf"), "R": R},
                           "potential is infinite beyond R")
    envelope = np.maximum.accumulate(sup[::-1])[::-1]
    g = t ** (d - 1) * envelope
    integral = float(integrate.trapezoid(g, t))
    last = t >= r_max / 10.0
    gl, tl = g[last], t[last]
    if np.all(gl <= 1e-300):
        tail, alpha = 0.0, float("inf")
    else:
        pos = gl > 1e-300
        if pos.sum() < 2:
            tail, alpha = 0.0, float("inf")
        else:
            slope, intercept = np.polyfit(np.log(tl[pos]), np.log(gl[pos]), 1)
            alpha = -slope
            if alpha <= 1.0 + 1e-2:
                tail = float("inf")
            else:
                tail = float(np.exp(intercept) * r_max ** (1.0 - alpha) / (alpha - 1.0))
    passed = math.isfinite(tail) and tail <= tol * max(1.0, integral)
    return CheckReport("Regular", bool(passed),
                       {"integral": integral + (tail if math.isfinite(tail) else 0.0), "grid_integral": integral,
                        "tail": tail, "decay_exponent": alpha, "R": R, "r_max": r_max})


# stability ----------------------------------------------------------------


def configuration_energy(p: PairPotential, pts: np.ndarray) -> float:
    """``U = sum over unordered pairs of phi(x - y)`` in free space."""
    diff = pts[:, None, :] - pts[None, :, :]
    iu = np.triu_indices(len(pts), 1)
    return float(np.sum(p(diff[iu])))


def _batch_energy(p: PairPotential, pts: np.ndarray) -> np.ndarray:
    """Energies for a batch of configurations of shape ``(trials, n, d)``."""
    n = pts.shape[1]
    iu = np.triu_indices(n, 1)
    diff = pts[:, iu[0], :] - pts[:, iu[1], :]
    return np.sum(p(diff), axis=1)


def check_stability_numeric(p: PairPotential, n_max: int = 12, trials: int = 10_000, seed: int = 0,
                            box: float | None = None, slope_tol: float = 0.05) -> CheckReport:
    """Monte Carlo search for configurations with very negative energy per particle.

    Probes uniform random configurations, tight clusters at several radii, and
    regular chains whose spacing sits at the minimum of ``phi``. The potential
    fails when the per-``n`` minimum of ``U / n`` keeps decreasing with ``n``
    (slope below ``-slope_tol`` times the potential's energy scale). This is a
    falsification probe, not a proof of stability.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    d = p.dimension
    rng = np.random.default_rng(seed)
    rc = p.cutoff_radius if math.isfinite(p.cutoff_radius) and p.cutoff_radius > 0 else 5.0
    side = box if box is not None else 2.0 * rc
    ns = np.arange(2, n_max + 1)
    per_n = max(1, trials // len(ns))

    radii = np.geomspace(1e-3, rc, 200)
    dirs = _directions(d)
    radial = np.min(p(radii[:, None, None] * dirs[None, :, :]), axis=1)
    r_star = float(radii[int(np.argmin(radial))])
    scale = max(1.0, float(np.max(np.abs(radial[np.isfinite(radial)]))) if np.isfinite(radial).any() else 1.0)

    best = np.full(len(ns), np.inf)
    worst_cfg = {}
    for k, n in enumerate(ns):
        cands = [rng.uniform(-0.5 * side, 0.5 * side, size=(per_n, n, d))]
        for rad in (0.1, 0.3, 0.5 * r_star, r_star):
            cands.append(rng.uniform(-rad, rad, size=(max(1, per_n // 8), n, d)))
        chain = np.zeros((1, n, d))
        chain[0, :, 0] = r_star * np.arange(n)
        cands.append(chain)
        for c in cands:
            ratio = _batch_energy(p, c) / n
            j = int(np.argmin(ratio))
            if ratio[j] < best[k]:
                best[k] = ratio[j]
                worst_cfg[int(n)] = c[j]
    finite = np.isfinite(best)
    upper = ns >= (ns[0] + ns[-1]) / 2.0
    mask = finite & upper
    slope = float(np.polyfit(ns[mask], best[mask], 1)[0]) if mask.sum() >= 2 else 0.0
    min_ratio = float(np.min(best))
    B_est = max(0.0, -min_ratio)
    passed = slope >= -slope_tol * scale
    n_worst = int(ns[int(np.argmin(best))])
    return CheckReport(
        "Stable", bool(passed),
        {"min_energy_per_particle": min_ratio, "B_est": B_est, "trend_slope": slope,
         "energy_scale": scale, "per_n_minimum": best, "worst_n": n_worst,
         "worst_configuration": worst_cfg.get(n_worst)},
        "falsification probe only: passing does not prove stability",
    )


# beta family, growth, high temperature -----------------------------------


def beta_family_check(f: SampledFunction, beta: float, beta_bar: float, tol: float = DEFAULT_TOL) -> CheckReport:
    """Fourier certificate for ``f_beta = 1 - (1 - f)^(beta / beta_bar)``."""
    if beta <= 0 or beta_bar <= 0:
        raise ValueError("beta and beta_bar must be > 0")
    vals = f.values
    if np.any(vals > 1.0 + 1e-12):
        raise ValueError("profile values exceed 1")
    q = beta / beta_bar
    base = np.clip(1.0 - vals, 0.0, None)
    with np.errstate(divide="ignore"):
        fb = np.where(base > 0, -np.expm1(q * np.log(np.where(base > 0, base, 1.0))), 1.0)
    if q == 1.0:
        fb = vals
    rep = check_positive_definite(SampledFunction(fb, f.L, f.dimension), tol)
    note = "" if q <= 1.0 else "beta > beta_bar: result is informative only"
    return CheckReport("BetaFamily", rep.passed, dict(rep.witness, beta=beta, beta_bar=beta_bar, ratio=q), note)


def _growth_sup(p: PairPotential, lo: float, hi: float, points: int) -> tuple[float, float]:
    r = np.geomspace(lo, hi, points)
    dirs = _directions(p.dimension)[: max(2, p.dimension)]
    vals = p(r[:, None, None] * dirs[None, :, :]) + 2.0 * np.log(r)[:, None]
    vals = np.max(vals, axis=1)
    j = int(np.argmax(vals))
    return float(vals[j]), float(r[j])


def growth_at_origin(p: PairPotential, eps_range: tuple[float, float] = (1e-4, 1e-1), points: int = 400,
                     tol: float = 0.1) -> CheckReport:
    """Sup of ``phi(x) + 2 log|x|`` over ``|x|`` in ``eps_range`` (log grid).

    Finiteness is judged by stability: the sup must not move by more than
    ``tol`` when the grid is doubled or the range extended two decades toward 0.
    """
    lo, hi = eps_range
    if not (0 < lo < hi < 1):
        raise ValueError("eps_range must lie in (0, 1)")
    sup, at = _growth_sup(p, lo, hi, points)
    refined, _ = _growth_sup(p, lo, hi, 2 * points)
    extended, _ = _growth_sup(p, lo * 1e-2, hi, 2 * points)
    drift = max(abs(refined - sup), extended - sup)
    finite = math.isfinite(sup) and drift <= tol
    return CheckReport("GrowthAtOrigin", bool(finite),
                       {"sup": sup, "argsup": at, "refined_sup": refined, "extended_sup": extended,
                        "drift": drift, "finite": bool(finite)})


def ht_bound(phi1: PairPotential, phi2: PairPotential, rho1_sup: float, points: int = 201,
             radius: float | None = None, epsabs: float = 1e-10) -> float:
    """High-temperature coercivity constant ``1 - rho1_sup * int exp(-phi2)|1 - exp(-phi1)| dx``.

    ``radius`` defaults to the cutoff of ``phi1`` (the integrand vanishes
    beyond it). In one dimension the integral is adaptive; in higher
    dimensions a midpoint rule with ``points`` nodes per axis is used.
    """
    if rho1_sup < 0:
        raise ValueError("rho1_sup must be >= 0")
    if phi1.is_zero:
        return 1.0
    if not math.isfinite(phi1.lower_bound):
        raise ValueError("phi1 must be bounded below")
    Rc = radius if radius is not None else phi1.cutoff_radius
    if not math.isfinite(Rc) or Rc <= 0:
        raise ValueError("cannot integrate: phi1 has no finite cutoff; pass radius=")

    def integrand(x):
        return float(phi2.boltzmann(x) * np.abs(phi1.mayer(x)))

    d = phi1.dimension
    if d == 1:
        bps = sorted({b for b in phi1.breakpoints() + phi2.breakpoints() if 0 < b < Rc})
        val, err = integrate.quad(integrand, 0.0, Rc, points=bps or None, limit=500, epsabs=epsabs)
        if not math.isfinite(val) or err > max(1e-6, 1e-6 * abs(val)):
            raise ValueError(f"integral did not converge (estimate {val}, error {err})")
        total = 2.0 * val
    else:
        h = 2.0 * Rc / points
        axis = -Rc + h * (np.arange(points) + 0.5)
        pts = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1)
        inside = np.sum(pts ** 2, axis=-1) <= Rc ** 2
        vals = phi2.boltzmann(pts) * np.abs(phi1.mayer(pts)) * inside
        total = float(np.sum(vals) * h ** d)
        if not math.isfinite(total):
            raise ValueError("integral did not converge")
    return 1.0 - rho1_sup * total


def profile_samples(profile, L: float, n: int, images: int = 0) -> SampledFunction:
    """Sample a closed-form profile on the check grid."""
    return SampledFunction.from_callable(lambda x: profile(x), L, n, profile.dimension, images)


__all__ = [
    "CheckReport", "check_positive_definite", "check_regularity", "check_stability_numeric",
    "beta_family_check", "growth_at_origin", "ht_bound", "grid_spectrum", "quadratic_form_minimum",
    "configuration_energy", "profile_samples", "as_points",
]
