"""Event-driven simulation of the birth-and-death dynamics and gap estimators.

Births use a piecewise-constant intensity on the cells of a :class:`Quadrature`:
a birth lands in cell ``k`` with rate ``v r(u_k, gamma)`` and is placed uniformly
inside the cell. Each particle dies at rate 1.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .configuration import Box, Configuration, GibbsSpec, boltzmann_rate
from .discrete import LatticeModel, symmetrized_generator
from .operators import Quadrature

BIRTH, DEATH = 0, 1


class SimulationOverflow(RuntimeError):
    pass


class InsufficientMixing(ValueError):
    pass


def record_format(d: int) -> struct.Struct:
    """Little-endian record: f64 time, u8 kind, d x f64 location, u32 count."""
    return struct.Struct(f"<dB{d}dI")


@dataclass
class EventLog:
    times: np.ndarray
    kinds: np.ndarray
    locations: np.ndarray
    counts: np.ndarray
    seed: int
    params: dict = field(default_factory=dict)
    initial: np.ndarray | None = None
    final_time: float = 0.0

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dimension(self) -> int:
        return self.locations.shape[1]

    def to_bytes(self) -> bytes:
        rec = record_format(self.dimension)
        out = bytearray()
        for t, k, x, c in zip(self.times, self.kinds, self.locations, self.counts):
            out += rec.pack(float(t), int(k), *map(float, x), int(c))
        return bytes(out)

    def write(self, path: str | Path) -> None:
        """Append records to ``path``; parameters go to ``path + '.json'``."""
        path = Path(path)
        with open(path, "ab") as fh:
            fh.write(self.to_bytes())
        meta = {"seed": self.seed, "dimension": self.dimension, "params": self.params,
                "final_time": self.final_time,
                "initial": None if self.initial is None else self.initial.tolist()}
        Path(str(path) + ".json").write_text(json.dumps(meta, indent=2))

    @classmethod
    def read(cls, path: str | Path, dimension: int | None = None) -> "EventLog":
        path = Path(path)
        meta_path = Path(str(path) + ".json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        d = dimension or meta.get("dimension", 1)
        rec = record_format(d)
        raw = path.read_bytes()
        if len(raw) % rec.size:
            raise ValueError("event file is truncated")
        rows = list(rec.iter_unpack(raw))
        times = np.array([r[0] for r in rows])
        kinds = np.array([r[1] for r in rows], dtype=np.uint8)
        locs = np.array([r[2:2 + d] for r in rows], dtype=float).reshape(-1, d)
        counts = np.array([r[-1] for r in rows], dtype=np.uint32)
        init = meta.get("initial")
        return cls(times, kinds, locs, counts, meta.get("seed", 0), meta.get("params", {}),
                   None if init is None else np.asarray(init, dtype=float).reshape(-1, d),
                   meta.get("final_time", float(times[-1]) if len(times) else 0.0))


class _RateField:
    """Energies ``E(u_k, gamma)`` at the cell centres, updated near each event."""

    def __init__(self, spec: GibbsSpec, b: Box, q: Quadrature):
        self.spec, self.b, self.q = spec, b, q
        self.nodes = q.nodes
        self.v = q.weight
        self.h = b.L / q.m
        M = len(self.nodes)
        self.finite = np.zeros(M)
        self.hard = np.zeros(M, dtype=np.int64)  # number of +inf contributions
        pot = spec.effective
        rc = pot.cutoff_radius
        self.local = pot.images == 0 and all(c.images == 0 for c in pot.components) and math.isfinite(rc) \
            and rc + self.h * math.sqrt(b.dimension) < 0.5 * b.L
        if self.local:
            reach = int(math.ceil(rc / self.h)) + 1
            offs = np.array(np.meshgrid(*([np.arange(-reach, reach + 1)] * b.dimension), indexing="ij"))
            self.offsets = offs.reshape(b.dimension, -1).T
        self.free = pot.is_zero

    def cells_near(self, x: np.ndarray) -> np.ndarray:
        if not self.local:
            return np.arange(len(self.nodes))
        m, d = self.q.m, self.b.dimension
        c = np.floor(x / self.h).astype(int)
        idx = np.mod(c[None, :] + self.offsets, m)
        flat = np.zeros(len(idx), dtype=np.int64)
        for k in range(d):
            flat = flat * m + idx[:, k]
        return np.unique(flat)

    def update(self, x: np.ndarray, sign: int) -> None:
        if self.free:
            return
        cells = self.cells_near(x)
        e = self.spec.pair_energy(self.b, self.b.displacement(x, self.nodes[cells]))
        inf = np.isposinf(e)
        self.hard[cells] += sign * inf.astype(np.int64)
        self.finite[cells] += sign * np.where(inf, 0.0, e)

    def rebuild(self, pts: np.ndarray) -> None:
        self.finite[:] = 0.0
        self.hard[:] = 0
        for x in pts:
            self.update(x, +1)

    def rates(self) -> np.ndarray:
        E = np.where(self.hard > 0, np.inf, self.finite)
        return self.v * boltzmann_rate(self.spec, E)


def simulate(spec: GibbsSpec, b: Box, q: Quadrature, T: float, seed: int,
             gamma0: Configuration | None = None, max_particles: int = 100_000,
             births: bool = True, refresh: int = 4096) -> EventLog:
    """Simulate up to time ``T``. ``births=False`` gives the pure-death process.

    The energy field is refreshed from scratch every ``refresh`` events to keep
    rounding drift of the incremental updates bounded.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    rng = np.random.default_rng(seed)
    d = b.dimension
    gamma0 = gamma0 if gamma0 is not None else Configuration(None, d)
    cap = max(16, 2 * len(gamma0))
    pts = np.zeros((cap, d))
    n = len(gamma0)
    pts[:n] = b.wrap(gamma0.points)
    field_ = _RateField(spec, b, q)
    field_.rebuild(pts[:n])
    rates = field_.rates() if births else np.zeros(len(q.nodes))
    h = b.L / q.m
    m = q.m
    times, kinds, locs, counts = [], [], [], []
    t = 0.0
    events = 0
    while True:
        B = float(rates.sum())
        if not math.isfinite(B):
            raise SimulationOverflow(f"birth rate overflow at t = {t:.6g} with {n} particles; "
                                     "attractive collapse")
        total = n + B
        if total <= 0:
            break
        t += rng.exponential(1.0 / total)
        if t > T:
            break
        if rng.random() * total < n:
            i = int(rng.integers(n))
            x = pts[i].copy()
            pts[i] = pts[n - 1]
            n -= 1
            kind = DEATH
            field_.update(x, -1)
        else:
            k = int(np.searchsorted(np.cumsum(rates), rng.random() * B, side="right"))
            k = min(k, len(rates) - 1)
            cell = np.array(np.unravel_index(k, (m,) * d), dtype=float)
            x = (cell + rng.random(d)) * h
            if n == cap:
                cap *= 2
                pts = np.vstack([pts, np.zeros((cap - n, d))])
            pts[n] = x
            n += 1
            kind = BIRTH
            if n > max_particles:
                raise SimulationOverflow(f"particle count exceeded {max_particles} at t = {t:.6g}; "
                                         f"total birth rate {B:.6g} suggests collapse")
            field_.update(x, +1)
        events += 1
        if events % refresh == 0:
            field_.rebuild(pts[:n])
        if births:
            rates = field_.rates()
        times.append(t), kinds.append(kind), locs.append(x), counts.append(n)
    params = {"z": spec.z, "beta": spec.beta, "potential": spec.potential.describe(), "L": b.L,
              "dimension": d, "m": q.m, "T": T, "births": births}
    return EventLog(np.array(times), np.array(kinds, dtype=np.uint8), np.array(locs).reshape(-1, d),
                    np.array(counts, dtype=np.uint32), seed, params,
                    np.array(gamma0.points), float(T))


def replay(log: EventLog, times: np.ndarray) -> Iterator[Configuration]:
    """Configurations at the requested (increasing) times."""
    d = log.dimension
    pts = [tuple(p) for p in (log.initial if log.initial is not None else np.zeros((0, d)))]
    j = 0
    for t in np.asarray(times, dtype=float):
        while j < len(log) and log.times[j] <= t:
            x = tuple(log.locations[j])
            if log.kinds[j] == BIRTH:
                pts.append(x)
            else:
                pts.remove(x)
            j += 1
        yield Configuration(np.array(pts).reshape(-1, d), d)


# series ----------------------------------------------------------------


@dataclass
class ObservableSeries:
    times: np.ndarray
    values: np.ndarray
    name: str = "count"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.values) < 2:
            raise ValueError("a series needs at least two samples")
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")

    @property
    def dt(self) -> float:
        dt = float(self.times[1] - self.times[0])
        if not dt > 0:
            raise ValueError("sampling interval must be positive")
        return dt

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", self.name])
            for t, x in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(float(x))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "ObservableSeries":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        name = rows[0][1]
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        return cls(data[:, 0], data[:, 1], name)


def count_series(log: EventLog, dt: float, burn_in: float = 0.0) -> ObservableSeries:
    """Particle number sampled every ``dt`` after ``burn_in``."""
    times = np.arange(burn_in, log.final_time, dt)
    n0 = 0 if log.initial is None else len(log.initial)
    idx = np.searchsorted(log.times, times, side="right")
    counts = np.concatenate([[n0], log.counts.astype(float)])
    return ObservableSeries(times, counts[idx], "count")


def observable_series(log: EventLog, F: Callable[[Configuration], float], dt: float,
                      burn_in: float = 0.0, name: str = "F") -> ObservableSeries:
    times = np.arange(burn_in, log.final_time, dt)
    return ObservableSeries(times, np.array([F(g) for g in replay(log, times)]), name)


# lattice chain -------------------------------------------------------


@dataclass
class LatticeTrajectory:
    jump_times: np.ndarray  # time of each jump
    states: np.ndarray  # state index after each jump; states[0] is the initial state at time 0
    final_time: float

    def sample(self, values: np.ndarray, dt: float, burn_in: float = 0.0, name: str = "f") -> ObservableSeries:
        """``values[state]`` sampled every ``dt``."""
        times = np.arange(burn_in, self.final_time, dt)
        idx = np.searchsorted(self.jump_times, times, side="right")
        return ObservableSeries(times, np.asarray(values, dtype=float)[self.states[idx]], name)


def simulate_lattice(model: LatticeModel, seed: int, n_events: int | None = None, T: float | None = None,
                     initial: int | None = None) -> LatticeTrajectory:
    """Gillespie simulation of the exact lattice chain (stops at ``n_events`` or time ``T``)."""
    if n_events is None and T is None:
        raise ValueError("give n_events or T")
    rng = np.random.default_rng(seed)
    S, N = model.n_states, model.n_cells
    # per state: targets and cumulative rates of the 2N moves
    targets = np.concatenate([model.up[:S], model.down[:S]], axis=1)
    rates = np.concatenate([model.birth[:S], model.states.astype(float)], axis=1)
    rates = np.where(targets < S, rates, 0.0)
    cum = np.cumsum(rates, axis=1)
    total = cum[:, -1]
    if initial is None:
        initial = int(rng.choice(S, p=model.weights))
    limit = n_events if n_events is not None else np.iinfo(np.int64).max
    t_end = T if T is not None else math.inf
    jt, st = [], [initial]
    s, t = initial, 0.0
    block = 65536
    k = 0
    while k < limit:
        e = rng.standard_exponential(block)
        u = rng.random(block)
        for j in range(min(block, limit - k)):
            tot = total[s]
            if tot <= 0:
                k = limit
                break
            t += e[j] / tot
            if t > t_end:
                k = limit
                break
            move = int(np.searchsorted(cum[s], u[j] * tot, side="right"))
            s = int(targets[s, min(move, 2 * N - 1)])
            jt.append(t)
            st.append(s)
            k += 1
    final = t if T is None else T
    return LatticeTrajectory(np.array(jt), np.array(st, dtype=np.int64), float(final))


def gap_eigenfunction(model: LatticeModel) -> tuple[float, np.ndarray]:
    """Slowest non-constant eigenfunction of the chain (on all states; zero off the support)."""
    from scipy import linalg as la
    M, keep = symmetrized_generator(model)
    evals, vecs = la.eigh(M.toarray())
    k = 1
    w = model.weights[keep]
    f = np.zeros(model.n_states)
    f[keep] = vecs[:, k] / np.sqrt(w)
    return float(evals[k]), f


# estimators ------------------------------------------------------------


def autocovariance(x: np.ndarray, max_lag: int) -> np.ndarray:
    x = np.asarray(x, dtype=float) - np.mean(x)
    n = len(x)
    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    fx = np.fft.rfft(x, nfft)
    ac = np.fft.irfft(fx * np.conj(fx), nfft)[: max_lag + 1]
    return ac / (n - np.arange(max_lag + 1))


@dataclass
class GapEstimate:
    rate: float
    ci: tuple[float, float]
    lag_window: tuple[float, float]
    resolution_limited: bool = False

    def to_dict(self) -> dict:
        return {"rate": self.rate, "ci": list(self.ci), "lag_window": list(self.lag_window),
                "resolution_limited": self.resolution_limited}


def _fit_rate(x: np.ndarray, dt: float, lo: int, hi: int) -> float:
    c = autocovariance(x, hi)
    lags = np.arange(lo, hi + 1)
    vals = c[lo: hi + 1]
    ok = vals > 0
    if ok.sum() < 2:
        raise InsufficientMixing("insufficient mixing or trend: autocovariance not positive on the window")
    slope = np.polyfit(lags[ok] * dt, np.log(vals[ok]), 1)[0]
    return -float(slope)


def estimate_gap_autocorrelation(series: ObservableSeries, lag_window: tuple[float, float] | None = None,
                                 blocks: int = 10, level: float = 0.95) -> GapEstimate:
    """Exponential decay rate of the autocovariance, with a delete-one-block jackknife interval.

    The default window runs from one step to the lag where the normalised
    autocovariance first drops below 0.2.
    """
    x = series.values
    dt = series.dt
    n = len(x)
    if np.var(x) == 0:
        raise InsufficientMixing("insufficient mixing or trend: constant series")
    max_lag = max(2, n // 20)
    c = autocovariance(x, max_lag)
    rho = c / c[0]
    if lag_window is None:
        if rho[1] < math.exp(-1.0):
            return GapEstimate(1.0 / dt, (1.0 / dt, math.inf), (dt, dt), resolution_limited=True)
        below = np.nonzero(rho < 0.2)[0]
        if len(below) == 0:
            raise InsufficientMixing("insufficient mixing or trend: autocovariance does not decay")
        lo, hi = 1, max(2, int(below[0]))
    else:
        lo = max(1, int(round(lag_window[0] / dt)))
        hi = max(lo + 1, int(round(lag_window[1] / dt)))
        if hi > max_lag:
            raise InsufficientMixing("lag window longer than the series supports")
    rate = _fit_rate(x, dt, lo, hi)
    if not rate > 0:
        raise InsufficientMixing("insufficient mixing or trend: fitted decay rate is not positive")
    # jackknife over contiguous blocks
    size = n // blocks
    reps = []
    for k in range(blocks):
        keep = np.concatenate([x[: k * size], x[(k + 1) * size:]])
        reps.append(_fit_rate(keep, dt, lo, hi))
    reps = np.asarray(reps)
    se = math.sqrt((blocks - 1) / blocks * np.sum((reps - reps.mean()) ** 2))
    from scipy.stats import norm
    zq = float(norm.ppf(0.5 + 0.5 * level))
    return GapEstimate(rate, (rate - zq * se, rate + zq * se), (lo * dt, hi * dt))


@dataclass
class RayleighEstimate:
    ratio: float
    stderr: float
    dirichlet: float
    variance: float


def rayleigh_upper_bound(spec: GibbsSpec, b: Box, q: Quadrature, F: Callable[[Configuration], float],
                         samples: list[Configuration], blocks: int = 10) -> RayleighEstimate:
    """``E(F, F) / Var(F)`` from (approximately) stationary samples.

    ``E(F, F)`` is estimated as the mean of ``sum_u v r(u, gamma) (D_u^+ F)^2``.
    The standard error comes from a delete-one-block jackknife.
    """
    from .operators import _Ops
    ops = _Ops(spec, b, q)
    vals = np.array([F(g) for g in samples], dtype=float)
    energy = np.array([2.0 * ops.gamma_plus(F, F, g) for g in samples])
    var = float(np.var(vals, ddof=1)) if len(vals) > 1 else 0.0
    if var <= 1e-14 * (1.0 + float(np.mean(vals)) ** 2):
        raise ValueError("degenerate trial function: zero variance")
    ratio = float(np.mean(energy)) / var
    n = len(vals)
    size = max(1, n // blocks)
    reps = []
    for k in range(blocks):
        mask = np.ones(n, dtype=bool)
        mask[k * size:(k + 1) * size] = False
        if mask.sum() > 1:
            reps.append(np.mean(energy[mask]) / np.var(vals[mask], ddof=1))
    reps = np.asarray(reps)
    B = len(reps)
    se = math.sqrt((B - 1) / B * np.sum((reps - reps.mean()) ** 2)) if B > 1 else math.nan
    return RayleighEstimate(ratio, se, float(np.mean(energy)), var)


__all__ = [
    "EventLog", "ObservableSeries", "GapEstimate", "RayleighEstimate", "LatticeTrajectory",
    "SimulationOverflow", "InsufficientMixing", "simulate", "replay", "count_series", "observable_series",
    "simulate_lattice", "gap_eigenfunction", "autocovariance", "estimate_gap_autocorrelation",
    "rayleigh_upper_bound", "record_format",
]
