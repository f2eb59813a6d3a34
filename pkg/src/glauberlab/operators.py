"""Generator, carré du champ and its iterate on the torus, with a cell quadrature.

Every ``dx`` integral is replaced by a sum over the cell centres of one fixed
:class:`Quadrature`; sums over points of a configuration are exact. Because the
same quadrature is threaded through nested applications, algebraic identities
between these operators hold to rounding error.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .configuration import Box, Configuration, GibbsSpec, boltzmann_rate, local_energies

Functional = Callable[[Configuration], float]


@dataclass(frozen=True)
class Quadrature:
    """Cell centres of an ``m^d`` grid on the box, each carrying weight ``(L/m)^d``."""

    box: Box
    m: int

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("quadrature needs m >= 2 nodes per axis")

    @property
    def weight(self) -> float:
        return (self.box.L / self.m) ** self.box.dimension

    @property
    def nodes(self) -> np.ndarray:
        h = self.box.L / self.m
        axis = h * (np.arange(self.m) + 0.5)
        mesh = np.meshgrid(*([axis] * self.box.dimension), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.box.dimension)

    @property
    def size(self) -> int:
        return self.m ** self.box.dimension


class _Ops:
    """Memoised evaluation context for one ``(spec, box, quadrature)`` triple."""

    def __init__(self, spec: GibbsSpec, b: Box, q: Quadrature):
        if q.box != b:
            raise ValueError("quadrature was built for a different box")
        self.spec, self.b, self.q = spec, b, q
        self.nodes = q.nodes
        self.v = q.weight
        self._rates: dict[bytes, np.ndarray] = {}
        self._memo: dict[tuple[int, bytes], float] = {}
        self._alive: list = []

    def rates(self, g: Configuration) -> np.ndarray:
        """``v * r(u, gamma)`` at every node ``u``."""
        k = g.key()
        out = self._rates.get(k)
        if out is None:
            out = self.v * boltzmann_rate(self.spec, local_energies(self.spec, self.b, self.nodes, g))
            self._rates[k] = out
        return out

    def rate_at(self, u, g: Configuration) -> float:
        return float(boltzmann_rate(self.spec, local_energies(self.spec, self.b, u, g))[0])

    def memo(self, F: Functional) -> Functional:
        tag = id(F)

        def wrapped(g: Configuration) -> float:
            key = (tag, g.key())
            val = self._memo.get(key)
            if val is None:
                val = float(F(g))
                self._memo[key] = val
            return val

        self._alive.append(F)  # ids stay unique while the cache lives
        return wrapped

    # neighbours of a configuration ------------------------------------

    def births(self, g: Configuration) -> list[Configuration]:
        return [g.insert(u) for u in self.nodes]

    def deaths(self, g: Configuration) -> list[Configuration]:
        return [g.remove_index(i) for i in range(len(g))]

    # operators --------------------------------------------------------

    def L(self, F: Functional, g: Configuration) -> float:
        f0 = F(g)
        death = sum(F(h) - f0 for h in self.deaths(g))
        rates = self.rates(g)
        birth = sum(rk * (f0 - F(h)) for rk, h in zip(rates, self.births(g)))
        return death - birth

    def Lfun(self, F: Functional) -> Functional:
        return self.memo(lambda g: self.L(F, g))

    def gamma_minus(self, F: Functional, G: Functional, g: Configuration) -> float:
        f0, g0 = F(g), G(g)
        return 0.5 * sum((F(h) - f0) * (G(h) - g0) for h in self.deaths(g))

    def gamma_plus(self, F: Functional, G: Functional, g: Configuration) -> float:
        f0, g0 = F(g), G(g)
        rates = self.rates(g)
        return 0.5 * sum(rk * (f0 - F(h)) * (g0 - G(h)) for rk, h in zip(rates, self.births(g)))

    def gamma_def(self, F: Functional, G: Functional, g: Configuration) -> float:
        FG = self.memo(lambda c: F(c) * G(c))
        return 0.5 * (self.L(FG, g) - F(g) * self.L(G, g) - G(g) * self.L(F, g))

    def gamma_def_fun(self, F: Functional, G: Functional) -> Functional:
        return self.memo(lambda c: self.gamma_def(F, G, c))


def quadrature(b: Box, m: int) -> Quadrature:
    return Quadrature(b, m)


def _ctx(spec, b, q, *fs):
    ops = _Ops(spec, b, q)
    return (ops,) + tuple(ops.memo(f) for f in fs)


def apply_L(spec: GibbsSpec, b: Box, q: Quadrature, F: Functional, g: Configuration) -> float:
    """``(LF)(gamma) = sum_{x in gamma} D_x^- F - sum_u v r(u, gamma) D_u^+ F``."""
    ops, F = _ctx(spec, b, q, F)
    return ops.L(F, g)


def gamma_minus(spec, b, q, F: Functional, G: Functional, g: Configuration) -> float:
    ops, F, G = _ctx(spec, b, q, F, G)
    return ops.gamma_minus(F, G, g)


def gamma_plus(spec, b, q, F: Functional, G: Functional, g: Configuration) -> float:
    ops, F, G = _ctx(spec, b, q, F, G)
    return ops.gamma_plus(F, G, g)


def gamma(spec, b, q, F: Functional, G: Functional, g: Configuration) -> float:
    """Carré du champ via the death/birth split."""
    ops, F, G = _ctx(spec, b, q, F, G)
    return ops.gamma_minus(F, G, g) + ops.gamma_plus(F, G, g)


def gamma_by_definition(spec, b, q, F: Functional, G: Functional, g: Configuration) -> float:
    """``(L(FG) - F LG - G LF) / 2``, using only the generator."""
    ops, F, G = _ctx(spec, b, q, F, G)
    return ops.gamma_def(F, G, g)


def gamma2_definition(spec, b, q, F: Functional, g: Configuration) -> float:
    """``Gamma_2(F, F) = (L Gamma(F, F) - 2 Gamma(F, LF)) / 2`` built from ``L`` alone."""
    ops, F = _ctx(spec, b, q, F)
    return _gamma2_def(ops, F, g)


def _gamma2_def(ops: _Ops, F: Functional, g: Configuration) -> float:
    LF = ops.Lfun(F)
    GFF = ops.gamma_def_fun(F, F)
    return 0.5 * (ops.L(GFF, g) - 2.0 * ops.gamma_def(F, LF, g))


# closed-form representation -------------------------------------------


TERM_NAMES = ("half_gamma", "gamma_plus", "death_death", "birth_death", "death_rate_cross",
              "birth_birth", "birth_rate_cross")


@dataclass(frozen=True)
class Gamma2Report:
    """Pointwise ``Gamma_2(F, F)`` by definition and by the closed-form representation.

    ``terms`` holds the summands of the representation before the final
    rearrangement; ``rearranged_terms`` the two summands that change in the
    rearranged form (fourth-order birth term with ``r(y, gamma + delta_x)`` and
    the birth-rate cross term evaluated at ``gamma``).
    """

    value_by_definition: float
    value_by_formula: float
    value_rearranged: float
    residual: float
    relative_residual: float
    rearranged_residual: float
    terms: dict
    rearranged_terms: dict

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _gamma2_terms(ops: _Ops, F: Functional, g: Configuration) -> tuple[dict, dict]:
    nodes, v = ops.nodes, ops.v
    M, n = len(nodes), len(g)
    f0 = F(g)
    births = ops.births(g)
    deaths = ops.deaths(g)
    R = ops.rates(g)  # v r(u_k, gamma)
    Fb = np.array([F(h) for h in births])
    Dp = f0 - Fb  # D_k^+ F(gamma)
    Fd = np.array([F(h) for h in deaths])
    Dm = Fd - f0  # D_x^- F(gamma)

    g_minus = 0.5 * float(np.sum(Dm * Dm))
    g_plus = 0.5 * float(np.sum(R * Dp * Dp))
    terms = {"half_gamma": 0.5 * (g_minus + g_plus), "gamma_plus": g_plus}

    # D_x^- D_y^- F(gamma) over x in gamma, y in gamma - delta_x
    dd = 0.0
    for i in range(n):
        gi = deaths[i]
        for j in range(n):
            if j == i:
                continue
            # position of y in gamma - delta_x: same point, index shifts past i
            jj = j if j < i else j - 1
            gij = gi.remove_index(jj)
            d_y_at_gx = F(gij) - F(gi)
            dd += (d_y_at_gx - Dm[j]) ** 2
    terms["death_death"] = 0.25 * dd

    # D_u^+ D_y^- F(gamma) = D_y^- F(gamma) - D_y^- F(gamma + delta_u)
    bd = 0.0
    for j in range(n):
        y = g.points[j]
        for k in range(M):
            gk = births[k]
            d_y_at_gk = F(gk.remove(y)) - F(gk)
            bd += R[k] * (Dm[j] - d_y_at_gk) ** 2
    terms["birth_death"] = 0.5 * bd

    # death-rate cross term
    drc = 0.0
    for i in range(n):
        gi = deaths[i]
        Ri = ops.rates(gi)
        f_gi = F(gi)
        Dp_gi = np.array([f_gi - F(gi.insert(u)) for u in nodes])
        drc += float(np.sum((Ri - R) * (Dp_gi ** 2 + 2.0 * Dp_gi * Dm[i])))
    terms["death_rate_cross"] = 0.25 * drc

    # fourth-order birth term and birth-rate cross term
    bb = bb_shift = brc = brc_re = 0.0
    for k in range(M):
        gk = births[k]
        Rk = ops.rates(gk)  # v r(u_l, gamma + delta_{u_k})
        f_gk = Fb[k]
        Dp_gk = np.array([f_gk - F(gk.insert(u)) for u in nodes])  # D_l^+ F(gamma + delta_k)
        DDp = Dp - Dp_gk  # D_k^+ D_l^+ F(gamma)
        bb += R[k] * float(np.sum(R * DDp ** 2))
        bb_shift += R[k] * float(np.sum(Rk * DDp ** 2))
        dr = R - Rk  # v D_k^+ r(u_l)(gamma)
        brc += R[k] * float(np.sum(dr * (-Dp_gk ** 2 + 2.0 * Dp_gk * Dp[k])))
        brc_re += R[k] * float(np.sum(dr * (-Dp ** 2 + 2.0 * Dp * Dp[k])))
    terms["birth_birth"] = 0.25 * bb
    terms["birth_rate_cross"] = 0.25 * brc
    rearranged = {"birth_birth": 0.25 * bb_shift, "birth_rate_cross": 0.25 * brc_re}
    return terms, rearranged


def gamma2_formula(spec, b, q, F: Functional, g: Configuration) -> Gamma2Report:
    """Evaluate the closed-form ``Gamma_2`` term by term and compare with the definition."""
    ops, F = _ctx(spec, b, q, F)
    terms, rearranged = _gamma2_terms(ops, F, g)
    formula = math.fsum(terms.values())
    alt_terms = dict(terms, **rearranged)
    alt = math.fsum(alt_terms.values())
    definition = _gamma2_def(ops, F, g)
    scale = math.fsum(abs(t) for t in terms.values())
    residual = abs(definition - formula)
    rel = residual / scale if scale > 0 else residual
    alt_scale = math.fsum(abs(t) for t in alt_terms.values())
    alt_res = abs(definition - alt) / alt_scale if alt_scale > 0 else abs(definition - alt)
    return Gamma2Report(definition, formula, alt, residual, rel, alt_res, terms, rearranged)


# product rules ------------------------------------------------------------

NodeFamily = Callable[[np.ndarray, Configuration], float]


def product_rule_check(spec, b, q, H: NodeFamily, g: Configuration, x, x_minus=None) -> np.ndarray:
    """Residuals of the four difference-operator product rules.

    ``H(y, gamma)`` is a family indexed by a point ``y``. The birth rules use the
    point ``x``; the death rules use ``x_minus`` (default: the first point of
    ``gamma``), and are reported as 0 when ``gamma`` is empty.
    """
    ops = _Ops(spec, b, q)
    x = np.asarray(x, dtype=float).reshape(b.dimension)
    nodes = ops.nodes

    def S(c: Configuration) -> float:
        return math.fsum(H(y, c) for y in c.points)

    def I(c: Configuration) -> float:
        R = ops.rates(c)
        return math.fsum(R[k] * H(nodes[k], c) for k in range(len(nodes)))

    gx = g.insert(x)
    out = np.zeros(4)
    # D_x^+ sum_y H_y
    lhs = S(g) - S(gx)
    rhs = math.fsum(H(y, g) - H(y, gx) for y in g.points) - H(x, gx)
    out[0] = abs(lhs - rhs)
    # D_x^+ int r H
    lhs = I(g) - I(gx)
    R, Rx = ops.rates(g), ops.rates(gx)
    rhs = (math.fsum(R[k] * (H(nodes[k], g) - H(nodes[k], gx)) for k in range(len(nodes)))
           + math.fsum((R[k] - Rx[k]) * H(nodes[k], gx) for k in range(len(nodes))))
    out[2] = abs(lhs - rhs)
    if len(g):
        xm = g.points[0] if x_minus is None else np.asarray(x_minus, dtype=float).reshape(b.dimension)
        gm = g.remove(xm)
        # D_x^- sum_y H_y, the sum on the right running over gamma - delta_x
        lhs = S(gm) - S(g)
        rhs = math.fsum(H(y, gm) - H(y, g) for y in gm.points) - H(xm, g)
        out[1] = abs(lhs - rhs)
        # D_x^- int r H
        lhs = I(gm) - I(g)
        Rm = ops.rates(gm)
        rhs = (math.fsum(R[k] * (H(nodes[k], gm) - H(nodes[k], g)) for k in range(len(nodes)))
               + math.fsum((Rm[k] - R[k]) * H(nodes[k], gm) for k in range(len(nodes))))
        out[3] = abs(lhs - rhs)
    return out


def random_configuration(b: Box, n: int, rng: np.random.Generator) -> Configuration:
    return Configuration(rng.uniform(0.0, b.L, size=(n, b.dimension)), b.dimension)


__all__ = [
    "Quadrature", "Gamma2Report", "TERM_NAMES", "quadrature", "apply_L", "gamma", "gamma_minus", "gamma_plus",
    "gamma_by_definition", "gamma2_definition", "gamma2_formula", "product_rule_check", "random_configuration",
]
