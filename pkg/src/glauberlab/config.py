"""INI experiment configuration shared by the command-line tools.

Example::

    [potential]
    kind = special          # zero | explicit | special | sampled | table | sum
    family = exp
    modulation = cos
    params = t=1.0, a=3.0

    [box]
    L = 8
    dimension = 1

    [model]
    z = 1.0
    beta = 1.0

    [lattice]
    m = 8
    K = 1

A ``sum`` potential lists its parts in ``components = a, b`` and describes each
in a section ``[potential.a]``, ``[potential.b]`` with the same keys.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .potentials import PairPotential, Profile, SampledFunction, explicit, make_special_class, sum_of, zero
from .potentials.table import TABLE_1D, TABLE_DD, TableEntry


class ConfigError(ValueError):
    pass


def _parse_params(text: str) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in text.replace(";", ",").split(","))):
        if "=" not in item:
            raise ConfigError(f"parameter {item!r} is not of the form name=value")
        k, v = (s.strip() for s in item.split("=", 1))
        vals = v.split()
        try:
            out[k] = float(vals[0]) if len(vals) == 1 else [float(x) for x in vals]
        except ValueError as exc:
            raise ConfigError(f"parameter {k!r}: {v!r} is not numeric") from exc
    return out


@dataclass
class PotentialConfig:
    kind: str = "zero"
    family: str = ""
    modulation: str = "none"
    dimension: int = 1
    params: dict = field(default_factory=dict)
    file: str = ""
    table: str = ""
    cutoff: float | None = None
    periodize: bool = True
    images: int = 1
    grid_L: float = 40.0
    grid_n: int = 4096
    grid_images: int = 0
    role: str = ""  # "phi1" / "phi2" inside a sum (inferred if empty)
    components: list = field(default_factory=list)


@dataclass
class ExperimentConfig:
    potential: PotentialConfig
    L: float = 8.0
    dimension: int = 1
    z: float = 1.0
    beta: float = 1.0
    grid_m: int = 6
    lattice_m: int = 8
    lattice_K: int = 1
    T: float = 100.0
    dt: float = 0.1
    burn_in: float = 10.0
    seed: int = 0
    replicas: int = 1
    events: int = 0
    mode: str = "continuum"
    checks: list = field(default_factory=lambda: ["pd"])
    tol_pd: float = 1e-8
    tol_identity: float = 1e-10
    tol_gnz: float = 1e-12
    tol_coercivity: float = 1e-11
    tol_product: float = 1e-12
    tol_gap: float = 1e-9
    beta_bar: float = 1.0
    betas: list = field(default_factory=lambda: [0.25, 0.5, 1.0])
    n_functions: int = 10
    n_points: int = 3
    output: str = "out"
    source: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("source", None)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


def _potential_section(cp: configparser.ConfigParser, name: str, dimension: int) -> PotentialConfig:
    s = cp[name]
    pc = PotentialConfig(
        kind=s.get("kind", "zero").strip(),
        family=s.get("family", "").strip(),
        modulation=s.get("modulation", "none").strip(),
        dimension=s.getint("dimension", dimension),
        params=_parse_params(s.get("params", "")),
        file=s.get("file", "").strip(),
        table=s.get("table", "").strip(),
        cutoff=s.getfloat("cutoff") if "cutoff" in s else None,
        periodize=s.getboolean("periodize", True),
        images=s.getint("images", 1),
        grid_L=s.getfloat("grid_L", 40.0),
        grid_n=s.getint("grid_n", 4096 if dimension == 1 else 64),
        grid_images=s.getint("grid_images", 0),
        role=s.get("role", "").strip(),
    )
    if pc.kind not in ("zero", "explicit", "special", "sampled", "table", "sum"):
        raise ConfigError(f"[{name}] unknown kind {pc.kind!r}")
    if pc.kind == "sum":
        names = [c.strip() for c in s.get("components", "").split(",") if c.strip()]
        if not names:
            raise ConfigError(f"[{name}] a sum needs 'components'")
        for c in names:
            sec = f"{name}.{c}"
            if sec not in cp:
                raise ConfigError(f"missing section [{sec}]")
            pc.components.append(_potential_section(cp, sec, dimension))
    return pc


def load_config(path: str | Path) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    try:
        return _from_parser(cp, str(path))
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _from_parser(cp: configparser.ConfigParser, source: str) -> ExperimentConfig:
    box = cp["box"] if "box" in cp else {}
    d = int(box.get("dimension", 1))
    if "potential" not in cp:
        raise ConfigError("missing [potential] section")
    cfg = ExperimentConfig(potential=_potential_section(cp, "potential", d), source=source)
    cfg.dimension = d
    cfg.L = float(box.get("L", cfg.L))
    if "model" in cp:
        cfg.z = cp["model"].getfloat("z", cfg.z)
        cfg.beta = cp["model"].getfloat("beta", cfg.beta)
    if "grid" in cp:
        cfg.grid_m = cp["grid"].getint("m", cfg.grid_m)
    if "lattice" in cp:
        cfg.lattice_m = cp["lattice"].getint("m", cfg.lattice_m)
        cfg.lattice_K = cp["lattice"].getint("K", cfg.lattice_K)
    if "dynamics" in cp:
        s = cp["dynamics"]
        cfg.T = s.getfloat("T", cfg.T)
        cfg.dt = s.getfloat("dt", cfg.dt)
        cfg.burn_in = s.getfloat("burn_in", cfg.burn_in)
        cfg.seed = s.getint("seed", cfg.seed)
        cfg.replicas = s.getint("replicas", cfg.replicas)
        cfg.events = s.getint("events", cfg.events)
        cfg.mode = s.get("mode", cfg.mode).strip()
    if "checks" in cp:
        s = cp["checks"]
        cfg.checks = [c.strip() for c in s.get("checks", ",".join(cfg.checks)).split(",") if c.strip()]
        for name in ("tol_pd", "tol_identity", "tol_gnz", "tol_coercivity", "tol_product", "tol_gap", "beta_bar"):
            setattr(cfg, name, s.getfloat(name, getattr(cfg, name)))
        if "betas" in s:
            cfg.betas = [float(x) for x in s["betas"].replace(",", " ").split()]
    if "identities" in cp:
        s = cp["identities"]
        cfg.n_functions = s.getint("n_functions", cfg.n_functions)
        cfg.n_points = s.getint("n_points", cfg.n_points)
    if "output" in cp:
        cfg.output = cp["output"].get("dir", cfg.output)
    validate(cfg)
    return cfg


KNOWN_CHECKS = ("pd", "regularity", "growth", "beta", "stability")


def validate(cfg: ExperimentConfig) -> None:
    if not (cfg.L > 0 and math.isfinite(cfg.L)):
        raise ConfigError("box L must be positive")
    if not (cfg.z > 0 and cfg.beta > 0):
        raise ConfigError("z and beta must be positive")
    if cfg.mode not in ("continuum", "lattice"):
        raise ConfigError(f"unknown dynamics mode {cfg.mode!r}")
    for c in cfg.checks:
        if c not in KNOWN_CHECKS:
            raise ConfigError(f"unknown check {c!r}; expected {KNOWN_CHECKS}")
    for name in ("tol_pd", "tol_identity", "tol_gnz", "tol_coercivity", "tol_product", "tol_gap"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be > 0")
    if cfg.dt <= 0 or cfg.T <= 0:
        raise ConfigError("T and dt must be positive")
    pot = build_potential(cfg.potential, cfg.L)  # fails early on unknown families
    if pot.dimension != cfg.dimension:
        raise ConfigError(f"potential dimension {pot.dimension} differs from box dimension {cfg.dimension}")


def set_tolerance(cfg: ExperimentConfig, tol: float) -> None:
    for name in ("tol_pd", "tol_identity", "tol_gnz", "tol_coercivity", "tol_product", "tol_gap"):
        setattr(cfg, name, tol)


def table_entry(name: str) -> TableEntry:
    for e in TABLE_1D + TABLE_DD:
        if e.name == name:
            return e
    raise ConfigError(f"unknown table entry {name!r}")


def profile_of(pc: PotentialConfig) -> Profile | SampledFunction | None:
    if pc.kind == "special":
        try:
            return Profile(pc.family, pc.params, pc.dimension, pc.modulation)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
    if pc.kind == "table":
        return table_entry(pc.table).profile
    if pc.kind == "sampled":
        if not pc.file:
            raise ConfigError("a sampled potential needs 'file'")
        try:
            return SampledFunction.from_csv(pc.file)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read samples from {pc.file}: {exc}") from exc
    return None


def build_potential(pc: PotentialConfig, L: float | None = None) -> PairPotential:
    """Potential described by a config section, periodised on a box of side ``L`` if requested."""
    try:
        if pc.kind == "zero":
            pot = zero(pc.dimension)
        elif pc.kind == "explicit":
            pot = explicit(pc.family, pc.dimension, cutoff=pc.cutoff, **pc.params)
        elif pc.kind in ("special", "table", "sampled"):
            pot = make_special_class(profile_of(pc), cutoff=pc.cutoff)
        else:
            pot = sum_of(*(build_potential(c) for c in pc.components))
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"invalid potential: {exc}") from exc
    if L is not None and pc.periodize and pc.kind != "sum":
        pot = pot.periodized(L, pc.images)
    if L is not None and pc.kind == "sum":
        pot = sum_of(*(build_potential(c, L) for c in pc.components))
    return pot


def split_potential(pc: PotentialConfig, L: float | None = None) -> tuple[PairPotential, PairPotential]:
    """``(phi1, phi2)``: the general part and the special-class part."""
    d = pc.dimension
    if pc.kind == "sum":
        ones, twos = [], []
        for c in pc.components:
            role = c.role or ("phi2" if c.kind in ("special", "table", "sampled") else "phi1")
            (twos if role == "phi2" else ones).append(build_potential(c, L))
        phi1 = sum_of(*ones) if ones else zero(d)
        phi2 = sum_of(*twos) if twos else zero(d)
        return phi1, phi2
    pot = build_potential(pc, L)
    if pc.kind in ("special", "table", "sampled"):
        return zero(d), pot
    return pot, zero(d)
