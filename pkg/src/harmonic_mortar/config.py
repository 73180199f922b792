"""JSON run configuration.

All physical quantities are SI.  Harmonic scalings ``c`` may be numbers or
fraction strings such as ``"3/8"``.  A minimal file is ``{}``; every block
falls back to the defaults below.

Example::

    {
      "geometry": {"r_shaft": 0.02, "r_gamma": 0.0447, "r_outer": 0.0675},
      "discretization": {"n_theta": {"stator": 144, "rotor": 144},
                         "n_r": {"stator": null, "rotor": null},
                         "degrees": [1], "levels": [1, 2, 3, 4]},
      "multiplier": {"c": ["1/4", "1/3", "3/8", "1/2"], "N": null, "scope": "stator"},
      "sources": {"manufactured": false, "alpha": [0.0],
                  "stator": {"nu": 1.0, "js": [], "magnets": []},
                  "rotor": {"nu": 1.0, "js": [], "magnets": []}},
      "output": {"csv": null, "precision": 6}
    }

Source sectors are ``{"theta0": a, "theta1": b, "value": j}`` for currents and
``{"theta0": a, "theta1": b, "m": [m_r, m_theta]}`` for magnets, each with an
optional ``"r_range": [r_lo, r_hi]``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

from .geometry import ROTOR, STATOR, AnnulusGeometry
from .splines import SourceSpec, sector_field


class ConfigError(ValueError):
    pass


def _number(x, what: str) -> float:
    try:
        v = float(Fraction(x)) if isinstance(x, str) else float(x)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{what}: not a number: {x!r}") from exc
    if not math.isfinite(v):
        raise ConfigError(f"{what}: must be finite")
    return v


def _count(x, what: str, minimum: int) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < minimum:
        raise ConfigError(f"{what}: expected an integer >= {minimum}, got {x!r}")
    return x


@dataclass
class Sector:
    theta0: float
    theta1: float
    value: Optional[float] = None
    m: Optional[list] = None
    r_range: Optional[list] = None


@dataclass
class RingSources:
    nu: float = 1.0
    js: list = field(default_factory=list)
    magnets: list = field(default_factory=list)

    def to_source(self, nu_bounds=(1e-12, 1e15)) -> SourceSpec:
        js = m = None
        if self.js:
            js = _sum_fields([sector_field([s.theta0, s.theta1], [s.value], r_range=s.r_range)
                              for s in self.js], vector=False)
        if self.magnets:
            m = _sum_fields([sector_field([s.theta0, s.theta1], [s.m], polar=True, r_range=s.r_range)
                             for s in self.magnets], vector=True)
        return SourceSpec(js=js, m=m, nu=self.nu, nu_bounds=nu_bounds)


def _sum_fields(fields, vector: bool):
    def f(r, t):
        parts = [g(r, t) for g in fields]
        if vector:
            return sum(p[0] for p in parts), sum(p[1] for p in parts)
        return sum(parts)
    return f


@dataclass
class RunConfig:
    r_shaft: float = 0.02
    r_gamma: float = 0.0447
    r_outer: float = 0.0675
    n_theta: dict = field(default_factory=lambda: {STATOR: 144, ROTOR: 144})
    n_r: dict = field(default_factory=lambda: {STATOR: None, ROTOR: None})
    degrees: list = field(default_factory=lambda: [1])
    levels: list = field(default_factory=lambda: [1, 2, 3, 4])
    c: list = field(default_factory=lambda: [0.25, 1 / 3, 0.375, 0.5])
    N: Optional[list] = None
    scope: str = "stator"
    manufactured: bool = False
    alpha: list = field(default_factory=lambda: [0.0])
    sources: dict = field(default_factory=lambda: {STATOR: RingSources(), ROTOR: RingSources()})
    csv: Optional[str] = None
    precision: int = 6

    @property
    def geometry(self) -> AnnulusGeometry:
        return AnnulusGeometry(self.r_shaft, self.r_gamma, self.r_outer)

    def mesh_kwargs(self) -> dict:
        return {"base_n_theta": self.n_theta[STATOR], "base_n_r": self.n_r[STATOR],
                "rotor_n_theta": self.n_theta[ROTOR], "rotor_n_r": self.n_r[ROTOR]}

    def validate(self) -> "RunConfig":
        try:
            self.geometry
        except ValueError as exc:
            raise ConfigError(f"geometry: {exc}") from exc
        for ring in (STATOR, ROTOR):
            _count(self.n_theta[ring], f"n_theta.{ring}", 3)
            if self.n_r[ring] is not None:
                _count(self.n_r[ring], f"n_r.{ring}", 1)
        for k in self.degrees:
            _count(k, "degree", 1)
            if k + 1 > min(self.n_theta.values()):
                raise ConfigError(f"degree {k} needs at least {k + 1} angular spans")
        for lv in self.levels:
            _count(lv, "level", 1)
        for c in self.c:
            if not 0.0 <= c <= 1.0:
                raise ConfigError(f"harmonic scaling c must lie in [0, 1], got {c}")
        if self.N is not None:
            for n in self.N:
                _count(n, "N", 0)
        if self.scope not in ("stator", "full"):
            raise ConfigError(f"scope must be 'stator' or 'full', got {self.scope!r}")
        _count(self.precision, "precision", 1)
        for ring, rs in self.sources.items():
            if not (rs.nu > 0):
                raise ConfigError(f"sources.{ring}.nu must be positive")
            for s in rs.js + rs.magnets:
                if s.r_range is not None and (len(s.r_range) != 2 or s.r_range[0] > s.r_range[1]):
                    raise ConfigError(f"sources.{ring}: bad r_range {s.r_range}")
        return self

    # -- (de)serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        def ring(rs: RingSources):
            return {"nu": rs.nu,
                    "js": [{k: v for k, v in asdict(s).items() if k != "m" and v is not None}
                           for s in rs.js],
                    "magnets": [{k: v for k, v in asdict(s).items() if k != "value" and v is not None}
                                for s in rs.magnets]}
        return {
            "geometry": {"r_shaft": self.r_shaft, "r_gamma": self.r_gamma, "r_outer": self.r_outer},
            "discretization": {"n_theta": dict(self.n_theta), "n_r": dict(self.n_r),
                               "degrees": list(self.degrees), "levels": list(self.levels)},
            "multiplier": {"c": list(self.c), "N": None if self.N is None else list(self.N),
                           "scope": self.scope},
            "sources": {"manufactured": self.manufactured, "alpha": list(self.alpha),
                        STATOR: ring(self.sources[STATOR]), ROTOR: ring(self.sources[ROTOR])},
            "output": {"csv": self.csv, "precision": self.precision},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


_KNOWN = {
    "geometry": {"r_shaft", "r_gamma", "r_outer"},
    "discretization": {"n_theta", "n_r", "degrees", "degree", "levels"},
    "multiplier": {"c", "N", "scope"},
    "sources": {"manufactured", "alpha", STATOR, ROTOR},
    "output": {"csv", "precision"},
}


def _per_ring(value, what: str) -> dict:
    if isinstance(value, dict):
        unknown = set(value) - {STATOR, ROTOR}
        if unknown:
            raise ConfigError(f"{what}: unknown rings {sorted(unknown)}")
        return {STATOR: value.get(STATOR), ROTOR: value.get(ROTOR, value.get(STATOR))}
    return {STATOR: value, ROTOR: value}


def _sectors(items, ring: str, kind: str) -> list:
    out = []
    if not isinstance(items, list):
        raise ConfigError(f"sources.{ring}.{kind} must be a list")
    for s in items:
        if not isinstance(s, dict):
            raise ConfigError(f"sources.{ring}.{kind}: sector must be an object")
        t0 = _number(s.get("theta0"), f"sources.{ring}.{kind}.theta0")
        t1 = _number(s.get("theta1"), f"sources.{ring}.{kind}.theta1")
        if not t0 < t1 <= t0 + 2 * math.pi + 1e-12:
            raise ConfigError(f"sources.{ring}.{kind}: need theta0 < theta1 <= theta0 + 2 pi")
        rr = s.get("r_range")
        if rr is not None:
            rr = [_number(x, f"sources.{ring}.{kind}.r_range") for x in rr]
        if kind == "js":
            out.append(Sector(t0, t1, value=_number(s.get("value"), f"sources.{ring}.js.value"),
                              r_range=rr))
        else:
            m = s.get("m")
            if not isinstance(m, list) or len(m) != 2:
                raise ConfigError(f"sources.{ring}.magnets.m must be [m_r, m_theta]")
            out.append(Sector(t0, t1, m=[_number(x, "magnet m") for x in m], r_range=rr))
    return out


def parse_config(data: dict) -> RunConfig:
    """Build and validate a :class:`RunConfig` from decoded JSON."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(data) - set(_KNOWN)
    if unknown:
        raise ConfigError(f"unknown blocks {sorted(unknown)}")
    for block, keys in _KNOWN.items():
        sub = data.get(block, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"{block} must be an object")
        extra = set(sub) - keys
        if extra:
            raise ConfigError(f"{block}: unknown keys {sorted(extra)}")
    cfg = RunConfig()
    geo = data.get("geometry", {})
    for key in ("r_shaft", "r_gamma", "r_outer"):
        if key in geo:
            setattr(cfg, key, _number(geo[key], f"geometry.{key}"))
    disc = data.get("discretization", {})
    if "n_theta" in disc:
        cfg.n_theta = _per_ring(disc["n_theta"], "n_theta")
    if "n_r" in disc:
        cfg.n_r = _per_ring(disc["n_r"], "n_r")
    if "degree" in disc:
        cfg.degrees = [disc["degree"]]
    if "degrees" in disc:
        cfg.degrees = list(disc["degrees"])
    if "levels" in disc:
        cfg.levels = list(disc["levels"])
    mult = data.get("multiplier", {})
    if "c" in mult:
        cfg.c = [_number(c, "multiplier.c") for c in mult["c"]]
    if mult.get("N") is not None:
        cfg.N = list(mult["N"])
    cfg.scope = mult.get("scope", cfg.scope)
    src = data.get("sources", {})
    cfg.manufactured = bool(src.get("manufactured", False))
    if "alpha" in src:
        cfg.alpha = [_number(a, "sources.alpha") for a in src["alpha"]]
    for ring in (STATOR, ROTOR):
        rs = src.get(ring, {})
        if not isinstance(rs, dict):
            raise ConfigError(f"sources.{ring} must be an object")
        extra = set(rs) - {"nu", "js", "magnets"}
        if extra:
            raise ConfigError(f"sources.{ring}: unknown keys {sorted(extra)}")
        cfg.sources[ring] = RingSources(
            nu=_number(rs.get("nu", 1.0), f"sources.{ring}.nu"),
            js=_sectors(rs.get("js", []), ring, "js"),
            magnets=_sectors(rs.get("magnets", []), ring, "magnets"))
    out = data.get("output", {})
    cfg.csv = out.get("csv")
    cfg.precision = out.get("precision", cfg.precision)
    return cfg.validate()


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(data)


def magnet_demo(geom: AnnulusGeometry, poles: int = 6, m0: float = 8.0e5,
                depth: float = 0.004) -> dict:
    """Surface magnets: ``poles`` equal sectors of alternating radial magnetization."""
    edges = [2 * math.pi * i / poles for i in range(poles + 1)]
    band = [geom.r_gamma - depth, geom.r_gamma]
    mags = [{"theta0": edges[i], "theta1": edges[i + 1], "m": [m0 * (-1) ** i, 0.0],
             "r_range": band} for i in range(poles)]
    nu0 = 1.0 / (4e-7 * math.pi)
    return {"sources": {"stator": {"nu": nu0}, "rotor": {"nu": nu0, "magnets": mags}}}
