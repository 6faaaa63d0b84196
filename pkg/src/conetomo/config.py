"""Run configuration for the command-line driver.

A config is a JSON object with the fields of :class:`RunConfig`. Omitted
fields take the defaults below; ``grids`` and ``tolerances`` are merged
key by key over the geometry defaults.

Defaults (n=2)
--------------
convex : unit ball domain, lattice spacing 0.01, 64 outflow probes,
    section checks at 4 vertices on L=256 directions x 384 cosines.
planar : section checks at detector point 0 on L=1024 directions x 1536
    cosines; projective data on detector ``[-2, 2]`` with 65 points, slopes ``[-4, 4)`` with
    1024 points, ``h`` on ``t in [-2.5, 0]``, ``|p| <= 2.5`` at spacing
    ``pi / 64`` from 1024 views with detector step 0.0025.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields

from .cone import COMPTON_TOL, DEFAULT_TOL
from .phantom import ScalarField, support_box
from .planar import PLANAR_TOL

CORRUPTION_KINDS = ("multiplicative", "noise")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def default_phantom(geometry, n):
    if geometry == "planar":
        c = [0.0, 1.5] if n == 2 else [0.1, -0.1, 1.5]
        return [{"center": c, "radius": 0.5, "amplitude": 1.0}]
    c = [0.1, -0.05] if n == 2 else [0.1, -0.05, 0.05]
    return [{"center": c, "radius": 0.65, "amplitude": 1.0}]


def default_grids(geometry, n):
    if geometry == "convex":
        ring = [[0.5 * math.cos(t), 0.5 * math.sin(t)] for t in (0.2, 2.2, 4.2)]
        if n == 2:
            return {"domain_center": [0.0, 0.0], "domain_radius": 1.0, "spacing": 0.01,
                    "n_probe": 64, "L": 256, "n_s": 384, "s_max": 0.95, "M": 64,
                    "sst_vertices": [[0.0, 0.0]] + ring, "reconstruct_v": [1.0, 0.0]}
        return {"domain_center": [0.0, 0.0, 0.0], "domain_radius": 1.0, "spacing": 0.1,
                "n_probe": 64, "L": 24, "n_s": 96, "s_max": 0.95, "M": 64,
                "sst_vertices": [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]],
                "reconstruct_v": [1.0, 0.0, 0.0]}
    if n == 2:
        return {"a_max": 2.0, "n_a": 65, "p_max": 4.0, "n_p": 1024,
                "cone_points": [[0.0]], "L": 1024, "n_s": 1536,
                "s_max": 0.95, "M": 64, "t_min": -2.5, "t_max": 0.0, "h_p_max": 2.5,
                "sigma_max": 64.0, "n_theta": 1024, "ds": 0.0025, "m_max": 4,
                "support": "phantom", "x_range": [-1.0, 1.0], "xn_range": [0.5, 2.5],
                "n_out": 101}
    return {"a_max": 1.0, "n_a": 11, "p_max": 2.5, "n_p": 320,
            "cone_points": [[0.0, 0.0]], "L": 24, "n_s": 96, "s_max": 0.95, "M": 64,
            "m_max": 4}


def default_tolerances(geometry):
    return dict(DEFAULT_TOL) if geometry == "convex" else {**COMPTON_TOL, **PLANAR_TOL}


@dataclass
class RunConfig:
    geometry: str = "convex"
    n: int = 2
    k: int = 0
    phantom: list = None
    grids: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    corruption: dict = None
    out: str = "out"
    seed: int = 0
    threads: int = None

    def __post_init__(self):
        if self.geometry not in ("convex", "planar"):
            raise ConfigError("geometry", "must be 'convex' or 'planar'")
        if self.n not in (2, 3) or isinstance(self.n, bool):
            raise ConfigError("n", "must be 2 or 3")
        if self.k not in (0, 1, 2) or isinstance(self.k, bool):
            raise ConfigError("k", "must be 0, 1 or 2")
        if self.phantom is None:
            self.phantom = default_phantom(self.geometry, self.n)
        base = default_grids(self.geometry, self.n)
        unknown = sorted(set(self.grids) - set(base))
        if unknown:
            raise ConfigError(f"grids.{unknown[0]}", "unknown grid parameter")
        self.grids = {**base, **self.grids}
        tbase = default_tolerances(self.geometry)
        unknown = sorted(set(self.tolerances) - set(tbase))
        if unknown:
            raise ConfigError(f"tolerances.{unknown[0]}", "unknown tolerance")
        self.tolerances = {**tbase, **self.tolerances}
        for key, val in self.tolerances.items():
            if not isinstance(val, (int, float)) or val < 0:
                raise ConfigError(f"tolerances.{key}", "must be a non-negative number")
        if self.corruption is not None:
            kind = self.corruption.get("kind")
            if kind not in CORRUPTION_KINDS:
                raise ConfigError("corruption.kind", f"must be one of {CORRUPTION_KINDS}")
            amp = self.corruption.get("amplitude")
            if not isinstance(amp, (int, float)) or amp < 0:
                raise ConfigError("corruption.amplitude", "must be a non-negative number")
            self.corruption = {"kind": kind, "amplitude": float(amp),
                               "freq": float(self.corruption.get("freq", 3.0))}
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed", "must be an integer")
        if self.threads is not None and (not isinstance(self.threads, int)
                                         or self.threads < 1):
            raise ConfigError("threads", "must be a positive integer")
        self.phantom_field()

    def phantom_field(self):
        """The phantom as a :class:`ScalarField`."""
        try:
            terms = list(self.phantom)
            f = ScalarField(self.n, [t["center"] for t in terms],
                            [t["radius"] for t in terms],
                            [t.get("amplitude", 1.0) for t in terms])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("phantom", str(exc)) from None
        if self.geometry == "planar" and f.radii.size:
            try:
                support_box(f, planar=True)
            except ValueError as exc:
                raise ConfigError("phantom", str(exc)) from None
        return f

    def scaled_tolerances(self, scale):
        return {key: val * scale for key, val in self.tolerances.items()}

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(unknown[0], "unknown config field")
        return cls(**d)

    def to_json(self, portable=False):
        """Canonical JSON; ``portable`` drops ``out`` and ``threads``."""
        d = self.to_dict()
        if portable:
            d.pop("out")
            d.pop("threads")
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("config", "top level must be an object")
        return cls.from_dict(d)

    def digest(self):
        """SHA-256 of the canonical JSON form, excluding ``out`` and ``threads``."""
        return hashlib.sha256(self.to_json(portable=True).encode()).hexdigest()
