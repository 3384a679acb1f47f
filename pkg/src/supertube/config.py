"""Run configuration: one JSON document per run."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .core import PhysicalParams, as_lattice
from .errors import ConfigError, InvalidParams
from .potential import PotentialSpec

DEFAULTS = {
    "physical": {"hbar": 1.0, "m": 1.0, "L1": 20.0, "L2": 1.0, "N": 1000},
    "potential": {"shape": "tophat", "A": 40.0, "a": 0.5},
    "lattice_cutoff": 8,
    "longitudinal_cutoff": 0,
    "mode": "limit",
    "tolerance": {"quadrature": 1e-10, "eigen": 1e-10, "resonance": 1e-3},
    "flow": [0, 0, 0],
    "k2": [0, 1, 0],
    "resonance": {"v_max": None, "cutoff": 16},
    "oracle": {
        "N": 8,
        "L1": 1.0,
        "L2": 1.0,
        "modes": [[0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]],
        "coupling_fraction": 0.1,
        "density": "N",
    },
}


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        path = f"{where}{key}"
        if key not in base:
            raise ConfigError(f"{path}: unknown field")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{path}: expected an object")
            out[key] = _merge(base[key], val, path + ".")
        else:
            out[key] = val
    return out


def _int_triple(val, path):
    if not (isinstance(val, list) and len(val) == 3 and all(isinstance(c, int) and not isinstance(c, bool) for c in val)):
        raise ConfigError(f"{path}: expected a list of three integers")
    return as_lattice(val)


@dataclass
class RunConfig:
    raw: dict

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("top level: expected a JSON object")
        cfg = cls(_merge(DEFAULTS, doc))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        return cls.from_dict(doc)

    @classmethod
    def default(cls) -> "RunConfig":
        return cls.from_dict({})

    def validate(self):
        r = self.raw
        try:
            self.physical
        except (InvalidParams, TypeError) as exc:
            raise ConfigError(f"physical: {exc}") from exc
        try:
            self.potential
        except ValueError as exc:
            raise ConfigError(f"potential: {exc}") from exc
        for name in ("lattice_cutoff",):
            if not (isinstance(r[name], int) and r[name] >= 1):
                raise ConfigError(f"{name}: must be an integer >= 1")
        if not (isinstance(r["longitudinal_cutoff"], int) and r["longitudinal_cutoff"] >= 0):
            raise ConfigError("longitudinal_cutoff: must be an integer >= 0")
        if r["mode"] not in ("limit", "finiteN"):
            raise ConfigError("mode: must be 'limit' or 'finiteN'")
        for key, val in r["tolerance"].items():
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"tolerance.{key}: expected a number")
        for key in ("quadrature", "eigen"):
            if not r["tolerance"][key] > 0:
                raise ConfigError(f"tolerance.{key}: must be positive")
        # 0 selects exact resonance on integer keys
        if not 0 <= r["tolerance"]["resonance"] < 1:
            raise ConfigError("tolerance.resonance: must lie in [0, 1)")
        _int_triple(r["flow"], "flow")
        k2 = _int_triple(r["k2"], "k2")
        if not k2.is_transverse:
            raise ConfigError("k2: must be transverse (n1 = 0)")
        flow = as_lattice(r["flow"])
        if not flow.is_longitudinal:
            raise ConfigError("flow: must be longitudinal (n2 = n3 = 0)")
        vmax = r["resonance"]["v_max"]
        if vmax is not None and not (isinstance(vmax, (int, float)) and vmax > 0):
            raise ConfigError("resonance.v_max: must be positive or null")
        if not (isinstance(r["resonance"]["cutoff"], int) and r["resonance"]["cutoff"] >= 1):
            raise ConfigError("resonance.cutoff: must be an integer >= 1")
        o = r["oracle"]
        if not isinstance(o["modes"], list) or not o["modes"]:
            raise ConfigError("oracle.modes: expected a non-empty list")
        for i, k in enumerate(o["modes"]):
            _int_triple(k, f"oracle.modes[{i}]")
        if o["density"] not in ("N", "N-1"):
            raise ConfigError("oracle.density: must be 'N' or 'N-1'")
        if o["coupling_fraction"] is not None and not (
            isinstance(o["coupling_fraction"], (int, float)) and o["coupling_fraction"] >= 0
        ):
            raise ConfigError("oracle.coupling_fraction: must be >= 0 or null")

    @property
    def physical(self) -> PhysicalParams:
        ph = self.raw["physical"]
        return PhysicalParams(hbar=ph["hbar"], m=ph["m"], L1=ph["L1"], L2=ph["L2"], N=ph["N"])

    @property
    def potential(self) -> PotentialSpec:
        po = self.raw["potential"]
        return PotentialSpec(shape=po["shape"], A=po["A"], a=po["a"])

    @property
    def cutoff(self) -> int:
        return self.raw["lattice_cutoff"]

    @property
    def longitudinal_cutoff(self) -> int:
        return self.raw["longitudinal_cutoff"]

    def with_overrides(self, **kw) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        raw.update({k: v for k, v in kw.items() if v is not None})
        return RunConfig.from_dict(raw)

    def canonical(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]
