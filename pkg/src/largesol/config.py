"""Experiment configuration, canonical serialization and artifact writing."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

from .analysis import DEFAULT_LADDER
from .bounds import PotentialSpec
from .errors import LabError
from .geometry import DomainSpec, Interval
from .solver import SolverConfig


class ConfigError(LabError):
    """Malformed experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _number(data, key, path, default=None, kind=float):
    if key not in data:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing")
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {v!r}")
    if kind is int and v != int(v):
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {v!r}")
    return kind(v)


def _floats(data, key, path, default):
    if key not in data:
        return tuple(default)
    v = data[key]
    if not isinstance(v, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigError(f"{path}.{key}", "expected a list of numbers")
    return tuple(float(x) for x in v)


_SOLVER_INTS = ("max_iter", "n", "hardy_n")


def _solver_from(data: dict) -> SolverConfig:
    if not isinstance(data, dict):
        raise ConfigError("solver", "expected an object")
    base = SolverConfig()
    kw = {}
    for key, val in data.items():
        if key not in base.__dict__:
            raise ConfigError(f"solver.{key}", "unknown setting")
        if key in ("schedule", "probes"):
            kw[key] = _floats(data, key, "solver", ())
        elif key == "data_policy":
            if not isinstance(val, str):
                raise ConfigError("solver.data_policy", "expected a string")
            kw[key] = val
        else:
            kw[key] = _number(data, key, "solver", kind=int if key in _SOLVER_INTS else float)
    try:
        return SolverConfig(**kw)
    except LabError as exc:
        raise ConfigError("solver", str(exc)) from None


@dataclass
class ExperimentConfig:
    """Everything a run needs; serializes canonically and hashes stably.

    ``params`` carries subcommand-specific entries (family descriptors,
    borderline amplitudes, Lambert sample grids, input profile paths).
    """

    domain: DomainSpec = field(default_factory=lambda: Interval(0.0, 1.0))
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    schedules: tuple = ()
    ladder: tuple = DEFAULT_LADDER
    out: str = "runs"
    seed: int = 0
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        pot = {"mu": self.potential.mu}
        if self.potential.beta is not None:
            pot["beta"] = self.potential.beta
        return {"domain": self.domain.to_dict(), "potential": pot,
                "solver": self.solver.to_dict(),
                "schedules": [list(s) for s in self.schedules],
                "ladder": list(self.ladder), "out": self.out, "seed": self.seed,
                "params": self.params}

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    @property
    def hash(self) -> str:
        """sha256 of the canonical form without ``out``, which only says where to write."""
        d = self.to_dict()
        del d["out"]
        return digest(canonical_json(d))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "expected a JSON object")
        known = {"domain", "potential", "solver", "schedules", "ladder", "out", "seed",
                 "params"}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field")
        cfg = cls()
        if "domain" in data:
            d = data["domain"]
            if not isinstance(d, dict):
                raise ConfigError("domain", "expected an object")
            try:
                cfg.domain = DomainSpec.from_dict(d)
            except LabError as exc:
                raise ConfigError("domain", str(exc)) from None
        if "potential" in data:
            p = data["potential"]
            if not isinstance(p, dict):
                raise ConfigError("potential", "expected an object")
            mu = _number(p, "mu", "potential", default=0.0)
            beta = p.get("beta")
            if beta is not None:
                beta = _number(p, "beta", "potential")
            cfg.potential = PotentialSpec(mu, beta)
        if "solver" in data:
            cfg.solver = _solver_from(data["solver"])
        if "schedules" in data:
            s = data["schedules"]
            if not isinstance(s, list):
                raise ConfigError("schedules", "expected a list of schedules")
            cfg.schedules = tuple(_floats({"s": x}, "s", f"schedules[{i}]", ())
                                  for i, x in enumerate(s))
        cfg.ladder = _floats(data, "ladder", "<root>", cfg.ladder)
        if "out" in data:
            if not isinstance(data["out"], str):
                raise ConfigError("out", "expected a path string")
            cfg.out = data["out"]
        cfg.seed = _number(data, "seed", "<root>", default=0, kind=int)
        if "params" in data:
            if not isinstance(data["params"], dict):
                raise ConfigError("params", "expected an object")
            cfg.params = data["params"]
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}", exc.msg) from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def atomic_write(path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
