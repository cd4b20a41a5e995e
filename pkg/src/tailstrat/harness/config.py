"""Experiment configuration: a validated, TOML-round-trippable record.

The file layout is three tables:

    [benchmark]            [estimator]              [run]
    name = "four_branch"   kind = "tss"             n = 4000
    # extra keys become    p0 = 0.1                 trials = 100
    # factory params       m = 4                    seed = 42
                           allocation = "..."       output = "out/fb"
                           scheme = "mcs"           workers = 1
                           null_stratum = "..."

Every field is validated on construction, before any performance
function is touched, and ``from_toml_str(to_toml_str(cfg))`` is the
identity.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ExperimentConfig", "to_toml_str"]

ESTIMATORS = ("tss", "tss_unbiased", "sus", "mcs")
ALLOCATIONS = ("proportional", "equal", "neyman", "general")
SCHEMES = ("mcs", "lhs")
NULL_STRATA = ("design_point", "predicate", "none")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: R independent trials of an estimator on a benchmark.

    ``n`` is the per-trial sample budget; for the subset-simulation
    baseline it is the per-level population size instead (total
    evaluations then depend on how many levels the run needs). ``p0``
    doubles as the SuS level fraction, the same quantity in both methods.

    ``r0`` pins the design-point ball to an explicitly known reliability
    index and skips the numerical search. Performance functions with
    jumps can hide their critical region from any evaluation-driven
    search, so when the index is known from the problem geometry this is
    the way to supply it.
    """

    benchmark: str
    estimator: str = "tss"
    n: int = 4000
    trials: int = 100
    seed: int = 0
    benchmark_params: Mapping[str, object] = field(default_factory=dict)
    p0: float = 0.1
    m: int = 4
    allocation: str = "proportional"
    gammas: tuple[float, ...] | None = None
    pf_guesses: tuple[float, ...] | None = None
    scheme: str = "mcs"
    null_stratum: str = "design_point"
    r0: float | None = None
    n_probe: int = 1_000_000
    dp_starts: int = 8
    max_levels: int = 20
    output: str | None = None
    workers: int | None = None

    def __post_init__(self):
        if not self.benchmark:
            raise ValueError("benchmark name is required")
        _require(self.estimator, ESTIMATORS, "estimator")
        _require(self.allocation, ALLOCATIONS, "allocation")
        _require(self.scheme, SCHEMES, "scheme")
        _require(self.null_stratum, NULL_STRATA, "null_stratum")
        if not 0.0 < self.p0 < 1.0:
            raise ValueError(f"p0 must lie in (0, 1), got {self.p0}")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.n_probe < 1:
            raise ValueError("n_probe must be positive")
        if self.dp_starts < 1:
            raise ValueError("dp_starts must be positive")
        if self.max_levels < 1:
            raise ValueError("max_levels must be positive")
        if self.workers is not None and self.workers < 1:
            raise ValueError("workers must be positive when given")
        if self.allocation == "general":
            if self.gammas is None or len(self.gammas) != self.m:
                raise ValueError("general allocation needs exactly m gammas")
        if self.pf_guesses is not None and len(self.pf_guesses) != self.m:
            raise ValueError("pf_guesses must have one entry per stratum")
        if self.null_stratum == "predicate" and self.scheme == "lhs":
            raise ValueError(
                "a predicate null stratum samples its pool by rejection, "
                "which has no Latin hypercube variant; use scheme='mcs'")
        if self.r0 is not None:
            if self.null_stratum != "design_point":
                raise ValueError(
                    "r0 gives the design-point ball an explicit radius and "
                    "only makes sense with null_stratum='design_point'")
            if not self.r0 > 0.0:
                raise ValueError(f"r0 must be positive when given, got {self.r0}")

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        bench: dict = {"name": self.benchmark}
        bench.update({k: self.benchmark_params[k]
                      for k in sorted(self.benchmark_params)})
        est: dict = {
            "kind": self.estimator,
            "p0": self.p0,
            "m": self.m,
            "allocation": self.allocation,
            "scheme": self.scheme,
            "null_stratum": self.null_stratum,
            "n_probe": self.n_probe,
            "dp_starts": self.dp_starts,
            "max_levels": self.max_levels,
        }
        if self.r0 is not None:
            est["r0"] = self.r0
        if self.gammas is not None:
            est["gammas"] = list(self.gammas)
        if self.pf_guesses is not None:
            est["pf_guesses"] = list(self.pf_guesses)
        run: dict = {"n": self.n, "trials": self.trials, "seed": self.seed}
        if self.output is not None:
            run["output"] = self.output
        if self.workers is not None:
            run["workers"] = self.workers
        return {"benchmark": bench, "estimator": est, "run": run}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        data = dict(data)
        bench = dict(data.pop("benchmark", {}) or {})
        est = dict(data.pop("estimator", {}) or {})
        run = dict(data.pop("run", {}) or {})
        if data:
            raise ValueError(f"unknown config tables: {sorted(data)}")
        name = bench.pop("name", None)
        if name is None:
            raise ValueError("[benchmark] needs a name")
        kw: dict = {"benchmark": str(name), "benchmark_params": bench}
        kind = est.pop("kind", None)
        if kind is not None:
            kw["estimator"] = kind
        for key in ("p0", "m", "allocation", "scheme", "null_stratum",
                    "n_probe", "dp_starts", "max_levels"):
            if key in est:
                kw[key] = est.pop(key)
        if "r0" in est:
            kw["r0"] = float(est.pop("r0"))
        if "gammas" in est:
            kw["gammas"] = tuple(float(v) for v in est.pop("gammas"))
        if "pf_guesses" in est:
            kw["pf_guesses"] = tuple(float(v) for v in est.pop("pf_guesses"))
        if est:
            raise ValueError(f"unknown [estimator] keys: {sorted(est)}")
        for key in ("n", "trials", "seed", "output", "workers"):
            if key in run:
                kw[key] = run.pop(key)
        if run:
            raise ValueError(f"unknown [run] keys: {sorted(run)}")
        return cls(**kw)

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_toml_str(self) -> str:
        return to_toml_str(self.to_dict())

    @classmethod
    def from_toml_str(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(tomllib.loads(text))

    @classmethod
    def from_toml(cls, path) -> "ExperimentConfig":
        return cls.from_toml_str(Path(path).read_text())


def _require(value: str, allowed: tuple[str, ...], what: str) -> None:
    if value not in allowed:
        raise ValueError(f"{what} must be one of {allowed}, got {value!r}")


# -- minimal TOML emitter ---------------------------------------------------
# Only the subset this config uses: string/bool/int/float/list scalars inside
# named tables. Floats print via repr, which round-trips exactly.

_BARE = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-")


def _emit_key(key: str) -> str:
    if key and set(key) <= _BARE:
        return key
    return '"' + key.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _emit_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("non-finite floats are not valid config values")
        return repr(value)
    if isinstance(value, str):
        escaped = (value.replace("\\", "\\\\").replace('"', '\\"')
                   .replace("\n", "\\n").replace("\t", "\\t"))
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_emit_value(v) for v in value) + "]"
    raise TypeError(f"cannot emit {type(value).__name__} as TOML")


def to_toml_str(tables: Mapping[str, Mapping]) -> str:
    lines: list[str] = []
    for tname, table in tables.items():
        lines.append(f"[{_emit_key(tname)}]")
        for key, value in table.items():
            lines.append(f"{_emit_key(key)} = {_emit_value(value)}")
        lines.append("")
    return "\n".join(lines)
