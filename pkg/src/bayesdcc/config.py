"""
Run configuration: a JSON-serialisable mirror of the estimation function's
arguments and control list.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from bayesdcc.distributions import FAMILY_CODES
from bayesdcc.errors import InvalidInputError
from bayesdcc.mcmc import SamplerConfig
from bayesdcc.model import ParamVector
from bayesdcc.priors import PriorSpec, default_priors

SCHEMA_VERSION = 1
INIT_KEYS = ("omega", "alpha", "beta", "a", "b", "gamma", "tail")
FAMILY_TAGS = {v: k for k, v in FAMILY_CODES.items()}


@dataclass
class RunConfig:
    """Everything needed to reproduce a ``fit`` run.

    ``init`` and ``priors`` hold only the entries the user set; anything missing
    falls back to the package defaults. ``burn_in=None`` means 10% of ``n_sim``.
    """

    input_path: str = ""
    columns: Optional[list] = None
    error_dist: int = 2
    n_sim: int = 10000
    init: dict = field(default_factory=dict)
    priors: dict = field(default_factory=dict)
    sampler_mode: str = "auto"
    proposal_chol: Optional[list] = None
    proposal_sds: Optional[list] = None
    seed: int = 0
    burn_in: Optional[int] = None
    thin: int = 1
    out_dir: str = "bayesdcc_out"
    progress: bool = True
    max_lag: int = 50
    density_grid: int = 256
    max_draws: int = 200
    simulation: Optional[dict] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.error_dist not in FAMILY_CODES:
            raise InvalidInputError(f"error_dist must be 1, 2 or 3, got {self.error_dist!r}")
        if not self.input_path:
            raise InvalidInputError("input_path must be non-empty")
        if not self.out_dir:
            raise InvalidInputError("out_dir must be non-empty")
        if int(self.n_sim) < 1:
            raise InvalidInputError("n_sim must be at least 1")
        if self.thin < 1:
            raise InvalidInputError("thin must be at least 1")
        if self.burn_in is not None and not 0 <= self.burn_in < self.n_sim:
            raise InvalidInputError("burn_in must be in [0, n_sim)")
        unknown = set(self.init) - set(INIT_KEYS)
        if unknown:
            raise InvalidInputError(f"unknown initial-value keys: {sorted(unknown)}")

    @property
    def family(self) -> str:
        return FAMILY_CODES[self.error_dist]

    @property
    def effective_burn_in(self) -> int:
        return self.burn_in if self.burn_in is not None else self.n_sim // 10

    def build_init(self, k: int) -> ParamVector:
        base = ParamVector.default(k, self.family)
        vals = {
            "omega": base.omega, "alpha": base.alpha, "beta": base.beta,
            "a": base.a, "b": base.b, "gamma": base.gamma, "tail": base.tail,
        }
        for key, v in self.init.items():
            if v is None:
                continue
            if key in ("omega", "alpha", "beta", "gamma"):
                v = np.broadcast_to(np.asarray(v, dtype=float), (k,)).copy()
            vals[key] = v
        if base.tail is None:
            vals["tail"] = None
        if k == 1:
            vals["a"] = vals["b"] = 0.0
        params = ParamVector(family=self.family, **vals)
        params.validate()
        return params

    def build_priors(self, k: int) -> PriorSpec:
        return default_priors(k, self.family, **self.priors)

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(
            n_sim=int(self.n_sim),
            mode=self.sampler_mode,
            proposal_chol=None if self.proposal_chol is None else np.asarray(self.proposal_chol, dtype=float),
            proposal_sds=None if self.proposal_sds is None else np.asarray(self.proposal_sds, dtype=float),
            seed=int(self.seed),
            progress=bool(self.progress),
        )

    def to_dict(self) -> dict:
        d = {"schema_version": SCHEMA_VERSION}
        d.update(asdict(self))
        if d["simulation"] is None:
            d.pop("simulation")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        version = d.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise InvalidInputError(f"unsupported config schema_version {version}")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path
