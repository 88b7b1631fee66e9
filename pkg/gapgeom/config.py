"""Shared defaults and run configuration.

- `DEFAULT_RANK_TOL` decides every dimension count in one place
- `SamplingPlan` carries budget, refinement steps and seed into the samplers
- `RunConfig` is what a CLI invocation resolves to (flags > env > defaults)
"""
import os
import zlib
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Tuple

from .errors import InputError

DEFAULT_RANK_TOL = 1e-9
DEFAULT_BUDGET = 2000
DEFAULT_REFINE_STEPS = 20
DEFAULT_SEED = 0
DEFAULT_SPLIT_A = 0.4
BISECTION_FLOOR = 1e-6
# slack used when a certified conclusion is compared with its bound
CONCLUSION_SLACK = 1e-9
SEED_ENV_VAR = "GAPS_SEED"
MAX_GENERATE_SIZE = 64


@dataclass(frozen=True)
class SamplingPlan:
    budget: int = DEFAULT_BUDGET
    refine_steps: int = DEFAULT_REFINE_STEPS
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.budget < 0 or self.refine_steps < 0:
            raise InputError("sampling budget and refinement steps must be nonnegative")

    def child(self, tag: str) -> "SamplingPlan":
        """Plan with a sub-seed derived from `tag`, so nested samplers never share streams."""
        sub = zlib.crc32(f"{self.seed}:{tag}".encode("utf-8"))
        return replace(self, seed=sub)

    def rng(self):
        import numpy as np

        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: Tuple[str, ...] = ()
    seed: int = DEFAULT_SEED
    budget: int = DEFAULT_BUDGET
    refine_steps: int = DEFAULT_REFINE_STEPS
    rank_tol: float = DEFAULT_RANK_TOL
    out: Optional[str] = None
    ledger: Optional[str] = None
    options: Mapping[str, object] = field(default_factory=dict)

    @property
    def plan(self) -> SamplingPlan:
        return SamplingPlan(budget=self.budget, refine_steps=self.refine_steps, seed=self.seed)

    @classmethod
    def from_args(cls, args, environ: Optional[Mapping[str, str]] = None) -> "RunConfig":
        """Resolve a parsed argparse namespace.

        Precedence is flag, then the GAPS_SEED environment variable (seed only),
        then the module defaults.
        """
        environ = os.environ if environ is None else environ
        seed = getattr(args, "seed", None)
        if seed is None:
            raw = environ.get(SEED_ENV_VAR)
            if raw is not None and raw.strip():
                try:
                    seed = int(raw.strip(), 0)
                except ValueError:
                    raise InputError(f"{SEED_ENV_VAR}={raw!r} is not an integer")
            else:
                seed = DEFAULT_SEED
        if not 0 <= seed < 2 ** 64:
            raise InputError(f"seed {seed} is outside the 64-bit range")

        budget = getattr(args, "budget", None)
        refine = getattr(args, "refine", None)
        rank_tol = getattr(args, "rank_tol", None)
        if rank_tol is not None and not rank_tol > 0:
            raise InputError("--rank-tol must be positive")
        inputs = tuple(
            str(v) for k in ("space", "path", "q", "r", "k")
            if (v := getattr(args, k, None)) is not None
        )
        return cls(
            command=getattr(args, "cmd", "") or "",
            inputs=inputs,
            seed=int(seed),
            budget=DEFAULT_BUDGET if budget is None else int(budget),
            refine_steps=DEFAULT_REFINE_STEPS if refine is None else int(refine),
            rank_tol=DEFAULT_RANK_TOL if rank_tol is None else float(rank_tol),
            out=getattr(args, "out", None),
            ledger=getattr(args, "ledger", None),
        )
