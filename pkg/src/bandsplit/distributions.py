"""Concrete service / vacation time distributions.

The queueing model only needs a mean and a second moment, but the
simulator needs actual draws.  Three shapes cover the test matrix:
deterministic (zero variance), exponential (memoryless), and lognormal
(heavy-ish tail with tunable spread).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid

KINDS = ("deterministic", "exponential", "lognormal")


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    mean: float = 0.0  # deterministic / exponential
    mu_log: float = 0.0  # lognormal
    sigma_log: float = 0.0  # lognormal

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigInvalid(f"unknown distribution kind {self.kind!r}")
        if self.kind == "lognormal":
            if self.sigma_log < 0:
                raise ConfigInvalid("lognormal sigma_log must be >= 0")
        elif not self.mean > 0:
            raise ConfigInvalid(f"{self.kind} mean must be > 0, got {self.mean}")

    def moments(self) -> tuple[float, float]:
        """Exact (mean, second moment)."""
        if self.kind == "deterministic":
            return self.mean, self.mean**2
        if self.kind == "exponential":
            return self.mean, 2.0 * self.mean**2
        m1 = math.exp(self.mu_log + 0.5 * self.sigma_log**2)
        m2 = math.exp(2.0 * self.mu_log + 2.0 * self.sigma_log**2)
        return m1, m2

    def to_dict(self) -> dict:
        if self.kind == "lognormal":
            return {"kind": self.kind, "mu_log": self.mu_log, "sigma_log": self.sigma_log}
        return {"kind": self.kind, "mean": self.mean}

    @staticmethod
    def from_dict(d: dict, where: str = "distribution") -> "DistributionSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigInvalid(f"{where}: expected an object with a 'kind' field")
        kind = d["kind"]
        try:
            if kind == "lognormal":
                return DistributionSpec(
                    kind=kind,
                    mu_log=float(d.get("mu_log", 0.0)),
                    sigma_log=float(d.get("sigma_log", 0.0)),
                )
            return DistributionSpec(kind=kind, mean=float(d.get("mean", 0.0)))
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"{where}: {exc}") from exc


class Sampler:
    """Chunked draws from one distribution, one RNG stream.

    Pre-drawing in blocks keeps the per-event cost down without changing
    the consumption order of the stream, so runs stay reproducible.
    """

    __slots__ = ("_spec", "_rng", "_chunk", "_buf", "_idx")

    def __init__(self, spec: DistributionSpec, rng: np.random.Generator, chunk: int = 4096):
        self._spec = spec
        self._rng = rng
        self._chunk = chunk
        self._buf: np.ndarray | None = None
        self._idx = 0

    def _refill(self) -> None:
        spec = self._spec
        if spec.kind == "deterministic":
            self._buf = np.full(self._chunk, spec.mean)
        elif spec.kind == "exponential":
            self._buf = self._rng.exponential(spec.mean, self._chunk)
        else:
            self._buf = self._rng.lognormal(spec.mu_log, spec.sigma_log, self._chunk)
        self._idx = 0

    def draw(self) -> float:
        if self._buf is None or self._idx >= self._chunk:
            self._refill()
        val = self._buf[self._idx]
        self._idx += 1
        return float(val)
