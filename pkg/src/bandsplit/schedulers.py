"""Per-packet band selection policies.

One scheduler instance serves one flow.  All policies share the same
surface: ``next_band()`` picks a band for the next packet,
``update_feedback()`` refreshes the measured band statistics (and, for
the optimizing policies, the target split), ``update_availability()``
swaps the usable-band mask.  A masked band is never returned.

Policy names as they appear in config files:

    single_band      everything on one fixed band
    even_split       round-robin over the available bands
    load_balancing   keep assigned counts proportional to service rates
    band_per_flow    pin the whole flow to one band (round-robin by flow)
    minimum_delay    sample each packet's band at the optimal fractions
    leaky_bucket     token algorithm; buckets fill toward the optimal
                     split and the fullest bucket at or above one token
                     sends and is debited
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AllBandsUnavailable,
    ConfigInvalid,
    NoAvailableBand,
    OptimizerError,
    OptimizerFailure,
)
from .model import BandStats
from .optimizer import OptimizerConfig, optimize

KINDS = (
    "single_band",
    "even_split",
    "load_balancing",
    "band_per_flow",
    "minimum_delay",
    "leaky_bucket",
)

# Token comparisons use >= 1 - TOKEN_EPS so float dust on the increments
# cannot stall a bucket that is analytically full.
TOKEN_EPS = 1e-12


@dataclass(frozen=True)
class SchedulerSpec:
    """Parsed scheduler selection from a config file."""

    kind: str
    band: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigInvalid(f"unknown scheduler kind {self.kind!r}")
        if self.kind == "single_band" and self.band is None:
            raise ConfigInvalid("single_band needs a 'band' index")

    @property
    def name(self) -> str:
        return f"{self.kind}:{self.band}" if self.kind == "single_band" else self.kind

    @staticmethod
    def parse(obj, where: str = "scheduler") -> "SchedulerSpec":
        if isinstance(obj, str):
            if ":" in obj:
                kind, _, idx = obj.partition(":")
                try:
                    return SchedulerSpec(kind=kind, band=int(idx))
                except ValueError as exc:
                    raise ConfigInvalid(f"{where}: bad band index in {obj!r}") from exc
            return SchedulerSpec(kind=obj)
        if isinstance(obj, dict):
            kind = obj.get("kind")
            band = obj.get("band")
            return SchedulerSpec(kind=kind, band=None if band is None else int(band))
        raise ConfigInvalid(f"{where}: expected a name or an object, got {type(obj).__name__}")


@dataclass(frozen=True)
class AvailabilityMask:
    """Per-flow usable-band flags; at least one band must stay usable."""

    bits: tuple[bool, ...]

    def __post_init__(self) -> None:
        if not any(self.bits):
            raise AllBandsUnavailable("mask has no usable band")

    def indices(self) -> list[int]:
        return [j for j, b in enumerate(self.bits) if b]


def update_availability(mask: AvailabilityMask, bits: Sequence[bool]) -> AvailabilityMask:
    """Replace a mask, rejecting an all-false update."""
    if len(bits) != len(mask.bits):
        raise ConfigInvalid(
            f"mask length {len(bits)} does not match band count {len(mask.bits)}"
        )
    return AvailabilityMask(tuple(bool(b) for b in bits))


@dataclass
class TokenState:
    """Leaky-bucket state: per-band tokens and per-round increments."""

    tokens: list[float]
    increments: list[float]


class Scheduler:
    """Shared plumbing for all policies."""

    kind = "base"

    def __init__(self, num_bands: int, stats: Sequence[BandStats], mask: AvailabilityMask | None):
        if num_bands < 1:
            raise ConfigInvalid("need at least one band")
        if len(stats) != num_bands:
            raise ConfigInvalid("stats length does not match band count")
        self.num_bands = num_bands
        self.stats = list(stats)
        self.mask = mask or AvailabilityMask((True,) * num_bands)
        if len(self.mask.bits) != num_bands:
            raise ConfigInvalid("mask length does not match band count")

    def available(self) -> list[int]:
        idx = self.mask.indices()
        if not idx:
            raise NoAvailableBand("all bands masked")
        return idx

    def next_band(self) -> int:
        raise NotImplementedError

    def update_feedback(self, stats: Sequence[BandStats], lambda_total: float) -> None:
        if len(stats) != self.num_bands:
            raise ConfigInvalid("stats length does not match band count")
        self.stats = list(stats)

    def update_availability(self, bits: Sequence[bool]) -> None:
        self.mask = update_availability(self.mask, bits)


class SingleBand(Scheduler):
    kind = "single_band"

    def __init__(self, num_bands, stats, mask, band: int):
        super().__init__(num_bands, stats, mask)
        if not 0 <= band < num_bands:
            raise ConfigInvalid(f"single_band index {band} out of range")
        self.band = band

    def next_band(self) -> int:
        if not self.mask.bits[self.band]:
            raise NoAvailableBand(f"band {self.band} is masked")
        return self.band


class EvenSplit(Scheduler):
    kind = "even_split"

    def __init__(self, num_bands, stats, mask):
        super().__init__(num_bands, stats, mask)
        self._ptr = 0

    def next_band(self) -> int:
        for k in range(self.num_bands):
            j = (self._ptr + k) % self.num_bands
            if self.mask.bits[j]:
                self._ptr = (j + 1) % self.num_bands
                return j
        raise NoAvailableBand("all bands masked")


class LoadBalancing(Scheduler):
    """Assign so counts track service rates: pick argmin assigned_j / mu_j.

    Counts restart whenever the rate snapshot changes; otherwise a small
    drift in the measured rates would trigger a catch-up burst sized like
    the whole history.
    """

    kind = "load_balancing"

    def __init__(self, num_bands, stats, mask):
        super().__init__(num_bands, stats, mask)
        self.counts = [0] * num_bands

    def update_feedback(self, stats, lambda_total: float) -> None:
        super().update_feedback(stats, lambda_total)
        self.counts = [0] * self.num_bands

    def next_band(self) -> int:
        best = None
        best_load = math.inf
        for j in self.available():
            load = self.counts[j] / self.stats[j].mu
            if load < best_load:
                best, best_load = j, load
        self.counts[best] += 1
        return best


class BandPerFlow(Scheduler):
    """Whole flow pinned to one band; flows pick pins round-robin."""

    kind = "band_per_flow"

    def __init__(self, num_bands, stats, mask, flow_index: int):
        super().__init__(num_bands, stats, mask)
        avail = self.available()
        self.band = avail[flow_index % len(avail)]

    def next_band(self) -> int:
        if not self.mask.bits[self.band]:
            # Pinned band lost: re-pin to the first usable one and stay there.
            self.band = self.available()[0]
        return self.band


class _OptimizingScheduler(Scheduler):
    """Shared optimizer plumbing for minimum_delay and leaky_bucket.

    Solves over the available subset only; masked bands carry a zero
    target rate.  A failed re-solve keeps the previous split and
    re-raises, so callers can continue on stale-but-safe targets.
    """

    def __init__(self, num_bands, stats, mask, lambda_total: float, opt_cfg: OptimizerConfig | None):
        super().__init__(num_bands, stats, mask)
        self.lambda_total = float(lambda_total)
        self.opt_cfg = opt_cfg or OptimizerConfig()
        self.lambda_star: list[float] | None = None
        self._resolve()
        if self.lambda_star is None:
            raise OptimizerFailure("initial rate split failed")

    def _solve_subset(self) -> list[float]:
        avail = self.available()
        sub = [self.stats[j] for j in avail]
        sol = optimize(self.lambda_total, sub, self.opt_cfg)
        full = [0.0] * self.num_bands
        for j, lam in zip(avail, sol.alloc.lambdas):
            full[j] = lam
        return full

    def _resolve(self) -> None:
        self.lambda_star = self._solve_subset()
        self._on_new_split()

    def _on_new_split(self) -> None:
        raise NotImplementedError

    def update_feedback(self, stats: Sequence[BandStats], lambda_total: float) -> None:
        super().update_feedback(stats, lambda_total)
        self.lambda_total = float(lambda_total)
        try:
            self._resolve()
        except OptimizerError:
            raise

    def update_availability(self, bits: Sequence[bool]) -> None:
        super().update_availability(bits)
        self._resolve()


class MinimumDelay(_OptimizingScheduler):
    """Assign each packet to a band with probability equal to the optimal
    split fraction, from a seeded stream.

    Probabilistic splitting keeps every band's arrival process Poisson,
    which is exactly the regime the per-band delay model assumes; the
    scheme looks at no packet identity and maintains the optimal ratio in
    expectation.  Runs stay reproducible because the stream is derived
    from the run seed.
    """

    kind = "minimum_delay"

    def __init__(self, num_bands, stats, mask, lambda_total, opt_cfg, rng: np.random.Generator):
        self._rng = rng
        super().__init__(num_bands, stats, mask, lambda_total, opt_cfg)

    def _on_new_split(self) -> None:
        total = sum(self.lambda_star)
        self.fractions = [lam / total for lam in self.lambda_star]
        self.counts = [0] * self.num_bands

    def next_band(self) -> int:
        avail = self.available()
        u = self._rng.random()
        acc = 0.0
        pick = avail[-1]
        for j in avail:
            acc += self.fractions[j]
            if u < acc:
                pick = j
                break
        self.counts[pick] += 1
        return pick


class LeakyBucket(_OptimizingScheduler):
    """Token algorithm: per-band buckets fill each round, the fullest
    bucket at or above one token sends and is debited one token.

    Rounds add every band's increment simultaneously until some bucket
    reaches one token; the round loop is advanced in closed form
    (identical token values, no per-round iteration).

    The per-round credit is the target rate over a single reference
    service rate (the fastest available band): R_j = lam_j* / mu_ref.
    With equal service rates this is exactly the target-over-own-rate
    credit, and for any rates the long-run send fraction of band j is
    R_j / sum(R) = lam_j*/lam, i.e. the bucket realizes the optimal
    split.  Normalizing by the band's own rate instead would skew the
    fractions to lam_j*/mu_j whenever the rates differ.
    """

    kind = "leaky_bucket"

    def _on_new_split(self) -> None:
        if not hasattr(self, "token_state"):
            self.token_state = TokenState(
                tokens=[0.0] * self.num_bands, increments=[0.0] * self.num_bands
            )
        mu_ref = max(self.stats[j].mu for j in self.available())
        self.token_state.increments = [lam / mu_ref for lam in self.lambda_star]

    def next_band(self) -> int:
        avail = self.available()
        tokens = self.token_state.tokens
        incr = self.token_state.increments
        if not any(tokens[j] >= 1.0 - TOKEN_EPS for j in avail):
            rounds = None
            for j in avail:
                r = incr[j]
                if r > 0.0:
                    need = math.ceil((1.0 - TOKEN_EPS - tokens[j]) / r)
                    need = max(need, 1)
                    rounds = need if rounds is None else min(rounds, need)
            if rounds is None:
                raise OptimizerFailure("all token increments are zero")
            for j in avail:
                tokens[j] += rounds * incr[j]
        best = avail[0]
        for j in avail[1:]:
            if tokens[j] > tokens[best]:
                best = j
        tokens[best] -= 1.0
        return best


def make_scheduler(
    spec: SchedulerSpec,
    *,
    num_bands: int,
    stats: Sequence[BandStats],
    lambda_total: float,
    flow_index: int = 0,
    mask: AvailabilityMask | None = None,
    opt_cfg: OptimizerConfig | None = None,
    rng: np.random.Generator | None = None,
) -> Scheduler:
    if spec.kind == "single_band":
        return SingleBand(num_bands, stats, mask, band=spec.band)
    if spec.kind == "even_split":
        return EvenSplit(num_bands, stats, mask)
    if spec.kind == "load_balancing":
        return LoadBalancing(num_bands, stats, mask)
    if spec.kind == "band_per_flow":
        return BandPerFlow(num_bands, stats, mask, flow_index=flow_index)
    if spec.kind == "minimum_delay":
        if rng is None:
            rng = np.random.default_rng(0)
        return MinimumDelay(num_bands, stats, mask, lambda_total, opt_cfg, rng)
    if spec.kind == "leaky_bucket":
        return LeakyBucket(num_bands, stats, mask, lambda_total, opt_cfg)
    raise ConfigInvalid(f"unknown scheduler kind {spec.kind!r}")
