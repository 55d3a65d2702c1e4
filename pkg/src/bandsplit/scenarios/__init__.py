"""Bundled scenario configs.

two_band_asym      one station, two bands with a 1.75:1 service-rate
                   asymmetry, all seven schemes
two_band_high_rtt  the same link pair behind 100 ms of propagation delay
two_sta_mixed      two stations; one aggregates both bands, the other is
                   pinned to the slow band, aggregation schemes only
"""

from __future__ import annotations

from importlib import resources

from ..config import ScenarioConfig

_NAMES = ("two_band_asym", "two_band_high_rtt", "two_sta_mixed")


def names() -> tuple[str, ...]:
    return _NAMES


def load(name: str) -> ScenarioConfig:
    if name not in _NAMES:
        raise KeyError(f"unknown bundled scenario {name!r}; have {_NAMES}")
    text = resources.files(__package__).joinpath(f"{name}.json").read_text(encoding="utf-8")
    return ScenarioConfig.from_json(text)
