"""Per-run metrics and their flat record form.

The CSV / JSON-lines record column order is fixed:

    scenario, scheduler, seed, delivered, goodput_pps, mean_latency_s,
    p95_latency_s, mean_reseq_delay_s, max_reseq_delay_s,
    out_of_order_frac, band_frac_0 .. band_frac_{M-1}

Extra diagnostic fields (generated counts, waiting/service split,
per-band transport delay) live on the report object only.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class MetricsReport:
    scenario: str
    scheduler: str
    seed: int
    generated: int
    delivered: int
    measured: int
    goodput_pps: float
    mean_latency_s: float
    p95_latency_s: float
    mean_reseq_delay_s: float
    max_reseq_delay_s: float
    out_of_order_frac: float
    per_band_frac: tuple[float, ...]
    per_band_mean_delay: tuple[float, ...]
    mean_wait_s: float
    mean_service_s: float
    queued_at_end: int
    in_flight_at_end: int

    def record(self) -> dict:
        """Flat record in the fixed output column order."""
        rec = {
            "scenario": self.scenario,
            "scheduler": self.scheduler,
            "seed": self.seed,
            "delivered": self.delivered,
            "goodput_pps": self.goodput_pps,
            "mean_latency_s": self.mean_latency_s,
            "p95_latency_s": self.p95_latency_s,
            "mean_reseq_delay_s": self.mean_reseq_delay_s,
            "max_reseq_delay_s": self.max_reseq_delay_s,
            "out_of_order_frac": self.out_of_order_frac,
        }
        for j, frac in enumerate(self.per_band_frac):
            rec[f"band_frac_{j}"] = frac
        return rec


def record_columns(num_bands: int) -> list[str]:
    cols = [
        "scenario",
        "scheduler",
        "seed",
        "delivered",
        "goodput_pps",
        "mean_latency_s",
        "p95_latency_s",
        "mean_reseq_delay_s",
        "max_reseq_delay_s",
        "out_of_order_frac",
    ]
    cols.extend(f"band_frac_{j}" for j in range(num_bands))
    return cols
