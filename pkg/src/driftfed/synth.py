"""Synthetic flow-record generation with controllable family divergence.

Each attack family sits at a configurable mean in feature space; rows are
isotropic Gaussian draws around it, clipped to a bounded range so min-max
scaling is exercised. The default drift scenario mirrors the bundled
timeline roster (17 sub-attacks plus Benign, six categories) at desk scale
and places the MQTT and DDoS families farthest apart so cross-family
generalization is visibly asymmetric.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .pipeline import CATEGORIES, ColumnSpec, FlowRecord
from .seeds import rng_for

DEFAULT_CLIP = (0.0, 10.0)

# Timeline roster: every sub-attack kept after cleaning, by category.
ROSTER = {
    "Benign": ("Benign",),
    "MQTT": ("MQTT-Malformed_Data", "MQTT-DoS-Connect_Flood",
             "MQTT-DDoS-Publish_Flood", "MQTT-DDoS-Connect_Flood"),
    "DoS": ("TCP_IP-DoS-TCP", "TCP_IP-DoS-ICMP", "TCP_IP-DoS-SYN", "TCP_IP-DoS-UDP"),
    "DDoS": ("TCP_IP-DDoS-SYN", "TCP_IP-DDoS-ICMP", "TCP_IP-DDoS-UDP", "TCP_IP-DDoS-TCP"),
    "Recon": ("Recon-Ping_Sweep", "Recon-VulScan", "Recon-OS_Scan", "Recon-Port_Scan"),
    "Spoofing": ("ARP_Spoofing",),
}


@dataclass(frozen=True)
class FamilySpec:
    name: str
    category: str
    sub_attacks: tuple[str, ...]
    mean: np.ndarray
    scale: float
    rows_per_subattack: int


@dataclass(frozen=True)
class ScenarioSpec:
    num_features: int = 45
    families: tuple[FamilySpec, ...] = ()
    divergence: dict = field(default_factory=dict)  # (name, name) -> mean distance
    seed: int = 0
    clip: tuple[float, float] = DEFAULT_CLIP

    def validate(self) -> None:
        if self.num_features < 1:
            raise ConfigError("num_features must be positive")
        if not self.families:
            raise ConfigError("scenario needs at least one family")
        lo, hi = self.clip
        if not hi > lo:
            raise ConfigError("clip range must be non-empty")
        names = set()
        for fam in self.families:
            if fam.category not in CATEGORIES:
                raise ConfigError(f"unknown category {fam.category!r}")
            if fam.mean.shape != (self.num_features,):
                raise ConfigError(
                    f"family {fam.name!r}: mean length {fam.mean.shape} "
                    f"!= num_features {self.num_features}"
                )
            if fam.rows_per_subattack < 1:
                raise ConfigError(f"family {fam.name!r}: rows_per_subattack must be >= 1")
            if not fam.scale > 0:
                raise ConfigError(f"family {fam.name!r}: scale must be positive")
            if fam.name in names:
                raise ConfigError(f"duplicate family name {fam.name!r}")
            names.add(fam.name)
        by_name = {f.name: f for f in self.families}
        for (a, b), target in self.divergence.items():
            if a not in by_name or b not in by_name:
                raise ConfigError(f"divergence pair ({a!r}, {b!r}) names an unknown family")
            actual = float(np.linalg.norm(by_name[a].mean - by_name[b].mean))
            if abs(actual - target) > 0.1 * max(target, 1e-12):
                raise ConfigError(
                    f"divergence target for ({a}, {b}) is {target:.4g} "
                    f"but the means are {actual:.4g} apart"
                )


def generate(spec: ScenarioSpec) -> list[FlowRecord]:
    """Draw the full record list for a scenario; deterministic by spec.seed."""
    spec.validate()
    lo, hi = spec.clip
    records: list[FlowRecord] = []
    for fam in spec.families:
        for sub in fam.sub_attacks:
            rng = rng_for(spec.seed, "family", fam.name, "sub", sub)
            rows = rng.normal(fam.mean, fam.scale,
                              size=(fam.rows_per_subattack, spec.num_features))
            np.clip(rows, lo, hi, out=rows)
            records.extend(
                FlowRecord(rows[i], sub, fam.category, i)
                for i in range(fam.rows_per_subattack)
            )
    return records


def default_drift_scenario(seed: int, rows_per_subattack: int = 1200) -> ScenarioSpec:
    """Desk-scale scenario over the full timeline roster.

    Families occupy disjoint 8-feature blocks offset from a flat benign
    baseline. MQTT and DDoS share a block with opposite signs, making them
    the farthest-apart pair, so a detector fitted to one actively misreads
    the other. Benign gets four times the per-sub-attack row count (benign
    traffic dominates real captures), which also keeps each period's pool
    roughly label-balanced against a four-member attack family.
    """
    num_features = 45
    base = np.full(num_features, 5.0)
    offset = 2.5
    blocks = {"MQTT": (0, +offset), "DDoS": (0, -offset), "DoS": (8, +offset),
              "Recon": (16, +offset), "Spoofing": (24, +offset)}

    families = [FamilySpec("Benign", "Benign", ROSTER["Benign"], base.copy(),
                           0.8, 4 * rows_per_subattack)]
    for category in ("MQTT", "DoS", "DDoS", "Recon", "Spoofing"):
        start, delta = blocks[category]
        mean = base.copy()
        mean[start:start + 8] += delta
        families.append(FamilySpec(category, category, ROSTER[category], mean,
                                   0.8, rows_per_subattack))

    divergence = {("MQTT", "DDoS"): float(2 * offset * np.sqrt(8))}
    return ScenarioSpec(num_features=num_features, families=tuple(families),
                        divergence=divergence, seed=seed)


def feature_columns(num_features: int) -> tuple[str, ...]:
    return tuple(f"f{i:02d}" for i in range(num_features))


def default_column_spec(num_features: int = 45, delimiter: str = ",") -> ColumnSpec:
    return ColumnSpec(feature_columns(num_features), "Attack", delimiter)


def write_delimited(records: list[FlowRecord], path,
                    spec: ColumnSpec | None = None) -> ColumnSpec:
    """Emit records in the same delimited format the pipeline loader reads.

    Floats are written with repr so a load round-trips bit-exactly.
    """
    if spec is None:
        width = len(records[0].features) if records else 45
        spec = default_column_spec(width)
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, delimiter=spec.delimiter)
        writer.writerow([*spec.feature_columns, spec.label_column])
        for rec in records:
            writer.writerow([*(repr(float(v)) for v in rec.features), rec.sub_attack])
    return spec
