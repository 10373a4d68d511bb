"""Drift timeline: schedule, temporal segmentation, capping, composition.

The bundled schedule introduces one attack family per period: MQTT at t1,
DoS at t2, DDoS at t3, Recon at t4 and Spoofing at t5; t6 carries test data
only. The six-class task prepends a t0 baseline holding one representative
sub-attack per category so the label space is complete from the start; the
binary task starts at t1.

Each class's training rows are cut into one chronological segment per
training period and each test side into one segment per test period, so no
strategy ever re-reads the same rows across periods. Training strategies
then differ only in which classes (and how many retained rows) they pull
into each period's pool.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ScheduleError
from .pipeline import FlowRecord
from .seeds import rng_for

TASKS = ("binary", "sixclass")

STRATEGY_KINDS = ("static", "cumulative", "simple", "representative",
                  "retain", "avg_equal", "avg_sample", "avg_ema")

FAMILY_MEMBERS = {
    "MQTT": ("MQTT-Malformed_Data", "MQTT-DoS-Connect_Flood",
             "MQTT-DDoS-Publish_Flood", "MQTT-DDoS-Connect_Flood"),
    "DoS": ("TCP_IP-DoS-TCP", "TCP_IP-DoS-ICMP", "TCP_IP-DoS-SYN", "TCP_IP-DoS-UDP"),
    "DDoS": ("TCP_IP-DDoS-SYN", "TCP_IP-DDoS-ICMP", "TCP_IP-DDoS-UDP", "TCP_IP-DDoS-TCP"),
    "Recon": ("Recon-Ping_Sweep", "Recon-VulScan", "Recon-OS_Scan", "Recon-Port_Scan"),
    "Spoofing": ("ARP_Spoofing",),
}

# Fixed representative sub-attack per category (the t0 baseline roster).
REPRESENTATIVES = {
    "MQTT": "MQTT-DDoS-Connect_Flood",
    "DoS": "TCP_IP-DoS-UDP",
    "DDoS": "TCP_IP-DDoS-UDP",
    "Recon": "Recon-Port_Scan",
    "Spoofing": "ARP_Spoofing",
}

FAMILY_INTRODUCED_AT = {1: "MQTT", 2: "DoS", 3: "DDoS", 4: "Recon", 5: "Spoofing"}

DEFAULT_TRAIN_CAP = 10_000
DEFAULT_TEST_CAP = 2_000
DEFAULT_NUM_CLIENTS = 5

# Fractions of each client's allocation (the 80% training side of the data):
# 75/12.5/12.5 here corresponds to 60/10/10 of the original dataset.
CLIENT_VAL_FRACTION = 0.125
CLIENT_TEST_FRACTION = 0.125


@dataclass(frozen=True)
class StrategyConfig:
    """One training strategy row of the benchmark.

    Numeric invariants (retain_r > 0, 0 < ema_alpha < 1) are reported by
    ``runner.validate_config`` and enforced again when the strategy is used,
    so an invalid value can be carried into diagnostics without raising here.
    """

    kind: str
    retain_r: int | None = None
    ema_alpha: float | None = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ConfigError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "avg_ema" and self.ema_alpha is None:
            object.__setattr__(self, "ema_alpha", 0.6)

    def check(self) -> None:
        if self.kind == "retain" and (self.retain_r is None or self.retain_r <= 0):
            raise ConfigError("retain strategy needs retain_r > 0")
        if self.kind == "avg_ema" and not 0 < (self.ema_alpha or 0) < 1:
            raise ConfigError("ema_alpha must be in (0, 1)")

    @property
    def label(self) -> str:
        if self.kind == "retain":
            return f"retain_{self.retain_r}"
        return self.kind


@dataclass(frozen=True)
class PeriodSchedule:
    """What one period contains, on the train and test sides."""

    period_id: int
    included: frozenset[str]        # classes present in this period's test data
    introduced: frozenset[str]      # classes appearing for the first time
    full_marks: frozenset[str]      # classes trained on their full segment
    retained_marks: frozenset[str]  # classes carried as retention samples
    new_family: str | None          # family introduced this period
    new_family_members: frozenset[str]
    has_training: bool

    @property
    def name(self) -> str:
        return f"t{self.period_id}"


def build_schedule(task: str) -> list[PeriodSchedule]:
    """Period schedules t0..t6 (sixclass) or t1..t6 (binary)."""
    if task not in TASKS:
        raise ConfigError(f"task must be one of {TASKS}")

    reps = frozenset({"Benign", *REPRESENTATIVES.values()})
    schedules: list[PeriodSchedule] = []
    included: set[str] = set()
    seen: set[str] = set()
    retain_eligible: set[str] = set()  # classes with retained marks next period onward

    if task == "sixclass":
        included = set(reps)
        seen = set(reps)
        schedules.append(PeriodSchedule(
            period_id=0, included=frozenset(included), introduced=reps,
            full_marks=reps, retained_marks=frozenset(), new_family=None,
            new_family_members=frozenset(), has_training=True,
        ))

    for period in range(1, 6):
        family = FAMILY_INTRODUCED_AT[period]
        members = frozenset(FAMILY_MEMBERS[family])
        introduced = frozenset(m for m in members if m not in seen)
        if period == 1 and task == "binary":
            # the binary timeline starts here, Benign included
            introduced = introduced | {"Benign"}
        seen |= members | {"Benign"}
        included |= members | {"Benign"}
        if period == 1:
            full = members | {"Benign"}
            retained: frozenset[str] = frozenset()
            retain_eligible = set(full)
        else:
            full = members
            retained = frozenset(retain_eligible - members)
            retain_eligible |= members
        schedules.append(PeriodSchedule(
            period_id=period, included=frozenset(included), introduced=introduced,
            full_marks=frozenset(full), retained_marks=retained, new_family=family,
            new_family_members=members, has_training=True,
        ))

    schedules.append(PeriodSchedule(
        period_id=6, included=frozenset(included), introduced=frozenset(),
        full_marks=frozenset(), retained_marks=frozenset(), new_family=None,
        new_family_members=frozenset(), has_training=False,
    ))
    return schedules


def training_periods(task: str) -> tuple[int, ...]:
    return tuple(p.period_id for p in build_schedule(task) if p.has_training)


def test_periods(task: str) -> tuple[int, ...]:
    return tuple(p.period_id for p in build_schedule(task))


def temporal_segment(class_records: list[FlowRecord], num_periods: int) -> list[list[FlowRecord]]:
    """Chronological, disjoint, near-equal segments.

    The first ``n % num_periods`` segments take one extra row, so sizes
    differ by at most one and earlier segments hold earlier order_index
    values. Records must already be sorted by order_index.
    """
    if num_periods < 1:
        raise ScheduleError("num_periods must be at least 1")
    n = len(class_records)
    base, extra = divmod(n, num_periods)
    segments = []
    start = 0
    for k in range(num_periods):
        size = base + (1 if k < extra else 0)
        segments.append(class_records[start:start + size])
        start += size
    return segments


def cap_records(records: list[FlowRecord], cap: int,
                rng: np.random.Generator) -> list[FlowRecord]:
    """Uniform subsample without replacement, preserving chronological order."""
    if len(records) <= cap:
        return records
    keep = np.sort(rng.permutation(len(records))[:cap])
    return [records[i] for i in keep]


def segment_and_cap(records_by_cls: dict[str, list[FlowRecord]], num_periods: int,
                    cap: int, seed: int, tag: str) -> dict[str, list[list[FlowRecord]]]:
    """Per class: segment chronologically, then cap each period independently."""
    if cap < 1:
        raise ConfigError("cap must be at least 1")
    out: dict[str, list[list[FlowRecord]]] = {}
    for cls in sorted(records_by_cls):
        rows = sorted(records_by_cls[cls], key=lambda r: r.order_index)
        segments = temporal_segment(rows, num_periods)
        out[cls] = [
            cap_records(seg, cap, rng_for(seed, tag, cls, k))
            for k, seg in enumerate(segments)
        ]
    return out


@dataclass
class ClientSplit:
    """One client's share of a period pool, sub-split for local use."""

    train: list[FlowRecord] = field(default_factory=list)
    client_test: list[FlowRecord] = field(default_factory=list)
    validation: list[FlowRecord] = field(default_factory=list)


def partition_iid(pool_by_class: dict[str, list[FlowRecord]], num_clients: int,
                  seed: int) -> list[ClientSplit]:
    """Deal each class round-robin after a seeded shuffle.

    Shard sizes per class differ by at most one (earlier clients take the
    remainder). Within each client's per-class allocation the tail is held
    out for client-side testing and validation.
    """
    if num_clients < 1:
        raise ConfigError("num_clients must be at least 1")
    clients = [ClientSplit() for _ in range(num_clients)]
    for cls in sorted(pool_by_class):
        rows = pool_by_class[cls]
        perm = rng_for(seed, "deal", cls).permutation(len(rows))
        for k in range(num_clients):
            dealt = [rows[i] for i in perm[k::num_clients]]
            m = len(dealt)
            n_val = int(np.floor(m * CLIENT_VAL_FRACTION))
            n_ctest = int(np.floor(m * CLIENT_TEST_FRACTION))
            n_train = m - n_val - n_ctest
            clients[k].train.extend(dealt[:n_train])
            clients[k].client_test.extend(dealt[n_train:n_train + n_ctest])
            clients[k].validation.extend(dealt[n_train + n_ctest:])
    return clients


@dataclass
class PeriodData:
    """Composed training data of one strategy for one period."""

    period_id: int
    clients: list[ClientSplit]
    pool_by_class: dict[str, list[FlowRecord]]

    @property
    def class_counts(self) -> dict[str, int]:
        return {cls: len(rows) for cls, rows in self.pool_by_class.items()}


class StrategyComposer:
    """Builds each training period's class pool for one strategy run.

    Call :meth:`compose` for the strategy's training periods in ascending
    order; the composer tracks which rows each class has already used so
    retention buffers draw only from genuinely seen data.
    """

    def __init__(self, strategy: StrategyConfig, schedule: list[PeriodSchedule],
                 train_segments: dict[str, list[list[FlowRecord]]], seed: int):
        strategy.check()
        self.strategy = strategy
        self.schedule = {p.period_id: p for p in schedule}
        self.segments = train_segments
        self.seed = seed
        self.start_period = min(p.period_id for p in schedule if p.has_training)
        # per class: ordered unique rows already used in earlier periods
        self._used: dict[str, list[FlowRecord]] = {}
        self._used_keys: dict[str, set[tuple[str, int]]] = {}
        self._composed: list[int] = []

    def training_periods(self) -> list[int]:
        if self.strategy.kind == "static":
            return [self.start_period]
        return sorted(p for p, s in self.schedule.items() if s.has_training)

    def used_rows(self, cls: str) -> list[FlowRecord]:
        return list(self._used.get(cls, ()))

    def _segment(self, cls: str, period_id: int) -> list[FlowRecord]:
        # segment index counts training periods from the start of the task
        segments = self.segments.get(cls)
        k = period_id - self.start_period
        if segments is None or k >= len(segments):
            return []
        return segments[k]

    def compose(self, period_id: int) -> dict[str, list[FlowRecord]]:
        sched = self.schedule.get(period_id)
        if sched is None or not sched.has_training:
            raise ScheduleError(f"period t{period_id} has no training data")
        if period_id not in self.training_periods():
            raise ScheduleError(
                f"strategy {self.strategy.label} does not train at t{period_id}"
            )
        expected = [p for p in self.training_periods() if p not in self._composed]
        if not expected or expected[0] != period_id:
            raise ScheduleError(
                f"periods must be composed in order; next is t{expected[0] if expected else '?'}"
            )

        kind = self.strategy.kind
        pool: dict[str, list[FlowRecord]] = {}

        if kind == "representative":
            classes = set(sched.new_family_members) | {"Benign"}
            classes |= {rep for cat, rep in REPRESENTATIVES.items() if cat != sched.new_family}
            for cls in sorted(classes):
                pool[cls] = list(self._segment(cls, period_id))
        elif kind == "cumulative":
            for cls in sorted(sched.full_marks | sched.retained_marks):
                pool[cls] = list(self._segment(cls, period_id))
        elif kind == "retain":
            for cls in sorted(sched.full_marks):
                pool[cls] = list(self._segment(cls, period_id))
            for cls in sorted(sched.retained_marks):
                pool[cls] = self._draw_retention(cls, period_id)
        elif kind == "static" or period_id == self.start_period:
            for cls in sorted(sched.full_marks):
                pool[cls] = list(self._segment(cls, period_id))
        else:  # simple and the averaging variants
            for cls in sorted(sched.new_family_members | {"Benign"}):
                pool[cls] = list(self._segment(cls, period_id))

        pool = {cls: rows for cls, rows in pool.items() if rows}
        self._remember(pool)
        self._composed.append(period_id)
        return pool

    def _draw_retention(self, cls: str, period_id: int) -> list[FlowRecord]:
        available = self._used.get(cls, [])
        r = self.strategy.retain_r
        if len(available) <= r:
            return list(available)
        rng = rng_for(self.seed, "retain", period_id, cls)
        keep = np.sort(rng.permutation(len(available))[:r])
        return [available[i] for i in keep]

    def _remember(self, pool: dict[str, list[FlowRecord]]) -> None:
        for cls, rows in pool.items():
            keys = self._used_keys.setdefault(cls, set())
            store = self._used.setdefault(cls, [])
            for rec in rows:
                key = (rec.sub_attack, rec.order_index)
                if key not in keys:
                    keys.add(key)
                    store.append(rec)


def compose_training_set(strategy: StrategyConfig, period_id: int,
                         schedule: list[PeriodSchedule],
                         train_segments: dict[str, list[list[FlowRecord]]],
                         history: StrategyComposer | None = None, *,
                         num_clients: int = DEFAULT_NUM_CLIENTS,
                         seed: int = 0) -> tuple[PeriodData, StrategyComposer]:
    """Compose one period's pool and deal it to clients.

    ``history`` carries the composer state across periods (required for
    retention draws); pass None at the strategy's first training period and
    the returned composer afterwards.
    """
    composer = history if history is not None else StrategyComposer(
        strategy, schedule, train_segments, seed)
    pool = composer.compose(period_id)
    clients = partition_iid(pool, num_clients, rng_seed_for_period(seed, strategy, period_id))
    return PeriodData(period_id=period_id, clients=clients, pool_by_class=pool), composer


def rng_seed_for_period(seed: int, strategy: StrategyConfig, period_id: int) -> int:
    stream = rng_for(seed, "partition", strategy.label, period_id)
    return int(stream.integers(0, 2**63 - 1))


def build_test_sets(schedule: list[PeriodSchedule],
                    test_segments: dict[str, list[list[FlowRecord]]]
                    ) -> dict[int, dict[str, list[FlowRecord]]]:
    """Global test pool per period: the period's segment of every included class."""
    first = schedule[0].period_id
    out: dict[int, dict[str, list[FlowRecord]]] = {}
    for sched in schedule:
        k = sched.period_id - first
        per_class = {}
        for cls in sorted(sched.included):
            rows = test_segments.get(cls, [])
            if k < len(rows) and rows[k]:
                per_class[cls] = rows[k]
        out[sched.period_id] = per_class
    return out


def composition_report(pools: dict[int, dict[str, list[FlowRecord]]],
                       strategy: StrategyConfig) -> list[tuple[str, int, str, int]]:
    """Audit rows (strategy, period, class, row count) for golden checks."""
    rows = []
    for period_id in sorted(pools):
        for cls in sorted(pools[period_id]):
            rows.append((strategy.label, period_id, cls, len(pools[period_id][cls])))
    return rows
