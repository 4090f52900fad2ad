"""Turn event logs into per-run indicators, aggregate over replications and
compare a candidate configuration against the baseline with significance
flags."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import stats

from .kernel import MINUTES_PER_DAY, LogRecord

KPI_NAMES = ("in_per_day", "wt_first", "wt_last", "los", "outlier_GREEN", "outlier_WHITE")
ALPHA = 0.05
DEFAULT_WARMUP_MIN = MINUTES_PER_DAY  # first simulated day is cold-start bias


class UsageError(ValueError):
    """KPI operation called with unusable inputs."""


@dataclass
class PatientTrace:
    """Per-patient timestamps extracted from one replication's log."""

    pid: int
    code: str | None = None
    times: dict = field(default_factory=dict)
    dismissed: bool = False
    first_team: str | None = None
    first_pool: str | None = None
    last_team: str | None = None
    triage_detail: dict | None = None

    def get(self, event: str):
        return self.times.get(event)


def parse_detail(detail: str) -> dict[str, str]:
    out = {}
    for token in detail.split():
        if "=" in token:
            k, v = token.split("=", 1)
            out[k] = v
    return out


def collect_patients(records: list[LogRecord]) -> dict[int, PatientTrace]:
    patients: dict[int, PatientTrace] = {}
    for r in records:
        p = patients.get(r.patient_id)
        if p is None:
            p = patients[r.patient_id] = PatientTrace(r.patient_id)
        if r.event not in p.times:  # keep the first occurrence of repeatable events
            p.times[r.event] = r.time_min
        if r.event == "TRIAGE_DONE":
            p.triage_detail = parse_detail(r.detail)
            p.code = p.triage_detail.get("code")
        elif r.event == "DISMISSED_AT_TRIAGE":
            p.dismissed = True
        elif r.event == "START_FIRST":
            detail = parse_detail(r.detail)
            p.first_team = detail.get("team")
            p.first_pool = detail.get("pool")
        elif r.event == "START_LAST":
            p.last_team = parse_detail(r.detail).get("team")
    return patients


@dataclass
class KpiReport:
    """Table-row shaped KPI set; per-replication vectors are retained so that
    aggregation and significance testing stay honest."""

    in_per_day: float
    wt_first: float
    wt_last: float
    los: float
    outlier_pct: dict[str, float]
    n_admitted: int = 0
    n_dismissed: int = 0
    n_censored: int = 0
    vectors: dict[str, list[float]] = field(default_factory=dict)

    def value(self, name: str) -> float:
        if name.startswith("outlier_"):
            return self.outlier_pct.get(name.split("_", 1)[1], float("nan"))
        return getattr(self, name)

    def to_dict(self) -> dict:
        def clean(x):
            return None if isinstance(x, float) and math.isnan(x) else x

        return {
            "in_per_day": clean(self.in_per_day),
            "wt_first": clean(self.wt_first),
            "wt_last": clean(self.wt_last),
            "los": clean(self.los),
            "outlier_pct": {k: clean(v) for k, v in self.outlier_pct.items()},
            "n_admitted": self.n_admitted,
            "n_dismissed": self.n_dismissed,
            "n_censored": self.n_censored,
            "replications": {k: [clean(x) for x in v] for k, v in self.vectors.items()},
        }


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs) if xs else float("nan")


def compute_kpis(records: list[LogRecord], days: int, thresholds: dict[str, float],
                 warmup_min: int = DEFAULT_WARMUP_MIN) -> KpiReport:
    """KPIs of one complete replication.

    Patients arriving during the warm-up window are excluded from all
    accounting; admitted patients lacking DISCHARGE within the horizon are
    censored out of LoS but keep their completed waits."""
    patients = collect_patients(records)
    admitted: list[PatientTrace] = []
    dismissed = 0
    for p in patients.values():
        arrive = p.get("ARRIVE")
        if arrive is None or arrive < warmup_min or p.get("TRIAGE_DONE") is None:
            continue
        if p.dismissed:
            dismissed += 1
            continue
        admitted.append(p)

    wt_first = [p.get("START_FIRST") - p.get("ENQUEUE_FIRST")
                for p in admitted if p.get("START_FIRST") is not None]
    wt_last = [p.get("START_LAST") - p.get("ENQUEUE_LAST")
               for p in admitted if p.get("START_LAST") is not None]
    los = [p.get("DISCHARGE") - p.get("ARRIVE")
           for p in admitted if p.get("DISCHARGE") is not None]
    censored = sum(1 for p in admitted if p.get("DISCHARGE") is None)

    outlier_pct: dict[str, float] = {}
    for code, threshold in sorted(thresholds.items()):
        waits = [p.get("START_FIRST") - p.get("ENQUEUE_FIRST")
                 for p in admitted if p.code == code and p.get("START_FIRST") is not None]
        outlier_pct[code] = (100.0 * sum(1 for w in waits if w > threshold) / len(waits)
                             if waits else float("nan"))

    report = KpiReport(
        in_per_day=len(admitted) / days,
        wt_first=_mean(wt_first),
        wt_last=_mean(wt_last),
        los=_mean(los),
        outlier_pct=outlier_pct,
        n_admitted=len(admitted),
        n_dismissed=dismissed,
        n_censored=censored,
    )
    report.vectors = {name: [report.value(name)] for name in KPI_NAMES}
    return report


def aggregate(reports: list[KpiReport]) -> KpiReport:
    """Arithmetic mean per KPI across replications; vectors are concatenated."""
    if not reports:
        raise UsageError("aggregate needs at least one report")
    vectors: dict[str, list[float]] = {name: [] for name in KPI_NAMES}
    for r in reports:
        for name in KPI_NAMES:
            vectors[name].extend(r.vectors.get(name, [r.value(name)]))
    codes = sorted({c for r in reports for c in r.outlier_pct})
    return KpiReport(
        in_per_day=_mean(vectors["in_per_day"]),
        wt_first=_mean(vectors["wt_first"]),
        wt_last=_mean(vectors["wt_last"]),
        los=_mean(vectors["los"]),
        outlier_pct={c: _mean([r.outlier_pct[c] for r in reports if c in r.outlier_pct])
                     for c in codes},
        n_admitted=sum(r.n_admitted for r in reports),
        n_dismissed=sum(r.n_dismissed for r in reports),
        n_censored=sum(r.n_censored for r in reports),
        vectors=vectors,
    )


@dataclass
class Comparison:
    baseline: KpiReport
    candidate: KpiReport
    delta: dict[str, float]
    p_value: dict[str, float]
    significant: dict[str, bool]

    def flags(self) -> list[str]:
        return [name for name in KPI_NAMES if self.significant[name]]


def compare(baseline: KpiReport, candidate: KpiReport, alpha: float = ALPHA) -> Comparison:
    """Per-KPI two-sided Welch test over the retained replication vectors."""
    delta, p_value, significant = {}, {}, {}
    for name in KPI_NAMES:
        b_raw = baseline.vectors.get(name, [])
        c_raw = candidate.vectors.get(name, [])
        if len(b_raw) != len(c_raw):
            raise UsageError(f"replication counts differ for {name}: {len(b_raw)} vs {len(c_raw)}")
        if len(b_raw) < 2:
            raise UsageError("compare needs at least two replications")
        b = [x for x in b_raw if not math.isnan(x)]
        c = [x for x in c_raw if not math.isnan(x)]
        if len(b) < 2 or len(c) < 2:  # KPI undefined in most replications
            delta[name] = float("nan")
            p_value[name] = float("nan")
            significant[name] = False
            continue
        delta[name] = _mean(c) - _mean(b)
        zero_var = max(b) == min(b) and max(c) == min(c)
        if sorted(b) == sorted(c):
            p = float("nan")  # identical samples: no evidence of change
        elif zero_var:
            p = 0.0  # deterministic shift, Welch statistic degenerates
        else:
            p = float(stats.ttest_ind(b, c, equal_var=False).pvalue)
        p_value[name] = p
        significant[name] = bool(not math.isnan(p) and p < alpha)
    return Comparison(baseline, candidate, delta, p_value, significant)
