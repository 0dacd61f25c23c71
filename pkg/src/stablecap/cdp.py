"""CDP action records to per-position leverage and risk-aversion estimates.

Pipeline: load action CSV -> clean/filter -> per-CDP position series (wealth
and risky-asset ratio after every action) -> expanding-window ETH return
moments -> Method 1 estimate at every snapshot -> per-CDP and per-address
means.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .estimation import estimate_rho_m1

ACTIONS = ("open", "lock", "free", "draw", "wipe", "shut", "bite")
REQUIRED_COLUMNS = ("timestamp", "cdp_id", "address", "action", "collateral_delta",
                    "debt_delta", "eth_usd")
DEFAULT_CUTOFF = 1574035200  # 2019-11-18 00:00 UTC
SNAPSHOT_MODES = ("per-action", "final")


class CdpDataError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class CdpActionRecord:
    timestamp: int
    cdp_id: str
    address: str
    action: str
    collateral_delta: float
    debt_delta: float
    eth_usd: float
    address_type: str | None = None


def _parse_row(row: dict, line: int, has_type: bool) -> CdpActionRecord:
    action = (row["action"] or "").strip().lower()
    if action not in ACTIONS:
        raise ValueError(f"line {line}: unknown action {row['action']!r}")
    try:
        ts = int(row["timestamp"])
        coll = float(row["collateral_delta"])
        debt = float(row["debt_delta"])
        price = float(row["eth_usd"])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"line {line}: malformed number ({exc})") from None
    if not all(math.isfinite(v) for v in (coll, debt, price)):
        raise ValueError(f"line {line}: amounts must be finite")
    if not price > 0:
        raise ValueError(f"line {line}: eth_usd must be > 0")
    if not row["cdp_id"] or not row["address"]:
        raise ValueError(f"line {line}: cdp_id and address are required")
    kind = row.get("address_type") if has_type else None
    return CdpActionRecord(ts, row["cdp_id"], row["address"], action, coll, debt, price,
                           kind.strip().lower() if kind else None)


def load_cdp_csv(path) -> list[CdpActionRecord]:
    """Parse every row; raise :class:`CdpDataError` listing each bad line.

    Records come back sorted by timestamp (stable for equal timestamps).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise CdpDataError([f"header is missing columns {missing}"])
        has_type = "address_type" in header
        records, errors = [], []
        for row in reader:
            try:
                records.append(_parse_row(row, reader.line_num, has_type))
            except ValueError as exc:
                errors.append(str(exc))
    if errors:
        raise CdpDataError(errors)
    records.sort(key=lambda r: r.timestamp)
    return records


def _group(records) -> dict[str, list[CdpActionRecord]]:
    out: dict[str, list[CdpActionRecord]] = defaultdict(list)
    for rec in records:
        out[rec.cdp_id].append(rec)
    return out


def _peak_collateral_usd(recs) -> float:
    coll, peak = 0.0, 0.0
    for rec in recs:
        coll = 0.0 if rec.action == "shut" else coll + rec.collateral_delta
        peak = max(peak, coll * rec.eth_usd)
    return peak


def clean_filter(records, min_collateral_usd: float = 50.0, cutoff: int | None = DEFAULT_CUTOFF,
                 eoa_only: bool = True) -> list[CdpActionRecord]:
    """Drop late records, contract addresses and CDPs that never exceed the collateral floor.

    A floor ``<= 0`` disables the value filter. The address filter only acts
    when records carry an ``address_type``.
    """
    kept = [r for r in records if cutoff is None or r.timestamp <= cutoff]
    if eoa_only:
        kept = [r for r in kept if r.address_type in (None, "", "eoa")]
    if min_collateral_usd > 0:
        groups = _group(kept)
        small = {cid for cid, recs in groups.items()
                 if _peak_collateral_usd(recs) <= min_collateral_usd}
        kept = [r for r in kept if r.cdp_id not in small]
    return kept


@dataclass(frozen=True)
class Snapshot:
    timestamp: int
    eth_usd: float
    collateral: float
    purchased: float
    debt: float
    wealth: float
    alpha: float


@dataclass(frozen=True)
class PositionSeries:
    cdp_id: str
    address: str
    snapshots: tuple[Snapshot, ...]
    actions: int

    @property
    def wealth(self) -> list[float]:
        return [s.wealth for s in self.snapshots]

    @property
    def alpha(self) -> list[float]:
        return [s.alpha for s in self.snapshots]

    @property
    def timestamps(self) -> list[int]:
        return [s.timestamp for s in self.snapshots]


def position_series(records, assume_reinvest: bool = True) -> PositionSeries:
    """Replay one CDP's actions.

    With reinvestment, every draw buys ETH at the action price and every debt
    reduction sells purchased ETH in proportion, so a full wipe returns the
    ratio to 1. Without it, drawn coins are cash at par and cancel the debt in
    wealth. ``alpha = (collateral + purchased ETH) / collateral``.
    """
    records = list(records)
    if not records:
        raise ValueError("no records")
    ids = {r.cdp_id for r in records}
    if len(ids) != 1:
        raise ValueError("records span more than one cdp_id")
    if any(b.timestamp < a.timestamp for a, b in zip(records, records[1:])):
        raise ValueError("records must be time-sorted")

    opened = False
    coll = purch = debt = 0.0
    snaps = []
    for rec in records:
        if rec.action == "open":
            opened = True
        elif not opened:
            raise ValueError(f"{rec.action} before open in cdp {rec.cdp_id}")
        _check_sign(rec)
        new_debt = debt + rec.debt_delta
        if rec.action == "shut":
            coll = purch = new_debt = 0.0
        else:
            coll += rec.collateral_delta
            if coll < -1e-12:
                raise ValueError(f"negative collateral in cdp {rec.cdp_id} at {rec.timestamp}")
            coll = max(coll, 0.0)
            if new_debt < -1e-9:
                raise ValueError(f"negative debt in cdp {rec.cdp_id} at {rec.timestamp}")
            new_debt = max(new_debt, 0.0)
            if assume_reinvest:
                if rec.debt_delta > 0:
                    purch += rec.debt_delta / rec.eth_usd
                elif rec.debt_delta < 0:
                    purch = purch * new_debt / debt if debt > 0 else 0.0
        debt = new_debt
        if coll > 0:
            if assume_reinvest:
                wealth = (coll + purch) * rec.eth_usd - debt
                alpha = (coll + purch) / coll
            else:
                wealth, alpha = coll * rec.eth_usd, 1.0
            snaps.append(Snapshot(rec.timestamp, rec.eth_usd, coll, purch, debt, wealth, alpha))
    first = records[0]
    return PositionSeries(first.cdp_id, first.address, tuple(snaps), len(records))


def _check_sign(rec: CdpActionRecord) -> None:
    bad = ((rec.action == "lock" and rec.collateral_delta < 0)
           or (rec.action == "free" and rec.collateral_delta > 0)
           or (rec.action == "draw" and rec.debt_delta < 0)
           or (rec.action == "wipe" and rec.debt_delta > 0))
    if bad:
        raise ValueError(f"{rec.action} with wrong-signed amount in cdp {rec.cdp_id}")


# --------------------------------------------------------------------------- moments

@dataclass(frozen=True)
class DailyMoments:
    date: dt.date
    mean: float
    variance: float
    count: int


def load_price_csv(path) -> list[tuple[dt.date, float]]:
    """``date,close`` rows (ISO dates), sorted by date."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or {"date", "close"} - set(reader.fieldnames):
            raise CdpDataError(["price header must contain date,close"])
        errors = []
        for row in reader:
            try:
                out.append((dt.date.fromisoformat(row["date"].strip()), float(row["close"])))
            except (ValueError, AttributeError) as exc:
                errors.append(f"line {reader.line_num}: {exc}")
    if errors:
        raise CdpDataError(errors)
    out.sort()
    return out


def rolling_moments(price_series) -> list[DailyMoments]:
    """Expanding-window mean and sample variance (n - 1) of daily simple returns.

    ``price_series`` is a sequence of ``(date, close)`` pairs or bare closes
    (dates then count days from 1970-01-01). The first day has no return, so
    the output starts at the second price. Accumulation is exact; each value
    is rounded once. A single return has variance 0.
    """
    series = list(price_series)
    if len(series) < 2:
        raise ValueError("need at least 2 prices")
    if not isinstance(series[0], tuple):
        series = [(dt.date(1970, 1, 1) + dt.timedelta(days=i), p) for i, p in enumerate(series)]
    out = []
    s = q = Fraction(0)
    for n, ((_, prev), (day, close)) in enumerate(zip(series, series[1:]), start=1):
        if not prev > 0:
            raise ValueError("prices must be > 0")
        r = Fraction(close / prev - 1.0)
        s += r
        q += r * r
        var = (q - s * s / n) / (n - 1) if n > 1 else Fraction(0)
        out.append(DailyMoments(day, float(s / n), float(var), n))
    return out


# --------------------------------------------------------------------------- report

@dataclass
class RhoReport:
    snapshots: list[dict] = field(default_factory=list)
    per_cdp: list[dict] = field(default_factory=list)
    per_address: list[dict] = field(default_factory=list)
    skipped: dict = field(default_factory=dict)

    @property
    def mean_rho_cdp(self) -> float:
        vals = [row["rho"] for row in self.per_cdp]
        return math.fsum(vals) / len(vals) if vals else math.nan

    def mean_rho_address(self, active_only: bool = False) -> float:
        vals = [row["rho"] for row in self.per_address if row["active"] or not active_only]
        return math.fsum(vals) / len(vals) if vals else math.nan


def _utc_date(ts: int) -> dt.date:
    return dt.datetime.fromtimestamp(ts, tz=dt.timezone.utc).date()


def rho_report(positions, moments, r_free_annual: float = 0.02, active_threshold: int = 10,
               snapshot_mode: str = "per-action") -> RhoReport:
    """Method 1 estimate at each snapshot, averaged per CDP then per address.

    Moments are taken from the latest day on or before the snapshot's UTC
    date. Snapshots with zero variance, no moments yet or non-positive wealth
    are skipped and counted. An address is active when its CDPs together
    have more than ``active_threshold`` actions.
    """
    if snapshot_mode not in SNAPSHOT_MODES:
        raise ValueError(f"snapshot_mode must be one of {SNAPSHOT_MODES}")
    r_daily = r_free_annual / 365.0
    days = [m.date for m in moments]
    report = RhoReport(skipped={"zero_variance": 0, "no_moments": 0, "non_positive_wealth": 0})
    by_address: dict[str, list[float]] = defaultdict(list)
    actions_by_address: dict[str, int] = defaultdict(int)

    for pos in sorted(positions, key=lambda p: p.cdp_id):
        actions_by_address[pos.address] += pos.actions
        snaps = pos.snapshots if snapshot_mode == "per-action" else pos.snapshots[-1:]
        rhos = []
        for snap in snaps:
            i = bisect_right(days, _utc_date(snap.timestamp)) - 1
            if i < 0:
                report.skipped["no_moments"] += 1
                continue
            m = moments[i]
            if not m.variance > 0:
                report.skipped["zero_variance"] += 1
                continue
            if not snap.wealth > 0:
                report.skipped["non_positive_wealth"] += 1
                continue
            est = estimate_rho_m1(snap.wealth, snap.alpha, m.mean, m.variance, r_daily)
            rhos.append(est.rho)
            report.snapshots.append({"cdp_id": pos.cdp_id, "address": pos.address,
                                     "timestamp": snap.timestamp, **est.inputs_echo,
                                     "rho": est.rho})
        if rhos:
            rho = math.fsum(rhos) / len(rhos)
            report.per_cdp.append({"cdp_id": pos.cdp_id, "address": pos.address,
                                   "snapshots": len(rhos), "rho": rho})
            by_address[pos.address].append(rho)

    for addr in sorted(by_address):
        vals = by_address[addr]
        report.per_address.append({"address": addr, "cdps": len(vals),
                                   "actions": actions_by_address[addr],
                                   "active": actions_by_address[addr] > active_threshold,
                                   "rho": math.fsum(vals) / len(vals)})
    return report


def rho_histogram(values, bins: int = 20, cap: float = 1.0) -> list[dict]:
    """Plot-ready bins of the estimates; values above ``cap`` are left out."""
    vals = np.asarray([v for v in values if v <= cap], dtype=float)
    if vals.size == 0:
        return []
    lo, hi = float(vals.min()), float(vals.max())
    if np.any(np.diff(np.linspace(lo, hi, bins + 1)) <= 0):
        # near-identical values: widen like numpy does for an all-equal sample
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(vals, bins=bins, range=(lo, hi))
    return [{"lo": float(a), "hi": float(b), "count": int(c)}
            for a, b, c in zip(edges[:-1], edges[1:], counts)]


def _csv_text(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
    return buf.getvalue()


def report_tables(report: RhoReport, hist_bins: int = 20, outlier_cap: float = 1.0) -> dict:
    """File name -> CSV text for every output table."""
    hist = rho_histogram([r["rho"] for r in report.per_cdp], hist_bins, outlier_cap)
    return {
        "rho_snapshots.csv": _csv_text(report.snapshots, (
            "cdp_id", "address", "timestamp", "w", "alpha", "er", "var_r", "r_free", "rho")),
        "rho_per_cdp.csv": _csv_text(report.per_cdp, ("cdp_id", "address", "snapshots", "rho")),
        "rho_per_address.csv": _csv_text(report.per_address, (
            "address", "cdps", "actions", "active", "rho")),
        "rho_histogram.csv": _csv_text(hist, ("lo", "hi", "count")),
    }


def run_pipeline(cdp_csv, price_csv, *, min_collateral_usd: float = 50.0,
                 cutoff: int | None = DEFAULT_CUTOFF, eoa_only: bool = True,
                 assume_reinvest: bool = True, r_free_annual: float = 0.02,
                 active_threshold: int = 10, snapshot_mode: str = "per-action") -> RhoReport:
    records = clean_filter(load_cdp_csv(cdp_csv), min_collateral_usd, cutoff, eoa_only)
    positions = [position_series(recs, assume_reinvest) for recs in _group(records).values()]
    moments = rolling_moments(load_price_csv(price_csv))
    return rho_report(positions, moments, r_free_annual, active_threshold, snapshot_mode)


def write_tables(tables: dict, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in tables.items():
        path = out / name
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        tmp.replace(path)
        paths.append(path)
    return paths
