"""Rollout logs, performance metrics, aggregation and comparison tables."""

from dataclasses import asdict, dataclass, field, fields
import csv
import io
import json
import logging
import math
from pathlib import Path

import numpy as np

from .track import Track, corner_mask_array

log = logging.getLogger(__name__)

MPS_TO_KMH = 3.6
SMOS_WINDOW = 50
MISSING = "—"

LOG_COLUMNS = ("t", "x", "y", "psi", "v_x", "v_y", "yaw_rate", "delta", "tau", "drive",
               "steer_cmd", "throttle_cmd", "e_y", "e_y_dot", "e_psi", "e_psi_dot", "e_beta",
               "e_beta_dot", "e_vx", "e_vx_dot", "e_vy", "e_vy_dot", "reward", "s")


@dataclass
class RolloutLog:
    """Per-step record of one episode at the control rate.

    ``rows`` hold the values named in :data:`LOG_COLUMNS`. ``reference_relative``
    is False when the errors were measured against a rough reference, in which
    case error metrics are reported as missing.
    """

    dt: float
    track_name: str = ""
    terminal: str = "Running"
    reference_relative: bool = True
    meta: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def append(self, t, state, action, errs, reward, s) -> None:
        self.rows.append((t, *state.as_tuple(), *action.as_tuple(), *errs.as_array().tolist(),
                          reward, s))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        j = LOG_COLUMNS.index(name)
        return np.array([r[j] for r in self.rows], dtype=float)

    def array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, len(LOG_COLUMNS))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(v)) for v in r])
        return buf.getvalue()

    def save(self, path) -> None:
        """Write ``<path>`` (CSV) and ``<path>.meta.json``."""
        path = Path(path)
        path.write_text(self.to_csv())
        info = {"dt": self.dt, "track_name": self.track_name, "terminal": self.terminal,
                "reference_relative": self.reference_relative, "meta": self.meta}
        path.with_name(path.name + ".meta.json").write_text(json.dumps(info, indent=1, sort_keys=True))

    @classmethod
    def load(cls, path) -> "RolloutLog":
        path = Path(path)
        info = json.loads(path.with_name(path.name + ".meta.json").read_text())
        with path.open() as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != LOG_COLUMNS:
                raise ValueError(f"{path} is not a rollout log")
            rows = [tuple(float(v) for v in r) for r in reader]
        return cls(dt=info["dt"], track_name=info["track_name"], terminal=info["terminal"],
                   reference_relative=info["reference_relative"], meta=info["meta"], rows=rows)


@dataclass
class MetricsReport:
    cte_mean: float | None
    hae_mean: float | None
    max_vel: float
    avg_vel: float
    lap_time: float | None
    smos: float
    slip_max: float
    corner_cte: float | None
    corner_hae: float | None
    corner_avg_vel: float | None

    def to_dict(self) -> dict:
        return asdict(self)


# Table column order: whole-track group, then the corner group.
TABLE_COLUMNS = (
    ("cte_mean", "C.T.E.", "min"),
    ("hae_mean", "H.A.E.", "min"),
    ("max_vel", "MAX-VEL", "max"),
    ("avg_vel", "AVG-VEL", "max"),
    ("lap_time", "L.T.", "min"),
    ("smos", "SMOS", "min"),
    ("corner_cte", "CORNER C.T.E.", "min"),
    ("corner_hae", "CORNER H.A.E.", "min"),
    ("corner_avg_vel", "CORNER AVG-VEL", "max"),
    ("slip_max", "SLIP", "max"),
)
METRIC_NAMES = tuple(f.name for f in fields(MetricsReport))


def rolling_std(values: np.ndarray, window: int) -> np.ndarray:
    """Population standard deviation over every full window of ``window`` samples."""
    values = np.asarray(values, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(values) < window:
        raise ValueError("series shorter than the window")
    view = np.lib.stride_tricks.sliding_window_view(values, window)
    # shifting by the first sample keeps constant windows at exactly zero
    return (view - view[:, :1]).std(axis=1)


def smoothness(steer: np.ndarray, window: int = SMOS_WINDOW) -> float:
    """Mean rolling standard deviation of the steering command."""
    steer = np.asarray(steer, dtype=float)
    if len(steer) == 0:
        raise ValueError("empty steering series")
    if len(steer) < window:
        log.warning("log of %d steps is shorter than the %d-step window; using the whole log",
                    len(steer), window)
        return float((steer - steer[0]).std())
    return float(rolling_std(steer, window).mean())


def _mean_or_none(values: np.ndarray) -> float | None:
    return float(values.mean()) if len(values) else None


def compute_metrics(rollout: RolloutLog, track: Track, window: int = SMOS_WINDOW) -> MetricsReport:
    if len(rollout) == 0:
        raise ValueError("cannot compute metrics on an empty log")
    data = rollout.array()
    col = {name: data[:, j] for j, name in enumerate(LOG_COLUMNS)}
    speed = np.hypot(col["v_x"], col["v_y"])
    slip = np.degrees(np.abs(np.arctan2(col["v_y"], col["v_x"])))
    slip[speed <= 0.5] = 0.0
    abs_ey = np.abs(col["e_y"])
    abs_epsi = np.degrees(np.abs(col["e_psi"]))
    corner = corner_mask_array(track, col["s"])
    rel = rollout.reference_relative
    lap = None
    if rollout.terminal == "Arrival":
        lap = float(col["t"][-1])
    return MetricsReport(
        cte_mean=float(abs_ey.mean()) if rel else None,
        hae_mean=float(abs_epsi.mean()) if rel else None,
        max_vel=float(MPS_TO_KMH * speed.max()),
        avg_vel=float(MPS_TO_KMH * speed.mean()),
        lap_time=lap,
        smos=smoothness(col["delta"], window),
        slip_max=float(slip.max()),
        corner_cte=_mean_or_none(abs_ey[corner]) if rel else None,
        corner_hae=_mean_or_none(abs_epsi[corner]) if rel else None,
        corner_avg_vel=None if not corner.any() else float(MPS_TO_KMH * speed[corner].mean()),
    )


@dataclass
class Aggregate:
    mean: dict
    std: dict
    count: dict
    n_runs: int

    def report(self) -> MetricsReport:
        return MetricsReport(**self.mean)

    def to_dict(self) -> dict:
        return asdict(self)


def aggregate(reports: list[MetricsReport]) -> Aggregate:
    """Per-metric mean and population std, skipping missing values."""
    if not reports:
        raise ValueError("need at least one report")
    mean, std, count = {}, {}, {}
    for name in METRIC_NAMES:
        vals = np.array([getattr(r, name) for r in reports if getattr(r, name) is not None])
        count[name] = len(vals)
        mean[name] = float(vals.mean()) if len(vals) else None
        std[name] = float(vals.std()) if len(vals) else None
    return Aggregate(mean, std, count, len(reports))


def _fmt(value) -> str:
    return MISSING if value is None else f"{value:.3f}"


@dataclass
class ComparisonTable:
    labels: list
    columns: list
    values: list
    best: list

    def to_text(self) -> str:
        headers = ["method"] + list(self.columns)
        cells = []
        for label, vals, flags in zip(self.labels, self.values, self.best):
            cells.append([label] + [_fmt(v) + ("*" if f else "") for v, f in zip(vals, flags)])
        widths = [max(len(h), *(len(row[j]) for row in cells)) for j, h in enumerate(headers)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
        lines.append("  ".join("-" * w for w in widths))
        for row in cells:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        lines.append("* best in column")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method"] + list(self.columns) + [f"{c} best" for c in self.columns])
        for label, vals, flags in zip(self.labels, self.values, self.best):
            w.writerow([label] + [MISSING if v is None else repr(float(v)) for v in vals]
                       + [int(f) for f in flags])
        return buf.getvalue()


def compare_table(runs: dict) -> ComparisonTable:
    """Build a comparison table from ``label -> MetricsReport or Aggregate``.

    Every row holding the best value of a column is flagged, so ties flag
    several rows.
    """
    if len(runs) < 2:
        raise ValueError("a comparison needs at least two runs")
    labels = list(runs)
    reports = [r.report() if isinstance(r, Aggregate) else r for r in runs.values()]
    values = [[getattr(r, key) for key, _, _ in TABLE_COLUMNS] for r in reports]
    best = [[False] * len(TABLE_COLUMNS) for _ in labels]
    for j, (_, _, sense) in enumerate(TABLE_COLUMNS):
        present = [row[j] for row in values if row[j] is not None]
        if not present:
            continue
        target = min(present) if sense == "min" else max(present)
        for i, row in enumerate(values):
            best[i][j] = row[j] is not None and row[j] == target
    return ComparisonTable(labels, [title for _, title, _ in TABLE_COLUMNS], values, best)


PLOT_COLUMNS = ("t", "s", "e_y", "e_psi_deg", "slip_deg", "speed_kmh", "steer")


def plot_data_csv(rollout: RolloutLog) -> str:
    """Time series of tracking errors, slip, speed and steering for external plotting."""
    data = rollout.array()
    col = {name: data[:, j] for j, name in enumerate(LOG_COLUMNS)}
    speed = np.hypot(col["v_x"], col["v_y"])
    slip = np.where(speed > 0.5, np.degrees(np.arctan2(col["v_y"], col["v_x"])), 0.0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLOT_COLUMNS)
    for row in zip(col["t"], col["s"], col["e_y"], np.degrees(col["e_psi"]), slip,
                   MPS_TO_KMH * speed, col["delta"]):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def report_is_finite(report: MetricsReport) -> bool:
    return all(v is None or math.isfinite(v) for v in asdict(report).values())
