"""Tracks, reference trajectories and the queries the controller needs.

Generated tracks are chains of straights and circular arcs sampled every
metre of arc length. A corner's annotated angle is the heading change across
its arc, in degrees; its radius shrinks linearly from ``radius_range_m[1]`` at
40 degrees to ``radius_range_m[0]`` at 180 degrees, so sharper corners are
also tighter.
"""

from dataclasses import asdict, dataclass, field
from enum import Enum
import json
import math
from pathlib import Path

import numpy as np

from .geometry import wrap_angle, wrap_angles
from .vehicle import GRAVITY, VehicleParams

TRACK_FORMAT = "driftsac-track"
TRAJECTORY_FORMAT = "driftsac-trajectory"
FORMAT_VERSION = 1

SPACING = 1.0
MIN_CORNER_DEG = 40.0
MAX_CORNER_DEG = 180.0
SEARCH_WINDOW = 40

# Expert drift heuristic: peak reference slip (deg) against corner angle (deg).
DRIFT_PEAK_TABLE = ((40.0, 12.0), (90.0, 22.0), (180.0, 30.0))
EXPERT_DECEL_FRACTION = 0.5


class TrackGenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CornerSegment:
    start: float
    end: float
    angle_deg: float
    # +1 for a left (counter-clockwise) turn, -1 for a right turn
    direction: int = 1

    def contains(self, s: float) -> bool:
        return self.start <= s < self.end


@dataclass(frozen=True)
class TrackSpec:
    seed: int
    n_corners: int
    corner_angle_range_deg: tuple[float, float] = (40.0, 180.0)
    segment_length_range_m: tuple[float, float] = (40.0, 120.0)
    half_width_m: float = 8.0
    radius_range_m: tuple[float, float] = (30.0, 90.0)
    name: str = ""

    def __post_init__(self):
        lo, hi = self.corner_angle_range_deg
        if not (MIN_CORNER_DEG <= lo <= hi <= MAX_CORNER_DEG):
            raise ValueError(
                f"corner angles {self.corner_angle_range_deg} must lie within "
                f"[{MIN_CORNER_DEG:g}, {MAX_CORNER_DEG:g}] degrees")
        if self.n_corners < 0:
            raise ValueError("n_corners must be >= 0")
        seg_lo, seg_hi = self.segment_length_range_m
        if not 0 < seg_lo <= seg_hi:
            raise ValueError("segment_length_range_m must be positive and ordered")
        r_lo, r_hi = self.radius_range_m
        if not 0 < r_lo <= r_hi:
            raise ValueError("radius_range_m must be positive and ordered")
        if self.half_width_m <= 0:
            raise ValueError("half_width_m must be positive")
        if r_lo <= self.half_width_m:
            raise ValueError("corner radius must exceed the half width")

    def corner_radius(self, angle_deg: float) -> float:
        r_lo, r_hi = self.radius_range_m
        frac = (angle_deg - MIN_CORNER_DEG) / (MAX_CORNER_DEG - MIN_CORNER_DEG)
        return r_hi + (r_lo - r_hi) * frac

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrackSpec":
        data = dict(data)
        for key in ("corner_angle_range_deg", "segment_length_range_m", "radius_range_m"):
            if key in data:
                data[key] = tuple(float(v) for v in data[key])
        return cls(**data)


def _polyline_clearance(xy: np.ndarray, is_loop: bool, min_sep: int) -> float:
    """Smallest distance between points more than ``min_sep`` samples apart."""
    n = len(xy)
    best = math.inf
    idx = np.arange(n)
    for start in range(0, n, 256):
        block = xy[start:start + 256]
        d = np.hypot(block[:, None, 0] - xy[None, :, 0], block[:, None, 1] - xy[None, :, 1])
        sep = np.abs(idx[start:start + 256, None] - idx[None, :])
        if is_loop:
            sep = np.minimum(sep, n - sep)
        d[sep <= min_sep] = math.inf
        best = min(best, float(d.min()))
    return best


def _nearest(xy: np.ndarray, is_loop: bool, clearance: float, pos, hint: int | None) -> int:
    """Index of the closest sample; local search around ``hint`` when provably exact.

    The local answer is accepted only if it sits away from the window edges and
    is closer than half the polyline clearance, in which case no point outside
    the window can beat it.
    """
    n = len(xy)
    px, py = float(pos[0]), float(pos[1])
    if hint is not None and n > 2 * SEARCH_WINDOW + 1:
        offsets = np.arange(-SEARCH_WINDOW, SEARCH_WINDOW + 1)
        if is_loop:
            idx = (hint + offsets) % n
        else:
            idx = np.clip(hint + offsets, 0, n - 1)
        d2 = (xy[idx, 0] - px) ** 2 + (xy[idx, 1] - py) ** 2
        k = int(np.argmin(d2))
        best = int(idx[k])
        margin = SEARCH_WINDOW // 2
        inner = margin <= k <= 2 * SEARCH_WINDOW - margin
        if not is_loop:
            # the window edge is harmless when it is the trajectory end
            inner = inner or (k < margin and idx[0] == 0) or (
                k > 2 * SEARCH_WINDOW - margin and idx[-1] == n - 1)
        if inner and math.sqrt(d2[k]) < 0.5 * clearance:
            # prefer the lowest index among exact ties, as the global search does
            ties = idx[d2 == d2[k]]
            return int(ties.min()) if len(ties) > 1 else best
    d2 = (xy[:, 0] - px) ** 2 + (xy[:, 1] - py) ** 2
    return int(np.argmin(d2))


@dataclass(frozen=True, eq=False)
class Track:
    centerline: np.ndarray
    half_width: float
    is_loop: bool = False
    corner_segments: tuple[CornerSegment, ...] = ()
    name: str = ""
    spec: TrackSpec | None = None
    s: np.ndarray = field(default=None, repr=False)
    clearance: float = field(default=None, repr=False)

    def __post_init__(self):
        xy = np.asarray(self.centerline, dtype=float)
        if xy.ndim != 2 or xy.shape[1] != 2 or len(xy) < 2:
            raise ValueError("centerline must be an (N, 2) array with N >= 2")
        object.__setattr__(self, "centerline", xy)
        if self.s is None:
            seg = np.hypot(*np.diff(xy, axis=0).T)
            object.__setattr__(self, "s", np.concatenate([[0.0], np.cumsum(seg)]))
        if self.clearance is None:
            object.__setattr__(self, "clearance",
                               _polyline_clearance(xy, self.is_loop, SEARCH_WINDOW // 2))
        object.__setattr__(self, "corner_segments", tuple(self.corner_segments))

    @property
    def total_length(self) -> float:
        if self.is_loop:
            return float(self.s[-1] + np.hypot(*(self.centerline[0] - self.centerline[-1])))
        return float(self.s[-1])

    def nearest(self, pos, hint: int | None = None) -> tuple[int, float]:
        """Closest centerline index and signed lateral offset (left positive)."""
        i = _nearest(self.centerline, self.is_loop, self.clearance, pos, hint)
        heading = self.tangent_heading(i)
        dx = float(pos[0]) - self.centerline[i, 0]
        dy = float(pos[1]) - self.centerline[i, 1]
        return i, math.cos(heading) * dy - math.sin(heading) * dx

    def tangent_headings(self) -> np.ndarray:
        """Centerline tangent direction at every sample (central differences)."""
        xy = self.centerline
        if self.is_loop:
            d = np.roll(xy, -1, axis=0) - np.roll(xy, 1, axis=0)
        else:
            d = np.empty_like(xy)
            d[1:-1] = xy[2:] - xy[:-2]
            d[0] = xy[1] - xy[0]
            d[-1] = xy[-1] - xy[-2]
        return np.arctan2(d[:, 1], d[:, 0])

    def tangent_heading(self, i: int) -> float:
        xy, n = self.centerline, len(self.centerline)
        if self.is_loop:
            a, b = xy[(i - 1) % n], xy[(i + 1) % n]
        else:
            a, b = xy[max(i - 1, 0)], xy[min(i + 1, n - 1)]
        return math.atan2(b[1] - a[1], b[0] - a[0])

    def curvature(self) -> np.ndarray:
        """Signed curvature per sample from tangent heading changes."""
        h = self.tangent_headings()
        n = len(h)
        if self.is_loop:
            dh = wrap_angles(np.roll(h, -1) - np.roll(h, 1))
            ds = np.roll(self.s, -1) - np.roll(self.s, 1)
            ds[0] = self.s[1] + (self.total_length - self.s[-1])
            ds[-1] = self.total_length - self.s[-2]
        else:
            dh = np.zeros(n)
            ds = np.ones(n)
            dh[1:-1] = wrap_angles(h[2:] - h[:-2])
            ds[1:-1] = self.s[2:] - self.s[:-2]
        return dh / ds

    def to_dict(self) -> dict:
        return {
            "format": TRACK_FORMAT,
            "version": FORMAT_VERSION,
            "name": self.name,
            "half_width": self.half_width,
            "is_loop": self.is_loop,
            "spec": None if self.spec is None else self.spec.to_dict(),
            "corner_segments": [asdict(c) for c in self.corner_segments],
            "centerline": [[float(x), float(y)] for x, y in self.centerline],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Track":
        if data.get("format") != TRACK_FORMAT:
            raise ValueError(f"not a track document: format={data.get('format')!r}")
        if data.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported track version {data.get('version')}")
        spec = data.get("spec")
        return cls(
            centerline=np.array(data["centerline"], dtype=float),
            half_width=float(data["half_width"]),
            is_loop=bool(data["is_loop"]),
            corner_segments=tuple(CornerSegment(**c) for c in data["corner_segments"]),
            name=data.get("name", ""),
            spec=None if spec is None else TrackSpec.from_dict(spec),
        )


def dumps_json(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def save_track(track: Track, path) -> None:
    Path(path).write_text(dumps_json(track.to_dict()))


def load_track(path) -> Track:
    return Track.from_dict(json.loads(Path(path).read_text()))


def _sample_path(pieces, spacing: float = SPACING):
    """Sample a chain of (kind, length, curvature) pieces every ``spacing`` metres.

    Returns points, the exact arc length of each piece boundary and the total length.
    """
    total = sum(length for _, length, _ in pieces)
    n_samples = int(math.floor(total / spacing + 1e-9))
    s_values = [k * spacing for k in range(n_samples + 1)]
    if total - s_values[-1] > 1e-9:
        s_values.append(total)

    pts = np.empty((len(s_values), 2))
    x = y = heading = 0.0
    s0 = 0.0
    boundaries = [0.0]
    j = 0
    for _, length, kappa in pieces:
        s1 = s0 + length
        while j < len(s_values) and (s_values[j] <= s1 + 1e-9):
            u = s_values[j] - s0
            if abs(kappa) < 1e-12:
                px, py = x + u * math.cos(heading), y + u * math.sin(heading)
            else:
                px = x + (math.sin(heading + kappa * u) - math.sin(heading)) / kappa
                py = y - (math.cos(heading + kappa * u) - math.cos(heading)) / kappa
            pts[j] = (px, py)
            j += 1
        if abs(kappa) < 1e-12:
            x, y = x + length * math.cos(heading), y + length * math.sin(heading)
        else:
            x, y = (x + (math.sin(heading + kappa * length) - math.sin(heading)) / kappa,
                    y - (math.cos(heading + kappa * length) - math.cos(heading)) / kappa)
        heading += kappa * length
        s0 = s1
        boundaries.append(s0)
    return pts, boundaries, total


def generate_track(spec: TrackSpec, max_attempts: int = 50) -> Track:
    """Build a non-self-intersecting straight/arc track from ``spec``.

    Deterministic in ``spec``. Raises :class:`TrackGenerationError` if every
    attempt self-intersects.
    """
    rng = np.random.default_rng(spec.seed)
    seg_lo, seg_hi = spec.segment_length_range_m
    ang_lo, ang_hi = spec.corner_angle_range_deg
    for _ in range(max_attempts):
        pieces = [("line", float(rng.uniform(seg_lo, seg_hi)), 0.0)]
        corners = []
        for _ in range(spec.n_corners):
            angle = float(rng.uniform(ang_lo, ang_hi))
            direction = 1 if rng.random() < 0.5 else -1
            radius = spec.corner_radius(angle)
            pieces.append(("arc", radius * math.radians(angle), direction / radius))
            corners.append((angle, direction))
            pieces.append(("line", float(rng.uniform(seg_lo, seg_hi)), 0.0))
        pts, bounds, _ = _sample_path(pieces)
        track_corners = tuple(
            CornerSegment(start=bounds[2 * k + 1], end=bounds[2 * k + 2],
                          angle_deg=angle, direction=direction)
            for k, (angle, direction) in enumerate(corners))
        track = Track(centerline=pts, half_width=spec.half_width_m, is_loop=False,
                      corner_segments=track_corners, name=spec.name, spec=spec)
        if not _self_intersects(track):
            return track
    raise TrackGenerationError(
        f"no non-self-intersecting layout for seed {spec.seed} after {max_attempts} attempts")


def _self_intersects(track: Track) -> bool:
    """True if two stretches of the drivable band overlap or nearly touch."""
    hw = track.half_width
    min_sep = int(math.ceil(math.pi * (hw + 1.0) / SPACING))
    return _polyline_clearance(track.centerline, track.is_loop, min_sep) < 2.0 * hw + 2.0


def oval_track(straight: float = 100.0, radius: float = 40.0, half_width: float = 8.0,
               name: str = "oval") -> Track:
    """Closed stadium loop: two straights joined by two left-hand half circles."""
    pieces = [("line", straight, 0.0), ("arc", math.pi * radius, 1.0 / radius),
              ("line", straight, 0.0), ("arc", math.pi * radius, 1.0 / radius)]
    pts, bounds, total = _sample_path(pieces)
    if np.hypot(*(pts[-1] - pts[0])) < 1e-6:
        pts = pts[:-1]
    corners = (CornerSegment(bounds[1], bounds[2], 180.0, 1),
               CornerSegment(bounds[3], bounds[4], 180.0, 1))
    return Track(centerline=pts, half_width=half_width, is_loop=True,
                 corner_segments=corners, name=name)


def straight_track(length: float = 300.0, half_width: float = 8.0, name: str = "straight") -> Track:
    pts, _, _ = _sample_path([("line", length, 0.0)])
    return Track(centerline=pts, half_width=half_width, name=name)


def corner_mask(track: Track, s: float) -> bool:
    """True iff ``s`` lies in a corner segment, using [start, end)."""
    return any(c.contains(s) for c in track.corner_segments)


def corner_mask_array(track: Track, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    mask = np.zeros(s.shape, dtype=bool)
    for c in track.corner_segments:
        mask |= (s >= c.start) & (s < c.end)
    return mask


# ---------------------------------------------------------------------------
# reference trajectories


class ReferenceSource(str, Enum):
    SCRIPTED_EXPERT = "ScriptedExpert"
    ROUGH_CENTERLINE = "RoughCenterline"
    RECORDED_FILE = "RecordedFile"


@dataclass(frozen=True)
class RefPoint:
    s: float
    x: float
    y: float
    psi_ref: float
    v_x_ref: float
    v_y_ref: float
    beta_ref: float

    @property
    def course(self) -> float:
        """Direction of travel along the reference (heading plus slip)."""
        return self.psi_ref + self.beta_ref


_FIELDS = ("s", "x", "y", "psi", "vx", "vy", "beta")


class ReferenceTrajectory:
    """Arc-length indexed reference states, stored column-wise."""

    def __init__(self, s, x, y, psi, vx, vy, beta, source: ReferenceSource,
                 is_loop: bool = False, total_length: float | None = None, name: str = "",
                 clearance: float | None = None):
        cols = [np.asarray(c, dtype=float) for c in (s, x, y, psi, vx, vy, beta)]
        n = len(cols[0])
        if any(len(c) != n for c in cols):
            raise ValueError("reference columns differ in length")
        if n < 11:
            raise ValueError("a reference trajectory needs at least 11 points")
        if not all(np.all(np.isfinite(c)) for c in cols):
            raise ValueError("reference trajectory contains non-finite values")
        if np.any(np.diff(cols[0]) <= 0):
            raise ValueError("arc length must be strictly increasing")
        self.s, self.x, self.y, self.psi, self.vx, self.vy, self.beta = cols
        self.psi = wrap_angles(self.psi)
        self.source = ReferenceSource(source)
        self.is_loop = is_loop
        self.name = name
        if total_length is None:
            total_length = float(self.s[-1])
            if is_loop:
                total_length += float(np.hypot(self.x[0] - self.x[-1], self.y[0] - self.y[-1]))
        self.total_length = float(total_length)
        self.xy = np.column_stack([self.x, self.y])
        if clearance is None:
            clearance = _polyline_clearance(self.xy, is_loop, SEARCH_WINDOW // 2)
        self.clearance = clearance

    def __len__(self) -> int:
        return len(self.s)

    def point(self, i: int) -> RefPoint:
        return RefPoint(float(self.s[i]), float(self.x[i]), float(self.y[i]), float(self.psi[i]),
                        float(self.vx[i]), float(self.vy[i]), float(self.beta[i]))

    @property
    def points(self) -> list[RefPoint]:
        return [self.point(i) for i in range(len(self))]

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.vx, self.vy)

    def at(self, s: float) -> RefPoint:
        """Linear interpolation at arc length ``s`` (wrapped on loops, clamped otherwise)."""
        query = s
        if self.is_loop:
            s = s % self.total_length
            # closing segment runs from the last sample back to the first
            s_ext = np.append(self.s, self.total_length)
            j = int(np.searchsorted(s_ext, s, side="right")) - 1
            j = min(max(j, 0), len(self.s) - 1)
            i0, i1 = j, (j + 1) % len(self.s)
            s0, s1 = s_ext[j], s_ext[j + 1]
        else:
            s = min(max(s, float(self.s[0])), float(self.s[-1]))
            j = int(np.searchsorted(self.s, s, side="right")) - 1
            j = min(max(j, 0), len(self.s) - 2)
            i0, i1 = j, j + 1
            s0, s1 = self.s[i0], self.s[i1]
        w = 0.0 if s1 == s0 else (s - s0) / (s1 - s0)
        w = min(max(w, 0.0), 1.0)

        def lerp(col):
            return float(col[i0] + w * (col[i1] - col[i0]))

        psi = wrap_angle(self.psi[i0] + w * wrap_angle(self.psi[i1] - self.psi[i0]))
        out_s = query if self.is_loop else s
        return RefPoint(out_s, lerp(self.x), lerp(self.y), psi, lerp(self.vx), lerp(self.vy),
                        lerp(self.beta))

    def to_dict(self) -> dict:
        return {
            "format": TRAJECTORY_FORMAT,
            "version": FORMAT_VERSION,
            "name": self.name,
            "source": self.source.value,
            "is_loop": self.is_loop,
            "total_length": self.total_length,
            "columns": list(_FIELDS),
            "points": [[float(v) for v in row] for row in zip(
                self.s, self.x, self.y, self.psi, self.vx, self.vy, self.beta)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReferenceTrajectory":
        if data.get("format") != TRAJECTORY_FORMAT:
            raise ValueError(f"not a trajectory document: format={data.get('format')!r}")
        if data.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported trajectory version {data.get('version')}")
        cols = np.array(data["points"], dtype=float).T
        return cls(*cols, source=data["source"], is_loop=data["is_loop"],
                   total_length=data["total_length"], name=data.get("name", ""))


def save_trajectory(traj: ReferenceTrajectory, path) -> None:
    Path(path).write_text(dumps_json(traj.to_dict()))


def load_trajectory(path) -> ReferenceTrajectory:
    return ReferenceTrajectory.from_dict(json.loads(Path(path).read_text()))


def nearest_point(traj: ReferenceTrajectory, pos, hint_index: int | None = None) -> tuple[int, float]:
    """Closest reference index and signed cross-track distance (left of path positive)."""
    i = _nearest(traj.xy, traj.is_loop, traj.clearance, pos, hint_index)
    course = traj.psi[i] + traj.beta[i]
    dx = float(pos[0]) - traj.x[i]
    dy = float(pos[1]) - traj.y[i]
    return i, math.cos(course) * dy - math.sin(course) * dx


def lookahead(traj: ReferenceTrajectory, index: int, n: int = 10, spacing: float = 2.0) -> list[RefPoint]:
    """``n`` interpolated reference points ahead of ``index``, ``spacing`` metres apart."""
    if n < 1:
        raise ValueError("n must be >= 1")
    s0 = float(traj.s[index])
    return [traj.at(s0 + k * spacing) for k in range(1, n + 1)]


def _drift_peak_deg(angle_deg: float) -> float:
    angles, peaks = zip(*DRIFT_PEAK_TABLE)
    return float(np.interp(angle_deg, angles, peaks))


def scripted_expert_reference(track: Track, params: VehicleParams) -> ReferenceTrajectory:
    """Racing-line stand-in for a human drift demonstration.

    Follows the centerline. Speed is capped by curvature and friction, then
    made reachable with forward (engine) and backward (scrub) passes; inside
    each corner the reference slip rises and falls as a half sine whose peak
    depends on the corner angle, pointing the nose into the turn.
    """
    mu = min(params.peak_friction)
    a_lat = mu * GRAVITY
    v_top = params.top_speed
    kappa = np.abs(track.curvature())
    with np.errstate(divide="ignore"):
        v_cap = np.where(kappa > 1e-9, np.sqrt(a_lat / np.maximum(kappa, 1e-12)), v_top)
    v = np.minimum(v_cap, v_top)
    s = track.s
    a_dec = EXPERT_DECEL_FRACTION * a_lat
    for i in range(len(v) - 2, -1, -1):
        ds = s[i + 1] - s[i]
        v[i] = min(v[i], math.sqrt(v[i + 1] ** 2 + 2.0 * a_dec * ds))
    for i in range(1, len(v)):
        ds = s[i] - s[i - 1]
        a_acc = max((params.max_engine_force - params.drag_coefficient * v[i - 1] ** 2)
                    / params.mass, 0.0)
        v[i] = min(v[i], math.sqrt(v[i - 1] ** 2 + 2.0 * a_acc * ds))

    beta = np.zeros(len(s))
    for c in track.corner_segments:
        inside = (s >= c.start) & (s < c.end)
        frac = (s[inside] - c.start) / max(c.end - c.start, 1e-9)
        beta[inside] = -c.direction * math.radians(_drift_peak_deg(c.angle_deg)) * np.sin(math.pi * frac)

    tangent = track.tangent_headings()
    return ReferenceTrajectory(
        s=s, x=track.centerline[:, 0], y=track.centerline[:, 1], psi=tangent - beta,
        vx=v * np.cos(beta), vy=v * np.sin(beta), beta=beta,
        source=ReferenceSource.SCRIPTED_EXPERT, is_loop=track.is_loop,
        total_length=track.total_length, name=track.name, clearance=track.clearance)


def rough_centerline_reference(track: Track, v_const: float) -> ReferenceTrajectory:
    """Centerline waypoints with tangent headings, zero slip and constant speed."""
    if not v_const > 0:
        raise ValueError("v_const must be positive")
    n = len(track.centerline)
    zeros = np.zeros(n)
    return ReferenceTrajectory(
        s=track.s, x=track.centerline[:, 0], y=track.centerline[:, 1],
        psi=track.tangent_headings(), vx=np.full(n, float(v_const)), vy=zeros, beta=zeros,
        source=ReferenceSource.ROUGH_CENTERLINE, is_loop=track.is_loop,
        total_length=track.total_length, name=track.name, clearance=track.clearance)


def recorded_reference(states, name: str = "recorded") -> ReferenceTrajectory:
    """Turn a driven sequence of vehicle states into a reference trajectory.

    Samples closer than 1 cm to the previous kept one are dropped so arc length
    stays strictly increasing.
    """
    kept = []
    s_acc = 0.0
    last = None
    for st in states:
        if last is not None:
            d = math.hypot(st.x - last.x, st.y - last.y)
            if d < 0.01:
                continue
            s_acc += d
        kept.append((s_acc, st))
        last = st
    s = [k for k, _ in kept]
    sts = [st for _, st in kept]
    return ReferenceTrajectory(
        s=s, x=[st.x for st in sts], y=[st.y for st in sts], psi=[st.psi for st in sts],
        vx=[st.v_x for st in sts], vy=[st.v_y for st in sts],
        beta=[st.slip_angle() for st in sts], source=ReferenceSource.RECORDED_FILE, name=name)
