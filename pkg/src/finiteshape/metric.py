"""Finite ground samples of compact metric spaces.

A :class:`MetricGround` is a finite point set with a full symmetric distance
table.  It stands in for a compact metric space: ``density`` is the claimed
covering radius, i.e. every point of the idealized space lies within
``density`` of some ground point.  Exactly represented finite spaces carry
``density = 0``.

Generators are provided for the standard test spaces (two points, circle,
interval, Cantor dust, and the sin(1/x) "Warsaw" curve closed by a
rectangular arc).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

VALID_KINDS = ("two_points", "circle", "interval", "cantor", "warsaw_circle", "custom")


class GroundValidationError(ValueError):
    """Raised when a distance table fails the metric axioms."""


@dataclass(frozen=True)
class MetricGround:
    """Finite metric sample: optional coordinates, distance table, covering claim.

    ``dist`` is an ``n x n`` symmetric nonnegative array with zero diagonal
    satisfying the triangle inequality.  ``density`` is the claimed covering
    radius of the sample inside the idealized space (0 means the sample *is*
    the space).  Immutable after construction; safe to share between workers.
    """

    dist: np.ndarray
    coords: np.ndarray | None = None
    density: float = 0.0
    kind: str = "custom"

    def __post_init__(self):
        self.dist.setflags(write=False)
        if self.coords is not None:
            self.coords.setflags(write=False)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def diameter(self) -> float:
        return float(self.dist.max())

    def max_nearest_neighbor(self) -> float:
        """Largest distance from a point to the rest of the sample."""
        if self.n == 1:
            return 0.0
        d = self.dist + np.diag(np.full(self.n, np.inf))
        return float(d.min(axis=1).max())

    @staticmethod
    def from_coords(coords, density: float = 0.0, kind: str = "custom") -> "MetricGround":
        # Euclidean tables satisfy the triangle inequality by construction;
        # the exhaustive/sampled check runs on from_matrix inputs only.
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] < 1:
            raise GroundValidationError("coordinate array must be (n, d) with n >= 1")
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        dist = 0.5 * (dist + dist.T)  # enforce exact symmetry against fp noise
        np.fill_diagonal(dist, 0.0)
        return MetricGround(dist=dist, coords=coords, density=float(density), kind=kind)

    @staticmethod
    def from_matrix(dist, density: float = 0.0, coords=None, kind: str = "custom") -> "MetricGround":
        dist = np.asarray(dist, dtype=float)
        _validate_distance_table(dist)
        return MetricGround(dist=dist, coords=coords, density=float(density), kind=kind)


def _validate_distance_table(dist: np.ndarray) -> None:
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise GroundValidationError(f"distance table must be square, got shape {dist.shape}")
    n = dist.shape[0]
    if not np.array_equal(dist, dist.T):
        i, j = map(int, np.argwhere(dist != dist.T)[0])
        raise GroundValidationError(f"asymmetric matrix: d({i},{j})={dist[i, j]!r} != d({j},{i})={dist[j, i]!r}")
    if (dist < 0).any():
        i, j = map(int, np.argwhere(dist < 0)[0])
        raise GroundValidationError(f"negative entry: d({i},{j})={dist[i, j]!r}")
    bad = np.flatnonzero(np.diag(dist) != 0.0)
    if bad.size:
        raise GroundValidationError(f"nonzero diagonal at index {int(bad[0])}")
    _check_triangle(dist)


def _check_triangle(dist: np.ndarray, exhaustive_limit: int = 512, samples: int = 256) -> None:
    # Exhaustive over all midpoints k for n <= exhaustive_limit, sampled above.
    n = dist.shape[0]
    tol = 1e-12 * max(1.0, float(dist.max()))
    if n <= exhaustive_limit:
        ks = range(n)
    else:
        ks = np.unique(np.linspace(0, n - 1, samples).astype(int))
    for k in ks:
        via = dist[:, int(k)][:, None] + dist[int(k), :][None, :]
        viol = dist > via + tol
        if viol.any():
            i, j = map(int, np.argwhere(viol)[0])
            raise GroundValidationError(
                f"triangle inequality violated for ({i},{int(k)},{j}): "
                f"d({i},{j})={dist[i, j]!r} > d({i},{int(k)})+d({int(k)},{j})={via[i, j]!r}"
            )


@dataclass(frozen=True)
class SpaceSpec:
    """Recipe for a generated test space.

    ``n`` is the sample count.  ``radius``, ``separation``, ``length`` and
    ``cantor_depth`` apply to their respective kinds.  ``seed`` is recorded for
    reproducibility (the built-in generators are fully deterministic).
    """

    kind: str
    n: int = 2
    radius: float = 1.0
    separation: float = 1.0
    length: float = 1.0
    cantor_depth: int = 4
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in VALID_KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {VALID_KINDS}")
        if self.n < 1:
            raise ValueError(f"sample count must be >= 1, got {self.n}")
        for name in ("radius", "separation", "length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.cantor_depth < 1:
            raise ValueError("cantor_depth must be >= 1")


def generate(spec: SpaceSpec) -> MetricGround:
    """Build the ground sample named by ``spec``.

    The claimed density is the honest covering radius of the sample inside the
    idealized space (0 for spaces the sample represents exactly).
    """
    spec.validate()
    if spec.kind == "two_points":
        coords = np.array([[0.0, 0.0], [spec.separation, 0.0]])
        return MetricGround.from_coords(coords, density=0.0, kind=spec.kind)
    if spec.kind == "circle":
        theta = 2.0 * np.pi * np.arange(spec.n) / spec.n
        coords = spec.radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        density = spec.radius * 2.0 * math.sin(math.pi / (2 * spec.n)) if spec.n > 1 else 2 * spec.radius
        return MetricGround.from_coords(coords, density=density, kind=spec.kind)
    if spec.kind == "interval":
        if spec.n == 1:
            return MetricGround.from_coords(np.array([[spec.length / 2]]), density=spec.length / 2, kind=spec.kind)
        xs = np.linspace(0.0, spec.length, spec.n)
        h = spec.length / (spec.n - 1)
        return MetricGround.from_coords(xs[:, None], density=h / 2, kind=spec.kind)
    if spec.kind == "cantor":
        return _cantor_ground(spec.cantor_depth)
    if spec.kind == "warsaw_circle":
        return _warsaw_ground(spec.n)
    raise ValueError("custom grounds are built from files or arrays, not generated; see load_ground")


def _cantor_ground(depth: int) -> MetricGround:
    # Endpoints of all depth-level middle-thirds intervals, metric from R.
    segs = [(0.0, 1.0)]
    for _ in range(depth):
        nxt = []
        for a, b in segs:
            t = (b - a) / 3.0
            nxt.append((a, a + t))
            nxt.append((b - t, b))
        segs = nxt
    pts = sorted({x for s in segs for x in s})
    density = 3.0 ** (-depth) / 2.0
    return MetricGround.from_coords(np.array(pts)[:, None], density=density, kind="cantor")


_WARSAW_W = 2.0 / math.pi


def _warsaw_graph_table(x_min: float, grid: int):
    # Arc-length table of the graph y = sin(1/x), traversed from x = 2/pi down
    # to x = x_min.  In u = 1/x coordinates ds = sqrt(cos(u)^2 + u^-4) du.
    u = np.linspace(math.pi / 2.0, 1.0 / x_min, grid)
    integrand = np.sqrt(np.cos(u) ** 2 + u ** (-4.0))
    du = np.diff(u)
    s = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * du)])
    return u, s


def _warsaw_ground(n: int) -> MetricGround:
    """Sample the Warsaw circle uniformly in arc length.

    Pieces: the limit segment {0} x [-1, 1], the closing rectangular arc
    (0,-1) -> (0,-1.5) -> (w,-1.5) -> (w,1) with w = 2/pi, and the graph of
    sin(1/x) from x = w down to a cutoff x_min.  The cutoff is chosen at half
    the arc-length spacing so the unsampled tail stays within the claimed
    density of the segment samples.
    """
    if n < 8:
        raise ValueError("warsaw_circle needs at least 8 samples")
    w = _WARSAW_W
    seg_len = 2.0
    arc_len = 0.5 + w + 2.5

    x_min = 0.01
    delta = 0.03
    for _ in range(60):
        _, s = _warsaw_graph_table(x_min, 20000)
        total = seg_len + arc_len + float(s[-1])
        new_delta = total / (n - 1)
        new_x_min = new_delta / 2.0
        if abs(new_x_min - x_min) < 1e-14:
            delta = new_delta
            x_min = new_x_min
            break
        delta, x_min = new_delta, new_x_min

    u_tab, s_tab = _warsaw_graph_table(x_min, max(100_000, 50 * n))
    graph_len = float(s_tab[-1])

    k_seg = max(1, round(seg_len / delta))
    k_arc = max(1, round(arc_len / delta))
    k_graph = n - 1 - k_seg - k_arc
    if k_graph < 1:
        raise ValueError("warsaw_circle sample count too small for its arc budget")

    pts = []
    # limit segment, top to bottom, start inclusive / end exclusive
    for j in range(k_seg):
        pts.append((0.0, 1.0 - (j * seg_len / k_seg)))
    # closing arc: down, across, up
    for j in range(k_arc):
        s = j * arc_len / k_arc
        if s <= 0.5:
            pts.append((0.0, -1.0 - s))
        elif s <= 0.5 + w:
            pts.append((s - 0.5, -1.5))
        else:
            pts.append((w, -1.5 + (s - 0.5 - w)))
    # sin(1/x) graph from (w, 1) toward the cutoff
    s_targets = np.arange(k_graph) * (graph_len / k_graph)
    u_vals = np.interp(s_targets, s_tab, u_tab)
    for u in u_vals:
        pts.append((1.0 / u, math.sin(u)))
    u_end = u_tab[-1]
    pts.append((1.0 / u_end, math.sin(u_end)))

    coords = np.array(pts)
    assert coords.shape[0] == n

    spacing = max(seg_len / k_seg, arc_len / k_arc, graph_len / k_graph)
    tail = math.sqrt(x_min ** 2 + (seg_len / k_seg / 2.0) ** 2)
    density = max(spacing / 2.0, tail)
    return MetricGround.from_coords(coords, density=density, kind="warsaw_circle")


def load_ground(path: str, fmt: str = "coords_csv", density: float = 0.0) -> MetricGround:
    """Read a ground sample from disk.

    ``coords_csv``: header ``id,x,y[,z...]``, one row per point, Euclidean
    metric.  ``distmatrix_csv``: square numeric matrix, row-major, no header,
    validated against the metric axioms.  Loaded grounds default to
    ``density = 0`` (treated as exactly represented finite spaces).
    """
    if fmt == "coords_csv":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or len(rows) < 2:
            raise GroundValidationError(f"{path}: no data rows")
        header = [c.strip().lower() for c in rows[0]]
        if not header or header[0] != "id":
            raise GroundValidationError(f"{path}: expected header starting with 'id'")
        try:
            coords = np.array([[float(v) for v in row[1:]] for row in rows[1:] if row])
        except ValueError as exc:
            raise GroundValidationError(f"{path}: parse failure: {exc}") from exc
        if coords.ndim != 2 or coords.shape[1] < 1:
            raise GroundValidationError(f"{path}: malformed coordinate rows")
        return MetricGround.from_coords(coords, density=density)
    if fmt == "distmatrix_csv":
        try:
            dist = np.loadtxt(path, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise GroundValidationError(f"{path}: parse failure: {exc}") from exc
        return MetricGround.from_matrix(dist, density=density)
    raise ValueError(f"unknown format {fmt!r}; expected coords_csv or distmatrix_csv")


def write_coords_csv(ground: MetricGround, path: str) -> None:
    if ground.coords is None:
        raise ValueError("ground has no coordinates to export")
    dim = ground.coords.shape[1]
    names = ["x", "y", "z"] + [f"x{k}" for k in range(3, dim)]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["id"] + names[:dim])
        for i, row in enumerate(ground.coords):
            out.writerow([i] + [repr(float(v)) for v in row])


def write_distmatrix_csv(ground: MetricGround, path: str) -> None:
    with open(path, "w", newline="") as fh:
        for row in ground.dist:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
