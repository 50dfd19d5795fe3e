"""Search-region grid: geometry, traversal costmap routing, and target placement.

The region is a 2D grid of square cells laid over the bounding box of a search
polygon. Cells are addressed either as (row, col) pairs or as flat indices in
row-major order. Row 0 is the north edge: heading N decreases the row index,
heading E increases the column index.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
import shapely

HEADINGS = ("N", "E", "S", "W")
HEADING_STEPS = {"N": (-1, 0), "E": (0, 1), "S": (1, 0), "W": (0, -1)}


class GridError(ValueError):
    """Invalid region geometry, costmap, or placement request."""


@dataclass(frozen=True, eq=False)
class SearchRegion:
    """Immutable description of the gridded search area.

    ``traversal_cost`` holds nonnegative per-cell ground costs with ``inf``
    marking impassable cells. ``in_region`` flags cells whose centre falls
    inside (or on the boundary of) the search polygon. Safe to share
    read-only across agents.
    """

    rows: int
    cols: int
    cell_size_m: float
    polygon: tuple[tuple[float, float], ...]
    origin_xy: tuple[float, float]
    traversal_cost: np.ndarray
    in_region: np.ndarray

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def flatten(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise GridError(f"cell ({row}, {col}) outside {self.rows}x{self.cols} grid")
        return row * self.cols + col

    def unflatten(self, cell: int) -> tuple[int, int]:
        if not 0 <= cell < self.n_cells:
            raise GridError(f"flat index {cell} outside grid of {self.n_cells} cells")
        return divmod(cell, self.cols)

    def cell_center(self, cell: int) -> tuple[float, float]:
        """Centre of a cell in map coordinates (metres)."""
        row, col = self.unflatten(cell)
        x0, y0 = self.origin_xy
        x = x0 + (col + 0.5) * self.cell_size_m
        y = y0 + (self.rows - row - 0.5) * self.cell_size_m
        return x, y

    def center_distance_m(self, a: int, b: int) -> float:
        ax, ay = self.cell_center(a)
        bx, by = self.cell_center(b)
        return math.hypot(ax - bx, ay - by)

    def is_passable(self, cell: int) -> bool:
        return bool(np.isfinite(self.traversal_cost.flat[cell]))

    def is_in_region(self, cell: int) -> bool:
        return bool(self.in_region.flat[cell])

    @property
    def in_region_cells(self) -> np.ndarray:
        """Flat indices of all in-region cells, ascending."""
        return np.flatnonzero(self.in_region.ravel())

    @property
    def ground_cells(self) -> np.ndarray:
        """Flat indices of in-region cells a ground agent may occupy."""
        mask = self.in_region.ravel() & np.isfinite(self.traversal_cost.ravel())
        return np.flatnonzero(mask)

    def neighbors(self, cell: int) -> list[tuple[int, int]]:
        """4-connected neighbours as (flat index, entry cost) pairs."""
        row, col = self.unflatten(cell)
        out = []
        for dr, dc in HEADING_STEPS.values():
            r, c = row + dr, col + dc
            if 0 <= r < self.rows and 0 <= c < self.cols:
                out.append((r * self.cols + c, float(self.traversal_cost[r, c])))
        return out


@dataclass(frozen=True)
class GroundTruth:
    """Hidden target layout: sparse 0/1 vector over the flattened grid."""

    beta: np.ndarray
    ooi_cells: frozenset[int]

    @property
    def n_oois(self) -> int:
        return len(self.ooi_cells)


@dataclass(frozen=True)
class Pose:
    """Ground-agent pose: occupied cell and one of four discrete headings."""

    cell: int
    heading: str = "N"

    def __post_init__(self):
        if self.heading not in HEADINGS:
            raise GridError(f"unknown heading {self.heading!r}")


@dataclass(frozen=True)
class Path:
    """Minimal-cost route between two cells, inclusive of both endpoints."""

    cells: tuple[int, ...]
    cost: float
    length_m: float


def build_region(
    polygon: list[tuple[float, float]],
    cell_size_m: float = 30.0,
    costmap: np.ndarray | float | None = None,
) -> SearchRegion:
    """Grid the bounding box of ``polygon`` into cells of ``cell_size_m``.

    ``costmap`` may be a scalar (uniform cost), a dense (rows, cols) array
    matching the derived grid with ``inf`` for impassable cells, or ``None``
    for uniform unit cost. Cell centres on the polygon boundary count as
    in-region.
    """
    if len(polygon) < 3:
        raise GridError(f"polygon needs at least 3 vertices, got {len(polygon)}")
    if cell_size_m <= 0:
        raise GridError("cell_size_m must be positive")
    poly = shapely.Polygon(polygon)
    if not poly.is_valid or poly.area <= 0:
        raise GridError("degenerate polygon: zero area or self-intersecting")

    xmin, ymin, xmax, ymax = poly.bounds
    cols = max(1, math.ceil((xmax - xmin) / cell_size_m - 1e-9))
    rows = max(1, math.ceil((ymax - ymin) / cell_size_m - 1e-9))

    if costmap is None:
        cost = np.ones((rows, cols))
    elif np.isscalar(costmap):
        cost = np.full((rows, cols), float(costmap))
    else:
        cost = np.asarray(costmap, dtype=float)
        if cost.shape != (rows, cols):
            raise GridError(
                f"costmap shape {cost.shape} does not match derived grid ({rows}, {cols})"
            )
        cost = cost.copy()
    if np.any(cost[np.isfinite(cost)] < 0):
        raise GridError("traversal costs must be nonnegative")

    cs = np.arange(cols)
    rs = np.arange(rows)
    xs = xmin + (cs + 0.5) * cell_size_m
    ys = ymin + (rows - rs - 0.5) * cell_size_m
    gx, gy = np.meshgrid(xs, ys)
    centers = shapely.points(gx.ravel(), gy.ravel())
    in_region = shapely.covers(poly, centers).reshape(rows, cols)

    cost.setflags(write=False)
    in_region.setflags(write=False)
    return SearchRegion(
        rows=rows,
        cols=cols,
        cell_size_m=float(cell_size_m),
        polygon=tuple((float(x), float(y)) for x, y in polygon),
        origin_xy=(float(xmin), float(ymin)),
        traversal_cost=cost,
        in_region=in_region,
    )


def shortest_paths(region: SearchRegion, source: int) -> tuple[np.ndarray, np.ndarray]:
    """Single-source minimal-cost distances over the 4-connected passable grid.

    Entering cell ``v`` costs ``traversal_cost[v] * cell_size_m``; the source
    cell's own cost is never charged. Among equal-cost routes the predecessor
    with the smallest flat index wins, so reconstructed paths are
    deterministic. Returns (dist, parent); unreachable cells have ``inf``
    distance and parent -1.
    """
    n = region.n_cells
    dist = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    if not region.is_passable(source):
        raise GridError(f"source cell {source} is impassable")
    dist[source] = 0.0
    scale = region.cell_size_m
    heap = [(0.0, source)]
    done = np.zeros(n, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, entry_cost in region.neighbors(u):
            if not np.isfinite(entry_cost):
                continue
            nd = d + entry_cost * scale
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
            elif nd == dist[v] and not done[v] and u < parent[v]:
                parent[v] = u
    return dist, parent


def traversal_path(
    region: SearchRegion,
    source: int,
    target: int,
    dist_parent: tuple[np.ndarray, np.ndarray] | None = None,
) -> Path | None:
    """Minimal-cost 4-connected path, or ``None`` when the target is unreachable.

    Callers evaluating many targets from one source should pass a precomputed
    ``shortest_paths`` result.
    """
    for cell, what in ((source, "source"), (target, "target")):
        if not region.is_passable(cell):
            raise GridError(f"{what} cell {cell} is impassable")
    if source == target:
        return Path(cells=(source,), cost=0.0, length_m=0.0)
    dist, parent = dist_parent if dist_parent is not None else shortest_paths(region, source)
    if not np.isfinite(dist[target]):
        return None
    cells = [target]
    while cells[-1] != source:
        cells.append(int(parent[cells[-1]]))
    cells.reverse()
    return Path(
        cells=tuple(cells),
        cost=float(dist[target]),
        length_m=(len(cells) - 1) * region.cell_size_m,
    )


def place_oois(
    region: SearchRegion,
    count: int,
    rng: np.random.Generator,
    passable_only: bool = False,
) -> GroundTruth:
    """Sample ``count`` distinct in-region cells uniformly without replacement.

    Deterministic for a fixed generator state. ``passable_only`` additionally
    restricts the pool to cells ground agents can reach, which keeps every
    target confirmable in all-ground-team scenarios.
    """
    pool = region.ground_cells if passable_only else region.in_region_cells
    if count < 0:
        raise GridError("count must be nonnegative")
    if count > len(pool):
        raise GridError(f"cannot place {count} targets in {len(pool)} candidate cells")
    beta = np.zeros(region.n_cells)
    chosen = rng.choice(pool, size=count, replace=False) if count else np.empty(0, dtype=int)
    beta[chosen] = 1.0
    beta.setflags(write=False)
    return GroundTruth(beta=beta, ooi_cells=frozenset(int(c) for c in chosen))


def truth_from_cells(region: SearchRegion, cells: list[tuple[int, int]]) -> GroundTruth:
    """Ground truth from explicit (row, col) target positions."""
    flat = []
    for row, col in cells:
        m = region.flatten(row, col)
        if not region.is_in_region(m):
            raise GridError(f"target cell ({row}, {col}) lies outside the search polygon")
        flat.append(m)
    if len(set(flat)) != len(flat):
        raise GridError("duplicate target cells")
    beta = np.zeros(region.n_cells)
    beta[flat] = 1.0
    beta.setflags(write=False)
    return GroundTruth(beta=beta, ooi_cells=frozenset(flat))
