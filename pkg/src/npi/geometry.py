"""Regions, distance targets, grids, and Monte Carlo measure.

Regions describe open sets through a small closed algebra (boxes, balls,
annuli around distance targets, cones, half-spaces, and boolean
combinators). Membership is always strict: boundaries carry no measure,
so quadrature never sees the difference.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import ball_volume
from .errors import ConfigError

GEOMETRY_SCHEMA = "geometry_v1"

_UNIT_TOL = 1e-12


def _pt(x) -> tuple:
    if np.isscalar(x):
        return (float(x),)
    return tuple(float(v) for v in np.asarray(x, dtype=float).ravel())


def _as_points(x, n: int):
    """Return (points (m, n), scalar_input flag)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim <= 1:
        return arr.reshape(1, n), True
    return arr.reshape(-1, n), False


def _check_unit(v: tuple, what: str) -> None:
    nrm = math.sqrt(sum(c * c for c in v))
    if abs(nrm - 1.0) > _UNIT_TOL:
        raise ConfigError(f"{what} must be unit-norm (|norm - 1| <= {_UNIT_TOL}), got norm {nrm}")


# ---------------------------------------------------------------------------
# distance targets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Point:
    """Single point target."""

    location: tuple

    def __post_init__(self):
        object.__setattr__(self, "location", _pt(self.location))

    @property
    def n(self) -> int:
        return len(self.location)

    def distance_batch(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - np.asarray(self.location), axis=-1)

    def projection_batch(self, pts: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.location), pts.shape).copy()

    def bbox(self):
        c = np.asarray(self.location)
        return c.copy(), c.copy()

    def to_dict(self) -> dict:
        return {"type": "Point", "location": list(self.location)}


@dataclass(frozen=True)
class Segment:
    """Closed line segment between two endpoints."""

    a: tuple
    b: tuple

    def __post_init__(self):
        object.__setattr__(self, "a", _pt(self.a))
        object.__setattr__(self, "b", _pt(self.b))
        if len(self.a) != len(self.b):
            raise ConfigError("segment endpoints must share a dimension")

    @property
    def n(self) -> int:
        return len(self.a)

    def projection_batch(self, pts: np.ndarray) -> np.ndarray:
        a = np.asarray(self.a)
        d = np.asarray(self.b) - a
        denom = float(d @ d)
        if denom == 0.0:
            return np.broadcast_to(a, pts.shape).copy()
        t = np.clip((pts - a) @ d / denom, 0.0, 1.0)
        return a + t[..., None] * d

    def distance_batch(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - self.projection_batch(pts), axis=-1)

    def bbox(self):
        a, b = np.asarray(self.a), np.asarray(self.b)
        return np.minimum(a, b), np.maximum(a, b)

    def to_dict(self) -> dict:
        return {"type": "Segment", "a": list(self.a), "b": list(self.b)}


@dataclass(frozen=True)
class Circle:
    """Circle of given radius in the plane (ambient n = 2)."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _pt(self.center))
        if len(self.center) != 2:
            raise ConfigError("Circle target requires ambient dimension 2")
        if self.radius <= 0.0:
            raise ConfigError("Circle radius must be positive")

    @property
    def n(self) -> int:
        return 2

    def distance_batch(self, pts: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(pts - np.asarray(self.center), axis=-1)
        return np.abs(r - self.radius)

    def projection_batch(self, pts: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center)
        v = pts - c
        r = np.linalg.norm(v, axis=-1, keepdims=True)
        out = np.empty_like(pts)
        deg = r[..., 0] == 0.0
        safe = ~deg
        out[safe] = c + self.radius * v[safe] / r[safe]
        # center itself: every circle point is equidistant; take the
        # lexicographically smallest one
        out[deg] = c + np.array([-self.radius, 0.0])
        return out

    def bbox(self):
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    def to_dict(self) -> dict:
        return {"type": "Circle", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class HyperplaneH:
    """Coordinate subspace keeping the listed axes, rest pinned to zero.

    ``keep=(0,)`` in ambient n=2 is the x-axis line; ``keep=()`` is the
    origin. The induced dimension m equals ``len(keep)``.
    """

    keep: tuple
    n: int

    def __post_init__(self):
        object.__setattr__(self, "keep", tuple(int(i) for i in self.keep))
        if any(i < 0 or i >= self.n for i in self.keep):
            raise ConfigError("keep indices out of range")
        if len(set(self.keep)) != len(self.keep):
            raise ConfigError("keep indices must be distinct")

    @property
    def m(self) -> int:
        return len(self.keep)

    def _dropped(self) -> list:
        return [i for i in range(self.n) if i not in self.keep]

    def distance_batch(self, pts: np.ndarray) -> np.ndarray:
        dropped = self._dropped()
        return np.linalg.norm(pts[..., dropped], axis=-1)

    def projection_batch(self, pts: np.ndarray) -> np.ndarray:
        out = pts.copy()
        out[..., self._dropped()] = 0.0
        return out

    def bbox(self):
        return None  # unbounded unless m = 0

    def to_dict(self) -> dict:
        return {"type": "HyperplaneH", "keep": list(self.keep), "n": self.n}


@dataclass(frozen=True)
class BoxBoundaryFace:
    """One closed face of a box boundary: the face where axis = side."""

    lo: tuple
    hi: tuple
    axis: int
    side: int  # 0 -> lo face, 1 -> hi face

    def __post_init__(self):
        object.__setattr__(self, "lo", _pt(self.lo))
        object.__setattr__(self, "hi", _pt(self.hi))
        if self.side not in (0, 1):
            raise ConfigError("face side must be 0 or 1")
        if not 0 <= self.axis < len(self.lo):
            raise ConfigError("face axis out of range")

    @property
    def n(self) -> int:
        return len(self.lo)

    def projection_batch(self, pts: np.ndarray) -> np.ndarray:
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        out = np.clip(pts, lo, hi)
        out[..., self.axis] = (hi if self.side else lo)[self.axis]
        return out

    def distance_batch(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - self.projection_batch(pts), axis=-1)

    def bbox(self):
        lo = np.asarray(self.lo).copy()
        hi = np.asarray(self.hi).copy()
        plane = (self.hi if self.side else self.lo)[self.axis]
        lo[self.axis] = hi[self.axis] = plane
        return lo, hi

    def to_dict(self) -> dict:
        return {"type": "BoxBoundaryFace", "lo": list(self.lo), "hi": list(self.hi),
                "axis": self.axis, "side": self.side}


DISTANCE_TARGETS = (Point, Segment, Circle, HyperplaneH, BoxBoundaryFace)


def distance(target, x):
    """Euclidean distance from x (point or batch) to the target."""
    pts, scalar = _as_points(x, target.n)
    d = target.distance_batch(pts)
    return float(d[0]) if scalar else d


def projection(target, x):
    """Metric projection of x onto the target (deterministic tie-break)."""
    pts, scalar = _as_points(x, target.n)
    p = target.projection_batch(pts)
    return p[0] if scalar else p


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", _pt(self.lo))
        object.__setattr__(self, "hi", _pt(self.hi))
        if len(self.lo) != len(self.hi):
            raise ConfigError("box corners must share a dimension")
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ConfigError("box needs lo <= hi componentwise")

    @property
    def n(self) -> int:
        return len(self.lo)

    def contains_batch(self, pts: np.ndarray) -> np.ndarray:
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return np.all((pts > lo) & (pts < hi), axis=-1)

    def bbox(self):
        return np.asarray(self.lo).copy(), np.asarray(self.hi).copy()

    def to_dict(self) -> dict:
        return {"type": "Box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _pt(self.center))
        if self.radius <= 0.0:
            raise ConfigError("ball radius must be positive")

    @property
    def n(self) -> int:
        return len(self.center)

    def contains_batch(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - np.asarray(self.center), axis=-1) < self.radius

    def bbox(self):
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    def to_dict(self) -> dict:
        return {"type": "Ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class AnnulusAround:
    """Open annular neighborhood {inner < dist(x, target) < outer}."""

    target: object
    inner: float
    outer: float

    def __post_init__(self):
        if self.inner < 0.0 or self.outer <= self.inner:
            raise ConfigError("annulus needs 0 <= inner < outer")

    @property
    def n(self) -> int:
        return self.target.n

    def contains_batch(self, pts: np.ndarray) -> np.ndarray:
        d = self.target.distance_batch(pts)
        return (d > self.inner) & (d < self.outer)

    def bbox(self):
        inner_box = self.target.bbox()
        if inner_box is None:
            return None
        lo, hi = inner_box
        return lo - self.outer, hi + self.outer

    def to_dict(self) -> dict:
        return {"type": "AnnulusAround", "target": self.target.to_dict(),
                "inner": self.inner, "outer": self.outer}


@dataclass(frozen=True)
class Cone:
    """Open cone {y : (y - vertex).axis > cos(half_angle) ||y - vertex||}.

    Unbounded on its own; give explicit ``bounds`` or intersect with a
    bounded region before measuring.
    """

    vertex: tuple
    axis: tuple
    half_angle: float
    bounds: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "vertex", _pt(self.vertex))
        object.__setattr__(self, "axis", _pt(self.axis))
        if len(self.vertex) != len(self.axis):
            raise ConfigError("cone vertex/axis dimension mismatch")
        _check_unit(self.axis, "cone axis")
        if not 0.0 < self.half_angle <= math.pi:
            raise ConfigError("cone half-angle must lie in (0, pi]")
        if self.bounds is not None:
            lo, hi = self.bounds
            object.__setattr__(self, "bounds", (_pt(lo), _pt(hi)))

    @property
    def n(self) -> int:
        return len(self.vertex)

    def contains_batch(self, pts: np.ndarray) -> np.ndarray:
        s = pts - np.asarray(self.vertex)
        dot = s @ np.asarray(self.axis)
        return dot > math.cos(self.half_angle) * np.linalg.norm(s, axis=-1)

    def bbox(self):
        if self.bounds is None:
            return None
        return np.asarray(self.bounds[0]).copy(), np.asarray(self.bounds[1]).copy()

    def to_dict(self) -> dict:
        d = {"type": "Cone", "vertex": list(self.vertex), "axis": list(self.axis),
             "half_angle": self.half_angle}
        if self.bounds is not None:
            d["bounds"] = [list(self.bounds[0]), list(self.bounds[1])]
        return d


@dataclass(frozen=True)
class HalfSpace:
    """Open half-space {x : (x - point).normal > 0}."""

    point: tuple
    normal: tuple

    def __post_init__(self):
        object.__setattr__(self, "point", _pt(self.point))
        object.__setattr__(self, "normal", _pt(self.normal))
        _check_unit(self.normal, "half-space normal")

    @property
    def n(self) -> int:
        return len(self.point)

    def contains_batch(self, pts: np.ndarray) -> np.ndarray:
        return (pts - np.asarray(self.point)) @ np.asarray(self.normal) > 0.0

    def bbox(self):
        return None

    def to_dict(self) -> dict:
        return {"type": "HalfSpace", "point": list(self.point), "normal": list(self.normal)}


@dataclass(frozen=True)
class Intersection:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ConfigError("intersection needs at least one part")

    @property
    def n(self) -> int:
        return self.parts[0].n

    def contains_batch(self, pts: np.ndarray) -> np.ndarray:
        out = self.parts[0].contains_batch(pts)
        for part in self.parts[1:]:
            out = out & part.contains_batch(pts)
        return out

    def bbox(self):
        lo = hi = None
        for part in self.parts:
            b = part.bbox()
            if b is None:
                continue
            if lo is None:
                lo, hi = b[0].copy(), b[1].copy()
            else:
                lo = np.maximum(lo, b[0])
                hi = np.minimum(hi, b[1])
        if lo is None:
            return None
        return lo, np.maximum(lo, hi)

    def to_dict(self) -> dict:
        return {"type": "Intersection", "parts": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True)
class Union:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ConfigError("union needs at least one part")

    @property
    def n(self) -> int:
        return self.parts[0].n

    def contains_batch(self, pts: np.ndarray) -> np.ndarray:
        out = self.parts[0].contains_batch(pts)
        for part in self.parts[1:]:
            out = out | part.contains_batch(pts)
        return out

    def bbox(self):
        boxes = [p.bbox() for p in self.parts]
        if any(b is None for b in boxes):
            return None
        lo = np.min([b[0] for b in boxes], axis=0)
        hi = np.max([b[1] for b in boxes], axis=0)
        return lo, hi

    def to_dict(self) -> dict:
        return {"type": "Union", "parts": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True)
class Translate:
    region: object
    offset: tuple

    def __post_init__(self):
        object.__setattr__(self, "offset", _pt(self.offset))

    @property
    def n(self) -> int:
        return self.region.n

    def contains_batch(self, pts: np.ndarray) -> np.ndarray:
        return self.region.contains_batch(pts - np.asarray(self.offset))

    def bbox(self):
        b = self.region.bbox()
        if b is None:
            return None
        off = np.asarray(self.offset)
        return b[0] + off, b[1] + off

    def to_dict(self) -> dict:
        return {"type": "Translate", "region": self.region.to_dict(),
                "offset": list(self.offset)}


@dataclass(frozen=True)
class Complement:
    """Points of the declared box not in the region."""

    region: object
    bounds: tuple

    def __post_init__(self):
        lo, hi = self.bounds
        object.__setattr__(self, "bounds", (_pt(lo), _pt(hi)))

    @property
    def n(self) -> int:
        return len(self.bounds[0])

    def contains_batch(self, pts: np.ndarray) -> np.ndarray:
        lo, hi = np.asarray(self.bounds[0]), np.asarray(self.bounds[1])
        inside_box = np.all((pts > lo) & (pts < hi), axis=-1)
        return inside_box & ~self.region.contains_batch(pts)

    def bbox(self):
        return np.asarray(self.bounds[0]).copy(), np.asarray(self.bounds[1]).copy()

    def to_dict(self) -> dict:
        return {"type": "Complement", "region": self.region.to_dict(),
                "bounds": [list(self.bounds[0]), list(self.bounds[1])]}


def contains(region, x):
    """Strict membership test for a point or a batch of points."""
    pts, scalar = _as_points(x, region.n)
    inside = region.contains_batch(pts)
    return bool(inside[0]) if scalar else inside


_REGION_TYPES = {
    cls.__name__: cls
    for cls in (Box, Ball, AnnulusAround, Cone, HalfSpace, Intersection, Union,
                Translate, Complement, Point, Segment, Circle, HyperplaneH,
                BoxBoundaryFace)
}


def from_dict(d: dict):
    """Rebuild a region or distance target from its JSON dict."""
    kind = d.get("type")
    if kind not in _REGION_TYPES:
        raise ConfigError(f"unknown geometry type {kind!r}")
    if kind == "Box":
        return Box(d["lo"], d["hi"])
    if kind == "Ball":
        return Ball(d["center"], d["radius"])
    if kind == "AnnulusAround":
        return AnnulusAround(from_dict(d["target"]), d["inner"], d["outer"])
    if kind == "Cone":
        bounds = d.get("bounds")
        return Cone(d["vertex"], d["axis"], d["half_angle"],
                    bounds=tuple(bounds) if bounds else None)
    if kind == "HalfSpace":
        return HalfSpace(d["point"], d["normal"])
    if kind == "Intersection":
        return Intersection(tuple(from_dict(p) for p in d["parts"]))
    if kind == "Union":
        return Union(tuple(from_dict(p) for p in d["parts"]))
    if kind == "Translate":
        return Translate(from_dict(d["region"]), d["offset"])
    if kind == "Complement":
        return Complement(from_dict(d["region"]), tuple(d["bounds"]))
    if kind == "Point":
        return Point(d["location"])
    if kind == "Segment":
        return Segment(d["a"], d["b"])
    if kind == "Circle":
        return Circle(d["center"], d["radius"])
    if kind == "HyperplaneH":
        return HyperplaneH(tuple(d["keep"]), d["n"])
    if kind == "BoxBoundaryFace":
        return BoxBoundaryFace(d["lo"], d["hi"], d["axis"], d["side"])
    raise ConfigError(f"unhandled geometry type {kind!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Uniform cell grid: centers at origin + (i + 1/2) h componentwise."""

    origin: tuple
    h: float
    dims: tuple

    def __post_init__(self):
        object.__setattr__(self, "origin", _pt(self.origin))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.h <= 0.0:
            raise ConfigError("grid spacing h must be positive")
        if len(self.origin) != len(self.dims):
            raise ConfigError("grid origin/dims dimension mismatch")
        if not 1 <= len(self.dims) <= 3:
            raise ConfigError("grid supports ambient dimension 1..3")
        if any(d < 1 for d in self.dims):
            raise ConfigError("grid dims must be >= 1")

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.dims))

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    def centers(self) -> np.ndarray:
        """All cell centers as a (num_cells, n) array in C order."""
        axes = [np.arange(d) for d in self.dims]
        idx = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.n)
        return np.asarray(self.origin) + (idx + 0.5) * self.h

    def index_of(self, pts: np.ndarray) -> np.ndarray:
        """Flat C-order cell index per point; -1 when outside the grid."""
        pts = np.asarray(pts, dtype=float).reshape(-1, self.n)
        rel = (pts - np.asarray(self.origin)) / self.h
        ijk = np.floor(rel).astype(np.int64)
        ok = np.all((ijk >= 0) & (ijk < np.asarray(self.dims)), axis=-1)
        flat = np.zeros(len(pts), dtype=np.int64)
        stride = 1
        for ax in reversed(range(self.n)):
            flat += ijk[:, ax] * stride
            stride *= self.dims[ax]
        flat[~ok] = -1
        return flat

    def bbox(self):
        lo = np.asarray(self.origin)
        return lo.copy(), lo + np.asarray(self.dims) * self.h

    def to_dict(self) -> dict:
        return {"type": "Grid", "origin": list(self.origin), "h": self.h,
                "dims": list(self.dims)}


@dataclass(frozen=True)
class DomainConfig:
    """Domain Ω, constraint set Γ, and a box covering their union."""

    omega: object
    gamma: object
    bounds: tuple = None

    def __post_init__(self):
        if self.bounds is not None:
            lo, hi = self.bounds
            object.__setattr__(self, "bounds", (_pt(lo), _pt(hi)))

    @property
    def n(self) -> int:
        return self.omega.n

    def gamma_is_target(self) -> bool:
        return isinstance(self.gamma, DISTANCE_TARGETS)

    def box(self):
        if self.bounds is not None:
            return np.asarray(self.bounds[0]), np.asarray(self.bounds[1])
        boxes = [self.omega.bbox()]
        if not self.gamma_is_target():
            boxes.append(self.gamma.bbox())
        else:
            boxes.append(self.gamma.bbox())
        if any(b is None for b in boxes):
            raise ConfigError("domain has no finite bounding box; declare bounds")
        lo = np.min([b[0] for b in boxes], axis=0)
        hi = np.max([b[1] for b in boxes], axis=0)
        return lo, hi

    def to_dict(self) -> dict:
        d = {"schema": GEOMETRY_SCHEMA, "omega": self.omega.to_dict(),
             "gamma": self.gamma.to_dict()}
        if self.bounds is not None:
            d["bounds"] = [list(self.bounds[0]), list(self.bounds[1])]
        return d


def domain_from_dict(d: dict) -> DomainConfig:
    """Rebuild a domain from its JSON dict."""
    if d.get("schema") not in (None, GEOMETRY_SCHEMA):
        raise ConfigError(f"unknown domain schema {d.get('schema')!r}")
    bounds = d.get("bounds")
    return DomainConfig(from_dict(d["omega"]), from_dict(d["gamma"]),
                        bounds=tuple(tuple(b) for b in bounds) if bounds else None)


# ---------------------------------------------------------------------------
# counter-based sampling and measure
# ---------------------------------------------------------------------------


def uniform_counter(seed: int, start: int, count: int, dim: int) -> np.ndarray:
    """Uniform [0,1) samples (count, dim) from a counter-based stream.

    Sample i (globally) is independent of how the stream is chunked:
    the Philox counter is advanced to word position start*dim (one
    64-bit word feeds each double; advance() moves 4-word blocks, the
    remainder is drawn off and discarded).
    """
    pos = int(start) * dim
    bg = np.random.Philox(key=np.uint64(seed))
    bg.advance(pos // 4)
    gen = np.random.Generator(bg)
    if pos % 4:
        gen.random(pos % 4)
    return gen.random((count, dim))


def measure_mc(region, samples: int, seed: int, chunk: int = 1 << 16) -> dict:
    """Monte Carlo volume of a region over its bounding box.

    Returns {"estimate", "stderr", "samples", "seed"}; deterministic for
    a given seed, independent of chunking.
    """
    if samples < 10**3:
        raise ConfigError("measure_mc needs samples >= 1e3")
    b = region.bbox()
    if b is None:
        raise ConfigError("region has no finite bounding box")
    lo, hi = b
    extent = hi - lo
    vol_box = float(np.prod(extent))
    if vol_box == 0.0:
        raise ConfigError("degenerate (zero volume) bounding box")
    n = region.n
    hits = 0
    done = 0
    while done < samples:
        take = min(chunk, samples - done)
        u = uniform_counter(seed, done, take, n)
        pts = lo + u * extent
        hits += int(np.count_nonzero(region.contains_batch(pts)))
        done += take
    frac = hits / samples
    est = vol_box * frac
    stderr = vol_box * math.sqrt(max(frac * (1.0 - frac), 0.0) / samples)
    return {"estimate": est, "stderr": stderr, "samples": samples, "seed": seed}


def cell_mask(grid: Grid, region, subsample: int = 4) -> np.ndarray:
    """Per-cell overlap fractions from stratified sub-cell midpoints.

    Each cell is split into subsample^n equal sub-cells and the region
    indicator is evaluated at their midpoints; the fraction of hits is
    the overlap estimate. Deterministic (no randomness).
    """
    if subsample < 1:
        raise ConfigError("subsample must be >= 1")
    n = grid.n
    s = subsample
    offs = (np.arange(s) + 0.5) / s * grid.h
    local = np.stack(np.meshgrid(*([offs] * n), indexing="ij"), axis=-1).reshape(-1, n)
    centers = grid.centers()
    corners = centers - 0.5 * grid.h
    num = grid.num_cells
    out = np.empty(num, dtype=float)
    block = max(1, (1 << 18) // len(local))
    for i0 in range(0, num, block):
        i1 = min(num, i0 + block)
        pts = (corners[i0:i1, None, :] + local[None, :, :]).reshape(-1, n)
        inside = region.contains_batch(pts).reshape(i1 - i0, len(local))
        out[i0:i1] = inside.mean(axis=1)
    return out


def sector_volume(n: int, theta: float, r_in: float = 0.0, r_out: float = 1.0) -> float:
    """Analytic volume of {r_in < ||x|| < r_out} ∩ cone of half-angle theta.

    Solid-angle fraction times the annulus volume; used as an oracle for
    the Monte Carlo estimator in n = 1, 2, 3.
    """
    shell = ball_volume(n, r_out) - ball_volume(n, r_in)
    if n == 1:
        frac = 0.5 if theta < math.pi else 1.0
    elif n == 2:
        frac = theta / math.pi / 2.0 * 2.0  # 2*theta of 2*pi
    elif n == 3:
        frac = (1.0 - math.cos(theta)) / 2.0
    else:
        raise ConfigError("sector_volume supports n in {1,2,3}")
    return shell * frac
