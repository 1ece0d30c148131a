"""Parameterized discrete dynamics: steps, orbits, absorption, multiplicities.

Every flow freezes outside Omega: step(x) = x exactly for x not in Omega.
Absorption walks a trajectory until it freezes (or hits the step cap) and
returns the first index after which every later state lies in the
absorbing set; a capped walk reports not-absorbed rather than guessing.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import ConfigError, GateError

FLOW_SCHEMA = "flow_v1"

ABSORPTION_CAP = 10_000
INDICATRIX_CAP = 1_000


# ---------------------------------------------------------------------------
# flow variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Translation:
    n_dim: int

    @property
    def n(self) -> int:
        return self.n_dim

    def displacement(self, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
        return np.broadcast_to(Z, X.shape)

    def det_dx(self, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
        return np.ones(len(X))

    def det_dzeta(self, X: np.ndarray) -> np.ndarray:
        return np.ones(len(X))

    def to_dict(self) -> dict:
        return {"type": "Translation", "n_dim": self.n_dim}


@dataclass(frozen=True)
class MatrixField:
    """z(x, zeta) = c(x) * zeta with c(x) = c0 + c1*(x.e), clamped to
    [c_lo, c_hi]. Lipschitz constant K = |c1|."""

    c0: float
    c1: float
    e: tuple
    c_lo: float
    c_hi: float

    def __post_init__(self):
        axis = tuple(float(a) for a in np.atleast_1d(self.e))
        object.__setattr__(self, "e", axis)
        nrm = math.sqrt(sum(a * a for a in axis))
        if abs(nrm - 1.0) > 1e-12:
            raise ConfigError("field direction must be unit-norm")
        if not 0.0 < self.c_lo <= self.c_hi:
            raise ConfigError("clamp range needs 0 < c_lo <= c_hi")

    @property
    def n(self) -> int:
        return len(self.e)

    @property
    def K(self) -> float:
        return abs(self.c1)

    def scale(self, X: np.ndarray) -> np.ndarray:
        c = self.c0 + X @ np.asarray(self.e) * self.c1
        return np.clip(c, self.c_lo, self.c_hi)

    def displacement(self, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
        return self.scale(X)[:, None] * np.broadcast_to(Z, X.shape)

    def det_dx(self, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
        # det(I + zeta grad(c)^T) = 1 + c1 * (zeta . e), zero gradient
        # wherever the clamp is active
        raw = self.c0 + X @ np.asarray(self.e) * self.c1
        live = (raw > self.c_lo) & (raw < self.c_hi)
        Z = np.broadcast_to(Z, X.shape)
        return np.where(live, 1.0 + self.c1 * (Z @ np.asarray(self.e)), 1.0)

    def det_dzeta(self, X: np.ndarray) -> np.ndarray:
        return self.scale(X) ** self.n

    def to_dict(self) -> dict:
        return {"type": "MatrixField", "c0": self.c0, "c1": self.c1,
                "e": list(self.e), "c_lo": self.c_lo, "c_hi": self.c_hi}


@dataclass(frozen=True)
class LaminateFlow:
    """Mirror the first component across the interface plane x1 =
    interface: z = (zeta1, zeta2) on the left half, (-zeta1, zeta2) on
    the right."""

    delta1: float
    delta2: float
    theta: float
    interface: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.theta <= math.pi / 4.0:
            raise ConfigError("theta must lie in (0, pi/4]")
        if not 0.0 < self.delta2 < self.delta1 * math.sin(self.theta):
            raise ConfigError("need 0 < delta2 < delta1*sin(theta)")

    @property
    def n(self) -> int:
        return 2

    def displacement(self, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
        Z = np.broadcast_to(Z, X.shape).copy()
        Z[X[:, 0] >= self.interface, 0] *= -1.0
        return Z

    def det_dx(self, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
        return np.ones(len(X))

    def det_dzeta(self, X: np.ndarray) -> np.ndarray:
        return np.ones(len(X))

    def to_dict(self) -> dict:
        return {"type": "LaminateFlow", "delta1": self.delta1,
                "delta2": self.delta2, "theta": self.theta,
                "interface": self.interface}


@dataclass(frozen=True)
class RadialContraction:
    """z(x, zeta) = sigma(|x|)(zeta - x) with sigma(t) = eps/(t + eps)."""

    eps: float

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ConfigError("eps must be positive")

    @property
    def n(self):
        return None  # dimension comes from the points

    def sigma(self, t: np.ndarray) -> np.ndarray:
        return self.eps / (t + self.eps)

    def displacement(self, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(X, axis=1)
        return self.sigma(r)[:, None] * (np.broadcast_to(Z, X.shape) - X)

    def det_dx(self, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
        # rank-one update: det((1-s)I + (zeta-x) s'(r) xhat^T)
        r = np.linalg.norm(X, axis=1)
        s = self.sigma(r)
        ds = -self.eps / (r + self.eps) ** 2
        xhat = np.zeros_like(X)
        pos = r > 0.0
        xhat[pos] = X[pos] / r[pos, None]
        Z = np.broadcast_to(Z, X.shape)
        inner = np.einsum("ij,ij->i", Z - X, xhat)
        n = X.shape[1]
        return (1.0 - s) ** (n - 1) * (1.0 - s + ds * inner)

    def det_dzeta(self, X: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(X, axis=1)
        return self.sigma(r) ** X.shape[1]

    def to_dict(self) -> dict:
        return {"type": "RadialContraction", "eps": self.eps}


_FLOWS = {cls.__name__: cls for cls in (Translation, MatrixField, LaminateFlow,
                                        RadialContraction)}


def flow_from_dict(d: dict):
    kind = d.get("type")
    if kind not in _FLOWS:
        raise ConfigError(f"unknown flow type {kind!r}")
    d = dict(d)
    d.pop("type")
    if "e" in d:
        d["e"] = tuple(d["e"])
    return _FLOWS[kind](**d)


def check_phi(flow, phi_region) -> None:
    """Validate a parameter set against the flow's standing assumptions."""
    n = phi_region.n
    if geo.contains(phi_region, np.zeros(n)):
        raise ConfigError("parameter set must exclude the origin")
    if isinstance(flow, MatrixField):
        b = phi_region.bbox()
        if b is None:
            raise ConfigError("parameter set needs a finite bounding box")
        lo, hi = b
        R = float(np.sqrt(np.sum(np.maximum(np.abs(lo), np.abs(hi)) ** 2)))
        if flow.K * R > 1.0:
            raise GateError("K*R <= 1", f"K={flow.K}, R={R}")


def phi_radius(phi_region) -> float:
    """Upper bound on sup ||zeta|| from the bounding box."""
    lo, hi = phi_region.bbox()
    return float(np.sqrt(np.sum(np.maximum(np.abs(lo), np.abs(hi)) ** 2)))


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------


def step_batch(flow, X: np.ndarray, Z, domain) -> np.ndarray:
    """One step of y = x + z(x, zeta) for rows of X (frozen outside Omega)."""
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    inside = geo.contains(domain.omega, X)
    Y = X.copy()
    if np.any(inside):
        Zin = Z[inside] if Z.ndim == 2 else Z
        Y[inside] = X[inside] + flow.displacement(X[inside], Zin)
    return Y


def step(flow, x, zeta, domain) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return step_batch(flow, x.reshape(1, -1), np.atleast_1d(zeta), domain)[0]


def orbit(flow, x, zeta, domain, max_k: int) -> np.ndarray:
    """States [y^0, ..., y^max_k]; stationary after leaving Omega."""
    if max_k < 1:
        raise ConfigError("max_k must be >= 1")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((max_k + 1, len(x)))
    out[0] = x
    for k in range(max_k):
        out[k + 1] = step(flow, out[k], zeta, domain)
    return out


# ---------------------------------------------------------------------------
# absorption
# ---------------------------------------------------------------------------


def absorption_index_batch(flow, X, Z, absorbing, domain,
                           max_k: int = ABSORPTION_CAP) -> np.ndarray:
    """Vectorized absorption indices; -1 encodes not-absorbed.

    Z is one parameter for all rows or one per row. The index is the
    first k after the last visit outside the absorbing set, provided the
    trajectory froze inside it before the cap.
    """
    X = np.asarray(X, dtype=float).copy()
    Z = np.asarray(Z, dtype=float)
    m = len(X)
    last_bad = np.full(m, -1, dtype=np.int64)
    in_u = geo.contains(absorbing, X)
    last_bad[~in_u] = 0
    frozen = ~geo.contains(domain.omega, X)
    k = 0
    while not np.all(frozen) and k < max_k:
        act = ~frozen
        Zact = Z[act] if Z.ndim == 2 else Z
        X[act] = X[act] + flow.displacement(X[act], Zact)
        k += 1
        in_u = geo.contains(absorbing, X[act])
        bad = np.flatnonzero(act)[~in_u]
        last_bad[bad] = k
        frozen[act] = ~geo.contains(domain.omega, X[act])
    final_in_u = geo.contains(absorbing, X)
    out = np.where(frozen & final_in_u, last_bad + 1, -1)
    # a frozen state outside U never recovers
    out[frozen & ~final_in_u] = -1
    return out


def absorption_index(flow, x, zeta, absorbing, domain,
                     max_k: int = ABSORPTION_CAP):
    """Least stable entry index into the absorbing set, or None."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    idx = absorption_index_batch(flow, x.reshape(1, -1), np.atleast_1d(zeta),
                                 absorbing, domain, max_k)[0]
    return None if idx < 0 else int(idx)


@dataclass(frozen=True)
class AbsorptionReport:
    histogram: tuple          # ((alpha, measure, count), ...) sorted by alpha
    not_absorbed: tuple       # (measure, count)
    max_alpha: int
    phi_cell_volume: float
    zeta_samples: dict        # alpha -> a few representative zeta values

    def to_dict(self) -> dict:
        return {
            "schema": FLOW_SCHEMA,
            "histogram": [{"alpha": int(a), "measure": m, "count": int(c)}
                          for a, m, c in self.histogram],
            "not_absorbed": {"measure": self.not_absorbed[0],
                             "count": int(self.not_absorbed[1])},
            "max_alpha": int(self.max_alpha),
            "phi_cell_volume": self.phi_cell_volume,
            "zeta_samples": {str(a): [list(z) for z in zs]
                             for a, zs in self.zeta_samples.items()},
        }


def absorption_partition(flow, omega_samples, phi_region, absorbing, domain,
                         phi_resolution: int = 64,
                         max_k: int = ABSORPTION_CAP) -> AbsorptionReport:
    """Histogram of worst-case absorption index over the parameter set.

    The parameter set is sampled on a uniform grid (cell centers inside
    phi_region); each cell contributes its full volume to the bin of
    max-over-x absorption index.
    """
    omega_samples = np.asarray(omega_samples, dtype=float)
    if omega_samples.ndim == 1:
        omega_samples = omega_samples.reshape(-1, 1)
    lo, hi = phi_region.bbox()
    extent = np.asarray(hi) - np.asarray(lo)
    h = float(extent.max()) / phi_resolution
    dims = tuple(max(1, int(math.ceil(e / h))) for e in extent)
    grid = geo.Grid(tuple(np.asarray(lo)), h, dims)
    centers = grid.centers()
    zetas = centers[geo.contains(phi_region, centers)]
    if len(zetas) == 0:
        raise ConfigError("no parameter samples inside the set")

    # one batched walk over all (x, zeta) pairs
    m = len(omega_samples)
    X_rep = np.tile(omega_samples, (len(zetas), 1))
    Z_rep = np.repeat(zetas, m, axis=0)
    idx = absorption_index_batch(flow, X_rep, Z_rep, absorbing, domain,
                                 max_k).reshape(len(zetas), m)
    bad = np.any(idx < 0, axis=1)
    alphas = idx.max(axis=1)

    bins = {}
    samples = {}
    not_absorbed = int(np.sum(bad))
    max_alpha = 0
    for z, alpha, is_bad in zip(zetas, alphas, bad):
        if is_bad:
            continue
        alpha = int(alpha)
        bins[alpha] = bins.get(alpha, 0) + 1
        if len(samples.setdefault(alpha, [])) < 16:
            samples[alpha].append([float(v) for v in z])
        max_alpha = max(max_alpha, alpha)
    cell_vol = grid.cell_volume
    hist = tuple((a, bins[a] * cell_vol, bins[a]) for a in sorted(bins))
    return AbsorptionReport(
        histogram=hist,
        not_absorbed=(not_absorbed * cell_vol, not_absorbed),
        max_alpha=max_alpha,
        phi_cell_volume=cell_vol,
        zeta_samples=samples,
    )


# ---------------------------------------------------------------------------
# multiplicity counting
# ---------------------------------------------------------------------------


def indicatrix(flow, zeta, k: int, grid, source, domain) -> np.ndarray:
    """Per-cell count of k-step images of source cell centers.

    Source points are the grid's own cell centers restricted to the
    source region, so source density and target density match and the
    raw counts estimate the multiplicity function directly. Only orbits
    still live at step k are counted: a point frozen strictly earlier
    has been absorbed and its (stationary) image would otherwise pile
    every orbit suffix onto the shared exit point.
    """
    if k > INDICATRIX_CAP:
        raise ConfigError(f"step count capped at {INDICATRIX_CAP}")
    centers = grid.centers()
    X = centers[geo.contains(source, centers)]
    Y = X.copy()
    live = np.ones(len(Y), dtype=bool)
    for _ in range(k):
        live &= geo.contains(domain.omega, Y)
        Y = step_batch(flow, Y, np.atleast_1d(zeta), domain)
    counts = np.zeros(grid.num_cells, dtype=np.int64)
    idx = grid.index_of(Y[live])
    valid = idx >= 0
    np.add.at(counts, idx[valid], 1)
    return counts.reshape(grid.dims)


# ---------------------------------------------------------------------------
# Jacobian bounds
# ---------------------------------------------------------------------------


def jacobian_bounds(flow, domain, phi_region, alphas=None, travel=None) -> dict:
    """Uniform determinant bounds Theta and Lambda, plus per-alpha
    refinements where the flow admits them.

    travel: maximum orbit displacement S used by the MatrixField
    refinement ||zeta|| <= travel/alpha; without it only uniform bounds
    are returned.
    """
    if isinstance(flow, Translation):
        out = {"theta": 1.0, "lam": 1.0}
    elif isinstance(flow, MatrixField):
        n = flow.n
        R = phi_radius(phi_region)
        if n * flow.K * R >= 1.0:
            raise GateError("n*K*R < 1", f"n={n}, K={flow.K}, R={R}")
        out = {"theta": 1.0 / (1.0 - n * flow.K * R),
               "lam": 1.0 / flow.c_lo**n}
        if alphas is not None and travel is not None:
            refine = {}
            for a in alphas:
                r_a = min(R, travel / a)
                refine[int(a)] = {"theta": 1.0 / (1.0 - n * flow.K * r_a),
                                  "lam": out["lam"]}
            out["per_alpha"] = refine
    elif isinstance(flow, LaminateFlow):
        out = {"theta": 1.0, "lam": 1.0}
    elif isinstance(flow, RadialContraction):
        lo, hi = domain.omega.bbox()
        diam = float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))
        n = len(lo)
        out = {"theta": 3.0**n, "lam": ((diam + flow.eps) / flow.eps) ** n}
    else:
        raise ConfigError(f"unknown flow variant {type(flow).__name__}")
    out.setdefault("per_alpha", None)
    return out


# ---------------------------------------------------------------------------
# discrete orbit inequality
# ---------------------------------------------------------------------------


def orbit_inequality_check(flow, u: np.ndarray, zeta, p: float, grid,
                           domain, tol: float = 1e-10) -> dict:
    """Zero-trace orbit inequality for translation on its own grid.

    With u vanishing outside Omega and zeta an exact multiple of the
    grid spacing, orbits move in index space and the change of variables
    is exact, so the inequality

        sum |u|^p  <=  k0^(p-1) * sum_k sum_x |u(y^(k+1)) - u(y^k)|^p

    (k0 the worst absorption index into the complement of Omega) must
    hold for every admissible u. Both sides carry the cell volume.
    """
    if not isinstance(flow, Translation):
        raise ConfigError("orbit inequality requires the translation flow")
    u = np.asarray(u, dtype=float)
    if u.shape != tuple(grid.dims):
        raise ConfigError(f"u shape {u.shape} does not match grid {grid.dims}")
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    steps_f = zeta / grid.h
    steps = np.rint(steps_f).astype(np.int64)
    if np.any(np.abs(steps_f - steps) > 1e-9) or np.all(steps == 0):
        raise ConfigError("zeta must be a nonzero integer multiple of the grid spacing")

    centers = grid.centers()
    inside = geo.contains(domain.omega, centers)
    if np.any(np.abs(u.reshape(-1)[~inside]) > 0.0):
        raise ConfigError("u must vanish outside Omega")

    dims = np.asarray(grid.dims)
    inside_nd = inside.reshape(grid.dims)
    flat = u.reshape(-1)

    def values_at(I):
        ok = np.all((I >= 0) & (I < dims), axis=1)
        vals = np.zeros(len(I))
        if np.any(ok):
            lin = np.ravel_multi_index(I[ok].T, grid.dims)
            vals[ok] = flat[lin]
        return vals, ok

    start = np.argwhere(inside_nd)
    if len(start) == 0:
        raise ConfigError("no cells of the grid lie inside Omega")

    # absorption index per starting cell: steps until the center leaves Omega
    cur = start.copy()
    alive = np.ones(len(cur), dtype=bool)
    k0 = 0
    diff_sum = 0.0
    u_cur = flat[np.ravel_multi_index(cur.T, grid.dims)]
    while np.any(alive):
        k0 += 1
        if k0 > ABSORPTION_CAP:
            raise ConfigError("orbit walk exceeded the step cap")
        nxt = cur + np.where(alive[:, None], steps, 0)
        u_nxt, ok = values_at(nxt)
        diff_sum += float(np.sum(np.abs(u_nxt - u_cur) ** p))
        cur = nxt
        u_cur = u_nxt
        inside_now = np.zeros(len(cur), dtype=bool)
        if np.any(ok):
            lin = np.ravel_multi_index(cur[ok].T, grid.dims)
            inside_now[ok] = inside_nd.reshape(-1)[lin]
        alive &= inside_now

    vol = grid.cell_volume
    lhs = float(np.sum(np.abs(flat[inside]) ** p) * vol)
    rhs = float(k0 ** (p - 1.0) * diff_sum * vol)
    return {"lhs": lhs, "rhs": rhs, "k0": int(k0),
            "pass": bool(lhs <= rhs + 1e-12 + tol * abs(rhs))}
