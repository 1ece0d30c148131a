"""Grid collocation of the nonlocal operator and of the pairwise form.

Fields are piecewise constant on a uniform cell grid and extended by
zero off the grid. The operator route discretizes

    Gu(x) = integral of [u(x + z) - u(x)] rho(x, z) gamma(x)^(1/p) dz

by midpoint quadrature over z-cells of the same spacing, so grid-aligned
shifts are handled exactly. The form route produces the pairwise table

    w_ij ~ mu(x_i, c_j - x_i) integrated over cell j, times h^n h^n

together with exit weights for support mass that leaves the grid, where
the zero extension turns the pair term into |u_i|^p.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from . import geometry as geo
from . import kernels as ker
from .errors import ConfigError, GateError, ResolutionError

DISCRETE_SCHEMA = "discrete_v1"

# dense spectral solves are refused above this many free cells
SPECTRAL_CELL_LIMIT = 5_000
# precomputed pair tables are abandoned for streaming above this size
_TABLE_ENTRY_LIMIT = 8_000_000
_EMPTY_ROW_LIMIT = 0.05


def make_grid(lo, hi, cells0: int) -> geo.Grid:
    """Uniform grid over the box [lo, hi) with cells0 cells along axis 0.

    The spacing h is taken from axis 0; the remaining extents must be
    integer multiples of h.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise ConfigError("grid box needs lo < hi componentwise")
    if cells0 < 1:
        raise ConfigError("cells0 must be >= 1")
    h = float(hi[0] - lo[0]) / int(cells0)
    dims = []
    for d in range(len(lo)):
        m = (hi[d] - lo[d]) / h
        if abs(m - round(m)) > 1e-9:
            raise ConfigError(
                f"box extent along axis {d} is not a multiple of h={h}"
            )
        dims.append(int(round(m)))
    return geo.Grid(tuple(lo), h, tuple(dims))


def omega_cells(grid: geo.Grid, domain) -> np.ndarray:
    """Flat indices of the cells whose centers lie in Omega."""
    return np.flatnonzero(geo.contains(domain.omega, grid.centers()))


@dataclass(frozen=True)
class ScalarField:
    """Piecewise-constant values on a grid, zero off the grid."""

    grid: geo.Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != tuple(self.grid.dims):
            raise ConfigError(
                f"values shape {v.shape} does not match grid dims {self.grid.dims}"
            )
        if not np.all(np.isfinite(v)):
            raise ConfigError("field values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


def field_from_callable(grid: geo.Grid, fn, region=None) -> ScalarField:
    """Evaluate fn on cell centers, zeroed outside the given region."""
    centers = grid.centers()
    vals = np.asarray(fn(centers), dtype=float).reshape(len(centers))
    if region is not None:
        vals = np.where(geo.contains(region, centers), vals, 0.0)
    return ScalarField(grid, vals.reshape(grid.dims))


def off_domain_max(fieldv: ScalarField, domain) -> float:
    """Largest |u| over cells whose centers are not in Omega."""
    outside = ~geo.contains(domain.omega, fieldv.grid.centers())
    if not np.any(outside):
        return 0.0
    return float(np.max(np.abs(fieldv.flat[outside])))


# ---------------------------------------------------------------------------
# offset windows
# ---------------------------------------------------------------------------


def _support_radii(kernel, X_rows: np.ndarray) -> tuple:
    """Sound inner/outer radial bounds for the kernel support over rows."""
    if isinstance(kernel, (ker.UniformBall, ker.SignChanging)):
        return 0.0, kernel.delta
    if isinstance(kernel, ker.HalfBallCone):
        return 0.0, kernel.delta
    if isinstance(kernel, ker.VariableHalfBall):
        return 0.0, float(kernel.radius_at(X_rows).max())
    if isinstance(kernel, (ker.UniformAnnulus, ker.InversePower)):
        return kernel.eps, kernel.delta
    if isinstance(kernel, ker.DistanceScaled):
        return 0.0, kernel.delta0
    if isinstance(kernel, ker.Laminate):
        return kernel.delta2, kernel.delta1
    if isinstance(kernel, ker.FlowScaled):
        c = kernel.scale_at(X_rows)
        return float(c.min()) * kernel.phi_inner, float(c.max()) * kernel.phi_outer
    raise ConfigError(f"no support radius rule for {type(kernel).__name__}")


def _offset_window(kernel, X_rows: np.ndarray, grid: geo.Grid) -> np.ndarray:
    """Integer cell offsets whose cells can meet the kernel support."""
    r_in, r_out = _support_radii(kernel, X_rows)
    h = grid.h
    n = grid.n
    margin = 0.5 * h * math.sqrt(n)
    m_max = int(math.ceil(r_out / h + 0.5))
    axes = [np.arange(-m_max, m_max + 1)] * n
    offs = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    r = np.linalg.norm(offs, axis=1) * h
    keep = (r <= r_out + 2.0 * margin) & (r >= max(r_in - 2.0 * margin, 0.0))
    return offs[keep]


def _sub_offsets(n: int, s: int, h: float) -> np.ndarray:
    """Sub-cell midpoint displacements relative to a cell center."""
    if s < 1:
        raise ConfigError("subsample must be >= 1")
    t = ((np.arange(s) + 0.5) / s - 0.5) * h
    return np.stack(np.meshgrid(*([t] * n), indexing="ij"), axis=-1).reshape(-1, n)


def _row_multi(grid: geo.Grid, rows: np.ndarray) -> np.ndarray:
    return np.stack(np.unravel_index(rows, grid.dims), axis=-1)


# ---------------------------------------------------------------------------
# operator route
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OperatorMatrix:
    """Collocation of the weighted nonlocal operator on Omega cells.

    pairs[r, j] holds the quadrature weight carrying u at cell j into row
    r; diag_mass[r] is the full support mass (including mass that leaves
    the grid), which multiplies -u at the row's own cell.
    """

    grid: geo.Grid
    row_cells: np.ndarray
    pairs: np.ndarray
    diag_mass: np.ndarray
    row_fractions: np.ndarray
    p: float
    empty_rows: tuple
    meta: dict = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return len(self.row_cells)

    def apply(self, values) -> np.ndarray:
        """Operator values at the row cells for a field or flat vector."""
        u = values.flat if isinstance(values, ScalarField) else np.asarray(values, dtype=float).reshape(-1)
        if u.shape[0] != self.grid.num_cells:
            raise ConfigError("vector length does not match the grid")
        return self.pairs @ u - self.diag_mass * u[self.row_cells]

    def value(self, values) -> float:
        """Functional sum |Gu|^p over Omega with cell fractions."""
        gu = self.apply(values)
        w = self.row_fractions * self.grid.cell_volume
        return _backend.power_sum(w, gu, self.p)

    def combined(self, free=None) -> np.ndarray:
        """Dense matrix with the diagonal mass folded in.

        Columns are restricted to the given flat cell indices when free
        is provided.
        """
        a = self.pairs.copy()
        a[np.arange(self.n_rows), self.row_cells] -= self.diag_mass
        if free is not None:
            a = a[:, np.asarray(free, dtype=np.int64)]
        return a

    def triplets(self) -> list:
        """(row cell, col cell, value) for all nonzero entries."""
        a = self.combined()
        out = []
        for r in range(self.n_rows):
            cols = np.flatnonzero(a[r] != 0.0)
            out.extend((int(self.row_cells[r]), int(c), float(a[r, c])) for c in cols)
        return out


def assemble_gradient(kernel, weight, grid: geo.Grid, domain, p: float,
                      scale: float = 1.0, subsample: int = 4) -> OperatorMatrix:
    """Assemble the weighted operator for a normalized (rho) kernel.

    Each row collects midpoint sub-cell quadrature of rho over the
    support window; mass falling outside the grid still subtracts from
    the diagonal, since the zero extension supplies u = 0 there. The
    z = 0 cell is excluded for weakly singular kernels. Rows whose
    discrete support comes out empty are flagged; more than 5% of them
    aborts the assembly.
    """
    if not getattr(kernel, "rho_family", False):
        raise ConfigError("assemble_gradient expects a normalized (rho) kernel")
    if p < 1.0:
        raise GateError("p >= 1", f"p={p}")
    rows = omega_cells(grid, domain)
    if len(rows) == 0:
        raise ConfigError("no grid cells lie inside Omega")
    centers = grid.centers()
    X = centers[rows]
    n = grid.n
    h = grid.h
    s = int(subsample)
    offs = _offset_window(kernel, X, grid)
    subs = _sub_offsets(n, s, h)
    subvol = (h / s) ** n
    skip_diag = bool(getattr(kernel, "singular", False))

    n_rows = len(rows)
    pairs = np.zeros((n_rows, grid.num_cells), dtype=float)
    mass = np.zeros(n_rows, dtype=float)
    rmulti = _row_multi(grid, rows)
    dims = np.asarray(grid.dims)
    X_rep = np.repeat(X, len(subs), axis=0)
    sub_tile = np.tile(subs, (n_rows, 1))

    for m in offs:
        if skip_diag and not np.any(m):
            continue
        z_block = sub_tile + m * h
        vals = kernel.eval_batch(X_rep, z_block, domain=domain)
        w_row = vals.reshape(n_rows, len(subs)).sum(axis=1) * subvol
        mass += w_row
        col_multi = rmulti + m
        ok = np.all((col_multi >= 0) & (col_multi < dims), axis=1)
        if np.any(ok):
            cols = np.ravel_multi_index(col_multi[ok].T, grid.dims)
            pairs[np.flatnonzero(ok), cols] += w_row[ok]

    empty = np.flatnonzero(mass == 0.0)
    if len(empty) > _EMPTY_ROW_LIMIT * n_rows:
        raise ResolutionError(
            f"{len(empty)} of {n_rows} rows have empty discrete support at h={h}; "
            "refine the grid"
        )

    gamma = weight.eval_batch(X)
    if np.any(gamma <= 0.0):
        raise ConfigError("weight must be positive on Omega cells")
    row_scale = float(scale) * gamma ** (1.0 / p)
    pairs *= row_scale[:, None]
    mass = mass * row_scale
    frac = geo.cell_mask(grid, domain.omega, subsample=s)[rows]
    meta = {"kernel": kernel.to_dict(), "weight": weight.to_dict(),
            "scale": float(scale), "subsample": s}
    return OperatorMatrix(grid, rows, pairs, mass, frac, float(p),
                          tuple(int(r) for r in empty), meta)


# ---------------------------------------------------------------------------
# form route
# ---------------------------------------------------------------------------


@dataclass
class FormEvaluator:
    """Pairwise |u(x+z) - u(x)|^p functional for an unnormalized kernel.

    mode "shared" keeps one mu integral per offset (x-independent
    kernels), "rows" one per (offset, row); "stream" recomputes kernel
    values on every evaluation and is chosen automatically when the
    table would be too large.
    """

    grid: geo.Grid
    domain: object
    kernel: object
    p: float
    row_cells: np.ndarray
    x_weight: np.ndarray
    offsets: np.ndarray
    subsample: int
    mode: str
    table: object = None
    row_normalizer: object = None

    def _mu_for_offset(self, m: np.ndarray, X: np.ndarray, sub_tile: np.ndarray,
                       X_rep: np.ndarray) -> np.ndarray:
        s = self.subsample
        subvol = (self.grid.h / s) ** self.grid.n
        z_block = sub_tile + m * self.grid.h
        kw = {}
        if self.row_normalizer is not None:
            kw["normalizer"] = np.repeat(self.row_normalizer, len(X_rep) // len(X))
        vals = self.kernel.eval_batch(X_rep, z_block, domain=self.domain, **kw)
        return vals.reshape(len(X), -1).sum(axis=1) * subvol

    def value_many(self, fields) -> list:
        """Functional values for several fields in one sweep."""
        us = []
        for f in fields:
            u = f.flat if isinstance(f, ScalarField) else np.asarray(f, dtype=float).reshape(-1)
            if u.shape[0] != self.grid.num_cells:
                raise ConfigError("vector length does not match the grid")
            us.append(u)
        n_rows = len(self.row_cells)
        rmulti = _row_multi(self.grid, self.row_cells)
        dims = np.asarray(self.grid.dims)
        totals = [0.0] * len(us)
        if self.mode == "stream":
            centers = self.grid.centers()
            X = centers[self.row_cells]
            subs = _sub_offsets(self.grid.n, self.subsample, self.grid.h)
            sub_tile = np.tile(subs, (n_rows, 1))
            X_rep = np.repeat(X, len(subs), axis=0)
        u_rows = [u[self.row_cells] for u in us]
        for k, m in enumerate(self.offsets):
            if self.mode == "shared":
                mu = np.full(n_rows, self.table[k])
            elif self.mode == "rows":
                mu = self.table[k]
            else:
                mu = self._mu_for_offset(m, X, sub_tile, X_rep)
            if not np.any(mu):
                continue
            w = mu * self.x_weight
            col_multi = rmulti + m
            ok = np.all((col_multi >= 0) & (col_multi < dims), axis=1)
            for i, u in enumerate(us):
                if np.all(ok):
                    cols = np.ravel_multi_index(col_multi.T, self.grid.dims)
                    totals[i] += _backend.power_diff_sum(w, u_rows[i], u[cols], self.p)
                else:
                    if np.any(ok):
                        cols = np.ravel_multi_index(col_multi[ok].T, self.grid.dims)
                        sel = np.flatnonzero(ok)
                        totals[i] += _backend.power_diff_sum(
                            w[sel], u_rows[i][sel], u[cols], self.p)
                    sel = np.flatnonzero(~ok)
                    if len(sel):
                        # support mass off the grid sees the zero extension
                        totals[i] += _backend.power_sum(w[sel], u_rows[i][sel], self.p)
        return totals

    def value(self, fieldv) -> float:
        return self.value_many([fieldv])[0]

    def quadratic_matrix(self) -> np.ndarray:
        """Dense symmetric PSD matrix of the p = 2 form on Omega cells.

        The form is restricted to fields vanishing off Omega, so pair
        mass reaching any non-Omega cell lands on the diagonal.
        """
        if self.p != 2.0:
            raise ConfigError("quadratic matrix requires p = 2")
        n_free = len(self.row_cells)
        if n_free > SPECTRAL_CELL_LIMIT:
            raise ResolutionError(
                f"{n_free} free cells exceed the dense limit {SPECTRAL_CELL_LIMIT}"
            )
        pos = np.full(self.grid.num_cells, -1, dtype=np.int64)
        pos[self.row_cells] = np.arange(n_free)
        rmulti = _row_multi(self.grid, self.row_cells)
        dims = np.asarray(self.grid.dims)
        q = np.zeros((n_free, n_free), dtype=float)
        if self.mode == "stream":
            centers = self.grid.centers()
            X = centers[self.row_cells]
            subs = _sub_offsets(self.grid.n, self.subsample, self.grid.h)
            sub_tile = np.tile(subs, (n_free, 1))
            X_rep = np.repeat(X, len(subs), axis=0)
        rows_idx = np.arange(n_free)
        for k, m in enumerate(self.offsets):
            if self.mode == "shared":
                mu = np.full(n_free, self.table[k])
            elif self.mode == "rows":
                mu = self.table[k]
            else:
                mu = self._mu_for_offset(m, X, sub_tile, X_rep)
            w = mu * self.x_weight
            if not np.any(w):
                continue
            col_multi = rmulti + m
            ok = np.all((col_multi >= 0) & (col_multi < dims), axis=1)
            b = np.full(n_free, -1, dtype=np.int64)
            if np.any(ok):
                cols = np.ravel_multi_index(col_multi[ok].T, self.grid.dims)
                b[ok] = pos[cols]
            np.add.at(q, (rows_idx, rows_idx), w)
            inside = b >= 0
            if np.any(inside):
                a_in = rows_idx[inside]
                b_in = b[inside]
                w_in = w[inside]
                np.add.at(q, (b_in, b_in), w_in)
                np.add.at(q, (a_in, b_in), -w_in)
                np.add.at(q, (b_in, a_in), -w_in)
        return 0.5 * (q + q.T)


def assemble_form(kernel, grid: geo.Grid, domain, p: float,
                  subsample: int = 4) -> FormEvaluator:
    """Build the pairwise functional for an unnormalized (mu) kernel."""
    if getattr(kernel, "rho_family", False):
        raise ConfigError("assemble_form expects an unnormalized (mu) kernel")
    if p < 1.0:
        raise GateError("p >= 1", f"p={p}")
    rows = omega_cells(grid, domain)
    if len(rows) == 0:
        raise ConfigError("no grid cells lie inside Omega")
    centers = grid.centers()
    X = centers[rows]
    s = int(subsample)
    offs = _offset_window(kernel, X, grid)
    keep = np.any(offs != 0, axis=1)
    offs = offs[keep]
    frac = geo.cell_mask(grid, domain.omega, subsample=s)[rows]
    x_weight = frac * grid.cell_volume

    row_norm = None
    if isinstance(kernel, ker.DistanceScaled):
        # the visible-ball normalizer depends on x alone; freeze it per
        # row so streaming sweeps do not recompute the quadrature
        row_norm = ker.local_ball_measures(domain.omega, X, kernel.delta_at(X))

    ev = FormEvaluator(grid, domain, kernel, float(p), rows, x_weight, offs, s,
                       "stream", row_normalizer=row_norm)
    if len(offs) * len(rows) > _TABLE_ENTRY_LIMIT:
        return ev

    x_independent = isinstance(kernel, ker.InversePower) or (
        isinstance(kernel, (ker.UniformAnnulus,)))
    subs = _sub_offsets(grid.n, s, grid.h)
    sub_tile = np.tile(subs, (len(rows), 1))
    X_rep = np.repeat(X, len(subs), axis=0)
    if x_independent:
        one = X[:1]
        one_rep = np.repeat(one, len(subs), axis=0)
        one_tile = subs
        table = np.empty(len(offs))
        subvol = (grid.h / s) ** grid.n
        for k, m in enumerate(offs):
            vals = kernel.eval_batch(one_rep, one_tile + m * grid.h, domain=domain)
            table[k] = float(vals.sum()) * subvol
        ev.mode = "shared"
        ev.table = table
    else:
        table = np.empty((len(offs), len(rows)))
        for k, m in enumerate(offs):
            table[k] = ev._mu_for_offset(m, X, sub_tile, X_rep)
        ev.mode = "rows"
        ev.table = table
    return ev


# ---------------------------------------------------------------------------
# norms, verification, spectra
# ---------------------------------------------------------------------------


def lhs_norm(fieldv: ScalarField, p: float, region, subsample: int = 4) -> float:
    """Fraction-weighted sum of |u|^p over the region."""
    frac = geo.cell_mask(fieldv.grid, region, subsample=subsample)
    w = frac * fieldv.grid.cell_volume
    return _backend.power_sum(w, fieldv.flat, p)


def verify_inequality(fieldv: ScalarField, functional, constant: float,
                      domain, tol: float, region=None,
                      fval: float = None) -> dict:
    """Check lhs <= constant * functional * (1 + tol) for one field.

    The field must vanish on every cell whose center lies off Omega
    (constraint cells and beyond); otherwise it is inadmissible. Pass
    fval to reuse a functional value computed in a batched sweep.
    """
    bad = off_domain_max(fieldv, domain)
    if bad > 0.0:
        raise ConfigError(
            f"inadmissible test function: |u| = {bad:g} off the domain"
        )
    region = domain.omega if region is None else region
    sub = getattr(functional, "subsample", None)
    if sub is None:
        sub = functional.meta.get("subsample", 4) if hasattr(functional, "meta") else 4
    lhs = lhs_norm(fieldv, functional.p, region, subsample=sub)
    if fval is None:
        fval = functional.value(fieldv)
    bound = constant * fval * (1.0 + tol)
    ratio = lhs / (constant * fval) if fval > 0.0 else math.inf if lhs > 0.0 else 0.0
    return {"schema": DISCRETE_SCHEMA, "lhs": lhs, "functional": fval,
            "constant": constant, "tol": tol, "bound": bound,
            "ratio": ratio, "pass": bool(lhs <= bound)}


def sharp_constant_p2(functional, domain=None) -> dict:
    """Sharp discrete p = 2 constant by a dense spectral solve.

    Operator route: the constant is 1/sigma_min^2 of the measure-scaled
    restricted matrix. Form route: 1/lambda_min of the measure-scaled
    quadratic matrix. Free cells are the Omega cells; everything else is
    eliminated as a zero Dirichlet constraint.
    """
    if functional.p != 2.0:
        raise ConfigError("sharp constant solve requires p = 2")
    grid = functional.grid
    if isinstance(functional, OperatorMatrix):
        n_free = functional.n_rows
        if n_free > SPECTRAL_CELL_LIMIT:
            raise ResolutionError(
                f"{n_free} free cells exceed the dense limit {SPECTRAL_CELL_LIMIT}"
            )
        w = functional.row_fractions * grid.cell_volume
        keep = np.flatnonzero(w > 0.0)
        a = functional.combined(free=functional.row_cells)[np.ix_(keep, keep)]
        sw = np.sqrt(w[keep])
        b = (sw[:, None] * a) / sw[None, :]
        uu, sv, vt = np.linalg.svd(b)
        smin = float(sv[-1])
        v = vt[-1]
        residual = float(np.linalg.norm(b @ v - smin * uu[:, -1]))
        if residual > 1e-8 * max(float(sv[0]), 1.0):
            raise ResolutionError(f"spectral residual {residual:g} too large")
        if smin**2 <= 1e-12:
            err = ResolutionError(
                f"operator is numerically singular (sigma_min={smin:g}); "
                f"near-null vector norm {float(np.linalg.norm(v)):g}"
            )
            err.vector = v
            raise err
        return {"c_sharp": 1.0 / smin**2, "sigma_min": smin,
                "residual": residual, "n_free": int(len(keep)),
                "route": "operator"}
    # form route
    q = functional.quadratic_matrix()
    w = functional.x_weight
    keep = np.flatnonzero(w > 0.0)
    sw = np.sqrt(w[keep])
    b = q[np.ix_(keep, keep)] / np.outer(sw, sw)
    b = 0.5 * (b + b.T)
    evals, evecs = np.linalg.eigh(b)
    lam = float(evals[0])
    v = evecs[:, 0]
    residual = float(np.linalg.norm(b @ v - lam * v))
    if residual > 1e-8 * max(float(evals[-1]), 1.0):
        raise ResolutionError(f"spectral residual {residual:g} too large")
    if lam <= 1e-12:
        err = ResolutionError(
            f"form is numerically singular (lambda_min={lam:g}); "
            f"near-null vector norm {float(np.linalg.norm(v)):g}"
        )
        err.vector = v
        raise err
    return {"c_sharp": 1.0 / lam, "lambda_min": lam, "residual": residual,
            "n_free": int(len(keep)), "route": "form"}


# ---------------------------------------------------------------------------
# test function families
# ---------------------------------------------------------------------------


def test_functions(grid: geo.Grid, domain, count: int, seed: int,
                   family: str = "sine", p: float = None, beta: float = None,
                   m: int = None, s: float = None, modes: int = 4) -> list:
    """Deterministic admissible fields: sine series, random bumps, or a
    bump modulated by a power of the distance to the constraint target.

    The distance family needs beta, p, and the decay exponent s, and
    refuses exponents at or below (beta - (n - m))/p, where the p-th
    power of the field stops being integrable against the kernel.
    """
    if family not in ("sine", "bump", "distance"):
        raise ConfigError(f"unknown test function family {family!r}")
    centers = grid.centers()
    inside = geo.contains(domain.omega, centers)
    if not np.any(inside):
        raise ConfigError("no grid cells lie inside Omega")
    b = domain.omega.bbox()
    lo, hi = (b if b is not None else domain.box())
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    extent = hi - lo
    n = grid.n
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))

    dist = None
    if family == "distance":
        if p is None or beta is None or s is None:
            raise ConfigError("distance family needs beta, p, and s")
        if not hasattr(domain.gamma, "distance_batch"):
            raise ConfigError("distance family needs a distance target as Gamma")
        if m is None:
            m = ker.target_dimension(domain.gamma)
        threshold = (beta - (n - m)) / p
        if s <= threshold:
            raise GateError(
                "s > (beta - (n - m))/p",
                f"s={s} is at or below the integrability threshold {threshold}",
            )
        dist = domain.gamma.distance_batch(centers)

    out = []
    for _ in range(count):
        if family == "sine":
            t = (centers - lo) / extent
            vals = np.zeros(len(centers))
            for _ in range(modes):
                kvec = rng.integers(1, modes + 1, size=n)
                amp = rng.normal()
                vals += amp * np.prod(np.sin(np.pi * kvec * t), axis=1)
        else:
            vals = np.zeros(len(centers))
            for _ in range(3):
                c = lo + (0.15 + 0.7 * rng.random(n)) * extent
                width = (0.05 + 0.15 * rng.random()) * float(extent.max())
                amp = rng.normal()
                r2 = np.sum((centers - c) ** 2, axis=1)
                vals += amp * np.exp(-r2 / (2.0 * width**2))
        if family == "distance":
            vals = vals * dist**s
        vals = np.where(inside, vals, 0.0)
        top = np.max(np.abs(vals))
        if top > 0.0:
            vals = vals / top
        out.append(ScalarField(grid, vals.reshape(grid.dims)))
    return out


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------


def field_to_csv(fieldv: ScalarField, path: str) -> None:
    """Write (index, center coordinates, value) rows for every cell."""
    centers = fieldv.grid.centers()
    flat = fieldv.flat
    header = ["index"] + [f"x{d}" for d in range(fieldv.grid.n)] + ["value"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(len(flat)):
            w.writerow([i] + [f"{c:.17g}" for c in centers[i]] + [f"{flat[i]:.17g}"])


def matrix_to_triplets(op: OperatorMatrix, path: str) -> None:
    """Write (row cell, col cell, value) rows for the operator."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "value"])
        for r, c, v in op.triplets():
            w.writerow([r, c, f"{v:.17g}"])
