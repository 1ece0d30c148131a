import math

import numpy as np
import pytest

from npi import discrete as disc
from npi import geometry as geo
from npi import kernels as ker
from npi import weights as wts
from npi.errors import ConfigError, GateError, ResolutionError


def domain_1d(margin=0.5):
    omega = geo.Box((0.0,), (1.0,))
    gamma = geo.Union((geo.Box((-margin,), (0.0,)), geo.Box((1.0,), (1.0 + margin,))))
    return geo.DomainConfig(omega, gamma, bounds=((-margin,), (1.0 + margin,)))


def forward_domain_1d():
    omega = geo.Box((0.0,), (1.0,))
    gamma = geo.Box((1.0,), (1.5,))
    return geo.DomainConfig(omega, gamma, bounds=((0.0,), (1.5,)))


def inverse_power_setup(cells_on_omega, subsample=1):
    domain = domain_1d()
    grid = disc.make_grid((-0.5,), (1.5,), 2 * cells_on_omega)
    kernel = ker.InversePower(eps=0.25, delta=0.5, p=2.0, n=1)
    ev = disc.assemble_form(kernel, grid, domain, p=2.0, subsample=subsample)
    return domain, grid, kernel, ev


def linear_field(grid, domain):
    return disc.field_from_callable(grid, lambda c: c[:, 0], region=domain.omega)


# ---------------------------------------------------------------------------
# grids and fields
# ---------------------------------------------------------------------------


def test_make_grid_commensurate():
    g = disc.make_grid((-0.5,), (1.5,), 512)
    assert g.h == pytest.approx(1.0 / 256.0, abs=0.0)
    assert g.dims == (512,)
    g2 = disc.make_grid((0.0, 0.0), (2.0, 1.0), 32)
    assert g2.dims == (32, 16)
    with pytest.raises(ConfigError):
        disc.make_grid((0.0, 0.0), (1.0, 0.75), 10)


def test_scalar_field_validation():
    g = disc.make_grid((0.0,), (1.0,), 8)
    with pytest.raises(ConfigError):
        disc.ScalarField(g, np.zeros(7))
    with pytest.raises(ConfigError):
        disc.ScalarField(g, np.full(8, np.nan))
    f = disc.ScalarField(g, np.arange(8.0))
    assert f.flat[3] == 3.0


def test_field_from_callable_masks_region():
    domain = domain_1d()
    g = disc.make_grid((-0.5,), (1.5,), 64)
    f = linear_field(g, domain)
    centers = g.centers()[:, 0]
    outside = (centers <= 0.0) | (centers >= 1.0)
    assert np.all(f.flat[outside] == 0.0)
    assert disc.off_domain_max(f, domain) == 0.0


# ---------------------------------------------------------------------------
# operator assembly
# ---------------------------------------------------------------------------


def test_gradient_annihilates_constants():
    domain = forward_domain_1d()
    grid = disc.make_grid((0.0,), (1.5,), 16)
    kernel = ker.HalfBallCone(delta=0.5, axis=(1.0,))
    op = disc.assemble_gradient(kernel, wts.ConstantOne(), grid, domain, p=2.0)
    ones = np.ones(grid.num_cells)
    assert np.max(np.abs(op.apply(ones))) <= 1e-10
    assert op.empty_rows == ()


def test_gradient_affine_weight_scales_rows():
    domain = forward_domain_1d()
    grid = disc.make_grid((0.0,), (1.5,), 16)
    kernel = ker.HalfBallCone(delta=0.5, axis=(1.0,))
    base = disc.assemble_gradient(kernel, wts.ConstantOne(), grid, domain, p=2.0)
    drift = wts.AffineDrift(e=(1.0,), c=1.0)
    op = disc.assemble_gradient(kernel, drift, grid, domain, p=2.0)
    x = grid.centers()[base.row_cells, 0]
    scale = np.sqrt(1.0 + x)
    assert np.max(np.abs(op.pairs - scale[:, None] * base.pairs)) <= 1e-12
    assert np.max(np.abs(op.diag_mass - scale * base.diag_mass)) <= 1e-12

    # direct summation over sub-cell midpoints for one row
    r = 5
    xr = grid.centers()[op.row_cells[r]]
    s = 4
    sub = ((np.arange(s) + 0.5) / s - 0.5) * grid.h
    w_direct = np.zeros(grid.num_cells)
    mass_direct = 0.0
    for m in range(-8, 9):
        z = m * grid.h + sub
        vals = kernel.eval_batch(np.repeat(xr[None, :], s, axis=0), z[:, None])
        w = float(vals.sum()) * grid.h / s
        mass_direct += w
        j = op.row_cells[r] + m
        if 0 <= j < grid.num_cells:
            w_direct[j] += w
    g = math.sqrt(1.0 + xr[0])
    assert np.max(np.abs(op.pairs[r] - g * w_direct)) <= 1e-12
    assert op.diag_mass[r] == pytest.approx(g * mass_direct, rel=1e-12)


def test_gradient_signchange_alpha0_matches_uniform_ball():
    domain = domain_1d(margin=0.25)
    grid = disc.make_grid((-0.25,), (1.25,), 48)
    flat = ker.SignChanging(delta=0.25, alpha=0.0, sigma=ker.ConstantOne(),
                            tau=1.0, n=1, p=2.0)
    ball = ker.UniformBall(delta=0.25, n=1)
    a = disc.assemble_gradient(flat, wts.ConstantOne(), grid, domain, p=2.0)
    b = disc.assemble_gradient(ball, wts.ConstantOne(), grid, domain, p=2.0)
    assert np.max(np.abs(a.pairs - b.pairs)) <= 1e-10
    assert np.max(np.abs(a.diag_mass - b.diag_mass)) <= 1e-10


def test_gradient_empty_rows_error():
    domain = domain_1d(margin=0.25)
    grid = disc.make_grid((-0.25,), (1.25,), 24)
    tiny = ker.UniformBall(delta=grid.h / 10.0, n=1)
    with pytest.raises(ResolutionError):
        disc.assemble_gradient(tiny, wts.ConstantOne(), grid, domain, p=2.0,
                               subsample=2)


def test_gradient_rejects_unnormalized_kernel():
    domain = domain_1d()
    grid = disc.make_grid((-0.5,), (1.5,), 32)
    mu = ker.InversePower(eps=0.25, delta=0.5, p=2.0, n=1)
    with pytest.raises(ConfigError):
        disc.assemble_gradient(mu, wts.ConstantOne(), grid, domain, p=2.0)


def test_gradient_operator_scale():
    domain = domain_1d(margin=0.25)
    grid = disc.make_grid((-0.25,), (1.25,), 48)
    ball = ker.UniformBall(delta=0.25, n=1)
    one = disc.assemble_gradient(ball, wts.ConstantOne(), grid, domain, p=2.0)
    four = disc.assemble_gradient(ball, wts.ConstantOne(), grid, domain, p=2.0,
                                  scale=4.0)
    assert np.max(np.abs(four.pairs - 4.0 * one.pairs)) <= 1e-12


def test_gradient_variable_half_ball():
    domain = geo.DomainConfig(geo.Box((0.0,), (1.0,)), geo.Box((1.0,), (2.0,)),
                              bounds=((0.0,), (2.0,)))
    grid = disc.make_grid((0.0,), (2.0,), 64)
    kernel = ker.VariableHalfBall(delta=1.0, axis=(1.0,), c0=0.95, c1=0.05)
    op = disc.assemble_gradient(kernel, wts.ConstantOne(), grid, domain, p=2.0)
    ones = np.ones(grid.num_cells)
    assert np.max(np.abs(op.apply(ones))) <= 1e-10
    assert op.empty_rows == ()
    # row support length tracks the radius profile: mass approaches 1
    mass_err = np.abs(op.diag_mass - 1.0)
    assert np.max(mass_err) <= 0.05


# ---------------------------------------------------------------------------
# form assembly and evaluation
# ---------------------------------------------------------------------------


def test_form_zero_field_and_rejects_rho():
    domain, grid, kernel, ev = inverse_power_setup(64)
    zero = disc.ScalarField(grid, np.zeros(grid.dims))
    assert ev.value(zero) == 0.0
    with pytest.raises(ConfigError):
        disc.assemble_form(ker.UniformBall(0.25, 1), grid, domain, p=2.0)


def test_form_matches_double_sum_oracle():
    domain, grid, kernel, ev = inverse_power_setup(256)
    assert ev.mode == "shared"
    u = linear_field(grid, domain)
    got = ev.value(u)

    centers = grid.centers()
    flat = u.flat
    rows = ev.row_cells
    h = grid.h
    terms = []
    for i in rows:
        z = centers - centers[i]
        mu = kernel.eval_batch(np.repeat(centers[i][None, :], len(z), axis=0), z)
        terms.append(float(np.sum(mu * np.abs(flat - flat[i]) ** 2)) * h * h)
    oracle = math.fsum(terms)
    assert got == pytest.approx(oracle, rel=1e-12)


def test_form_value_refines_smoothly():
    _, grid, _, ev = inverse_power_setup(256)
    coarse = ev.value(linear_field(grid, domain_1d()))
    domain2, grid2, _, ev2 = inverse_power_setup(1024)
    fine = ev2.value(linear_field(grid2, domain2))
    assert coarse == pytest.approx(fine, rel=0.02)


def test_form_exit_weights_constant_field():
    # frozen oracle: total exit mass for u = 1 on (0,1) with the
    # inverse-square kernel on the annulus (1/4, 1/2) is 4 ln 2
    domain = domain_1d()
    grid = disc.make_grid((0.0,), (1.0,), 64)
    kernel = ker.InversePower(eps=0.25, delta=0.5, p=2.0, n=1)
    ev = disc.assemble_form(kernel, grid, domain, p=2.0, subsample=4)
    const = disc.field_from_callable(grid, lambda c: np.ones(len(c)),
                                    region=domain.omega)
    assert ev.value(const) == pytest.approx(4.0 * math.log(2.0), rel=0.02)


def test_form_modes_agree(monkeypatch):
    domain = geo.DomainConfig(geo.Box((0.0, 0.0), (2.0, 2.0)),
                              geo.Box((2.0, 0.0), (2.5, 2.0)),
                              bounds=((0.0, 0.0), (2.5, 2.0)))
    grid = disc.make_grid((0.0, 0.0), (2.0, 2.0), 24)
    lam = ker.Laminate(delta1=0.5, delta2=0.25, theta=math.pi / 4.0, p=2.0)
    ev = disc.assemble_form(lam, grid, domain, p=2.0, subsample=2)
    assert ev.mode == "rows"
    monkeypatch.setattr(disc, "_TABLE_ENTRY_LIMIT", 1)
    stream = disc.assemble_form(lam, grid, domain, p=2.0, subsample=2)
    assert stream.mode == "stream"
    rng = np.random.Generator(np.random.Philox(key=7))
    vals = np.where(geo.contains(domain.omega, grid.centers()),
                    rng.normal(size=grid.num_cells), 0.0)
    f = disc.ScalarField(grid, vals.reshape(grid.dims))
    assert ev.value(f) == pytest.approx(stream.value(f), rel=1e-12)


def test_form_value_many_matches_single():
    domain, grid, _, ev = inverse_power_setup(64)
    fields = disc.test_functions(grid, domain, count=3, seed=11, family="sine")
    many = ev.value_many(fields)
    singles = [ev.value(f) for f in fields]
    assert many == pytest.approx(singles, rel=1e-14)


def test_form_distance_scaled_normalizer_cache():
    omega = geo.Box((-1.0, -1.0), (1.0, 1.0))
    domain = geo.DomainConfig(omega, geo.Point((0.0, 0.0)),
                              bounds=((-1.0, -1.0), (1.0, 1.0)))
    grid = disc.make_grid((-1.0, -1.0), (1.0, 1.0), 16)
    kernel = ker.DistanceScaled(geo.Point((0.0, 0.0)), beta=2.5, delta0=0.5,
                                p=2.0, n=2)
    ev = disc.assemble_form(kernel, grid, domain, p=2.0, subsample=1)
    assert ev.row_normalizer is not None
    f = disc.test_functions(grid, domain, count=1, seed=2, family="distance",
                            p=2.0, beta=2.5, s=0.5)[0]
    fast = ev.value(f)
    # per-call quadrature normalizers agree with the frozen row cache
    slow = disc.FormEvaluator(grid, domain, kernel, 2.0, ev.row_cells,
                              ev.x_weight, ev.offsets, ev.subsample,
                              "stream").value(f)
    assert fast > 0.0
    assert fast == pytest.approx(slow, rel=0.02)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def test_lhs_norm_constant_exact():
    domain, grid, _, _ = inverse_power_setup(64)
    const = disc.field_from_callable(grid, lambda c: np.ones(len(c)),
                                    region=domain.omega)
    assert disc.lhs_norm(const, 2.0, domain.omega) == pytest.approx(1.0, abs=1e-12)


def test_lhs_norm_linear_third():
    domain, grid, _, _ = inverse_power_setup(64)
    f = linear_field(grid, domain)
    assert disc.lhs_norm(f, 2.0, domain.omega) == pytest.approx(1.0 / 3.0, rel=0.01)


def test_lhs_norm_empty_region():
    domain, grid, _, _ = inverse_power_setup(64)
    f = linear_field(grid, domain)
    far = geo.Ball((50.0,), 0.25)
    assert disc.lhs_norm(f, 2.0, far) == 0.0


# ---------------------------------------------------------------------------
# quadratic matrix and sharp constants
# ---------------------------------------------------------------------------


def test_quadratic_matrix_symmetric_psd_and_consistent():
    domain, grid, _, ev = inverse_power_setup(64)
    q = ev.quadratic_matrix()
    assert np.max(np.abs(q - q.T)) <= 1e-12
    evals = np.linalg.eigvalsh(q)
    assert evals.min() >= -1e-12 * max(1.0, evals.max())
    for seed in (3, 4):
        f = disc.test_functions(grid, domain, count=1, seed=seed, family="bump")[0]
        u_free = f.flat[ev.row_cells]
        assert float(u_free @ q @ u_free) == pytest.approx(ev.value(f), rel=1e-10)


def test_sharp_constant_form_below_paper_bound():
    domain, grid, _, ev = inverse_power_setup(128)
    out = disc.sharp_constant_p2(ev)
    assert out["route"] == "form"
    assert 0.0 < out["c_sharp"] <= 1.0
    _, _, _, ev2 = inverse_power_setup(256)
    out2 = disc.sharp_constant_p2(ev2)
    assert out2["c_sharp"] == pytest.approx(out["c_sharp"], rel=0.10)


def test_sharp_constant_operator_below_paper_bound():
    # forward mean with the 1/delta scale: constant 4 (1 + diam)^3 / eta(1)^2 = 128
    domain = forward_domain_1d()
    kernel = ker.HalfBallCone(delta=0.5, axis=(1.0,))
    grid = disc.make_grid((0.0,), (1.5,), 192)
    op = disc.assemble_gradient(kernel, wts.ConstantOne(), grid, domain, p=2.0,
                                scale=2.0)
    out = disc.sharp_constant_p2(op)
    assert out["route"] == "operator"
    assert 0.0 < out["c_sharp"] <= 128.0
    grid2 = disc.make_grid((0.0,), (1.5,), 384)
    op2 = disc.assemble_gradient(kernel, wts.ConstantOne(), grid2, domain, p=2.0,
                                 scale=2.0)
    out2 = disc.sharp_constant_p2(op2)
    assert out2["c_sharp"] == pytest.approx(out["c_sharp"], rel=0.10)


def test_sharp_constant_singular_reports_vector():
    domain = domain_1d()
    grid = disc.make_grid((0.0,), (1.0,), 8)
    rows = disc.omega_cells(grid, domain)
    op = disc.OperatorMatrix(grid, rows, np.zeros((len(rows), grid.num_cells)),
                             np.zeros(len(rows)), np.ones(len(rows)), 2.0, ())
    with pytest.raises(ResolutionError) as err:
        disc.sharp_constant_p2(op)
    assert hasattr(err.value, "vector")


def test_sharp_constant_dense_cap():
    domain = domain_1d()
    grid = geo.Grid((0.0,), 1.0 / 5001.0, (5001,))
    rows = np.arange(5001)
    op = disc.OperatorMatrix(grid, rows, np.zeros((2, 2)), np.zeros(2),
                             np.ones(2), 2.0, ())
    object.__setattr__(op, "row_cells", rows)
    with pytest.raises(ResolutionError):
        disc.sharp_constant_p2(op)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def test_verify_inequality_exact_regime():
    domain, grid, _, ev = inverse_power_setup(256)
    diam_sq = 1.0
    fields = disc.test_functions(grid, domain, count=20, seed=29, family="sine")
    for f in fields:
        report = ev and disc.verify_inequality(f, ev, diam_sq, domain, tol=1e-10)
        assert report["pass"], report
        assert report["lhs"] <= report["bound"]


def test_verify_inequality_rejects_inadmissible():
    domain, grid, _, ev = inverse_power_setup(64)
    bad = disc.ScalarField(grid, np.ones(grid.dims))
    with pytest.raises(ConfigError):
        disc.verify_inequality(bad, ev, 1.0, domain, tol=1e-10)


def test_verify_report_shape():
    domain, grid, _, ev = inverse_power_setup(64)
    f = disc.test_functions(grid, domain, count=1, seed=5, family="bump")[0]
    report = disc.verify_inequality(f, ev, 1.0, domain, tol=0.05)
    for key in ("schema", "lhs", "functional", "constant", "tol", "bound",
                "ratio", "pass"):
        assert key in report
    assert report["schema"] == disc.DISCRETE_SCHEMA
    assert report["ratio"] == pytest.approx(
        report["lhs"] / report["functional"], rel=1e-12)


def test_verify_operator_route():
    domain = forward_domain_1d()
    kernel = ker.HalfBallCone(delta=0.5, axis=(1.0,))
    grid = disc.make_grid((0.0,), (1.5,), 96)
    op = disc.assemble_gradient(kernel, wts.ConstantOne(), grid, domain, p=2.0,
                                scale=2.0)
    for f in disc.test_functions(grid, domain, count=10, seed=17, family="sine"):
        report = disc.verify_inequality(f, op, 128.0, domain, tol=0.05)
        assert report["pass"], report


# ---------------------------------------------------------------------------
# test function families
# ---------------------------------------------------------------------------


def test_test_functions_admissible_and_seeded():
    domain, grid, _, _ = inverse_power_setup(64)
    a = disc.test_functions(grid, domain, count=4, seed=13, family="bump")
    b = disc.test_functions(grid, domain, count=4, seed=13, family="bump")
    for fa, fb in zip(a, b):
        assert np.array_equal(fa.values, fb.values)
        assert disc.off_domain_max(fa, domain) == 0.0
        assert np.max(np.abs(fa.values)) == pytest.approx(1.0)
    c = disc.test_functions(grid, domain, count=4, seed=14, family="bump")
    assert not np.array_equal(a[0].values, c[0].values)


def test_distance_family_threshold_gate():
    omega = geo.Box((-1.0, -1.0), (1.0, 1.0))
    gamma = geo.Point((0.0, 0.0))
    domain = geo.DomainConfig(omega, gamma,
                              bounds=((-1.0, -1.0), (1.0, 1.0)))
    grid = disc.make_grid((-1.0, -1.0), (1.0, 1.0), 32)
    with pytest.raises(GateError) as err:
        disc.test_functions(grid, domain, count=1, seed=1, family="distance",
                            p=2.0, beta=2.5, s=0.25)
    assert "0.25" in str(err.value)
    ok = disc.test_functions(grid, domain, count=2, seed=1, family="distance",
                             p=2.0, beta=2.5, s=0.5)
    for f in ok:
        assert disc.off_domain_max(f, domain) == 0.0
        assert np.max(np.abs(f.values)) > 0.0


def test_unknown_family_rejected():
    domain, grid, _, _ = inverse_power_setup(32)
    with pytest.raises(ConfigError):
        disc.test_functions(grid, domain, count=1, seed=1, family="fourier")


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------


def test_field_csv_round_numbers(tmp_path):
    domain, grid, _, _ = inverse_power_setup(8)
    f = linear_field(grid, domain)
    path = tmp_path / "field.csv"
    disc.field_to_csv(f, str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "index,x0,value"
    assert len(lines) == grid.num_cells + 1


def test_matrix_triplets_export(tmp_path):
    domain = forward_domain_1d()
    grid = disc.make_grid((0.0,), (1.5,), 16)
    kernel = ker.HalfBallCone(delta=0.5, axis=(1.0,))
    op = disc.assemble_gradient(kernel, wts.ConstantOne(), grid, domain, p=2.0)
    path = tmp_path / "matrix.csv"
    disc.matrix_to_triplets(op, str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "row,col,value"
    assert len(lines) == len(op.triplets()) + 1
    # row sums of the combined matrix reproduce G applied to ones
    totals = {}
    for line in lines[1:]:
        r, _, v = line.split(",")
        totals[int(r)] = totals.get(int(r), 0.0) + float(v)
    for r_cell, total in totals.items():
        assert abs(total) <= 1e-10
