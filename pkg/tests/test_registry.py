import math

import pytest

from npi import discrete as disc
from npi import registry
from npi.errors import ConfigError


def test_names_sorted_and_unique():
    names = registry.names()
    assert names == sorted(names)
    assert len(names) == len(set(names))
    assert "basic-ex1-1d" in names and "discontinuous-2d" in names


def test_get_unknown_name():
    with pytest.raises(ConfigError, match="basic-ex1-1d"):
        registry.get("not-an-example")


def test_every_entry_revalidates():
    for name in registry.names():
        registry.get(name).validate()


def test_pinned_constants():
    expect = {
        "basic-ex1-1d": 128.0,
        "basic-ex2-1d": 1.0,
        "basic-ex2-2d": 2.0,
        "sign-change2-2d": 4.0,
        "discontinuous-2d": 64.0,
    }
    for name, value in expect.items():
        got = registry.get(name).constant.evaluate()["constant"]
        assert got == pytest.approx(value, rel=1e-12), name


def test_ratio_mode_entries_have_no_constant():
    for name in ("lowdim-point-2d", "lowdim-circle-2d"):
        cfg = registry.get(name)
        assert cfg.constant is None
        assert cfg.family == "distance"


def test_routes():
    assert registry.get("basic-ex1-1d").route == "gradient"
    assert registry.get("basic-ex1-ext-1d").route == "gradient"
    assert registry.get("sign-change1-2d").route == "gradient"
    assert registry.get("basic-ex2-1d").route == "form"
    assert registry.get("discontinuous-2d").route == "form"


def test_grid_resolution_mapping():
    cfg = registry.get("basic-ex1-1d")       # box spans 1.5x the core
    assert cfg.grid_cells0(128) == 192
    with pytest.raises(ConfigError):
        cfg.grid_cells0(255)
    cfg2 = registry.get("basic-ex2-1d")      # box spans 2x the core
    assert cfg2.grid_cells0(256) == 512
    assert cfg2.grid_cells0(255) == 510


def test_round_trip_all_entries():
    for name in registry.names():
        cfg = registry.get(name)
        d = cfg.to_dict()
        back = registry.config_from_dict(d)
        assert back.to_dict() == d, name


def test_with_overrides_grid_and_tol():
    cfg = registry.get("basic-ex2-1d")
    out = registry.with_overrides(cfg, grid=128, tol=0.01)
    assert out.omega_cells == 128
    assert out.tol == 0.01
    assert cfg.omega_cells == 256  # original untouched


def test_with_overrides_p_rewrites_kernel_and_constant():
    cfg = registry.get("basic-ex2-1d")
    out = registry.with_overrides(cfg, p=3.0)
    assert out.p == 3.0
    assert out.constant.params["p"] == 3.0
    assert out.kernel.p == 3.0
    # bound follows the exponent: diam^p = 1 for diam 1 at any p
    assert out.constant.evaluate()["constant"] == pytest.approx(1.0)


def test_with_overrides_bad_grid():
    with pytest.raises(ConfigError):
        registry.with_overrides(registry.get("basic-ex1-1d"), grid=255)


def test_assemble_and_fields_smoke():
    cfg = registry.get("basic-ex1-1d")
    grid = cfg.build_grid(32)
    functional = cfg.assemble(grid)
    fields = cfg.fields(grid, 3, seed=1)
    assert len(fields) == 3
    for f in fields:
        assert functional.value(f) > 0.0


def test_flow_entries_pass_phi_gate():
    for name in ("g-flow-1d", "discontinuous-2d"):
        cfg = registry.get(name)
        assert cfg.flow is not None and cfg.phi_region is not None
        assert cfg.absorbing is not None


def test_jensen_blocks_declared():
    have = {n for n in registry.names() if registry.get(n).jensen is not None}
    assert {"basic-ex1-1d", "sign-change1-2d", "lowdim-point-2d"} <= have
    for name in have:
        blk = registry.get(name).jensen
        assert blk["r"]["kind"] in ("const", "cone-sector")
        assert blk["nu"] > 0.0


def test_exact_regime_tolerances():
    for name in ("basic-ex2-1d", "basic-ex2-2d"):
        cfg = registry.get(name)
        assert cfg.tol == 1e-10
        assert cfg.subsample == 1


def test_sign_change2_constant_breakdown():
    cfg = registry.get("sign-change2-2d")
    bd = cfg.constant.evaluate()
    assert bd["constant"] == pytest.approx(4.0)
    assert bd["breakdown"]["nu_delta"] < 1.0


def test_variable_radius_entry_profile():
    cfg = registry.get("basic-ex1-ext-1d")
    k = cfg.kernel
    tau, delta = 0.95, 1.0
    r0 = float(k.radius_at([[0.0]])[0])
    r1 = float(k.radius_at([[1.0]])[0])
    assert tau ** (1.0 / 1.0) * delta <= min(r0, r1)
    assert max(r0, r1) <= delta


def test_grid_covers_collar():
    # form-route entries must grid the collar so pair endpoints resolve
    cfg = registry.get("discontinuous-2d")
    grid = cfg.build_grid()
    assert grid.dims == (48, 96)
    assert math.isclose(grid.h, 1.0 / 24.0)


def test_lowdim_rhs_finite_smoke():
    cfg = registry.get("lowdim-point-2d")
    grid = cfg.build_grid(16)
    functional = cfg.assemble(grid)
    f = cfg.fields(grid, 1, seed=2)[0]
    v = functional.value(f)
    assert math.isfinite(v) and v > 0.0
    assert disc.lhs_norm(f, cfg.p, cfg.domain.omega, subsample=1) > 0.0
