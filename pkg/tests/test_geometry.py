import math

import numpy as np
import pytest

from npi.constants import cone_volume_fraction
from npi.errors import ConfigError
from npi.geometry import (
    AnnulusAround,
    Ball,
    Box,
    BoxBoundaryFace,
    Circle,
    Complement,
    Cone,
    DomainConfig,
    Grid,
    HalfSpace,
    HyperplaneH,
    Intersection,
    Point,
    Segment,
    Translate,
    Union,
    cell_mask,
    contains,
    distance,
    from_dict,
    measure_mc,
    projection,
    sector_volume,
    uniform_counter,
)


def test_contains_examples():
    cone = Cone((0.0, 0.0), (0.0, 1.0), math.pi / 4)
    assert contains(cone, (0.1, 1.0))
    assert not contains(cone, (1.0, 0.1))
    assert not contains(Ball((0.0, 0.0), 1.0), (1.0, 0.0))  # boundary excluded
    ann = AnnulusAround(Point((0.0, 0.0)), 0.5, 1.0)
    assert contains(ann, (0.75, 0.0))
    assert not contains(ann, (0.5, 0.0))
    assert not contains(ann, (0.2, 0.1))


def test_contains_batch_shapes():
    box = Box((0.0, 0.0), (1.0, 1.0))
    pts = np.array([[0.5, 0.5], [1.5, 0.5], [0.0, 0.0]])
    np.testing.assert_array_equal(contains(box, pts), [True, False, False])


def test_combinators():
    left = Box((0.0,), (1.0,))
    right = Box((0.5,), (2.0,))
    assert contains(Intersection((left, right)), 0.75)
    assert not contains(Intersection((left, right)), 0.25)
    assert contains(Union((left, right)), 0.25)
    assert contains(Translate(left, (2.0,)), 2.5)
    comp = Complement(Ball((0.0, 0.0), 0.5), ((-1.0, -1.0), (1.0, 1.0)))
    assert contains(comp, (0.75, 0.0))
    assert not contains(comp, (0.25, 0.0))
    assert not contains(comp, (1.5, 0.0))


def test_halfspace_and_cone_validation():
    with pytest.raises(ConfigError):
        HalfSpace((0.0, 0.0), (1.0, 1.0))  # not unit norm
    with pytest.raises(ConfigError):
        Cone((0.0,), (2.0,), math.pi / 4)
    with pytest.raises(ConfigError):
        Cone((0.0, 0.0), (0.0, 1.0), 0.0)
    hs = HalfSpace((0.0, 0.0), (0.0, 1.0))
    assert contains(hs, (5.0, 0.1))
    assert not contains(hs, (5.0, 0.0))


def test_distance_examples():
    assert distance(Point((0.0, 0.0)), (3.0, 4.0)) == pytest.approx(5.0, abs=1e-15)
    assert distance(Circle((0.0, 0.0), 1.0), (2.0, 0.0)) == pytest.approx(1.0, abs=1e-15)
    assert distance(Segment((0.0, 0.0), (1.0, 0.0)), (2.0, 1.0)) == pytest.approx(
        math.sqrt(2.0), abs=1e-12
    )
    assert distance(HyperplaneH((0,), 2), (2.0, 5.0)) == pytest.approx(5.0)
    face = BoxBoundaryFace((0.0, 0.0), (1.0, 1.0), axis=1, side=0)
    assert distance(face, (0.5, 0.3)) == pytest.approx(0.3)
    assert distance(face, (2.0, 0.0)) == pytest.approx(1.0)


def test_projection_examples_and_consistency():
    np.testing.assert_allclose(projection(Point((0.0, 0.0)), (3.0, 4.0)), [0.0, 0.0])
    np.testing.assert_allclose(projection(HyperplaneH((0,), 2), (2.0, 5.0)), [2.0, 0.0])
    np.testing.assert_allclose(projection(Circle((0.0, 0.0), 1.0), (2.0, 0.0)), [1.0, 0.0])
    # circle center tie-break: lexicographically smallest point
    np.testing.assert_allclose(projection(Circle((0.0, 0.0), 1.0), (0.0, 0.0)), [-1.0, 0.0])

    rng = np.random.default_rng(5)
    targets = [
        Point((0.2, -0.3)),
        Segment((0.0, 0.0), (1.0, 2.0)),
        Circle((0.5, 0.5), 0.7),
        HyperplaneH((1,), 2),
        BoxBoundaryFace((0.0, 0.0), (1.0, 1.0), axis=0, side=1),
    ]
    pts = rng.uniform(-3.0, 3.0, size=(200, 2))
    for t in targets:
        d = distance(t, pts)
        p = projection(t, pts)
        np.testing.assert_allclose(np.linalg.norm(pts - p, axis=1), d, atol=1e-12)


def test_distance_is_one_lipschitz():
    rng = np.random.default_rng(17)
    targets = [
        Point((0.0, 0.0)),
        Segment((-1.0, 0.0), (1.0, 0.5)),
        Circle((0.0, 0.0), 1.0),
        HyperplaneH((0,), 2),
        BoxBoundaryFace((-1.0, -1.0), (1.0, 1.0), axis=1, side=1),
    ]
    x = rng.uniform(-2.0, 2.0, size=(500, 2))
    y = rng.uniform(-2.0, 2.0, size=(500, 2))
    gap = np.linalg.norm(x - y, axis=1)
    for t in targets:
        assert np.all(np.abs(distance(t, x) - distance(t, y)) <= gap + 1e-12)


def test_uniform_counter_chunk_invariance():
    whole = uniform_counter(123, 0, 1000, 2)
    first = uniform_counter(123, 0, 300, 2)
    rest = uniform_counter(123, 300, 700, 2)
    np.testing.assert_array_equal(np.vstack([first, rest]), whole)


def test_measure_mc_ball():
    out = measure_mc(Ball((0.0, 0.0), 1.0), 10**6, seed=42)
    assert abs(out["estimate"] - math.pi) <= 3.0 * out["stderr"]
    # deterministic, chunk-size independent
    again = measure_mc(Ball((0.0, 0.0), 1.0), 10**6, seed=42, chunk=12345)
    assert again["estimate"] == out["estimate"]


def test_measure_mc_sector():
    cone = Cone((0.0, 0.0), (1.0, 0.0), math.pi / 4)
    ring = AnnulusAround(Point((0.0, 0.0)), 0.0, 1.0)
    sector = Intersection((ring, cone))
    out = measure_mc(sector, 4 * 10**5, seed=3)
    assert abs(out["estimate"] - math.pi / 4.0) <= 3.0 * out["stderr"] + 1e-3


def test_measure_mc_annulus():
    out = measure_mc(AnnulusAround(Point((0.0, 0.0)), 0.5, 1.0), 4 * 10**5, seed=9)
    assert abs(out["estimate"] - 0.75 * math.pi) <= 3.0 * out["stderr"] + 1e-3


def test_measure_mc_monotone():
    small = Intersection((Ball((0.0, 0.0), 1.0), Box((0.0, 0.0), (2.0, 2.0))))
    big = Ball((0.0, 0.0), 1.0)
    a = measure_mc(small, 10**5, seed=1)
    b = measure_mc(big, 10**5, seed=2)
    assert a["estimate"] <= b["estimate"] + 3.0 * (a["stderr"] + b["stderr"])


def test_measure_mc_errors():
    with pytest.raises(ConfigError):
        measure_mc(Ball((0.0,), 1.0), 100, seed=0)  # too few samples
    with pytest.raises(ConfigError):
        measure_mc(Cone((0.0, 0.0), (1.0, 0.0), 0.5), 10**4, seed=0)  # unbounded
    with pytest.raises(ConfigError):
        measure_mc(Box((0.0, 0.0), (0.0, 1.0)), 10**4, seed=0)  # degenerate


def test_cone_volume_lower_bound():
    for n in (2, 3):
        for theta in (math.pi / 6, math.pi / 4):
            vertex = (0.0,) * n
            axis = (1.0,) + (0.0,) * (n - 1)
            sec = Intersection(
                (AnnulusAround(Point(vertex), 0.0, 1.0), Cone(vertex, axis, theta))
            )
            out = measure_mc(sec, 2 * 10**5, seed=n * 10 + 1)
            assert out["estimate"] + 3.0 * out["stderr"] >= cone_volume_fraction(n, theta)
            # cross-check against the analytic sector volume
            assert abs(out["estimate"] - sector_volume(n, theta)) <= 3 * out["stderr"] + 2e-3


def test_grid_centers_and_index():
    g = Grid((0.0, 0.0), 0.25, (4, 4))
    c = g.centers()
    assert c.shape == (16, 2)
    np.testing.assert_allclose(c[0], [0.125, 0.125])
    np.testing.assert_allclose(c[-1], [0.875, 0.875])
    idx = g.index_of(c)
    np.testing.assert_array_equal(idx, np.arange(16))
    assert g.index_of(np.array([[1.5, 0.5]]))[0] == -1
    assert g.cell_volume == pytest.approx(0.0625)


def test_cell_mask_box_and_empty():
    g = Grid((0.0, 0.0), 0.25, (4, 4))
    np.testing.assert_allclose(cell_mask(g, Box((0.0, 0.0), (1.0, 1.0)), 2), 1.0)
    np.testing.assert_allclose(cell_mask(g, Box((5.0, 5.0), (6.0, 6.0)), 2), 0.0)


def test_cell_mask_ball_area():
    g = Grid((-1.0, -1.0), 2.0 / 64.0, (64, 64))
    frac = cell_mask(g, Ball((0.0, 0.0), 1.0), 4)
    area = frac.sum() * g.cell_volume
    assert area == pytest.approx(math.pi, rel=0.01)


def test_json_round_trip():
    region = Intersection(
        (
            AnnulusAround(Segment((0.0, 0.0), (1.0, 0.0)), 0.1, 0.6),
            Cone((0.0, 0.0), (0.0, 1.0), math.pi / 3),
            Union((Ball((0.0, 0.0), 1.0), Box((0.0, 0.0), (1.0, 1.0)))),
        )
    )
    rebuilt = from_dict(region.to_dict())
    rng = np.random.default_rng(2)
    pts = rng.uniform(-1.5, 1.5, size=(300, 2))
    np.testing.assert_array_equal(contains(rebuilt, pts), contains(region, pts))


def test_domain_config():
    omega = Box((0.0,), (1.0,))
    gamma = Box((1.0,), (1.5,))
    dc = DomainConfig(omega, gamma)
    lo, hi = dc.box()
    np.testing.assert_allclose(lo, [0.0])
    np.testing.assert_allclose(hi, [1.5])
    assert not dc.gamma_is_target()
    assert DomainConfig(omega, Point((0.5,))).gamma_is_target()
    d = dc.to_dict()
    assert d["schema"] == "geometry_v1"
