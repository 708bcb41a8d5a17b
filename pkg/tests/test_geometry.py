import numpy as np
import pytest

from superliouville.errors import GridTooSmall, OutOfDomain, SingularPoint
from superliouville.geometry import (ConformalMap, Grid, conformal_transform, flat_metric,
                                     kelvin_transform, sample, sphere_metric, SolutionPair)
from superliouville.solutions import family


def test_grid_basics():
    g = Grid.square(2.0, 9)
    assert g.shape == (9, 9)
    assert g.h == pytest.approx(0.5)
    assert g.x1[0] == -2.0 and g.x1[-1] == 2.0
    X, Y = g.coords()
    assert X[3, 0] == g.x1[3] and Y[0, 5] == g.x2[5]
    assert g.center_index() == (4, 4)
    assert g.interior().sum() == 49
    assert g.inner_radius() == pytest.approx(2.0)


@pytest.mark.parametrize("n", [1, 2])
def test_grid_too_small(n):
    with pytest.raises(GridTooSmall):
        Grid((0.0, 0.0), 0.1, n, 5)


def test_nonpositive_spacing():
    with pytest.raises(ValueError):
        Grid((0.0, 0.0), 0.0, 5, 5)


def test_crop_requires_nodes_and_keeps_values():
    g = Grid.square(4.0, 33)
    p = family("spinor_bubble", g)
    c = p.crop((-2, 2, -1, 3))
    assert c.grid.shape == (17, 17)
    assert c.grid.x1[0] == -2.0 and c.grid.x2[-1] == 3.0
    ref = family("spinor_bubble", c.grid)
    assert np.array_equal(c.u, ref.u)


def test_metrics():
    g = Grid.square(1.0, 5)
    assert flat_metric(g).is_flat
    s = sphere_metric(g)
    X, Y = g.coords()
    assert np.allclose(s.rho, 4 / (1 + X ** 2 + Y ** 2) ** 2)
    assert np.allclose(s.K, 1.0)


def test_pair_shape_validation():
    g = Grid.square(1.0, 5)
    with pytest.raises(ValueError):
        SolutionPair(g, flat_metric(g), np.zeros((4, 5)), np.zeros((2, 5, 5), complex))


def test_sample_reproduces_quadratics():
    g = Grid.square(1.0, 21)
    X, Y = g.coords()
    f = 1 + 2 * X - Y + 3 * X * Y + X ** 2 - 2 * Y ** 2
    px = np.array([-0.97, -0.33, 0.0, 0.512, 0.999])
    py = np.array([0.91, -0.999, 0.25, -0.1, 0.0])
    exact = 1 + 2 * px - py + 3 * px * py + px ** 2 - 2 * py ** 2
    assert np.allclose(sample(f, g, px, py), exact, atol=1e-12)


def test_sample_is_third_order(rng):
    px = rng.uniform(-0.9, 0.9, 50)
    py = rng.uniform(-0.9, 0.9, 50)
    errs = []
    for n in (41, 81, 161):
        g = Grid.square(1.0, n)
        X, Y = g.coords()
        errs.append(np.abs(sample(np.sin(2 * X) * np.cos(3 * Y), g, px, py)
                           - np.sin(2 * px) * np.cos(3 * py)).max())
    assert errs[0] / errs[1] > 6 and errs[1] / errs[2] > 6


def test_dilation_of_bubble_is_dilated_bubble():
    g = Grid.square(8.0, 129)
    p = family("spinor_bubble", g)
    target = Grid.square(2.0, 101)
    t = conformal_transform(p, ConformalMap.dilation(2.0), grid=target)
    ref = family("spinor_bubble", target, scale=2.0)
    assert np.abs(t.u - ref.u).max() < 1e-3
    assert np.abs(t.psi - ref.psi).max() < 1e-2


def test_translation_is_exact_on_nodes():
    g = Grid.square(4.0, 33)
    p = family("scalar_bubble", g)
    t = conformal_transform(p, ConformalMap.translation((0.5, -0.25)))
    ref = family("scalar_bubble", t.grid, center=(-0.5, 0.25))
    assert np.allclose(t.u, ref.u, atol=1e-13)


def test_conformal_out_of_domain():
    g = Grid.square(1.0, 17)
    p = family("scalar_bubble", g)
    with pytest.raises(OutOfDomain):
        conformal_transform(p, ConformalMap.dilation(2.0), grid=Grid.square(1.0, 17))


def test_conformal_map_inverse():
    m = ConformalMap.dilation(3.0)
    x = m(*m.inverse()(0.3, -0.7))
    assert np.allclose(x, (0.3, -0.7))


def test_kelvin_masks_and_singular_point():
    g = Grid.square(4.0, 33)
    p = family("scalar_bubble", g)
    k = kelvin_transform(p)
    r = g.radius()
    assert np.all(np.isnan(k.u[r < 0.25]))
    assert np.all(np.isfinite(k.u[r > 0.26]))
    with pytest.raises(SingularPoint):
        kelvin_transform(p, mask_inner=False)


def test_kelvin_of_scalar_bubble_is_the_bubble():
    # 1/|x| inversion fixes the standard bubble
    g = Grid.square(4.0, 161)
    p = family("scalar_bubble", g)
    k = kelvin_transform(p, r_max=3.0)
    m = np.isfinite(k.u)
    assert np.abs(k.u - p.u)[m].max() < 1e-3


def test_clifford_spinor_law_squares_to_minus_one():
    g = Grid.square(4.0, 161)
    p = family("spinor_bubble", g)
    inner = Grid.square(1.5, 61)
    kk = kelvin_transform(kelvin_transform(p, spinor_law="clifford"), grid=inner, spinor_law="clifford")
    ref = family("spinor_bubble", inner)
    m = np.isfinite(kk.u)
    assert np.abs(kk.psi + ref.psi)[:, m].max() < 1e-2
