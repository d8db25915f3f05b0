import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvsinglet.spin import (
    DEGENERACY_TOL_HZ,
    NV_AXES,
    MagneticFieldVec,
    PhysicalConstants,
    SpinParams,
    all_resonances,
    hyperfine_lines,
    project_field,
)

# independent oracle: CODATA values typed in directly
GAMMA = 2.0028 * 9.2740100783e-24 / 6.62607015e-34

field_components = st.tuples(*[st.floats(-5e-3, 5e-3, allow_nan=False)] * 3)


def test_gyromagnetic_ratio():
    assert PhysicalConstants().gyromagnetic_ratio == pytest.approx(GAMMA, rel=1e-15)
    assert PhysicalConstants().gyromagnetic_ratio == pytest.approx(28.0317e9, rel=1e-5)


def test_one_millitesla_along_110():
    res = all_resonances(MagneticFieldVec.along((1, 1, 0), 1e-3))
    proj = np.array([a.b_projection for a in res.axes])
    np.testing.assert_allclose(np.abs(proj), [np.sqrt(2 / 3) * 1e-3, 0, np.sqrt(2 / 3) * 1e-3, 0], atol=1e-18)

    split = 2 * GAMMA * np.sqrt(2 / 3) * 1e-3
    for i in (0, 2):
        a = res.axes[i]
        assert abs((a.f_plus - a.f_minus) - split) < 1e3
        assert (a.f_plus + a.f_minus) / 2 == pytest.approx(2.870e9, abs=1e-3)
    # rounded value quoted for this geometry
    assert abs(split - 45.78e6) < 10e3
    for i in (1, 3):
        assert res.axes[i].f_plus == pytest.approx(2.870e9, abs=1e-3)
        assert res.axes[i].f_minus == pytest.approx(2.870e9, abs=1e-3)
    assert sorted(res.degenerate_groups) == [(0, 2), (1, 3)]


def test_zero_field_all_degenerate():
    res = all_resonances(MagneticFieldVec((0.0, 0.0, 0.0)))
    assert res.degenerate_groups == ((0, 1, 2, 3),)
    np.testing.assert_allclose(np.unique(res.line_centers()), [2.86784e9, 2.870e9, 2.87216e9])


def test_hyperfine_triplet():
    np.testing.assert_allclose(hyperfine_lines(2.9e9, SpinParams()), [2.9e9 - 2.16e6, 2.9e9, 2.9e9 + 2.16e6])
    assert hyperfine_lines(2.9e9, SpinParams(n_hyperfine=1)).tolist() == [2.9e9]


def test_line_weights_scale_with_axis_weights():
    res = all_resonances(MagneticFieldVec.along((1, 1, 0), 1e-3))
    centers, w = res.lines_with_weights([1, 0, 1, 0])
    assert centers.size == 4 * 2 * 3
    assert w.sum() == pytest.approx(2 * 2 * 3)
    with pytest.raises(ValueError):
        res.lines_with_weights([1, 1])


@pytest.mark.parametrize("kw", [dict(zfs_d=0), dict(hyperfine_a=-1), dict(n_hyperfine=2),
                                dict(amplitudes=(0.5, 0.5, 0.5))])
def test_spin_params_validation(kw):
    with pytest.raises(ValueError):
        SpinParams(**kw)


def test_field_validation():
    with pytest.raises(ValueError):
        MagneticFieldVec((0.0, np.nan, 0.0))
    with pytest.raises(ValueError):
        MagneticFieldVec.along((0, 0, 0), 1e-3)


@settings(max_examples=60, deadline=None)
@given(field_components)
def test_projection_sum_of_squares(b):
    # the four tetrahedral axes satisfy sum (n.B)^2 = 4/3 |B|^2 for any B
    b = MagneticFieldVec(b)
    s = sum(project_field(b, ax) ** 2 for ax in NV_AXES)
    assert s == pytest.approx(4 / 3 * b.magnitude ** 2, rel=1e-12, abs=1e-30)


@settings(max_examples=60, deadline=None)
@given(field_components)
def test_field_reversal_symmetry(b):
    b = MagneticFieldVec(b)
    np.testing.assert_allclose(all_resonances(b).line_centers(), all_resonances(-b).line_centers(), rtol=0, atol=1e-3)


@settings(max_examples=60, deadline=None)
@given(field_components)
def test_lines_symmetric_about_zfs(b):
    res = all_resonances(MagneticFieldVec(b))
    for a in res.axes:
        assert a.f_plus - 2.870e9 == pytest.approx(2.870e9 - a.f_minus, abs=1e-3)
        assert a.f_plus >= a.f_minus
    members = [i for g in res.degenerate_groups for i in g]
    assert sorted(members) == [0, 1, 2, 3]
    for g in res.degenerate_groups:
        assert all(abs(res.axes[i].f_plus - res.axes[g[0]].f_plus) < DEGENERACY_TOL_HZ for i in g)
