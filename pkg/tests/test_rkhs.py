import math

import numpy as np
import pytest
from scipy import integrate

from kerndisc.kernels import FAMILIES, PeriodicKernel, SplineKernel, kernel_from_id
from kerndisc.rkhs import (GramMatrix, NormParams, PointSet, SingularGramError,
                           discrete_norm, gram, partition_of_unity, project, spline_eigen)
from kerndisc.sampling import uniform_points

CUBE_IDS = [f"{loc}-{fam}" for loc in ("per", "tra") for fam in FAMILIES]


def test_pointset_validation():
    with pytest.raises(ValueError):
        PointSet(np.array([[0.5, 1.5]]))
    with pytest.raises(ValueError):
        PointSet(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        PointSet(np.zeros((0, 1)))
    p = PointSet(np.array([[0.0, 1.0], [0.5, 0.25]]))
    assert p.n == 2 and p.dim == 2


def test_gram_spline_example():
    pts = PointSet(np.array([[0.25], [0.75]]))
    g = gram(SplineKernel(1), pts)
    assert np.allclose(g.matrix, [[0.1875, 0.0625], [0.0625, 0.1875]], atol=1e-15)


def test_gram_single_point():
    pts = PointSet(np.array([[0.3, 0.4]]))
    k = PeriodicKernel("exp", 2)
    g = gram(k, pts)
    assert g.matrix[0, 0] == pytest.approx(k(pts.coords[0], pts.coords[0]))


@pytest.mark.filterwarnings("ignore:Gram matrix is numerically singular")
@pytest.mark.parametrize("kid", CUBE_IDS)
def test_gram_psd_over_seeds(kid):
    # smooth kernels go numerically singular at N=32 in 1-D; that is the
    # documented flag-not-fail behavior, and eigenvalues must still not
    # dip below the PSD slack
    for dim in (1, 2, 4):
        k = kernel_from_id(kid, dim)
        for seed in range(20):
            for n in (8, 32):
                pts = uniform_points(1000 * seed + n, n, dim)
                vals = gram(k, pts).eigenvalues
                assert vals[-1] > -1e-8 * vals[0], (kid, dim, seed, n)


def test_gram_positive_definite_example():
    pts = uniform_points(0, 64, 4)
    vals = gram(PeriodicKernel("gauss", 4), pts).eigenvalues
    assert vals[-1] > 0


def test_gram_flags_near_duplicates():
    coords = np.array([[0.5], [0.5 + 1e-14], [0.25]])
    with pytest.warns(RuntimeWarning, match="singular"):
        g = gram(SplineKernel(1), PointSet(coords))
    assert g.is_near_singular()
    with pytest.raises(SingularGramError) as err:
        g.solve(np.ones(3))
    assert err.value.condition > 1e12


def test_gram_rejects_asymmetric():
    with pytest.raises(ValueError, match="asymmetric"):
        GramMatrix(np.array([[1.0, 0.5], [0.2, 1.0]]))


def test_reproducing_property_bilinear():
    # e_m^T K(Y,Y) e_n equals the kernel value exactly
    k = PeriodicKernel("mq", 2)
    pts = uniform_points(4, 10, 2)
    g = gram(k, pts)
    for m, n in ((0, 3), (5, 5), (9, 1)):
        assert g.matrix[m, n] == pytest.approx(k(pts.coords[m], pts.coords[n]), rel=1e-15)


def test_project_unit_vector_for_gram_row():
    k = PeriodicKernel("gauss", 2)
    pts = uniform_points(9, 12, 2)
    g = gram(k, pts)
    a = project(k, pts, g.matrix[:, 4], gram_matrix=g)
    assert np.allclose(a, np.eye(12)[4], atol=1e-8)


def test_project_single_point_closed_form():
    pts = PointSet(np.array([[0.5]]))
    a = project(SplineKernel(1), pts, np.array([1.0]))
    assert a[0] == pytest.approx(4.0)  # 1 / K(0.5, 0.5) = 1 / 0.25


def test_project_interpolates_and_is_idempotent():
    k = PeriodicKernel("exp", 2)
    pts = uniform_points(17, 16, 2)
    z = np.array([0.3, 0.8])
    f_values = k.pairwise(pts.coords, z[None, :])[:, 0]
    a = project(k, pts, f_values)
    g = gram(k, pts)
    interp_at_nodes = g.matrix @ a
    assert np.max(np.abs(interp_at_nodes - f_values)) < 1e-8 * max(1, np.abs(f_values).max())
    a2 = project(k, pts, interp_at_nodes)
    assert np.max(np.abs(a2 - a)) < 1e-8


def test_partition_of_unity_kronecker():
    k = PeriodicKernel("gauss", 2)
    pts = uniform_points(23, 9, 2)
    for m in (0, 4, 8):
        theta = partition_of_unity(k, pts, pts.coords[m])
        assert np.max(np.abs(theta - np.eye(9)[m])) < 1e-8


def test_partition_of_unity_single_point():
    pts = PointSet(np.array([[0.4]]))
    k = SplineKernel(1)
    theta = partition_of_unity(k, pts, np.array([0.9]))
    assert theta[0] == pytest.approx(k([0.9], [0.4]) / k([0.4], [0.4]))


def test_partition_of_unity_matches_projection():
    # interpolation via the cardinal basis equals the projected expansion
    k = SplineKernel(1)
    pts = PointSet(np.array([[1 / 3], [2 / 3]]))
    f_values = np.array([0.7, -0.2])
    x = np.array([0.5])
    theta = partition_of_unity(k, pts, x)
    via_pu = float(f_values @ theta)
    a = project(k, pts, f_values)
    via_proj = float(a @ k.pairwise(pts.coords, x[None, :])[:, 0])
    assert via_pu == pytest.approx(via_proj, abs=1e-12)


def test_cauchy_schwarz_pointwise_bound():
    # |phi(x)| <= sqrt(K(x,x)) * native norm, for members of the span
    k = PeriodicKernel("exp", 2)
    pts = uniform_points(31, 12, 2)
    g = gram(k, pts)
    rng = np.random.default_rng(0)
    for _ in range(5):
        a = rng.standard_normal(12)
        norm = math.sqrt(a @ g.matrix @ a)
        x = rng.random(2)
        phi_x = float(a @ k.pairwise(pts.coords, x[None, :])[:, 0])
        assert abs(phi_x) <= math.sqrt(k(x, x)) * norm + 1e-12


def test_discrete_norm_native_identity():
    k = PeriodicKernel("mq", 2)
    pts = uniform_points(13, 10, 2)
    g = gram(k, pts)
    rng = np.random.default_rng(3)
    for _ in range(5):
        a = rng.standard_normal(10)
        native = math.sqrt(a @ g.matrix @ a)
        val = discrete_norm(k, pts, a, NormParams(s=0.5, p=2.0), gram_matrix=g)
        assert val == pytest.approx(native, rel=1e-10)


def test_discrete_norm_zero_and_single_point():
    k = SplineKernel(1)
    pts = PointSet(np.array([[0.3]]))
    assert discrete_norm(k, pts, np.array([0.0]), NormParams(1, 2)) == 0.0
    # single eigenpair: (lam^{-2} (lam * 1)^2)^{1/2} = 1
    assert discrete_norm(k, pts, np.array([1.0]), NormParams(1, 2)) == pytest.approx(1.0)


def test_norm_params_validation():
    with pytest.raises(ValueError):
        NormParams(s=-0.1)
    with pytest.raises(ValueError):
        NormParams(p=0.5)
    assert NormParams(1, 2).p_conjugate == 2.0
    assert NormParams(1, 1).p_conjugate == math.inf


def test_spline_eigen_values():
    e = spline_eigen(1, [1])
    assert e.eigenvalue == pytest.approx(1.0 / math.pi**2)
    assert e.eigenvalue == pytest.approx(0.10132118, abs=1e-8)
    e12 = spline_eigen(2, [1, 2])
    assert e12.eigenvalue == pytest.approx(1.0 / (4 * math.pi**4))
    e3 = spline_eigen(1, [3])
    assert e3(np.array([0.5])) == pytest.approx(-math.sqrt(2.0))
    with pytest.raises(ValueError):
        spline_eigen(2, [1, 0])


def test_spline_eigen_orthonormal_by_quadrature():
    for i, j in ((1, 1), (1, 2), (2, 2), (3, 5)):
        zi, zj = spline_eigen(1, [i]), spline_eigen(1, [j])
        val, _ = integrate.quad(lambda x: zi([x]) * zj([x]), 0, 1)
        assert val == pytest.approx(1.0 if i == j else 0.0, abs=1e-8)


def test_spline_eigen_integral_identity():
    for i in (1, 2, 3, 6):
        e = spline_eigen(1, [i])
        val, _ = integrate.quad(lambda x: e([x]), 0, 1)
        assert val == pytest.approx(e.integral(), abs=1e-12)
        assert e.integral() == pytest.approx(
            math.sqrt(2) * (1 - math.cos(i * math.pi)) / (i * math.pi))


def test_spline_eigen_operator_identity_by_quadrature():
    # int K(x, y) zeta(y) dy = lambda zeta(x), spot-checked in 1-D
    k = SplineKernel(1)
    for i in (1, 2, 5, 8):
        e = spline_eigen(1, [i])
        for x in (0.21, 0.5, 0.83):
            val, _ = integrate.quad(lambda y: k([x], [y]) * e([y]), 0, 1,
                                    points=[x], limit=200)
            assert val == pytest.approx(e.eigenvalue * e([x]), abs=1e-8)


def test_mercer_partial_sum_approaches_kernel():
    # sum lam_a zeta_a(x) zeta_a(y) converges to the spline kernel
    k = SplineKernel(1)
    x, y = 0.3, 0.7
    total = sum(spline_eigen(1, [i]).eigenvalue * spline_eigen(1, [i])([x])
                * spline_eigen(1, [i])([y]) for i in range(1, 2000))
    assert total == pytest.approx(k([x], [y]), abs=1e-7)
