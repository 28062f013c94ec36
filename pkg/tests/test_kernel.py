import numpy as np
import pytest
from scipy.special import jv

from prodgap.errors import DomainError
from prodgap.params import ModelParams
from prodgap import kernel, specfun

# 10k-point trapezoid of int_0^1 J0(2 sqrt(xt)) J0(2 sqrt(yt)) dt at x=y=1,
# frozen from an independent evaluation through scipy's Bessel routines
K1_DIAG_AT_ONE = 0.3827385863181332


class TestBilinear:
    def test_lommel_reduction_point(self):
        p = ModelParams((0.0,))
        val = kernel.kernel_bilinear(p, 1.0, 2.0)
        assert val == pytest.approx(4.0 * kernel.bessel_kernel(0.0, 4.0, 8.0), abs=1e-14)

    def test_continuity_of_numerator(self, standard_params):
        grid = np.geomspace(1e-3, 50.0, 30)
        for p in standard_params:
            phis = specfun.phi_many(p, grid)
            psis = specfun.psi_many(p, grid)
            num = np.abs(np.sum(phis[: p.M + 1] * psis, axis=0))
            den = np.sum(np.abs(phis[: p.M + 1] * psis), axis=0)
            assert np.all(num <= 1e-10 * den)

    def test_matches_integral(self):
        p = ModelParams((0.0, 1.0))
        kb = kernel.kernel_bilinear(p, 0.5, 0.7)
        ki = kernel.kernel_integral(p, 0.5, 0.7)
        assert kb == pytest.approx(ki, abs=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            kernel.kernel_bilinear(ModelParams((0.0,)), -1.0, 2.0)

    def test_near_diagonal_taylor_branch(self):
        p = ModelParams((1.0, 2.0))
        for d in [0.0, 1e-6, 5e-5]:
            kb = kernel.kernel_bilinear(p, 2.0, 2.0 + d)
            ki = kernel.kernel_integral(p, 2.0, 2.0 + d)
            assert kb == pytest.approx(ki, abs=5e-11)

    def test_diagonal_consistency(self):
        # off-diagonal values approach the closed diagonal like O(|x-y|)
        p = ModelParams((1.0, 2.0))
        t = 1.5
        kd = kernel.kernel_diag(p, [t])[0]
        for d in [1e-2, 1e-3]:
            off = kernel.kernel_bilinear(p, t + d, t - d)
            assert abs(off - kd) <= 5.0 * d


class TestIntegral:
    def test_x_zero_factorizes(self):
        p = ModelParams((0.0, 1.0))
        y = 2.0
        direct = kernel.kernel_integral(p, 0.0, y)
        f0 = specfun.eval_f(p, 0.0).value
        from scipy.integrate import quad

        avg, _ = quad(
            lambda t: specfun.eval_g(p, y * t).value, 0, 1, epsabs=1e-12, epsrel=1e-12
        )
        assert direct == pytest.approx(f0 * avg, abs=1e-10)

    def test_trapezoid_oracle(self):
        p = ModelParams((0.0,))
        val = kernel.kernel_integral(p, 1.0, 1.0)
        assert val == pytest.approx(K1_DIAG_AT_ONE, abs=1e-7)

    def test_grid_agreement(self, standard_params):
        pts = np.linspace(1.0, 10.0, 10)
        for p in standard_params:
            kb = kernel.kernel_grid(p, pts, pts)
            for i in [0, 4, 9]:
                for j in [2, 7]:
                    ki = kernel.kernel_integral(p, float(pts[i]), float(pts[j]))
                    assert abs(kb[i, j] - ki) <= 1e-8 * (1.0 + abs(kb[i, j]))


class TestBesselKernel:
    def test_antisymmetric_numerator(self):
        x, y, nu = 1.3, 2.6, 0.7
        ux, uy = np.sqrt(x), np.sqrt(y)
        num = lambda a, b: jv(nu, np.sqrt(a)) * np.sqrt(b) * (
            0.5 * (jv(nu - 1, np.sqrt(b)) - jv(nu + 1, np.sqrt(b)))
        ) - np.sqrt(a) * 0.5 * (jv(nu - 1, np.sqrt(a)) - jv(nu + 1, np.sqrt(a))) * jv(
            nu, np.sqrt(b)
        )
        assert num(x, y) == pytest.approx(-num(y, x), abs=1e-15)
        del ux, uy

    def test_diagonal_by_finite_differences(self):
        for nu in [0.0, 1.5]:
            x = 2.7
            diag = kernel.bessel_kernel(nu, x, x)
            h = 1e-5
            off = kernel.bessel_kernel(nu, x + h, x - h)
            assert diag == pytest.approx(off, abs=1e-8)

    def test_m1_reduction_grid(self):
        p = ModelParams((0.0,))
        for x in np.linspace(0.3, 9.3, 7):
            for y in np.linspace(0.5, 8.5, 5):
                lhs = kernel.kernel_bilinear(p, float(x), float(y))
                rhs = 4.0 * kernel.bessel_kernel(0.0, 4.0 * x, 4.0 * y)
                assert abs(lhs - rhs) <= 1e-10

    def test_domain(self):
        with pytest.raises(DomainError):
            kernel.bessel_kernel(0.0, 0.0, 1.0)


class TestKernelPoint:
    def test_provenance(self):
        p = ModelParams((0.0,))
        pt = kernel.kernel_point(p, 1.0, 2.0, method="integral")
        assert pt.method == "integral"
        assert pt.value == pytest.approx(kernel.kernel_integral(p, 1.0, 2.0))

    def test_rejects_bad_method(self):
        with pytest.raises(DomainError):
            kernel.kernel_point(ModelParams((0.0,)), 1.0, 2.0, method="magic")


def test_second_variation_against_fd():
    # the near-diagonal Taylor coefficient matches finite differences of the
    # numerator built from independent phi/psi evaluations
    p = ModelParams((1.0, 2.0))
    t = 1.9
    h = 1e-4

    def numerator(x, y):
        phis = specfun.phi_many(p, [x])[: p.M + 1, 0]
        psis = specfun.psi_many(p, [y])[:, 0]
        return float(phis @ psis)

    n_xx = (numerator(t + h, t) - 2 * numerator(t, t) + numerator(t - h, t)) / h**2
    n_yy = (numerator(t, t + h) - 2 * numerator(t, t) + numerator(t, t - h)) / h**2
    n_xy = (
        numerator(t + h, t + h)
        - numerator(t + h, t - h)
        - numerator(t - h, t + h)
        + numerator(t - h, t - h)
    ) / (4 * h**2)
    fd = n_xx - 2 * n_xy + n_yy
    exact = kernel._second_variation(p, np.array([t]))[0]
    assert exact == pytest.approx(fd, rel=1e-5, abs=1e-7)
