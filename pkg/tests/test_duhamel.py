import math

import numpy as np
import pytest

from hallmhd.duhamel import (
    QuadratureSpec,
    Trajectory,
    advection_divergence,
    bilinear_B,
    bilinear_B_path,
    hall_B,
    hall_B_path,
    hall_identity_check,
    hall_tensor,
    projected_sources,
)
from hallmhd.generators import mode_pair, random_band_limited, single_mode
from hallmhd.grid import GridSpec, SpectralField, forward_transform, packed_modes


class TestTrajectory:
    def test_shape_validation(self, grid16):
        with pytest.raises(ValueError, match="shape"):
            Trajectory(grid16, 1.0, np.zeros((4, 3, 5)))
        with pytest.raises(ValueError, match="two nodes"):
            Trajectory(grid16, 1.0, np.zeros((1, 3, grid16.n_packed)))

    def test_caloric_closed_form(self, grid16):
        f = single_mode(grid16, (2, 0, 0), (0, 1, 0), 0.5)
        tr = Trajectory.caloric(f, 1.0, 10, 1.25, 0.3)
        expected = 0.5 * np.exp(-0.3 * tr.times * 2**2.5)
        np.testing.assert_allclose(tr.sup_norms(), expected, rtol=1e-12)

    def test_node_structure(self, grid16):
        tr = Trajectory.zeros(grid16, 2.0, 8)
        assert tr.node_count == 8 and tr.step == 0.25
        np.testing.assert_allclose(tr.times, np.arange(9) * 0.25)
        assert tr.is_zero()

    def test_incompatible_arithmetic(self, grid16):
        a = Trajectory.zeros(grid16, 1.0, 8)
        with pytest.raises(ValueError, match="differ"):
            a + Trajectory.zeros(grid16, 2.0, 8)

    def test_rejects_aliased_data(self, grid16, rng):
        f = forward_transform(rng.standard_normal((3,) + grid16.shape))
        with pytest.raises(ValueError, match="2/3"):
            Trajectory.constant(f, 1.0, 8)

    def test_quadrature_spec(self):
        with pytest.raises(ValueError):
            QuadratureSpec(4)
        with pytest.raises(ValueError):
            QuadratureSpec(16, "simpson")


class TestHallTensor:
    def test_identity_on_random_fields(self, grid32, rng):
        for _ in range(3):
            b = random_band_limited(grid32, rng, kmax=8)
            assert hall_identity_check(b) < 1e-12

    def test_plane_wave_is_stationary(self, grid16):
        b = single_mode(grid16, (1, 2, 0), (0, 0, 1))
        assert hall_tensor(b).sup_norm() < 1e-14

    def test_mode_pair_is_not(self, grid16):
        # b = (sin x2, 0, sin x1): curl div(b b) = (0, 2 sin x1 sin x2 ... ) is nonzero
        assert hall_tensor(mode_pair(grid16)).sup_norm() > 0.1

    def test_requires_solenoidal(self, grid16):
        b = single_mode(grid16, (1, 0, 0), (1, 0, 0))
        with pytest.raises(ValueError, match="solenoidal"):
            hall_identity_check(b)

    def test_advection_divergence_closed_form(self, grid16):
        # f = (0, sin x1, 0), g = (sin x1, 0, 0): div(f g)_j = d_i(f_i g_j) = d_2(...) = 0
        f = single_mode(grid16, (1, 0, 0), (0, 1, 0))
        g = single_mode(grid16, (1, 0, 0), (1, 0, 0))
        assert advection_divergence(f, g).sup_norm() < 1e-14
        # div(g g)_1 = d_1(sin^2 x1) = sin 2x1
        x = grid16.coordinates()
        got = advection_divergence(g, g).values
        np.testing.assert_allclose(got[0], np.sin(2 * x[0]), atol=1e-13)


class TestBilinear:
    def test_constant_source_converges_second_order(self, grid16, rng):
        f = random_band_limited(grid16, rng, kmax=3)
        g = random_band_limited(grid16, rng, kmax=3)
        T, alpha, kappa = 0.4, 1.2, 1.0
        src = projected_sources(Trajectory.constant(f, T, 8), Trajectory.constant(g, T, 8))[0]
        lam = kappa * packed_modes(grid16)["kmag"] ** (2 * alpha)
        exact = np.where(lam > 0, -np.expm1(-T * lam) / np.where(lam > 0, lam, 1), T) * src
        errs = []
        for M in (32, 64, 128):
            out = bilinear_B_path(alpha, kappa, Trajectory.constant(f, T, M),
                                  Trajectory.constant(g, T, M))
            errs.append(np.max(np.abs(out.packed[-1] - exact)))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)

    def test_single_node_accessor(self, grid16, rng):
        f = Trajectory.caloric(random_band_limited(grid16, rng, kmax=3), 0.2, 8, 1.0, 1.0)
        path = bilinear_B_path(1.0, 1.0, f, f)
        np.testing.assert_allclose(bilinear_B(1.0, 1.0, f, f, 5).coeffs, path.field(5).coeffs)
        with pytest.raises(IndexError):
            bilinear_B(1.0, 1.0, f, f, 9)

    def test_hall_eta_zero(self, grid16):
        b = Trajectory.caloric(mode_pair(grid16), 0.2, 8, 1.5, 1.0)
        assert hall_B_path(1.5, 1.0, 0.0, b).is_zero()

    def test_hall_is_eta_linear(self, grid16):
        b = Trajectory.caloric(mode_pair(grid16, 0.3), 0.2, 8, 1.5, 1.0)
        a = hall_B(1.5, 1.0, 1.0, b, 8)
        c = hall_B(1.5, 1.0, 2.5, b, 8)
        np.testing.assert_allclose(c.coeffs, 2.5 * a.coeffs, atol=1e-16)
        assert a.sup_norm() > 0

    def test_hall_first_order_in_time(self, grid16):
        # for small t the integral is ~ t * curl P div(b0 b0)
        b0 = mode_pair(grid16, 0.1)
        t = 1e-6
        b = Trajectory.caloric(b0, t, 8, 1.5, 1.0)
        got = hall_B(1.5, 1.0, 1.0, b, 8)
        ref = hall_tensor(b0)
        np.testing.assert_allclose(got.values / t, ref.values, atol=1e-7)

    def test_zero_source_short_circuit(self, grid16):
        z = Trajectory.zeros(grid16, 1.0, 8)
        f = Trajectory.caloric(single_mode(grid16), 1.0, 8, 1.0, 1.0)
        assert not np.any(projected_sources(z, f))
