import math

import numpy as np
import pytest

from hallmhd.duhamel import Trajectory
from hallmhd.emhd import (
    C0_EMHD_REFERENCE,
    EmhdRunSpec,
    decay_monitor,
    emhd_bilinear_constant,
    emhd_constant,
    emhd_solve,
    emhd_stepper,
    rescale,
    scaling_test,
    smallness_check,
)
from hallmhd.generators import mode_pair, random_band_limited, single_mode
from hallmhd.grid import GridSpec, SpectralField


class TestSpec:
    @pytest.mark.parametrize("alpha2", [1.0, 2.0, 0.5])
    def test_alpha2_range(self, alpha2):
        with pytest.raises(ValueError, match="alpha2"):
            EmhdRunSpec(alpha2=alpha2)

    def test_beta_fixed(self):
        setup = EmhdRunSpec(alpha2=1.25)
        assert setup.beta == 2.0 and setup.weight == pytest.approx(0.2)

    def test_threshold_default(self):
        assert EmhdRunSpec().threshold == pytest.approx(1 / (4 * C0_EMHD_REFERENCE))


class TestConstant:
    def test_frozen_value_reproduced(self):
        assert emhd_bilinear_constant() == pytest.approx(C0_EMHD_REFERENCE, rel=1e-3)

    def test_mu_eta_scaling(self):
        assert emhd_constant(1.5, mu=8.0, eta=3.0) == pytest.approx(
            3.0 * 8.0 ** (-2 / 3) * C0_EMHD_REFERENCE)
        assert emhd_constant(1.5, eta=0.0) == 0.0

    def test_mu_scaling_matches_estimate(self, grid16):
        a = emhd_bilinear_constant(grid=grid16, corpus_size=2, mu=1.0)
        b = emhd_bilinear_constant(grid=grid16, corpus_size=2, mu=2.0)
        assert b / a == pytest.approx(2 ** (-2 / 3), rel=0.05)


class TestSmallness:
    def test_zero_field(self, grid16):
        r = smallness_check(SpectralField.zeros(grid16), 1.5, 1e-9)
        assert r.norm == 0.0 and r.passed

    def test_single_mode_norm_is_amplitude(self, grid16):
        r = smallness_check(single_mode(grid16, (1, 0, 0), (0, 1, 0), 0.03), 1.5)
        assert r.norm == pytest.approx(0.03, rel=1e-13) and r.order == -1.0

    def test_homogeneous(self, grid16, rng):
        f = random_band_limited(grid16, rng)
        assert smallness_check(2 * f, 1.3).norm == pytest.approx(2 * smallness_check(f, 1.3).norm)

    def test_alpha_checked(self, grid16):
        with pytest.raises(ValueError):
            smallness_check(SpectralField.zeros(grid16), 2.5)


class TestSolve:
    def test_zero_data(self, grid16):
        b, rep = emhd_solve(SpectralField.zeros(grid16), EmhdRunSpec(horizon=1.0, node_count=8))
        assert rep.converged and b.is_zero()

    def test_matches_stepper(self, grid16):
        setup = EmhdRunSpec(horizon=1.0, node_count=32, tolerance=1e-13)
        b0 = mode_pair(grid16, 0.1)
        b, rep = emhd_solve(b0, setup)
        ref = emhd_stepper(b0, setup, 256, 32)
        gap = max((b.field(m) - ref.field(m)).sup_norm() for m in range(33))
        assert rep.converged and gap < 1e-6

    def test_solution_stays_solenoidal(self, grid16):
        b, _ = emhd_solve(mode_pair(grid16, 0.1), EmhdRunSpec(horizon=1.0, node_count=16))
        for m in (4, 16):
            f = b.field(m)
            assert f.divergence_residual() < 1e-12
            assert np.max(np.abs(f.mean_mode)) < 1e-15

    def test_large_data_warns(self, grid16):
        setup = EmhdRunSpec(horizon=0.01, node_count=8, max_iter=3)
        with pytest.warns(RuntimeWarning, match="smallness"):
            emhd_solve(mode_pair(grid16, 5.0), setup)
        with pytest.raises(ValueError, match="smallness"):
            emhd_solve(mode_pair(grid16, 5.0), setup, enforce_smallness=True)

    def test_quadratic_response(self, grid16):
        setup = EmhdRunSpec(horizon=2.0, node_count=16)
        gaps = []
        for amp in (0.02, 0.01):
            b0 = mode_pair(grid16, amp)
            b, _ = emhd_solve(b0, setup)
            cal = Trajectory.caloric(b0, 2.0, 16, 1.5, 1.0)
            gaps.append(max((b - cal).sup_norms()))
        assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.01)


class TestDecay:
    def test_zero(self, grid16):
        d = decay_monitor(Trajectory.zeros(grid16, 1.0, 8), 1.5)
        assert d.sup == 0.0 and not np.any(d.weighted)

    def test_caloric_maximizer(self, grid16):
        # t^{1/3} e^{-mu t} A peaks at t = 1/(3 mu)
        mu = 2.0
        b = Trajectory.caloric(single_mode(grid16, (0, 0, 1), (1, 0, 0), 0.4), 1.0, 300, 1.5, mu)
        d = decay_monitor(b, 1.5)
        assert abs(d.argmax_t - 1 / (3 * mu)) <= 2 * b.step
        assert d.sup == pytest.approx(0.4 * (1 / 6) ** (1 / 3) * math.exp(-1 / 3), rel=1e-4)
        assert np.all(np.diff(d.running_sup) >= 0)

    def test_rows(self, grid16):
        b = Trajectory.caloric(single_mode(grid16), 1.0, 8, 1.5, 1.0)
        rows = list(decay_monitor(b, 1.5).rows())
        assert len(rows) == 9 and len(rows[0]) == 4


class TestScaling:
    def test_rescale_samples(self, grid16):
        f = single_mode(grid16, (1, 0, 0), (0, 1, 0))
        g = rescale(f, 3, 2.0)
        np.testing.assert_allclose(g.values, 2.0 * single_mode(grid16, (3, 0, 0), (0, 1, 0)).values,
                                   atol=1e-14)

    def test_rescale_band_check(self, grid16):
        with pytest.raises(ValueError, match="band"):
            rescale(single_mode(grid16, (3, 0, 0), (0, 1, 0)), 3)
        with pytest.raises(ValueError):
            rescale(single_mode(grid16), 1.5)

    def test_identity_lambda(self, grid16):
        r = scaling_test(mode_pair(grid16, 0.01), 1, EmhdRunSpec(horizon=0.5, node_count=8))
        assert r.discrepancy == 0.0

    def test_lambda_two(self):
        r = scaling_test(mode_pair(GridSpec(32), 0.01), 2, EmhdRunSpec(horizon=0.5, node_count=8))
        assert r.relative_discrepancy < 1e-10 and all(r.converged)
