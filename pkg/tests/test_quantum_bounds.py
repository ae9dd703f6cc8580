import warnings

import numpy as np
import pytest

from axialrough import OpticalConfig, SourceDistribution
from axialrough.errors import InvalidArgumentError, SingularParametrizationError
from axialrough.optics import generator_variance
from axialrough.quantum_bounds import (
    inverse_qfi_moments,
    metrology_matrix,
    metrology_matrix_qfi,
    moment_jacobian,
    qfi_displacements_closed_form,
    qfi_report,
    quantum_bound_mean,
    quantum_bound_roughness,
    trace_norm,
)
from conftest import random_centered


def at_focus(weights):
    return SourceDistribution(tuple(0.0 for _ in weights), tuple(weights))


class TestMetrologyMatrixQfi:
    def test_single_source(self, unit_optics):
        qfi = metrology_matrix_qfi(at_focus([1.0]), unit_optics, 1e-4)
        assert qfi.shape == (1, 1)
        assert qfi[0, 0] == pytest.approx(1.0, rel=1e-4)

    def test_equal_pair(self, unit_optics):
        qfi = metrology_matrix_qfi(at_focus([0.5, 0.5]), unit_optics, 1e-4)
        np.testing.assert_allclose(np.diag(qfi), [0.5, 0.5], atol=1e-4)
        assert abs(qfi[0, 1]) <= 1e-6
        assert qfi[0, 1] == qfi[1, 0]

    @pytest.mark.parametrize("zr", [0.5, 1.0, 3.0])
    def test_random_weights_at_focus(self, zr):
        cfg = OpticalConfig(zr)
        rng = np.random.default_rng(5)
        for n in (2, 3, 5):
            dist = at_focus(rng.dirichlet(np.ones(n)))
            num = metrology_matrix_qfi(dist, cfg, 1e-4 * zr)
            ref = qfi_displacements_closed_form(dist, cfg)
            assert np.abs(num - ref).max() <= 1e-3 / zr**2

    def test_symmetric_pair_near_focus_is_second_order(self, unit_optics):
        # deviation from the at-focus value shrinks like (s/z_R)^2
        for s in (0.05, 0.02, 0.01):
            dist = SourceDistribution.symmetric_pair(s)
            dev = np.abs(metrology_matrix_qfi(dist, unit_optics, 1e-4)
                         - qfi_displacements_closed_form(dist, unit_optics)).max()
            assert dev <= 0.6 * s**2

    @pytest.mark.xfail(strict=True, reason=(
        "with three or more distinct sources the QFI matrix near focus does not tend to "
        "4 Var(G) diag(p); the closed form holds at z = 0 only"))
    def test_closed_form_holds_within_005_rayleigh(self, unit_optics):
        rng = np.random.default_rng(3)
        for _ in range(20):
            dist = random_centered(rng, extent=0.05)
            dev = np.abs(metrology_matrix_qfi(dist, unit_optics, 1e-4)
                         - qfi_displacements_closed_form(dist, unit_optics)).max()
            assert dev <= 1e-3

    def test_rejects_bad_step(self, unit_optics):
        for dz in (0.0, -1e-4):
            with pytest.raises(InvalidArgumentError):
                metrology_matrix_qfi(at_focus([1.0]), unit_optics, dz)

    def test_trace_norm_quadratic_coefficient(self, unit_optics):
        # 1 - ||M(0, dz)||_1 = (1/2) sum_j p_j dz_j^2 Var(G) + o(dz^2)
        dist = at_focus([0.2, 0.5, 0.3])
        direction = np.array([1.0, -2.0, 0.5])
        steps = [1e-3, 5e-4, 2.5e-4]
        coeffs = [(1 - trace_norm(metrology_matrix(dist, unit_optics, h * direction))) / h**2
                  for h in steps]
        extrapolated = [(4 * b - a) / 3 for a, b in zip(coeffs, coeffs[1:])]
        expected = 0.5 * np.sum(dist.p() * direction**2) * generator_variance(unit_optics)
        for value in extrapolated:
            assert value == pytest.approx(expected, rel=1e-4)


class TestClosedFormQfi:
    def test_four_equal_sources(self, unit_optics):
        qfi = qfi_displacements_closed_form(at_focus([0.25] * 4), unit_optics)
        np.testing.assert_array_equal(qfi, np.diag([0.25] * 4))

    def test_single_source_scales(self):
        for zr in (0.5, 2.0):
            assert qfi_displacements_closed_form(at_focus([1.0]), OpticalConfig(zr))[0, 0] == pytest.approx(1 / zr**2)

    def test_dark_source_carries_nothing(self, unit_optics):
        qfi = qfi_displacements_closed_form(SourceDistribution((0.1, -0.2, 0.3), (1.0, 0.0, 0.0)), unit_optics)
        assert np.all(qfi[1:, :] == 0) and np.all(qfi[:, 1:] == 0)


class TestInverseMomentQfi:
    def test_mean_entry(self):
        rng = np.random.default_rng(2)
        for zr in (0.5, 1.0, 3.0):
            dist = random_centered(rng)
            assert inverse_qfi_moments(dist, OpticalConfig(zr), 3)[0, 0] == zr**2

    def test_centered_cross_term(self, unit_optics):
        assert inverse_qfi_moments(SourceDistribution.symmetric_pair(0.1), unit_optics, 2)[0, 1] == 0.0

    def test_second_moment_entry(self):
        s, zr = 0.07, 1.6
        value = inverse_qfi_moments(SourceDistribution.symmetric_pair(s), OpticalConfig(zr), 2)[1, 1]
        assert value == pytest.approx(4 * s**2 * zr**2, rel=1e-14)

    def test_symmetric(self, unit_optics):
        dist = SourceDistribution((-0.1, 0.02, 0.07), (0.3, 0.3, 0.4))
        m = inverse_qfi_moments(dist, unit_optics, 4)
        np.testing.assert_array_equal(m, m.T)

    def test_jacobian_route_agrees(self, unit_optics):
        dist = SourceDistribution((-0.1, 0.03, 0.12), (0.3, 0.3, 0.4))
        via_j = inverse_qfi_moments(dist, unit_optics, 3, method="jacobian")
        closed = inverse_qfi_moments(dist, unit_optics, 3)
        np.testing.assert_allclose(via_j, closed, rtol=1e-12, atol=1e-18)

    def test_jacobian_entries(self):
        dist = SourceDistribution((-0.1, 0.2), (0.4, 0.6))
        jac = moment_jacobian(dist, 2)
        np.testing.assert_allclose(jac, [[0.4, 2 * 0.4 * -0.1], [0.6, 2 * 0.6 * 0.2]])

    def test_jacobian_degenerate_falls_back(self, unit_optics):
        dist = SourceDistribution((0.1, 0.1), (0.5, 0.5))
        with pytest.warns(RuntimeWarning, match="singular"):
            out = inverse_qfi_moments(dist, unit_optics, 2, method="jacobian")
        np.testing.assert_array_equal(out, inverse_qfi_moments(dist, unit_optics, 2))

    def test_jacobian_needs_square(self, unit_optics):
        with pytest.raises(InvalidArgumentError):
            inverse_qfi_moments(SourceDistribution.symmetric_pair(0.1), unit_optics, 3, method="jacobian")


class TestQuantumBounds:
    def test_mean(self):
        assert quantum_bound_mean(OpticalConfig(1.0)) == 1.0
        assert quantum_bound_mean(OpticalConfig(3.0)) == 9.0

    def test_roughness_values(self):
        pair = SourceDistribution.symmetric_pair(0.05)
        assert quantum_bound_roughness(pair, OpticalConfig(1.0)) == pytest.approx(1.0, rel=1e-12)
        assert quantum_bound_roughness(pair, OpticalConfig(0.5)) == pytest.approx(0.25, rel=1e-12)

    def test_roughness_constant_in_distribution(self, unit_optics):
        rng = np.random.default_rng(17)
        values = [quantum_bound_roughness(random_centered(rng), unit_optics) for _ in range(100)]
        assert (max(values) - min(values)) / min(values) <= 1e-12

    def test_uncentered_distributions_too(self, unit_optics):
        # the chain rule also cancels theta_1 when it is nonzero
        dist = SourceDistribution((0.01, 0.04, 0.09), (0.2, 0.5, 0.3))
        assert quantum_bound_roughness(dist, unit_optics) == pytest.approx(1.0, rel=1e-10)

    def test_mean_equals_roughness(self):
        for zr in (0.3, 1.0, 2.5):
            cfg = OpticalConfig(zr)
            assert quantum_bound_roughness(SourceDistribution.symmetric_pair(0.01 * zr), cfg) == \
                pytest.approx(quantum_bound_mean(cfg), rel=1e-12)

    def test_zero_roughness(self, unit_optics):
        with pytest.raises(SingularParametrizationError):
            quantum_bound_roughness(SourceDistribution((0.2,), (1.0,)), unit_optics)


def test_report(unit_optics):
    report = qfi_report(SourceDistribution.symmetric_pair(0.05), unit_optics)
    assert report.bound_mean == 1.0
    assert report.bound_roughness == pytest.approx(1.0, rel=1e-12)
    d = report.to_dict()
    assert d["displacement_qfi"] == [[0.5, 0.0], [0.0, 0.5]]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        far = qfi_report(SourceDistribution.symmetric_pair(0.5), unit_optics)
    assert any("0.3 z_R" in note for note in far.notes)
