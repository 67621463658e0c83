import numpy as np
import pytest

from spikering import influence as inf
from spikering.errors import InvalidSpecError, UnsupportedOperationError, UsageError


class TestSpecValidation:
    @pytest.mark.parametrize("make", [
        lambda: inf.linear_v(0.0),
        lambda: inf.linear_v(1.2),
        lambda: inf.trapezoid(1.5),
        lambda: inf.trapezoid(0.0),
        lambda: inf.affine_decay(1.0),
        lambda: inf.linear_dominating_trapezoid(0.3, 0.2),
        lambda: inf.perturbed_trapezoid(0.1, 0.2),
        lambda: inf.heterogeneous_linear([0.5, 0.0]),
        lambda: inf.heterogeneous_linear([]),
        lambda: inf.quadratic_decay(float("nan"), 0.0),
    ])
    def test_out_of_range(self, make):
        with pytest.raises(InvalidSpecError):
            make()

    def test_foreign_parameter_rejected(self):
        with pytest.raises(InvalidSpecError, match="does not apply"):
            inf.InfluenceSpec("trapezoid", h=0.2, a=0.5)

    def test_missing_parameter(self):
        with pytest.raises(InvalidSpecError, match="requires"):
            inf.InfluenceSpec("linear_dominating_trapezoid", h=0.2)

    def test_unknown_kind(self):
        with pytest.raises(InvalidSpecError):
            inf.InfluenceSpec("sigmoid")

    def test_specs_are_immutable_and_hashable(self):
        spec = inf.heterogeneous_linear([0.5, 0.9])
        assert spec == inf.heterogeneous_linear((0.5, 0.9))
        assert hash(spec) == hash(inf.heterogeneous_linear((0.5, 0.9)))
        with pytest.raises(AttributeError):
            spec.kind = "trapezoid"


class TestEvaluation:
    def test_trapezoid_jump(self):
        spec = inf.trapezoid(0.3)
        assert inf.eval_w(spec, None, 0.5) == pytest.approx(0.8)
        assert inf.eval_w(spec, None, 0.8) == 1.0
        assert inf.eval_w(spec, None, 0.7) == 1.0

    @pytest.mark.parametrize("spec", [
        inf.linear_v(0.4), inf.trapezoid(0.3), inf.affine_decay(0.2), inf.quadratic_decay(0.3, 0.2),
        inf.linear_dominating_trapezoid(0.2, 0.6),
    ])
    def test_one_is_fixed(self, spec):
        assert inf.eval_w(spec, None, 1.0) == 1.0
        assert inf.eval_f(spec, None, 1.0) == 0.0

    def test_affine_v(self):
        assert inf.eval_v(inf.affine_decay(0.5), None, 0.6) == pytest.approx(0.3)

    def test_linear_v_and_inverse(self):
        spec = inf.linear_v(0.5)
        assert inf.eval_v(spec, None, 0.0) == 0.0
        assert inf.eval_v_inverse(spec, None, 0.3) == pytest.approx(0.6)

    def test_quadratic_square_inverse(self):
        spec = inf.quadratic_decay(0.0, 1.0)          # V(y) = y^2
        y = np.array([0.0, 0.25, 1.0])
        np.testing.assert_allclose(inf.eval_v(spec, None, np.sqrt(y)), y, atol=1e-15)
        np.testing.assert_allclose(inf.eval_v_inverse(spec, None, y), [0.0, 0.5, 1.0], atol=1e-15)

    def test_v_matches_w(self):
        rng = np.random.default_rng(0)
        y = rng.random(200)
        for spec in (inf.linear_v(0.3), inf.affine_decay(0.7), inf.quadratic_decay(0.1, 0.5),
                     inf.trapezoid(0.25), inf.linear_dominating_trapezoid(0.1, 0.4)):
            np.testing.assert_allclose(inf.eval_v(spec, None, y), 1.0 - inf.eval_w(spec, None, 1.0 - y), atol=1e-15)

    def test_vectorised_matches_scalar(self):
        spec = inf.linear_dominating_trapezoid(0.2, 0.5)
        x = np.linspace(0.0, 1.0, 11)
        vec = inf.eval_w(spec, None, x)
        assert [inf.eval_w(spec, None, float(v)) for v in x] == pytest.approx(list(vec))

    def test_inverse_unsupported_for_flat_v(self):
        with pytest.raises(UnsupportedOperationError):
            inf.eval_v_inverse(inf.trapezoid(0.2), None, 0.5)

    def test_per_emitter_needs_id(self):
        spec = inf.heterogeneous_linear([0.5, 0.9])
        with pytest.raises(UsageError):
            inf.eval_w(spec, None, 0.3)
        assert inf.eval_w(spec, 1, 0.0) == pytest.approx(0.1)
        with pytest.raises(UsageError):
            inf.eval_w(spec, 2, 0.0)

    def test_perturbed_needs_realized_noise(self):
        spec = inf.perturbed_trapezoid(0.2, 0.02)
        with pytest.raises(UsageError):
            inf.eval_w(spec, 0, 0.1)
        real = inf.realize_noise(spec, 4, np.random.default_rng(1))
        assert len(real.xi) == 4 and all(abs(v) <= 0.02 for v in real.xi)
        assert inf.eval_w(real, 2, 0.1) == pytest.approx(0.1 + 0.2 + real.xi[2])

    def test_phase_out_of_range(self):
        with pytest.raises(UsageError):
            inf.eval_w(inf.trapezoid(0.2), None, 1.5)

    def test_strict_monotonicity_flags(self):
        assert inf.v_strictly_increasing(inf.linear_v(0.3))
        assert inf.v_strictly_increasing(inf.quadratic_decay(0.0, 1.0))
        assert not inf.v_strictly_increasing(inf.trapezoid(0.3))
        assert not inf.v_strictly_increasing(inf.quadratic_decay(1.0, 0.0))


class TestAdmissibility:
    @pytest.mark.parametrize("spec", [inf.trapezoid(0.3), inf.affine_decay(0.5), inf.linear_v(0.2),
                                      inf.perturbed_trapezoid(0.2, 0.05)])
    def test_admissible(self, spec):
        assert inf.check_admissible(spec).ok

    def test_negative_jump_flagged_with_witness(self):
        rep = inf.check_admissible(inf.quadratic_decay(0.2, -0.9))
        assert not rep.ok and not rep.f_bounds
        _, x = rep.witnesses["f_bounds"]
        assert (1 - x) * (0.2 - 0.9 * x) < 0

    def test_overtaking_flagged(self):
        rep = inf.check_admissible(inf.quadratic_decay(0.0, 1.5))
        assert not rep.monotone_w
        assert "monotone_w" in rep.witnesses


class TestContractionConditions:
    def test_affine_passes(self):
        assert inf.check_contraction_conditions(inf.affine_decay(0.5), epsilon=0.4).ok

    def test_trapezoid_flat_part_fails_slope(self):
        rep = inf.check_contraction_conditions(inf.trapezoid(0.2), epsilon=0.1)
        assert not rep.slope_bounds and not rep.ok

    def test_quadratic_example(self):
        rep = inf.check_contraction_conditions(inf.quadratic_decay(0.6, -0.2), epsilon=0.1)
        assert rep.between_linear and rep.slope_bounds and rep.ok

    def test_epsilon_from_spec(self):
        assert inf.check_contraction_conditions(inf.affine_decay(0.5, epsilon=0.4)).ok
