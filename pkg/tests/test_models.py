"""Distribution families, transforms, and the composite H function."""

import math

import numpy as np
import pytest

from robust_lmoments import (
    CompositeH,
    CustomTransform,
    DomainError,
    Exponential,
    Identity,
    Log,
    Lognormal,
    ModelTemplate,
    Normal,
    Pareto,
    Power,
    Shifted,
    Uniform,
    UnboundedQuantileError,
    parse_model,
    parse_model_template,
    parse_transform,
    register_transform,
)

ALL_MODELS = [
    Uniform(0.0, 1.0),
    Uniform(-2.0, 5.0),
    Exponential(1.0),
    Exponential(2.5),
    Pareto(2.5, 1.0),
    Lognormal(0.0, 0.5),
    Lognormal(0.3, 1.0),
    Normal(0.0, 1.0),
    Normal(1.5, 0.7),
]


def transforms_for(model):
    ts = [Identity(), Shifted(1.0)]
    if model.quantile(1e-6) > 0:
        ts += [Power(2.0), Log()]
    elif isinstance(model, Normal):
        ts += [Power(2.0)]
    return ts


class TestQuantiles:
    def test_uniform_identity_quantile(self):
        assert Uniform(0, 1).quantile(0.3) == 0.3

    def test_exponential_median(self):
        assert Exponential(1.0).quantile(0.5) == pytest.approx(math.log(2), rel=1e-12)

    def test_exponential_scale_quantile(self):
        assert Exponential(2.0).quantile(0.75) == pytest.approx(
            2.0 * math.log(4), rel=1e-12
        )

    def test_pareto_quantile(self):
        m = Pareto(2.0, 3.0)
        assert m.quantile(0.75) == pytest.approx(3.0 * 4 ** 0.5, rel=1e-12)

    def test_normal_median(self):
        assert Normal(1.0, 2.0).quantile(0.5) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("model", ALL_MODELS)
    def test_monotone(self, model):
        us = np.linspace(0.001, 0.999, 200)
        qs = [model.quantile(u) for u in us]
        assert all(x <= y + 1e-12 for x, y in zip(qs, qs[1:]))

    @pytest.mark.parametrize("model", ALL_MODELS)
    def test_round_trip(self, model):
        for u in np.linspace(0.001, 0.999, 97):
            assert model.cdf(model.quantile(u)) == pytest.approx(u, abs=1e-10)

    def test_unbounded_endpoints_raise(self):
        with pytest.raises(UnboundedQuantileError):
            Normal(0, 1).quantile(0.0)
        with pytest.raises(UnboundedQuantileError):
            Exponential(1.0).quantile(1.0)
        assert Exponential(1.0).quantile(0.0) == 0.0
        assert Uniform(0, 1).quantile(1.0) == 1.0

    def test_out_of_range_u(self):
        with pytest.raises(DomainError):
            Uniform(0, 1).quantile(1.5)

    def test_invalid_params(self):
        with pytest.raises(DomainError):
            Uniform(1.0, 0.0)
        with pytest.raises(DomainError):
            Exponential(-1.0)
        with pytest.raises(DomainError):
            Normal(0.0, 0.0)


class TestCompositeH:
    def test_uniform_identity(self):
        ch = CompositeH(Uniform(0, 1), Identity())
        assert ch.value(0.7) == 0.7
        assert ch.deriv(0.3) == 1.0

    def test_exponential_power_value(self):
        ch = CompositeH(Exponential(1.0), Power(2.0))
        assert ch.value(0.5) == pytest.approx(math.log(2) ** 2, rel=1e-12)

    def test_lognormal_log_median(self):
        ch = CompositeH(Lognormal(0.0, 1.0), Log())
        assert ch.value(0.5) == pytest.approx(0.0, abs=1e-12)

    def test_exponential_identity_deriv(self):
        ch = CompositeH(Exponential(1.0), Identity())
        assert ch.deriv(0.5) == pytest.approx(2.0, rel=1e-12)

    def test_exponential_power_deriv(self):
        ch = CompositeH(Exponential(1.0), Power(2.0))
        assert ch.deriv(0.5) == pytest.approx(2.0 * math.log(2) * 2.0, rel=1e-12)

    @pytest.mark.parametrize("model", ALL_MODELS)
    def test_deriv_matches_finite_difference(self, model):
        rng = np.random.default_rng(1234)
        us = rng.uniform(0.001, 0.999, size=1000)
        step = 1e-6
        for transform in transforms_for(model):
            ch = CompositeH(model, transform)
            for u in us:
                num = (ch.value(u + step) - ch.value(u - step)) / (2 * step)
                exact = ch.deriv(u)
                assert num == pytest.approx(
                    exact, rel=1e-5, abs=1e-8
                ), f"{model} {transform} u={u}"

    @pytest.mark.parametrize("model", ALL_MODELS)
    def test_value_monotone_for_nondecreasing_h(self, model):
        us = np.linspace(0.01, 0.99, 150)
        for transform in transforms_for(model):
            if isinstance(transform, Power) and model.quantile(0.01) < 0:
                continue  # x^2 is not monotone across a sign change
            ch = CompositeH(model, transform)
            vals = [ch.value(u) for u in us]
            assert all(x <= y + 1e-10 for x, y in zip(vals, vals[1:]))


class TestParsing:
    def test_parse_model_case_insensitive(self):
        assert parse_model("Exponential(1.0)") == Exponential(1.0)
        assert parse_model("PARETO(2.5, 1.0)") == Pareto(2.5, 1.0)

    def test_parse_model_malformed(self):
        with pytest.raises(DomainError):
            parse_model("exponential")
        with pytest.raises(DomainError):
            parse_model("gamma(2.0)")
        with pytest.raises(DomainError):
            parse_model("normal(a,b)")

    def test_parse_template_free_slots(self):
        t = parse_model_template("lognormal(?, 0.5)")
        assert t.free_count == 1
        assert t.free_indices == (0,)
        assert t.bind([0.3]) == Lognormal(0.3, 0.5)

    def test_parse_template_all_free(self):
        t = parse_model_template("normal(?,?)")
        assert t.free_count == 2
        assert t.bind([1.0, 2.0]) == Normal(1.0, 2.0)

    def test_template_bind_wrong_length(self):
        t = parse_model_template("exponential(?)")
        with pytest.raises(DomainError):
            t.bind([1.0, 2.0])

    def test_parse_transform(self):
        assert parse_transform("identity") == Identity()
        assert parse_transform("Power(2)") == Power(2.0)
        assert parse_transform("log") == Log()
        assert parse_transform("shifted(1.5)") == Shifted(1.5)
        with pytest.raises(DomainError):
            parse_transform("cube")

    def test_power_exponent_floor(self):
        with pytest.raises(DomainError):
            Power(0.5)

    def test_register_custom_transform(self):
        t = register_transform("expm1", math.expm1, math.exp)
        assert isinstance(t, CustomTransform)
        back = parse_transform("expm1")
        assert back.value(0.0) == 0.0
        assert back.deriv(0.0) == 1.0
        ch = CompositeH(Uniform(0, 1), back)
        step = 1e-6
        num = (ch.value(0.5 + step) - ch.value(0.5 - step)) / (2 * step)
        assert num == pytest.approx(ch.deriv(0.5), rel=1e-6)

    def test_model_str_round_trip(self):
        m = Pareto(2.5, 1.0)
        assert parse_model(str(m)) == m
