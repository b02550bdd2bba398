"""Sample and population trimmed/winsorized moments."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_lmoments import (
    CompositeH,
    EmptyWindowError,
    Exponential,
    Identity,
    Mode,
    MomentSpec,
    Power,
    SampleFormatError,
    Uniform,
    floor_count,
    load_sample,
    population_moment,
    population_trimmed_moment,
    population_winsorized_moment,
    sample_moment,
    sample_trimmed_moment,
    sample_winsorized_moment,
)

IDENT = Identity()


class TestSampleTrimmed:
    def test_hand_example(self):
        spec = MomentSpec(IDENT, 0.25, 0.25)
        assert sample_trimmed_moment([1, 2, 3, 4], spec) == 2.5

    def test_singleton_untrimmed(self):
        assert sample_trimmed_moment([5], MomentSpec(IDENT)) == 5.0

    def test_top_trim_only(self):
        spec = MomentSpec(IDENT, 0.0, 0.2)
        assert sample_trimmed_moment([1, 2, 3, 4, 100], spec) == 2.5

    def test_unsorted_input(self):
        spec = MomentSpec(IDENT, 0.25, 0.25)
        assert sample_trimmed_moment([4, 1, 3, 2], spec) == 2.5

    def test_empty_sample(self):
        with pytest.raises(EmptyWindowError):
            sample_trimmed_moment([], MomentSpec(IDENT, 0.25, 0.25))

    def test_window_never_empty_for_valid_spec(self):
        # floor(n a) + floor(n b) <= n - 1 whenever a + b < 1, so one
        # observation always survives
        spec = MomentSpec(IDENT, 0.49, 0.49)
        for n in range(1, 30):
            sample_trimmed_moment(list(range(n)), spec)

    def test_floor_semantics(self):
        # floor(10 * 0.1) must be exactly 1 despite 10*0.1 != 1 in floats
        assert floor_count(10, 0.1) == 1
        assert floor_count(4, 0.25) == 1
        assert floor_count(3, 0.25) == 0
        assert floor_count(100, 0.25) == 25


class TestSampleWinsorized:
    def test_hand_example_symmetric(self):
        spec = MomentSpec(IDENT, 0.25, 0.25, Mode.MWM)
        assert sample_winsorized_moment([1, 2, 3, 4], spec) == 2.5

    def test_hand_example_top(self):
        spec = MomentSpec(IDENT, 0.0, 0.25, Mode.MWM)
        assert sample_winsorized_moment([1, 2, 3, 10], spec) == 2.25

    def test_reduces_to_trimmed_at_zero(self):
        data = [3.1, 0.2, 7.7, 1.4, 2.2]
        assert sample_winsorized_moment(
            data, MomentSpec(IDENT, mode=Mode.MWM)
        ) == sample_trimmed_moment(data, MomentSpec(IDENT))

    def test_dispatch(self):
        data = [1, 2, 3, 10]
        assert sample_moment(data, MomentSpec(IDENT, 0, 0.25, Mode.MWM)) == 2.25
        assert sample_moment(data, MomentSpec(IDENT, 0.25, 0.25)) == 2.5


class TestSpecValidation:
    def test_negative_proportion(self):
        with pytest.raises(Exception):
            MomentSpec(IDENT, -0.1, 0.0)

    def test_mass_exhausted(self):
        with pytest.raises(Exception):
            MomentSpec(IDENT, 0.6, 0.5)

    def test_derived_quantities(self):
        s = MomentSpec(IDENT, 0.1, 0.3)
        assert s.b_bar == pytest.approx(0.7)
        assert s.retained == pytest.approx(0.6)


class TestPopulation:
    def test_exponential_untrimmed_mean(self):
        ch = CompositeH(Exponential(1.0), IDENT)
        assert population_trimmed_moment(ch, MomentSpec(IDENT)) == pytest.approx(
            1.0, rel=1e-9
        )

    def test_uniform_untrimmed_mean(self):
        ch = CompositeH(Uniform(0, 1), IDENT)
        assert population_trimmed_moment(ch, MomentSpec(IDENT)) == pytest.approx(
            0.5, rel=1e-12
        )

    def test_exponential_symmetric_trim(self):
        # integral of -log(1-u) over [1/4, 3/4] has an elementary value
        ch = CompositeH(Exponential(1.0), IDENT)
        spec = MomentSpec(IDENT, 0.25, 0.25)
        exact = (-0.25 * math.log(4) + 0.75 * math.log(4.0 / 3.0) + 0.5) / 0.5
        assert population_trimmed_moment(ch, spec) == pytest.approx(exact, rel=1e-10)

    def test_exponential_winsorized(self):
        ch = CompositeH(Exponential(1.0), IDENT)
        spec = MomentSpec(IDENT, 0.25, 0.25, Mode.MWM)
        core = -0.25 * math.log(4) + 0.75 * math.log(4.0 / 3.0) + 0.5
        exact = core + 0.25 * math.log(4.0 / 3.0) + 0.25 * math.log(4.0)
        assert population_winsorized_moment(ch, spec) == pytest.approx(
            exact, rel=1e-10
        )

    def test_winsorized_equals_trimmed_untrimmed(self):
        ch = CompositeH(Uniform(0, 2), Power(2.0))
        a = population_moment(ch, MomentSpec(Power(2.0), mode=Mode.MWM))
        b = population_moment(ch, MomentSpec(Power(2.0)))
        assert a == pytest.approx(b, rel=1e-12)

    def test_scale_equivariance(self):
        spec = MomentSpec(IDENT, 0.1, 0.2)
        base = population_trimmed_moment(CompositeH(Exponential(1.0), IDENT), spec)
        scaled = population_trimmed_moment(CompositeH(Exponential(3.0), IDENT), spec)
        assert scaled == pytest.approx(3.0 * base, rel=1e-10)


@st.composite
def samples_and_props(draw):
    values = draw(
        st.lists(
            st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False),
            min_size=4,
            max_size=40,
        )
    )
    a = draw(st.sampled_from([0.0, 0.1, 0.25]))
    b = draw(st.sampled_from([0.0, 0.1, 0.25]))
    return values, a, b


class TestSampleProperties:
    @settings(max_examples=60, deadline=None)
    @given(samples_and_props())
    def test_permutation_invariance(self, case):
        values, a, b = case
        spec = MomentSpec(IDENT, a, b)
        rng = np.random.default_rng(0)
        shuffled = list(rng.permutation(values))
        assert sample_trimmed_moment(values, spec) == sample_trimmed_moment(
            shuffled, spec
        )

    @settings(max_examples=60, deadline=None)
    @given(samples_and_props(), st.floats(-100, 100, allow_nan=False))
    def test_translation_equivariance(self, case, shift):
        values, a, b = case
        spec = MomentSpec(IDENT, a, b)
        base = sample_trimmed_moment(values, spec)
        moved = sample_trimmed_moment([v + shift for v in values], spec)
        assert moved == pytest.approx(base + shift, rel=1e-9, abs=1e-6)

    @settings(max_examples=60, deadline=None)
    @given(samples_and_props())
    def test_winsorized_within_range(self, case):
        values, a, b = case
        spec = MomentSpec(IDENT, a, b, Mode.MWM)
        m = sample_winsorized_moment(values, spec)
        assert min(values) - 1e-9 <= m <= max(values) + 1e-9

    @settings(max_examples=60, deadline=None)
    @given(samples_and_props())
    def test_trimmed_within_window(self, case):
        values, a, b = case
        spec = MomentSpec(IDENT, a, b)
        m = sample_trimmed_moment(values, spec)
        assert min(values) - 1e-9 <= m <= max(values) + 1e-9


class TestLoadSample:
    def test_reads_comments_and_blanks(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("# header\n1.5\n\n2.5\n# trailing\n3.5\n")
        assert load_sample(p).tolist() == [1.5, 2.5, 3.5]

    def test_reports_bad_line_number(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1.0\nbogus\n3.0\n")
        with pytest.raises(SampleFormatError, match="2"):
            load_sample(p)

    def test_csv_first_column(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1.0,label\n2.0,other\n")
        assert load_sample(p).tolist() == [1.0, 2.0]
