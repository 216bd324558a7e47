import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gogm.params import (ParamSeq, SeqKind, as_theta, is_exact, make_custom, make_fgm_t,
                         make_ogm_a, make_ogm_og, make_ogm_theta, partial_sums,
                         random_valid_sequence, validate)

mp.mp.dps = 40


def mp_fgm(N):
    t = [mp.mpf(1)]
    for _ in range(N):
        t.append((1 + mp.sqrt(1 + 4 * t[-1] ** 2)) / 2)
    return t


def mp_ogm(N):
    t = mp_fgm(N - 1)
    t.append((1 + mp.sqrt(1 + 8 * t[-1] ** 2)) / 2)
    return t


def test_fgm_t_frozen_values():
    t = make_fgm_t(2)
    np.testing.assert_allclose(t.values, [1.0, 1.6180339887498948, 2.1935270853310539], rtol=1e-15)


def test_ogm_theta_frozen_value():
    assert make_ogm_theta(2).values[-1] == pytest.approx(2.8422356793243053, rel=1e-15)


@pytest.mark.parametrize("N", [1, 2, 7, 50, 200])
def test_fgm_and_ogm_match_high_precision(N):
    np.testing.assert_allclose(make_fgm_t(N).values, [float(x) for x in mp_fgm(N)], rtol=1e-14)
    np.testing.assert_allclose(make_ogm_theta(N).values, [float(x) for x in mp_ogm(N)], rtol=1e-14)


@pytest.mark.parametrize("N", [1, 3, 10, 100])
def test_exact_rules_hold_with_equality(N):
    t, th = make_fgm_t(N), make_ogm_theta(N)
    assert is_exact(t) and is_exact(th)
    assert th.final_rule_doubled and not t.final_rule_doubled
    # Theta_N = 2 Theta_{N-1} + theta_N
    assert th.partial_sums[-1] == pytest.approx(2 * th.partial_sums[-2] + th.values[-1], rel=1e-14)


@pytest.mark.parametrize("N", range(1, 60))
def test_growth_lower_bounds(N):
    t = make_fgm_t(N).values
    assert np.all(t >= (np.arange(N + 1) + 2) / 2 - 1e-12)
    assert make_ogm_theta(N).values[-1] >= (N + 1) / math.sqrt(2)


def test_ogm_og_shape():
    t = make_ogm_og(4)
    np.testing.assert_allclose(t.values, [1.0, (1 + math.sqrt(5)) / 2, 1.5, 1.0, 0.5], rtol=1e-15)
    # slack is zero on the FGM prefix and positive on the linear tail
    s = t.slacks
    assert np.all(np.abs(s[:2]) < 1e-12) and np.all(s[2:] > 0)


def test_ogm_og_slack_sum_frozen():
    assert float(np.sum(make_ogm_og(4).slacks)) == pytest.approx(11.354101966249685, rel=1e-12)


@pytest.mark.parametrize("a", [2, 3, 4, 10])
def test_ogm_a_partial_sum_closed_form(a):
    N = 30
    t = make_ogm_a(a, N)
    i = np.arange(N + 1)
    np.testing.assert_allclose(t.values, (i + a) / a)
    np.testing.assert_allclose(t.partial_sums, (i + 1) * (i + 2 * a) / (2 * a), rtol=1e-14)
    assert validate(t).ok


def test_ogm_a_rejects_small_a():
    with pytest.raises(ValueError):
        make_ogm_a(1.5, 5)


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_bad_N(bad):
    with pytest.raises(ValueError):
        make_fgm_t(bad)


def raw(values, doubled=False):
    return ParamSeq(SeqKind.CUSTOM, len(values) - 1, values, partial_sums(values, doubled), doubled)


def test_make_custom_rejects_invalid():
    with pytest.raises(ValueError):
        make_custom([1.0, 2.0, 1.0])


def test_validation_reports_violation_and_slack():
    rep = validate(raw([1.0, 2.0, 1.0]))
    assert not rep.ok
    assert rep.violations[0].index == 1 and rep.violations[0].slack == pytest.approx(3.0 - 4.0)


def test_validation_rejects_nonpositive():
    assert not validate(raw([1.0, 0.0, 0.5])).ok
    assert not validate(raw([2.0, 1.0])).ok


def test_ogm_theta_is_not_a_t_sequence():
    th = make_ogm_theta(5)
    undoubled = raw(th.values)
    rep = validate(undoubled)
    assert [v.index for v in rep.violations] == [5]


def test_as_theta_keeps_values():
    t = make_fgm_t(6)
    th = as_theta(t)
    assert th.final_rule_doubled and validate(th).ok
    np.testing.assert_array_equal(th.values, t.values)


def test_json_round_trip():
    t = make_ogm_a(3, 7)
    back = ParamSeq.from_json(t.to_json())
    assert back.kind == SeqKind.OGM_A and back.a == 3
    np.testing.assert_array_equal(back.values, t.values)


def test_frozen_arrays():
    t = make_fgm_t(3)
    with pytest.raises(ValueError):
        t.values[0] = 2.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.01, 100), min_size=2, max_size=30), st.booleans())
def test_partial_sums_definition(v, doubled):
    s = partial_sums(v, doubled)
    expect = np.cumsum(v)
    if doubled:
        expect[-1] = 2 * expect[-2] + v[-1]
    np.testing.assert_allclose(s, expect, rtol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 80), st.booleans(), st.integers(0, 2 ** 32 - 1))
def test_random_sequences_are_valid(N, doubled, seed):
    seq = random_valid_sequence(np.random.default_rng(seed), N, doubled=doubled)
    assert validate(seq).ok
    assert seq.final_rule_doubled == doubled
    assert np.all(seq.slacks >= -1e-9 * seq.partial_sums)
    assert seq.slacks[-1] > 0
