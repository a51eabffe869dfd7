import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwc.metrics import RankingComparison, compare, kendall_tau, kendall_tau_bruteforce, mean_relative_error
from rwc.result import CentralityResult


def test_mean_relative_error_examples():
    truth = np.array([2.5, 0.5, 2.5])
    assert mean_relative_error(truth, truth) == 0.0
    assert mean_relative_error(truth, 1.1 * truth) == pytest.approx(0.1)
    assert mean_relative_error(truth, [2.5, 0.6, 2.5]) == pytest.approx(0.2 / 3)


def test_kendall_examples():
    assert kendall_tau([1, 2, 3], [1, 2, 3]) == 1.0
    assert kendall_tau([1, 2, 3], [3, 2, 1]) == -1.0
    assert kendall_tau([1, 2, 3], [1, 3, 2]) == pytest.approx(1 / 3)
    # a tie counts for neither side but stays in the denominator
    assert kendall_tau([1, 1, 2], [1, 2, 3]) == pytest.approx(2 / 3)


scores = st.lists(st.integers(0, 6), min_size=2, max_size=60)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_kendall_matches_bruteforce_with_ties(data):
    a = data.draw(scores)
    b = data.draw(st.lists(st.integers(0, 6), min_size=len(a), max_size=len(a)))
    assert kendall_tau(a, b) == pytest.approx(kendall_tau_bruteforce(a, b), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.1, 100), min_size=2, max_size=50), st.randoms(use_true_random=False))
def test_kendall_symmetry_and_monotone_invariance(a, rnd):
    a = np.array(a)
    b = a + np.array([rnd.uniform(-5, 5) for _ in a])
    tau = kendall_tau(a, b)
    assert -1 <= tau <= 1
    assert kendall_tau(b, a) == pytest.approx(tau)
    assert kendall_tau(np.log(a), np.exp(b / 50)) == pytest.approx(tau)


def test_results_are_aligned_by_label():
    truth = CentralityResult([1.0, 2.0, 3.0], "exact", [10, 20, 30])
    shuffled = CentralityResult([3.0, 1.0, 2.0], "x", [30, 10, 20])
    assert mean_relative_error(truth, shuffled) == 0.0
    assert kendall_tau(truth, shuffled) == 1.0
    with pytest.raises(ValueError):
        mean_relative_error(truth, CentralityResult([1.0, 2.0, 3.0], "x", [10, 20, 31]))
    with pytest.raises(ValueError):
        kendall_tau([1.0], [1.0])
    with pytest.raises(ValueError):
        mean_relative_error([1.0, 2.0], [1.0])


def test_comparison_row():
    row = compare([2.5, 0.5, 2.5], [2.5, 0.6, 2.5])
    assert isinstance(row, RankingComparison)
    assert row.n == 3 and row.kendall_tau == pytest.approx(2 / 3)  # the tied pair counts for neither
    assert row.to_csv().splitlines()[0] == "n,mean_relative_error,kendall_tau"
    assert "\"kendall_tau\": 0.666" in row.to_json()
