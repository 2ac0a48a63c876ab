"""Hermite recurrence: exact small cases, a frozen big-float value, node
detection, and overflow headroom at n = 70."""

import numpy as np
import pytest

from cqrt import NearNode, hermite_log_abs, hermite_ratio, hermite_real_roots
from cqrt.hermite import hermite_ratio_masked

# H_69/H_70 at 3 + 0.5i, frozen from a 260-bit mpmath evaluation of the raw
# polynomial recurrence (see test_matches_bigfloat_oracle for the live check).
RATIO_70_BIGFLOAT = 0.020576070947574601 - 0.0785624938229522837j


def test_ratio_n1():
    # H_0 = 1, H_1 = 2z
    assert hermite_ratio(1, 1 + 0j) == pytest.approx(0.5)


def test_ratio_n2():
    # H_2(1) = 4 - 2 = 2, H_1(1) = 2
    assert hermite_ratio(2, 1 + 0j) == pytest.approx(1.0)


def test_ratio_n70_frozen_value():
    value = hermite_ratio(70, 3 + 0.5j)
    assert abs(value - RATIO_70_BIGFLOAT) <= 1e-10 * abs(RATIO_70_BIGFLOAT)


def test_matches_bigfloat_oracle():
    mp = pytest.importorskip("mpmath")
    mp.mp.prec = 260
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 12:
        n = int(rng.integers(1, 21))
        z = complex(rng.uniform(-5, 5), rng.uniform(-5, 5))
        ratio, near = hermite_ratio_masked(n, z)
        if near:
            continue
        expected = complex(mp.hermite(n - 1, mp.mpc(z)) / mp.hermite(n, mp.mpc(z)))
        assert abs(complex(ratio) - expected) <= 1e-11 * max(abs(expected), 1e-30)
        checked += 1


@pytest.mark.parametrize("n", range(1, 11))
def test_near_node_raised_exactly_at_real_roots(n):
    roots = hermite_real_roots(n)
    assert len(roots) == n
    for root in roots:
        with pytest.raises(NearNode):
            hermite_ratio(n, complex(root, 0.0))
        # a short distance away the ratio is perfectly well defined
        hermite_ratio(n, complex(root + 1e-3, 0.0))
        hermite_ratio(n, complex(root, 1e-3))


def test_no_overflow_at_n70_large_argument():
    grid = np.linspace(-20, 20, 41)
    z = grid[:, None] + 1j * grid[None, :]
    ratio, near = hermite_ratio_masked(70, z)
    assert np.all(np.isfinite(ratio[~near]))
    log_mag = hermite_log_abs(70, z)
    assert np.all(np.isfinite(log_mag))  # log-space never overflows


def test_log_abs_matches_direct_for_small_n():
    # n = 2 is still safely in range for the raw polynomial
    z = np.array([0.3 + 0.2j, -1.5 + 1.0j, 2.0 - 0.7j])
    direct = np.log(np.abs(4.0 * z * z - 2.0))
    np.testing.assert_allclose(hermite_log_abs(2, z), direct, rtol=1e-12)


def test_vectorized_matches_scalar():
    # numpy's scalar and array complex divisions may differ in the last ulp
    z = np.array([0.5 + 0.1j, 1.2 - 0.3j, -2.0 + 2.0j])
    vec, near = hermite_ratio_masked(7, z)
    assert not near.any()
    for i, zi in enumerate(z):
        scalar = hermite_ratio(7, complex(zi))
        assert abs(scalar - vec[i]) <= 1e-15 * abs(scalar)
