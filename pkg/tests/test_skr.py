import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvrecon import skr
from cvrecon.skr import (
    NonPhysicalStateError,
    beta_bound,
    binary_entropy,
    fer_beta_curve,
    hash_penalty_rate,
    holevo_gaussian,
    mutual_info_awgn,
    plob,
    skr_single,
    skr_two_step,
)
from tests.conftest import reference_link
from tests.reference_impl import holevo_cm_oracle


# ---------------------------------------------------------------------------
# elementary quantities
# ---------------------------------------------------------------------------

def test_binary_entropy_spot_values():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0, rel=1e-15)
    assert binary_entropy(0.11) == pytest.approx(binary_entropy(0.89), rel=1e-13)
    arr = binary_entropy(np.array([0.0, 0.25, 1.0]))
    assert arr.shape == (3,) and arr[0] == 0.0 and arr[2] == 0.0


def test_binary_entropy_domain():
    with pytest.raises(ValueError):
        binary_entropy(-0.01)
    with pytest.raises(ValueError):
        binary_entropy(1.01)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_binary_entropy_concave(p, q):
    mid = binary_entropy((p + q) / 2.0)
    assert mid >= (binary_entropy(p) + binary_entropy(q)) / 2.0 - 1e-12


def test_mutual_info_awgn():
    assert mutual_info_awgn(0.0) == 0.0
    assert mutual_info_awgn(3.0) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(ValueError):
        mutual_info_awgn(-0.1)


def test_nonphysical_state_raises():
    with pytest.raises(NonPhysicalStateError):
        skr._g(0.9)
    # tiny negative excursions are rounding noise, not errors
    assert skr._g(1.0 - 1e-12) == 0.0


# ---------------------------------------------------------------------------
# Holevo bound vs covariance-matrix oracle
# ---------------------------------------------------------------------------

def test_holevo_matches_covariance_matrix_oracle():
    p = reference_link(25.0, 5.0)
    assert holevo_gaussian(p) == pytest.approx(holevo_cm_oracle(p), abs=1e-10)


def test_holevo_matches_oracle_over_random_links():
    rng = np.random.default_rng(20)
    for _ in range(30):
        p = reference_link(0.0, 1.0)
        p = type(p)(
            distance_km=float(rng.uniform(1.0, 120.0)),
            attenuation_db_per_km=float(rng.uniform(0.15, 0.3)),
            quantum_efficiency=float(rng.uniform(0.3, 0.95)),
            electronic_noise=float(rng.uniform(0.0, 0.1)),
            excess_noise_bob=float(rng.uniform(0.0, 0.05)),
            modulation_variance=float(rng.uniform(1.0, 20.0)),
        )
        assert holevo_gaussian(p) == pytest.approx(holevo_cm_oracle(p), abs=1e-9)


def test_holevo_increases_with_excess_noise():
    lo = reference_link(40.0, 5.0)
    hi = type(lo)(**{**lo.__dict__, "excess_noise_bob": 0.05})
    assert holevo_gaussian(hi) > holevo_gaussian(lo)


# ---------------------------------------------------------------------------
# key rates
# ---------------------------------------------------------------------------

def test_skr_single_formula():
    assert skr_single(0.95, 0.1, 0.5, 0.2) == pytest.approx(
        0.9 * (0.95 * 0.5 - 0.2), rel=1e-15)
    with pytest.raises(ValueError):
        skr_single(1.0, 1.5, 0.5, 0.2)


def test_two_step_reduces_to_single_step_without_stage2_cost():
    # beta_h = 1 and ber = 0 means no key is spent on the syndrome beyond
    # the (1 - R_h) = 0 share, so skr_t collapses to the single-step rate
    rep = skr_two_step(afr=0.4, fer_h=0.0, beta_l=1.2, beta_h=1.0,
                       ber_af=0.0, i_ab=0.1, chi_be=0.05)
    assert rep.skr_t == pytest.approx(
        skr_single(1.2, 1.0 - 0.4, 0.1, 0.05), rel=1e-13)
    assert rep.beta_t == pytest.approx(1.2)
    assert rep.fer_t == pytest.approx(0.6)


def test_two_step_compact_form_recomputed_independently():
    rng = np.random.default_rng(4)
    for _ in range(200):
        afr = rng.uniform(0.001, 1.0)
        fer_h = rng.uniform(0.0, 0.99)
        beta_l = rng.uniform(0.5, 2.0)
        beta_h = rng.uniform(0.5, 1.5)
        ber = rng.uniform(0.0, 0.2)
        i_ab = rng.uniform(0.01, 1.0)
        chi = rng.uniform(0.0, 0.5)
        rep = skr_two_step(afr, fer_h, beta_l, beta_h, ber, i_ab, chi)
        h = binary_entropy(ber)
        want = afr * (1.0 - fer_h) * (beta_l * beta_h * (1.0 - h) * i_ab - chi)
        assert rep.skr_t == pytest.approx(want, rel=1e-12, abs=1e-15)


def test_two_step_validates_probabilities():
    with pytest.raises(ValueError):
        skr_two_step(1.5, 0.0, 1.0, 1.0, 0.0, 0.1, 0.05)
    with pytest.raises(ValueError):
        skr_two_step(0.5, 0.0, 1.0, 1.0, -0.1, 0.1, 0.05)


def test_beta_bound():
    assert beta_bound(0.0) == 1.0
    assert beta_bound(0.5) == pytest.approx(2.0)
    assert beta_bound(1.0) == math.inf
    with pytest.raises(ValueError):
        beta_bound(1.2)


def test_plob_spot_and_edges():
    assert plob(50.0, 0.2) == pytest.approx(-math.log2(1.0 - 0.1), rel=1e-12)
    assert plob(0.0, 0.2) == math.inf
    with pytest.raises(ValueError):
        plob(-1.0, 0.2)


def test_fer_beta_curve_shape_and_ceiling():
    grid = np.linspace(0.0, 0.999, 500)
    curve = fer_beta_curve(0.1, grid)
    assert curve.shape == (500, 2)
    assert np.all(np.diff(curve[:, 1]) >= 0)
    assert np.all(curve[:, 1] <= 10.0 + 1e-12)
    assert curve[-1, 1] == 10.0          # hits the 1/I_AB plateau exactly
    with pytest.raises(ValueError):
        fer_beta_curve(0.1, [1.0])


def test_hash_penalty_rate():
    assert hash_penalty_rate(0.5, 1000, 32) == pytest.approx(0.468)
    with pytest.raises(ValueError):
        hash_penalty_rate(0.5, 0, 32)
    with pytest.raises(ValueError):
        hash_penalty_rate(0.5, 100, -1)
