"""End-to-end acceptance criteria.

These tests pin the headline guarantees of the package: closed-form bound
tables, the syndrome-difference identity at scale, the dual-form key-rate
agreement, the multidimensional mapping round trip, the Monte-Carlo
frame-selection trend, the beyond-unit-efficiency operating point with a
byte-identical delivered string, the key-rate-vs-distance shape, and the
equivalence of BP syndrome decoding with exhaustive ML on a tiny code.

The two 1e5-frame stage-1 campaigns dominate the runtime (several minutes
each on one core); they are shared module-scoped fixtures.
"""

import math
import time

import numpy as np
import pytest

from cvrecon import ldpc, protocol, skr
from cvrecon.cli import golden_max
from cvrecon.protocol import (
    OneTimePad,
    SelectionPolicy,
    SessionConfig,
    VirtualChannel,
    alice_stage2,
    beta_to_snr,
    run_session,
    simulate_stage1,
)
from cvrecon.skr import binary_entropy, fer_beta_curve, mutual_info_awgn
from tests.conftest import reference_link, ring_base
from tests.reference_impl import ml_coset_leader

SEED = 7
CAMPAIGN_FRAMES = 100_000
AFR_GRID = np.geomspace(0.01, 1.0, 10)


@pytest.fixture(scope="module")
def campaigns(code_low_rate):
    """Stage-1 Monte-Carlo campaigns at beta_l in {1.1, 1.3}, 1e5 frames."""
    out = {}
    for beta in (1.1, 1.3):
        snr = beta_to_snr(code_low_rate.R, beta)
        out[beta] = simulate_stage1(
            code_low_rate, VirtualChannel(snr), CAMPAIGN_FRAMES, SEED,
            max_iterations=100)
    return out


# ---------------------------------------------------------------------------
# closed-form bound table
# ---------------------------------------------------------------------------

def test_bound_table_matches_closed_form():
    t0 = time.perf_counter()
    grid = np.linspace(0.0, 0.999, 1000)
    worst = 0.0
    for i_ab, ceiling in ((0.2, 5.0), (0.1, 10.0), (0.02, 50.0)):
        curve = fer_beta_curve(i_ab, grid)
        for fer, beta in curve:
            want = min(1.0 / (1.0 - fer), 1.0 / i_ab)
            worst = max(worst, abs(beta - want))
        # the ceiling is reached exactly once 1/(1-FER) crosses 1/I_AB
        plateau = curve[grid > 1.0 - i_ab, 1]
        assert plateau.size > 0 and np.all(plateau == 1.0 / i_ab)
        assert plateau[0] == ceiling
    assert worst <= 1e-12
    assert time.perf_counter() - t0 < 1.0


# ---------------------------------------------------------------------------
# syndrome-difference identity at scale
# ---------------------------------------------------------------------------

def test_syndrome_difference_identity_at_scale(code_high_rate):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    codes = [
        ldpc.build_protograph(np.ones((2, 4), dtype=np.int64), 250, seed=2),
        ldpc.build_protograph(ring_base(9), 100, seed=4),
        ldpc.build_protograph(np.array([[3, 3]]), 400, seed=6),
    ]
    assert all(c.N <= 1000 for c in codes)
    triples = 0
    for code in codes:
        B = 3400
        c = rng.integers(0, 2, size=(B, code.N), dtype=np.uint8)
        e = rng.integers(0, 2, size=(B, code.N), dtype=np.uint8)
        p_a = ldpc.syndrome(code, c)
        p_b = ldpc.syndrome(code, c ^ e)
        assert np.array_equal(p_a ^ p_b, ldpc.syndrome(code, e))
        triples += B
    assert triples >= 10_000

    # same identity through the actual padded stage-2 message exchange
    code = code_high_rate
    for _ in range(20):
        c_h = rng.integers(0, 2, size=code.N, dtype=np.uint8)
        e = rng.integers(0, 2, size=code.N, dtype=np.uint8)
        otp_a = OneTimePad.from_seed(int(rng.integers(2**31)), code.M_rows)
        otp_b = OneTimePad(otp_a._bits.copy())
        msg = alice_stage2(c_h, code, otp_a)
        p_a = msg.p_a_padded ^ otp_b.take(code.M_rows)
        p_b = ldpc.syndrome(code, c_h ^ e)
        assert np.array_equal(p_a ^ p_b, ldpc.syndrome(code, e))
    assert time.perf_counter() - t0 < 30.0


# ---------------------------------------------------------------------------
# dual-form key-rate agreement
# ---------------------------------------------------------------------------

def test_two_step_rate_dual_forms_agree_over_random_draws():
    rng = np.random.default_rng(9)
    n = 100_000
    afr = rng.uniform(1e-4, 1.0, n)
    fer_h = rng.uniform(0.0, 1.0, n)
    beta_l = rng.uniform(0.3, 2.0, n)
    beta_h = rng.uniform(0.3, 1.5, n)
    ber = rng.uniform(0.0, 0.3, n)
    i_ab = rng.uniform(0.005, 1.0, n)
    chi = rng.uniform(0.0, 0.5, n)
    t0 = time.perf_counter()
    got = np.empty(n)
    for k in range(n):
        # skr_two_step raises if its two internal forms differ beyond 1e-12
        got[k] = skr.skr_two_step(afr[k], fer_h[k], beta_l[k], beta_h[k],
                                  ber[k], i_ab[k], chi[k]).skr_t
    assert time.perf_counter() - t0 < 5.0
    want = afr * (1.0 - fer_h) * (
        beta_l * beta_h * (1.0 - binary_entropy(ber)) * i_ab - chi)
    scale = np.maximum(np.abs(want), 1.0)
    assert np.max(np.abs(got - want) / scale) < 1e-12


def test_hash_penalty_worked_example():
    assert skr.hash_penalty_rate(1.0 / 50.0, 10**6, 32) == 0.019968


# ---------------------------------------------------------------------------
# mapping round trip and clean end-to-end delivery
# ---------------------------------------------------------------------------

def test_mapping_roundtrip_at_scale():
    from cvrecon.multidim import demap_sequence, map_sequence
    rng = np.random.default_rng(15)
    blocks_per_dim = 25_000
    total = 0
    for d in (1, 2, 4, 8):
        n = blocks_per_dim * d
        u = 1.0 - 2.0 * rng.integers(0, 2, size=n).astype(float)
        y = rng.normal(size=n)
        out = demap_sequence(map_sequence(u, y, d), y)
        assert np.max(np.abs(out.r - u)) < 1e-9
        total += blocks_per_dim
    assert total == 100_000


def test_clean_session_delivers_bobs_bits_exactly(code_low_rate, code_high_rate):
    cfg = SessionConfig(
        code_low=code_low_rate, code_high=code_high_rate,
        channel=VirtualChannel(snr=1e9), num_frames=70, seed=SEED,
        policy=SelectionPolicy(mode="by_afr", target_afr=1.0),
        max_iterations_low=50)
    report = run_session(cfg)
    assert report.failure_stage is None
    assert report.ber_af_realized == 0.0            # s_hat == s on every frame
    assert report.delivered_equal and report.hash_ok
    assert report.bits_delivered == 70 * code_low_rate.K_info


# ---------------------------------------------------------------------------
# frame-selection trend (Monte-Carlo campaigns)
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("beta", [1.1, 1.3])
def test_ber_af_trend_monotone_in_afr(campaigns, beta):
    batch = campaigns[beta]
    order, cum = protocol._ranked_cumulative_ber(batch)
    errs_sorted = batch.info_errors[order]
    n_info = batch.s.shape[1]
    K = batch.num_frames
    ns = np.asarray([max(1, math.ceil(K * a)) for a in AFR_GRID])
    point = cum[ns - 1]
    # the point estimates rise by orders of magnitude across the grid
    assert point[-1] > point[0]

    # bootstrap over frames: resampling rank positions preserves the q order
    rng = np.random.default_rng(1234)
    reps = 300
    boot = np.empty((reps, ns.size))
    for b in range(reps):
        pick = np.sort(rng.integers(0, K, size=K))
        ce = np.cumsum(errs_sorted[pick])
        boot[b] = ce[ns - 1] / (ns * n_info)
    diffs = boot[:, 1:] - boot[:, :-1]
    # monotone non-decreasing at 95% confidence: no adjacent step decreases
    # significantly (the 95th percentile of each bootstrap difference
    # distribution must not sit below zero)
    assert np.all(np.percentile(diffs, 95, axis=0) >= 0.0)


# ---------------------------------------------------------------------------
# beyond-unit total efficiency
# ---------------------------------------------------------------------------

def test_total_efficiency_exceeds_one_at_small_afr(campaigns):
    beta_l = 1.3
    batch = campaigns[beta_l]
    _, cum = protocol._ranked_cumulative_ber(batch)
    n = math.ceil(batch.num_frames * 1e-3)
    ber_af = float(cum[n - 1])
    beta_t = beta_l * (1.0 - binary_entropy(ber_af))   # ideal stage 2, beta_h=1
    assert beta_t >= 1.1


def test_beyond_capacity_session_delivers_byte_identical_strings(
        code_low_rate, code_high_rate, tmp_path):
    beta_l = 1.3
    cfg = SessionConfig(
        code_low=code_low_rate, code_high=code_high_rate,
        channel=VirtualChannel(snr=beta_to_snr(code_low_rate.R, beta_l)),
        num_frames=20_000, seed=SEED,
        policy=SelectionPolicy(mode="by_afr", target_afr=1e-3,
                               require_syndrome_ok=True),
        crossover_p=0.02, max_iterations_low=100)
    report = run_session(cfg)
    assert report.failure_stage is None
    assert report.afr_realized >= 1e-3
    assert report.delivered_equal and report.hash_ok
    assert report.bits_delivered == report.accepted_count * code_low_rate.K_info
    beta_t = beta_l * (1.0 - binary_entropy(report.ber_af_realized))
    assert beta_t >= 1.1
    # identical reruns of the same session are byte-identical end to end
    again = run_session(cfg)
    assert again.as_dict() == report.as_dict()


# ---------------------------------------------------------------------------
# key rate vs distance shape
# ---------------------------------------------------------------------------

def test_skr_vs_distance_shape_and_repeaterless_bound():
    assert skr.plob(50.0, 0.2) == pytest.approx(0.152003, abs=1e-5)
    assert skr.plob(100.0, 0.2) == pytest.approx(0.014500, abs=1e-5)

    from cvrecon.channel import effective_snr

    # Devetak-Winter reference at conventional modulation variance (V_A < 8);
    # the two-step operating point is allowed a much larger V_A ceiling,
    # which is what buys it range at long distance.
    def dw(dist):
        def objective(va):
            p = reference_link(dist, va)
            return mutual_info_awgn(effective_snr(p)) - skr.holevo_gaussian(p)
        return golden_max(objective, 1.0, 8.0, tol=1e-4)[1]

    def two_step(dist):
        def objective(va):
            p = reference_link(dist, va)
            rep = skr.skr_two_step(0.003, 0.0, 1.5, 1.0, 0.0,
                                   mutual_info_awgn(effective_snr(p)),
                                   skr.holevo_gaussian(p))
            return rep.skr_t
        return golden_max(objective, 1.0, 1e4, tol=1e-4)[1]

    dists = np.linspace(10.0, 200.0, 20)
    dw_curve = np.array([dw(d) for d in dists])
    ts_curve = np.array([two_step(d) for d in dists])
    assert dw_curve[0] > 0.0                     # positive at short distance
    gap = ts_curve - dw_curve
    # the beta_t = 1.5, AFR = 0.003 protocol starts below the Devetak-Winter
    # curve and overtakes it at long distance
    assert gap[0] < 0.0
    crossings = np.flatnonzero((gap[:-1] < 0) & (gap[1:] >= 0))
    assert crossings.size == 1
    after = crossings[0] + 1
    assert np.all(gap[after:] > 0.0)
    assert np.all(ts_curve[after:] > 0.0)        # positive where it wins


# ---------------------------------------------------------------------------
# BP syndrome decoding vs exhaustive ML on a tiny code
# ---------------------------------------------------------------------------

def test_bsc_syndrome_decoder_matches_exhaustive_ml(code_tiny):
    from itertools import combinations
    code = code_tiny
    H = code.H.toarray()
    patterns = [np.zeros(code.N, dtype=np.uint8)]
    for w in (1, 2):
        for pos in combinations(range(code.N), w):
            e = np.zeros(code.N, dtype=np.uint8)
            e[list(pos)] = 1
            patterns.append(e)
    agree = 0
    for e in patterns:
        target = ldpc.syndrome(code, e)
        res = ldpc.decode_syndrome_bsc(code, target, 0.01, 200)
        ml, unique = ml_coset_leader(H, target, max_weight=3)
        assert ml is not None
        if res.converged and (np.array_equal(res.e_hat, ml)
                              or (not unique
                                  and res.e_hat.sum() == ml.sum()
                                  and np.array_equal(
                                      ldpc.syndrome(code, res.e_hat), target))):
            agree += 1
    assert agree >= 0.99 * len(patterns)
