import json
import math
from pathlib import Path

import numpy as np
import pytest

from denet import (LossWeights, PassOutputs, combined_loss,
                   feature_variation_loss, local_variation, score_ranking_loss)
from denet.losses import pass_losses
from util import numeric_grad

rng = np.random.default_rng(2024)
FIXTURE = Path(__file__).parent / "fixtures" / "loss_trace.json"


def _rows_with_var(values):
    """Build a (T, 2) matrix whose variation vector equals ``values``."""
    k = len(values)
    head = np.tile([1.0, 0.0], (k, 1))
    tail = np.stack([[1.0 - v, math.sqrt(max(0.0, 1.0 - (1.0 - v) ** 2))]
                     for v in values])
    return np.vstack([head, tail])


# --- ranking loss --------------------------------------------------------


def test_ranking_loss_perfect_margin():
    assert score_ranking_loss([1.0, 0.2], [0.0]) == 0.0


def test_ranking_loss_arithmetic():
    assert score_ranking_loss([0.3, 0.1], [0.7, 0.2]) == pytest.approx(1.4, abs=1e-12)


def test_ranking_loss_equal_scores():
    s = [0.4, 0.6, 0.5]
    assert score_ranking_loss(s, s) == pytest.approx(1.0, abs=1e-12)


def test_ranking_loss_rejects_empty():
    with pytest.raises(ValueError):
        score_ranking_loss([], [0.5])


# --- local variation ------------------------------------------------------


def test_variation_identical_rows_is_zero():
    X = np.tile(rng.standard_normal(3), (8, 1))
    np.testing.assert_allclose(local_variation(X), 0.0, atol=1e-12)


def test_variation_antiparallel_rows_is_two():
    top = rng.standard_normal((4, 3))
    X = np.vstack([top, -top])
    np.testing.assert_allclose(local_variation(X), 2.0, rtol=1e-12)


def test_variation_matches_per_pair_cosine_oracle():
    X = rng.standard_normal((8, 3))
    var = local_variation(X)
    assert var.shape == (4,)
    for i in range(4):
        u, v = X[i], X[i + 4]
        cos = float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))
        assert var[i] == pytest.approx(1.0 - cos, abs=1e-12)


def test_variation_zero_norm_pair_gives_one():
    X = rng.standard_normal((6, 2))
    X[1] = 0.0
    var = local_variation(X)
    assert var[1] == 1.0


def test_variation_range_invariant():
    for _ in range(50):
        X = rng.standard_normal((6, 4)) * rng.uniform(0.1, 10)
        var = local_variation(X)
        assert (var >= 0.0).all() and (var <= 2.0).all()


def test_variation_rejects_odd_length():
    with pytest.raises(ValueError, match="even"):
        local_variation(rng.standard_normal((5, 3)))


# --- feature variation loss ----------------------------------------------


def test_feature_loss_saturated_margin():
    xa = _rows_with_var([2.0, 0.1])
    xn = _rows_with_var([0.0, 0.0])
    assert feature_variation_loss(xa, xn) == 0.0


def test_feature_loss_identical_videos():
    x = _rows_with_var([0.3, 0.7])
    assert feature_variation_loss(x, x) == pytest.approx(1.0, abs=1e-12)


def test_feature_loss_arithmetic():
    xa = _rows_with_var([0.5, 0.2])
    xn = _rows_with_var([0.9, 0.4])
    assert feature_variation_loss(xa, xn) == pytest.approx(1.4, abs=1e-9)


# --- combined loss ---------------------------------------------------------


def _random_pass(P=2, T=4, D=3):
    return PassOutputs(rng.uniform(0.01, 0.99, (P, T)), rng.uniform(0.01, 0.99, (P, T)),
                       rng.standard_normal((P, T, D)), rng.standard_normal((P, T, D)))


def test_combined_loss_zero_alpha_weights_annihilate():
    u, e = _random_pass(), _random_pass()
    report = combined_loss(u, e, LossWeights(alpha1=0.0, alpha2=0.0))
    assert report.l_u == 0.0 and report.l_e == 0.0 and report.total == 0.0


def test_combined_loss_identical_passes():
    u = _random_pass()
    report = combined_loss(u, u, LossWeights())
    assert report.l_e == report.l_u
    assert report.total == pytest.approx(report.l_u + report.l_e, abs=1e-15)


def test_combined_loss_none_erased_is_single_pass():
    u = _random_pass()
    report = combined_loss(u, None, LossWeights())
    assert report.l_score_e == 0.0 and report.l_fea_e == 0.0 and report.l_e == 0.0
    assert report.total == pytest.approx(report.l_u, abs=1e-15)


def test_combined_loss_linear_in_lambdas():
    u, e = _random_pass(), _random_pass()
    base = combined_loss(u, e, LossWeights(lambda1=1.0, lambda2=1.0))
    scaled = combined_loss(u, e, LossWeights(lambda1=2.0, lambda2=0.5))
    assert scaled.total == pytest.approx(2.0 * base.l_u + 0.5 * base.l_e, rel=1e-12)


def test_combined_loss_rejects_unpaired_batch():
    u = _random_pass()
    bad = PassOutputs(u.scores_abnormal[:1], u.scores_normal,
                      u.features_abnormal[:1], u.features_normal)
    with pytest.raises(ValueError, match="unpaired"):
        combined_loss(bad, None, LossWeights())


def test_combined_loss_matches_hand_trace_fixture():
    fx = json.loads(FIXTURE.read_text())
    passes = {}
    for key in ("unerased", "erased"):
        d = fx[key]
        passes[key] = PassOutputs(np.array(d["scores_abnormal"], dtype=float),
                                  np.array(d["scores_normal"], dtype=float),
                                  np.array(d["features_abnormal"], dtype=float),
                                  np.array(d["features_normal"], dtype=float))
    report = combined_loss(passes["unerased"], passes["erased"],
                           LossWeights(**fx["weights"]))
    for name, expected in fx["expected"].items():
        assert getattr(report, name) == pytest.approx(expected, abs=1e-9), name


# --- gradients -------------------------------------------------------------


def test_pass_loss_gradients_match_finite_differences():
    P, T, D = 3, 6, 4
    sa = rng.uniform(0.05, 0.95, (P, T))
    sn = rng.uniform(0.05, 0.95, (P, T))
    xa = rng.standard_normal((P, T, D))
    xn = rng.standard_normal((P, T, D))
    ca, cf = 0.7, 1.3

    def loss():
        ls, lf, *_ = pass_losses(sa, sn, xa, xn)
        return ca * ls + cf * lf

    ls, lf, dsa, dsn, dxa, dxn = pass_losses(sa, sn, xa, xn, coef_score=ca, coef_fea=cf)
    for analytic, tensor in ((dsa, sa), (dsn, sn), (dxa, xa), (dxn, xn)):
        np.testing.assert_allclose(analytic, numeric_grad(loss, tensor),
                                   rtol=1e-5, atol=1e-8)


def test_max_subgradient_ties_go_to_smallest_index():
    # two equal maxima: only index 0 receives gradient
    sa = np.array([[0.7, 0.7, 0.1]])
    sn = np.array([[0.2, 0.3, 0.3]])
    xa = rng.standard_normal((1, 2, 3)) * 0 + 1.0
    xn = xa.copy()
    _, _, dsa, dsn, _, _ = pass_losses(sa, sn, xa, xn, coef_score=1.0)
    np.testing.assert_array_equal(dsa, [[-1.0, 0.0, 0.0]])
    np.testing.assert_array_equal(dsn, [[0.0, 1.0, 0.0]])
