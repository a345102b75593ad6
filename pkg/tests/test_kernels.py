import math

import numpy as np
import pytest
from scipy.special import rel_entr

from fusegram import data, kernels
from fusegram.errors import ConfigError, DataError, NumericError
from fusegram.prob import to_prob


def _random_smoothed_pair(rng, n=14, epsilon=1e-10):
    p = to_prob(rng.standard_normal(n), epsilon=epsilon).probs
    q = to_prob(rng.standard_normal(n), epsilon=epsilon).probs
    return p, q


def independent_jsd(p, q):
    m = 0.5 * (p + q)
    return 0.5 * (rel_entr(p, m).sum() + rel_entr(q, m).sum())


# ---------------------------------------------------------------------------
# chisini means
# ---------------------------------------------------------------------------

def test_chisini_identical_args():
    for kind in ("am", "gm", "hm"):
        assert kernels.chisini_mean(0.5, 0.5, kind) == pytest.approx(0.5)


def test_chisini_hand_values():
    assert kernels.chisini_mean(0.8, 0.2, "am") == pytest.approx(0.5)
    assert kernels.chisini_mean(0.8, 0.2, "gm") == pytest.approx(0.4)
    assert kernels.chisini_mean(0.8, 0.2, "hm") == pytest.approx(0.32)


def test_chisini_ordering():
    rng = np.random.default_rng(0)
    for _ in range(100):
        p, q = rng.uniform(0.01, 1, 2)
        if p == q:
            continue
        hm = kernels.chisini_mean(p, q, "hm")
        gm = kernels.chisini_mean(p, q, "gm")
        am = kernels.chisini_mean(p, q, "am")
        assert hm < gm < am


def test_chisini_hm_zero_limit():
    assert kernels.chisini_mean(0.0, 0.0, "hm") == 0.0


# ---------------------------------------------------------------------------
# divergences
# ---------------------------------------------------------------------------

def test_cjsd_identity_of_indiscernibles():
    p = np.array([0.3, 0.25, 0.45])
    for kind in ("am", "gm", "hm"):
        assert kernels.cjsd(p, p, kind) == 0.0


def test_cjsd_hand_values():
    p = np.array([0.8, 0.2])
    q = np.array([0.2, 0.8])
    assert kernels.cjsd(p, q, "am") == pytest.approx(0.192745, abs=1e-6)
    assert kernels.cjsd(p, q, "gm") == pytest.approx(0.415888, abs=1e-6)
    assert kernels.cjsd(p, q, "hm") == pytest.approx(0.639032, abs=1e-6)


def test_cjsd_gm_closed_form():
    rng = np.random.default_rng(1)
    for _ in range(200):
        p, q = _random_smoothed_pair(rng)
        closed = (rel_entr(p, q).sum() + rel_entr(q, p).sum()) / 4.0
        assert kernels.cjsd(p, q, "gm") == pytest.approx(closed, abs=1e-12)


def test_cjsd_am_is_jsd():
    rng = np.random.default_rng(2)
    for _ in range(200):
        p, q = _random_smoothed_pair(rng)
        assert kernels.cjsd(p, q, "am") == pytest.approx(
            independent_jsd(p, q), abs=1e-12
        )


def test_cjsd_disjoint_mass_limit():
    p = to_prob(np.array([1.0, 0.0]), epsilon=1e-10).probs
    q = to_prob(np.array([0.0, 1.0]), epsilon=1e-10).probs
    assert kernels.cjsd(p, q, "am") == pytest.approx(math.log(2), abs=1e-7)


def test_cjsd_symmetric_exactly():
    rng = np.random.default_rng(3)
    for kind in ("am", "gm", "hm"):
        for _ in range(50):
            p, q = _random_smoothed_pair(rng)
            assert kernels.cjsd(p, q, kind) == kernels.cjsd(q, p, kind)


def test_cjsd_ordering_am_gm_hm():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        p, q = _random_smoothed_pair(rng)
        am = kernels.cjsd(p, q, "am")
        gm = kernels.cjsd(p, q, "gm")
        hm = kernels.cjsd(p, q, "hm")
        assert 0.0 <= am <= gm + 1e-15 <= hm + 2e-15


def test_cjsd_unsmoothed_zero_state():
    p = np.array([1.0, 0.0])
    q = np.array([0.5, 0.5])
    with pytest.raises(NumericError, match="unsmoothed zero state"):
        kernels.cjsd(p, q, "gm")


def test_cjsd_shape_mismatch():
    with pytest.raises(DataError):
        kernels.cjsd(np.array([1.0]), np.array([0.5, 0.5]), "am")


def test_mcjsd_is_sqrt():
    p = np.array([0.8, 0.2])
    q = np.array([0.2, 0.8])
    assert kernels.mcjsd(p, q, "am") == pytest.approx(0.439027, abs=1e-6)
    assert kernels.mcjsd(p, p, "am") == 0.0


def test_mcjsd_monotone_with_cjsd():
    rng = np.random.default_rng(5)
    p, q = _random_smoothed_pair(rng)
    _, r = _random_smoothed_pair(rng)
    d_pq, d_pr = kernels.cjsd(p, q, "hm"), kernels.cjsd(p, r, "hm")
    m_pq, m_pr = kernels.mcjsd(p, q, "hm"), kernels.mcjsd(p, r, "hm")
    assert (d_pq <= d_pr) == (m_pq <= m_pr)


def test_mcjsd_am_triangle_inequality():
    rng = np.random.default_rng(6)
    for _ in range(2000):
        p, q = _random_smoothed_pair(rng)
        r, _ = _random_smoothed_pair(rng)
        d_pr = kernels.mcjsd(p, r, "am")
        d_pq = kernels.mcjsd(p, q, "am")
        d_qr = kernels.mcjsd(q, r, "am")
        assert d_pr <= d_pq + d_qr + 1e-12


# ---------------------------------------------------------------------------
# kernel forms
# ---------------------------------------------------------------------------

def _spec(family="mcjsd", mean="am", form="amplified", sigma=1.0):
    return kernels.KernelSpec(family, mean, form, sigma)


def test_kernel_identity_cases():
    x = np.arange(14.0)
    cases = {
        "amplified": 0.0,
        "scaled": 1.0,
        "amplified_scaled": 0.0,
    }
    for form, expected in cases.items():
        assert kernels.kernel_value(_spec(form=form), x, x) == expected
    rbf = kernels.KernelSpec("rbf", "am", "plain", 1.0)
    assert kernels.kernel_value(rbf, x, x) == 1.0


def test_kernel_scaled_ignores_distance_when_d_zero():
    x = np.arange(14.0)
    y = x + 5.0  # same distribution after shift, distance > 0
    spec = _spec(form="scaled", sigma=2.0)
    assert kernels.kernel_value(spec, x, y) == pytest.approx(1.0, abs=1e-9)


def test_kernel_form_formulas():
    # reference arithmetic for D = 0.5, r = 1
    d, r = 0.5, 1.0
    assert d * math.exp(-r) == pytest.approx(0.183940, abs=1e-6)
    assert math.exp(-d * r) == pytest.approx(0.606531, abs=1e-6)
    assert d * math.exp(-d * r) == pytest.approx(0.303265, abs=1e-6)
    # kernel_value applies the same formulas: |x - y|^2 = 4 with
    # sigma = sqrt(2) gives r = 1, and (P, Q) pin the divergence
    x = np.zeros(14)
    y = np.zeros(14)
    y[0] = 2.0
    sigma = math.sqrt(2.0)
    p = np.array([0.9, 0.1])
    q = np.array([0.1, 0.9])
    known_d = kernels.mcjsd(p, q, "am")
    for form, expected in (
        ("amplified", known_d * math.exp(-1.0)),
        ("scaled", math.exp(-known_d)),
        ("amplified_scaled", known_d * math.exp(-known_d)),
    ):
        spec = kernels.KernelSpec("mcjsd", "am", form, sigma)
        got = kernels.kernel_value(spec, x, y, P=p, Q=q)
        assert got == pytest.approx(expected, rel=1e-12)


def test_kernel_symmetry():
    rng = np.random.default_rng(7)
    for spec in kernels.enumerate_kernels(1.7):
        x = rng.standard_normal(14)
        y = rng.standard_normal(14)
        assert kernels.kernel_value(spec, x, y) == kernels.kernel_value(
            spec, y, x
        )


def test_sigma_must_be_positive():
    with pytest.raises(ConfigError, match="sigma"):
        kernels.KernelSpec("rbf", "am", "plain", 0.0)


def test_enumerate_21():
    specs = kernels.enumerate_kernels(1.0)
    assert len(specs) == 21
    assert sum(s.family in ("cjsd", "mcjsd") for s in specs) == 18
    assert sum(s.family == "rbf" for s in specs) == 3
    assert len({s.tag for s in specs}) == 21


def test_rbf_tags_identical_function():
    rng = np.random.default_rng(8)
    x, y = rng.standard_normal(14), rng.standard_normal(14)
    values = {
        kernels.kernel_value(s, x, y)
        for s in kernels.enumerate_kernels(2.0)
        if s.family == "rbf"
    }
    assert len(values) == 1


def test_divergence_specs_distinct_on_generic_pair():
    rng = np.random.default_rng(9)
    x, y = rng.standard_normal(14), rng.standard_normal(14) + 0.5
    values = [
        kernels.kernel_value(s, x, y)
        for s in kernels.enumerate_kernels(1.0)
        if s.family != "rbf"
    ]
    assert len(values) == 18
    assert len(set(values)) == 18


def test_parse_kernel_tag():
    spec = kernels.parse_kernel_tag("mcjsd:am:amplified", 2.0)
    assert spec.tag == "mcjsd:am:amplified" and spec.sigma == 2.0
    assert kernels.parse_kernel_tag("rbf", 1.0).tag == "rbf:am:plain"
    assert kernels.parse_kernel_tag("rbf:gm", 1.0).tag == "rbf:gm:plain"
    with pytest.raises(ConfigError):
        kernels.parse_kernel_tag("cjsd:am", 1.0)
    with pytest.raises(ConfigError):
        kernels.parse_kernel_tag("cjsd:am:plain", 1.0)


# ---------------------------------------------------------------------------
# gram assembly
# ---------------------------------------------------------------------------

def _tiny_dataset(n, seed=0):
    rng = np.random.default_rng(seed)
    samples = [
        data.FusedSample(rng.standard_normal(14), i % 2, i) for i in range(n)
    ]
    return data.LabeledDataset(samples)


def test_gram_single_sample():
    ds = _tiny_dataset(1)
    rbf = kernels.KernelSpec("rbf", "am", "plain", 1.0)
    assert kernels.gram(rbf, ds).values.tolist() == [[1.0]]
    amp = _spec(form="amplified")
    assert kernels.gram(amp, ds).values.tolist() == [[0.0]]


def test_gram_matches_kernel_value_oracle():
    ds = _tiny_dataset(3, seed=5)
    X = ds.channel_matrix()
    for spec in kernels.enumerate_kernels(1.3):
        G = kernels.gram(spec, ds).values
        for i in range(3):
            for j in range(3):
                expected = kernels.kernel_value(spec, X[i], X[j])
                assert abs(G[i, j] - expected) <= 1e-14


def test_gram_symmetric_exact():
    ds = _tiny_dataset(6, seed=6)
    for spec in kernels.enumerate_kernels(0.8):
        G = kernels.gram(spec, ds).values
        assert np.array_equal(G, G.T)
        assert np.isfinite(G).all()


def test_gram_diagonals_by_form():
    ds = _tiny_dataset(5, seed=7)
    for spec in kernels.enumerate_kernels(1.0):
        diag = np.diag(kernels.gram(spec, ds).values)
        if spec.form in ("scaled", "plain"):
            assert np.array_equal(diag, np.ones(5))
        else:
            assert np.array_equal(diag, np.zeros(5))


def test_gram_jitter():
    ds = _tiny_dataset(4, seed=8)
    spec = _spec(form="amplified")
    base = kernels.gram(spec, ds).values
    jittered = kernels.gram(spec, ds, jitter=0.5).values
    assert np.allclose(jittered - base, 0.5 * np.eye(4))


def test_gram_empty_rejected():
    spec = _spec()
    with pytest.raises(DataError):
        kernels.gram(spec, np.zeros((0, 14)))


def test_median_sigma():
    X = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert kernels.median_sigma(X) == pytest.approx(5.0)
    assert kernels.median_sigma(np.zeros((3, 2))) == 1.0
