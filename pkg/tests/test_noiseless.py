from itertools import combinations

import numpy as np
import pytest

from secest import (
    AnalysisError,
    SystemModel,
    decode,
    detect_corruption,
    encode,
    make_random_stable_system,
    min_symbol_distance,
    sparse_observability_index,
)


def ambiguity_system():
    """theta=3, p=5: sensor 1 is blind to the second coordinate, so two
    states differing only there share its symbol and split the others."""
    A = np.diag([0.9, 0.5])
    C = np.array(
        [[1.0, 0.0], [1.0, 1.0], [1.0, -1.0], [2.0, 1.0], [1.0, 2.0]]
    )
    return SystemModel(A=A, C=C, sigma_w2=0.0, sigma_v2=0.0)


def test_encode_zero_state():
    m = make_random_stable_system(3, 4, 0.8, seed=1)
    obs = encode(m, np.zeros(3))
    assert np.allclose(obs.symbols, 0.0)


def test_encode_scalar_identity(triple_sensor_scalar):
    obs = encode(triple_sensor_scalar, [2.0])
    assert np.array_equal(obs.symbols, [[2.0], [2.0], [2.0]])


def test_round_trip_clean():
    rng = np.random.default_rng(0)
    for seed in range(10):
        m = make_random_stable_system(3, 5, 0.8, seed=seed)
        x0 = rng.standard_normal(3)
        result = decode(m, encode(m, x0), k=0)
        assert np.linalg.norm(result.state - x0) <= 1e-10
        assert result.corrupted == ()
        assert result.unique


def test_detect_clean_observation_consistent():
    m = make_random_stable_system(2, 4, 0.8, seed=3)
    assert not detect_corruption(m, encode(m, [1.0, -2.0]))


def test_detect_theta_corruptions():
    m = ambiguity_system()
    theta = sparse_observability_index(m)
    assert theta == 3
    x0 = np.array([1.0, 2.0])
    x_alt = np.array([-3.0, 0.5])
    alt = encode(m, x_alt)
    obs = encode(m, x0)
    # corrupting any theta symbols toward a different state is detectable
    for pattern in combinations(range(1, 6), theta):
        corrupted = obs.with_symbols({d: alt.symbols[d - 1] for d in pattern})
        assert detect_corruption(m, corrupted)


def test_full_codeword_swap_undetectable():
    # replacing every symbol consistently with another state's codeword
    # cannot be told apart from that state
    m = ambiguity_system()
    x_alt = np.array([0.3, -0.7])
    alt = encode(m, x_alt)
    obs = encode(m, [1.0, 2.0]).with_symbols(
        {d: alt.symbols[d - 1] for d in range(1, 6)}
    )
    assert not detect_corruption(m, obs)


def test_decode_corrects_within_half_distance():
    m = ambiguity_system()
    theta = sparse_observability_index(m)
    k = 1  # 2k <= theta
    x0 = np.array([0.4, -1.1])
    x_alt = np.array([2.0, 3.0])
    alt = encode(m, x_alt)
    for pattern in combinations(range(1, 6), k):
        obs = encode(m, x0).with_symbols({d: alt.symbols[d - 1] for d in pattern})
        result = decode(m, obs, k)
        assert np.linalg.norm(result.state - x0) <= 1e-9
        assert set(result.corrupted) >= set(pattern)
        assert result.unique


def test_decode_ambiguous_when_k_exceeds_half_distance():
    # theta=3, k=2 violates 2k <= theta: a split observation admits two
    # explanations and the decoder must report non-uniqueness
    m = ambiguity_system()
    x1 = np.array([1.0, 2.0])
    x2 = x1 + np.array([0.0, 3.0])  # differs only where sensor 1 is blind
    y1, y2 = encode(m, x1), encode(m, x2)
    assert np.allclose(y1.symbols[0], y2.symbols[0])  # shared first symbol
    mixed = y1.with_symbols({4: y2.symbols[3], 5: y2.symbols[4]})
    result = decode(m, mixed, k=2)
    assert not result.unique
    # the first consistent explanation is state x1 with sensors 4, 5 blamed
    assert np.linalg.norm(result.state - x1) <= 1e-9
    assert result.corrupted == (4, 5)


def test_decode_no_explanation_error():
    m = ambiguity_system()
    rng = np.random.default_rng(5)
    obs = encode(m, [1.0, 1.0]).with_symbols(
        {d: rng.standard_normal(2) for d in range(1, 6)}
    )
    with pytest.raises(AnalysisError):
        decode(m, obs, k=0)


def test_min_symbol_distance_values(triple_sensor_scalar):
    assert min_symbol_distance(triple_sensor_scalar) == 3
    single = SystemModel(A=[[0.5]], C=[[1.0]], sigma_w2=0, sigma_v2=0)
    assert min_symbol_distance(single) == 1
    assert min_symbol_distance(ambiguity_system()) == 4


def test_min_symbol_distance_unobservable():
    m = SystemModel(A=np.eye(2), C=np.zeros((3, 2)), sigma_w2=0, sigma_v2=0)
    with pytest.raises(AnalysisError):
        min_symbol_distance(m)


def test_min_symbol_distance_sampled_lower_bound():
    rng = np.random.default_rng(7)
    for seed in range(3):
        m = make_random_stable_system(2, 4, 0.8, seed=seed)
        dist = min_symbol_distance(m)
        observed = 4
        for _ in range(500):
            xa = rng.standard_normal(2)
            xb = rng.standard_normal(2)
            ya, yb = encode(m, xa), encode(m, xb)
            differing = sum(
                np.linalg.norm(ya.symbols[d] - yb.symbols[d]) > 1e-9 for d in range(4)
            )
            observed = min(observed, differing)
        assert observed >= dist
