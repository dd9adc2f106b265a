import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparsesel import synth
from sparsesel.classifiers import (SelectionModel, dataset_digest, distances, fisher_fit,
                                   mmc_classify, mmc_scores, nnc_classify)
from sparsesel.core import SparseSolution
from sparsesel.shk import make_margin


def mse_direction(X, positive, margin="sfisher"):
    Y = np.hstack([np.ones((X.shape[0], 1)), X])
    Y[~positive] *= -1
    a, *_ = np.linalg.lstsq(Y, make_margin(margin, positive), rcond=None)
    return a[1:]


def direct_fisher_direction(X, positive):
    m1, m2 = X[positive].mean(0), X[~positive].mean(0)
    D1, D2 = X[positive] - m1, X[~positive] - m2
    return np.linalg.solve(D1.T @ D1 + D2.T @ D2, m1 - m2)


def abs_cos(u, v):
    return abs(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v))


# --- distances and NNC ------------------------------------------------------------

def test_distance_kinds():
    G = np.array([[3.0, 4.0], [1.0, 0.0]])
    p = np.array([0.0, 1.0])
    assert distances(G, p, "l1").tolist() == [6.0, 2.0]
    assert np.allclose(distances(G, p, "l2"), [np.sqrt(18), np.sqrt(2)])
    assert np.allclose(distances(G, p, "cosine"), [1 - 4 / 5, 1.0])
    with pytest.raises(ValueError, match="zero"):
        distances(G, np.zeros(2), "cosine")
    with pytest.raises(ValueError, match="unknown"):
        distances(G, p, "chebyshev")


def test_nnc_exact_match():
    G = np.array([[1.0, 2.0], [3.0, 1.0], [0.5, 0.5]])
    assert nnc_classify(G, ["a", "b", "c"], G[1]) == "b"
    assert distances(G, G[1]).min() == 0


def test_nnc_one_dimensional():
    assert nnc_classify(np.array([[0.0], [10.0]]), ["A", "B"], np.array([4.0]), "l1") == "A"


def test_nnc_tie_lowest_index():
    assert nnc_classify(np.array([[0.0], [2.0]]), ["A", "B"], np.array([1.0])) == "A"


@pytest.mark.parametrize("seed", range(5))
def test_nnc_small_perturbation_all_distances(seed):
    rng = np.random.default_rng(seed)
    G = rng.uniform(0.5, 2.0, size=(5, 6))
    subjects = ["p", "q", "r", "s", "t"]
    gap = min(np.abs(G[i] - G[j]).max() for i in range(5) for j in range(i + 1, 5))
    probe = G[3] + rng.uniform(-1, 1, 6) * 0.09 * gap
    for kind in ("l1", "l2", "cosine"):
        scan = [float(np.sum(np.abs(g - probe))) if kind == "l1" else
                float(np.sqrt(np.sum((g - probe) ** 2))) if kind == "l2" else
                float(1 - g @ probe / np.sqrt(g @ g) / np.sqrt(probe @ probe)) for g in G]
        assert subjects[int(np.argmin(scan))] == "s"
        assert nnc_classify(G, subjects, probe, kind) == "s"


def test_nnc_zero_vector_cosine_error():
    with pytest.raises(ValueError):
        nnc_classify(np.eye(2), ["a", "b"], np.zeros(2), "cosine")


# --- MMC --------------------------------------------------------------------------

def test_mmc_single_candidate():
    assert mmc_classify([1.0], -100.0, np.array([[0.0]]), ["only"], np.array([5.0])) == "only"


def test_mmc_two_candidates():
    # g = 2 - |p - g_i|: A's sample equals the probe (g = 2), B is 3 away (g = -1)
    G = np.array([[1.0], [4.0]])
    order, scores = mmc_scores([-1.0], 2.0, G, ["A", "B"], np.array([1.0]))
    assert order == ["A", "B"] and scores.tolist() == [2.0, -1.0]
    assert mmc_classify([-1.0], 2.0, G, ["A", "B"], np.array([1.0])) == "A"


def test_mmc_matches_brute_force():
    rng = np.random.default_rng(8)
    subjects = [s for s in "xyz" for _ in range(3)]
    G = rng.uniform(size=(9, 5))
    G[:, 2] = np.repeat([0.0, 1.0, 2.0], 3)  # planted discriminative coordinate
    w = np.array([0.0, 0.0, -1.0, 0.0, 0.0])
    for probe_subject, level in zip("xyz", (0.0, 1.0, 2.0)):
        probe = rng.uniform(size=5)
        probe[2] = level + 0.05
        best = {}
        for s, g in zip(subjects, G):
            val = 0.3 + sum(wi * abs(pi - gi) for wi, pi, gi in zip(w, probe, g))
            best[s] = max(best.get(s, -np.inf), val)
        assert mmc_classify(w, 0.3, G, subjects, probe) == max(best, key=best.get) == probe_subject


@given(st.floats(-50, 50))
def test_mmc_argmax_invariant_to_bias_shift(shift):
    rng = np.random.default_rng(3)
    G = rng.uniform(size=(6, 4))
    w = rng.standard_normal(4)
    subj = ["a", "a", "b", "b", "c", "c"]
    p = rng.uniform(size=4)
    assert mmc_classify(w, 0.1, G, subj, p) == mmc_classify(w, 0.1 + shift, G, subj, p)


def test_mmc_needs_candidates():
    with pytest.raises(ValueError):
        mmc_classify([1.0], 0.0, np.zeros((0, 1)), [], np.array([1.0]))


# --- Fisher -----------------------------------------------------------------------

def test_fisher_separates_blobs():
    X, pos = synth.gaussian_blobs(3, separation=10.0)
    model = fisher_fit(X, pos)
    z = model.transform(X)[:, 0]
    z1, z2 = z[pos], z[~pos]
    pooled = np.sqrt(0.5 * (z1.var() + z2.var()))
    assert abs(z1.mean() - z2.mean()) > 5 * pooled
    assert model.predict(X) == list(pos)


def test_fisher_duplicate_features_no_failure():
    X, pos = synth.gaussian_blobs(1)
    Xd = np.hstack([X, X[:, :1], X[:, :1]])
    model = fisher_fit(Xd, pos)
    assert np.all(np.isfinite(model.projection))
    assert model.predict(Xd) == list(pos)


def test_fisher_validation():
    with pytest.raises(ValueError, match="two classes"):
        fisher_fit(np.ones((3, 2)), ["a", "a", "a"])
    with pytest.raises(ValueError):
        fisher_fit(np.random.default_rng(0).uniform(size=(6, 2)), list("aabbcc"), out_dim=3)


@pytest.mark.parametrize("seed", range(10))
def test_two_class_mse_collinear_with_fisher(seed):
    rng = np.random.default_rng(seed)
    n1, n2 = int(rng.integers(15, 40)), int(rng.integers(15, 40))
    dim = 4
    A = rng.standard_normal((dim, dim))
    X = np.vstack([rng.standard_normal((n1, dim)) @ A + 2.0,
                   rng.standard_normal((n2, dim)) @ A - 1.0])
    pos = np.r_[np.ones(n1, bool), np.zeros(n2, bool)]
    w = mse_direction(X, pos)
    assert abs_cos(w, direct_fisher_direction(X, pos)) > 0.999
    assert abs_cos(w, fisher_fit(X, pos).projection[:, 0]) > 0.999


def test_fisher_decisions_invariant_to_positive_scaling():
    rng = np.random.default_rng(12)
    means = rng.uniform(-3, 3, size=(3, 4))
    X = np.vstack([m + 0.5 * rng.standard_normal((10, 4)) for m in means])
    labels = [c for c in "abc" for _ in range(10)]
    probes = np.vstack([m + 0.5 * rng.standard_normal((4, 4)) for m in means])
    D = np.array([0.1, 3.0, 7.0, 0.5])
    assert fisher_fit(X, labels).predict(probes) == fisher_fit(X * D, labels).predict(probes * D)


# --- selection model --------------------------------------------------------------

def sample_model():
    sol = SparseSolution([0, 3, 7], [0.25, -1.5, 1 / 3], 10, 0.0)
    return SelectionModel.from_solution(sol, "shk", "omp", seed=42, ratio="1:7",
                                        digest=dataset_digest(b"abc"))


def test_model_drops_bias_column():
    m = sample_model()
    assert m.support.tolist() == [2, 6] and m.bias == 0.25 and m.dim == 9


def test_model_text_format():
    text = sample_model().dumps()
    assert text.split("\n") == [
        "SPARSESEL v1",
        "method shk solver omp",
        "dim 9 nnz 2 bias 0.25",
        "2 -1.5",
        "6 0.3333333333333333",
        "provenance seed=42 ratio=1:7 digest="
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad",
        "",
    ]


def test_model_round_trip(tmp_path):
    m = sample_model()
    m.save(tmp_path / "m.txt")
    back = SelectionModel.load(tmp_path / "m.txt")
    assert back.dumps() == m.dumps()
    assert np.array_equal(back.weights, m.weights) and back.bias == m.bias


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=6))
def test_model_weights_round_trip_exactly(ws):
    m = SelectionModel(np.arange(len(ws)), ws, ws[0], 10, "sfisher", "l1")
    back = SelectionModel.loads(m.dumps())
    assert back.weights.tolist() == m.weights.tolist()


def test_model_validation():
    with pytest.raises(ValueError, match="sorted"):
        SelectionModel([3, 1], [1.0, 1.0], 0.0, 5, "shk", "omp")
    with pytest.raises(ValueError, match="below dim"):
        SelectionModel([5], [1.0], 0.0, 5, "shk", "omp")
    with pytest.raises(ValueError, match="selection model"):
        SelectionModel.loads("SPARSESEL v2\n")
    with pytest.raises(ValueError, match="malformed"):
        SelectionModel.loads("SPARSESEL v1\nmethod shk solver omp\ndim 5 nnz 2 bias 0.0\n1 1.0\n")


def test_gather_then_classify_equals_pregathered():
    rng = np.random.default_rng(6)
    m = SelectionModel([1, 4, 5], [1.0, 1.0, 1.0], 0.0, 8, "shk", "omp")
    G = rng.uniform(size=(6, 8))
    p = rng.uniform(size=8)
    subj = list("aabbcc")
    assert nnc_classify(m.gather(G), subj, m.gather(p)) == nnc_classify(G[:, [1, 4, 5]], subj, p[[1, 4, 5]])
