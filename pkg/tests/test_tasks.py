import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import same_partition
from scriptorium._validation import DegenerateInputError
from scriptorium.embedstore import DocumentVector, WriterTemplate
from scriptorium.tasks import (
    WriterClusterer, WriterIdentifier, WriterRetriever, WriterVerifier, calibrate_threshold,
    classify_writers, cosine, estimate_k, identify, retrieve, verify_documents, verify_signature,
)


def template(wid, v):
    return WriterTemplate(wid, np.asarray(v, dtype=np.float64), 1)


def doc(did, wid, v):
    return DocumentVector(did, wid, np.asarray(v, dtype=np.float64), 1)


def blobs(centers, per, radius, seed):
    rng = np.random.default_rng(seed)
    X = np.concatenate([c + rng.uniform(-radius, radius, size=(per, len(c))) for c in centers])
    y = np.repeat(np.arange(len(centers)), per)
    return X, y


# -- identification ------------------------------------------------------------

def test_identify_self_match():
    ranked = identify([1.0, 0, 0], [template("B", [0, 1, 0]), template("A", [1, 0, 0]), template("C", [0, 0, 1])])
    assert ranked.candidates[0] == "A"
    assert ranked.scores[0] == pytest.approx(1.0)


def test_identify_mixture_matches_brute_force():
    rng = np.random.default_rng(0)
    A, B, C = rng.normal(size=(3, 16))
    q = 0.9 * A + 0.1 * B
    temps = [template("C", C), template("A", A), template("B", B)]
    brute = sorted(temps, key=lambda t: -(q @ t.mean_vector) / (np.linalg.norm(q) * np.linalg.norm(t.mean_vector)))
    ranked = identify(q, temps)
    assert ranked.candidates == [t.writer_id for t in brute]
    assert ranked.candidates[0] == "A"


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 10_000))
def test_identify_scale_and_order_invariant(scale, seed):
    rng = np.random.default_rng(seed)
    temps = [template(f"w{i}", v) for i, v in enumerate(rng.normal(size=(6, 8)))]
    q = rng.normal(size=8)
    base = identify(q, temps).candidates
    assert identify(scale * q, temps).candidates == base
    perm = [temps[i] for i in rng.permutation(len(temps))]
    assert identify(q, perm).candidates[0] == base[0]


def test_identify_zero_vector_rejected():
    with pytest.raises(DegenerateInputError):
        identify([0.0, 0.0], [template("A", [1, 0])])


def test_ties_broken_by_candidate_id():
    ranked = identify([1.0, 0], [template("b", [1, 0]), template("a", [2, 0]), template("c", [0, 1])])
    assert ranked.candidates == ["a", "b", "c"]


def test_writer_identifier_estimator():
    X, y = blobs([np.zeros(4) + 5, -np.ones(4) * 5], 10, 0.5, 1)
    writers = np.where(y == 0, "w0", "w1")
    clf = WriterIdentifier().fit(X, writers)
    assert list(clf.predict(X)) == list(writers)
    assert clf.score(X, writers) == 1.0
    assert [t.count for t in clf.templates_] == [10, 10]


# -- retrieval -----------------------------------------------------------------

def test_retrieve_exact_copy_first():
    q = doc("q", "w", [1.0, 2.0])
    ranked = retrieve(q, [doc("x", "v", [5, 5]), doc("copy", "w", [1.0, 2.0]), q])
    assert ranked.candidates[0] == "copy"
    assert ranked.scores[0] == 0.0
    assert "q" not in ranked.candidates


def test_retrieve_empty_database():
    q = doc("q", "w", [1.0])
    with pytest.raises(ValueError):
        retrieve(q, [q])


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 20), st.integers(0, 10_000))
def test_retrieve_matches_pairwise_distances(n, seed):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(n, 4))
    docs = [doc(f"d{i:02d}", f"w{i % 3}", v) for i, v in enumerate(V)]
    ranked = retrieve(docs[0], docs)
    brute = sorted(range(1, n), key=lambda i: (np.sqrt(((V[i] - V[0]) ** 2).sum()), docs[i].document_id))
    assert ranked.candidates == [docs[i].document_id for i in brute]
    shift = rng.normal(size=4) * 100
    moved = [doc(d.document_id, d.writer_id, d.mean_vector + shift) for d in docs]
    assert retrieve(moved[0], moved).candidates == ranked.candidates


def test_retriever_leave_one_out():
    docs = [doc("a1", "a", [0, 0]), doc("a2", "a", [0, 1]), doc("b1", "b", [9, 9]), doc("b2", "b", [9, 8])]
    model = WriterRetriever().fit(docs)
    trials = model.trials()
    assert [t.ranked_labels[0] for t in trials] == ["a", "a", "b", "b"]
    assert all(len(t.ranked_labels) == 3 for t in trials)


# -- verification --------------------------------------------------------------

def test_verify_signature_examples():
    v = np.array([1.0, 2.0, 3.0])
    refs = [v] * 5
    assert verify_signature(v, refs, 0.9).accepted
    assert verify_signature(v, refs, 0.999).score == pytest.approx(1.0)
    ortho = np.array([0.0, 3.0, -2.0])
    d = verify_signature(ortho, refs, 0.5)
    assert not d.accepted and d.score == pytest.approx(0.0, abs=1e-12)


def test_verify_signature_needs_five_refs():
    with pytest.raises(ValueError):
        verify_signature([1.0, 0], [[1.0, 0]] * 4, 0.5)
    assert verify_signature([1.0, 0], [[1.0, 0]] * 3, 0.5, n_refs=3).accepted


def test_verify_signature_zero_template():
    with pytest.raises(DegenerateInputError):
        verify_signature([1.0, 0], [[1.0, 0], [-1.0, 0], [0, 0], [0, 0], [0, 0]], 0.5)


def test_verify_documents_examples():
    a = doc("a", "w", [1.0, 2.0])
    assert verify_documents(a, a, 1.0).accepted
    anti = doc("b", "w", [-1.0, -2.0])
    d = verify_documents(a, anti, -0.999)
    assert d.score == pytest.approx(-1.0) and not d.accepted
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=(2, 32))
    score = verify_documents(doc("x", "w", x), doc("y", "w", y), 0).score
    assert score == pytest.approx(float(x @ y / np.linalg.norm(x) / np.linalg.norm(y)), abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.floats(-1, 1), st.floats(0, 1))
def test_verification_monotone_in_threshold(seed, t, dt):
    rng = np.random.default_rng(seed)
    q, r = rng.normal(size=(2, 6))
    low = verify_signature(q, [r] * 5, t)
    high = verify_signature(q, [r] * 5, t + dt)
    assert not (high.accepted and not low.accepted)


def test_writer_verifier_threshold_from_eer():
    scores = np.array([0.9, 0.8, 0.7, 0.2, 0.1, 0.3])
    y = np.array([1, 1, 1, 0, 0, 0])
    ver = WriterVerifier().fit(scores, y)
    assert ver.eer_ == 0.0
    assert list(ver.predict(scores)) == [True, True, True, False, False, False]
    assert calibrate_threshold(scores[:3], scores[3:]) == ver.threshold_
    assert WriterVerifier(threshold=0.85).fit(scores, y).predict([0.86, 0.84]).tolist() == [True, False]


def test_cosine_zero_norm():
    with pytest.raises(DegenerateInputError):
        cosine([0, 0], [1, 0])


# -- clustering ----------------------------------------------------------------

def test_two_blobs_k2():
    X, y = blobs([np.zeros(8), np.full(8, 100.0)], 20, 0.5, 0)
    res = classify_writers(X, 2, reducer="pca")
    assert same_partition(res.labels, y)
    assert res.silhouette >= 0.9
    assert sorted(set(res.labels)) == [0, 1]


def test_identical_points_degenerate():
    with pytest.raises(DegenerateInputError):
        classify_writers(np.ones((10, 4)), 2, reducer="pca")


def test_k_equal_n_gives_singletons():
    X = np.random.default_rng(1).normal(size=(7, 3))
    res = classify_writers(X, 7, reducer="none")
    assert sorted(res.labels) == list(range(7))


def test_k_larger_than_n():
    with pytest.raises(ValueError):
        classify_writers(np.eye(3), 4, reducer="none")


def test_estimate_k_three_blobs():
    centers = [np.zeros(6), np.full(6, 50.0), np.concatenate([np.full(3, -50.0), np.full(3, 50.0)])]
    X, y = blobs(centers, 15, 0.5, 2)
    res = estimate_k(X, (2, 10), reducer="pca", k_star=3)
    assert res.K_prime == 3 and res.K_star == 3
    assert sorted(res.silhouette_table) == list(range(2, 11))
    assert same_partition(res.labels, y)


def test_estimate_k_singleton_range_and_two_blob_table():
    X, _ = blobs([np.zeros(4), np.full(4, 80.0)], 12, 0.5, 3)
    assert estimate_k(X, (4, 4), reducer="pca").K_prime == 4
    table = estimate_k(X, (2, 6), reducer="pca").silhouette_table
    assert table[2] > table[6]


def test_estimate_k_empty_range():
    with pytest.raises(ValueError):
        estimate_k(np.eye(5), (4, 3), reducer="none")
    with pytest.raises(ValueError):
        estimate_k(np.eye(5), (1, 3), reducer="none")


def test_estimate_k_minimize_flag():
    X, _ = blobs([np.zeros(4), np.full(4, 80.0)], 12, 0.5, 3)
    res = estimate_k(X, (2, 6), reducer="pca", maximize=False)
    assert res.silhouette == min(res.silhouette_table.values())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_clustering_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(25, 5)) + np.repeat(rng.normal(scale=6, size=(5, 5)), 5, axis=0)
    perm = rng.permutation(len(X))
    ids = [f"s{i}" for i in range(len(X))]
    a = classify_writers(X, 5, reducer="pca", sample_ids=ids)
    b = classify_writers(X[perm], 5, reducer="pca", sample_ids=[ids[i] for i in perm])
    assert same_partition([a.assignments[i] for i in ids], [b.assignments[i] for i in ids])


def test_clusterer_estimator():
    X, y = blobs([np.zeros(3), np.full(3, 40.0), np.full(3, -40.0)], 10, 0.5, 4)
    est = WriterClusterer(k_range=(2, 8), reducer="pca").fit(X)
    assert est.n_clusters_ == 3 and same_partition(est.labels_, y)
    assert same_partition(WriterClusterer(n_clusters=3, reducer="none").fit_predict(X), y)
    assert est.get_params()["k_range"] == (2, 8)
