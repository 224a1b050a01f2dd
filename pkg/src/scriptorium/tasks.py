"""Writer identification, retrieval, verification and classification on style vectors."""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import linkage
from sklearn.base import BaseEstimator, ClassifierMixin, ClusterMixin
from sklearn.decomposition import PCA
from sklearn.utils.validation import check_is_fitted

from ._validation import DegenerateInputError, check_nonzero_rows, check_vectors
from .embedstore import DocumentVector, WriterTemplate, aggregate
from .metrics import ScoredTrial, eer, silhouette

logger = logging.getLogger(__name__)

DEFAULT_REFERENCES = 5


@dataclass(frozen=True)
class RankedList:
    """Candidates best-first. ``higher_is_better`` tells how to read ``score``."""

    query_id: str
    items: tuple
    higher_is_better: bool = True

    @property
    def candidates(self):
        return [c for c, _ in self.items]

    @property
    def scores(self):
        return [s for _, s in self.items]

    def top(self, n):
        return self.items[:n]


def _rank(query_id, ids, scores, higher_is_better):
    ids = [str(i) for i in ids]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate candidate ids")
    key = (lambda p: (-p[1], p[0])) if higher_is_better else (lambda p: (p[1], p[0]))
    items = tuple(sorted(zip(ids, (float(s) for s in scores)), key=key))
    return RankedList(str(query_id), items, higher_is_better)


def cosine(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(cosine_matrix(a[None, :], b[None, :])[0, 0])


def cosine_matrix(A, B):
    """Pairwise cosine similarities of the rows of ``A`` and ``B``.

    Written as ``a.b / sqrt(|a|^2 |b|^2)`` so a vector scores exactly 1 against
    itself and exactly -1 against its negation.
    """
    A = check_vectors(A, "queries")
    B = check_vectors(B, "references")
    check_nonzero_rows(A, "queries")
    check_nonzero_rows(B, "references")
    sa = np.einsum("ij,ij->i", A, A)
    sb = np.einsum("ij,ij->i", B, B)
    return np.clip((A @ B.T) / np.sqrt(np.outer(sa, sb)), -1.0, 1.0)


def _mean(v):
    return np.asarray(v.mean_vector if hasattr(v, "mean_vector") else v, dtype=np.float64)


# ---------------------------------------------------------------------------
# Identification
# ---------------------------------------------------------------------------

def identify(word_vector, templates, query_id="query"):
    """Rank writer templates by cosine similarity to one word's style vector."""
    if not templates:
        raise ValueError("identification needs at least one writer template")
    scores = cosine_matrix(word_vector, np.stack([_mean(t) for t in templates]))[0]
    return _rank(query_id, [t.writer_id for t in templates], scores, True)


class WriterIdentifier(ClassifierMixin, BaseEstimator):
    """Nearest writer template under cosine similarity.

    ``fit`` averages the training style vectors of each writer into a template;
    ``predict`` returns the most similar writer for every query vector.
    """

    def fit(self, X, y):
        X = check_vectors(X, min_samples=1)
        y = np.asarray(y).astype(str)
        if len(y) != len(X):
            raise ValueError("X and y have different lengths")
        self.classes_ = np.unique(y)
        self.templates_ = [
            WriterTemplate(w, aggregate(X[y == w]), int(np.sum(y == w))) for w in self.classes_
        ]
        self._template_matrix = np.stack([t.mean_vector for t in self.templates_])
        check_nonzero_rows(self._template_matrix, "templates")
        return self

    def decision_function(self, X):
        check_is_fitted(self, "templates_")
        return cosine_matrix(X, self._template_matrix)

    def predict(self, X):
        return np.array([r.candidates[0] for r in self.rank(X)])

    def rank(self, X, query_ids=None):
        scores = self.decision_function(X)
        query_ids = query_ids if query_ids is not None else [str(i) for i in range(len(scores))]
        return [_rank(q, self.classes_, s, True) for q, s in zip(query_ids, scores)]

    def trials(self, X, y, query_ids=None):
        ranked = self.rank(X, query_ids)
        return [ScoredTrial(r.query_id, str(t), tuple(r.candidates)) for r, t in zip(ranked, y)]


# ---------------------------------------------------------------------------
# Retrieval
# ---------------------------------------------------------------------------

def retrieve(query, database):
    """Rank database documents by ascending Euclidean distance to ``query``.

    Entries sharing the query's ``document_id`` are left out, so a corpus can
    be queried against itself leave-one-out.
    """
    database = [d for d in database if d.document_id != query.document_id]
    if not database:
        raise ValueError("retrieval database is empty")
    q = _mean(query)
    M = np.stack([_mean(d) for d in database])
    dist = np.sqrt(((M - q) ** 2).sum(axis=1))
    return _rank(query.document_id, [d.document_id for d in database], dist, False)


class WriterRetriever(BaseEstimator):
    """Leave-one-out document retrieval by Euclidean distance."""

    def fit(self, documents):
        self.documents_ = list(documents)
        if len(self.documents_) < 2:
            raise ValueError("retrieval needs at least two documents")
        self.writer_of_ = {d.document_id: d.writer_id for d in self.documents_}
        return self

    def rank(self, query):
        check_is_fitted(self, "documents_")
        return retrieve(query, self.documents_)

    def leave_one_out(self):
        check_is_fitted(self, "documents_")
        return [retrieve(d, self.documents_) for d in self.documents_]

    def trials(self):
        return [
            ScoredTrial(r.query_id, self.writer_of_[r.query_id],
                        tuple(self.writer_of_[c] for c in r.candidates))
            for r in self.leave_one_out()
        ]


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationDecision:
    score: float
    threshold: float
    accepted: bool


def _decide(score, t):
    return VerificationDecision(float(score), float(t), bool(score >= t))


def signature_template(genuine_refs, n_refs=DEFAULT_REFERENCES):
    refs = check_vectors(genuine_refs, "genuine_refs")
    if len(refs) != n_refs:
        raise ValueError(f"expected exactly {n_refs} genuine references, got {len(refs)}")
    return aggregate(refs)


def verify_signature(query, genuine_refs, t, n_refs=DEFAULT_REFERENCES):
    """Accept ``query`` if its cosine similarity to the mean of the references is >= ``t``."""
    return _decide(cosine(query, signature_template(genuine_refs, n_refs)), t)


def verify_documents(a, b, t):
    """Accept that two documents share a writer if their cosine similarity is >= ``t``."""
    return _decide(cosine(_mean(a), _mean(b)), t)


def calibrate_threshold(genuine_scores, impostor_scores):
    """Threshold at the equal-error operating point of a calibration split."""
    return eer(genuine_scores, impostor_scores)[1]


class WriterVerifier(ClassifierMixin, BaseEstimator):
    """Thresholded cosine similarity. ``fit`` picks the threshold at the EER.

    ``X`` holds similarity scores; ``y`` is 1 for same-writer pairs, 0 otherwise.
    """

    def __init__(self, threshold=None):
        self.threshold = threshold

    def fit(self, X, y):
        scores = np.asarray(X, dtype=np.float64).ravel()
        y = np.asarray(y).astype(bool)
        self.classes_ = np.array([False, True])
        if self.threshold is not None:
            self.threshold_ = float(self.threshold)
            self.eer_ = None
        else:
            self.eer_, self.threshold_ = eer(scores[y], scores[~y])
        return self

    def predict(self, X):
        check_is_fitted(self, "threshold_")
        return np.asarray(X, dtype=np.float64).ravel() >= self.threshold_


# ---------------------------------------------------------------------------
# Classification (clustering)
# ---------------------------------------------------------------------------

class PCAReducer:
    """Principal-component projection to at most ``n_components`` dimensions."""

    def __init__(self, n_components=32):
        self.n_components = n_components

    def fit_transform(self, X):
        k = min(self.n_components, X.shape[0], X.shape[1])
        if k >= X.shape[1]:
            return X - X.mean(axis=0)
        return PCA(n_components=k, svd_solver="full").fit_transform(X)


class IdentityReducer:
    def fit_transform(self, X):
        return X


def make_reducer(reducer="auto", random_state=0):
    """``"auto"`` tries UMAP and falls back to PCA; ``"pca"``, ``"umap"``, ``"none"`` force one."""
    if reducer is None or reducer == "none":
        return IdentityReducer()
    if not isinstance(reducer, str):
        return reducer
    if reducer in ("auto", "umap"):
        try:
            import umap
        except ImportError:
            if reducer == "umap":
                raise
            logger.info("umap-learn not installed; using PCA reducer")
            return PCAReducer()
        return umap.UMAP(random_state=random_state)
    if reducer == "pca":
        return PCAReducer()
    raise ValueError(f"unknown reducer {reducer!r}")


@dataclass
class ClusteringResult:
    assignments: dict
    K: int
    silhouette: float
    K_prime: int = None
    K_star: int = None
    silhouette_table: dict = field(default_factory=dict)

    @property
    def labels(self):
        return np.array(list(self.assignments.values()))


def _dense_labels(labels):
    mapping = {}
    return np.array([mapping.setdefault(v, len(mapping)) for v in labels.tolist()])


def _prepare(vectors, reducer):
    X = check_vectors([_mean(v) for v in vectors] if len(vectors) and hasattr(vectors[0], "mean_vector")
                      else vectors, "vectors")
    if np.all(np.ptp(X, axis=0) == 0):
        raise DegenerateInputError("all vectors are identical; clustering is undefined")
    Z = np.asarray(make_reducer(reducer).fit_transform(X), dtype=np.float64)
    if np.all(np.ptp(Z, axis=0) == 0):
        raise DegenerateInputError("reduced vectors are identical; clustering is undefined")
    return Z


def _cuts(Z, ks):
    """Flat partitions for each K, replaying the first ``n - K`` merges of the tree.

    Replaying merges directly (rather than scipy's ``cut_tree``) keeps K == n
    exact: ``cut_tree`` returns a single cluster there.
    """
    n = len(Z)
    tree = linkage(Z, method="average", metric="euclidean")
    parent = list(range(2 * n - 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    wanted = sorted(set(ks), reverse=True)
    out = {}
    merges = 0
    for k in wanted:
        while merges < n - k:
            a, b = int(tree[merges, 0]), int(tree[merges, 1])
            parent[find(a)] = n + merges
            parent[find(b)] = n + merges
            merges += 1
        out[k] = _dense_labels(np.array([find(i) for i in range(n)]))
    return out


def _ids(vectors, sample_ids):
    if sample_ids is not None:
        return [str(s) for s in sample_ids]
    if len(vectors) and hasattr(vectors[0], "document_id"):
        return [v.document_id for v in vectors]
    return [str(i) for i in range(len(vectors))]


def classify_writers(vectors, K, reducer="auto", sample_ids=None, k_star=None):
    """Reduce, then average-linkage agglomerative clustering into ``K`` groups."""
    n = len(vectors)
    if K < 2:
        raise ValueError("K must be >= 2")
    if K > n:
        raise ValueError(f"K={K} exceeds the number of vectors ({n})")
    Z = _prepare(vectors, reducer)
    labels = _cuts(Z, [K])[K]
    return ClusteringResult(
        assignments=dict(zip(_ids(vectors, sample_ids), labels.tolist())),
        K=K, silhouette=silhouette(Z, labels), K_star=k_star,
    )


def estimate_k(vectors, k_range, reducer="auto", maximize=True, sample_ids=None, k_star=None):
    """Cluster for every K in the inclusive ``k_range`` and keep the best silhouette.

    ``maximize=False`` selects the smallest silhouette instead. Ties go to the
    smaller K. Returns a :class:`ClusteringResult` for the chosen K with the
    full per-K table attached.
    """
    lo, hi = k_range
    n = len(vectors)
    if lo > hi:
        raise ValueError(f"empty K range {k_range}")
    if lo < 2 or hi > n:
        raise ValueError(f"K range {k_range} must lie within [2, {n}]")
    Z = _prepare(vectors, reducer)
    ks = list(range(lo, hi + 1))
    cuts = _cuts(Z, ks)
    table = {k: silhouette(Z, cuts[k]) for k in ks}
    if maximize:
        pick = max(ks, key=lambda k: (table[k], -k))
    else:
        pick = min(ks, key=lambda k: (table[k], k))
    return ClusteringResult(
        assignments=dict(zip(_ids(vectors, sample_ids), cuts[pick].tolist())),
        K=pick, silhouette=table[pick], K_prime=pick, K_star=k_star, silhouette_table=table,
    )


class WriterClusterer(ClusterMixin, BaseEstimator):
    """Agglomerative writer clustering with optional silhouette-based K search.

    With ``n_clusters`` set, clusters into exactly that many groups; otherwise
    searches ``k_range``.
    """

    def __init__(self, n_clusters=None, k_range=(2, 10), reducer="auto", maximize_silhouette=True):
        self.n_clusters = n_clusters
        self.k_range = k_range
        self.reducer = reducer
        self.maximize_silhouette = maximize_silhouette

    def fit(self, X, y=None):
        if self.n_clusters is not None:
            result = classify_writers(X, self.n_clusters, self.reducer)
        else:
            lo, hi = self.k_range
            result = estimate_k(X, (lo, min(hi, len(X))), self.reducer, self.maximize_silhouette)
        self.result_ = result
        self.labels_ = result.labels
        self.n_clusters_ = result.K
        self.silhouette_ = result.silhouette
        self.silhouette_table_ = result.silhouette_table
        return self


__all__ = [
    "ClusteringResult", "DocumentVector", "PCAReducer", "RankedList", "VerificationDecision",
    "WriterClusterer", "WriterIdentifier", "WriterRetriever", "WriterVerifier",
    "calibrate_threshold", "classify_writers", "cosine", "cosine_matrix", "estimate_k",
    "identify", "make_reducer", "retrieve", "signature_template", "verify_documents",
    "verify_signature",
]
