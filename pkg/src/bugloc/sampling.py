"""Class-imbalance treatments for binary-labelled feature matrices.

Every function takes ``(X, y)`` with ``y`` in {0, 1} and returns a new
``(X, y)`` pair.  Original rows keep their order and labels; synthetic or
duplicated rows are appended after them.
"""

import enum

import numpy as np

from .errors import EmptyClass, TooFewMinority


class Sampling(str, enum.Enum):
    NONE = "none"
    SMOTE = "smote"
    RANDOM_OVER = "over"
    RANDOM_UNDER = "under"
    TOMEK = "tomek"

    @classmethod
    def parse(cls, value):
        if isinstance(value, Sampling):
            return value
        key = str(value).strip().lower()
        aliases = {"randomover": "over", "randomunder": "under", "random_over": "over",
                   "random_under": "under"}
        return cls(aliases.get(key, key))


def _arrays(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"feature matrix {X.shape} and labels {y.shape} disagree")
    return X, y


def class_roles(y):
    """(minority label, majority label); ties make 1 the minority."""
    ones = int(y.sum())
    zeros = y.size - ones
    if ones <= zeros:
        return 1, 0
    return 0, 1


def pairwise_sq_distances(A, B):
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def nearest_neighbors(X, k, chunk_elements=4_000_000):
    """Indices of each row's ``k`` nearest other rows (ties: lower index first)."""
    n = X.shape[0]
    out = np.empty((n, k), dtype=np.int64)
    step = max(1, chunk_elements // max(1, n * X.shape[1]))
    for start in range(0, n, step):
        stop = min(n, start + step)
        d = pairwise_sq_distances(X[start:stop], X)
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        if k == 1:
            # argmin returns the first (lowest-index) minimum
            out[start:stop, 0] = np.argmin(d, axis=1)
        elif k < n - 1:
            kth = np.partition(d, k - 1, axis=1)[:, k - 1]
            for r in range(stop - start):
                cand = np.flatnonzero(d[r] <= kth[r])
                order = np.argsort(d[r, cand], kind="stable")
                out[start + r] = cand[order][:k]
        else:
            out[start:stop] = np.argsort(d, axis=1, kind="stable")[:, :k]
    return out


def smote(X, y, k=5, seed=0):
    """Synthesize minority rows until both classes have equal counts."""
    X, y = _arrays(X, y)
    minority, _ = class_roles(y)
    min_idx = np.flatnonzero(y == minority)
    needed = (y.size - min_idx.size) - min_idx.size
    if needed <= 0:
        return X.copy(), y.copy()
    if min_idx.size < 2:
        raise TooFewMinority(f"SMOTE needs at least 2 minority rows, got {min_idx.size}")
    if k < 1:
        raise ValueError("k must be at least 1")
    pts = X[min_idx]
    neigh = nearest_neighbors(pts, min(k, pts.shape[0] - 1))
    rng = np.random.default_rng(seed)
    synthetic = np.empty((needed, X.shape[1]))
    for s in range(needed):
        a = rng.integers(pts.shape[0])
        b = neigh[a, rng.integers(neigh.shape[1])]
        lam = rng.random()
        synthetic[s] = pts[a] + lam * (pts[b] - pts[a])
    return (np.vstack([X, synthetic]),
            np.concatenate([y, np.full(needed, minority, dtype=np.int64)]))


def random_resample(X, y, mode, seed=0):
    """Balance by duplicating minority rows (``over``) or dropping majority rows (``under``)."""
    X, y = _arrays(X, y)
    mode = Sampling.parse(mode)
    minority, majority = class_roles(y)
    min_idx = np.flatnonzero(y == minority)
    maj_idx = np.flatnonzero(y == majority)
    if min_idx.size == 0 or maj_idx.size == 0:
        raise EmptyClass("random resampling needs both classes present")
    gap = maj_idx.size - min_idx.size
    if gap == 0:
        return X.copy(), y.copy()
    rng = np.random.default_rng(seed)
    if mode is Sampling.RANDOM_OVER:
        extra = rng.choice(min_idx, size=gap, replace=True)
        keep = np.concatenate([np.arange(y.size), extra])
    elif mode is Sampling.RANDOM_UNDER:
        drop = rng.choice(maj_idx, size=gap, replace=False)
        mask = np.ones(y.size, dtype=bool)
        mask[drop] = False
        keep = np.flatnonzero(mask)
    else:
        raise ValueError(f"random_resample mode must be over or under, not {mode.value}")
    return X[keep], y[keep]


def tomek_link_pairs(X, y):
    """Opposite-label pairs ``(i, j)``, ``i < j``, that are mutual nearest neighbours."""
    X, y = _arrays(X, y)
    if X.shape[0] < 2:
        return []
    nn = nearest_neighbors(X, 1)[:, 0]
    pairs = []
    for i, j in enumerate(nn):
        if i < j and nn[j] == i and y[i] != y[j]:
            pairs.append((i, int(j)))
    return pairs


def tomek_links(X, y, return_removed=False):
    """Drop the majority-class member of every Tomek link."""
    X, y = _arrays(X, y)
    if (y == 0).all() or (y == 1).all():
        raise EmptyClass("Tomek links need both classes present")
    _, majority = class_roles(y)
    removed = sorted({i if y[i] == majority else j for i, j in tomek_link_pairs(X, y)})
    mask = np.ones(y.size, dtype=bool)
    mask[removed] = False
    if return_removed:
        return X[mask], y[mask], removed
    return X[mask], y[mask]


def apply_sampling(X, y, sampling, seed=0, k=5):
    sampling = Sampling.parse(sampling)
    if sampling is Sampling.NONE:
        return _arrays(X, y)
    if sampling is Sampling.SMOTE:
        return smote(X, y, k=k, seed=seed)
    if sampling is Sampling.TOMEK:
        return tomek_links(X, y)
    return random_resample(X, y, sampling, seed=seed)
