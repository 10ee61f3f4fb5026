"""Pure-numpy twin of the compiled ``_kernels`` module."""
import numpy as np


def _sq_to_centroids(X, C):
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("mkp,mkp->mk", diff, diff)


def pairwise_sq_dists(X):
    X = np.ascontiguousarray(X, dtype=float)
    out = _sq_to_centroids(X, X)
    np.fill_diagonal(out, 0.0)
    return np.minimum(out, out.T)


def kmeans_run(X, init, tol, max_iter):
    X = np.ascontiguousarray(X, dtype=float)
    m = X.shape[0]
    k = len(init)
    cent = X[np.asarray(init, dtype=np.intp)].copy()
    history = []
    inertia = 0.0
    converged = False
    labels = np.zeros(m, dtype=np.intp)
    rows = np.arange(m)
    for _ in range(max_iter):
        dist = _sq_to_centroids(X, cent)
        labels = np.argmin(dist, axis=1).astype(np.intp)
        counts = np.bincount(labels, minlength=k)
        for j in np.flatnonzero(counts == 0):
            own = dist[rows, labels]
            eligible = counts[labels] > 1
            pick = int(np.argmax(np.where(eligible, own, -1.0)))
            counts[labels[pick]] -= 1
            labels[pick] = j
            counts[j] = 1
            dist[pick, j] = 0.0
            cent[j] = X[pick]
        new = np.zeros_like(cent)
        np.add.at(new, labels, X)
        new /= counts[:, None]
        shift = float(np.max(np.sqrt(np.sum((new - cent) ** 2, axis=1))))
        cent = new
        inertia = float(np.sum((X - cent[labels]) ** 2))
        history.append(inertia)
        if shift <= tol:
            converged = True
            break
    return labels, cent, inertia, len(history), np.array(history), converged
