"""Brute-force reference computations, independent of the code under test."""
import numpy as np


def nuclear_lambda_grid(s, tau, step=1e-6):
    """Smallest lambda on a dense grid with sum(max(s - lambda, 0)) <= tau.

    A coarse grid brackets the answer and a second grid of spacing `step`
    refines it; the scanned function is monotone so this is an exhaustive scan.
    """
    def h(lam):
        return np.maximum(s[None, :] - lam[:, None], 0).sum(axis=1)

    if s.sum() <= tau:
        return 0.0
    coarse = np.arange(0.0, s.max() + 1e-3, 1e-3)
    i = int(np.argmax(h(coarse) <= tau))
    fine = np.arange(max(coarse[i] - 1e-3, 0.0), coarse[i] + step, step)
    return float(fine[int(np.argmax(h(fine) <= tau))])


def project_nuclear_grid(x, tau):
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    lam = nuclear_lambda_grid(s, tau)
    return (u * np.maximum(s - lam, 0)) @ vt


def project_diag2_grid(a, b, tau, kappa, step=1e-3):
    """Closest diag(p, q) with |p| + |q| <= tau and |p|, |q| <= kappa, by grid search.

    For a diagonal input the projection onto the intersection is itself
    diagonal (both sets are invariant under X -> D X D with D = diag(+-1)).
    """
    g = np.arange(-kappa, kappa + step / 2, step)
    p, q = np.meshgrid(g, g, indexing="ij")
    ok = np.abs(p) + np.abs(q) <= tau
    dist = np.where(ok, (p - a) ** 2 + (q - b) ** 2, np.inf)
    k = np.unravel_index(np.argmin(dist), dist.shape)
    return float(np.sqrt(dist[k]))
