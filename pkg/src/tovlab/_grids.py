"""Small grid and quadrature helpers shared by the assembly modules."""

import numpy as np
from functools import lru_cache


@lru_cache(maxsize=32)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_panels(edges, n):
    """Gauss-Legendre nodes/weights on each interval of a partition.

    Parameters
    ----------
    edges : (m+1,) increasing array of panel edges
    n : points per panel

    Returns
    -------
    x, w : (m, n) arrays; sum(f(x)*w) integrates f over [edges[0], edges[-1]]
    """
    edges = np.asarray(edges, dtype=float)
    xg, wg = _leggauss(n)
    a = edges[:-1, None]
    b = edges[1:, None]
    x = 0.5 * (a + b) + 0.5 * (b - a) * xg[None, :]
    w = 0.5 * (b - a) * wg[None, :]
    return x, w


def graded_nodes(a, b, n, power, cluster_at="right"):
    """n+1 nodes on [a, b] algebraically clustered toward one endpoint.

    With cluster_at="right" the node distances from b follow (b-a)*u^power for
    uniform u, so power > 1 concentrates resolution at b (used for the stellar
    surface, where profiles behave like (R-r)^(1/(gamma-1))).
    """
    u = np.linspace(0.0, 1.0, n + 1)
    if cluster_at == "right":
        nodes = b - (b - a) * (1.0 - u) ** power
        nodes[0] = a
        nodes[-1] = b
    elif cluster_at == "left":
        nodes = a + (b - a) * u**power
        nodes[0] = a
        nodes[-1] = b
    else:
        raise ValueError("cluster_at must be 'left' or 'right'")
    return nodes


def geometric_nodes(a, b, n, ratio=1.08):
    """n+1 nodes on [a, b] with geometrically growing spacing away from a."""
    if n < 1:
        raise ValueError("need at least one interval")
    steps = ratio ** np.arange(n)
    cum = np.concatenate(([0.0], np.cumsum(steps)))
    nodes = a + (b - a) * cum / cum[-1]
    nodes[0] = a
    nodes[-1] = b
    return nodes


def merge_nodes(*arrays, rtol=1e-13):
    """Sorted union of node arrays with near-duplicates (relative rtol) removed."""
    allv = np.sort(np.concatenate([np.asarray(a, dtype=float) for a in arrays]))
    scale = max(abs(allv[0]), abs(allv[-1]), 1e-300)
    keep = np.concatenate(([True], np.diff(allv) > rtol * scale))
    return allv[keep]
