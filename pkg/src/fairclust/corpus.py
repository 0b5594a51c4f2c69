"""Deterministic desk-scale instance corpus."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .instance import Instance, make_instance
from .io import load_instance, save_instance

CORPUS_SEED = 20240611

# (p, q) cells: the first half has p >= q, the second p <= q
PQ_PGEQ = [(1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (2.0, 2.0), (3.0, 2.0)]
PQ_PLEQ = [(1.0, 2.0), (1.0, 3.0), (2.0, 3.0), (1.0, 1.5), (2.0, 4.0)]
SHAPES = ("line", "plane", "uniform")

CANONICAL = ("desk00", "desk04", "desk11", "desk15", "desk19", "desk26")


def _metric(shape: str, m: int, rng: np.random.Generator) -> np.ndarray:
    if shape == "line":
        x = np.sort(rng.integers(0, 20, size=m)).astype(float)
        x += np.arange(m) * 1e-3  # keep points distinct
        return np.abs(x[:, None] - x[None, :])
    if shape == "plane":
        P = rng.integers(0, 10, size=(m, 2)).astype(float) + rng.random((m, 2)) * 0.5
        return np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(axis=2))
    return 1.0 - np.eye(m)


def _weights(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    W = rng.integers(0, 4, size=(n, m)).astype(float)
    for i in range(n):
        if not W[i].any():
            W[i, rng.integers(m)] = 1.0
    return W


def desk_corpus(seed: int = CORPUS_SEED) -> list[Instance]:
    """30 instances, m <= 8, n <= 5, k <= 4, alternating regimes across (p, q) cells."""
    rng = np.random.default_rng(seed)
    out = []
    for t in range(30):
        pq = PQ_PGEQ if t < 15 else PQ_PLEQ
        p, q = pq[t % 5]
        m = int(rng.integers(4, 9))
        n = int(rng.integers(1, 6))
        k = int(rng.integers(1, min(4, m - 1) + 1))
        dist = _metric(SHAPES[t % 3], m, rng)
        W = _weights(n, m, rng)
        out.append(make_instance(dist=dist, weights=W, k=k, p=p, q=q, name=f"desk{t:02d}"))
    return out


def canonical_instances() -> list[Instance]:
    by_name = {inst.name: inst for inst in desk_corpus()}
    return [by_name[n] for n in CANONICAL]


def write_corpus(directory, instances) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for inst in instances:
        path = d / f"{inst.name}.json"
        save_instance(inst, path)
        paths.append(path)
    return paths


def read_corpus(directory) -> list[Instance]:
    return [load_instance(p) for p in sorted(Path(directory).glob("*.json"))]


def rounding_corpus(seed: int = CORPUS_SEED) -> list[Instance]:
    """Instances whose reduction keeps more than k representatives.

    A single group on a uniform metric with p > q has a strictly convex
    relaxation, so the optimum spreads a small deficit over every point and
    no point is absorbed; with k = m - 1 this leaves a surplus of one.
    """
    rng = np.random.default_rng(seed + 1)
    out = []
    for t, (m, p) in enumerate([(11, 2.0), (12, 3.0), (12, 2.0)]):
        w = 1.0 + 0.1 * rng.random(m) if t == 2 else np.ones(m)
        out.append(make_instance(dist=1.0 - np.eye(m), weights=w[None, :], k=m - 1, p=p, q=1.0, name=f"round{t:02d}"))
    return out


def gap_construction(eps: float = 0.1, t: int = 5, n: int = 20):
    """Uniform-metric example on which the natural p <= q relaxation is weak.

    Points 0..n-1 form J1 and n..2n-1 form J2.  Group i is the indicator of
    {i, ..., i+t-1} (mod n) inside J1.  The fractional solution keeps
    1 - eps at every j in J1, sends eps to its partner j + n, and opens J2.
    Returns ``(instance, x)``; k is the opening mass, rounded down.
    """
    m = 2 * n
    W = np.zeros((n, m))
    for i in range(n):
        W[i, [(i + a) % n for a in range(t)]] = 1.0
    x = np.zeros((m, m))
    for j in range(n):
        x[j, j] = 1.0 - eps
        x[j, j + n] = eps
        x[j + n, j + n] = 1.0
    k = int(np.floor(np.trace(x) + 1e-9))
    inst = make_instance(dist=1.0 - np.eye(m), weights=W, k=k, p=1.0, q=3.0, name="gap")
    return inst, x


def gap_core(n: int = 20, t: int = 5, surplus: int = 1, p: float = 1.0, q: float = 3.0):
    """The J1 part of :func:`gap_construction` with k = n - surplus.

    The symmetric point keeps 1 - surplus/n at every j and sends the rest to
    j + 1 (mod n).  Returns ``(instance, x)``.
    """
    W = np.zeros((n, n))
    for i in range(n):
        W[i, [(i + a) % n for a in range(t)]] = 1.0
    eps = surplus / n
    x = np.zeros((n, n))
    for j in range(n):
        x[j, j] = 1.0 - eps
        x[j, (j + 1) % n] = eps
    inst = make_instance(dist=1.0 - np.eye(n), weights=W, k=n - surplus, p=p, q=q, name="gap-core")
    return inst, x
