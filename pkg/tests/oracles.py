"""Slow, independent reference implementations used only by the tests.

Each oracle follows the defining formula literally (explicit loops or
exhaustive enumeration) and shares no code with the package.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def phi(x, xi, b):
    return math.sqrt(2.0) * math.cos(sum(a * c for a, c in zip(x, xi)) + b)


def kernel(x, y, particles, phases):
    N = len(phases)
    return sum(phi(x, particles[k], phases[k]) * phi(y, particles[k], phases[k]) for k in range(N)) / N


def alignment(X, y, particles, phases):
    n = len(y)
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += y[i] * y[j] * kernel(X[i], X[j], particles, phases)
    return 8.0 / (n * (n - 1)) * total


def risk(X, y, particles, phases, alpha):
    n = len(y)
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += (alpha * y[i] * y[j] - kernel(X[i], X[j], particles, phases)) ** 2
    return 8.0 / (n * (n - 1) * alpha) * total


def mmd(V, W, particles, phases):
    m, n, N = len(V), len(W), len(phases)
    a = b = c = 0.0
    for k in range(N):
        for i in range(m):
            for j in range(m):
                if i != j:
                    a += phi(V[i], particles[k], phases[k]) * phi(V[j], particles[k], phases[k])
        for i in range(n):
            for j in range(n):
                if i != j:
                    b += phi(W[i], particles[k], phases[k]) * phi(W[j], particles[k], phases[k])
        for i in range(m):
            for j in range(n):
                c += phi(V[i], particles[k], phases[k]) * phi(W[j], particles[k], phases[k])
    # the 1/N particle average is part of the kernel
    return (a / (m * (m - 1)) + b / (n * (n - 1)) - 2.0 * c / (m * n)) / N


def energy(X, y, particles, phases, alpha):
    n, N = len(y), len(phases)
    lin = quad = 0.0
    for k in range(N):
        lin += (sum(y[i] * phi(X[i], particles[k], phases[k]) for i in range(n)) / n) ** 2
        for l in range(N):
            s = sum(phi(X[i], particles[k], phases[k]) * phi(X[i], particles[l], phases[l]) for i in range(n))
            quad += (s / n) ** 2
    lin /= N
    quad /= N * N
    return (quad - alpha * lin) / alpha, lin, quad


def qp_dual(K, y, C):
    """Exact maximum of ``sum(b) - 1/2 (b*y)^T K (b*y)`` over ``y.b = 0, 0 <= b <= C``.

    Enumerates every assignment of each coordinate to {0, C, free} and solves
    the equality-constrained stationarity system on the free block.
    """
    n = len(y)
    Q = K * np.outer(y, y)
    best, best_beta = -np.inf, None
    for pattern in itertools.product((0, 1, 2), repeat=n):
        beta = np.zeros(n)
        free = [i for i in range(n) if pattern[i] == 2]
        for i in range(n):
            if pattern[i] == 1:
                beta[i] = C
        fixed = [i for i in range(n) if pattern[i] != 2]
        if free:
            F = np.array(free)
            fx = np.array(fixed, dtype=int)
            # [Q_FF  y_F] [b_F]   [1 - Q_F,fixed b_fixed]
            # [y_F^T  0 ] [nu ] = [ -y_fixed . b_fixed  ]
            A = np.zeros((len(F) + 1, len(F) + 1))
            A[:-1, :-1] = Q[np.ix_(F, F)]
            A[:-1, -1] = y[F]
            A[-1, :-1] = y[F]
            rhs = np.empty(len(F) + 1)
            rhs[:-1] = 1.0 - (Q[np.ix_(F, fx)] @ beta[fx] if len(fx) else 0.0)
            rhs[-1] = -(y[fx] @ beta[fx]) if len(fx) else 0.0
            sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            if np.linalg.norm(A @ sol - rhs) > 1e-8:
                continue
            beta[F] = sol[:-1]
        if abs(y @ beta) > 1e-9 or beta.min() < -1e-12 or beta.max() > C + 1e-12:
            continue
        val = beta.sum() - 0.5 * beta @ Q @ beta
        if val > best:
            best, best_beta = val, beta.copy()
    return best, best_beta


def sorted_coupling(a, b, p):
    """``W_p`` between 1-D uniform empirical measures: match order statistics."""
    a, b = np.sort(np.ravel(a)), np.sort(np.ravel(b))
    return float(np.mean(np.abs(a - b) ** p) ** (1.0 / p))


def knn_sigma2(X, k):
    n = len(X)
    total = 0.0
    for i in range(n):
        d = sorted(float(np.sum((X[i] - X[j]) ** 2)) for j in range(n) if j != i)
        d = [v for v in d if v > 0]
        total += d[k - 1]
    return total / n
