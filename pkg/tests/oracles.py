"""Slow reference implementations shared by the tests."""

from __future__ import annotations

from scipy.optimize import brentq


def brute_force_index(a: int, b: int, beta: float = 0.9, depth: int = 200) -> float:
    """Optimal stopping against a standard arm, solved by backward induction and bracketing."""

    def gap(lam):
        retire = lam / (1 - beta)
        # values at depth: commit to the better of the posterior mean and lam forever
        v = [max((a + i) / (a + b + depth), lam) / (1 - beta) for i in range(depth + 1)]
        for k in range(depth - 1, -1, -1):
            nxt = []
            for i in range(k + 1):
                mu = (a + i) / (a + b + k)
                play = mu * (1 + beta * v[i + 1]) + (1 - mu) * beta * v[i]
                nxt.append(play if k == 0 else max(play, retire))
            v = nxt
        return v[0] - retire

    return brentq(gap, 0.0, 1.0, xtol=1e-10)
