"""Multinomial expansion of polynomial nonlinearities over a perturbation series.

Substituting u = sum_n eps^n u_n into u^q and collecting the coefficient of
eps^j yields a sum over integer compositions (k_0, ..., k_j) with
sum k_i = q and sum i*k_i = j, each weighted by the multinomial coefficient
q! / prod(k_i!).  These drive the forcing terms of every hierarchy order.
"""

from functools import lru_cache
from math import factorial

import numpy as np

__all__ = ["enumerate_compositions", "series_power", "series_polynomial",
           "multinomial_forcing"]


@lru_cache(maxsize=None)
def enumerate_compositions(q, j):
    """Compositions (k_0..k_j) with sum k_i = q and sum i*k_i = j.

    Enumeration is recursive and lexicographic in (k_0, k_1, ...), so the
    result order is deterministic.  Returns a tuple of
    ``(coefficient, ((order, exponent), ...))`` pairs where the inner tuple
    lists only the nonzero exponents.

    Parameters
    ----------
    q : int
        Power of the monomial nonlinearity, q >= 1.
    j : int
        Series order at which the coefficient is collected, j >= 0.
    """
    if q < 1:
        raise ValueError(f"monomial power must be >= 1, got {q}")
    if j < 0:
        raise ValueError(f"series order must be >= 0, got {j}")
    found = []

    def descend(i, rem_q, rem_j, ks):
        if i == j:
            # last slot: k_j must absorb the remaining power and weight
            if j * rem_q == rem_j:
                found.append(tuple(ks + [rem_q]))
            return
        for k in range(rem_q + 1):
            if i * k > rem_j:
                break
            descend(i + 1, rem_q - k, rem_j - i * k, ks + [k])

    if j == 0:
        found.append((q,))
    else:
        descend(0, q, j, [])

    out = []
    for ks in found:
        coef = factorial(q)
        for k in ks:
            coef //= factorial(k)
        out.append((coef, tuple((i, k) for i, k in enumerate(ks) if k)))
    return tuple(out)


def series_power(q, j, terms):
    """Coefficient of eps^j in (sum_n eps^n u_n)^q, evaluated pointwise.

    Parameters
    ----------
    q : int
        Monomial power.
    j : int
        Collected series order.  Requires terms for orders 0..j.
    terms : sequence of ndarray
        Sampled series terms u_0, u_1, ... on a common grid.
    """
    if j >= len(terms):
        raise ValueError(f"order {j} needs terms up to u_{j}, got {len(terms)}")
    base = np.asarray(terms[0])
    total = np.zeros_like(base, dtype=float)
    for coef, exps in enumerate_compositions(q, j):
        prod = float(coef) * np.ones_like(base, dtype=float)
        for i, k in exps:
            prod = prod * np.asarray(terms[i]) ** k
        total += prod
    return total


def series_polynomial(poly, j, terms):
    """Coefficient of eps^j in P(sum eps^n u_n) for P(u) = sum_m c_m u^q_m.

    ``poly`` is a sequence of (coefficient, power) pairs.
    """
    base = np.asarray(terms[0])
    total = np.zeros_like(base, dtype=float)
    for coef, q in poly:
        total += coef * series_power(q, j, terms)
    return total


def multinomial_forcing(n, q, lower):
    """Forcing of hierarchy order ``n`` for a monomial nonlinearity u^q.

    The order-n equation of the hierarchy is driven by minus the eps^(n-1)
    coefficient of u^q, which involves only corrections below order n.

    Parameters
    ----------
    n : int
        Hierarchy order, n >= 1.
    q : int
        Nonlinearity power.
    lower : sequence of ndarray
        Sampled corrections u_0 .. u_{n-1} on one common grid.

    Returns
    -------
    ndarray
        Sampled forcing, same shape as the inputs.
    """
    if n <= 0:
        raise ValueError(f"forcing is defined for orders n >= 1, got {n}")
    if len(lower) < n:
        raise ValueError(f"order {n} needs {n} lower corrections, got {len(lower)}")
    shapes = {np.asarray(u).shape for u in lower}
    if len(shapes) > 1:
        raise ValueError(f"corrections sampled on mismatched grids: {sorted(shapes)}")
    return -series_power(q, n - 1, lower)
