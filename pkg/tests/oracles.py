"""Reference computations that share no code with the package's series kernel.

Polynomials are plain dicts {exponent tuple: Fraction}.  Everything is exact
and deliberately naive.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction


def padd(a: dict, b: dict, scale=1) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + scale * v
    return {k: v for k, v in out.items() if v != 0}


def pmul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0) + va * vb
    return {k: v for k, v in out.items() if v != 0}


def ptrunc(a: dict, deg: int) -> dict:
    return {k: v for k, v in a.items() if sum(k) <= deg}


def classical_dx(a: dict, q: tuple) -> dict:
    out = {}
    for k, v in a.items():
        if all(kd >= qd for kd, qd in zip(k, q)):
            c = Fraction(v)
            for kd, qd in zip(k, q):
                c *= math.factorial(kd) // math.factorial(kd - qd)
            out[tuple(kd - qd for kd, qd in zip(k, q))] = c
    return out


def moment_dx(a: dict, q: tuple, values) -> dict:
    """Moment derivative x^k -> m(k)/m(k-q) x^{k-q}; ``values[d](k)`` gives m_d(k)."""
    out = {}
    for k, v in a.items():
        if all(kd >= qd for kd, qd in zip(k, q)):
            c = Fraction(v)
            for d, (kd, qd) in enumerate(zip(k, q)):
                c *= Fraction(values[d](kd)) / Fraction(values[d](kd - qd))
            out[tuple(kd - qd for kd, qd in zip(k, q))] = c
    return out


# -- classical Taylor recursion for linear equations with gamma(1) moments ------------


def taylor_linear(kappa: int, terms: list, init: list, J: int, dim: int, rhs=None) -> list:
    """Ordinary Taylor coefficients U_0..U_J of u for

        d_t^kappa u = sum c t^v d_t^i d_x^q u + f,   f = sum_n F_n t^n.

    ``terms`` holds tuples (c, v, i, q).  Comparing coefficients of t^n:
        (n+kappa)!/n! U_{n+kappa} = F_n + sum c (n-v+i)!/(n-v)! d_x^q U_{n-v+i}
    """
    U = [dict(p) for p in init]
    for n in range(J - kappa + 1):
        acc = dict(rhs[n]) if rhs and n < len(rhs) else {}
        for c, v, i, q in terms:
            if n < v:
                continue
            m = n - v
            fac = Fraction(math.factorial(m + i), math.factorial(m))
            acc = padd(acc, classical_dx(U[m + i], q), c * fac)
        scale = Fraction(math.factorial(n), math.factorial(n + kappa))
        U.append({k: v * scale for k, v in acc.items()})
    return U


# -- moment recursion by explicit composition enumeration ----------------------------


def compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative integers summing to ``total``, in lexicographic order."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_solution(kappa: int, terms: list, init: list, J: int, m0, spaces, rhs=None) -> list:
    """Normalized coefficients u_0..u_J of the moment equation, by brute force.

    ``terms`` holds (coeff_entries, v, factors) with coeff_entries the list of
    normalized t-coefficients of a(t, x) and factors a list of (i, q, r).
    For every term and j the sum runs over j0 + n_1 + ... + n_R = j - v with
    weight m0(j) / (m0(j0) prod m0(n_l)).
    """
    values = [m.value for m in spaces]
    u = [dict(p) for p in init]
    for j in range(J - kappa + 1):
        acc = dict(rhs[j]) if rhs and j < len(rhs) else {}
        for entries, v, factors in terms:
            if j < v:
                continue
            copies = [(i, q) for i, q, r in factors for _ in range(r)]
            for comp in compositions(j - v, len(copies) + 1):
                j0, ns = comp[0], comp[1:]
                if j0 >= len(entries) or not entries[j0]:
                    continue
                w = Fraction(m0.value(j))
                w /= Fraction(m0.value(j0))
                for n in ns:
                    w /= Fraction(m0.value(n))
                prod = dict(entries[j0])
                for (i, q), n in zip(copies, ns):
                    prod = pmul(prod, moment_dx(u[n + i], q, values))
                    if not prod:
                        break
                acc = padd(acc, prod, w)
        u.append(acc)
    return u


# -- Cole-Hopf for the classical Burgers equation u_t = u_xx + 2 u u_x -----------------


def cole_hopf_at_zero(J: int) -> list:
    """u_j(0) (normalized, i.e. d_t^j u(0, 0)) for u(0, x) = 1/(1 - x).

    u = w_x / w with w_t = w_xx and w(0, x) = 1/(1 - x), so
    w(t, 0) = sum_n (2n)!/n! t^n and w_x(t, 0) = sum_n (2n+1)!/n! t^n.
    """
    W = [Fraction(math.factorial(2 * n), math.factorial(n)) for n in range(J + 1)]
    Wx = [Fraction(math.factorial(2 * n + 1), math.factorial(n)) for n in range(J + 1)]
    Q = []
    for n in range(J + 1):
        # power series division Wx / W (W[0] = 1)
        Q.append(Wx[n] - sum(Q[k] * W[n - k] for k in range(n)))
    return [q * math.factorial(n) for n, q in enumerate(Q)]


def brute_hull(start: tuple, pts: list) -> list:
    """Lower chain by repeatedly testing every candidate against every other point."""
    chain = [start]
    cur = start
    while True:
        right = [p for p in pts if p[0] > cur[0]]
        best = None
        for p in right:
            k = (p[1] - cur[1]) / (p[0] - cur[0])
            if all((o[1] - cur[1]) >= k * (o[0] - cur[0]) for o in right):
                if best is None or p[0] > best[0]:
                    best = p
        if best is None:
            return chain
        chain.append(best)
        cur = best


def lemma_products(j: int, v: int, a: int) -> tuple[int, int]:
    lhs = 1
    for k, l in itertools.product(range(j), range(1, v + 1)):
        lhs *= k * (v + a) + l
    return lhs, math.factorial(j * v)
