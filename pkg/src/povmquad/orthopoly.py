"""Legendre polynomials, normalized associated Legendre functions, and
Gauss-Legendre rules on [-1, 1].

Legendre values come from the three-term recurrence

    (k+1) P_{k+1}(x) = (2k+1) x P_k(x) - k P_{k-1}(x),

differentiated once to carry P' alongside P (valid at x = +-1, unlike the
(x^2-1) quotient form). Associated Legendre functions are returned
pre-normalized so that P~_l^m(cos t) e^{i m p} is an orthonormal spherical
harmonic over the full solid angle; the normalization is fused into the
recurrence coefficients to avoid the overflow of raw P_l^m near l ~ 150.
No Condon-Shortley phase is applied here (the harmonics module owns it).

Gauss-Legendre nodes are the roots of P_n, found by Newton iteration from
Chebyshev-angle initial guesses; only the non-negative half is iterated
and the rest mirrored, for O(n^2) total cost. Weights use the classical
closed form lambda_k = 2 / ((1 - x_k^2) P_n'(x_k)^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError

_X_SLACK = 1e-12
_NEWTON_TOL = 1e-15
_NEWTON_MAX_ITER = 100


def _check_x(x):
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0 + _X_SLACK):
        raise DomainError("argument outside [-1, 1]")
    return np.clip(xa, -1.0, 1.0)


def legendre_eval(l: int, x):
    """Evaluate (P_l(x), P_l'(x)) by the three-term recurrence.

    Parameters
    ----------
    l : int
        Degree, l >= 0.
    x : float or ndarray
        Points in [-1, 1] (a 1e-12 slack is clamped).

    Returns
    -------
    (value, derivative)
        Scalars for scalar input, ndarrays otherwise.
    """
    if l < 0:
        raise DomainError(f"negative Legendre degree {l}")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    xa = _check_x(x)
    p = np.ones_like(xa)
    dp = np.zeros_like(xa)
    if l > 0:
        p_prev, dp_prev = p, dp
        p, dp = xa.copy(), np.ones_like(xa)
        for k in range(1, l):
            p_next = ((2 * k + 1) * xa * p - k * p_prev) / (k + 1)
            dp_next = ((2 * k + 1) * (p + xa * dp) - k * dp_prev) / (k + 1)
            p_prev, dp_prev = p, dp
            p, dp = p_next, dp_next
    if scalar:
        return float(p), float(dp)
    return p, dp


@lru_cache(maxsize=64)
def _norm_coeffs(l_max: int):
    """Recurrence coefficients for orthonormal associated Legendre values.

    amm[m] starts the diagonal: P~_m^m = amm[m] (1-x^2)^{m/2};
    a[l, m], b[l, m] step up in l: P~_l^m = a x P~_{l-1}^m + b P~_{l-2}^m.
    """
    amm = np.empty(l_max + 1)
    amm[0] = math.sqrt(1.0 / (4.0 * math.pi))
    for m in range(1, l_max + 1):
        amm[m] = amm[m - 1] * math.sqrt((2 * m + 1) / (2.0 * m))
    a = np.zeros((l_max + 1, l_max + 1))
    b = np.zeros((l_max + 1, l_max + 1))
    for m in range(l_max + 1):
        for l in range(m + 1, l_max + 1):
            a[l, m] = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b[l, m] = -math.sqrt(
                (2.0 * l + 1.0)
                * ((l - 1.0) * (l - 1.0) - m * m)
                / ((2.0 * l - 3.0) * (l * l - m * m))
            )
    return amm, a, b


def assoc_legendre_column(l_max: int, m: int, x) -> np.ndarray:
    """All normalized values P~_l^m(x) for l = m..l_max in one upward pass.

    The result has shape (l_max - m + 1,) + shape(x); row i holds l = m + i.
    This is the O(l_max - m) workhorse behind both single evaluations and
    the certification loops.
    """
    if m < 0 or m > l_max:
        raise DomainError(f"order m={m} outside 0..l_max={l_max}")
    xa = _check_x(x)
    amm, a, b = _norm_coeffs(l_max)
    s2 = np.maximum((1.0 - xa) * (1.0 + xa), 0.0)
    out = np.empty((l_max - m + 1,) + xa.shape)
    out[0] = amm[m] * s2 ** (0.5 * m) if m > 0 else np.full_like(xa, amm[0])
    if l_max > m:
        out[1] = a[m + 1, m] * xa * out[0]
    for l in range(m + 2, l_max + 1):
        i = l - m
        out[i] = a[l, m] * xa * out[i - 1] + b[l, m] * out[i - 2]
    return out


def assoc_legendre(l: int, m: int, x):
    """Orthonormality-normalized associated Legendre value P~_l^m(x).

    Normalized so that 2*pi * integral_{-1}^{1} P~_l^m(x)^2 dx = 1, i.e.
    P~_l^m(cos t) e^{i m p} integrates to 1 against its conjugate over the
    full 4*pi solid angle. No Condon-Shortley phase. Requires 0 <= m <= l
    and |x| <= 1.
    """
    if l < 0 or m < 0 or m > l:
        raise DomainError(f"invalid associated Legendre indices l={l}, m={m}")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    col = assoc_legendre_column(l, m, x)
    return float(col[-1]) if scalar else col[-1]


@dataclass(frozen=True)
class GaussLegendreRule:
    """Nodes and weights exact for polynomials of degree <= 2n - 1."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)


def gauss_legendre_rule(n: int) -> GaussLegendreRule:
    """Build the n-point Gauss-Legendre rule on [-1, 1].

    Roots of P_n are found by Newton iteration started from the
    Chebyshev-angle guesses cos(pi (k - 1/4) / (n + 1/2)); only the
    positive half is iterated (the middle root of odd n is exactly 0) and
    the negative half mirrored, so nodes and weights are symmetric to the
    last bit. Iteration stops when every |dx| < 1e-15; more than 100
    sweeps raises ConvergenceError naming the first stuck root.
    """
    if n < 1:
        raise DomainError(f"rule size must be >= 1, got {n}")
    half = n // 2
    if half:
        k = np.arange(1, half + 1)
        x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
        for _ in range(_NEWTON_MAX_ITER):
            p, dp = legendre_eval(n, x)
            dx = p / dp
            x -= dx
            if np.all(np.abs(dx) < _NEWTON_TOL):
                break
        else:
            bad = int(np.argmax(np.abs(dx) >= _NEWTON_TOL))
            raise ConvergenceError(
                f"Newton did not converge for root {bad} of P_{n} "
                f"within {_NEWTON_MAX_ITER} iterations",
                index=bad,
            )
        _, dp = legendre_eval(n, x)
        w_half = 2.0 / ((1.0 - x * x) * dp * dp)
    else:
        x = np.empty(0)
        w_half = np.empty(0)
    if n % 2:
        _, dp0 = legendre_eval(n, 0.0)
        mid_x = np.array([0.0])
        mid_w = np.array([2.0 / (dp0 * dp0)])
    else:
        mid_x = np.empty(0)
        mid_w = np.empty(0)
    nodes = np.concatenate((-x, mid_x, x[::-1]))
    weights = np.concatenate((w_half, mid_w, w_half[::-1]))
    return GaussLegendreRule(n=n, nodes=nodes, weights=weights)
