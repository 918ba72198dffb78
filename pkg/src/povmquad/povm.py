"""Finite optimal POVMs for N-copy pure-qubit state estimation.

A finite POVM here is a weighted set of N-fold coherent-state projectors
{c_k |Omega_k><Omega_k|^(x)N}. Completeness sum_k c_k |..| = identity on
the symmetric subspace is equivalent to the scalar condition

    sum_k c_k |<Omega_k|Omega>|^(2N) = 1   for every Omega,

which in turn is a Gauss-quadrature exactness statement for spherical
harmonics up to order N with lambda_k = 4*pi c_k / (N + 1). Any such
POVM achieves the optimal average estimation score (N+1)/(N+2).

The module builds POVMs from certified quadratures, verifies completeness
both scalar-wise and operator-wise (in the Dicke basis), evaluates the
rotation-average moment identity, extends the check to every total-spin
subspace of the full N-qubit space, and counts elements for the
mixed-state construction.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    CapExceeded,
    DomainError,
    InsufficientStrength,
    MissingCount,
    NotNormalized,
    ParseError,
    WeightError,
)
from .quadrature import FOUR_PI, DEFAULT_TOL, SphericalQuadrature, detect_strength
from .sphere import Direction, angles_to_xyz, sample_uniform_angles, substream

OPERATOR_CHECK_CAP = 60
_LOG_BINOMIAL_ABOVE = 50

# Fixed stream for default verification directions: libraries and CLI must
# be deterministic without a user-provided seed.
_TEST_DIRECTION_SEED = 0x9E3779B97F4A7C15
_TINY = 1e-300


@dataclass(frozen=True)
class FinitePovm:
    """Weighted coherent-state projectors for N copies."""

    copies: int
    c: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.copies < 1:
            raise DomainError(f"copies must be >= 1, got {self.copies}")
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        if not (c.shape == theta.shape == phi.shape) or c.ndim != 1 or c.size == 0:
            raise DomainError("c, theta and phi must be 1-D, equal length, non-empty")
        for arr in (c, theta, phi):
            arr.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @property
    def n(self) -> int:
        return self.c.size

    def __len__(self) -> int:
        return self.c.size

    def elements(self):
        for ck, t, p in zip(self.c, self.theta, self.phi):
            yield float(ck), Direction(t, p)

    def validate(self, tol: float = 1e-10):
        """Check c_k > 0 and sum c_k = N + 1 within `tol` (absolute)."""
        if np.any(self.c <= 0.0):
            raise WeightError(f"{self.label or 'povm'}: non-positive element weight")
        total = float(self.c.sum())
        if abs(total - (self.copies + 1)) > tol:
            raise NotNormalized(
                f"{self.label or 'povm'}: element weights sum to {total!r}, "
                f"expected {self.copies + 1}"
            )


@dataclass(frozen=True)
class DickeVector:
    """State of N qubits in the symmetric basis, indexed by excitation j."""

    copies: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.copies + 1,):
            raise DomainError(
                f"expected {self.copies + 1} amplitudes, got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))


def _pow_int(a: np.ndarray, n: int) -> np.ndarray:
    """a**n for integer n >= 0; exact squaring for small n, exp/log above."""
    if n == 0:
        return np.ones_like(a)
    if n == 1:
        return a.copy()
    if n <= 64:
        result = None
        base = a
        k = n
        while k:
            if k & 1:
                result = base.copy() if result is None else result * base
            k >>= 1
            if k:
                base = base * base
        return result
    with np.errstate(divide="ignore"):
        return np.exp(n * np.log(np.maximum(a, 0.0)))


def povm_from_quadrature(q: SphericalQuadrature, copies: int, tol: float = DEFAULT_TOL) -> FinitePovm:
    """Turn a quadrature of strength >= N into an optimal N-copy POVM.

    c_k = (N + 1) * lambda_k / (4*pi). Raises InsufficientStrength when
    the certified strength falls short of N (and WeightError for signed
    rules, which can never be POVMs).
    """
    if copies < 1:
        raise DomainError(f"copies must be >= 1, got {copies}")
    strength = detect_strength(q, copies, tol)
    if strength < copies:
        raise InsufficientStrength(strength, copies)
    c = (copies + 1) / FOUR_PI * q.weights
    label = f"{q.label or 'quadrature'} as povm N={copies}"
    return FinitePovm(copies=copies, c=c, theta=q.theta, phi=q.phi, label=label)


def exact_score(p: FinitePovm) -> float:
    """Average estimation score sum_k c_k / (N + 2) of a complete POVM.

    Equals (N+1)/(N+2), the N-copy optimum, whenever sum c_k = N + 1.
    """
    return float(p.c.sum()) / (p.copies + 2)


def optimal_score(copies: int) -> float:
    """The N-copy optimum (N+1)/(N+2)."""
    if copies < 0:
        raise DomainError(f"copies must be >= 0, got {copies}")
    return (copies + 1) / (copies + 2)


def _direction_angles(directions):
    """(theta, phi) arrays from a (theta, phi) pair or Direction iterable."""
    if (
        isinstance(directions, tuple)
        and len(directions) == 2
        and not isinstance(directions[0], Direction)
    ):
        theta = np.atleast_1d(np.asarray(directions[0], dtype=float))
        phi = np.atleast_1d(np.asarray(directions[1], dtype=float))
        if theta.shape != phi.shape:
            raise DomainError("theta and phi arrays must have the same shape")
        return theta, phi
    ds = list(directions)
    if not ds:
        raise DomainError("empty direction set")
    return (
        np.array([d.theta for d in ds]),
        np.array([d.phi for d in ds]),
    )


def completeness_test_angles(p: FinitePovm, count: int | None = None):
    """Default scalar-completeness probe set for a POVM.

    10 * (N+1)^2 uniform directions from a fixed stream, plus the POVM's
    own outcome directions and both poles; the residual is band-limited
    in the probe direction, so sampling at this density leaves no room
    for a violation above tolerance to hide.
    """
    if count is None:
        count = 10 * (p.copies + 1) ** 2
    rng = substream(_TEST_DIRECTION_SEED, p.copies)
    theta, phi = sample_uniform_angles(rng, count)
    theta = np.concatenate((theta, p.theta, [0.0, math.pi]))
    phi = np.concatenate((phi, p.phi, [0.0, 0.0]))
    return theta, phi


def scalar_completeness_residual(p: FinitePovm, directions=None) -> float:
    """max over probe Omega of |sum_k c_k |<Omega_k|Omega>|^(2N) - 1|."""
    if directions is None:
        theta, phi = completeness_test_angles(p)
    else:
        theta, phi = _direction_angles(directions)
    exyz = angles_to_xyz(p.theta, p.phi)
    dxyz = angles_to_xyz(theta, phi)
    worst = 0.0
    block = max(1, int(2e7) // max(p.n, 1))
    buf = np.empty((min(block, dxyz.shape[0]), p.n))
    for start in range(0, dxyz.shape[0], block):
        stop = min(dxyz.shape[0], start + block)
        ov = buf[: stop - start]
        np.matmul(dxyz[start:stop], exyz.T, out=ov)
        ov += 1.0
        ov *= 0.5
        np.clip(ov, 0.0, 1.0, out=ov)
        if p.copies > 64:
            # in-place exp(N log ov); log(0) = -inf maps cleanly to 0
            with np.errstate(divide="ignore"):
                np.log(ov, out=ov)
            ov *= p.copies
            np.exp(ov, out=ov)
            sums = ov @ p.c
        else:
            sums = _pow_int(ov, p.copies) @ p.c
        worst = max(worst, float(np.max(np.abs(sums - 1.0))))
    return worst


def _dicke_matrix(copies: int, theta, phi) -> np.ndarray:
    """Rows of symmetric-basis amplitudes for each direction; shape (n, N+1)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    j = np.arange(copies + 1)
    ch = np.cos(0.5 * theta)[:, None]
    sh = np.sin(0.5 * theta)[:, None]
    if copies <= _LOG_BINOMIAL_ABOVE:
        coeff = np.sqrt([float(math.comb(copies, int(jj))) for jj in j])
        mag = coeff * ch ** (copies - j) * sh**j
    else:
        # sqrt-binomials in log space; the clipped logs are only ever
        # multiplied by zero exactly where cos/sin vanish.
        half_log_binom = 0.5 * np.array(
            [
                math.lgamma(copies + 1) - math.lgamma(jj + 1) - math.lgamma(copies - jj + 1)
                for jj in j
            ]
        )
        logmag = (
            half_log_binom
            + (copies - j) * np.log(np.maximum(ch, _TINY))
            + j * np.log(np.maximum(sh, _TINY))
        )
        mag = np.exp(logmag)
        # exact zeros at exact poles, matching the direct branch
        mag[sh[:, 0] == 0.0, 1:] = 0.0
        mag[ch[:, 0] == 0.0, :copies] = 0.0
    return mag * np.exp(1j * phi[:, None] * j)


def dicke_amplitudes(copies: int, d: Direction) -> DickeVector:
    """Expand |Omega>^(x)N in the symmetric basis.

    amplitude_j = sqrt(C(N, j)) cos^(N-j)(theta/2) (e^{i phi} sin(theta/2))^j.
    """
    if copies < 1:
        raise DomainError(f"copies must be >= 1, got {copies}")
    amps = _dicke_matrix(copies, [d.theta], [d.phi])[0]
    return DickeVector(copies=copies, amplitudes=amps)


def operator_completeness_residual(p: FinitePovm, cap: int = OPERATOR_CHECK_CAP) -> float:
    """max entry of |sum_k c_k v_k v_k^dag - I| in the Dicke basis.

    Stronger than the scalar check (tests every matrix entry, not just
    diagonal expectation values over coherent states). The (N+1)^2 Gram
    accumulation is cheap but capped to keep misuse obvious.
    """
    if p.copies > cap:
        raise CapExceeded(f"operator check capped at N = {cap}, got {p.copies}")
    v = _dicke_matrix(p.copies, p.theta, p.phi)
    gram = v.T @ (p.c[:, None] * v.conj())
    gram[np.diag_indices_from(gram)] -= 1.0
    return float(np.max(np.abs(gram)))


def schur_moment_residual(q: SphericalQuadrature, copies: int, tol: float = DEFAULT_TOL) -> float:
    """Deviation of sum_k (lambda_k/4pi) v_k v_k^dag from I/(N+1).

    The rotation average of |Omega><Omega|^(x)N is I/(N+1) on the
    symmetric subspace; a quadrature of strength >= N reproduces it
    exactly, entry by entry.
    """
    if copies < 1:
        raise DomainError(f"copies must be >= 1, got {copies}")
    strength = detect_strength(q, copies, tol)
    if strength < copies:
        raise InsufficientStrength(strength, copies)
    v = _dicke_matrix(copies, q.theta, q.phi)
    w = q.weights / FOUR_PI
    gram = v.T @ (w[:, None] * v.conj())
    gram[np.diag_indices_from(gram)] -= 1.0 / (copies + 1)
    return float(np.max(np.abs(gram)))


def spin_subspaces(copies: int) -> list[int]:
    """Doubled total spins 2s of the N-qubit rotation blocks, ascending.

    s runs from 0 (even N) or 1/2 (odd N) up to N/2; doubling keeps the
    values exact integers.
    """
    if copies < 1:
        raise DomainError(f"copies must be >= 1, got {copies}")
    start = 0 if copies % 2 == 0 else 1
    return list(range(start, copies + 1, 2))


def subspace_completeness_residuals(
    q: SphericalQuadrature,
    copies: int,
    directions=None,
    tol: float = DEFAULT_TOL,
) -> dict[int, float]:
    """Covariant-extension check: completeness on every total-spin block.

    For each doubled spin 2s the weights c_k^(s) = (2s+1) lambda_k/(4*pi)
    must satisfy the 2s-copy scalar condition
    sum_k c_k^(s) overlap(Omega_k, Omega)^(2s) = 1 for all Omega. Each
    integrand is band-limited at order 2s <= N, so one strength-N
    quadrature serves every block at once. Returns {2s: max residual}.
    """
    strength = detect_strength(q, max(copies, 1), tol)
    if strength < copies:
        raise InsufficientStrength(strength, copies)
    if directions is None:
        rng = substream(_TEST_DIRECTION_SEED, 1000 + copies)
        theta, phi = sample_uniform_angles(rng, 256)
        theta = np.concatenate((theta, [0.0, math.pi]))
        phi = np.concatenate((phi, [0.0, 0.0]))
    else:
        theta, phi = _direction_angles(directions)
    dxyz = angles_to_xyz(theta, phi)
    exyz = angles_to_xyz(q.theta, q.phi)
    ov = np.clip(0.5 * (1.0 + dxyz @ exyz.T), 0.0, 1.0)
    wnorm = q.weights / FOUR_PI
    out: dict[int, float] = {}
    for two_s in spin_subspaces(copies):
        cs = (two_s + 1) * wnorm
        sums = _pow_int(ov, two_s) @ cs
        out[two_s] = float(np.max(np.abs(sums - 1.0)))
    return out


def mixed_min_elements(copies: int, pure_counts) -> int:
    """Element count of the mixed-state POVM assembled per spin block.

    `pure_counts` maps doubled spin 2s (> 0) to the pure-state POVM size
    n(2s); the trivial spin-0 block contributes a single element for even
    N. Raises MissingCount if a required block has no entry.
    """
    total = 0
    for two_s in spin_subspaces(copies):
        if two_s == 0:
            total += 1
            continue
        try:
            count = pure_counts[two_s]
        except (KeyError, IndexError):
            raise MissingCount(
                f"no pure-state count supplied for doubled spin {two_s}"
            ) from None
        total += int(count)
    return total


def legendre_pure_counts(copies: int) -> dict[int, int]:
    """Product-rule sizes (2s+1)*ceil((2s+1)/2) for every required spin."""
    return {
        two_s: (two_s + 1) * ((two_s + 2) // 2)
        for two_s in spin_subspaces(copies)
        if two_s > 0
    }


def mixed_legendre_bound(copies: int) -> float:
    """Closed-form size of the product-rule mixed-state construction.

    N^3/12 + 5N^2/8 + 17N/12 + 1 for even N and
    N^3/12 + N^2/2 + 11N/12 + 1/2 for odd N; evaluated in exact rational
    arithmetic (the value is an integer for every N), then returned as a
    float.
    """
    if copies < 1:
        raise DomainError(f"copies must be >= 1, got {copies}")
    n = copies
    if n % 2 == 0:
        value = Fraction(n**3, 12) + Fraction(5 * n * n, 8) + Fraction(17 * n, 12) + 1
    else:
        value = Fraction(n**3, 12) + Fraction(n * n, 2) + Fraction(11 * n, 12) + Fraction(1, 2)
    return float(value)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def povm_to_json(p: FinitePovm) -> str:
    """Serialize with 17-significant-digit decimals (exact round trip)."""
    elements = ",\n    ".join(
        f'{{"c": {_fmt(c)}, "theta": {_fmt(t)}, "phi": {_fmt(f)}}}'
        for c, t, f in zip(p.c, p.theta, p.phi)
    )
    return (
        "{\n"
        f'  "N": {p.copies},\n'
        f'  "n": {p.n},\n'
        f'  "elements": [\n    {elements}\n  ],\n'
        f'  "score_exact": {_fmt(exact_score(p))}\n'
        "}\n"
    )


def povm_from_json(text: str, label: str = "") -> FinitePovm:
    """Parse the POVM JSON schema; schema violations raise ParseError."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ParseError("POVM JSON must be an object")
    try:
        copies = int(obj["N"])
        elements = obj["elements"]
        c = np.array([float(e["c"]) for e in elements])
        theta = np.array([float(e["theta"]) for e in elements])
        phi = np.array([float(e["phi"]) for e in elements])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad POVM schema: {exc}") from None
    if "n" in obj and int(obj["n"]) != len(elements):
        raise ParseError(f"declared n={obj['n']} but found {len(elements)} elements")
    try:
        return FinitePovm(copies=copies, c=c, theta=theta, phi=phi, label=label)
    except DomainError as exc:
        raise ParseError(str(exc)) from None


def povm_to_csv(p: FinitePovm) -> str:
    """CSV with '.' decimals and '#' metadata lines; columns c, theta, phi."""
    lines = [
        f"# N={p.copies}",
        f"# n={p.n}",
        f"# score_exact={_fmt(exact_score(p))}",
        "c,theta,phi",
    ]
    lines += [
        f"{_fmt(c)},{_fmt(t)},{_fmt(f)}" for c, t, f in zip(p.c, p.theta, p.phi)
    ]
    return "\n".join(lines) + "\n"
