"""Quadratures on the unit sphere: construction, ingestion, certification.

A spherical quadrature is a weighted point set {(Omega_k, lambda_k)} meant
to make sum_k lambda_k f(Omega_k) equal integral f dOmega (over the full
4*pi solid angle) for all band-limited f up to some harmonic order. Its
*strength* is the largest L such that every spherical harmonic with
1 <= l <= L sums to zero (constants are covered by sum lambda = 4*pi).

Certification is direct: evaluate max_m |sum_k lambda_k Y_l^m(Omega_k)|
for each l and compare against a tolerance. Construction errors of a
genuine rule sit at the 1e-13 level while the first non-exact order is
typically >= 1e-3, so strength detection is robust.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, DuplicatePoint, ParseError, WeightError, ZeroVector
from .harmonics import weighted_harmonic_sums
from .orthopoly import gauss_legendre_rule
from .sphere import TWO_PI, Direction

FOUR_PI = 2.0 * TWO_PI

DEFAULT_TOL = 1e-10
_DUPLICATE_CHORD = 1e-9
_UNIT_NORM_SLACK = 1e-6


@dataclass(frozen=True)
class SphericalQuadrature:
    """Weighted point set on the sphere (weights in steradians).

    For a rule usable as a POVM all weights must be positive and sum to
    4*pi; positivity is enforced where it matters (certification and the
    POVM layer), so externally published signed rules can still be
    ingested and measured.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    label: str = ""
    weight_scale: float = 1.0  # rescale factor applied on ingest

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if not (theta.shape == phi.shape == weights.shape) or theta.ndim != 1:
            raise DomainError("theta, phi and weights must be 1-D and equal length")
        if theta.size == 0:
            raise DomainError("a quadrature needs at least one point")
        for arr, name in ((theta, "theta"), (phi, "phi"), (weights, "weights")):
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"non-finite {name} entries")
        theta.setflags(write=False)
        phi.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.theta.size

    def __len__(self) -> int:
        return self.theta.size

    def __iter__(self):
        for t, p, w in zip(self.theta, self.phi, self.weights):
            yield Direction(t, p), float(w)

    @property
    def weight_sum(self) -> float:
        return float(self.weights.sum())

    @property
    def all_weights_positive(self) -> bool:
        return bool(np.all(self.weights > 0.0))

    def validate(self, rtol: float = 1e-10):
        """Check the POVM-suitability invariants; raise WeightError if broken."""
        if not self.all_weights_positive:
            raise WeightError(f"{self.label or 'quadrature'}: non-positive weight")
        if abs(self.weight_sum - FOUR_PI) > rtol * FOUR_PI:
            raise WeightError(
                f"{self.label or 'quadrature'}: weights sum to {self.weight_sum!r}, "
                f"not 4*pi within {rtol:g} relative"
            )


@dataclass(frozen=True)
class CertificationReport:
    """Per-order residuals of a quadrature and its detected strength.

    residual_per_l[l - 1] is max over m of |sum_k lambda_k Y_l^m(Omega_k)|
    for 1 <= l <= l_max_tested; strength is the largest L with all orders
    l <= L at or below tol. The l = 0 condition is the weight sum, which
    must equal 4*pi and is recorded separately.
    """

    label: str
    n_points: int
    l_max_tested: int
    tol: float
    residual_per_l: np.ndarray
    strength: int
    weight_sum: float
    all_weights_positive: bool

    def __post_init__(self):
        self.residual_per_l.setflags(write=False)

    def residual(self, l: int) -> float:
        if not 1 <= l <= self.l_max_tested:
            raise DomainError(f"order {l} not tested (1..{self.l_max_tested})")
        return float(self.residual_per_l[l - 1])

    @property
    def weight_sum_residual(self) -> float:
        return abs(self.weight_sum - FOUR_PI) / FOUR_PI

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "n": self.n_points,
            "l_max_tested": self.l_max_tested,
            "tol": self.tol,
            "strength": self.strength,
            "weight_sum": self.weight_sum,
            "all_weights_positive": self.all_weights_positive,
            "residual_per_l": {
                str(l): float(self.residual_per_l[l - 1])
                for l in range(1, self.l_max_tested + 1)
            },
        }


def product_rule(order: int) -> SphericalQuadrature:
    """Separated-variables rule exact for all harmonics up to the order.

    Tensor product of n1 = order + 1 equidistant azimuths (each weighted
    2*pi/n1, exact for e^{i m phi} with |m| <= order) with the
    n2 = ceil((order + 1)/2)-point Gauss-Legendre rule in cos(theta)
    (exact through polynomial degree order). Point count is exactly
    (order + 1) * ceil((order + 1) / 2).
    """
    if order < 0:
        raise DomainError(f"order must be >= 0, got {order}")
    n1 = order + 1
    n2 = (order + 2) // 2
    gl = gauss_legendre_rule(n2)
    theta_polar = np.arccos(gl.nodes)
    az = TWO_PI * np.arange(n1) / n1
    theta = np.repeat(theta_polar, n1)
    phi = np.tile(az, n2)
    weights = np.repeat(gl.weights * (TWO_PI / n1), n1)
    return SphericalQuadrature(theta, phi, weights, label=f"product-rule order {order}")


def product_rule_count(order: int) -> int:
    """Point count of :func:`product_rule` without building it."""
    if order < 0:
        raise DomainError(f"order must be >= 0, got {order}")
    return (order + 1) * ((order + 2) // 2)


def certify(
    q: SphericalQuadrature,
    l_max: int,
    tol: float = DEFAULT_TOL,
    *,
    allow_signed: bool = False,
) -> CertificationReport:
    """Measure harmonic residuals of a quadrature up to order l_max.

    Raises WeightError on any non-positive weight unless `allow_signed`
    is set (signed rules exist in the published Lebedev tables and can be
    measured for exactness, but never define a POVM).
    """
    if l_max < 1:
        raise DomainError(f"l_max must be >= 1, got {l_max}")
    if not tol > 0.0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    if not allow_signed and not q.all_weights_positive:
        raise WeightError(
            f"{q.label or 'quadrature'} has a non-positive weight "
            f"(min {q.weights.min()!r})"
        )
    sums = weighted_harmonic_sums(l_max, q.theta, q.phi, q.weights)
    residual_per_l = np.empty(l_max)
    for l in range(1, l_max + 1):
        residual_per_l[l - 1] = np.max(np.abs(sums[l, : l + 1]))
    failing = np.nonzero(residual_per_l > tol)[0]
    strength = l_max if failing.size == 0 else int(failing[0])
    return CertificationReport(
        label=q.label,
        n_points=q.n,
        l_max_tested=l_max,
        tol=tol,
        residual_per_l=residual_per_l,
        strength=strength,
        weight_sum=q.weight_sum,
        all_weights_positive=q.all_weights_positive,
    )


def detect_strength(
    q: SphericalQuadrature,
    cap: int,
    tol: float = DEFAULT_TOL,
    *,
    allow_signed: bool = False,
) -> int:
    """Largest exact harmonic order found when testing up to `cap`."""
    return certify(q, cap, tol, allow_signed=allow_signed).strength


def _parse_point_lines(stream, n_columns: int):
    rows = []
    line_numbers = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != n_columns:
            raise ParseError(
                f"expected {n_columns} columns, got {len(parts)}", line=lineno
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        line_numbers.append(lineno)
    if not rows:
        raise ParseError("no points found in stream")
    return np.asarray(rows, dtype=float), line_numbers


def _check_duplicates(xyz: np.ndarray, line_numbers, chord_tol: float):
    n = xyz.shape[0]
    block = max(1, min(n, 2_000_000 // max(n, 1)))
    tol2 = chord_tol * chord_tol
    for start in range(0, n, block):
        stop = min(n, start + block)
        diff = xyz[start:stop, None, :] - xyz[None, :, :]
        dist2 = np.einsum("ijk,ijk->ij", diff, diff)
        rows, cols = np.nonzero(dist2 <= tol2)
        for i, j in zip(rows, cols):
            gi = start + i
            if gi < j:
                raise DuplicatePoint(
                    f"points on lines {line_numbers[gi]} and {line_numbers[j]} "
                    f"coincide within {chord_tol:g} rad"
                )


def ingest_pointset(stream, weight_mode: str = "uniform", label: str = "") -> SphericalQuadrature:
    """Read a point-set text stream into a spherical quadrature.

    `stream` is any iterable of text lines ("x y z" or "x y z w";
    `#` starts a comment, blank lines are skipped). `weight_mode`:

    - "uniform": 3 columns; every point gets 4*pi/n.
    - "explicit": 4 columns; weights are rescaled to sum to 4*pi and the
      scale factor recorded on the result.

    Vectors are renormalized (norms more than 1e-6 off unit raise
    ParseError, near-zero norms raise ZeroVector); two points closer than
    1e-9 rad raise DuplicatePoint.
    """
    if weight_mode not in ("uniform", "explicit"):
        raise DomainError(f"unknown weight_mode {weight_mode!r}")
    n_columns = 3 if weight_mode == "uniform" else 4
    rows, line_numbers = _parse_point_lines(stream, n_columns)
    xyz = rows[:, :3]
    norms = np.sqrt(np.einsum("ij,ij->i", xyz, xyz))
    for i, nv in enumerate(norms):
        if nv < 1e-9:
            raise ZeroVector(f"line {line_numbers[i]}: zero vector")
        if abs(nv - 1.0) > _UNIT_NORM_SLACK:
            raise ParseError(
                f"vector norm {nv!r} off unit by more than {_UNIT_NORM_SLACK:g}",
                line=line_numbers[i],
            )
    xyz = xyz / norms[:, None]
    _check_duplicates(xyz, line_numbers, _DUPLICATE_CHORD)
    n = xyz.shape[0]
    if weight_mode == "uniform":
        weights = np.full(n, FOUR_PI / n)
        scale = 1.0
    else:
        raw = rows[:, 3]
        total = raw.sum()
        if not total > 0.0:
            raise WeightError(f"explicit weights sum to {total!r}; cannot rescale to 4*pi")
        scale = FOUR_PI / total
        weights = raw * scale
    z = np.clip(xyz[:, 2], -1.0, 1.0)
    theta = np.arccos(z)
    phi = np.mod(np.arctan2(xyz[:, 1], xyz[:, 0]), TWO_PI)
    phi[(theta == 0.0) | (theta == math.pi)] = 0.0
    return SphericalQuadrature(theta, phi, weights, label=label, weight_scale=scale)


def lebedev_count(order: int) -> int:
    """Point count (order + 1)^2 / 3 + 2 of the high-order Lebedev family.

    Defined only for the published sequence order = 6a + 5.
    """
    if order % 6 != 5:
        raise DomainError(f"Lebedev count formula needs order = 6a + 5, got {order}")
    return (order + 1) ** 2 // 3 + 2


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def quadrature_to_json(q: SphericalQuadrature) -> str:
    """Serialize with 17-significant-digit decimals (exact round trip)."""
    points = ",\n    ".join(
        f'{{"theta": {_fmt(t)}, "phi": {_fmt(p)}, "weight": {_fmt(w)}}}'
        for t, p, w in zip(q.theta, q.phi, q.weights)
    )
    return (
        "{\n"
        f'  "label": {json.dumps(q.label)},\n'
        f'  "n": {q.n},\n'
        f'  "convention": "solid_angle_4pi",\n'
        f'  "points": [\n    {points}\n  ]\n'
        "}\n"
    )
