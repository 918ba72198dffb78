"""Finite optimal POVMs for N-copy qubit estimation via sphere quadratures."""

from . import errors
from .harmonics import HarmonicIndex, harmonic_row, weighted_harmonic_sums, ylm
from .orthopoly import (
    GaussLegendreRule,
    assoc_legendre,
    gauss_legendre_rule,
    legendre_eval,
)
from .povm import (
    DickeVector,
    FinitePovm,
    dicke_amplitudes,
    exact_score,
    legendre_pure_counts,
    mixed_legendre_bound,
    mixed_min_elements,
    operator_completeness_residual,
    optimal_score,
    povm_from_json,
    povm_from_quadrature,
    povm_to_csv,
    povm_to_json,
    scalar_completeness_residual,
    schur_moment_residual,
    spin_subspaces,
    subspace_completeness_residuals,
)
from .quadrature import (
    CertificationReport,
    SphericalQuadrature,
    certify,
    detect_strength,
    ingest_pointset,
    lebedev_count,
    product_rule,
    product_rule_count,
    quadrature_to_json,
)
from .simulate import (
    SimulationReport,
    quadrature_averaged_score,
    run_game,
    sample_outcomes,
    score_by_direction,
)
from .sphere import (
    Direction,
    UnitVector,
    antipode,
    default_rng,
    from_cartesian,
    overlap_sq,
    sample_uniform,
    sample_uniform_angles,
    substream,
    to_cartesian,
)

__version__ = "0.1.0"
