import json
import math

import numpy as np
import pytest

from povmquad.errors import (
    CapExceeded,
    DomainError,
    InsufficientStrength,
    MissingCount,
    NotNormalized,
    ParseError,
    WeightError,
)
from povmquad.povm import (
    DickeVector,
    FinitePovm,
    completeness_test_angles,
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
from povmquad.quadrature import FOUR_PI, SphericalQuadrature, product_rule
from povmquad.sphere import Direction, default_rng, overlap_sq, sample_uniform

from _oracles import tensor_dicke

MIXED_PRODUCT_RULE_COUNTS = [2, 7, 10, 22, 28, 50, 60, 95, 110, 161, 182, 252, 280, 372, 408]


def antipodal_povm():
    return FinitePovm(
        copies=1,
        c=np.array([1.0, 1.0]),
        theta=np.array([0.0, math.pi]),
        phi=np.array([0.0, 0.0]),
        label="antipodal N=1",
    )


def product_povm(copies):
    return povm_from_quadrature(product_rule(copies), copies)


def random_angles(count, seed):
    rng = default_rng(seed)
    theta = np.arccos(rng.uniform(-1, 1, count))
    phi = rng.uniform(0, 2 * math.pi, count)
    return theta, phi


def test_povm_from_quadrature_basic():
    p = product_povm(1)
    assert p.n == 2
    assert abs(p.c.sum() - 2.0) < 1e-12
    p.validate()
    assert p.c == pytest.approx([1.0, 1.0])


def test_povm_from_quadrature_insufficient_strength():
    with pytest.raises(InsufficientStrength) as err:
        povm_from_quadrature(product_rule(2), 3)
    assert err.value.found == 2
    assert err.value.required == 3


def test_povm_rejects_signed_quadratures():
    signed = SphericalQuadrature(
        [0.1, 2.0, 2.5], [0.0, 1.0, 4.0], [8.0, -1.0, FOUR_PI - 7.0]
    )
    with pytest.raises(WeightError):
        povm_from_quadrature(signed, 1)


def test_exact_score_reference_values():
    assert exact_score(antipodal_povm()) == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert exact_score(product_povm(2)) == pytest.approx(3.0 / 4.0, abs=1e-12)
    assert exact_score(product_povm(10)) == pytest.approx(11.0 / 12.0, abs=1e-12)
    assert optimal_score(10) == 11.0 / 12.0


def test_exact_score_sweep_1_to_30():
    for copies in range(1, 31):
        p = product_povm(copies)
        assert abs(exact_score(p) - optimal_score(copies)) < 1e-12


def test_scalar_completeness_antipodal_identity():
    # c1 cos^2(t/2) + c2 sin^2(t/2) = 1 for every direction
    residual = scalar_completeness_residual(antipodal_povm(), random_angles(100, 1))
    assert residual < 1e-14


def test_scalar_completeness_product_rule_seven():
    p = product_povm(7)
    residual = scalar_completeness_residual(p, random_angles(1000, 2))
    assert residual < 1e-10


def test_scalar_completeness_detects_perturbation():
    p = product_povm(3)
    c = p.c.copy()
    c[0] *= 1.01
    bad = FinitePovm(copies=3, c=c, theta=p.theta, phi=p.phi)
    assert scalar_completeness_residual(bad) > 1e-3


def test_default_probe_set_is_deterministic():
    p = product_povm(2)
    a = completeness_test_angles(p)
    b = completeness_test_angles(p)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert a[0].size == 10 * 9 + p.n + 2
    assert scalar_completeness_residual(p) == scalar_completeness_residual(p)


def test_dicke_amplitudes_reference_values():
    v = dicke_amplitudes(2, Direction(0.0, 0.0))
    assert np.allclose(v.amplitudes, [1.0, 0.0, 0.0], atol=1e-15)
    v = dicke_amplitudes(1, Direction(math.pi / 2, 0.0))
    assert np.allclose(v.amplitudes, [1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-15)
    assert abs(v.norm - 1.0) < 1e-12


def test_dicke_overlap_reproduces_fidelity_power():
    rng = default_rng(14)
    for _ in range(100):
        a, b = sample_uniform(rng), sample_uniform(rng)
        va = dicke_amplitudes(5, a).amplitudes
        vb = dicke_amplitudes(5, b).amplitudes
        lhs = abs(np.vdot(va, vb)) ** 2
        assert abs(lhs - overlap_sq(a, b) ** 5) < 1e-12


@pytest.mark.parametrize("copies", range(1, 9))
def test_dicke_against_tensor_product_oracle(copies):
    rng = default_rng(100 + copies)
    for _ in range(50):
        d = sample_uniform(rng)
        mine = dicke_amplitudes(copies, d).amplitudes
        ref = tensor_dicke(copies, d.theta, d.phi)
        assert np.max(np.abs(mine - ref)) < 1e-12


def test_dicke_log_space_branch_consistency():
    # same direction through the direct (N<=50) and log-space (N>50) paths
    d = Direction(1.234, 2.345)
    direct = dicke_amplitudes(50, d).amplitudes
    big = dicke_amplitudes(51, d).amplitudes
    assert abs(dicke_amplitudes(50, d).norm - 1.0) < 1e-12
    assert abs(dicke_amplitudes(51, d).norm - 1.0) < 1e-12
    # poles stay exact in the log-space branch
    north = dicke_amplitudes(60, Direction(0.0, 0.0)).amplitudes
    assert north[0] == 1.0 and np.all(north[1:] == 0.0)
    assert direct.shape == (51,) and big.shape == (52,)


def test_dicke_vector_validation():
    with pytest.raises(DomainError):
        DickeVector(copies=2, amplitudes=np.ones(2))
    with pytest.raises(DomainError):
        dicke_amplitudes(0, Direction(1.0, 1.0))


def test_operator_completeness_antipodal():
    assert operator_completeness_residual(antipodal_povm()) < 1e-15


def test_operator_completeness_product_rule_ten():
    assert operator_completeness_residual(product_povm(10)) < 1e-10


def test_operator_completeness_detects_dropped_element():
    p = product_povm(2)
    keep = slice(1, None)
    bad = FinitePovm(copies=2, c=p.c[keep], theta=p.theta[keep], phi=p.phi[keep])
    dropped = dicke_amplitudes(2, Direction(p.theta[0], p.phi[0])).amplitudes
    expected = p.c[0] * np.max(np.abs(dropped)) ** 2
    assert operator_completeness_residual(bad) >= expected - 1e-12


def test_operator_completeness_cap():
    with pytest.raises(CapExceeded):
        operator_completeness_residual(product_povm(31), cap=30)


def test_scalar_and_operator_residuals_logged_side_by_side():
    # two independent completeness routes; neither is derived from the other
    for copies in (1, 2, 5, 8, 12):
        p = product_povm(copies)
        scalar = scalar_completeness_residual(p, random_angles(500, copies))
        operator = operator_completeness_residual(p)
        assert scalar < 1e-10
        assert operator < 1e-8


def test_schur_moment_product_rule():
    q = product_rule(3)
    assert schur_moment_residual(q, 3) < 1e-12
    assert schur_moment_residual(q, 2) < 1e-12  # strength 3 covers order 2


def test_schur_moment_antipodal_exact_half_identity():
    q = SphericalQuadrature(
        [0.0, math.pi], [0.0, 0.0], [2 * math.pi, 2 * math.pi], label="antipodal"
    )
    assert schur_moment_residual(q, 1) < 1e-15


def test_schur_moment_insufficient_strength():
    with pytest.raises(InsufficientStrength):
        schur_moment_residual(product_rule(2), 3)


def test_spin_subspaces_enumeration():
    assert spin_subspaces(2) == [0, 2]
    assert spin_subspaces(3) == [1, 3]
    assert spin_subspaces(6) == [0, 2, 4, 6]
    with pytest.raises(DomainError):
        spin_subspaces(0)


def test_subspace_completeness_small_cases():
    res2 = subspace_completeness_residuals(product_rule(2), 2)
    assert set(res2) == {0, 2}
    q2 = product_rule(2)
    assert res2[0] == pytest.approx(abs(q2.weight_sum / FOUR_PI - 1.0), abs=1e-15)
    assert res2[0] < 1e-12
    res3 = subspace_completeness_residuals(product_rule(3), 3)
    assert res3[3] < 1e-10  # equals the N=3 scalar completeness check
    res4 = subspace_completeness_residuals(product_rule(4), 4)
    assert res4[2] < 1e-10  # strength 4 covers the spin-1 band limit
    with pytest.raises(InsufficientStrength):
        subspace_completeness_residuals(product_rule(2), 4)


def test_mixed_min_elements_reference_values():
    assert mixed_min_elements(2, legendre_pure_counts(2)) == 7
    assert mixed_min_elements(3, legendre_pure_counts(3)) == 10
    assert mixed_min_elements(5, {1: 2, 3: 6, 5: 14}) == 22  # Lebedev pure counts
    with pytest.raises(MissingCount):
        mixed_min_elements(5, {1: 2, 5: 14})


def test_mixed_legendre_bound_reference_values():
    assert mixed_legendre_bound(2) == 7.0
    assert mixed_legendre_bound(3) == 10.0
    assert mixed_legendre_bound(15) == 408.0
    with pytest.raises(DomainError):
        mixed_legendre_bound(0)


def test_mixed_counts_attain_bound_exactly():
    for copies, expected in zip(range(1, 16), MIXED_PRODUCT_RULE_COUNTS):
        count = mixed_min_elements(copies, legendre_pure_counts(copies))
        assert count == expected
        assert float(count) == mixed_legendre_bound(copies)


def test_povm_json_round_trip_exact():
    p = product_povm(3)
    text = povm_to_json(p)
    obj = json.loads(text)
    assert obj["N"] == 3 and obj["n"] == 8
    assert obj["score_exact"] == exact_score(p)
    back = povm_from_json(text)
    assert back.copies == p.copies
    assert np.array_equal(back.c, p.c)
    assert np.array_equal(back.theta, p.theta)
    assert np.array_equal(back.phi, p.phi)


def test_povm_json_schema_errors():
    with pytest.raises(ParseError):
        povm_from_json("{not json")
    with pytest.raises(ParseError):
        povm_from_json('{"elements": []}')  # missing N
    with pytest.raises(ParseError):
        povm_from_json('{"N": 1, "n": 3, "elements": [{"c": 1, "theta": 0, "phi": 0}]}')
    with pytest.raises(ParseError):
        povm_from_json('[1, 2, 3]')
    with pytest.raises(ParseError):
        povm_from_json('{"N": 0, "elements": [{"c": 1, "theta": 0, "phi": 0}]}')


def test_povm_csv_layout():
    text = povm_to_csv(antipodal_povm())
    lines = text.strip().splitlines()
    assert lines[0] == "# N=1"
    assert lines[3] == "c,theta,phi"
    assert len(lines) == 4 + 2
    fields = lines[5].split(",")
    assert len(fields) == 3
    assert [float(f) for f in fields] == [1.0, math.pi, 0.0]


def test_povm_validate_contracts():
    p = antipodal_povm()
    p.validate()
    bad_weight = FinitePovm(1, np.array([2.0, -0.1]), p.theta, p.phi)
    with pytest.raises(WeightError):
        bad_weight.validate()
    bad_sum = FinitePovm(1, np.array([1.0, 1.1]), p.theta, p.phi)
    with pytest.raises(NotNormalized):
        bad_sum.validate()
