import io
import json
import math

import numpy as np
import pytest
from scipy.special import sph_harm_y

from povmquad.cli import default_grid_dir
from povmquad.errors import (
    DomainError,
    DuplicatePoint,
    ParseError,
    WeightError,
    ZeroVector,
)
from povmquad.quadrature import (
    FOUR_PI,
    SphericalQuadrature,
    certify,
    detect_strength,
    ingest_pointset,
    lebedev_count,
    product_rule,
    product_rule_count,
    quadrature_to_json,
)

from _oracles import rotate_angles, rotation_matrix, scipy_harmonic_residuals, scipy_strength

PRODUCT_RULE_COUNTS = [2, 6, 8, 15, 18, 28, 32, 45, 50, 66, 72, 91, 98, 120, 128]

OCTAHEDRON_LINES = [
    "# octahedron vertices",
    "",
    " 1 0 0",
    "-1 0 0",
    "0  1 0",
    "0 -1 0",
    "0 0  1",
    "0 0 -1",
]


def octahedron():
    return ingest_pointset(OCTAHEDRON_LINES, "uniform", label="octahedron")


def antipodal():
    return SphericalQuadrature(
        theta=np.array([0.0, math.pi]),
        phi=np.array([0.0, 0.0]),
        weights=np.array([2 * math.pi, 2 * math.pi]),
        label="antipodal pair",
    )


def load_grid(name):
    path = default_grid_dir() / name
    mode = "explicit" if name.startswith("lebedev") else "uniform"
    with open(path) as fh:
        return ingest_pointset(fh, mode, label=name)


def test_product_rule_counts_match_reference_table():
    for order, count in zip(range(1, 16), PRODUCT_RULE_COUNTS):
        q = product_rule(order)
        assert q.n == count == product_rule_count(order)
    assert product_rule(10).n == 66


def test_product_rule_weight_sum_and_positivity():
    for order in (0, 1, 4, 9):
        q = product_rule(order)
        assert q.all_weights_positive
        assert abs(q.weight_sum - FOUR_PI) < 1e-10 * FOUR_PI
        q.validate()


def test_product_rule_certified_strength_sweep():
    for order in list(range(0, 26)) + [50, 90]:
        q = product_rule(order)
        report = certify(q, max(order, 1) + 1)
        assert report.strength >= order
        if order >= 1:
            assert np.all(report.residual_per_l[:order] < 1e-12)


def test_product_rule_order5_observed_strength():
    report = certify(product_rule(5), 7)
    assert report.strength == 5  # observed: l=6 fails in both separated factors
    assert report.residual(6) > 1e-6
    assert np.all(report.residual_per_l[:5] < 1e-12)


def test_certify_agrees_with_scipy_brute_force():
    for q in (octahedron(), product_rule(3), antipodal()):
        report = certify(q, 6)
        ref = scipy_harmonic_residuals(q.theta, q.phi, q.weights, 6)
        assert np.max(np.abs(report.residual_per_l - ref)) < 1e-10
        assert report.strength == scipy_strength(q.theta, q.phi, q.weights, 6)


def test_octahedron_strength_three_fails_at_four():
    report = certify(octahedron(), 5)
    assert report.strength == 3
    assert report.residual(4) > 1e-3
    assert report.residual(5) < 1e-12  # odd order cancels by parity


def test_antipodal_and_single_point_strengths():
    assert detect_strength(antipodal(), 4) == 1
    single = SphericalQuadrature([0.7], [0.1], [FOUR_PI], label="single")
    assert detect_strength(single, 3) == 0


def test_icosahedron_design_strength_five():
    q = load_grid("design_0012.txt")
    assert q.n == 12
    assert detect_strength(q, 7) == 5


def test_rotation_leaves_certification_unchanged():
    rot = rotation_matrix((0.3, -1.0, 0.7), 0.9)
    q = product_rule(7)
    theta_r, phi_r = rotate_angles(q.theta, q.phi, rot)
    q_rot = SphericalQuadrature(theta_r, phi_r, q.weights, label="rotated")
    a = certify(q, 7)
    b = certify(q_rot, 7)
    assert a.strength == b.strength == 7
    assert np.max(np.abs(a.residual_per_l - b.residual_per_l)) < 1e-12
    # a non-exact rule keeps its strength under rotation as well
    oct_r = rotate_angles(*(lambda o: (o.theta, o.phi))(octahedron()), rot)
    q2 = SphericalQuadrature(oct_r[0], oct_r[1], octahedron().weights)
    assert detect_strength(q2, 5) == 3


def test_certify_guards():
    q = product_rule(2)
    with pytest.raises(DomainError):
        certify(q, 0)
    with pytest.raises(DomainError):
        certify(q, 3, tol=0.0)
    signed = SphericalQuadrature(
        [0.1, 2.0, 2.5], [0.0, 1.0, 4.0], [8.0, -1.0, FOUR_PI - 7.0]
    )
    with pytest.raises(WeightError):
        certify(signed, 2)
    report = certify(signed, 2, allow_signed=True)
    assert not report.all_weights_positive
    with pytest.raises(WeightError):
        signed.validate()


def test_certification_report_accessors():
    report = certify(product_rule(3), 4)
    assert report.l_max_tested == 4
    assert report.residual(1) == report.residual_per_l[0]
    with pytest.raises(DomainError):
        report.residual(5)
    d = report.to_dict()
    assert d["strength"] == report.strength
    assert set(d["residual_per_l"]) == {"1", "2", "3", "4"}
    assert report.weight_sum_residual < 1e-12


def test_ingest_uniform_normalization_contract():
    q = octahedron()
    assert q.n == 6
    assert abs(q.weight_sum - FOUR_PI) < 1e-12
    assert np.allclose(q.weights, FOUR_PI / 6.0)


def test_ingest_explicit_weights_rescaled():
    lines = ["0 0 1 0.5", "0 0 -1 1.5"]
    q = ingest_pointset(lines, "explicit")
    assert abs(q.weight_sum - FOUR_PI) < 1e-12
    assert q.weight_scale == pytest.approx(FOUR_PI / 2.0)
    assert np.allclose(q.weights, [FOUR_PI / 4, 3 * FOUR_PI / 4])


def test_ingest_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as err:
        ingest_pointset(["0 0 1", "a b c"], "uniform")
    assert err.value.line == 2
    with pytest.raises(ParseError) as err:
        ingest_pointset(["0 0 1", "1 0"], "uniform")
    assert err.value.line == 2
    with pytest.raises(ParseError) as err:
        ingest_pointset(["0 0 1 1"], "uniform")  # stray weight column
    assert err.value.line == 1
    with pytest.raises(ParseError):
        ingest_pointset(["# only comments"], "uniform")


def test_ingest_zero_vector_and_norm_guard():
    with pytest.raises(ZeroVector):
        ingest_pointset(["0 0 1", "0 0 0"], "uniform")
    with pytest.raises(ParseError) as err:
        ingest_pointset(["0 0 1.001"], "uniform")
    assert err.value.line == 1
    # within 1e-6 is renormalized silently
    q = ingest_pointset(["0 0 1.0000005"], "uniform")
    assert q.theta[0] == 0.0


def test_ingest_duplicate_points():
    with pytest.raises(DuplicatePoint):
        ingest_pointset(["1 0 0", "0 1 0", "1 1e-12 0"], "uniform")


def test_ingest_rejects_unknown_mode_and_bad_weight_sum():
    with pytest.raises(DomainError):
        ingest_pointset(["0 0 1"], "guess")
    with pytest.raises(WeightError):
        ingest_pointset(["0 0 1 1.0", "0 0 -1 -1.0"], "explicit")


def test_lebedev_two_weight_solve_oracle():
    # Solve the octahedral 14-point rule from exactness alone: weights w1
    # (6 axis points) and w3 (8 cube points) from the l=0 and (l=4, m=0)
    # conditions, then compare against the shipped grid.
    y40 = lambda x: float(sph_harm_y(4, 0, math.acos(x), 0.0).real)  # noqa: E731
    s_oct = 2 * y40(1.0) + 4 * y40(0.0)
    s_cube = 8 * y40(1.0 / math.sqrt(3.0))
    a = np.array([[6.0, 8.0], [s_oct, s_cube]])
    w1, w3 = np.linalg.solve(a, np.array([FOUR_PI, 0.0]))
    assert w1 == pytest.approx(FOUR_PI / 15.0, rel=1e-12)
    assert w3 == pytest.approx(FOUR_PI * 3.0 / 40.0, rel=1e-12)
    q = load_grid("lebedev_0014.txt")
    assert q.n == 14
    assert detect_strength(q, 7) == 5
    got = sorted(set(np.round(q.weights, 14)))
    assert got == pytest.approx([w1, w3], rel=1e-10)


@pytest.mark.parametrize(
    "name,order,count",
    [
        ("lebedev_0006.txt", 3, 6),
        ("lebedev_0014.txt", 5, 14),
        ("lebedev_0026.txt", 7, 26),
        ("lebedev_0038.txt", 9, 38),
        ("lebedev_0050.txt", 11, 50),
        ("lebedev_0074.txt", 13, 74),
        ("lebedev_0086.txt", 15, 86),
    ],
)
def test_shipped_lebedev_grids_certify_at_published_order(name, order, count):
    q = load_grid(name)
    assert q.n == count
    report = certify(q, order + 1, allow_signed=True)
    assert report.strength == order
    if name == "lebedev_0074.txt":
        # the published 74-point rule carries one negative weight class and
        # is therefore measurable but not POVM-suitable
        assert not q.all_weights_positive
        with pytest.raises(WeightError):
            certify(q, order)
    else:
        assert q.all_weights_positive
        assert certify(q, order).strength == order


@pytest.mark.parametrize(
    "name,strength,count",
    [
        ("design_0002.txt", 1, 2),
        ("design_0004.txt", 2, 4),
        ("design_0006.txt", 3, 6),
        ("design_0012.txt", 5, 12),
    ],
)
def test_shipped_designs_certify(name, strength, count):
    q = load_grid(name)
    assert q.n == count
    assert np.allclose(q.weights, FOUR_PI / count)
    assert detect_strength(q, strength + 1) == strength


def test_lebedev_count_formula():
    assert lebedev_count(5) == 14
    assert lebedev_count(11) == 50
    assert lebedev_count(131) == 5810
    with pytest.raises(DomainError):
        lebedev_count(7)
    with pytest.raises(DomainError):
        lebedev_count(6)


def test_quadrature_json_export_round_trip():
    q = product_rule(2)
    obj = json.loads(quadrature_to_json(q))
    assert obj["convention"] == "solid_angle_4pi"
    assert obj["n"] == q.n == len(obj["points"])
    assert obj["label"] == q.label
    for point, t, p, w in zip(obj["points"], q.theta, q.phi, q.weights):
        assert point["theta"] == t and point["phi"] == p and point["weight"] == w


def test_quadrature_construction_guards():
    with pytest.raises(DomainError):
        product_rule(-1)
    with pytest.raises(DomainError):
        SphericalQuadrature([0.1, 0.2], [0.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        SphericalQuadrature([], [], [])
    with pytest.raises(DomainError):
        SphericalQuadrature([0.1], [0.0], [math.inf])


def test_quadrature_iteration_yields_directions():
    q = product_rule(1)
    pairs = list(q)
    assert len(pairs) == len(q) == 2
    direction, weight = pairs[0]
    assert weight == pytest.approx(2 * math.pi)
    assert direction.theta == pytest.approx(math.pi / 2)


def test_ingest_accepts_file_like_streams():
    text = "\n".join(OCTAHEDRON_LINES)
    q = ingest_pointset(io.StringIO(text), "uniform")
    assert q.n == 6
