"""Certification engine tests: Newton refinement, inflation, the
contraction operator, escalation, reality and in-box refinement.

Frozen floats are exact outputs of the deterministic 53-bit path;
soundness claims (boxes containing true zeros) are checked with exact
rational arithmetic.
"""

import random
import warnings
from fractions import Fraction

import pytest

from krawcert import (
    Candidate,
    CertificateResult,
    ComplexInterval,
    IntervalBox,
    IntervalError,
    RealInterval,
    SingularMatrixError,
    approximate_inverse,
    certify_candidate,
    check_reality,
    compile,
    inflate,
    krawczyk_operator,
    ladder,
    newton_refine,
    parse_system,
    refine_in_box,
)

L53 = ladder(53)[0]


def _compile(src):
    return compile(parse_system(src))


# ---------------------------------------------------------------------------
# Newton refinement


def test_newton_first_steps_are_exact():
    c = _compile("variables: x\nx^2 - 2\n")
    r1 = newton_refine(c, [1.5 + 0j], max_iter=1)
    assert r1.point[0] == 1.4166666666666667 + 0j
    assert r1.iterations == 1 and not r1.converged
    r2 = newton_refine(c, [1.5 + 0j], max_iter=2)
    assert r2.point[0] == 1.4142156862745099 + 0j


def test_newton_converges_quadratically():
    c = _compile("variables: x\nx^2 - 2\n")
    r = newton_refine(c, [1.5 + 0j])
    assert r.converged and not r.singular
    assert r.iterations <= 6
    assert abs(Fraction(r.point[0].real) ** 2 - 2) < Fraction(1, 2**48)


def test_newton_fixed_point_stops_immediately():
    c = _compile("variables: x\nx^2 - 1\n")
    r = newton_refine(c, [1.0 + 0j])
    assert r.converged and r.iterations == 1
    assert r.point[0] == 1.0 + 0j


def test_newton_singular_jacobian_flag():
    c = _compile("variables: x\nx^2\n")
    r = newton_refine(c, [0j])
    assert r.singular and not r.converged


def test_newton_multivariate():
    c = _compile("variables: x, y\nx^2 + y^2 - 1\nx - y\n")
    r = newton_refine(c, [0.7 + 0j, 0.7 + 0j])
    assert r.converged
    s = Fraction(r.point[0].real)
    assert abs(2 * s * s - 1) < Fraction(1, 2**48)
    assert r.point[0] == r.point[1]


# ---------------------------------------------------------------------------
# inverse conditioner


def test_approximate_inverse_diagonal():
    y = approximate_inverse([[2 + 0j]])
    assert y[0][0] == 0.5 + 0j


def test_approximate_inverse_rejects_singular():
    with pytest.raises(SingularMatrixError):
        approximate_inverse([[0j]])


def test_approximate_inverse_rejects_nonsquare():
    with pytest.raises(IntervalError):
        approximate_inverse([[1 + 0j, 2 + 0j]])


# ---------------------------------------------------------------------------
# candidate-box inflation


def test_inflate_residual_term_dominates():
    box = inflate([1.0 + 0j], [1e-15], L53)
    e = box.entries[0]
    assert 1.0 - e.re.lo == 9.741984996480824e-12
    assert e.re.hi - 1.0 == 9.741984996480824e-12
    # radius is the residual scaled by the inflation factor 2^(53/4)
    assert Fraction(1.0) - e.re.lo_fraction() >= Fraction(10**-15) * 2 ** Fraction(53, 4)


def test_inflate_floor_term_at_one():
    e = inflate([1.0 + 0j], [0.0], L53).entries[0]
    assert 1.0 - e.re.lo == 8.881784197001252e-16  # 8u = 4u*(1+|x|)


def test_inflate_floor_term_at_origin():
    e = inflate([0j], [0.0], L53).entries[0]
    assert e.re.hi == 4.440892098500626e-16  # 4u
    assert e.im.hi == e.re.hi and e.re.lo == -e.re.hi


def test_inflate_radius_grows_with_magnitude():
    r1 = inflate([1.0 + 0j], [0.0], L53).entries[0].re.hi - 1.0
    r9 = inflate([9.0 + 0j], [0.0], L53).entries[0].re.hi - 9.0
    assert r9 > r1


# ---------------------------------------------------------------------------
# contraction operator


def test_operator_worked_example():
    c = _compile("variables: x\nx^2 - 1\n")
    box = IntervalBox([ComplexInterval(RealInterval(0.9, 1.1), RealInterval(-0.1, 0.1))])
    k = krawczyk_operator(c, box, [1.0 + 0j], [[0.5 + 0j]])
    e = k.entries[0]
    assert e.re.lo == 0.9799999999999999  # 0.98 with one outward step
    assert e.re.hi == 1.02
    assert e.im.lo == -0.02000000000000002
    assert e.im.hi == 0.02000000000000002
    assert k.subset_interior(box)


def test_operator_with_zero_conditioner_returns_input_box():
    # Y = 0 collapses the update: K = x + 1*(I - x) = I, bit for bit
    c = _compile("variables: x\nx^2 - 1\n")
    box = IntervalBox([ComplexInterval(RealInterval(0.5, 1.5), RealInterval(-0.25, 0.25))])
    k = krawczyk_operator(c, box, [1.0 + 0j], [[0j]])
    e, b = k.entries[0], box.entries[0]
    assert (e.re.lo, e.re.hi, e.im.lo, e.im.hi) == (b.re.lo, b.re.hi, b.im.lo, b.im.hi)


def test_operator_fails_on_oversized_box():
    # widening the box defeats the contraction: K is no longer inside
    c = _compile("variables: x\nx^2 - 1\n")
    wide = IntervalBox([ComplexInterval(RealInterval(-2, 4), RealInterval(-3, 3))])
    k = krawczyk_operator(c, wide, [1.0 + 0j], [[0.5 + 0j]])
    assert not k.subset_interior(wide)


# ---------------------------------------------------------------------------
# end-to-end certification


def test_certify_simple_root():
    c = _compile("variables: x\nx^2 - 1\n")
    res = certify_candidate(c, Candidate((1.0000003 + 0j,)))
    assert res.certified
    assert res.status == "certified"
    assert res.precision_used.significand_bits == 53
    assert res.reality == "real" and res.positive == "yes"
    assert res.contraction_norm == 1.2560739669470203e-15
    e = res.box.entries[0]
    assert e.re.lo == 0.9999999999999991 and e.re.hi == 1.0000000000000009
    assert res.box.contains_point([1.0 + 0j])


def test_certify_accepts_plain_sequence():
    c = _compile("variables: x\nx^2 - 1\n")
    res = certify_candidate(c, [-1.0000003 + 0j])
    assert res.certified
    assert res.box.contains_point([-1.0 + 0j])
    assert res.positive == "no"


def test_certify_rejects_wrong_length():
    c = _compile("variables: x, y\nx\ny\n")
    with pytest.raises(IntervalError):
        certify_candidate(c, [1.0 + 0j])


def test_certify_double_root_reports_singular():
    c = _compile("variables: x\nx^2\n")
    res = certify_candidate(c, Candidate((0j,)))
    assert not res.certified
    assert res.status == "not_certified"
    assert res.reason == "singular Jacobian"
    assert res.precision_used.significand_bits == 512


def test_certify_keeps_candidate_index():
    c = _compile("variables: x\nx^2 - 1\n")
    res = certify_candidate(c, Candidate((1.0 + 0j,), index=7))
    assert res.index == 7


def test_certified_box_contains_true_root_exactly():
    # sqrt(2) is irrational; verify containment through the squared bounds
    c = _compile("variables: x\nx^2 - 2\n")
    res = certify_candidate(c, Candidate((1.41421 + 0j,)))
    assert res.certified
    e = res.box.entries[0]
    assert e.re.lo_fraction() > 0
    assert e.re.lo_fraction() ** 2 < 2 < e.re.hi_fraction() ** 2
    assert e.im.lo_fraction() < 0 < e.im.hi_fraction()


def test_certification_is_deterministic():
    c = _compile("variables: x, y\nx^2 + y^2 - 4\nx*y - 1\n")
    a = certify_candidate(c, Candidate((1.93 + 0j, 0.52 + 0j)))
    b = certify_candidate(c, Candidate((1.93 + 0j, 0.52 + 0j)))
    ea, eb = a.box.entries, b.box.entries
    for u, v in zip(ea, eb):
        assert (u.re.lo, u.re.hi, u.im.lo, u.im.hi) == (v.re.lo, v.re.hi, v.im.lo, v.im.hi)
    assert a.contraction_norm == b.contraction_norm


# ---------------------------------------------------------------------------
# precision escalation


def test_escalation_certifies_clustered_roots():
    # two real roots at 1e-8 +/- 1e-15: hopeless at 53 bits, clean at 128
    src = "variables: x\nx^2 - 2*x/100000000 + 1/10000000000000000 - 1/1000000000000000000000000000000\n"
    c = _compile(src)
    lo_only = certify_candidate(c, Candidate((1.0000001e-08 + 0j,)), ladder_levels=ladder(53))
    assert not lo_only.certified
    assert lo_only.reason == "contraction test failed"

    results = []
    for guess in (1.0000001e-08, 0.9999999e-08):
        res = certify_candidate(c, Candidate((guess + 0j,)), ladder_levels=ladder(256))
        assert res.certified
        assert res.precision_used.significand_bits == 128
        results.append(res)
    hi, lo = results
    # disjoint boxes, each containing its exact root 1e-8 +/- 1e-15
    eps, delta = Fraction(1, 10**8), Fraction(1, 10**15)
    assert hi.box.entries[0].re.lo_fraction() > lo.box.entries[0].re.hi_fraction()
    assert hi.box.entries[0].re.lo_fraction() < eps + delta < hi.box.entries[0].re.hi_fraction()
    assert lo.box.entries[0].re.lo_fraction() < eps - delta < lo.box.entries[0].re.hi_fraction()


def test_escalation_reports_last_reason_on_exhaustion():
    c = _compile("variables: x\nx^2\n")
    res = certify_candidate(c, Candidate((1e-9 + 0j,)), ladder_levels=ladder(128))
    assert not res.certified
    assert res.precision_used.significand_bits == 128
    assert res.reason in ("singular Jacobian", "contraction test failed")


# ---------------------------------------------------------------------------
# reality and positivity


def test_non_real_root_is_detected():
    c = _compile("variables: x\nx^2 + 1\n")
    res = certify_candidate(c, Candidate((1j,)))
    assert res.certified
    assert res.reality == "not_real"
    assert res.positive == "no"
    e = res.box.entries[0]
    assert e.im.lo == 0.9999999999999991 and e.im.hi == 1.0000000000000009


def test_real_root_with_negative_coordinate_is_not_positive():
    c = _compile("variables: x, y\nx^2 - 1\ny + 2\n")
    res = certify_candidate(c, Candidate((1.0 + 0j, -2.0 + 0j)))
    assert res.certified
    assert res.reality == "real"
    assert res.positive == "no"


def test_complex_coefficients_leave_reality_unknown():
    c = _compile("variables: x\nx^2 - 2*i\n")
    res = certify_candidate(c, Candidate((1.0 + 1.0j,)))
    assert res.certified
    assert res.box.contains_point([1 + 1j])
    assert res.reality == "unknown"
    assert res.positive == "not_applicable"


def test_reality_is_conservative_on_random_complex_quadratics():
    rng = random.Random(1234)
    for _ in range(25):
        a = rng.randint(1, 9)
        b = rng.randint(1, 9)
        c = _compile(f"variables: x\nx^2 - {a} - {b}*i\n")
        root = complex(a, b) ** 0.5
        res = certify_candidate(c, Candidate((root,)))
        assert res.certified
        assert res.reality == "unknown"


def test_check_reality_wide_conjugate_symmetric_box_stays_unknown():
    c = _compile("variables: x\nx^2 - 1\n")
    res = certify_candidate(c, Candidate((1.0 + 0j,)))
    forced = CertificateResult(
        status=res.status,
        precision_used=res.precision_used,
        box=res.box,
        refined_point=res.refined_point,
        conditioner=res.conditioner,
        contraction_norm=res.contraction_norm,
        krawczyk_image=IntervalBox([
            ComplexInterval(RealInterval(0.99, 1.01), RealInterval(-0.002, 0.001)),
        ]),
        native=res.native,
    )
    out = check_reality(c, forced)
    # conj(K) is not inside K's box and Im does not exclude 0
    assert out.reality == "unknown"
    assert out.positive == "no"


# ---------------------------------------------------------------------------
# refinement inside a certified box


def _wide_certificate(c):
    # hand-built certificate around the root 1 of x^2-1: the operator
    # genuinely contracts this box, checked in test_operator_wide_box
    box = IntervalBox([ComplexInterval(RealInterval(0.7, 1.3), RealInterval(-0.2, 0.2))])
    return CertificateResult(
        status="certified",
        precision_used=L53,
        box=box,
        refined_point=(1.0 + 0j,),
        conditioner=((0.5 + 0j,),),
        contraction_norm=0.51,
        krawczyk_image=box,
        reality="real",
        positive="yes",
        native=((1.0 + 0j,), ((0.5 + 0j,),)),
    )


def test_operator_wide_box():
    c = _compile("variables: x\nx^2 - 1\n")
    box = IntervalBox([ComplexInterval(RealInterval(0.7, 1.3), RealInterval(-0.2, 0.2))])
    k = krawczyk_operator(c, box, [1.0 + 0j], [[0.5 + 0j]])
    assert k.subset_interior(box)


def test_refine_in_box_iterates():
    c = _compile("variables: x\nx^2 - 1\n")
    cert = _wide_certificate(c)
    x1 = refine_in_box(c, cert, [0.9 + 0j], 1)
    assert x1[0] == 0.995 + 0j
    x2 = refine_in_box(c, cert, [0.9 + 0j], 2)
    assert x2[0] == 0.9999875 + 0j
    x0 = refine_in_box(c, cert, [0.9 + 0j], 0)
    assert x0[0] == 0.9 + 0j
    x_many = refine_in_box(c, cert, [0.9 + 0j], 40)
    assert abs(x_many[0] - 1.0) < 1e-15


def test_refine_in_box_requires_certified_result():
    c = _compile("variables: x\nx^2\n")
    res = certify_candidate(c, Candidate((0j,)))
    with pytest.raises(IntervalError):
        refine_in_box(c, res, [0j], 3)


def test_refine_in_box_requires_interior_start():
    c = _compile("variables: x\nx^2 - 1\n")
    cert = _wide_certificate(c)
    with pytest.raises(IntervalError):
        refine_in_box(c, cert, [2.0 + 0j], 3)


def test_refine_in_box_warns_when_iterate_escapes():
    c = _compile("variables: x\nx^2 - 1\n")
    bad = CertificateResult(
        status="certified",
        precision_used=L53,
        box=_wide_certificate(c).box,
        refined_point=(1.0 + 0j,),
        conditioner=((-0.5 + 0j,),),
        contraction_norm=0.51,
        krawczyk_image=_wide_certificate(c).box,
        reality="real",
        positive="yes",
        native=((1.0 + 0j,), ((-0.5 + 0j,),)),  # wrong-sign conditioner diverges
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = refine_in_box(c, bad, [0.9 + 0j], 10)
    assert any("left the certified box" in str(w.message) for w in caught)
    assert bad.box.contains_point(out)  # last in-box iterate is returned


def test_refine_in_box_mp_certificate():
    src = "variables: x\nx^2 - 2*x/100000000 + 1/10000000000000000 - 1/1000000000000000000000000000000\n"
    c = _compile(src)
    res = certify_candidate(c, Candidate((1.0000001e-08 + 0j,)), ladder_levels=ladder(256))
    assert res.certified and res.precision_used.significand_bits == 128
    mid = res.box.midpoint_fraction()
    out = refine_in_box(c, res, [(mid[0][0], mid[0][1])], 3)
    assert res.box.contains_point(out)
