import pytest
from mpmath import mp, mpc, mpf

from opuctau.numerics import pochhammer
from opuctau.oracle import (
    CircleQuadrature,
    MomentSource,
    build_table_oracle,
    caratheodory,
    coefficient_functions,
    det_cofactor,
    opuc_eval,
    reflection_from_dets,
    sample_points,
    toeplitz_det,
    verify_identity_suite,
    weight_V,
    weight_W,
    _barphi_at,
    _phi_at,
)
from opuctau.precision import PrecisionContext
from opuctau.weights import ModelKind, WeightParams, equivalent_params


@pytest.fixture(scope="module")
def generic():
    with mp.workprec(400):
        p = WeightParams.from_exponents(
            mpf(3) / 10, mpf(2) / 10, mpf(1) / 10, mpf(2) / 5, mp.expjpi(mpf(1) / 3)
        )
    ctx = PrecisionContext(bits=192, tol=1e-35)
    src = MomentSource.from_params(p, ctx)
    with mp.workprec(320):
        table = build_table_oracle(src, 10, ctx)
    return p, ctx, src, table


def test_empty_and_single_determinant(generic):
    p, ctx, src, _ = generic
    assert toeplitz_det(src, 0, 0, ctx) == 1
    assert abs(toeplitz_det(src, 0, 1, ctx) - src(0)) < mpf("1e-50")


def test_lu_matches_cofactor_expansion(generic):
    p, ctx, src, _ = generic
    for eps in (-1, 0, 1):
        for n in range(2, 6):
            a = toeplitz_det(src, eps, n, ctx)
            b = det_cofactor(src, eps, n)
            assert abs(a - b) < mpf("1e-40") * max(1, abs(a))


def test_cue_gap_three_by_three_determinant():
    # independent cofactor evaluation from the closed moments, written out
    ctx = PrecisionContext(bits=192, tol=1e-35)
    m = ModelKind.cue_gap(mp.pi / 2, 1)
    src = MomentSource.from_model(m, ctx)
    w = {n: src(n) for n in range(-2, 3)}
    byhand = (
        w[0] * (w[0] * w[0] - w[-1] * w[1])
        - w[1] * (w[-1] * w[0] - w[-2] * w[1])
        + w[2] * (w[-1] * w[-1] - w[-2] * w[0])
    )
    assert abs(toeplitz_det(src, 0, 3, ctx) - byhand) < mpf("1e-45")


def test_reflection_seed_values(generic):
    p, ctx, src, _ = generic
    r0, rb0 = reflection_from_dets(src, 0, ctx)
    assert r0 == 1 and rb0 == 1


def test_table_invariants(generic):
    p, ctx, src, table = generic
    for n in range(1, 10):
        resid = table.I0[n + 1] * table.I0[n - 1] / table.I0[n] ** 2 - (
            1 - table.r[n] * table.rbar[n]
        )
        assert abs(resid) < mpf("1e-33")
        resid = (
            table.kappa[n] ** 2
            - table.kappa[n - 1] ** 2
            - table.kappa[n] ** 2 * table.r[n] * table.rbar[n]
        )
        assert abs(resid) < mpf("1e-31")


def test_second_order_and_subleading_constraints(generic):
    p, ctx, src, table = generic
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    for n in range(1, 10):
        resid = (
            (n + 1 + mu + omb) * t * table.r[n + 1] * table.rbar[n]
            - (n - 1 + mu + omb) * t * table.r[n] * table.rbar[n - 1]
            - (n + 1 + mu + om) * table.rbar[n + 1] * table.r[n]
            + (n - 1 + mu + om) * table.rbar[n] * table.r[n - 1]
        )
        assert abs(resid) < mpf("1e-32")
        resid = (
            (n + mu + omb) * t * table.l[n]
            - (n + mu + om) * table.lbar[n]
            - n * (mu * (t - 1) + omb - om * t) * table.kappa[n]
        )
        assert abs(resid) < mpf("1e-31")


def test_positivity_regime_reality():
    ctx = PrecisionContext(bits=160, tol=1e-28)
    m = ModelKind.cue_gap(mpf(2) / 3 * mp.pi, mpf(1) / 2)
    src = MomentSource.from_model(m, ctx)
    table = build_table_oracle(src, 6, ctx)
    for n in range(7):
        assert abs(table.I0[n].imag) < mpf("1e-35")
        assert table.I0[n].real > 0
        assert abs(table.rbar[n] - mp.conj(table.r[n])) < mpf("1e-35")


def test_t_zero_pochhammer_closed_forms():
    ctx = PrecisionContext(bits=192, tol=1e-35)
    p = WeightParams.from_exponents(mpf(3) / 10, mpf(2) / 10, mpf(1) / 10, 0, 0)
    src = MomentSource.from_params(p, ctx)
    table = build_table_oracle(src, 6, ctx)
    for n in range(1, 6):
        r_ref = (-1) ** n * pochhammer(p.mu + p.omega, n, ctx) / pochhammer(
            1 - p.mu + p.omegabar, n, ctx
        )
        rb_ref = (-1) ** n * pochhammer(-p.mu + p.omegabar, n, ctx) / pochhammer(
            1 + p.mu + p.omega, n, ctx
        )
        assert abs(table.r[n] - r_ref) < mpf("1e-35")
        assert abs(table.rbar[n] - rb_ref) < mpf("1e-35")
        l_ref = -(p.mu + p.omega) * n / (n - p.mu + p.omegabar) * table.kappa[n]
        assert abs(table.l[n] - l_ref) < mpf("1e-33")


def test_t_one_pochhammer_closed_forms():
    ctx = PrecisionContext(bits=192, tol=1e-35)
    p = WeightParams.from_exponents(mpf(3) / 10, mpf(2) / 10, mpf(1) / 10, 0, 1)
    src = MomentSource.from_params(p, ctx)
    table = build_table_oracle(src, 5, ctx)
    for n in range(1, 5):
        r_ref = (-1) ** n * pochhammer(p.mu + p.omega, n, ctx) / pochhammer(
            1 + p.mu + p.omegabar, n, ctx
        )
        assert abs(table.r[n] - r_ref) < mpf("1e-35")


def test_ising_critical_closed_forms():
    ctx = PrecisionContext(bits=160, tol=1e-28)
    src = MomentSource.from_model(ModelKind.ising_low(mpf(1)), ctx)
    table = build_table_oracle(src, 6, ctx)
    for n in range(1, 6):
        assert abs(table.r[n] - mpf((-1) ** (n - 1)) / ((2 * n + 1) * (2 * n - 1))) < mpf("1e-30")
        assert abs(table.rbar[n] - (-1) ** n) < mpf("1e-30")
        assert abs(table.l[n] - mpf(n) / (2 * n + 1) * table.kappa[n]) < mpf("1e-28")


def test_flat_weight_table():
    ctx = PrecisionContext(bits=128, tol=1e-20)
    p = WeightParams.from_exponents(0, 0, 0, 0, mpf(1) / 2)
    src = MomentSource.from_params(p, ctx)
    table = build_table_oracle(src, 5, ctx)
    for n in range(1, 5):
        assert abs(table.r[n]) < mpf("1e-30")
        assert abs(table.kappa[n] - 1) < mpf("1e-30")
        assert abs(table.l[n]) < mpf("1e-30")
        assert abs(table.T[n] - 1) < mpf("1e-30")


def test_caratheodory_values(generic):
    p, ctx, src, _ = generic
    assert abs(caratheodory(src, 0, ctx) - src(0)) < mpf("1e-40")
    flat = MomentSource.from_params(WeightParams.from_exponents(0, 0, 0, 0, mpf(1) / 2), ctx)
    assert abs(caratheodory(flat, mpc(0.2, 0.1), ctx) - 1) < mpf("1e-40")
    # against independent quadrature of the kernel
    z = mpc("0.3", "0.2")
    with mp.workprec(320):
        q = mp.quad(
            lambda th: (mp.expj(th) + z)
            / (mp.expj(th) - z)
            * __import__("opuctau.weights", fromlist=["weight_eval"]).weight_eval(p, mp.expj(th)),
            [-mp.pi, mp.pi - p.phi, mp.pi],
        ) / (2 * mp.pi)
    assert abs(caratheodory(src, z, ctx) - q) < mpf("1e-40")


def test_caratheodory_slow_convergence_guard(generic):
    from opuctau.errors import SlowConvergence

    p, ctx, src, _ = generic
    with pytest.raises(SlowConvergence):
        caratheodory(src, mpc("0.9995"), ctx)


def test_polynomial_coefficients_match_table(generic):
    # leading, subleading and sub-subleading coefficients of the polynomials
    # built from the coupled recurrence agree with kappa, l, m from the sums
    p, ctx, src, table = generic
    from opuctau.oracle import _poly_coeffs

    with mp.workprec(320):
        c, cs = _poly_coeffs(table, 6)
        for n in range(2, 6):
            assert abs(c[n][-1] - table.kappa[n]) < mpf("1e-35")
            assert abs(c[n][-2] - table.l[n]) < mpf("1e-33")
            assert abs(c[n][-3] - table.m[n]) < mpf("1e-33")
            assert abs(c[n][0] - table.kappa[n] * table.r[n]) < mpf("1e-33")


def test_opuc_eval_casoratians(generic):
    p, ctx, src, table = generic
    for z in (mpc("0.4", "0.2"), mpc("1.1", "0.9")):
        ev = opuc_eval(p, table, z, ctx, src=src)
        for n in range(1, 9):
            scale = max(1, abs(z) ** n)
            cas_c = ev.phi[n] * ev.epsstar[n] + ev.eps[n] * ev.phistar[n] - 2 * z**n
            assert abs(cas_c) / scale < mpf("1e-40")
            cas_a = (
                ev.phi[n + 1] * ev.eps[n]
                - ev.eps[n + 1] * ev.phi[n]
                - 2 * table.kappa[n + 1] * table.r[n + 1] / table.kappa[n] * z**n
            )
            assert abs(cas_a) / scale < mpf("1e-40")
            cas_b = (
                ev.phistar[n + 1] * ev.epsstar[n]
                - ev.epsstar[n + 1] * ev.phistar[n]
                - 2 * table.kappa[n + 1] * table.rbar[n + 1] / table.kappa[n] * z ** (n + 1)
            )
            assert abs(cas_b) / scale < mpf("1e-40")


def test_opuc_eval_series_agrees_with_quadrature(generic):
    p, ctx, src, table = generic
    z = mpc("0.4", "0.2")
    quad = CircleQuadrature(p, 192, probes=(z,))
    ev_q = opuc_eval(p, table, z, ctx, quad=quad, n_top=4)
    ev_s = opuc_eval(p, table, z, ctx, src=src, n_top=4)
    for n in range(1, 5):
        assert abs(ev_q.eps[n] - ev_s.eps[n]) < mpf("1e-40")
        assert abs(ev_q.epsstar[n] - ev_s.epsstar[n]) < mpf("1e-40")
    assert abs(ev_q.F - ev_s.F) < mpf("1e-40")


def test_flat_weight_polynomials():
    ctx = PrecisionContext(bits=128, tol=1e-20)
    p = WeightParams.from_exponents(0, 0, 0, 0, mpf(1) / 2)
    src = MomentSource.from_params(p, ctx)
    table = build_table_oracle(src, 6, ctx)
    z = mpc("0.3", "0.4")
    ev = opuc_eval(p, table, z, ctx, src=src)
    for n in range(6):
        assert abs(ev.phi[n] - z**n) < mpf("1e-30")
        assert abs(ev.phistar[n] - 1) < mpf("1e-30")


def test_christoffel_darboux_direct_sum(generic):
    # closed kernel form vs literal summation of phi_j(z) barphi_j(y)
    p, ctx, src, table = generic
    z, y = mpc("0.3", "0.2"), mpc("0.5", "-0.4")
    with mp.workprec(320):
        phz, phzs = _phi_at(table, z, 8)
        chy, chys = _barphi_at(table, y, 8)
        acc = mpc(0)
        for n in range(8):
            acc += phz[n] * chy[n]
            rhs = (phzs[n] * chys[n] - z * y * phz[n] * chy[n]) / (1 - z * y)
            assert abs(acc - rhs) < mpf("1e-38") * max(1, abs(acc))


def test_coefficient_function_examples(generic):
    p, ctx, src, table = generic
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    for n in (1, 3):
        th, ths, omg, omgs = coefficient_functions(p, table, n, 0, ctx)
        assert abs(omg - (-(n + (mu + om) / 2) / t)) < mpf("1e-35")
        # leading coefficient of the degree-1 polynomial
        th1, _, _, _ = coefficient_functions(p, table, n, 1, ctx)
        lead = th1 - th
        ref = table.kappa[n] / table.kappa[n + 1] * (n + 1 + mu + omb)
        assert abs(lead - ref) < mpf("1e-33")


def test_w_v_normalization(generic):
    # residues of 2V/W at the three singular points are the exponents
    p, ctx, src, table = generic
    h = mpf(2) ** -60
    for zj, rho in ((mpc(0), -p.mu - p.omega), (mpc(-1), 2 * p.omega1), (-1 / p.t, 2 * p.mu)):
        num = 2 * weight_V(p, zj)
        dW = (weight_W(p, zj + h) - weight_W(p, zj - h)) / (2 * h)
        assert abs(num / dW - rho) < mpf("1e-25")
    assert abs(weight_W(p, 0)) == 0


def test_sample_points_deterministic():
    a = sample_points(11)
    b = sample_points(11)
    c = sample_points(12)
    assert a == b
    assert a != c
    radii = sorted({mp.nstr(abs(z), 2) for z in a})
    assert radii == ["0.3", "0.7", "1.4"]


def test_identity_suite_flat_weight():
    ctx = PrecisionContext(bits=128, tol=1e-18)
    p = WeightParams.from_exponents(0, 0, 0, 0, mpf(1) / 2)
    report = verify_identity_suite(p, 3, 11, ctx)
    assert report.max_residual() < mpf("1e-25")


def test_identity_suite_generic(generic):
    p, _, _, _ = generic
    ctx = PrecisionContext(bits=128, tol=1e-18)
    report = verify_identity_suite(p, 4, 11, ctx)
    labels = dict(report.rows())
    expected = (
        ["ops_rrCf:" + ch for ch in "abcdefghijk"]
        + ["ops_OTeq:" + ch for ch in "abcdef"]
        + ["ops_Cas:" + ch for ch in "abc"]
        + ["ops_zD:" + ch for ch in "abcd"]
        + ["ops_CD:a", "ops_CD:b", "ops_rdot", "ops_rCdot"]
    )
    for label in expected:
        assert label in labels, label
    assert report.max_residual() < 1000 * mpf(ctx.tol)


def test_near_singular_warning():
    ctx = PrecisionContext(bits=128, tol=1e-18)

    # two nearly proportional rows force a tiny pivot
    def fn(n):
        vals = {0: mpf(1), 1: mpf(1), -1: mpf(1) + mpf(2) ** -100, 2: mpf("0.5"), -2: mpf("0.5")}
        return mpc(vals.get(n, mpf("0.1")))

    src = MomentSource(fn)
    with pytest.warns(UserWarning):
        toeplitz_det(src, 0, 2, ctx)
