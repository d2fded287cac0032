import pytest
from mpmath import mp, mpc, mpf

from opuctau.errors import DegenerateOmega, RootAmbiguity, ZeroW0
from opuctau.numerics import elliptic_E, elliptic_K, pochhammer
from opuctau.oracle import MomentSource, build_table_oracle
from opuctau.precision import PrecisionContext
from opuctau.recurrences import (
    _pick_root,
    initial_conditions,
    run_dpv,
    run_one_one,
    run_tau_L01,
    run_tau_L14,
    run_two_one_pair,
    run_two_two,
    run_two_zero_pair,
    subleading_from_reflections,
    tau_from_reflections,
    working_bits,
)
from opuctau.weights import ModelKind, WeightParams, equivalent_params, model_moments

NMAX = 10


@pytest.fixture(scope="module")
def generic():
    with mp.workprec(400):
        p = WeightParams.from_exponents(
            mpf(3) / 10, mpf(2) / 10, mpf(1) / 10, mpf(2) / 5, mp.expjpi(mpf(1) / 3)
        )
    ctx = PrecisionContext(bits=224, tol=1e-40)
    src = MomentSource.from_params(p, ctx)
    with mp.workprec(360):
        table = build_table_oracle(src, NMAX, ctx)
    return p, ctx, src, table


def table_dev(result, oracle, what="r"):
    worst = mpf(0)
    for n in range(oracle.N_max + 1):
        if what in ("r", "both") and result.table.r[n] is not None:
            worst = max(worst, abs(result.table.r[n] - oracle.r[n]))
            worst = max(worst, abs(result.table.rbar[n] - oracle.rbar[n]))
        if what in ("T", "both") and result.table.T[n] is not None:
            worst = max(worst, abs(result.table.T[n] - oracle.T[n]) / max(1, abs(oracle.T[n])))
    return worst


def test_initial_conditions(generic):
    p, ctx, src, table = generic
    r1, rb1, w0 = initial_conditions(p, ctx, src)
    assert abs(r1 - table.r[1]) < mpf("1e-55")
    assert abs(rb1 - table.rbar[1]) < mpf("1e-55")
    assert abs(w0 - src(0)) == 0


def test_initial_conditions_zero_w0_guard(ctx_fast):
    src = MomentSource(lambda n: mpc(0) if n == 0 else mpc(1))
    with pytest.raises(ZeroW0):
        initial_conditions(WeightParams.from_exponents(0, 0, 0, 0, mpf(1) / 2), ctx_fast, src)


def test_cue_gap_seed_closed_form():
    ctx = PrecisionContext(bits=160, tol=1e-28)
    phi = mpf(2) / 3 * mp.pi
    xi = mpf(1) / 2
    m = ModelKind.cue_gap(phi, xi)
    src = MomentSource.from_model(m, ctx)
    p = equivalent_params(m)
    r1, rb1, w0 = initial_conditions(p, ctx, src)
    x1 = -xi / mp.pi * mp.sin(phi / 2) / (1 - xi * phi / (2 * mp.pi))
    # r_1 = t^{-1/2} x_1 with the principal half-power phase
    t_half = mp.expj(phi / 2)
    assert abs(r1 * t_half - x1) < mpf("1e-30")


def test_ising_seed_closed_form():
    ctx = PrecisionContext(bits=160, tol=1e-28)
    k = mpf("1.3")
    m = ModelKind.ising_low(k)
    src = MomentSource.from_model(m, ctx)
    p = equivalent_params(m)
    r1, rb1, w0 = initial_conditions(p, ctx, src)
    ratio = elliptic_K(1 / k, ctx) / elliptic_E(1 / k, ctx)
    assert abs(r1 - ((2 - k**2) / 3 + (k**2 - 1) / 3 * ratio)) < mpf("1e-28")
    assert abs(rb1 - (-1 + (k**2 - 1) / k**2 * ratio)) < mpf("1e-28")


@pytest.mark.parametrize("variant", ["A", "B"])
def test_two_two_matches_oracle(generic, variant):
    p, ctx, src, table = generic
    res = run_two_two(p, NMAX, ctx, src=src, variant=variant)
    assert table_dev(res, table, "both") < mpf("1e-55")
    assert res.health["l_consistency"] < mpf("1e-50")


def test_two_one_matches_oracle(generic):
    p, ctx, src, table = generic
    res = run_two_one_pair(p, NMAX, ctx, src=src)
    assert table_dev(res, table, "both") < mpf("1e-55")


def test_two_one_degenerate_omega_guard():
    ctx = PrecisionContext(bits=128, tol=1e-18)
    p = WeightParams.from_exponents(mpf(3) / 10, mpf(2) / 10, 0, 0, mpf(1) / 2)
    with pytest.raises(DegenerateOmega):
        run_two_one_pair(p, 5, ctx)


@pytest.mark.parametrize("variant", ["Bilinear", "Next"])
def test_one_one_matches_oracle(generic, variant):
    p, ctx, src, table = generic
    res = run_one_one(p, NMAX, ctx, variant, src=src)
    assert table_dev(res, table, "both") < mpf("1e-55")
    assert res.root_choices  # every advance recorded a branch choice


def test_two_zero_matches_oracle(generic):
    p, ctx, src, table = generic
    res = run_two_zero_pair(p, NMAX, ctx, src=src)
    assert table_dev(res, table, "both") < mpf("1e-55")


@pytest.mark.parametrize("conj", [False, True])
def test_dpv_matches_oracle(generic, conj):
    p, ctx, src, table = generic
    res = run_dpv(p, NMAX, ctx, conj=conj, src=src)
    assert table_dev(res, table, "both") < mpf("1e-55")


def test_dpv_initial_data(generic):
    p, ctx, src, table = generic
    r1 = table.r[1]
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    g1 = t * (mu + om + (1 + mu + omb) * r1) / (mu + om + (1 + mu + omb) * t * r1)
    # the ratio transformation must reproduce r_1 / r_0
    rho1 = (mu + om) * (t - g1) / ((1 + mu + omb) * t * (g1 - 1))
    assert abs(rho1 - r1) < mpf("1e-50")


def test_dpv_parameter_ledger(generic):
    p, ctx, src, table = generic
    res = run_dpv(p, 6, ctx, src=src)
    assert len(res.alphas) >= 5
    for i in range(1, len(res.alphas)):
        prev, cur = res.alphas[i - 1], res.alphas[i]
        deltas = [cur[j] - prev[j] for j in range(5)]
        assert deltas[0] == 0 and deltas[3] == 0
        assert deltas[1] == 1 and deltas[2] == -1 and deltas[4] == 1
        total = cur[0] + cur[1] + 2 * cur[2] + cur[3] + cur[4]
        assert abs(total - 1) < mpf("1e-40")


def test_tau_l01_matches_oracle(generic):
    p, ctx, src, table = generic
    res = run_tau_L01(p, NMAX, ctx)
    assert table_dev(res, table, "T") < mpf("1e-55")


def test_tau_l14_requires_xi_zero(generic):
    p, ctx, src, table = generic
    with pytest.raises(ValueError):
        run_tau_L14(p, 5, ctx)


def test_tau_routes_xi_zero(generic_params_xi0):
    ctx = PrecisionContext(bits=224, tol=1e-40)
    p = generic_params_xi0
    src = MomentSource.from_params(p, ctx)
    table = build_table_oracle(src, 8, ctx)
    res01 = run_tau_L01(p, 8, ctx)
    res14 = run_tau_L14(p, 8, ctx)
    for n in range(9):
        scale = max(1, abs(table.T[n]))
        assert abs(res01.table.T[n] - table.T[n]) / scale < mpf("1e-55")
        assert abs(res14.table.T[n] - table.T[n]) / scale < mpf("1e-55")
        assert abs(res01.table.T[n] - res14.table.T[n]) / scale < mpf("1e-55")


def test_tau_from_reflections(generic):
    p, ctx, src, table = generic
    tee = tau_from_reflections(table, w0=src(0))
    for n in range(len(tee)):
        assert abs(tee[n] - table.T[n]) < mpf("1e-50") * max(1, abs(table.T[n]))


def test_tau_route_consistency_with_two_two(generic):
    p, ctx, src, table = generic
    res_rr = run_two_two(p, NMAX, ctx, src=src)
    res_tau = run_tau_L01(p, NMAX, ctx)
    tee = tau_from_reflections(res_rr.table, w0=src(0))
    for n in range(NMAX + 1):
        scale = max(1, abs(tee[n]))
        assert abs(res_tau.table.T[n] - tee[n]) / scale < mpf("1e-50")


def test_second_order_relation_on_produced_sequences(generic):
    p, ctx, src, table = generic
    res = run_two_two(p, NMAX, ctx, src=src)
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    r, rb = res.table.r, res.table.rbar
    for n in range(1, NMAX):
        resid = (
            (n + 1 + mu + omb) * t * r[n + 1] * rb[n]
            - (n - 1 + mu + omb) * t * r[n] * rb[n - 1]
            - (n + 1 + mu + om) * rb[n + 1] * r[n]
            + (n - 1 + mu + om) * rb[n] * r[n - 1]
        )
        assert abs(resid) < mpf("1e-50")


def test_subleading_closed_forms(generic):
    p, ctx, src, table = generic
    for n in range(1, NMAX - 1):
        l_closed, resid = subleading_from_reflections(p, table, n)
        assert resid < mpf("1e-45")
        assert abs(l_closed - table.l[n]) < mpf("1e-45")


def test_subleading_special_values():
    ctx = PrecisionContext(bits=192, tol=1e-35)
    # t = 0 weight
    p = WeightParams.from_exponents(mpf(3) / 10, mpf(2) / 10, mpf(1) / 10, 0, 0)
    src = MomentSource.from_params(p, ctx)
    table = build_table_oracle(src, 5, ctx)
    for n in range(1, 4):
        ref = -(p.mu + p.omega) * n / (n - p.mu + p.omegabar) * table.kappa[n]
        assert abs(table.l[n] - ref) < mpf("1e-33")
    # critical Ising
    srcI = MomentSource.from_model(ModelKind.ising_low(mpf(1)), ctx)
    tabI = build_table_oracle(srcI, 5, ctx)
    pI = equivalent_params(ModelKind.ising_low(mpf("1.0000000001")))
    for n in range(1, 4):
        assert abs(tabI.l[n] - mpf(n) / (2 * n + 1) * tabI.kappa[n]) < mpf("1e-30")


def test_hermitian_reduction_gap_weight():
    # omega2 = 0, |t| = 1, real parameters with rbar_1 = t r_1: the produced
    # sequences are a real sequence times the half-power phase
    ctx = PrecisionContext(bits=192, tol=1e-35)
    with mp.workprec(320):
        phi = mpf(2) / 5 * 2 * mp.pi
        m = ModelKind.cue_gap(phi, mpf(1) / 2)
        p = equivalent_params(m)
    src = MomentSource.from_model(m, ctx)
    r1, rb1, w0 = initial_conditions(p, ctx, src)
    assert abs(rb1 - p.t * r1) < mpf("1e-40")
    res = run_two_two(p, 8, ctx, src=src)
    half = mp.expj(phi / 2)
    for n in range(9):
        xn = res.table.r[n] * half**n
        assert abs(xn.imag) < mpf("1e-40")
        assert abs(res.table.rbar[n] - p.t**n * res.table.r[n]) < mpf("1e-40")


def test_charpoly_conjugation_structure():
    ctx = PrecisionContext(bits=192, tol=1e-35)
    u, mu = mpf("0.7"), mpf("1.5")
    p = equivalent_params(ModelKind.cue_charpoly(u, mu))
    res = run_two_two(p, 8, ctx)
    for n in range(9):
        assert abs(res.table.rbar[n] - u ** (2 * n) * res.table.r[n]) < mpf("1e-45")


def test_forced_splice_recovery(generic):
    p, ctx, src, table = generic
    res = run_two_two(p, NMAX, ctx, src=src, force_splice_at={4, 7})
    assert res.splices == [5, 8]
    assert res.table.provenance[5] == "oracle-splice"
    assert table_dev(res, table, "both") < mpf("1e-55")


def test_pick_root_ambiguity():
    with pytest.raises(RootAmbiguity):
        _pick_root((mpc(1), mpc(-1)), mpc(0), 3, 256)
    root, idx = _pick_root((mpc(1), mpc(-1)), mpc("0.9"), 3, 256)
    assert root == 1 and idx == 0


def test_working_bits_policy():
    ctx = PrecisionContext(bits=128, tol=1e-18)
    assert working_bits(ctx, 10) == 256
    assert working_bits(ctx, 40) == 64 + 8 * 40
    assert working_bits(PrecisionContext(bits=512, tol=1e-60), 10) == 512


def test_route_agreement_across_all_routes(generic):
    p, ctx, src, table = generic
    results = [
        run_two_two(p, NMAX, ctx, src=src),
        run_two_two(p, NMAX, ctx, src=src, variant="B"),
        run_two_one_pair(p, NMAX, ctx, src=src),
        run_dpv(p, NMAX, ctx, src=src),
        run_dpv(p, NMAX, ctx, conj=True, src=src),
        run_one_one(p, NMAX, ctx, "Bilinear", src=src),
        run_one_one(p, NMAX, ctx, "Next", src=src),
        run_two_zero_pair(p, NMAX, ctx, src=src),
    ]
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            for n in range(NMAX + 1):
                a, b = results[i].table.r[n], results[j].table.r[n]
                assert abs(a - b) < 1000 * mpf(ctx.tol)
                a, b = results[i].table.rbar[n], results[j].table.rbar[n]
                assert abs(a - b) < 1000 * mpf(ctx.tol)
