import random

import pytest
from mpmath import mp, mpc, mpf

from opuctau.errors import DomainError, SingularPoint
from opuctau.oracle import CircleQuadrature, MomentSource
from opuctau.precision import PrecisionContext, rel_diff
from opuctau.weights import (
    ModelKind,
    WeightParams,
    equivalent_params,
    model_moments,
    toeplitz_moment,
    toeplitz_moment_dt,
    weight_eval,
)


def quad_moment(p, n, prec=320):
    """Independent panel quadrature of the weight against z^{-n}."""
    with mp.workprec(prec):
        pts = {-mp.pi, mp.pi}
        if p.t != 0 and abs(abs(p.t) - 1) < mpf("1e-12"):
            pts.add(mp.pi - p.phi)
        return mp.quad(
            lambda th: weight_eval(p, mp.expj(th)) * mp.expj(-n * th), sorted(pts)
        ) / (2 * mp.pi)


def test_flat_weight(ctx):
    p = WeightParams.from_exponents(0, 0, 0, 0, mpf(1) / 2)
    for th in (0.3, 2.0, -1.2):
        assert abs(weight_eval(p, mp.expj(th)) - 1) < mpf(ctx.tol)


def test_weight_singular_points(generic_params):
    with pytest.raises(SingularPoint):
        weight_eval(generic_params, -1)
    with pytest.raises(SingularPoint):
        weight_eval(generic_params, -1 / generic_params.t)


def test_charpoly_weight_product_form(ctx):
    # bare weight equals (1 + 1/z)^mu (1 + |u|^2 z)^mu pointwise; at z = 1 it
    # is 2^mu (1 + |u|^2)^mu, and the squared-modulus combination
    # (u + z)(u + 1/z) reproduces |u + z|^2 on the circle
    u, mu = mpf("0.7"), mpf("1.5")
    p = equivalent_params(ModelKind.cue_charpoly(u, mu))
    for th in (0.4, 1.7, -2.4):
        z = mp.expj(th)
        direct = (1 + 1 / z) ** mu * (1 + u**2 * z) ** mu
        assert abs(weight_eval(p, z) - direct) < mpf("1e-40")
        assert abs((u + z) * (u + 1 / z) - abs(u + z) ** 2) < mpf("1e-40")
    assert abs(weight_eval(p, 1) - 2**mu * (1 + u**2) ** mu) < mpf("1e-40")


def test_ising_conjugation_combination(ctx):
    # w(z) * conj(w(1/conj(z))) is real positive on the circle
    p = equivalent_params(ModelKind.ising_low(mpf("1.3")))
    for th in (0.3, 1.1, 2.9):
        z = mp.expj(th)
        v = weight_eval(p, z) * mp.conj(weight_eval(p, 1 / mp.conj(z)))
        assert abs(v.imag) < mpf("1e-40")
        assert v.real > 0


def test_derived_fields_and_regularity():
    p = WeightParams.from_exponents(0.3, 0.2, 0.1, 0.4, mpc(0.5, 0.1))
    assert abs(p.omega - mpc(0.2, 0.1)) < 1e-15
    assert abs(p.omegabar - mpc(0.2, -0.1)) < 1e-15
    assert p.is_regular()
    flat = WeightParams.from_exponents(0, 0, 0, 0.4, mpc(0.5, 0.1))
    assert not flat.is_regular()
    assert WeightParams.from_exponents(0.3, 0.2, 0.1, 0.4, mp.expjpi(mpf(1) / 3)).in_positivity_regime()


@pytest.mark.parametrize(
    "phi_frac,xi",
    [(mpf(1) / 3, mpf(2) / 5), (mpf(9) / 10, mpf(2) / 5), (mpf(5) / 4, mpf(2) / 5), (mpf(3) / 2, mpf(1) / 2)],
)
def test_moments_match_quadrature_on_circle(phi_frac, xi):
    ctx = PrecisionContext(bits=160, tol=1e-30)
    p = WeightParams.from_exponents(mpf(3) / 10, mpf(2) / 10, mpf(1) / 10, xi, mp.expjpi(phi_frac))
    for n in (-2, 0, 1, 3):
        closed = toeplitz_moment(p, n, ctx)
        q = quad_moment(p, n)
        assert abs(closed - q) < mpf("1e-45"), (phi_frac, n)


def test_moments_match_quadrature_real_t():
    ctx = PrecisionContext(bits=160, tol=1e-30)
    p = WeightParams.from_exponents(mpf(3) / 10, mpf(2) / 10, mpf(1) / 10, 0, mpf("0.64"))
    for n in (-3, 0, 2):
        assert abs(toeplitz_moment(p, n, ctx) - quad_moment(p, n)) < mpf("1e-45")


def test_positivity_regime_random_draws_vs_quadrature():
    ctx = PrecisionContext(bits=128, tol=1e-20)
    rng = random.Random(5)
    for _ in range(20):
        with mp.workprec(320):
            p = WeightParams.from_exponents(
                mpf(rng.uniform(-0.4, 0.8)),
                mpf(rng.uniform(-0.4, 0.8)),
                mpf(rng.uniform(-0.5, 0.5)),
                mpf(rng.uniform(0, 0.9)),
                mp.expjpi(mpf(rng.uniform(0.05, 1.95))),
            )
        n = rng.randint(-3, 3)
        closed = toeplitz_moment(p, n, ctx)
        q = quad_moment(p, n, prec=240)
        assert abs(closed - q) < 1000 * mpf(ctx.tol)


def test_circle_quadrature_class_agrees(generic_params, ctx):
    quad = CircleQuadrature(generic_params, 160)
    for n in (-2, 0, 3):
        val, err = quad.moment(n)
        closed = toeplitz_moment(generic_params, n, ctx)
        assert abs(val - closed) < mpf("1e-40")
        assert err < mpf("1e-40")


def test_hermitian_symmetry_for_real_positive_weights():
    ctx = PrecisionContext(bits=160, tol=1e-30)
    # jump-only weight: real and positive on the circle
    m = ModelKind.cue_gap(mpf(2) / 3 * mp.pi, mpf(1) / 2)
    for n in range(-4, 5):
        wn = model_moments(m, n, ctx)
        wmn = model_moments(m, -n, ctx)
        assert abs(wn - mp.conj(wmn)) < mpf("1e-40")
    # real t in (0, 1) with real exponents: every moment is real
    p = WeightParams.from_exponents(mpf(3) / 10, mpf(1) / 5, 0, 0, mpf("0.64"))
    for n in range(-3, 4):
        assert abs(toeplitz_moment(p, n, ctx).imag) < mpf("1e-40")
    # t = 1 with real exponents: the weight is positive, moments hermitian
    p1 = WeightParams.from_exponents(mpf(3) / 10, mpf(1) / 5, 0, 0, 1)
    for n in range(-3, 4):
        assert abs(toeplitz_moment(p1, n, ctx) - mp.conj(toeplitz_moment(p1, -n, ctx))) < mpf("1e-40")


def test_moment_forms_cross_check_runs(generic_params, ctx):
    # xi != 0 exercises both closed forms internally
    v = toeplitz_moment(generic_params, 2, ctx)
    assert mp.isfinite(abs(v))


@pytest.mark.parametrize(
    "maker,nrange",
    [
        (lambda: ModelKind.cue_gap(mp.pi / 2, mpf("0.7")), range(-6, 7)),
        (lambda: ModelKind.cue_charpoly(mpf("0.7"), mpf("1.5")), range(-6, 7)),
        (lambda: ModelKind.ising_low(mpf("1.3")), range(-6, 7)),
    ],
)
def test_model_moments_equal_equivalent_weight(maker, nrange):
    ctx = PrecisionContext(bits=160, tol=1e-30)
    m = maker()
    p = equivalent_params(m)
    for n in nrange:
        a = model_moments(m, n, ctx)
        b = toeplitz_moment(p, n, ctx)
        assert abs(a - b) < mpf(ctx.tol), (m.kind, n)


def test_ising_high_map_is_rotated():
    # high-temperature closed moments match the mapped weight up to the
    # determinant-invariant factor t^{-n}
    ctx = PrecisionContext(bits=160, tol=1e-30)
    m = ModelKind.ising_high(mpf("0.8"))
    p = equivalent_params(m)
    for n in range(-6, 7):
        a = model_moments(m, n, ctx)
        b = toeplitz_moment(p, n, ctx)
        assert abs(a - p.t ** (-n) * b) < mpf(ctx.tol)


def test_cue_gap_closed_moments(ctx):
    m = ModelKind.cue_gap(mp.pi / 2, 1)
    t = mp.expj(mp.pi / 2)
    assert abs(model_moments(m, 0, ctx) - (1 - mp.pi / 2 / (2 * mp.pi))) < mpf(ctx.tol)
    for n in (1, 2, -3):
        ref = 1 / (2 * mp.pi * mp.mpc(0, 1)) * (-1) ** (n + 1) * (t**n - 1) / n
        assert abs(model_moments(m, n, ctx) - ref) < mpf(ctx.tol)
    z = ModelKind.cue_gap(mp.pi / 2, 0)
    assert model_moments(z, 0, ctx) == 1
    assert model_moments(z, 3, ctx) == 0


def test_cue_charpoly_terminating_moment(ctx):
    m = ModelKind.cue_charpoly(mpf("0.7"), 1)
    w0 = model_moments(m, 0, ctx)
    assert abs(w0 - (1 + mpf("0.49"))) < mpf(ctx.tol)
    # moments vanish beyond the polynomial band for integer mu
    assert abs(model_moments(m, -2, ctx)) < mpf(ctx.tol)


def test_ising_low_moment_n0(ctx):
    k = mpf("1.25")
    m = ModelKind.ising_low(k)
    ref = mp.hyp2f1(mpf(-1) / 2, mpf(1) / 2, 1, 1 / k**2)
    assert abs(model_moments(m, 0, ctx) - ref) < mpf(ctx.tol)


def test_ising_high_moment_n1(ctx):
    k = mpf("0.8")
    m = ModelKind.ising_high(k)
    ref = (
        1
        / (mp.pi * k)
        * mp.gamma(mpf(1) / 2) ** 2
        * mp.hyp2f1(mpf(-1) / 2, mpf(1) / 2, 1, k**2)
    )
    assert abs(model_moments(m, 1, ctx) - ref) < mpf(ctx.tol)


def test_t_zero_moments(ctx):
    p = WeightParams.from_exponents(mpf(3) / 10, mpf(2) / 10, mpf(1) / 10, 0, 0)
    v = toeplitz_moment(p, 0, ctx)
    ref = mp.gamma(2 * p.omega1 + 1) * mp.rgamma(1 + p.mu + p.omega) * mp.rgamma(
        1 - p.mu + p.omegabar
    )
    assert abs(v - ref) < mpf(ctx.tol)
    with pytest.raises(DomainError):
        toeplitz_moment(
            WeightParams.from_exponents(0.3, 0.2, 0.1, 0.4, 0), 0, ctx
        )


def test_moment_domain_guard(ctx):
    with pytest.raises(DomainError):
        toeplitz_moment(WeightParams.from_exponents(-0.7, 0.2, 0, 0, 0.5), 0, ctx)


def test_moment_t_derivative_vs_finite_difference(generic_params):
    ctx = PrecisionContext(bits=192, tol=1e-35)
    p = generic_params
    h = mpf(2) ** -45
    for n in (0, 1, -1):
        d = toeplitz_moment_dt(p, n, ctx)
        pp = WeightParams(p.mu, p.omega, p.omegabar, p.xi, p.t + h, p.scale)
        pm = WeightParams(p.mu, p.omega, p.omegabar, p.xi, p.t - h, p.scale)
        fd = (toeplitz_moment(pp, n, ctx) - toeplitz_moment(pm, n, ctx)) / (2 * h)
        assert abs(d - fd) < mpf(2) ** -80


def test_moment_source_recurrence_vs_direct(generic_params):
    ctx = PrecisionContext(bits=160, tol=1e-30)
    src = MomentSource.from_params(generic_params, ctx)
    for n in (-25, -7, 13, 30):
        direct = toeplitz_moment(generic_params, n, ctx)
        assert rel_diff(src(n), direct) < mpf("1e-60")
