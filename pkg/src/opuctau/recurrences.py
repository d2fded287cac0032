"""Recurrence routes that propagate reflection coefficients or tau ratios in
the matrix dimension N without computing determinants.

Route taxonomy:

* two_two        -- coupled 2/2 system, linear in the advanced unknowns
                    (production default together with two_one);
* two_one_pair   -- quasi-linear 2/1 + 1/2 pair, requires omega != omegabar;
* one_one        -- two coupled 1/1 systems, quadratic in the advanced
                    unknowns (verification only, root disambiguation);
* two_zero_pair  -- 2/0 quadratic propagation of one family with the other
                    reconstructed from the homogeneous second-order relation;
* dpv            -- coupled first-order discrete-Painleve (g, f) map with the
                    reflection coefficients recovered from the transformation
                    formulas and the subleading-coefficient ledger;
* tau_l01/tau_l14 -- tau-function recurrences driven by two shift schemes of
                    the same (g, f) map.

Every route fills a CoefficientTable so results are directly comparable with
the determinant oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from mpmath import mp, mpc, mpf

from .errors import (
    DegenerateOmega,
    DivisionBreakdown,
    PoleStep,
    RootAmbiguity,
    ZeroTau,
    ZeroW0,
)
from .oracle import CoefficientTable, MomentSource, fill_leading_coefficients, reflection_from_dets
from .precision import GUARD_BITS, PrecisionContext, to_mpc
from .weights import WeightParams, toeplitz_moment, toeplitz_moment_dt

ROUTE_IDS = (
    "TwoTwoA",
    "TwoTwoB",
    "TwoOnePair",
    "OneOneBilinear",
    "OneOneNext",
    "TwoZeroPair",
    "DPainleveGF",
    "DPainleveGFConj",
    "TauL01",
    "TauL14",
)


@dataclass
class RouteResult:
    """A coefficient table tagged by the route that produced it."""

    route: str
    table: CoefficientTable
    splices: list = field(default_factory=list)
    root_choices: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    health: dict = field(default_factory=dict)


def working_bits(ctx: PrecisionContext, N_max: int) -> int:
    """Recurrence working precision: max(ctx.bits, 256, 64 + 8 N_max)."""
    return max(ctx.bits, 256, 64 + 8 * N_max)


def initial_conditions(p: WeightParams, ctx: PrecisionContext, src: MomentSource | None = None):
    """(r_1, rbar_1, w_0) from the first trigonometric moments."""
    if src is None:
        src = MomentSource.from_params(p, ctx)
    w0 = src(0)
    if w0 == 0 or not mp.isfinite(abs(w0)):
        raise ZeroW0("w_0 vanishes; reflection seeds undefined")
    return -src(-1) / w0, -src(1) / w0, w0


def _finalize_table(p, table: CoefficientTable, w0, route: str) -> None:
    """Fill kappa, l, lbar, m, T, I0 from the produced reflection sequence."""
    top = table.filled_range()
    kappa = mp.sqrt(1 / w0)
    table.kappa[0] = kappa
    tee_prev, tee = mpc(1), to_mpc(w0)
    table.T[0], table.I0[0] = mpc(1), mpc(1)
    table.T[1] = table.I0[1] = tee
    for n in range(1, top + 1):
        fac = 1 - table.r[n] * table.rbar[n]
        if fac == 0:
            raise ZeroTau(f"1 - r_{n} rbar_{n} = 0")
        kappa = kappa / mp.sqrt(fac)
        table.kappa[n] = kappa
        if n + 1 <= table.N_max:
            tee_prev, tee = tee, tee * tee / tee_prev * fac
            table.T[n + 1] = table.I0[n + 1] = tee
        if table.provenance[n] is None:
            table.provenance[n] = route
    fill_leading_coefficients(table)


def tau_from_reflections(table: CoefficientTable, w0=None):
    """T_{N+1} = T_N^2 / T_{N-1} * (1 - r_N rbar_N), seeded T_0 = 1, T_1 = w_0."""
    if w0 is None:
        w0 = table.T[1]
    if w0 is None:
        raise ZeroTau("w_0 seed missing")
    out = [mpc(1), to_mpc(w0)]
    top = table.filled_range()
    for n in range(1, top):
        if out[-2] == 0:
            raise ZeroTau(f"T_{n - 1} = 0")
        out.append(out[-1] ** 2 / out[-2] * (1 - table.r[n] * table.rbar[n]))
    return out


def subleading_from_reflections(p: WeightParams, table: CoefficientTable, N: int):
    """l_N from the closed reflection-coefficient expression.

    Returns (l_N, cross_residual) where the residual is the relative mismatch
    between the two equivalent closed forms.
    """
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    r, rb, k = table.r, table.rbar, table.kappa
    # the r_N rbar_{N-1} term carries a factor t (fixed against the oracle)
    lk_a = (
        (N + 1 + mu + omb) * t * (r[N + 1] / r[N] - r[N + 1] * rb[N])
        + (N - 1 + mu + om) * r[N - 1] / r[N]
        - (N - 1 + mu + omb) * t * r[N] * rb[N - 1]
        + (N + mu - om) * t
        + N
        - mu
        + omb
    ) / (2 * t)
    lk_b = (
        (N + 1 + mu + om) * rb[N + 1] / rb[N]
        + (N - 1 + mu + omb) * t * (rb[N - 1] / rb[N] - r[N] * rb[N - 1])
        - (N + 1 + mu + omb) * t * r[N + 1] * rb[N]
        + (N + mu - om) * t
        + N
        - mu
        + omb
    ) / (2 * t)
    resid = abs(lk_a - lk_b) / max(mpf(1), abs(lk_a))
    return lk_a * k[N], resid


def _splice(src, n, ctx):
    return reflection_from_dets(src, n, ctx)


def run_two_two(
    p: WeightParams,
    N_max: int,
    ctx: PrecisionContext,
    src: MomentSource | None = None,
    oracle_splice: bool = True,
    force_splice_at: set | None = None,
    variant: str = "A",
) -> RouteResult:
    """Advance (r, rbar) with the coupled 2/2 relations, linear in the
    advanced unknowns; isolated breakdowns are respliced from determinants.

    Variant A solves the first relation for r_{N+1} and the second for
    rbar_{N+1}; variant B solves the second relation first and recovers
    r_{N+1} from the homogeneous second-order relation instead.
    """
    if variant not in ("A", "B"):
        raise ValueError("variant must be 'A' or 'B'")
    force_splice_at = force_splice_at or set()
    bits = working_bits(ctx, N_max)
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    if src is None:
        src = MomentSource.from_params(p, ctx)
    result = RouteResult(route=f"TwoTwo{variant}", table=CoefficientTable(N_max))
    table = result.table
    with mp.workprec(bits + GUARD_BITS):
        r1, rb1, w0 = initial_conditions(p, ctx, src)
        r = {0: mpc(1), 1: r1, -1: mpc(0)}
        rb = {0: mpc(1), 1: rb1, -1: mpc(0)}
        floor = mpf(2) ** (-bits // 2)
        for N in range(1, N_max):
            fac = 1 - r[N] * rb[N]
            lhs = t * r[N] * rb[N - 1] + r[N - 1] * rb[N] - t - 1
            broke = (
                N in force_splice_at
                or abs(fac) < floor
                or abs(r[N]) < floor
                or abs(rb[N]) < floor
                or (N >= 2 and (abs(r[N - 1]) < floor or abs(rb[N - 1]) < floor))
            )
            if not broke:
                if N == 1:
                    second_a = mpc(0)
                    second_b = mpc(0)
                else:
                    facm = 1 - r[N - 1] * rb[N - 1]
                    second_a = facm / rb[N - 1] * (
                        (N + mu + om) * rb[N] + (N - 2 + mu + omb) * t * rb[N - 2]
                    )
                    second_b = facm / r[N - 1] * (
                        (N + mu + omb) * t * r[N] + (N - 2 + mu + om) * r[N - 2]
                    )
                rb[N + 1] = (
                    (lhs + second_b) * rb[N] / fac - (N - 1 + mu + omb) * t * rb[N - 1]
                ) / (N + 1 + mu + om)
                if variant == "A":
                    r[N + 1] = (
                        (lhs + second_a) * r[N] / fac - (N - 1 + mu + om) * r[N - 1]
                    ) / ((N + 1 + mu + omb) * t)
                else:
                    # second-order reconstruction: linear in r_{N+1}
                    r[N + 1] = (
                        (N + 1 + mu + om) * rb[N + 1] * r[N]
                        + (N - 1 + mu + omb) * t * r[N] * rb[N - 1]
                        - (N - 1 + mu + om) * rb[N] * r[N - 1]
                    ) / ((N + 1 + mu + omb) * t * rb[N])
            else:
                if not oracle_splice:
                    raise DivisionBreakdown(N)
                r[N + 1], rb[N + 1] = _splice(src, N + 1, ctx)
                result.splices.append(N + 1)
        for n in range(N_max + 1):
            table.r[n] = +r[n]
            table.rbar[n] = +rb[n]
            table.provenance[n] = "oracle-splice" if n in result.splices else None
        _finalize_table(p, table, w0, f"two_two_{variant}")
        _health_check(p, result, ctx)
    return result


def _health_check(p, result: RouteResult, ctx):
    """Redundant subleading-coefficient comparison along the route."""
    table = result.table
    worst = mpf(0)
    top = table.filled_range()
    for N in range(1, top):
        if abs(table.r[N]) == 0 or abs(table.rbar[N]) == 0:
            continue
        l_closed, resid = subleading_from_reflections(p, table, N)
        sum_l = table.l[N]
        rel = abs(l_closed - sum_l) / max(mpf(1), abs(sum_l))
        worst = max(worst, rel, resid)
    result.health["l_consistency"] = worst


def run_two_one_pair(
    p: WeightParams,
    N_max: int,
    ctx: PrecisionContext,
    src: MomentSource | None = None,
    oracle_splice: bool = True,
) -> RouteResult:
    """Quasi-linear 2/1 + 1/2 advance; requires omega != omegabar."""
    bits = working_bits(ctx, N_max)
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    delta = omb - om
    if abs(delta) < mpf(2) ** (-(ctx.bits // 4)):
        raise DegenerateOmega("omega == omegabar; 2/1 route unavailable")
    if src is None:
        src = MomentSource.from_params(p, ctx)
    result = RouteResult(route="TwoOnePair", table=CoefficientTable(N_max))
    s_tot = 2 * mu + 2 * p.omega1  # exponent sum over the finite singular points
    a_const = mu * (1 - t) + om * t - omb
    with mp.workprec(bits + GUARD_BITS):
        r1, rb1, w0 = initial_conditions(p, ctx, src)
        r = {0: mpc(1), 1: r1}
        rb = {0: mpc(1), 1: rb1}
        floor = mpf(2) ** (-bits // 2)
        for N in range(1, N_max):
            fac = 1 - r[N] * rb[N]
            if abs(fac) < floor or abs(r[N]) < floor or abs(rb[N]) < floor:
                if not oracle_splice:
                    raise DivisionBreakdown(N)
                r[N + 1], rb[N + 1] = _splice(src, N + 1, ctx)
                result.splices.append(N + 1)
                continue
            r[N + 1] = -(
                (N - 1 + mu + om) * (2 * (N + mu + om) * r[N] * rb[N] + delta) * r[N - 1]
                - (N - 1 + mu + omb) * (2 * N + s_tot) * t * r[N] ** 2 * rb[N - 1]
                + (delta * N * (t + 1) - s_tot * a_const) * r[N]
            ) / ((N + 1 + mu + omb) * delta * t * fac)
            rb[N + 1] = -(
                (2 * N + s_tot) * (N - 1 + mu + om) * rb[N] ** 2 * r[N - 1]
                - (N - 1 + mu + omb) * (2 * (N + mu + omb) * r[N] * rb[N] - delta) * t * rb[N - 1]
                + (delta * N * (1 + t) + s_tot * (mu * (t - 1) + omb - om * t)) * rb[N]
            ) / ((N + 1 + mu + om) * delta * fac)
        table = result.table
        for n in range(N_max + 1):
            table.r[n] = +r[n]
            table.rbar[n] = +rb[n]
            table.provenance[n] = "oracle-splice" if n in result.splices else None
        _finalize_table(p, table, w0, "two_one_pair")
        _health_check(p, result, ctx)
    return result


def _pick_root(roots, hint, N, bits):
    """Choose the quadratic root nearest the predictor; ambiguous if the two
    distances are indistinguishable at working scale."""
    d = [abs(rt - hint) for rt in roots]
    scale = max(abs(roots[0]), abs(roots[1]), mpf(1))
    if abs(d[0] - d[1]) < scale * mpf(2) ** (-bits // 8):
        raise RootAmbiguity(N, roots)
    return roots[0] if d[0] < d[1] else roots[1], 0 if d[0] < d[1] else 1


def _quad_roots(a, b, c):
    disc = mp.sqrt(b * b - 4 * a * c)
    return ((-b + disc) / (2 * a), (-b - disc) / (2 * a))


def _one_one_bilinear_coeffs(N, mu, om, omb, t, rN, rbN, rbNm1):
    """Quadratic a x^2 + b x + c = 0 for x = r_{N+1} in the first 1/1 system;
    the conjugate system is the same function with (om, omb, t, r, rb)
    replaced by (omb, om, 1/t, rb, r)."""
    c1 = N + mu + om
    d = N + mu + omb
    fac = 1 - rN * rbN
    P = -c1 * t * fac * (d + 1) * rbN
    Q = -c1 * t * fac * (d - 1) * rN * rbNm1
    core = 2 * c1**2 * rN**2 * rbN**2 - c1**2 * (t + 1) * rN * rbN
    G1 = core - 2 * c1 * omb * (t - 1) * rN * rbN + (mu - omb) * (mu + omb) * (t - 1)
    G2 = core + 2 * c1 * om * (t - 1) * rN * rbN + (mu - om) * (mu + om) * (t - 1)
    S = -((2 * c1 * rN * rbN + omb - om) ** 2) * fac * (c1 * rbN + (d - 1) * t * rbNm1)
    a = P * P
    b = P * (2 * Q + G1 + G2) - S * (d + 1) * t
    c = (Q + G1) * (Q + G2) - S * c1 * rN
    return a, b, c


def _one_one_next_residual(N, mu, om, omb, t, rN, rbN, rNp1, rbNp1):
    """Residual of the alternative 1/1 relation linking (r, rbar)_{N+1} to
    (r, rbar)_N; used as a cross-check after the 2nd-order reconstruction."""
    c1 = N + mu + om
    d = N + mu + omb
    u = (d + 1) * d * t * rNp1 * rbN
    v = (c1 + 1) * c1 * rbNp1 * rN
    lhs = (u - v + (omb - mu) * (omb + mu) * (t - 1)) * (
        u - v + (om - mu) * (om + mu) * (t - 1)
    )
    rhs = (omb - om) ** 2 * ((d + 1) * t * rNp1 + c1 * rN) * (
        (c1 + 1) * rbNp1 + d * t * rbN
    )
    return lhs - rhs


def _second_order_advance(N, mu, om, omb, t, r, rb):
    """rbar_{N+1} from the homogeneous second-order relation (linear)."""
    num = (
        (N + 1 + mu + omb) * t * r[N + 1] * rb[N]
        - (N - 1 + mu + omb) * t * r[N] * rb[N - 1]
        + (N - 1 + mu + om) * rb[N] * r[N - 1]
    )
    den = (N + 1 + mu + om) * r[N]
    if den == 0:
        raise DivisionBreakdown(N, "second-order reconstruction divides by r_N")
    return num / den


def run_one_one(
    p: WeightParams,
    N_max: int,
    ctx: PrecisionContext,
    variant: str = "Bilinear",
    src: MomentSource | None = None,
    hint_bits: int = 128,
) -> RouteResult:
    """Quadratic 1/1 routes (verification): advance by solving the quadratic
    and disambiguate roots with a low-precision determinant predictor."""
    if variant not in ("Bilinear", "Next"):
        raise ValueError("variant must be 'Bilinear' or 'Next'")
    bits = working_bits(ctx, N_max)
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    if src is None:
        src = MomentSource.from_params(p, ctx)
    hint_ctx = PrecisionContext(max(hint_bits, 64), 1e-6, 2)
    hint_src = MomentSource.from_params(p, hint_ctx) if p is not None else None
    result = RouteResult(route=f"OneOne{variant}", table=CoefficientTable(N_max))
    with mp.workprec(bits + GUARD_BITS):
        r1, rb1, w0 = initial_conditions(p, ctx, src)
        r = {0: mpc(1), 1: r1}
        rb = {0: mpc(1), 1: rb1}
        for N in range(1, N_max):
            hint_r, hint_rb = _splice(hint_src, N + 1, hint_ctx)
            if variant == "Bilinear":
                a, b, c = _one_one_bilinear_coeffs(N, mu, om, omb, t, r[N], rb[N], rb[N - 1])
                root, idx = _pick_root(_quad_roots(a, b, c), hint_r, N, bits)
                r[N + 1] = root
                a2, b2, c2 = _one_one_bilinear_coeffs(
                    N, mu, omb, om, 1 / t, rb[N], r[N], r[N - 1]
                )
                root_b, idx_b = _pick_root(_quad_roots(a2, b2, c2), hint_rb, N, bits)
                rb[N + 1] = root_b
                result.root_choices[N + 1] = (idx, idx_b)
            else:
                # Close the coupled quadratic pair with the linear
                # second-order relation, then verify the defining residual.
                c1 = N + mu + om
                d = N + mu + omb
                # rbar_{N+1} = alpha * r_{N+1} + beta from the 2nd-order relation
                alpha = (d + 1) * t * rb[N] / ((c1 + 1) * r[N])
                beta = (
                    -(N - 1 + mu + omb) * t * r[N] * rb[N - 1]
                    + (N - 1 + mu + om) * rb[N] * r[N - 1]
                ) / ((c1 + 1) * r[N])
                # substitute into the alternative 1/1 relation -> quadratic in x
                uco = (d + 1) * d * t * rb[N]
                vco = (c1 + 1) * c1 * r[N]
                k1 = (omb - mu) * (omb + mu) * (t - 1)
                k2 = (om - mu) * (om + mu) * (t - 1)
                A1 = uco - vco * alpha
                B1 = -vco * beta
                rr = (omb - om) ** 2
                qa = A1 * A1 - rr * (d + 1) * t * (c1 + 1) * alpha
                qb = (
                    A1 * (B1 + k1)
                    + A1 * (B1 + k2)
                    - rr
                    * (
                        (d + 1) * t * ((c1 + 1) * beta + d * t * rb[N])
                        + c1 * r[N] * (c1 + 1) * alpha
                    )
                )
                qc = (B1 + k1) * (B1 + k2) - rr * c1 * r[N] * ((c1 + 1) * beta + d * t * rb[N])
                root, idx = _pick_root(_quad_roots(qa, qb, qc), hint_r, N, bits)
                r[N + 1] = root
                rb[N + 1] = alpha * root + beta
                resid = _one_one_next_residual(N, mu, om, omb, t, r[N], rb[N], r[N + 1], rb[N + 1])
                result.health.setdefault("next_residual", mpf(0))
                result.health["next_residual"] = max(
                    result.health["next_residual"], abs(resid)
                )
                result.root_choices[N + 1] = (idx,)
        table = result.table
        for n in range(N_max + 1):
            table.r[n] = +r[n]
            table.rbar[n] = +rb[n]
        _finalize_table(p, table, w0, f"one_one_{variant.lower()}")
    return result


def run_two_zero_pair(
    p: WeightParams,
    N_max: int,
    ctx: PrecisionContext,
    src: MomentSource | None = None,
    hint_bits: int = 128,
) -> RouteResult:
    """2/0 quadratic advance of the r family; rbar reconstructed linearly
    from the homogeneous second-order relation (verification route).

    The quadratic is produced by eliminating the subleading coefficient
    between the two bilinear singular-point identities (the printed collapsed
    form of the relation carries a typo, so the elimination is done here
    directly; coefficients are extracted by exact three-point evaluation).
    """
    bits = working_bits(ctx, N_max)
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    if src is None:
        src = MomentSource.from_params(p, ctx)
    hint_ctx = PrecisionContext(max(hint_bits, 64), 1e-6, 2)
    hint_src = MomentSource.from_params(p, hint_ctx)
    result = RouteResult(route="TwoZeroPair", table=CoefficientTable(N_max))
    with mp.workprec(bits + GUARD_BITS):
        r1, rb1, w0 = initial_conditions(p, ctx, src)
        r = {0: mpc(1), 1: r1}
        rb = {0: mpc(1), 1: rb1}
        w1c = p.omega1
        tfb = ((t - 1) / t) ** 2
        for N in range(1, N_max):
            c1 = N + mu + om
            d = N + mu + omb
            fac = 1 - r[N] * rb[N]
            rho_m = r[N - 1] / r[N]
            den = (N + mu + w1c) * (t - 1) / t
            if abs(den) < mpf(2) ** (-bits // 2) or abs(r[N]) < mpf(2) ** (-bits // 2):
                raise DivisionBreakdown(N, "bilinear elimination degenerate")

            def resid(x):
                rho_p = x / r[N]
                a1 = -N / t - (d + 1) * fac * rho_p + w1c * (1 - 1 / t)
                b1 = -N - (d + 1) * fac * rho_p + mu * (1 / t - 1)
                pa = fac * (d + (c1 - 1) / t * rho_m) * (c1 / t + (d + 1) * rho_p) - w1c**2 * tfb
                pb = fac / t * (d + (c1 - 1) * rho_m) * (c1 + (d + 1) * rho_p) - mu**2 * tfb
                lk = ((pb - pa) / den - a1 - b1) / 2
                return (lk + b1) ** 2 + pb

            q0v = resid(mpc(0))
            q2v = (resid(mpc(1)) + resid(mpc(-1))) / 2 - q0v
            q1v = (resid(mpc(1)) - resid(mpc(-1))) / 2
            hint_r, _hint_rb = _splice(hint_src, N + 1, hint_ctx)
            root, idx = _pick_root(_quad_roots(q2v, q1v, q0v), hint_r, N, bits)
            r[N + 1] = root
            rb[N + 1] = _second_order_advance(N, mu, om, omb, t, r, rb)
            result.root_choices[N + 1] = (idx,)
        table = result.table
        for n in range(N_max + 1):
            table.r[n] = +r[n]
            table.rbar[n] = +rb[n]
        _finalize_table(p, table, w0, "two_zero_pair")
    return result


def _dpv_alphas(N, mu, om, omb):
    """Root-variable bookkeeping for the (g, f) map at step N."""
    return (-2 * mu, N - 1 + mu + om, 1 - N, -(om + omb), N + mu + omb)


def run_dpv(
    p: WeightParams,
    N_max: int,
    ctx: PrecisionContext,
    conj: bool = False,
    src: MomentSource | None = None,
    oracle_splice: bool = True,
) -> RouteResult:
    """Coupled first-order (g, f) route; reflection coefficients recovered
    from the ratio transformation and the subleading-coefficient ledger."""
    bits = working_bits(ctx, N_max)
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    if src is None:
        src = MomentSource.from_params(p, ctx)
    route = "DPainleveGFConj" if conj else "DPainleveGF"
    result = RouteResult(route=route, table=CoefficientTable(N_max))
    with mp.workprec(bits + GUARD_BITS):
        r1, rb1, w0 = initial_conditions(p, ctx, src)
        floor = mpf(2) ** (-bits // 2)
        r = {0: mpc(1)}
        rb = {0: mpc(1)}
        if not conj:
            g = {1: t * (mu + om + (1 + mu + omb) * r1) / (mu + om + (1 + mu + omb) * t * r1)}
            f = {0: mpc(0)}
            r[1] = r1
            s_led = mpc(0)  # l_N / kappa_N ledger via the Szego partial sums
            rho = {}
            for N in range(1, N_max + 1):
                gn = g[N]
                if min(abs(gn - 1), abs(gn - t)) < floor:
                    raise PoleStep(N, "g hit a pole of the f-advance")
                f[N] = (
                    2 * p.omega1
                    + (N - 1 + mu + om) / (gn - 1)
                    + (N + mu + omb) * t / (gn - t)
                    - f[N - 1]
                )
                if min(abs(f[N]), abs(f[N] - 2 * p.omega1)) < floor:
                    raise PoleStep(N, "f hit a pole of the g-advance")
                g[N + 1] = (
                    t
                    * (f[N] + N)
                    * (f[N] + N + 2 * mu)
                    / (f[N] * (f[N] - 2 * p.omega1))
                    / gn
                )
                rho[N + 1] = (
                    (N + mu + om)
                    * (t - g[N + 1])
                    / ((N + 1 + mu + omb) * t * (g[N + 1] - 1))
                )
                r[N + 1] = rho[N + 1] * r[N]
                # recover rbar_N: t l_N/kappa_N = (1-t) f_N + N
                #                + (N+1+mu+omb) t rho_{N+1} (1 - r_N rbar_N)
                s_led = s_led + r[N] * rb[N - 1]
                one_minus = (t * s_led - N - (1 - t) * f[N]) / (
                    (N + 1 + mu + omb) * t * rho[N + 1]
                )
                rb[N] = (1 - one_minus) / r[N]
                result.alphas.append(_dpv_alphas(N, mu, om, omb))
        else:
            gb = {
                1: (mu + omb + (1 + mu + om) / t * rb1) / (mu + omb + (1 + mu + om) * rb1)
            }
            fb = {0: mpc(0)}
            rb[1] = rb1
            s_led = mpc(0)
            for N in range(1, N_max + 1):
                gn = gb[N]
                rhob = (N - 1 + mu + omb) * (1 - gn) / ((N + mu + om) * (gn - 1 / t))
                if N >= 2:
                    rb[N] = rhob * rb[N - 1]
                if min(abs(gn - 1), abs(gn - 1 / t)) < floor:
                    raise PoleStep(N, "g hit a pole of the f-advance")
                fb[N] = (
                    2 * mu
                    + (N + mu + om) / (gn - 1)
                    + (N - 1 + mu + omb) / t / (gn - 1 / t)
                    - fb[N - 1]
                )
                # t l_N/kappa_N = N t + (N-1+mu+omb)(1-r_N rbar_N) t / rhob
                #                - (1-t) fb_N ; l-ledger is linear in r_N
                denom_r = (N - 1 + mu + omb) * t / rhob * rb[N] + t * rb[N - 1]
                if abs(denom_r) < floor:
                    raise PoleStep(N, "reflection recovery degenerate")
                r[N] = (
                    N * t + (N - 1 + mu + omb) * t / rhob - (1 - t) * fb[N] - t * s_led
                ) / denom_r
                s_led = s_led + r[N] * rb[N - 1]
                if min(abs(fb[N]), abs(fb[N] - 2 * mu)) < floor:
                    raise PoleStep(N, "f hit a pole of the g-advance")
                gb[N + 1] = (
                    (fb[N] + N)
                    * (fb[N] + N + 2 * p.omega1)
                    / (t * fb[N] * (fb[N] - 2 * mu))
                    / gn
                )
                result.alphas.append(_dpv_alphas(N, mu, om, omb))
        table = result.table
        for n in range(N_max + 1):
            table.r[n] = +r[n]
            table.rbar[n] = +rb[n]
        _finalize_table(p, table, w0, route)
    return result


def _log_dt_w0(p: WeightParams, ctx: PrecisionContext):
    """t * d/dt log w_0 at the weight's deformation parameter."""
    w0 = toeplitz_moment(p, 0, ctx)
    dw0 = toeplitz_moment_dt(p, 0, ctx)
    return p.t * dw0 / w0, w0


def run_tau_L01(p: WeightParams, N_max: int, ctx: PrecisionContext) -> RouteResult:
    """Tau-sequence recurrence from the first shift scheme.

    Internally substitutes s = 1/(1 - t) for the weight parameter t and runs
    the (g, f) map in that variable.
    """
    bits = working_bits(ctx, N_max)
    mu, om, omb, tw = p.mu, p.omega, p.omegabar, p.t
    result = RouteResult(route="TauL01", table=CoefficientTable(N_max))
    with mp.workprec(bits + GUARD_BITS):
        s = 1 / (1 - tw)
        tlog, w0 = _log_dt_w0(p, ctx)
        # the seed's phase prefactor cancels the t^{-mu} normalisation of w_0
        q0 = mpf(1) / 2 - tlog / (2 * mu)
        g = {0: q0 / (q0 - 1)}
        f = {
            0: (1 + mu + omb) * (q0 - 1)
            + (mu + om) * q0
            - (2 * p.omega1 + 1) * q0 * (q0 - 1) / (q0 - s)
        }
        tee = {0: mpc(1), 1: to_mpc(w0)}
        floor = mpf(2) ** (-bits // 2)
        for N in range(1, N_max):
            fm = f[N - 1]
            if min(abs(fm), abs(fm - mu - om)) < floor:
                raise PoleStep(N, "f hit a pole of the g-advance")
            g[N] = (
                s
                / (s - 1)
                * (fm + N)
                * (fm + N + mu + omb)
                / (fm * (fm - mu - om))
                / g[N - 1]
            )
            gn = g[N]
            if min(abs(gn - 1), abs(s * (gn - 1) - gn)) < floor:
                raise PoleStep(N, "g hit a pole of the f-advance")
            f[N] = (
                mu
                + om
                + (N + 2 * mu) / (gn - 1)
                + (N + 1 + 2 * p.omega1) * s / (s * (gn - 1) - gn)
                - f[N - 1]
            )
            qn = gn / (gn - 1)
            pn = (
                (gn - 1) ** 2 / gn * f[N]
                - (N + 1 + mu + omb) * (gn - 1) / gn
                - (mu + om) * (gn - 1)
                + (N + 1 + 2 * p.omega1) * (gn - 1) / (s + (1 - s) * gn)
            )
            rhs = (
                qn * (qn - 1) * pn**2
                + (2 * mu + 2 * p.omega1) * qn * pn
                - (mu + omb) * pn
                - N * (N + 2 * mu + 2 * p.omega1)
            )
            tee[N + 1] = (
                -tee[N] ** 2 / tee[N - 1] * rhs / ((N + mu + om) * (N + mu + omb))
            )
        for n in range(min(N_max, len(tee) - 1) + 1):
            result.table.T[n] = +tee[n]
            result.table.I0[n] = +tee[n]
            result.table.provenance[n] = "tau_l01"
    return result


def run_tau_L14(p: WeightParams, N_max: int, ctx: PrecisionContext) -> RouteResult:
    """Tau-sequence recurrence from the second shift scheme (xi = 0 only)."""
    if p.xi != 0:
        raise ValueError("the L14 scheme requires xi = 0")
    bits = working_bits(ctx, N_max)
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    result = RouteResult(route="TauL14", table=CoefficientTable(N_max))
    with mp.workprec(bits + GUARD_BITS):
        tlog, w0 = _log_dt_w0(p, ctx)
        q0 = (p.omega1 / mu) * (mu + tlog) / (om - tlog)
        g = {0: (q0 - t) / (q0 - 1)}
        f = {
            0: (
                (mu + om) * (q0 - 1)
                + (mu + omb) * (q0 - t)
                - 2 * p.omega1 * (q0 - t) * (q0 - 1) / q0
            )
            / (1 - t)
        }
        tee = {0: mpc(1), 1: to_mpc(w0)}
        floor = mpf(2) ** (-bits // 2)
        for N in range(1, N_max):
            fm = f[N - 1]
            if min(abs(fm), abs(fm - mu - omb)) < floor:
                raise PoleStep(N, "f hit a pole of the g-advance")
            g[N] = (
                t
                * (fm + N)
                * (fm + N - 1 + mu + om)
                / (fm * (fm - mu - omb))
                / g[N - 1]
            )
            gn = g[N]
            if min(abs(gn - 1), abs(gn - t)) < floor:
                raise PoleStep(N, "g hit a pole of the f-advance")
            f[N] = (
                mu
                + omb
                + (N + 2 * mu) / (gn - 1)
                + (N + 2 * p.omega1) * t / (gn - t)
                - f[N - 1]
            )
            qn = (gn - t) / (gn - 1)
            pn = (
                (gn - 1)
                / ((1 - t) * gn)
                * (
                    (gn - 1) * f[N]
                    - (mu + omb) * gn
                    + (N + 2 * p.omega1) * (1 - t) * gn / (gn - t)
                    - N
                    - mu
                    - om
                )
            )
            rhs = (
                qn * (qn - 1) ** 2 * pn**2
                + ((2 * mu - N) * qn + N + 2 * p.omega1) * (qn - 1) * pn
                - 2 * mu * N * qn
                - N * (N + 2 * p.omega1)
            )
            tee[N + 1] = (
                -tee[N] ** 2 / tee[N - 1] * rhs / ((N + mu + om) * (N + mu + omb))
            )
        for n in range(min(N_max, len(tee) - 1) + 1):
            result.table.T[n] = +tee[n]
            result.table.I0[n] = +tee[n]
            result.table.provenance[n] = "tau_l14"
    return result
