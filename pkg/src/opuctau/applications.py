"""Turnkey drivers for the three physical models: moments of CUE
characteristic polynomials, CUE gap-probability generating functions, and
diagonal Ising correlations.

Each driver evaluates every applicable route (model-specific recurrence,
partition series, determinant oracle), cross-validates them entrywise and
returns the per-route values together with a residual summary.  Closed-form
special values (|u| = 1, xi = 0, k in {1, infinity}, infinite temperature)
short-circuit the recurrences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from mpmath import mp, mpc, mpf

from .errors import DomainError, RootAmbiguity
from .genhyp import SeriesControl, f21_general, f21_limit_shell
from .numerics import elliptic_E, elliptic_K, gauss_2f1, pochhammer
from .oracle import MomentSource, build_table_oracle, toeplitz_det
from .precision import GUARD_BITS, PrecisionContext, to_mpc
from .weights import ModelKind, equivalent_params
from .recurrences import working_bits


@dataclass
class ApplicationResult:
    """N-indexed physical values with per-route provenance."""

    model: ModelKind
    values: list
    by_route: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    residual: mpf = field(default_factory=lambda: mpf(0))
    notes: list = field(default_factory=list)

    def cross_residual(self) -> mpf:
        """Max relative deviation between any two successful routes."""
        worst = mpf(0)
        routes = [v for v in self.by_route.values() if v is not None]
        for i in range(len(routes)):
            for j in range(i + 1, len(routes)):
                for a, b in zip(routes[i], routes[j]):
                    if a is None or b is None:
                        continue
                    worst = max(worst, abs(a - b) / max(mpf(1), abs(a)))
        return worst


def _products_from_r(seed1, rprod_terms):
    """Sequence with X_0 = 1, X_1 = seed1 and X_{N+1} X_{N-1} / X_N^2 given."""
    out = [mpc(1), to_mpc(seed1)]
    for fac in rprod_terms:
        out.append(out[-1] ** 2 / out[-2] * fac)
    return out


# ---------------------------------------------------------------------------
# CUE characteristic polynomial moments


def _cue_charpoly_gamma_product(mu, N_max, ctx):
    with ctx.workprec():
        vals = [mpc(1)]
        for n in range(1, N_max + 1):
            v = vals[-1] * mp.factorial(n - 1) * mp.gamma(n + 2 * mu) * mp.rgamma(n + mu) ** 2
            vals.append(+v)
        return vals


def _cue_charpoly_recurrence(x, mu, N_max, ctx):
    """r-sequence from the single quasi-linear recurrence, x = |u|^2."""
    bits = working_bits(ctx, N_max)
    with mp.workprec(bits + GUARD_BITS):
        f1 = gauss_2f1(-mu, -mu, 1, x, ctx)
        r = {0: mpc(1), 1: -mu * gauss_2f1(-mu, -mu + 1, 2, x, ctx) / f1, -1: mpc(0)}
        for N in range(1, N_max):
            fac = 1 - x**N * r[N] ** 2
            lhs = 2 * x**N * r[N] * r[N - 1] - x - 1
            if N == 1:
                second = mpc(0)
            else:
                second = (1 - x ** (N - 1) * r[N - 1] ** 2) / r[N - 1] * (
                    (N + mu) * x * r[N] + (N - 2 + mu) * r[N - 2]
                )
            r[N + 1] = ((lhs + second) * r[N] / fac - (N - 1 + mu) * r[N - 1]) / (
                (N + 1 + mu) * x
            )
        facs = [1 - x**N * r[N] ** 2 for N in range(1, N_max)]
        return [+r[n] for n in range(N_max + 1)], _products_from_r(f1, facs)


def cue_charpoly(
    u,
    mu,
    N_max: int,
    ctx: PrecisionContext,
    routes=("recurrence", "genhyp", "oracle"),
    series_control: SeriesControl | None = None,
) -> ApplicationResult:
    """Moments of |det(u + U)|^{2 mu} over N x N unitaries, N <= N_max."""
    u = to_mpc(u)
    mu = to_mpc(mu)
    if mu.real <= -0.5:
        raise DomainError("requires Re(mu) > -1/2")
    model = ModelKind.cue_charpoly(u, mu)
    absu = abs(u)
    with ctx.workprec():
        if absu == 0:
            vals = [mpc(1)] * (N_max + 1)
            return ApplicationResult(model, vals, {"closed_form": vals}, notes=["u=0"])
        if abs(absu - 1) < mpf(2) ** (-ctx.bits // 2):
            vals = _cue_charpoly_gamma_product(mu, N_max, ctx)
            return ApplicationResult(model, vals, {"gamma_product": vals})
        if absu > 1:
            inner = cue_charpoly(1 / absu, mu, N_max, ctx, routes, series_control)
            vals = [absu ** (2 * mu * n) * v for n, v in enumerate(inner.values)]
            by_route = {
                route: [absu ** (2 * mu * n) * v for n, v in enumerate(rv)]
                for route, rv in inner.by_route.items()
            }
            res = ApplicationResult(model, vals, by_route, notes=["mapped from 1/|u|"])
            res.residual = res.cross_residual()
            return res
        x = absu**2
        by_route = {}
        if "recurrence" in routes:
            rseq, fseq = _cue_charpoly_recurrence(x, mu, N_max, ctx)
            by_route["recurrence"] = fseq[: N_max + 1]
        if "genhyp" in routes:
            ctrl = series_control or SeriesControl()
            vals = [mpc(1)]
            for n in range(1, N_max + 1):
                vals.append(f21_general(-mu, -mu, n, n, x, ctrl, ctx).value)
            by_route["genhyp"] = vals
        if "oracle" in routes:
            src = MomentSource.from_model(model, ctx)
            by_route["oracle"] = [toeplitz_det(src, 0, n, ctx) for n in range(N_max + 1)]
        primary = by_route.get("recurrence") or next(iter(by_route.values()))
        out = ApplicationResult(model, primary, by_route)
        out.residual = out.cross_residual()
        return out


# ---------------------------------------------------------------------------
# CUE gap probabilities


def _gap_x_third_order(phi, xi, N_max, ctx):
    """x_N from the quasi-linear third-order recurrence."""
    bits = working_bits(ctx, N_max)
    with mp.workprec(bits + GUARD_BITS):
        cphi = mp.cos(phi / 2)
        e1 = 1 - xi * phi / (2 * mp.pi)
        x = {-1: mpc(0), 0: mpc(1), 1: -xi / mp.pi * mp.sin(phi / 2) / e1}
        for N in range(1, N_max):
            fac = 1 - x[N] ** 2
            lhs = 2 * x[N] * x[N - 1] - 2 * cphi
            if N == 1:
                second = mpc(0)
            else:
                second = (1 - x[N - 1] ** 2) / x[N - 1] * (N * x[N] + (N - 2) * x[N - 2])
            x[N + 1] = ((lhs + second) * x[N] / fac - (N - 1) * x[N - 1]) / (N + 1)
        return [+x[n] for n in range(N_max + 1)], +to_mpc(e1)


def _gap_x_second_order(phi, xi, N_max, ctx, hint):
    """x_N from the quadratic second-order recurrence with root choice
    steered by the hint sequence."""
    bits = working_bits(ctx, N_max)
    with mp.workprec(bits + GUARD_BITS):
        cphi = mp.cos(phi / 2)
        e1 = 1 - xi * phi / (2 * mp.pi)
        x = {0: mpc(1), 1: -xi / mp.pi * mp.sin(phi / 2) / e1}
        choices = {}
        for N in range(1, N_max):
            f = 1 - x[N] ** 2
            A = f**2 * (N + 1) ** 2
            B = 2 * (N**2 - 1) * (1 - x[N] ** 4) * x[N - 1] + 4 * N * cphi * x[N] * f * (N + 1)
            C = (
                f**2 * (N - 1) ** 2 * x[N - 1] ** 2
                + 4 * N * cphi * x[N] * f * (N - 1) * x[N - 1]
                + 4 * N**2 * x[N] ** 2 * (cphi**2 - x[N] ** 2)
            )
            disc = mp.sqrt(B * B - 4 * A * C)
            roots = ((-B + disc) / (2 * A), (-B - disc) / (2 * A))
            d = [abs(rt - hint[N + 1]) for rt in roots]
            scale = max(abs(roots[0]), abs(roots[1]), mpf(1))
            if abs(d[0] - d[1]) < scale * mpf(2) ** (-bits // 8):
                raise RootAmbiguity(N, roots)
            pick = 0 if d[0] < d[1] else 1
            x[N + 1] = roots[pick]
            choices[N + 1] = pick
        return [+x[n] for n in range(N_max + 1)], choices


def cue_gap(
    phi,
    xi,
    N_max: int,
    ctx: PrecisionContext,
    routes=("xrec3", "xrec2", "oracle"),
) -> ApplicationResult:
    """Generating function E_N for the eigenvalue count on an arc of opening
    angle phi, for N <= N_max."""
    phi = mpf(phi)
    xi = to_mpc(xi)
    if not (0 < phi < 2 * mp.pi):
        raise DomainError("requires 0 < phi < 2 pi")
    model = ModelKind.cue_gap(phi, xi)
    if xi == 0:
        vals = [mpc(1)] * (N_max + 1)
        return ApplicationResult(model, vals, {"closed_form": vals})
    by_route = {}
    extras = {}
    with ctx.workprec():
        xs3 = None
        if "xrec3" in routes:
            xs3, e1 = _gap_x_third_order(phi, xi, N_max, ctx)
            by_route["xrec3"] = _products_from_r(e1, [1 - v**2 for v in xs3[1:N_max]])
            extras["x_xrec3"] = xs3
        if "xrec2" in routes:
            if xs3 is None:
                xs3, e1 = _gap_x_third_order(phi, xi, N_max, ctx)
            xs2, choices = _gap_x_second_order(phi, xi, N_max, ctx, hint=xs3)
            by_route["xrec2"] = _products_from_r(e1, [1 - v**2 for v in xs2[1:N_max]])
            extras["x_xrec2"] = xs2
            extras["root_choices"] = choices
        if "oracle" in routes:
            src = MomentSource.from_model(model, ctx)
            by_route["oracle"] = [toeplitz_det(src, 0, n, ctx) for n in range(N_max + 1)]
        primary = by_route.get("xrec3") or next(iter(by_route.values()))
        out = ApplicationResult(model, primary, by_route)
        out.tables = extras
        out.residual = out.cross_residual()
        return out


def occupancy_probabilities(phi, N: int, ctx: PrecisionContext):
    """Probabilities of finding exactly k eigenvalues on the arc, k <= N.

    E_N is polynomial of degree N in xi; the k-th probability is
    (-1)^k / k! times its k-th xi-derivative at xi = 1, extracted by exact
    polynomial interpolation on an equispaced xi grid.
    """
    phi = mpf(phi)
    with mp.workprec(2 * ctx.bits + GUARD_BITS):
        nodes = [mpf(j) / N for j in range(N + 1)]
        vals = []
        for xi in nodes:
            xs, e1 = _gap_x_third_order(phi, xi, N, ctx) if xi != 0 else (None, mpf(1))
            if xi == 0:
                vals.append(mpc(1))
            else:
                seq = _products_from_r(e1, [1 - v**2 for v in xs[1:N]])
                vals.append(seq[N])
        # interpolate in eta = xi - 1; coefficient c_k of eta^k gives
        # P(k) = (-1)^k c_k
        etas = [x - 1 for x in nodes]
        m = N + 1
        rows = [[eta**k for k in range(m)] for eta in etas]
        coeffs = _solve_linear(rows, vals)
        probs = [(-1) ** k * coeffs[k] for k in range(m)]
        return [+v for v in probs]


def _solve_linear(rows, rhs):
    n = len(rows)
    a = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] * inv
            if f == 0:
                continue
            for c in range(col, n + 1):
                a[r][c] -= f * a[col][c]
    out = [mpc(0)] * n
    for r in range(n - 1, -1, -1):
        acc = a[r][n]
        for c in range(r + 1, n):
            acc -= a[r][c] * out[c]
        out[r] = acc / a[r][r]
    return out


# ---------------------------------------------------------------------------
# Ising diagonal correlations


def _ising_seeds(k, regime, ctx):
    """Elliptic-integral initial reflection coefficients."""
    with ctx.workprec():
        if regime == "low":
            kk = elliptic_K(1 / k, ctx)
            ee = elliptic_E(1 / k, ctx)
            r1 = (2 - k**2) / 3 + (k**2 - 1) / 3 * kk / ee
            rb1 = -1 + (k**2 - 1) / k**2 * kk / ee
        else:
            kk = elliptic_K(k, ctx)
            ee = elliptic_E(k, ctx)
            den = (k**2 - 1) * kk + ee
            r1 = ((2 / k**2) - ee / den) / 3
            rb1 = -(k**2) * ee / den
        return to_mpc(r1), to_mpc(rb1)


def _ising_recurrence(k_eff_sq_inv, r1, rb1, N_max, ctx):
    """The quasi-linear 2/1 + 1/2 pair with coefficient q = k^{-2}."""
    q = k_eff_sq_inv
    bits = working_bits(ctx, N_max)
    with mp.workprec(bits + GUARD_BITS):
        r = {0: mpc(1), 1: to_mpc(r1)}
        rb = {0: mpc(1), 1: to_mpc(rb1)}
        for N in range(1, N_max):
            fac = 1 - r[N] * rb[N]
            r[N + 1] = -(
                2 * N * (q + 1 - (2 * N - 1) * q * r[N] * rb[N - 1]) * r[N]
                + (2 * N - 3) * ((2 * N - 1) * r[N] * rb[N] + 1) * r[N - 1]
            ) / ((2 * N + 3) * q * fac)
            rb[N + 1] = -(
                2 * N * ((2 * N - 3) * rb[N] * r[N - 1] + q + 1) * rb[N]
                + (2 * N - 1) * q * (1 - (2 * N + 1) * r[N] * rb[N]) * rb[N - 1]
            ) / ((2 * N + 1) * fac)
        return (
            [+r[n] for n in range(N_max + 1)],
            [+rb[n] for n in range(N_max + 1)],
        )


def ising_critical_product(N_max: int, ctx: PrecisionContext):
    """Correlation at the critical point: prod_j Gamma(j)^2 /
    (Gamma(j+1/2) Gamma(j-1/2))."""
    with ctx.workprec():
        vals = [mpc(1)]
        for j in range(1, N_max + 1):
            vals.append(
                +(
                    vals[-1]
                    * mp.gamma(j) ** 2
                    * mp.rgamma(j + mpf(1) / 2)
                    * mp.rgamma(j - mpf(1) / 2)
                )
            )
        return vals


def ising_diagonal(
    k,
    regime: str,
    N_max: int,
    ctx: PrecisionContext,
    routes=("recurrence", "genhyp", "oracle"),
    series_control: SeriesControl | None = None,
) -> ApplicationResult:
    """Diagonal spin-spin correlations for N <= N_max.

    regime "low" requires k > 1 (k = +inf allowed), "high" requires k < 1
    (k = 0 treated as infinite temperature).
    """
    if regime not in ("low", "high"):
        raise DomainError("regime must be 'low' or 'high'")
    kq = mpf(k) if k != mp.inf else mp.inf
    if regime == "low" and not kq >= 1:
        raise DomainError("low-temperature regime requires k >= 1")
    if regime == "high" and not (0 <= kq < 1):
        raise DomainError("high-temperature regime requires 0 <= k < 1")
    # closed-form short-circuits
    if regime == "low" and kq == mp.inf:
        model = ModelKind.ising_low(mpf(10) ** 6)
        vals = [mpc(1)] * (N_max + 1)
        return ApplicationResult(model, vals, {"closed_form": vals}, notes=["k=inf"])
    if regime == "high" and kq == 0:
        model = ModelKind.ising_high(mpf(1) / 2)
        vals = [mpc(1)] + [mpc(0)] * N_max
        return ApplicationResult(model, vals, {"closed_form": vals}, notes=["T=inf"])
    if regime == "low" and kq == 1:
        model = ModelKind.ising_low(kq)
        vals = ising_critical_product(N_max, ctx)
        return ApplicationResult(model, vals, {"closed_form": vals}, notes=["k=1"])
    model = ModelKind.ising_low(kq) if regime == "low" else ModelKind.ising_high(kq)
    src = MomentSource.from_model(model, ctx)
    by_route = {}
    extras = {}
    with ctx.workprec():
        w0 = src(0)
        if "recurrence" in routes:
            r1, rb1 = _ising_seeds(kq, regime, ctx)
            q = 1 / kq**2 if regime == "low" else kq**2
            rs, rbs = _ising_recurrence(q, r1, rb1, N_max, ctx)
            by_route["recurrence"] = _products_from_r(
                w0, [1 - rs[n] * rbs[n] for n in range(1, N_max)]
            )
            extras["r"] = rs
            extras["rbar"] = rbs
        if "genhyp" in routes:
            ctrl = series_control or SeriesControl()
            vals = [mpc(1)]
            half = mpf(1) / 2
            for n in range(1, N_max + 1):
                if regime == "low":
                    vals.append(f21_general(-half, half, n, n, 1 / kq**2, ctrl, ctx).value)
                else:
                    pref = (
                        mp.factorial(2 * n - 1)
                        / (mp.factorial(n - 1) * 2 ** (2 * n - 1))
                        / mp.factorial(n)
                        * kq**n
                    )
                    vals.append(
                        pref * f21_general(half, half, n + 1, n, kq**2, ctrl, ctx).value
                    )
            by_route["genhyp"] = vals
        if "oracle" in routes:
            by_route["oracle"] = [toeplitz_det(src, 0, n, ctx) for n in range(N_max + 1)]
        primary = by_route.get("recurrence") or next(iter(by_route.values()))
        out = ApplicationResult(model, primary, by_route)
        out.tables = extras
        out.residual = out.cross_residual()
        return out


def ising_genhyp_reflections(k, regime: str, N: int, ctx: PrecisionContext,
                             series_control: SeriesControl | None = None):
    """(r_N, rbar_N) from the partition-series ratio formulas; the
    low-temperature rbar needs the full-length residue shell."""
    kq = mpf(k)
    ctrl = series_control or SeriesControl()
    half = mpf(1) / 2
    with ctx.workprec():
        if regime == "low":
            x = 1 / kq**2
            den = f21_general(-half, half, N, N, x, ctrl, ctx).value
            num_r = f21_general(-half, mpf(3) / 2, N + 1, N, x, ctrl, ctx).value
            rN = (-1) ** N * pochhammer(-half, N, ctx) / mp.factorial(N) * num_r / den
            num_rb = f21_limit_shell(-half, -half, N - 1, N, x, ctrl, ctx).value
            rbN = (
                (-1) ** N
                * mp.factorial(N - 1)
                / pochhammer(half, N, ctx)
                * num_rb
                / den
            )
        else:
            x = kq**2
            den = f21_general(half, half, N + 1, N, x, ctrl, ctx).value
            num_r = f21_general(half, mpf(3) / 2, N + 2, N, x, ctrl, ctx).value
            rN = (-1) ** N * pochhammer(-half, N, ctx) / mp.factorial(N + 1) * num_r / den
            num_rb = f21_general(half, -half, mpf(N), N, x, ctrl, ctx).value
            rbN = (-1) ** N * mp.factorial(N) / pochhammer(half, N, ctx) * num_rb / den
        return +rN, +rbN


def ising_limit_check(k, N_max: int, ctx: PrecisionContext, burn_in: int = 5):
    """Report |<sigma sigma>_N - (1 - k^{-2})^{1/4}| and whether the approach
    is monotone beyond the burn-in index."""
    kq = mpf(k)
    if not kq > 1:
        raise DomainError("limit check requires k > 1")
    if kq == mp.inf:
        return {"limit": mpf(1), "deviations": [mpf(0)] * (N_max + 1), "monotone": True}
    res = ising_diagonal(kq, "low", N_max, ctx, routes=("recurrence",))
    with ctx.workprec():
        limit = (1 - 1 / kq**2) ** (mpf(1) / 4)
        devs = [abs(v - limit) for v in res.values]
        monotone = all(
            devs[n + 1] <= devs[n] * (1 + mpf("1e-10")) for n in range(burn_in, N_max)
        )
        return {"limit": +limit, "deviations": devs, "monotone": monotone}
