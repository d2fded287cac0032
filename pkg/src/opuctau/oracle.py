"""Ground-truth layer: Toeplitz determinants, reflection coefficients from
determinant ratios, unit-circle orthogonal polynomial evaluation, and the
functional-identity verification suite.

Everything downstream (recurrence routes, tau schemes, partition series) is
cross-checked against this module.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field

from mpmath import mp, mpc, mpf

from .errors import (
    NearSingularWarning,
    NoConvergence,
    SingularPoint,
    SlowConvergence,
    ZeroDeterminant,
)
from .precision import GUARD_BITS, PrecisionContext, to_mpc
from .weights import ModelKind, WeightParams, model_moments, toeplitz_moment, weight_eval


class MomentSource:
    """Memoized n -> w_n provider backing determinants and series.

    When built from WeightParams, only three seed moments come from the
    hypergeometric closed forms; the rest are filled by the exact three-term
    recurrence that follows from the rational log-derivative of the weight
    (the boundary terms vanish because W is zero at every jump point of the
    weight).  Each block extension is validated against a direct closed-form
    evaluation at the farthest new index, escalating the recurrence precision
    on mismatch.
    """

    def __init__(self, fn, params: WeightParams | None = None, label: str = "",
                 ctx: PrecisionContext | None = None):
        self._fn = fn
        self.params = params
        self.label = label
        self.ctx = ctx
        self._cache: dict[int, mpc] = {}
        self._lo = 0
        self._hi = 0
        self._recur = params is not None and ctx is not None and params.t != 0

    @classmethod
    def from_params(cls, p: WeightParams, ctx: PrecisionContext) -> "MomentSource":
        return cls(lambda n: toeplitz_moment(p, n, ctx), params=p, label="weight", ctx=ctx)

    @classmethod
    def from_model(cls, m: ModelKind, ctx: PrecisionContext) -> "MomentSource":
        return cls(lambda n: model_moments(m, n, ctx), params=None, label=m.kind)

    def _drift_bits(self, span: int) -> int:
        t = abs(self.params.t)
        rate = max(mp.log(1 / t, 2), mp.log(t, 2), mpf(0))
        return int(span * rate) + 16

    def _extend(self, lo: int, hi: int) -> None:
        p, ctx = self.params, self.ctx
        mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
        span = max(hi, -lo, 8)
        bits = 2 * ctx.bits + 64 + self._drift_bits(span)
        for _ in range(ctx.max_escalations + 1):
            with mp.workprec(bits):
                w = {n: self._fn(n) for n in (-1, 0, 1)}
                for m in range(1, hi):
                    w[m + 1] = (
                        ((1 + t) * (-m - mu - om) + 2 * p.omega1 + 2 * mu * t) * w[m]
                        + t * (1 - m + mu + omb) * w[m - 1]
                    ) / (m + 1 + mu + om)
                for m in range(-1, lo, -1):
                    w[m - 1] = (
                        (m + 1 + mu + om) * w[m + 1]
                        - ((1 + t) * (-m - mu - om) + 2 * p.omega1 + 2 * mu * t) * w[m]
                    ) / (t * (1 - m + mu + omb))
                ok = True
                for edge in (min(hi, 48), max(lo, -48)):
                    if abs(edge) < 2:
                        continue
                    direct = self._fn(edge)
                    err = abs(w[edge] - direct) / max(mpf(1), abs(direct))
                    if err > mpf(2) ** (-2 * ctx.bits):
                        ok = False
                        break
            if ok:
                self._cache.update(w)
                self._lo, self._hi = lo, hi
                return
            bits *= 2
        raise NoConvergence("moment recurrence failed endpoint validation")

    def __call__(self, n: int) -> mpc:
        if n in self._cache:
            return self._cache[n]
        if not self._recur:
            self._cache[n] = self._fn(n)
            return self._cache[n]
        lo = min(self._lo, -8, 2 * n if n < 0 else 0)
        hi = max(self._hi, 8, 2 * n if n > 0 else 0)
        self._extend(lo, hi)
        return self._cache[n]


def _lu_det(rows: list[list[mpc]], pivot_floor) -> mpc:
    """In-place LU with partial pivoting; warns when a pivot is tiny."""
    n = len(rows)
    det = mpc(1)
    for col in range(n):
        piv, piv_abs = col, abs(rows[col][col])
        for r in range(col + 1, n):
            a = abs(rows[r][col])
            if a > piv_abs:
                piv, piv_abs = r, a
        if piv_abs == 0:
            return mpc(0)
        if piv_abs < pivot_floor:
            warnings.warn(
                f"pivot {piv_abs} below reporting floor at column {col}",
                NearSingularWarning,
                stacklevel=3,
            )
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            det = -det
        det *= rows[col][col]
        inv = 1 / rows[col][col]
        for r in range(col + 1, n):
            f = rows[r][col] * inv
            if f == 0:
                continue
            row_r, row_c = rows[r], rows[col]
            for c in range(col + 1, n):
                row_r[c] -= f * row_c[c]
    return det


def toeplitz_det(src: MomentSource, eps: int, n: int, ctx: PrecisionContext) -> mpc:
    """I^eps_n = det[w_{-eps+j-k}], 0 <= j,k <= n-1 (empty determinant = 1)."""
    if eps not in (-1, 0, 1):
        raise ValueError("eps must be -1, 0 or 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return mpc(1)
    with ctx.workprec():
        rows = [[src(-eps + j - k) for k in range(n)] for j in range(n)]
        scale = max(abs(src(-eps + d)) for d in range(-(n - 1), n))
        floor = mpf(2) ** (-ctx.bits // 2) * max(scale, mpf(1))
        return +_lu_det(rows, floor)


def det_cofactor(src: MomentSource, eps: int, n: int) -> mpc:
    """Cofactor-expansion determinant; independent cross-check for small n."""
    mat = [[src(-eps + j - k) for k in range(n)] for j in range(n)]

    def rec(rows, cols):
        if not rows:
            return mpc(1)
        r0 = rows[0]
        total = mpc(0)
        for i, c in enumerate(cols):
            minor = rec(rows[1:], cols[:i] + cols[i + 1 :])
            term = mat[r0][c] * minor
            total += term if i % 2 == 0 else -term
        return total

    return rec(list(range(n)), list(range(n)))


def reflection_from_dets(src: MomentSource, n: int, ctx: PrecisionContext):
    """(r_n, rbar_n) = ((-1)^n I^1_n / I^0_n, (-1)^n I^-1_n / I^0_n)."""
    i0 = toeplitz_det(src, 0, n, ctx)
    if i0 == 0:
        raise ZeroDeterminant(f"I^0_{n} = 0")
    sign = -1 if n % 2 else 1
    return (
        sign * toeplitz_det(src, 1, n, ctx) / i0,
        sign * toeplitz_det(src, -1, n, ctx) / i0,
    )


@dataclass
class CoefficientTable:
    """Shared ledger of per-index data all routes read and write.

    Entries are None until filled; ``provenance[n]`` records which route
    produced index n.
    """

    N_max: int
    r: list = field(default_factory=list)
    rbar: list = field(default_factory=list)
    kappa: list = field(default_factory=list)
    l: list = field(default_factory=list)
    lbar: list = field(default_factory=list)
    m: list = field(default_factory=list)
    I0: list = field(default_factory=list)
    T: list = field(default_factory=list)
    provenance: list = field(default_factory=list)

    def __post_init__(self):
        size = self.N_max + 1
        for name in ("r", "rbar", "kappa", "l", "lbar", "m", "I0", "T"):
            if not getattr(self, name):
                setattr(self, name, [None] * size)
        if not self.provenance:
            self.provenance = [None] * size

    def filled_range(self) -> int:
        """Largest N with r, rbar filled for all n <= N."""
        n = 0
        while n + 1 <= self.N_max and self.r[n + 1] is not None and self.rbar[n + 1] is not None:
            n += 1
        return n


def fill_leading_coefficients(table: CoefficientTable) -> None:
    """Fill l, lbar, m from the reflection coefficients via the Szego sums.

    l_n / kappa_n = sum_{j<n} r_{j+1} rbar_j,
    lbar_n / kappa_n = sum_{j<n} rbar_{j+1} r_j,
    m_n / kappa_n = sum_{1<=j<n} r_{j+1} (rbar_{j-1} + rbar_j l_{j-1}/kappa_{j-1});
    the empty sums make l_0 = lbar_0 = m_0 = m_1 = 0.
    """
    nmax = table.filled_range()
    s = mpc(0)
    sbar = mpc(0)
    lk = [mpc(0)]
    for n in range(1, nmax + 1):
        s += table.r[n] * table.rbar[n - 1]
        sbar += table.rbar[n] * table.r[n - 1]
        lk.append(s)
        if table.kappa[n] is not None:
            table.l[n] = s * table.kappa[n]
            table.lbar[n] = sbar * table.kappa[n]
    if table.kappa[0] is not None:
        table.l[0] = mpc(0)
        table.lbar[0] = mpc(0)
        table.m[0] = mpc(0)
    msum = mpc(0)
    for n in range(1, nmax + 1):
        if n >= 2:
            msum += table.r[n] * (table.rbar[n - 2] + table.rbar[n - 1] * lk[n - 2])
        if table.kappa[n] is not None:
            table.m[n] = msum * table.kappa[n]


def build_table_oracle(src: MomentSource, N_max: int, ctx: PrecisionContext) -> CoefficientTable:
    """Fill a table from Toeplitz determinants (the ground-truth route)."""
    table = CoefficientTable(N_max)
    with ctx.workprec():
        i0 = [toeplitz_det(src, 0, n, ctx) for n in range(N_max + 2)]
        for n in range(N_max + 1):
            if i0[n] == 0:
                raise ZeroDeterminant(f"I^0_{n} = 0")
            sign = -1 if n % 2 else 1
            table.I0[n] = i0[n]
            table.T[n] = i0[n]
            table.r[n] = sign * toeplitz_det(src, 1, n, ctx) / i0[n]
            table.rbar[n] = sign * toeplitz_det(src, -1, n, ctx) / i0[n]
            table.kappa[n] = mp.sqrt(i0[n] / i0[n + 1])
            table.provenance[n] = "oracle"
        fill_leading_coefficients(table)
    return table


# ---------------------------------------------------------------------------
# Tanh-sinh quadrature over the circle, split at the singular angles.


class CircleQuadrature:
    """Cached tanh-sinh panels for integrals of kernel(theta) * w(e^{i theta}).

    Panels split at the weight's singular angles so every endpoint
    singularity is crushed by the double-exponential substitution.  The node
    set and the weight values at the nodes are computed once and reused for
    every integrand; integrate() reports a (value, error_estimate) pair, the
    estimate coming from dropping to the half-density node subset.
    """

    def __init__(self, p: WeightParams, prec: int, max_level: int = 14, probes=()):
        self.p = p
        self.prec = prec
        self.max_level = max_level
        # Cauchy-kernel probes steer the level choice; the defaults cover the
        # |z| in {0.3, 0.7, 1.4} bands the identity checks use.
        self.probes = [to_mpc(z) for z in probes] or [mpc("0.72"), mpc(0, "1.38")]
        with mp.workprec(prec + GUARD_BITS):
            self._build()

    def _singular_angles(self):
        p = self.p
        angles = {mp.pi, -mp.pi}
        if p.t != 0 and abs(abs(p.t) - 1) < mpf("1e-12"):
            a = mp.arg(-1 / p.t)
            angles.add(a)
        if p.xi != 0:
            angles.add(mp.pi - p.phi)
        return sorted(angles)

    def _build(self):
        prec = mp.prec
        target = mpf(2) ** (-self.prec)
        splits = self._singular_angles()
        panels = [(splits[i], splits[i + 1]) for i in range(len(splits) - 1)]
        panels = [(a, b) for a, b in panels if b - a > mpf(2) ** (-prec // 2)]
        S = mp.asinh(2 * prec * mp.log(2) / mp.pi) + mpf(1) / 2

        level = 6
        while True:
            h = S / (1 << level)
            nodes = []
            for a, b in panels:
                mid = (a + b) / 2
                half = (b - a) / 2
                j = -(1 << level)
                while j <= (1 << level):
                    s = j * h
                    sh = mp.pi / 2 * mp.sinh(s)
                    x = mp.tanh(sh)
                    dx = h * (mp.pi / 2) * mp.cosh(s) / mp.cosh(sh) ** 2
                    theta = mid + half * x
                    if abs(x) < 1:
                        nodes.append((theta, half * dx, j % 2 == 0))
                    j += 1
            wvals = []
            ok = True
            for theta, qw, _even in nodes:
                try:
                    wv = weight_eval(self.p, mp.expj(theta))
                except SingularPoint:
                    wv = mpc(0)
                if not mp.isfinite(abs(wv)):
                    wv = mpc(0)
                wvals.append(wv)
            kernels = [lambda zeta: mpc(1)] + [
                (lambda zeta, c=c: (zeta + c) / (zeta - c)) for c in self.probes
            ]
            zv = [mp.expj(theta) for theta, _, _ in nodes]
            worst = mpf(0)
            for ker in kernels:
                full = mpc(0)
                halfsum = mpc(0)
                for (theta, qw, even), wv, z in zip(nodes, wvals, zv):
                    if wv == 0:
                        continue
                    term = qw * wv * ker(z)
                    full += term
                    if even:
                        halfsum += 2 * term
                worst = max(worst, abs(full - halfsum) / max(1, abs(full)))
            if worst < target or level >= self.max_level:
                break
            level += 1
        self.level = level
        self.nodes = [(theta, qw, even) for (theta, qw, even) in nodes]
        self.wvals = wvals
        self.zvals = zv

    def integrate(self, kernel):
        """(1/2pi) * integral of kernel(zeta) * w(zeta) dtheta with error est.

        ``kernel`` maps the node point zeta (on the circle) to a scalar.
        """
        with mp.workprec(self.prec + GUARD_BITS):
            full = mpc(0)
            halfsum = mpc(0)
            for (theta, qw, even), wv, zv in zip(self.nodes, self.wvals, self.zvals):
                if wv == 0:
                    continue
                term = qw * wv * kernel(zv)
                full += term
                if even:
                    halfsum += 2 * term
            value = full / (2 * mp.pi)
            return +value, abs(full - halfsum) / (2 * mp.pi)

    def integrate_many(self, kernels):
        """Accumulate several kernels in one pass over the node set."""
        with mp.workprec(self.prec + GUARD_BITS):
            m = len(kernels)
            full = [mpc(0)] * m
            halfsum = [mpc(0)] * m
            for (theta, qw, even), wv, zv in zip(self.nodes, self.wvals, self.zvals):
                if wv == 0:
                    continue
                base = qw * wv
                for i, ker in enumerate(kernels):
                    term = base * ker(zv)
                    full[i] += term
                    if even:
                        halfsum[i] += 2 * term
            twopi = 2 * mp.pi
            return [
                (+(f / twopi), abs(f - g) / twopi) for f, g in zip(full, halfsum)
            ]

    def moment(self, n: int):
        """Quadrature value of w_n (test oracle for the closed forms)."""
        val, err = self.integrate(lambda z: z ** (-n))
        return val, err


def caratheodory(src: MomentSource, z, ctx: PrecisionContext) -> mpc:
    """Moment generating function:
    1 + 2 sum w_k z^k inside, -1 - 2 sum w_{-k} z^{-k} outside.

    The constant terms use w_0-normalized conventions of the source weight:
    F(0) = w_0 and the expansions carry w_0 in place of 1 when w_0 != 1.
    """
    z = to_mpc(z)
    az = abs(z)
    if abs(az - 1) < mpf("1e-3"):
        raise SlowConvergence("|z| within 1e-3 of the unit circle")
    with ctx.workprec():
        tol = mpf(2) ** (-ctx.bits - 16)
        if az < 1:
            total = src(0)
            k = 1
            while True:
                term = 2 * src(k) * z**k
                total += term
                if abs(term) < tol * max(1, abs(total)) and k > 4:
                    break
                k += 1
                if k > 100000:
                    raise SlowConvergence("series did not reach tolerance")
        else:
            total = -src(0)
            k = 1
            while True:
                term = -2 * src(-k) * z ** (-k)
                total += term
                if abs(term) < tol * max(1, abs(total)) and k > 4:
                    break
                k += 1
                if k > 100000:
                    raise SlowConvergence("series did not reach tolerance")
        return +total


@dataclass
class OpucEval:
    """Polynomials, bar-polynomials and associated functions at a point z.

    eps[0] stores the integral-convention value kappa_0 * F(z); the
    recurrences are only guaranteed to link eps[n] for n >= 1 (the n = 0
    member differs from the polynomial-plus-F convention by a constant, a
    known convention clash that this layer records rather than resolves).
    """

    z: mpc
    F: mpc
    phi: list
    phistar: list
    barphi: list
    barphistar: list
    eps: list
    epsstar: list
    quad_errors: dict


def _phi_at(table: CoefficientTable, z, n_top: int):
    """phi_n(z), phistar_n(z) for n <= n_top from the coupled recurrence."""
    phi = [to_mpc(table.kappa[0])]
    phis = [to_mpc(table.kappa[0])]
    for n in range(n_top):
        k_n, k_n1 = table.kappa[n], table.kappa[n + 1]
        phi0 = k_n1 * table.r[n + 1]
        phib0 = k_n1 * table.rbar[n + 1]
        phi.append((k_n1 * z * phi[n] + phi0 * phis[n]) / k_n)
        phis.append((k_n1 * phis[n] + phib0 * z * phi[n]) / k_n)
    return phi, phis


def _barphi_at(table: CoefficientTable, y, n_top: int):
    """Bar-system polynomials chi_n(y), chi*_n(y) (r and rbar exchanged)."""
    chi = [to_mpc(table.kappa[0])]
    chis = [to_mpc(table.kappa[0])]
    for n in range(n_top):
        k_n, k_n1 = table.kappa[n], table.kappa[n + 1]
        chi.append((k_n1 * y * chi[n] + k_n1 * table.rbar[n + 1] * chis[n]) / k_n)
        chis.append((k_n1 * chis[n] + k_n1 * table.r[n + 1] * y * chi[n]) / k_n)
    return chi, chis


def _poly_coeffs(table: CoefficientTable, n_top: int):
    """Coefficient lists of phi_n and phistar_n for n <= n_top."""
    k = table.kappa
    c = [[to_mpc(k[0])]]
    cs = [[to_mpc(k[0])]]
    for n in range(n_top):
        r1 = k[n + 1] * table.r[n + 1]
        rb1 = k[n + 1] * table.rbar[n + 1]
        nxt = [mpc(0)] + [k[n + 1] * v for v in c[n]]
        for j, v in enumerate(cs[n]):
            nxt[j] += r1 * v
        nxts = [k[n + 1] * v for v in cs[n]] + [mpc(0)]
        for j, v in enumerate(c[n]):
            nxts[j + 1] += rb1 * v
        c.append([v / k[n] for v in nxt])
        cs.append([v / k[n] for v in nxts])
    return c, cs


def _eps_base_series(src: MomentSource, table: CoefficientTable, z, prec: int):
    """F(z) and the n = 1, 2 associated functions from the Fourier expansion
    of the Cauchy kernel against the cached moments (geometric convergence
    for |z| away from the circle)."""
    with mp.workprec(prec + GUARD_BITS):
        z = to_mpc(z)
        az = abs(z)
        inside = az < 1
        zz = z if inside else 1 / z
        c, cs = _poly_coeffs(table, 2)

        def mom(fam, kk):
            # integral of zeta^{-kk} * w * poly over the circle
            return fsumprod(fam, kk)

        def fsumprod(coeffs, kk):
            total = mpc(0)
            for j, v in enumerate(coeffs):
                total += v * src(kk - j)
            return total

        targets = [[mpc(1)], c[1], cs[1], c[2], cs[2]]
        sgn = 1 if inside else -1
        acc = [sgn * fsumprod(f, 0) for f in targets]
        tol = mpf(2) ** (-prec - 8)
        quiet = 0
        k = 1
        zpow = mpc(1)
        while True:
            zpow *= zz
            kk = k if inside else -k
            small = True
            for i, f in enumerate(targets):
                term = sgn * 2 * zpow * fsumprod(f, kk)
                acc[i] += term
                if abs(term) > tol * max(1, abs(acc[i])):
                    small = False
            quiet = quiet + 1 if small else 0
            if quiet >= 3 and k >= 8:
                break
            k += 1
            if k > 200000:
                raise SlowConvergence("kernel series did not converge")
        F = acc[0]
        eps1, eps2 = acc[1], acc[3]
        epss1 = 1 / table.kappa[1] - acc[2]
        epss2 = 1 / table.kappa[2] - acc[4]
        return F, eps1, epss1, eps2, epss2


def opuc_eval(
    p: WeightParams,
    table: CoefficientTable,
    z,
    ctx: PrecisionContext,
    quad: CircleQuadrature | None = None,
    n_top: int | None = None,
    src: MomentSource | None = None,
    prec: int | None = None,
) -> OpucEval:
    """Evaluate the orthogonal-polynomial system at z.

    phi, phistar come from the coupled recurrence seeded at kappa_0.  The
    associated functions are seeded at n = 1, 2 from their integral
    definition - through the kernel Fourier series against the closed-form
    moments by default, or by panel quadrature when one is supplied or z is
    too close to the circle - and propagated upward by their recurrence.
    """
    z = to_mpc(z)
    if abs(abs(z) - 1) < mpf("1e-6"):
        raise SingularPoint("associated functions need |z| != 1")
    if n_top is None:
        n_top = table.filled_range()
    if prec is None:
        prec = ctx.bits
    use_quad = quad is not None or abs(abs(z) - 1) < mpf("0.2")
    with mp.workprec(prec + GUARD_BITS):
        phi, phis = _phi_at(table, z, n_top)
        barphi, barphis = _barphi_at(table, z, n_top)
        if use_quad:
            if quad is None:
                quad = CircleQuadrature(p, prec, probes=(z,))

            def kernel(zeta):
                return (zeta + z) / (zeta - z)

            kernels = [lambda zeta: kernel(zeta)]
            for n in (1, 2):
                kernels.append(lambda zeta, n=n: kernel(zeta) * _phi_at(table, zeta, n)[0][n])
                kernels.append(lambda zeta, n=n: kernel(zeta) * _phi_at(table, zeta, n)[1][n])
            vals = quad.integrate_many(kernels)
            F = vals[0][0]
            e1, e2 = vals[1][0], vals[3][0]
            es1 = 1 / table.kappa[1] - vals[2][0]
            es2 = 1 / table.kappa[2] - vals[4][0]
            qerr = {"F": vals[0][1], "eps": max(v[1] for v in vals[1:])}
        else:
            if src is None:
                src = MomentSource.from_params(p, ctx)
            F, e1, es1, e2, es2 = _eps_base_series(src, table, z, prec)
            qerr = {}
        eps = [None] * (n_top + 1)
        epss = [None] * (n_top + 1)
        eps[0] = table.kappa[0] * F
        epss[0] = 1 / table.kappa[0] - F * table.kappa[0]
        if n_top >= 1:
            eps[1] = e1
            epss[1] = es1
        if n_top >= 2:
            eps[2] = e2
            epss[2] = es2
        for n in range(2, n_top):
            k_n, k_n1 = table.kappa[n], table.kappa[n + 1]
            phi0 = k_n1 * table.r[n + 1]
            phib0 = k_n1 * table.rbar[n + 1]
            eps[n + 1] = (k_n1 * z * eps[n] - phi0 * epss[n]) / k_n
            epss[n + 1] = (k_n1 * epss[n] - phib0 * z * eps[n]) / k_n
        return OpucEval(
            z=+z,
            F=+F,
            phi=[+v for v in phi],
            phistar=[+v for v in phis],
            barphi=[+v for v in barphi],
            barphistar=[+v for v in barphis],
            eps=[None if v is None else +v for v in eps],
            epsstar=[None if v is None else +v for v in epss],
            quad_errors=qerr,
        )


# ---------------------------------------------------------------------------
# Coefficient functions of the spectral-derivative system (three-singularity
# weight): polynomials of degree 1, 1, 2, 2.


def weight_W(p: WeightParams, z):
    """W(z) = z (1+z) (1+tz) / t, vanishing at the singular points."""
    z = to_mpc(z)
    return z * (1 + z) * (1 + p.t * z) / p.t


def weight_V(p: WeightParams, z):
    """V(z) with 2 V / W the logarithmic derivative of the weight."""
    z = to_mpc(z)
    return (
        -(p.mu + p.omega) * (1 + z) * (1 + p.t * z)
        + 2 * p.omega1 * z * (1 + p.t * z)
        + 2 * p.mu * p.t * z * (1 + z)
    ) / (2 * p.t)


def coefficient_functions(p: WeightParams, table: CoefficientTable, N: int, z, ctx: PrecisionContext):
    """(Theta_N, ThetaStar_N, Omega_N, OmegaStar_N) evaluated at z."""
    z = to_mpc(z)
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    need = N + 2
    if table.filled_range() < need or table.l[N + 1] is None:
        raise ValueError(f"table must be filled through N+2 = {need}")
    k = table.kappa
    r = table.r
    rb = table.rbar
    with ctx.workprec():
        ratio = k[N] / k[N + 1]
        theta = ratio * ((N + 1 + mu + omb) * z - r[N] / r[N + 1] * (N + mu + om) / t)
        thetastar = ratio * (
            -rb[N] / rb[N + 1] * (N + mu + omb) * z + (N + 1 + mu + om) / t
        )
        lk1 = table.l[N + 1] / k[N + 1]
        omega = (
            (1 + (mu + omb) / 2) * z**2
            + (
                (N + 2 + mu + omb) * (1 - r[N + 1] * rb[N + 1]) * r[N + 2] / r[N + 1]
                - lk1
                + (1 + (mu + omb) / 2) * (1 + t) / t
                - p.omega1
                - mu / t
            )
            * z
            - (N + (mu + om) / 2) / t
        )
        omegastar = (
            -(mu + omb) / 2 * z**2
            + (
                lk1
                - (N + mu + omb) * (1 - r[N + 1] * rb[N + 1]) * rb[N] / rb[N + 1]
                - (mu + omb) / 2 * (1 + t) / t
                + p.omega1
                + mu / t
            )
            * z
            + (N + 1 + (mu + om) / 2) / t
        )
        return +theta, +thetastar, +omega, +omegastar


def sample_points(seed: int, count: int = 8):
    """Deterministic pseudo-random check points with |z| in {0.3, 0.7, 1.4}."""
    rng = random.Random(seed)
    radii = [mpf("0.3"), mpf("0.7"), mpf("1.4")]
    pts = []
    for i in range(count):
        angle = mpf(rng.random()) * 2 * mp.pi
        pts.append(radii[i % 3] * mp.expj(angle))
    return pts


@dataclass
class IdentityReport:
    """Per-identity maximal residuals from the verification suite."""

    residuals: dict
    details: dict = field(default_factory=dict)

    def max_residual(self) -> mpf:
        vals = [v for v in self.residuals.values() if v is not None]
        return max(vals) if vals else mpf(0)

    def rows(self):
        return sorted(self.residuals.items())


def _rel(x, scale=1):
    return abs(x) / max(mpf(1), abs(scale))


def verify_identity_suite(
    p: WeightParams,
    N_max: int,
    sample_seed_or_points,
    ctx: PrecisionContext,
    table: CoefficientTable | None = None,
    fd_step=None,
) -> IdentityReport:
    """Numerically verify the functional identities of the coefficient
    functions, spectral derivatives, Casoratians, kernel sums, bilinear
    evaluations at the singular points and the deformation derivative of the
    reflection coefficients.

    Residuals are maxima over n <= N_max and over the sample points.
    """
    if isinstance(sample_seed_or_points, int):
        pts = sample_points(sample_seed_or_points)
    else:
        pts = [to_mpc(z) for z in sample_seed_or_points]
    src = MomentSource.from_params(p, ctx)
    if table is None:
        table = build_table_oracle(src, N_max + 3, ctx)
    res: dict = {}
    det: dict = {}

    def bump(label, value, scale=1):
        v = _rel(value, scale)
        if label not in res or v > res[label]:
            res[label] = v

    eval_bits = min(
        ctx.bits + GUARD_BITS,
        max(256, int(-mp.log(mpf(ctx.tol), 2)) + ctx.bits // 4 + 64),
    )
    with mp.workprec(eval_bits + GUARD_BITS):
        k = table.kappa
        r = table.r
        rb = table.rbar
        t = p.t
        mu, om, omb = p.mu, p.omega, p.omegabar

        floor = mpf(2) ** (-ctx.bits // 2)

        def usable(*idx):
            return all(
                abs(r[i]) > floor and abs(rb[i]) > floor for i in idx if i <= table.N_max
            )

        def cfun(n, z):
            return coefficient_functions(p, table, n, z, ctx)

        # --- coefficient-function recurrences at the sample points
        for z in pts:
            Wz = weight_W(p, z)
            Vz = weight_V(p, z)
            cf = {}
            for n in range(0, N_max + 2):
                try:
                    cf[n] = cfun(n, z)
                except ZeroDivisionError:
                    pass
            for n in range(1, N_max):
                if not usable(n - 1, n, n + 1, n + 2) or any(
                    m not in cf for m in (n - 1, n, n + 1)
                ):
                    continue
                Th_n, Ts_n, Om_n, Os_n = cf[n]
                Th_n1, Ts_n1, Om_n1, Os_n1 = cf[n + 1]
                Th_nm, Ts_nm, Om_nm, Os_nm = cf[n - 1]
                rat = lambda j: k[j + 1] * r[j + 1] / (k[j] * r[j])  # phi_{j+1}(0)/phi_j(0)
                ratb = lambda j: k[j + 1] * rb[j + 1] / (k[j] * rb[j])
                bump("ops_rrCf:a", Om_n + Om_nm - (rat(n) + k[n + 1] / k[n] * z) * Th_n + (n - 1) * Wz / z, Om_n)
                bump(
                    "ops_rrCf:b",
                    (rat(n) + k[n + 1] / k[n] * z) * (Om_nm - Om_n)
                    + k[n] * r[n + 2] * k[n + 2] / (k[n + 1] * k[n + 1] * r[n + 1]) * z * Th_n1
                    - k[n - 1] * r[n + 1] * k[n + 1] / (k[n] * k[n] * r[n]) * z * Th_nm
                    - rat(n) * Wz / z,
                    Om_n,
                )
                bump("ops_rrCf:c", Os_n + Os_nm - (k[n + 1] / k[n] + ratb(n) * z) * Ts_n - n * Wz / z, Os_n)
                bump(
                    "ops_rrCf:d",
                    (k[n + 1] / k[n] + ratb(n) * z) * (Os_nm - Os_n)
                    + k[n] * rb[n + 2] * k[n + 2] / (k[n + 1] * k[n + 1] * rb[n + 1]) * z * Ts_n1
                    - k[n - 1] * rb[n + 1] * k[n + 1] / (k[n] * k[n] * rb[n]) * z * Ts_nm
                    + k[n + 1] / k[n] * Wz / z,
                    Os_n,
                )
                bump(
                    "ops_rrCf:e",
                    Om_n1 + Os_n - (rat(n + 1) + k[n + 2] / k[n + 1] * z) * Th_n1
                    + k[n + 1] / k[n] * (z * Th_n - Ts_n),
                    Om_n1,
                )
                bump(
                    "ops_rrCf:f",
                    Om_n - Om_n1
                    + k[n + 2] / k[n + 1] * (z + rb[n + 1] * r[n + 2]) * Th_n1
                    + k[n + 1] * r[n + 1] * rb[n + 1] / k[n] * Ts_n
                    - k[n + 1] / k[n] * z * Th_n
                    - Wz / z,
                    Om_n,
                )
                bump(
                    "ops_rrCf:g",
                    Os_n1 + Om_n - (k[n + 2] / k[n + 1] + ratb(n + 1) * z) * Ts_n1
                    - k[n + 1] / k[n] * (z * Th_n - Ts_n) - Wz / z,
                    Os_n1,
                )
                bump(
                    "ops_rrCf:h",
                    Os_n - Os_n1
                    + k[n + 2] / k[n + 1] * (1 + r[n + 1] * rb[n + 2] * z) * Ts_n1
                    + k[n + 1] * r[n + 1] * rb[n + 1] / k[n] * z * Th_n
                    - k[n + 1] / k[n] * Ts_n,
                    Os_n,
                )
                bump(
                    "ops_rrCf:i",
                    rat(n) * Th_n - k[n] / k[n - 1] * z * Th_nm
                    - ratb(n) * z * Ts_n + k[n] / k[n - 1] * Ts_nm,
                    Th_n,
                )
                bump(
                    "ops_rrCf:j",
                    Os_n - Om_n + k[n + 1] / k[n] * (z * Th_n - Ts_n) - n * Wz / z,
                    Om_n,
                )
                bump(
                    "ops_rrCf:k",
                    Os_n + Om_n
                    - (1 - r[n + 1] * rb[n + 1]) * (rat(n + 1) * Th_n1 + k[n + 1] / k[n] * Ts_n)
                    - Wz / z,
                    Om_n,
                )

        # --- spectral derivatives, Casoratians and kernel sums
        h = mpf(2) ** (-(ctx.bits // 4))
        n_eval = min(N_max, table.filled_range() - 1)
        for z in pts:
            evc = opuc_eval(p, table, z, ctx, n_top=n_eval + 1, src=src, prec=eval_bits)
            evp = opuc_eval(p, table, z + h, ctx, n_top=n_eval + 1, src=src, prec=eval_bits)
            evm = opuc_eval(p, table, z - h, ctx, n_top=n_eval + 1, src=src, prec=eval_bits)
            Wz = weight_W(p, z)
            Vz = weight_V(p, z)
            for n in range(1, n_eval):
                if not usable(n, n + 1, n + 2):
                    continue
                Th, Ts, Om, Os = cfun(n, z)
                dphi = (evp.phi[n] - evm.phi[n]) / (2 * h)
                dphis = (evp.phistar[n] - evm.phistar[n]) / (2 * h)
                deps = (evp.eps[n] - evm.eps[n]) / (2 * h)
                depss = (evp.epsstar[n] - evm.epsstar[n]) / (2 * h)
                sc = max(mpf(1), abs(Wz * dphi))
                bump("ops_zD:a", Wz * dphi - Th * evc.phi[n + 1] + (Om + Vz) * evc.phi[n], sc)
                bump("ops_zD:c", Wz * dphis + Ts * evc.phistar[n + 1] - (Os - Vz) * evc.phistar[n], sc)
                bump("ops_zD:b", Wz * deps - Th * evc.eps[n + 1] + (Om - Vz) * evc.eps[n], sc)
                bump("ops_zD:d", Wz * depss + Ts * evc.epsstar[n + 1] - (Os + Vz) * evc.epsstar[n], sc)
            for n in range(1, n_eval):
                ph10 = k[n + 1] * r[n + 1]
                phb10 = k[n + 1] * rb[n + 1]
                bump(
                    "ops_Cas:a",
                    evc.phi[n + 1] * evc.eps[n] - evc.eps[n + 1] * evc.phi[n] - 2 * ph10 / k[n] * z**n,
                    z**n,
                )
                bump(
                    "ops_Cas:b",
                    evc.phistar[n + 1] * evc.epsstar[n]
                    - evc.epsstar[n + 1] * evc.phistar[n]
                    - 2 * phb10 / k[n] * z ** (n + 1),
                    z**n,
                )
                bump(
                    "ops_Cas:c",
                    evc.phi[n] * evc.epsstar[n] + evc.eps[n] * evc.phistar[n] - 2 * z**n,
                    z**n,
                )

        # --- kernel summation identities at sample pairs
        for i in range(len(pts) - 1):
            z, y = pts[i], pts[i + 1]
            if abs(z * y - 1) < mpf("1e-6"):
                continue
            top = min(N_max, table.filled_range())
            phz, phzs = _phi_at(table, z, top)
            chy, chys = _barphi_at(table, y, top)
            acc = mpc(0)
            for n in range(0, top):
                acc += phz[n] * chy[n]
                rhs_a = (phzs[n] * chys[n] - z * y * phz[n] * chy[n]) / (1 - z * y)
                rhs_b = (phzs[n + 1] * chys[n + 1] - phz[n + 1] * chy[n + 1]) / (1 - z * y)
                bump("ops_CD:a", acc - rhs_a, acc)
                bump("ops_CD:b", acc - rhs_b, acc)

        # --- bilinear identities at the singular points z = -1, -1/t
        for zj in (mpc(-1), -1 / t):
            Vj = weight_V(p, zj)
            cfj = {}
            for n in range(0, N_max + 2):
                try:
                    cfj[n] = cfun(n, zj)
                except ZeroDivisionError:
                    pass
            for n in range(1, N_max):
                if not usable(n - 1, n, n + 1, n + 2) or any(
                    m not in cfj for m in (n - 1, n, n + 1)
                ):
                    continue
                Th, Ts, Om, Os = cfj[n]
                Th1, Ts1, Om1, Os1 = cfj[n + 1]
                Thm, Tsm, Omm, Osm = cfj[n - 1]
                sc = max(mpf(1), abs(Vj) ** 2, abs(Om) ** 2)
                bump(
                    "ops_OTeq:a",
                    Om**2 - k[n] * r[n + 2] * k[n + 2] / (k[n + 1] ** 2 * r[n + 1]) * zj * Th * Th1 - Vj**2,
                    sc,
                )
                bump(
                    "ops_OTeq:b",
                    Os**2 - k[n] * rb[n + 2] * k[n + 2] / (k[n + 1] ** 2 * rb[n + 1]) * zj * Ts * Ts1 - Vj**2,
                    sc,
                )
                # product term carries kappa_{n-1}/kappa_n, mirroring the d form
                bump(
                    "ops_OTeq:c",
                    (Omm - k[n - 1] ** 2 * k[n + 1] * r[n + 1] / (k[n] ** 3 * r[n]) * Th) ** 2
                    - k[n - 1] * k[n + 1] * r[n + 1] * rb[n] / k[n] ** 2 * Th * Tsm
                    - Vj**2,
                    sc,
                )
                bump(
                    "ops_OTeq:d",
                    (Osm - k[n - 1] ** 2 * k[n + 1] * rb[n + 1] / (k[n] ** 3 * rb[n]) * zj * Ts) ** 2
                    - k[n - 1] * k[n + 1] * rb[n + 1] * r[n] / k[n] ** 2 * zj**2 * Ts * Thm
                    - Vj**2,
                    sc,
                )
                # z_j multiplies the Theta ThetaStar product (vanishing-determinant form)
                lhs_ef = r[n + 1] * rb[n + 1] * k[n + 1] ** 2 / k[n] ** 2 * zj * Th * Ts + Vj**2
                bump("ops_OTeq:e", lhs_ef - (Om - k[n + 1] / k[n] * zj * Th) ** 2, sc)
                bump("ops_OTeq:f", lhs_ef - (Os - k[n + 1] / k[n] * Ts) ** 2, sc)

        # --- deformation derivative of the reflection coefficients
        ht = mpf(fd_step) if fd_step is not None else mpf(2) ** (-(ctx.bits // 4))
        p_plus = WeightParams(p.mu, p.omega, p.omegabar, p.xi, p.t + ht, p.scale)
        p_minus = WeightParams(p.mu, p.omega, p.omegabar, p.xi, p.t - ht, p.scale)
        src_p = MomentSource.from_params(p_plus, ctx)
        src_m = MomentSource.from_params(p_minus, ctx)
        zt = -1 / t
        Vt = weight_V(p, zt)
        for n in range(1, N_max + 1):
            if not usable(n - 1, n, n + 1):
                continue
            rp, rbp = reflection_from_dets(src_p, n, ctx)
            rm, rbm = reflection_from_dets(src_m, n, ctx)
            fd = (rp - rm) / (2 * ht) / r[n]
            fdb = (rbp - rbm) / (2 * ht) / rb[n]
            Thm, Tsm, Omm, Osm = cfun(n - 1, zt)
            pred = -mu / t * (Omm / Vt - 1)
            predb = -mu / t * (Osm / Vt + 1)
            bump("ops_rdot", fd - pred, pred)
            bump("ops_rCdot", fdb - predb, predb)

    det["scaled"] = True
    return IdentityReport(residuals=res, details=det)
