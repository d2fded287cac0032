"""Generalized Jacobi weight on the unit circle and its trigonometric moments.

The weight has three singular points 0, -1, -1/t with exponents
-mu-omega, 2*omega1, 2*mu, an optional jump of size (1-xi) on the arc
theta in (pi - phi, pi) when t = e^{i phi}, and an overall t^{-mu} prefactor.
Moments come in two closed hypergeometric forms that are cross-checked
against each other.

Phase convention: every complex power uses the principal branch (cut along
the negative real axis).  The closed moment forms agree with circle
quadrature of exactly this convention; on the arc theta in (pi - phi, pi)
the product t^{-mu} z^{-mu} (1+tz)^{2 mu} then differs from the positive
real combination |1+tz|^{2 mu} by the constant phase e^{-2 pi i mu}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from mpmath import mp, mpc, mpf

from .errors import DomainError, ParameterPole, SingularPoint
from .numerics import gauss_2f1, gauss_2f1_dz
from .precision import PrecisionContext, rel_diff, to_mpc

_EPS_INT = 1e-12


def _is_nonpos_int(x) -> int | None:
    x = to_mpc(x)
    if x.imag != 0:
        return None
    n = int(mp.nint(x.real))
    if n <= 0 and x.real == n:
        return n
    return None


def _robust_hyp2f1(a, b, c, z):
    """_robust_hyp2f1 with elementary shortcuts and the +-eps perturbation fallback
    for degenerate parameter differences that defeat the limit machinery."""
    a, b, c, z = map(to_mpc, (a, b, c, z))
    if a == c:
        a, b = b, a
    if b == c:
        return (1 - z) ** (-a)
    na, nb = _is_nonpos_int(a), _is_nonpos_int(b)
    if na is not None or nb is not None:
        # terminating series, summed directly
        if nb is not None and (na is None or nb > na):
            a, b, na = b, a, nb
        total = mpc(1)
        term = mpc(1)
        for k in range(-na):
            term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
            total += term
        return total
    try:
        return mp.hyp2f1(a, b, c, z)
    except ValueError:
        eps = mpf(2) ** (-(2 * mp.prec) // 3)
        with mp.workprec(2 * mp.prec):
            vp = mp.hyp2f1(a + eps, b - eps, c + eps * 0.5, z)
            vm = mp.hyp2f1(a - eps, b + eps, c - eps * 0.5, z)
            out = (vp + vm) / 2
        return +out


def _gamma_reg_2f1(a, b, c, z):
    """Regularized product 1/Gamma(c) * 2F1(a, b; c; z).

    Finite for every c; at c = -m the 1/Gamma(c) zero cancels the 2F1 pole
    and the value is the standard limit
    (a)_{m+1} (b)_{m+1} / (m+1)! * z^{m+1} * 2F1(a+m+1, b+m+1; m+2; z).
    """
    a, b, c, z = map(to_mpc, (a, b, c, z))
    mneg = _is_nonpos_int(c)
    if mneg is None:
        return mp.rgamma(c) * _robust_hyp2f1(a, b, c, z)
    m = -mneg
    pref = mpc(1)
    for j in range(m + 1):
        pref *= (a + j) * (b + j)
    pref /= mp.factorial(m + 1)
    return pref * z ** (m + 1) * _robust_hyp2f1(a + m + 1, b + m + 1, m + 2, z)


def _gamma_reg_2f1_dz(a, b, c, z):
    """d/dz of the regularized product 1/Gamma(c) * 2F1(a, b; c; z)."""
    a, b, c, z = map(to_mpc, (a, b, c, z))
    mneg = _is_nonpos_int(c)
    if mneg is None:
        return mp.rgamma(c) * a * b / c * _robust_hyp2f1(a + 1, b + 1, c + 1, z)
    m = -mneg
    pref = mpc(1)
    for j in range(m + 1):
        pref *= (a + j) * (b + j)
    pref /= mp.factorial(m + 1)
    inner = _robust_hyp2f1(a + m + 1, b + m + 1, m + 2, z)
    dinner = (
        (a + m + 1) * (b + m + 1) / (m + 2) * _robust_hyp2f1(a + m + 2, b + m + 2, m + 3, z)
    )
    return pref * ((m + 1) * z**m * inner + z ** (m + 1) * dinner)


@dataclass(frozen=True)
class WeightParams:
    """Parameters (mu, omega, omegabar, xi, t) of the weight.

    omega and omegabar are stored directly (they are independent unless the
    weight is real), omega1 and omega2 are derived.  ``scale`` is an extra
    constant multiplying the whole weight; the default 1 keeps the standard
    t^{-mu} prefactor, while the physical models of the applications module
    use scale = t^{mu} to strip it.
    """

    mu: mpc
    omega: mpc
    omegabar: mpc
    xi: mpc
    t: mpc
    scale: mpc = field(default_factory=lambda: mpc(1))

    @classmethod
    def from_exponents(cls, mu, omega1, omega2, xi, t, scale=1) -> "WeightParams":
        mu, omega1, omega2, xi, t, scale = map(
            to_mpc, (mu, omega1, omega2, xi, t, scale)
        )
        return cls(mu, omega1 + 1j * omega2, omega1 - 1j * omega2, xi, t, scale)

    @classmethod
    def bare(cls, mu, omega, omegabar, xi, t) -> "WeightParams":
        """Weight without the t^{-mu} prefactor (scale = t^{mu})."""
        mu, omega, omegabar, xi, t = map(to_mpc, (mu, omega, omegabar, xi, t))
        return cls(mu, omega, omegabar, xi, t, scale=t**mu if t != 0 else mpc(1))

    def __post_init__(self):
        for name in ("mu", "omega", "omegabar", "xi", "t", "scale"):
            object.__setattr__(self, name, to_mpc(getattr(self, name)))

    @property
    def omega1(self) -> mpc:
        return (self.omega + self.omegabar) / 2

    @property
    def omega2(self) -> mpc:
        return (self.omega - self.omegabar) / (2j)

    @property
    def exponents(self) -> tuple:
        """Residue exponents at the singular points (0, -1, -1/t)."""
        return (-self.mu - self.omega, 2 * self.omega1, 2 * self.mu)

    @property
    def phi(self) -> mpf:
        """Jump-arc opening angle: arg(t) folded into [0, 2 pi)."""
        a = mp.arg(self.t)
        return a if a >= 0 else a + 2 * mp.pi

    def is_regular(self) -> bool:
        """True when no residue exponent is an integer."""
        for rho in self.exponents:
            if abs(rho.imag) < _EPS_INT and abs(rho.real - mp.nint(rho.real)) < _EPS_INT:
                return False
        return True

    def in_positivity_regime(self) -> bool:
        """Real parameters, xi < 1, 2 omega1 > -1, 2 mu > -1, |t| = 1."""
        real = all(
            abs(x.imag) < _EPS_INT for x in (self.mu, self.omega1, self.omega2, self.xi)
        )
        return bool(
            real
            and self.xi.real < 1
            and 2 * self.omega1.real > -1
            and 2 * self.mu.real > -1
            and abs(abs(self.t) - 1) < _EPS_INT
        )


@dataclass(frozen=True)
class ModelKind:
    """Physical specialization tag plus its parameters."""

    kind: str  # "generalized_jacobi" | "cue_gap" | "cue_charpoly" | "ising_low" | "ising_high"
    phi: mpf | None = None
    xi: mpc | None = None
    u: mpc | None = None
    mu: mpc | None = None
    k: mpf | None = None

    @classmethod
    def cue_gap(cls, phi, xi) -> "ModelKind":
        phi = mpf(phi)
        if not (0 <= phi <= 2 * mp.pi):
            raise DomainError("cue_gap requires 0 <= phi <= 2 pi")
        return cls("cue_gap", phi=phi, xi=to_mpc(xi))

    @classmethod
    def cue_charpoly(cls, u, mu) -> "ModelKind":
        return cls("cue_charpoly", u=to_mpc(u), mu=to_mpc(mu))

    @classmethod
    def ising_low(cls, k) -> "ModelKind":
        k = mpf(k)
        if k <= 0:
            raise DomainError("ising modulus k must be positive")
        return cls("ising_low", k=k)

    @classmethod
    def ising_high(cls, k) -> "ModelKind":
        k = mpf(k)
        if k <= 0:
            raise DomainError("ising modulus k must be positive")
        return cls("ising_high", k=k)


def equivalent_params(m: ModelKind) -> WeightParams:
    """WeightParams whose moments reproduce model_moments exactly."""
    if m.kind == "cue_gap":
        return WeightParams.from_exponents(0, 0, 0, m.xi, mp.expjpi(m.phi / mp.pi))
    if m.kind == "cue_charpoly":
        half = m.mu / 2
        return WeightParams.bare(half, half, half, 0, abs(m.u) ** 2)
    if m.kind == "ising_low":
        t = 1 / m.k**2
        return WeightParams.bare(mpf(1) / 4, mpf(-3) / 4, mpf(1) / 4, 0, t)
    if m.kind == "ising_high":
        t = m.k**2
        p = WeightParams.bare(-mpf(1) / 4, -mpf(1) / 4, mpf(3) / 4, 0, t)
        # §-list normalisation carries one extra factor of k.
        return WeightParams(p.mu, p.omega, p.omegabar, p.xi, p.t, scale=p.scale * m.k)
    raise DomainError(f"no parameter map for model kind {m.kind!r}")


def weight_eval(p: WeightParams, z) -> mpc:
    """Evaluate the weight at a point z = e^{i theta} of the unit circle."""
    z = to_mpc(z)
    if z == 0:
        raise SingularPoint("z = 0")
    if abs(z + 1) < mpf(2) ** (-mp.prec + 8):
        raise SingularPoint("z = -1")
    if p.t != 0 and abs(1 + p.t * z) < mpf(2) ** (-mp.prec + 8):
        raise SingularPoint("z = -1/t")
    core = z ** (-p.mu - p.omega) * (1 + z) ** (2 * p.omega1)
    if p.t != 0:
        core *= p.t ** (-p.mu) * (1 + p.t * z) ** (2 * p.mu)
    if p.xi != 0:
        if abs(abs(p.t) - 1) > _EPS_INT:
            raise DomainError("xi != 0 requires |t| = 1")
        theta = mp.arg(z)
        if mp.pi - p.phi < theta < mp.pi:
            core *= 1 - p.xi
    return p.scale * core


def _moment_pieces(p: WeightParams, n: int):
    """Return (A_n, C_n) so that t^mu w_n = a*A_n + xi*C_n.

    A_n is the xi = 0 moment; C_n is the closed form of the jump-arc
    contribution.  For Im t >= 0 the combination is A + xi*C with the
    e^{-i pi (n+mu-omegabar)} phase; for Im t < 0 the same jump weight is
    reproduced by (1-xi)*A + xi*C with the opposite phase.  Both choices are
    fixed by quadrature of the principal-branch weight (see tests).
    """
    mu, om, omb, t = p.mu, p.omega, p.omegabar, p.t
    g_top = mp.gamma(2 * p.omega1 + 1)
    if mp.isinf(g_top) or mp.isnan(g_top):
        raise ParameterPole("Gamma(2 omega1 + 1) pole")
    a_part = (
        g_top
        * mp.rgamma(1 + n + mu + om)
        * _gamma_reg_2f1(-2 * mu, -n - mu - om, 1 - n - mu + omb, t)
    )
    if p.xi == 0:
        return a_part, mpc(0), mpf(1)
    s = -1 if t.imag >= 0 else 1
    a_coeff = mpf(1) if t.imag >= 0 else 1 - p.xi
    c_part = (
        1
        / (2 * mp.pi * 1j)
        * mp.expjpi(s * (n + mu - omb))
        * mp.gamma(2 * mu + 1)
        * g_top
        * mp.rgamma(2 * mu + 2 * p.omega1 + 2)
        * t ** (n + mu - omb)
        * (1 - t) ** (2 * mu + 2 * p.omega1 + 1)
        * _robust_hyp2f1(2 * mu + 1, 1 + n + mu + om, 2 * mu + 2 * p.omega1 + 2, 1 - t)
    )
    return a_part, c_part, a_coeff


def _moment_first_form(p: WeightParams, n: int):
    """t^mu w_n from the form analytic at t = 0 and t = 1."""
    a_part, c_part, a_coeff = _moment_pieces(p, n)
    return a_coeff * a_part + p.xi * c_part


def _moment_second_form(p: WeightParams, n: int):
    """t^mu w_n from the alternative form, with a conditioning estimate.

    Ill-conditioned when n+mu-omegabar is near an integer (the sine
    denominators blow up and cancel); the caller skips the cross-check then.
    """
    mu, om, omb, xi, t = p.mu, p.omega, p.omegabar, p.xi, p.t
    g_top = mp.gamma(2 * p.omega1 + 1)
    base = (
        g_top
        * mp.rgamma(1 + n + mu + om)
        * _gamma_reg_2f1(-2 * mu, -n - mu - om, 1 - n - mu + omb, t)
    )
    if xi == 0:
        return base, mpf(1)
    x = n + mu - omb
    sx = mp.sinpi(x)
    if abs(sx) < mpf(2) ** (-mp.prec // 2):
        return None, mp.inf
    lam_m = mp.expjpi(-x) / (2j * sx)
    lam_t = lam_m if t.imag >= 0 else mp.expjpi(x) / (2j * sx)
    tail = (
        mp.gamma(2 * mu + 1)
        * mp.rgamma(1 - n + mu + omb)
        * t**x
        * (1 - t) ** (2 * mu + 2 * p.omega1 + 1)
        * _gamma_reg_2f1(2 * mu + 1, 1 + n + mu + om, 1 + n + mu - omb, t)
    )
    value = (1 + xi * lam_m) * base - xi * lam_t * tail
    conditioning = max(abs((1 + xi * lam_m) * base), abs(xi * lam_t * tail)) / max(
        abs(value), mpf(2) ** (-mp.prec)
    )
    return value, conditioning


def toeplitz_moment(p: WeightParams, n: int, ctx: PrecisionContext) -> mpc:
    """Trigonometric moment w_n of the weight from the closed forms.

    Both hypergeometric forms are evaluated and cross-checked whenever the
    second is well-conditioned.
    """
    if p.mu.real <= -0.5 or p.omega1.real <= -0.5:
        raise DomainError("moments require Re(mu) > -1/2 and Re(omega1) > -1/2")
    with ctx.workprec(2):
        if p.t == 0:
            if p.xi != 0:
                raise DomainError("t = 0 moments require xi = 0")
            c0 = 1 - n - p.mu + p.omegabar
            bare = (
                mp.gamma(2 * p.omega1 + 1)
                * mp.rgamma(1 + n + p.mu + p.omega)
                * (mp.rgamma(c0) if _is_nonpos_int(c0) is None else mpc(0))
            )
            return +(p.scale * bare)
        first = _moment_first_form(p, n)
        if p.xi != 0:
            second, cond = _moment_second_form(p, n)
            if cond < mpf(2) ** (ctx.bits // 2):
                bound = 10 * mpf(ctx.tol) * cond
                if rel_diff(first, second) > max(bound, 10 * mpf(ctx.tol)):
                    raise ParameterPole(
                        f"moment forms disagree at n={n}: {first} vs {second}"
                    )
        return +(p.scale * p.t ** (-p.mu) * first)


def toeplitz_moment_dt(p: WeightParams, n: int, ctx: PrecisionContext) -> mpc:
    """d w_n / dt at fixed parameters, from the analytic first form.

    Used for the tau-route seeds, which need the logarithmic t-derivative of
    w_0.  Only implemented for the standard scale (a t-independent constant
    times t^{-mu}); the scale constant drops out of logarithmic derivatives.
    """
    mu, om, omb, xi, t = p.mu, p.omega, p.omegabar, p.xi, p.t
    if t == 0:
        raise DomainError("derivative at t = 0 not supported")
    with ctx.workprec(2):
        g_top = mp.gamma(2 * p.omega1 + 1)
        c1 = g_top * mp.rgamma(1 + n + mu + om)
        a1, b1, cc1 = -2 * mu, -n - mu - om, 1 - n - mu + omb
        dfirst = c1 * _gamma_reg_2f1_dz(a1, b1, cc1, t)
        a_coeff = mpf(1) if (xi == 0 or t.imag >= 0) else 1 - xi
        total = a_coeff * dfirst
        if xi != 0:
            s = -1 if t.imag >= 0 else 1
            pref = (
                xi
                / (2 * mp.pi * 1j)
                * mp.expjpi(s * (n + mu - omb))
                * mp.gamma(2 * mu + 1)
                * g_top
                * mp.rgamma(2 * mu + 2 * p.omega1 + 2)
            )
            e1 = n + mu - omb
            e2 = 2 * mu + 2 * p.omega1 + 1
            a2, b2, cc2 = 2 * mu + 1, 1 + n + mu + om, 2 * mu + 2 * p.omega1 + 2
            f = _robust_hyp2f1(a2, b2, cc2, 1 - t)
            df = -a2 * b2 / cc2 * _robust_hyp2f1(a2 + 1, b2 + 1, cc2 + 1, 1 - t)
            core = t**e1 * (1 - t) ** e2
            dcore = e1 * t ** (e1 - 1) * (1 - t) ** e2 - e2 * t**e1 * (1 - t) ** (
                e2 - 1
            )
            total += pref * (dcore * f + core * df)
        bare = _moment_first_form(p, n)
        # w_n = scale * t^{-mu} * bare(t)
        return +(p.scale * t ** (-mu) * (total - mu / t * bare))


def model_moments(m: ModelKind, n: int, ctx: PrecisionContext) -> mpc:
    """Closed-form moments of the physical specializations."""
    with ctx.workprec(2):
        if m.kind == "cue_gap":
            t = mp.expjpi(m.phi / mp.pi)
            if n == 0:
                return +(1 - m.xi * m.phi / (2 * mp.pi))
            return +(m.xi / (2 * mp.pi * 1j) * (-1) ** (n + 1) * (t**n - 1) / n)
        if m.kind == "cue_charpoly":
            mu, t = m.mu, abs(m.u) ** 2
            nn = abs(n)
            ctx2 = PrecisionContext(2 * ctx.bits, ctx.tol, ctx.max_escalations)
            wminus = (
                mp.gamma(mu + 1)
                * mp.rgamma(mpf(nn) + 1)
                * mp.rgamma(mu + 1 - nn)
                * gauss_2f1(-mu, -mu + nn, nn + 1, t, ctx2)
            )
            return +(wminus if n <= 0 else t**n * wminus)
        if m.kind == "ising_low":
            x = 1 / m.k**2
            nn = abs(n)
            if n <= 0:
                val = (
                    (-1) ** nn
                    / mp.pi
                    * mp.gamma(nn + mpf(1) / 2)
                    * mp.gamma(mpf(1) / 2)
                    * mp.rgamma(nn + 1)
                    * _robust_hyp2f1(-mpf(1) / 2, nn + mpf(1) / 2, nn + 1, x)
                )
            else:
                val = (
                    (-1) ** (nn + 1)
                    * m.k ** (-2 * nn)
                    / mp.pi
                    * mp.gamma(nn - mpf(1) / 2)
                    * mp.gamma(mpf(3) / 2)
                    * mp.rgamma(nn + 1)
                    * _robust_hyp2f1(mpf(1) / 2, nn - mpf(1) / 2, nn + 1, x)
                )
            return +val
        if m.kind == "ising_high":
            x = m.k**2
            nn = abs(n)
            if n <= 0:
                val = (
                    (-1) ** nn
                    * m.k ** (2 * nn + 1)
                    / mp.pi
                    * mp.gamma(nn + mpf(1) / 2)
                    * mp.gamma(mpf(3) / 2)
                    * mp.rgamma(nn + 2)
                    * _robust_hyp2f1(mpf(1) / 2, nn + mpf(1) / 2, nn + 2, x)
                )
            else:
                val = (
                    (-1) ** (nn - 1)
                    / (mp.pi * m.k)
                    * mp.gamma(nn - mpf(1) / 2)
                    * mp.gamma(mpf(1) / 2)
                    * mp.rgamma(mpf(nn))
                    * _robust_hyp2f1(-mpf(1) / 2, nn - mpf(1) / 2, mpf(nn), x)
                )
            return +val
        raise DomainError(f"no closed moments for model kind {m.kind!r}")
