"""Classical special functions at certified precision.

Gauss 2F1, its z-derivative, complete elliptic integrals and the Pochhammer
symbol.  These seed every initial condition used by the recurrence routes, so
each public operation is evaluated at two precisions and accepted only when
the results agree to the context tolerance.

2F1 is backed by mpmath's implementation (series, z -> 1-z connection formula
and limit handling for degenerate parameter differences) wrapped in the
double-evaluation loop; the test suite keeps an independent term-by-term
series oracle.  The elliptic integrals use the arithmetic-geometric mean,
with a quadrature oracle in the tests.
"""

from __future__ import annotations

from mpmath import mp, mpc, mpf

from .errors import DomainError, PoleAtC
from .precision import PrecisionContext, certified_eval, to_mpc


def _as_nonpositive_int(x) -> int | None:
    """Return n if x is numerically a nonpositive integer, else None."""
    x = to_mpc(x)
    if x.imag != 0:
        return None
    n = int(mp.nint(x.real))
    if n <= 0 and abs(x.real - n) < mpf(2) ** (-mp.prec + 8):
        return n
    return None


def _termination_index(a, b) -> int | None:
    """Smallest m with (a)_m = 0 or (b)_m = 0, if the series terminates."""
    idx = None
    for p in (a, b):
        n = _as_nonpositive_int(p)
        if n is not None:
            m = -n + 1  # (p)_k vanishes first at k = -p + 1
            idx = m if idx is None else min(idx, m)
    return idx


def gauss_2f1(a, b, c, z, ctx: PrecisionContext) -> mpc:
    """Gauss hypergeometric 2F1(a, b; c; z) with relative error <= ctx.tol.

    Terminating series are summed directly (the polynomial convention, which
    differs from the c -> nonpositive-integer limit when both upper and lower
    parameters are nonpositive integers).
    """
    a, b, c, z = map(to_mpc, (a, b, c, z))
    with ctx.workprec():
        term = _termination_index(a, b)
        cpole = _as_nonpositive_int(c)
        if cpole is not None and (term is None or term > -cpole + 1):
            raise PoleAtC(f"c = {cpole} pole not cancelled by termination")
        if term is None and abs(z) > 1 + mpf(2) ** (-ctx.bits // 2):
            raise DomainError("|z| > 1 outside the supported domain")

    if term is not None:

        def run(prec):
            with mp.workprec(prec):
                total = mpc(1)
                piece = mpc(1)
                for k in range(term - 1):
                    piece *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
                    total += piece
                return total

    else:

        def run(prec):
            with mp.workprec(prec):
                return mp.hyp2f1(a, b, c, z)

    return certified_eval(run, ctx)


def gauss_2f1_dz(a, b, c, z, ctx: PrecisionContext) -> mpc:
    """d/dz 2F1(a, b; c; z) = (a b / c) 2F1(a+1, b+1; c+1; z)."""
    a, b, c, z = map(to_mpc, (a, b, c, z))
    with ctx.workprec():
        factor = a * b / c
    if factor == 0:
        return mpc(0)
    return factor * gauss_2f1(a + 1, b + 1, c + 1, z, ctx)


def _agm_elliptic(k, prec, want_E):
    """AGM iteration for K(k); the c_j sequence accumulates E(k)."""
    with mp.workprec(prec):
        k = mpf(k)
        a, b = mpf(1), mp.sqrt(1 - k * k)
        cj = k
        csum = cj * cj / 2
        power = mpf(1)
        while abs(cj) > mpf(2) ** (-prec // 2 - 8):
            a, b, cj = (a + b) / 2, mp.sqrt(a * b), (a - b) / 2
            power *= 2
            csum += power * cj * cj / 2
            if power > mpf(2) ** prec:
                break
        K = mp.pi / (2 * a)
        if not want_E:
            return K
        return K * (1 - csum)


def elliptic_K(k, ctx: PrecisionContext) -> mpf:
    """Complete elliptic integral of the first kind, modulus k in [0, 1)."""
    k = mpf(k)
    if not (0 <= k < 1):
        raise DomainError("elliptic_K requires 0 <= k < 1")
    return certified_eval(lambda prec: _agm_elliptic(k, prec, want_E=False), ctx)


def elliptic_E(k, ctx: PrecisionContext) -> mpf:
    """Complete elliptic integral of the second kind, modulus k in [0, 1]."""
    k = mpf(k)
    if not (0 <= k <= 1):
        raise DomainError("elliptic_E requires 0 <= k <= 1")
    if k == 1:
        return mpf(1)
    return certified_eval(lambda prec: _agm_elliptic(k, prec, want_E=True), ctx)


def pochhammer(a, n: int, ctx: PrecisionContext | None = None) -> mpc:
    """Rising factorial (a)_n = a (a+1) ... (a+n-1); exact for integer a."""
    if n < 0:
        raise DomainError("pochhammer requires n >= 0")
    if isinstance(a, int):
        out = 1
        for j in range(n):
            out *= a + j
        return mpc(out)
    a = to_mpc(a)
    with (ctx.workprec() if ctx is not None else mp.workprec(mp.prec)):
        out = mpc(1)
        for j in range(n):
            out *= a + j
        return out
