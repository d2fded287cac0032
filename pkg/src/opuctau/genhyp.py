"""Generalized hypergeometric series of N equal arguments, summed over
partitions by total weight.

Provides the third, determinant-free evaluation route for the unitary-group
averages and the closed reflection-coefficient ratios.  Shell sums converge
geometrically for |t| < 1; on the |t| = 1 boundary the partial sums converge
only algebraically and a Levin-u extrapolation is applied.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from mpmath import mp, mpc, mpf

from .errors import DomainError, TruncationNotConverged
from .numerics import gauss_2f1  # noqa: F401  (series cross-checks in tests)
from .precision import GUARD_BITS, PrecisionContext, to_mpc


@dataclass(frozen=True)
class Partition:
    """Weakly decreasing positive parts (trailing zeros stripped)."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts if p)
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError("parts must be weakly decreasing")
        if any(p < 0 for p in parts):
            raise ValueError("parts must be nonnegative")
        object.__setattr__(self, "parts", parts)

    @property
    def weight(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def conjugate(self) -> "Partition":
        if not self.parts:
            return Partition(())
        conj = [0] * self.parts[0]
        for p in self.parts:
            for j in range(p):
                conj[j] += 1
        return Partition(tuple(conj))

    def cells(self):
        """(row, col) 1-based cells of the diagram."""
        for i, p in enumerate(self.parts, start=1):
            for j in range(1, p + 1):
                yield i, j

    def arm(self, i: int, j: int) -> int:
        return self.parts[i - 1] - j

    def leg(self, i: int, j: int) -> int:
        return self.conjugate().parts[j - 1] - i


def partitions_of_weight(w: int, max_len: int):
    """All partitions of weight w with at most max_len parts, descending
    lexicographic, each exactly once."""
    if w < 0:
        raise DomainError("weight must be nonnegative")
    if w == 0:
        yield Partition(())
        return

    def rec(rem, cap, parts):
        if rem == 0:
            yield tuple(parts)
            return
        if len(parts) >= max_len:
            return
        for p in range(min(cap, rem), 0, -1):
            parts.append(p)
            yield from rec(rem - p, p, parts)
            parts.pop()

    for parts in rec(w, w, []):
        yield Partition(parts)


def gen_pochhammer(a, kappa: Partition, N: int, ctx: PrecisionContext | None = None):
    """Product of rising factorials (a - j + 1)_{kappa_j} over rows j <= N."""
    if kappa.length > N:
        raise DomainError("partition longer than the number of variables")
    a = to_mpc(a)
    with (ctx.workprec() if ctx is not None else mp.workprec(mp.prec)):
        out = mpc(1)
        for j, kj in enumerate(kappa.parts, start=1):
            x = a - j + 1
            for i in range(kj):
                out *= x + i
        return +out


def hook_product(kappa: Partition) -> int:
    """Product of hook lengths arm + leg + 1 over the diagram."""
    conj = kappa.conjugate().parts
    out = 1
    for i, p in enumerate(kappa.parts, start=1):
        for j in range(1, p + 1):
            out *= (p - j) + (conj[j - 1] - i) + 1
    return out


def _hook_product_fast(parts: tuple) -> int:
    """Hook product via the factorial/difference closed form."""
    ell = len(parts)
    num = 1
    for i in range(ell):
        num *= factorial(parts[i] + ell - 1 - i)
    den = 1
    for i in range(ell):
        for j in range(i + 1, ell):
            den *= parts[i] - parts[j] + j - i
    return num // den


def _principal_spec_int(parts: tuple, N: int) -> Fraction:
    """s_kappa(1, ..., 1) with N variables, as an exact rational (integer)."""
    padded = list(parts) + [0] * (N - len(parts))
    num = 1
    den = 1
    for i in range(N):
        for j in range(i + 1, N):
            num *= padded[i] - padded[j] + j - i
            den *= j - i
    return Fraction(num, den)


def schur_equal_args(kappa: Partition, N: int, t, ctx: PrecisionContext | None = None):
    """Principal specialization s_kappa(t, ..., t) = t^{|kappa|} s_kappa(1^N)."""
    if kappa.length > N:
        return mpc(0)
    t = to_mpc(t)
    spec = _principal_spec_int(kappa.parts, N)
    with (ctx.workprec() if ctx is not None else mp.workprec(mp.prec)):
        return +(t**kappa.weight * mpf(spec.numerator) / mpf(spec.denominator))


@dataclass(frozen=True)
class SeriesControl:
    """Shell-summation cutoff: maximum total weight and relative tail target."""

    max_weight: int = 240
    tail_tol: float | None = None

    def __post_init__(self):
        if self.max_weight < 0:
            raise ValueError("max_weight must be >= 0")


@dataclass
class SeriesValue:
    """Value of a shell-summed series with truncation metadata."""

    value: mpc
    tail_estimate: mpf
    shells: int
    accelerated: bool = False

    def __complex__(self):
        return complex(self.value)


def _iter_parts(w: int, max_len: int):
    """Raw-tuple partition enumeration for the series hot loop."""
    if w == 0:
        yield ()
        return
    stack = [(w, w, ())]
    while stack:
        rem, cap, parts = stack.pop()
        top = min(cap, rem)
        for p in range(1, top + 1):  # pushed ascending -> popped descending
            nxt = parts + (p,)
            if rem == p:
                yield nxt
            elif len(nxt) < max_len:
                stack.append((rem - p, p, nxt))


class _CoefCache:
    """Integer machinery for s_kappa(1^N)/h_kappa with cached factorials.

    s(1^N) = prod_{i<j<=l} d_ij * prod_{i<=l, l<j<=N} (p_i+j-i) / prod_{i<=l} (N-i)!
    h      = prod_i (p_i+l-i)! / prod_{i<j<=l} d_ij
    where d_ij = p_i - p_j + j - i (1-based rows).
    """

    def __init__(self, N: int):
        self.N = N
        self._fact = [1]

    def fact(self, n: int) -> int:
        f = self._fact
        while len(f) <= n:
            f.append(f[-1] * len(f))
        return f[n]

    def coef(self, parts: tuple):
        """(num, den) integers with num/den = s_kappa(1^N)/h_kappa."""
        N = self.N
        ell = len(parts)
        dprod = 1
        for i in range(ell):
            pi = parts[i] - i
            for j in range(i + 1, ell):
                dprod *= pi - parts[j] + j
        tail = 1
        for i in range(ell):
            pi = parts[i] - i
            for j in range(ell, N):
                tail *= pi + j
        den = 1
        for i in range(ell):
            den *= self.fact(N - 1 - i) * self.fact(parts[i] + ell - 1 - i)
        return dprod * dprod * tail, den


def _f21_shells(a, b, c, N, t, control, prec, tol_default, length_exact=None, extra_row_weight=False):
    """Partial sums of the partition series by weight shells.

    With length_exact = N and extra_row_weight, computes instead the
    pole-residue shell sum restricted to full-length partitions, weighted by
    prod_j (N - j + kappa_j) / (N-1)! and with lower parameter N.
    """
    a, b, c, t = map(to_mpc, (a, b, c, t))
    with mp.workprec(prec + GUARD_BITS):
        tol = mpf(control.tail_tol) if control.tail_tol is not None else mpf(tol_default)
        # memoized pochhammer triples keyed by partition tuple
        prev: dict = {(): (mpc(1), mpc(1), mpc(1))}
        cc = _CoefCache(N)
        nm1_fact = mpf(cc.fact(N - 1))
        psums = []
        total = mpc(0)
        if length_exact is None:
            total = mpc(1)
        psums.append(total)
        tpow = mpc(1)
        shell_abs = []
        for w in range(1, control.max_weight + 1):
            tpow *= t
            cur: dict = {}
            shell = mpc(0)
            for parts in _iter_parts(w, N):
                ell = len(parts)
                k_new = parts[-1]
                parent = parts[:-1] if k_new == 1 else parts[:-1] + (k_new - 1,)
                pa, pb, pc = prev[parent]
                # appending a cell to row ell multiplies (x - ell + 1)_{k}
                # by (x - ell + k), with k the new row length
                pa = pa * (a - ell + k_new)
                pb = pb * (b - ell + k_new)
                pc = pc * (c - ell + k_new)
                cur[parts] = (pa, pb, pc)
                if length_exact is not None and ell != length_exact:
                    continue
                num, den = cc.coef(parts)
                if extra_row_weight:
                    for j in range(1, N + 1):
                        kj = parts[j - 1] if j <= ell else 0
                        num *= N - j + kj
                term = pa * pb / pc * (mpf(num) / mpf(den))
                if extra_row_weight:
                    term /= nm1_fact
                shell += term
            prev = cur
            total += shell * tpow
            psums.append(total)
            shell_abs.append(abs(shell * tpow))
            if len(shell_abs) >= 2 and w >= 4:
                scale = max(mpf(1), abs(total))
                if shell_abs[-1] < tol * scale and shell_abs[-2] < tol * scale:
                    break
        return psums, shell_abs


def f21_general(a, b, c, N: int, t, control: SeriesControl, ctx: PrecisionContext) -> SeriesValue:
    """Partition series of the two-upper one-lower hypergeometric function of
    N equal arguments t.

    Plain shell summation for |t| < 1 or terminating parameter patterns;
    Levin-u extrapolation of the shell partial sums on the |t| = 1 boundary.
    The N = 1 case reduces exactly to the classical Gauss series.
    """
    a, b, c, t = map(to_mpc, (a, b, c, t))
    prec = ctx.bits
    with mp.workprec(prec + GUARD_BITS):
        if abs(t) > 1 + mpf(2) ** (-prec // 2):
            raise DomainError("|t| > 1 outside the series domain")
        boundary = abs(abs(t) - 1) < mpf("0.01")
        psums, shell_abs = _f21_shells(a, b, c, N, t, control, prec, ctx.tol)
        if not boundary:
            if len(shell_abs) >= 2:
                tail = shell_abs[-1] + shell_abs[-2]
                if (
                    shell_abs[-1] > mpf(control.tail_tol or ctx.tol) * max(1, abs(psums[-1]))
                    and shell_abs[-1] >= shell_abs[-2]
                ):
                    raise TruncationNotConverged(
                        f"shell ratio >= 1 after {len(psums) - 1} shells"
                    )
            else:
                tail = mpf(0)
            return SeriesValue(+psums[-1], +tail, len(psums) - 1)
        # boundary: Levin-u on the partial sums, error from order-to-order drift
        lev = mp.levin(method="levin", variant="u")
        v_full, _ = lev.update_psum([to_mpc(s) for s in psums])
        lev2 = mp.levin(method="levin", variant="u")
        v_short, _ = lev2.update_psum([to_mpc(s) for s in psums[: max(8, len(psums) - 6)]])
        err = abs(v_full - v_short)
        return SeriesValue(+v_full, +err, len(psums) - 1, accelerated=True)


def f21_limit_shell(a, b, c_base, N: int, t, control: SeriesControl, ctx: PrecisionContext) -> SeriesValue:
    """Residue of the series at the degenerate lower parameter c_base = N - 1:
    the limit of eps times the series at c = N - 1 + eps, which keeps only
    full-length partitions with the weight prod_j (N - j + kappa_j) / (N-1)!
    and lower parameter N."""
    c_base = to_mpc(c_base)
    if abs(c_base - (N - 1)) > mpf("1e-12"):
        raise DomainError("limit shell requires lower parameter N - 1")
    a, b, t = map(to_mpc, (a, b, t))
    prec = ctx.bits
    with mp.workprec(prec + GUARD_BITS):
        if abs(t) > 1 + mpf(2) ** (-prec // 2):
            raise DomainError("|t| > 1 outside the series domain")
        boundary = abs(abs(t) - 1) < mpf("0.01")
        psums, shell_abs = _f21_shells(
            a, b, mpc(N), N, t, control, prec, ctx.tol, length_exact=N, extra_row_weight=True
        )
        if not boundary:
            tail = sum(shell_abs[-2:]) if len(shell_abs) >= 2 else mpf(0)
            return SeriesValue(+psums[-1], +tail, len(psums) - 1)
        lev = mp.levin(method="levin", variant="u")
        v_full, _ = lev.update_psum([to_mpc(s) for s in psums])
        lev2 = mp.levin(method="levin", variant="u")
        v_short, _ = lev2.update_psum([to_mpc(s) for s in psums[: max(8, len(psums) - 6)]])
        return SeriesValue(+v_full, abs(v_full - v_short), len(psums) - 1, accelerated=True)


def euler_gamma_product(mu, om, omb, N: int, ctx: PrecisionContext):
    """Closed Gamma-product value of the series at t = 1 with parameters
    (-2 mu, -mu-om; N-mu+omb)."""
    mu, om, omb = map(to_mpc, (mu, om, omb))
    with ctx.workprec():
        out = mpc(1)
        for j in range(1, N + 1):
            out *= (
                mp.gamma(j + 2 * mu + om + omb)
                * mp.gamma(j - mu + omb)
                * mp.rgamma(j + om + omb)
                * mp.rgamma(j + mu + omb)
            )
        return +out
