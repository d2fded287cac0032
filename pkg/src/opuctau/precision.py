"""Working-precision bookkeeping.

Every public operation takes a :class:`PrecisionContext`.  Scalars are mpmath
``mpf``/``mpc`` values; helpers here normalise inputs and run the
double-evaluation acceptance loop (evaluate at ``bits`` and ``2*bits``, accept
when the relative difference is below ``tol``, otherwise escalate).
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpc, mpf

from .errors import NoConvergence

# Guard bits added on top of the requested precision for intermediate work.
GUARD_BITS = 32


@dataclass(frozen=True)
class PrecisionContext:
    """Binary working precision plus the relative agreement threshold."""

    bits: int = 256
    tol: float = 1e-30
    max_escalations: int = 3

    def __post_init__(self):
        if self.bits < 64:
            raise ValueError("bits must be >= 64")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if mpf(self.tol) < mpf(2) ** (-self.bits + 16):
            raise ValueError("tol is unattainable at this precision")

    def workprec(self, factor: int = 1):
        """Context manager setting mp.prec to factor*bits plus guard bits."""
        return mp.workprec(factor * self.bits + GUARD_BITS)


def to_mpc(x) -> mpc:
    """Normalise ints/floats/strings/mpf/mpc to mpc at current precision."""
    if isinstance(x, mpc):
        return x
    if isinstance(x, (int, float, mpf, str)):
        return mpc(mpf(x))
    if isinstance(x, complex):
        return mpc(x.real, x.imag)
    if isinstance(x, tuple) and len(x) == 2:
        return mpc(mpf(x[0]), mpf(x[1]))
    raise TypeError(f"cannot interpret {x!r} as a complex scalar")


def rel_diff(a, b) -> mpf:
    """Relative difference |a-b| / max(1, |a|, |b|)."""
    a = to_mpc(a)
    b = to_mpc(b)
    scale = max(mpf(1), abs(a), abs(b))
    return abs(a - b) / scale


def certified_eval(fn, ctx: PrecisionContext):
    """Run ``fn(prec_bits)`` at ctx.bits and 2*ctx.bits until stable.

    ``fn`` must be a pure function of the precision.  Returns the
    higher-precision value once two consecutive evaluations agree to ctx.tol.
    """
    bits = ctx.bits
    with mp.workprec(bits + GUARD_BITS):
        prev = fn(bits + GUARD_BITS)
    for _ in range(ctx.max_escalations + 1):
        hi = 2 * bits
        with mp.workprec(hi + GUARD_BITS):
            cur = fn(hi + GUARD_BITS)
        if rel_diff(prev, cur) < mpf(ctx.tol):
            return cur
        bits = hi
        prev = cur
    raise NoConvergence(
        f"no agreement to {ctx.tol} after {ctx.max_escalations} escalations"
    )
