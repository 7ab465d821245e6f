"""Closed-form constants and schedule lengths shared by protocols and checks.

All schedule lengths are rounded outward (ceil), so schedules can only be
longer than the analysis requires, never shorter.  Round budgets use exact
logarithm ratios rather than simplified inequalities.
"""

import math
from dataclasses import dataclass, asdict

from .errors import InvalidParameterError, UnsupportedAlphaError


@dataclass(frozen=True)
class CoreConstants:
    alpha: float
    x: float  # 1 / (alpha (1 - alpha))
    beta: float  # (1 - alpha)^2
    c: float  # min{beta/4, (1-alpha)^3 / 2}, per-round measure contraction
    y: float  # 1 - alpha - 2 alpha^2 + alpha^3


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must be in (0, 1), got {alpha}")


def constants(alpha: float) -> CoreConstants:
    _check_alpha(alpha)
    x = 1.0 / (alpha * (1.0 - alpha))
    beta = (1.0 - alpha) ** 2
    c = min(beta / 4.0, (1.0 - alpha) ** 3 / 2.0)
    y = 1.0 - alpha - 2.0 * alpha**2 + alpha**3
    return CoreConstants(alpha=alpha, x=x, beta=beta, c=c, y=y)


def rounds_kn(n: int, alpha: float) -> int:
    """Simple-round count for the complete-graph almost-complete broadcast.

    ceil(log_{1/(1-c)} M1) with the a-priori measure bound M1 = 3n(n-1)
    (k <= n and h <= n(n-1) at the start).
    """
    if n < 2:
        raise InvalidParameterError(f"n must be >= 2, got {n}")
    c = constants(alpha).c
    m1 = 3.0 * n * (n - 1)
    return math.ceil(math.log(m1) / -math.log1p(-c))


def rounds_hypercube(d: int, alpha: float, eps: float | None = None) -> tuple[int, int]:
    """(T1, T2) simple-round counts for the two hypercube phases.

    T1 bounds the rounds needed to pass 2^d/3 informed vertices via passive-arc
    growth; T2 bounds the measure-contraction tail.  The contraction ratio is
    rho = 1 + beta*lg(2/3)/d < 1, and T2 is a log base 1/rho; if rho were not
    in (0, 1) the exhaustive fallback d*2^d is used.
    """
    if d < 2:
        raise InvalidParameterError(f"d must be >= 2, got {d}")
    if eps is not None and not 0.0 < eps < 1.0:
        raise InvalidParameterError(f"hypercube eps must be in (0, 1), got {eps}")
    cc = constants(alpha)
    t1 = math.ceil(math.log2(d * 2**d / 3.0) * d / (cc.beta * math.log2(3.0)))
    rho = 1.0 + cc.beta * math.log2(2.0 / 3.0) / d
    if not 0.0 < rho < 1.0:
        t2 = d * 2**d
    else:
        t2 = math.ceil(math.log2(7.0 / 3.0 * d * 2**d) / math.log2(1.0 / rho))
    return t1, t2


def l_params(n: int, alpha: float, eps: float) -> tuple[int, int, int, int]:
    """(L1, L2, L3, L4) loop lengths for the no-sense-of-direction algorithm."""
    cc = constants(alpha)
    if cc.y <= 0.0:
        raise UnsupportedAlphaError(
            f"alpha={alpha} gives 1-alpha-2alpha^2+alpha^3 = {cc.y:.6g} <= 0"
        )
    if n < 3:
        raise InvalidParameterError(f"n must be >= 3, got {n}")
    l1 = math.ceil(cc.x * eps)
    l2 = math.ceil(math.log(cc.x * (n - 2)) / -math.log1p(-cc.y / 2.0))
    l3 = math.ceil(2.0 / cc.y) + 1
    l4 = rounds_kn(n, alpha)
    return l1, l2, l3, l4


def f_root(n: int, alpha: float) -> float:
    """Smaller root (n - sqrt(n^2 - 4X(n-2))) / 2 of k^2 - nk + X(n-2) = 0."""
    x = constants(alpha).x
    disc = n * n - 4.0 * x * (n - 2)
    if disc < 0.0:
        raise InvalidParameterError(f"f(n) not real for n={n}, alpha={alpha}")
    return (n - math.sqrt(disc)) / 2.0


def kn_inequalities_hold(n: int, alpha: float, eps: float) -> bool:
    """The three proof inequalities behind the complete-graph round analysis."""
    x = constants(alpha).x
    if n * n < 4.0 * x * (n - 2):
        return False
    if not x * eps > f_root(n, alpha):
        return False
    a2 = alpha * (1.0 - alpha) ** 2
    return n >= (eps + a2) / a2


def n_min(alpha: float, eps: float) -> int:
    """Smallest n for which the complete-graph bound analysis applies."""
    if eps <= 1.0:
        raise InvalidParameterError(f"complete-graph eps must be > 1, got {eps}")
    n = 2
    while not kn_inequalities_hold(n, alpha, eps):
        n += 1
        if n > 10**7:
            raise InvalidParameterError(f"no reasonable n_min for alpha={alpha}, eps={eps}")
    return n


def qd_inequalities_hold(d: int, alpha: float, eps: float) -> bool:
    """Case analysis behind the hypercube per-round delivery bound.

    Needs 0.6*2^(eps*d) >= X(d-1) (mid-range set sizes) and
    f(L) >= X(d-1) with L the guaranteed post-init informed count,
    L within the increasing range of f(x) = x(d - lg x).
    """
    cc = constants(alpha)
    if not 0.6 * 2 ** (eps * d) >= cc.x * (d - 1):
        return False
    low = (1.0 - alpha) / 2.0 * (2 * d - 1)
    if low < 1.0 or low > 2**d / math.e:
        return False
    return low * (d - math.log2(low)) >= cc.x * (d - 1)


def d_min(alpha: float, eps: float) -> int:
    """Smallest d for which the hypercube bound analysis applies."""
    if not 0.0 < eps < 1.0:
        raise InvalidParameterError(f"hypercube eps must be in (0, 1), got {eps}")
    d = 2
    while not qd_inequalities_hold(d, alpha, eps):
        d += 1
        if d > 10**4:
            raise InvalidParameterError(f"no reasonable d_min for alpha={alpha}, eps={eps}")
    return d


def sanity_lemma9(x: float) -> bool:
    """lg((x+1)/x) >= 1/x for x >= 2; sanity property only, unused by schedules."""
    if x < 2:
        raise InvalidParameterError(f"x must be >= 2, got {x}")
    return math.log2((x + 1.0) / x) >= 1.0 / x


@dataclass(frozen=True)
class BoundSet:
    """Everything the CLI `bounds` subcommand prints for one parameter point."""

    alpha: float
    eps: float
    x: float
    beta: float
    c: float
    y: float
    n: int | None = None
    d: int | None = None
    r_kn: int | None = None
    t1: int | None = None
    t2: int | None = None
    l1: int | None = None
    l2: int | None = None
    l3: int | None = None
    l4: int | None = None
    n_min: int | None = None
    d_min: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def bound_set(alpha: float, eps: float, n: int | None = None, d: int | None = None) -> BoundSet:
    cc = constants(alpha)
    kw: dict = {}
    if n is not None:
        kw["n"] = n
        kw["r_kn"] = rounds_kn(n, alpha)
        kw["n_min"] = n_min(alpha, eps) if eps > 1.0 else None
        if cc.y > 0.0 and n >= 3:
            kw["l1"], kw["l2"], kw["l3"], kw["l4"] = l_params(n, alpha, eps if eps > 0 else 2.0)
    if d is not None:
        kw["d"] = d
        kw["t1"], kw["t2"] = rounds_hypercube(d, alpha)
        kw["d_min"] = d_min(alpha, eps) if 0.0 < eps < 1.0 else None
    return BoundSet(alpha=alpha, eps=eps, x=cc.x, beta=cc.beta, c=cc.c, y=cc.y, **kw)
