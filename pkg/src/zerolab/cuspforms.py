"""Cusp forms of even weight for the level-two theta group.

The raw basis of the weight-2N cusp space is made of theta monomials

    (th2*th3*th4)^4 * th2^(4a) * th4^(4b),   a + b = N - 3,

written internally as monomials ``th2^p th3^r th4^s`` with a complex phase.
All q-expansions use the nome ``q = exp(i*pi*tau)``; the theta constants are
expanded in ``t = q^(1/4)`` and the monomials, whose t-exponents are
multiples of four, are downsampled back to integer q-powers.

The Petersson product ``int_F f conj(g) y^(2N-2) dx dy`` is evaluated over
the fundamental domain F = {|Re tau| < 1, |2 tau - 1| > 1, |2 tau + 1| > 1}
by an exact decomposition into four cusp zones plus a compact core:

* the strip {|x| < 1, y > h} at the cusp at infinity,
* the image under tau -> -1/tau of the same strip (cusp 0),
* the images under tau -> 1 - 1/tau and tau -> -1 - 1/tau of the half
  strips {0 < x < 1, y > h} and {-1 < x < 0, y > h} (cusps +1 and -1),
* the remaining core F cap {y < h} minus the three horoball disks, a region
  bounded away from the real axis.

On each strip the y-integral is a finite binomial sum (the power of y has an
integer exponent), so only the compact core needs two-dimensional panels.
The decomposition is valid for any split height h >= 1.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ModelConstructionError, QuadratureError
from ._quad import panel_nodes

# ---------------------------------------------------------------------------
# theta constants in t = exp(i*pi*tau/4)

_theta_cache: dict[tuple[str, int], np.ndarray] = {}
_power_cache: dict[tuple[str, int, int], np.ndarray] = {}


def theta_t_series(name: str, n_t: int) -> np.ndarray:
    """Coefficients of a theta constant in t = q^(1/4), indices 0..n_t."""
    key = (name, n_t)
    if key in _theta_cache:
        return _theta_cache[key]
    c = np.zeros(n_t + 1)
    if name == "theta2":
        n = 0
        while 4 * n * n + 4 * n + 1 <= n_t:
            c[4 * n * n + 4 * n + 1] = 2.0
            n += 1
    elif name == "theta3":
        c[0] = 1.0
        n = 1
        while 4 * n * n <= n_t:
            c[4 * n * n] = 2.0
            n += 1
    elif name == "theta4":
        c[0] = 1.0
        n = 1
        while 4 * n * n <= n_t:
            c[4 * n * n] = 2.0 * (-1.0) ** n
            n += 1
    else:
        raise ValueError(name)
    _theta_cache[key] = c
    return c


def _series_mul(a: np.ndarray, b: np.ndarray, n_t: int) -> np.ndarray:
    return np.convolve(a, b)[: n_t + 1]


def _theta_power(name: str, k: int, n_t: int) -> np.ndarray:
    """k-th power of a theta constant, truncated t-series."""
    if k == 0:
        out = np.zeros(n_t + 1)
        out[0] = 1.0
        return out
    key = (name, k, n_t)
    if key in _power_cache:
        return _power_cache[key]
    if k == 1:
        out = theta_t_series(name, n_t)
    elif k % 2 == 0:
        half = _theta_power(name, k // 2, n_t)
        out = _series_mul(half, half, n_t)
    else:
        out = _series_mul(_theta_power(name, k - 1, n_t),
                          theta_t_series(name, n_t), n_t)
    _power_cache[key] = out
    return out


# ---------------------------------------------------------------------------
# theta monomials and the slash action

@dataclass(frozen=True)
class ThetaMonomial:
    """phase * th2^p * th3^r * th4^s."""

    p: int
    r: int
    s: int
    phase: complex = 1.0 + 0.0j

    @property
    def weight(self) -> int:
        tot = self.p + self.r + self.s
        if tot % 2:
            raise ModelConstructionError("odd theta monomial has no integer weight")
        return tot // 2

    def slash(self, word: str) -> "ThetaMonomial":
        """Weight-k slash by a word in S, T, T^-1 (letters 'S', 'T', 'i').

        Letters act left to right: slash(word='TS') is (f|T)|S = f|(T*S).
        """
        p, r, s, phase = self.p, self.r, self.s, self.phase
        for ch in word:
            if ch == "S":
                # theta2 <-> theta4 swap with factor (-i*tau)^((p+r+s)/2),
                # cancelled against tau^weight by the slash
                phase = phase * (-1j) ** ((p + r + s) // 2)
                p, s = s, p
            elif ch == "T":
                phase = phase * np.exp(1j * math.pi * p / 4.0)
                r, s = s, r
            elif ch == "i":
                phase = phase * np.exp(-1j * math.pi * p / 4.0)
                r, s = s, r
            else:
                raise ValueError(f"unknown slash letter {ch!r}")
        return ThetaMonomial(p=p, r=r, s=s, phase=phase)

    def q_expansion(self, m_max: int) -> np.ndarray:
        """Complex q-coefficients, indices 0..m_max, nome q = exp(i*pi*tau)."""
        n_t = 4 * m_max
        out = _theta_power("theta2", self.p, n_t)
        out = _series_mul(out, _theta_power("theta3", self.r, n_t), n_t)
        out = _series_mul(out, _theta_power("theta4", self.s, n_t), n_t)
        mask = np.arange(n_t + 1) % 4 != 0
        if np.any(out[mask] != 0.0):
            raise ModelConstructionError(
                "theta monomial is not a series in integer q-powers")
        return self.phase * out[::4]


# words gamma with gamma(infinity) = cusp; pulled-back x-ranges of the strips
CUSP_ZONES = (
    ("inf", "", (-1.0, 1.0)),
    ("zero", "S", (-1.0, 1.0)),
    ("plus1", "TS", (0.0, 1.0)),
    ("minus1", "iS", (-1.0, 0.0)),
)


def cusp_basis(weight_power: int) -> list[ThetaMonomial]:
    """Raw theta-monomial basis of the weight-2N cusp space, N >= 3."""
    n = weight_power
    if n < 3:
        raise ModelConstructionError(
            f"cusp space is trivial for N = {n} (need N >= 3)")
    return [ThetaMonomial(p=4 + 4 * a, r=4, s=4 + 4 * (n - 3 - a))
            for a in range(n - 2)]


def cusp_dim(weight_power: int) -> int:
    return max(weight_power - 2, 0)


# ---------------------------------------------------------------------------
# q-series evaluation

def eval_qseries(coeffs: np.ndarray, tau) -> np.ndarray:
    """Evaluate sum_m c_m q^m at q = exp(i*pi*tau) (Horner)."""
    tau = np.asarray(tau, dtype=complex)
    q = np.exp(1j * math.pi * tau)
    return np.polynomial.polynomial.polyval(q, coeffs)


def qseries_tail_ratio(coeffs: np.ndarray, y: float) -> float:
    """Geometric bound for the truncation tail relative to the largest term.

    Bound: (max |c_m| over the last tenth) * |q|^(M+1) / (1-|q|), divided by
    the largest weighted term max_m |c_m| |q|^m.
    """
    m_max = len(coeffs) - 1
    x = math.exp(-math.pi * y)
    weighted = np.abs(coeffs) * x ** np.arange(m_max + 1)
    scale = float(np.max(weighted))
    if scale == 0.0:
        return 0.0
    last = np.abs(coeffs[-max(1, (m_max + 1) // 10):])
    tail = float(np.max(last)) * x ** (m_max + 1) / (1.0 - x)
    return tail / scale


# ---------------------------------------------------------------------------
# Petersson inner products

def _x_factor(k: np.ndarray, x0: float, x1: float) -> np.ndarray:
    """int_{x0}^{x1} exp(i*pi*k*x) dx for integer offsets k."""
    out = np.empty(k.shape, dtype=complex)
    zero = k == 0
    out[zero] = x1 - x0
    kk = k[~zero].astype(float)
    out[~zero] = (np.exp(1j * math.pi * kk * x1)
                  - np.exp(1j * math.pi * kk * x0)) / (1j * math.pi * kk)
    return out


def _log_y_integral(weight: int, p: np.ndarray, h: float) -> np.ndarray:
    """log of exp(pi*p*h) * int_h^inf y^(weight-2) exp(-pi*p*y) dy.

    Binomial expansion around y = h; every term is positive, summed with
    logsumexp.  ``weight - 2`` must be a nonnegative integer.
    """
    from scipy.special import gammaln, logsumexp

    e = weight - 2
    k = np.arange(e + 1)
    log_binom = gammaln(e + 1) - gammaln(k + 1) - gammaln(e - k + 1)
    # term_k = binom(e,k) * h^(e-k) * k! / (pi*p)^(k+1)
    logs = (log_binom[None, :] + (e - k)[None, :] * math.log(h)
            + gammaln(k + 1)[None, :]
            - (k + 1)[None, :] * np.log(math.pi * p)[:, None])
    return logsumexp(logs, axis=1)


def _strip_piece(C: np.ndarray, weight: int, h: float, x0: float, x1: float):
    """Gram contribution of one cusp strip.

    ``C`` holds the q-coefficients (rows = basis forms) of the slashed basis
    at this cusp.  Returns (A, O) with piece_ij = A_ij * exp(O_ij).
    """
    d, m1 = C.shape
    m = np.arange(m1)
    damp = np.exp(-math.pi * m * h)
    Cs = C * damp[None, :]
    L = np.zeros(d)
    for i in range(d):
        mx = np.max(np.abs(Cs[i]))
        L[i] = math.log(mx) if mx > 0 else -np.inf
    with np.errstate(invalid="ignore"):
        Cn = np.where(np.isfinite(L)[:, None], Cs * np.exp(-L)[:, None], 0.0)

    p_vals = np.arange(2, 2 * m1 - 1)
    logy = np.full(2 * m1 - 1, -np.inf)
    logy[2:] = _log_y_integral(weight, p_vals, h)
    my = np.max(logy[2:])
    k_off = m[:, None] - m[None, :]
    kernel = _x_factor(k_off, x0, x1) * np.exp(logy[m[:, None] + m[None, :]] - my)
    A = Cn @ kernel @ Cn.conj().T
    O = L[:, None] + L[None, :] + my
    return A, O


def _core_columns(x: np.ndarray, h: float):
    """For each abscissa, the y-intervals of the compact core at height h."""
    r = 1.0 / (2.0 * h)
    out = []
    for xv in x:
        lo = 0.0
        d2 = 0.25 - (abs(xv) - 0.5) ** 2
        if d2 > 0:
            lo = math.sqrt(d2)
        intervals = [(lo, h)]
        for cx in (0.0, 1.0, -1.0):
            dd = r * r - (xv - cx) ** 2
            if dd <= 0:
                continue
            half = math.sqrt(dd)
            ylo, yhi = r - half, r + half
            new = []
            for a, b in intervals:
                if yhi <= a or ylo >= b:
                    new.append((a, b))
                    continue
                if ylo > a:
                    new.append((a, ylo))
                if yhi < b:
                    new.append((yhi, b))
            intervals = new
        out.append([(a, b) for a, b in intervals if b - a > 1e-14])
    return out


def _core_nodes(h: float, nx: int, ny: int):
    """Quadrature nodes/weights covering the compact core.

    Column heights have square-root kinks where the bounding arcs cross, so
    each x-range between breakpoints is reparametrized with a smoothstep
    whose derivative vanishes at both ends.
    """
    pts = []
    wts = []
    r = 1.0 / (2.0 * h)
    # Breakpoints: circle extremes (0, +-1/2, +-1, +-r, +-(1-r)) and the
    # abscissae +-1/(1+h^2), +-(1 - 1/(1+h^2)) where the horoball circles
    # cross the fundamental-domain arcs.
    c = 1.0 / (1.0 + h * h)
    breaks = sorted({-1.0, -0.5, 0.0, 0.5, 1.0, -r, r,
                     1.0 - r, r - 1.0, c, -c, 1.0 - c, c - 1.0})
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a < 1e-12:
            continue
        v, wv = panel_nodes(0.0, 1.0, max(2, nx), 16)
        x = a + (b - a) * v * v * (3.0 - 2.0 * v)
        wx = wv * (b - a) * 6.0 * v * (1.0 - v)
        cols = _core_columns(x, h)
        for xv, wxv, intervals in zip(x, wx, cols):
            for ylo, yhi in intervals:
                y, wy = panel_nodes(ylo, yhi, ny, 16)
                pts.append(xv + 1j * y)
                wts.append(wxv * wy)
    if not pts:
        return np.empty(0, dtype=complex), np.empty(0)
    return np.concatenate(pts), np.concatenate(wts)


def _core_piece(C: np.ndarray, weight: int, h: float, nx: int, ny: int):
    tau, w = _core_nodes(h, nx, ny)
    d, m1 = C.shape
    y_min = float(np.min(tau.imag)) if len(tau) else 0.4
    m = np.arange(m1)
    damp = np.exp(-math.pi * m * y_min)
    L = np.zeros(d)
    vals = np.empty((d, len(tau)), dtype=complex)
    for i in range(d):
        mx = np.max(np.abs(C[i]) * damp)
        L[i] = math.log(mx) if mx > 0 else 0.0
        vals[i] = eval_qseries(C[i] * math.exp(-L[i]), tau)
    wy = w * tau.imag ** (weight - 2)
    A = (vals * wy[None, :]) @ vals.conj().T
    O = L[:, None] + L[None, :]
    return A, O


def petersson_gram(C_by_cusp: dict[str, np.ndarray], weight_power: int,
                   split_height: float = 1.0, core_rel_tol: float = 1e-9,
                   max_doublings: int = 5):
    """Petersson Gram matrix from per-cusp q-expansions.

    ``C_by_cusp`` maps each zone name of :data:`CUSP_ZONES` to the array of
    q-coefficients of the basis slashed by that zone's group element.
    Returns (A, O) with G_ij = A_ij * exp(O_ij); the split is kept explicit
    so that callers can renormalize without overflow.
    """
    weight = 2 * weight_power
    h = split_height
    if h < 1.0:
        raise ModelConstructionError("cusp decomposition requires split height >= 1")
    pieces = [_strip_piece(C_by_cusp[name], weight, h, x0, x1)
              for name, _, (x0, x1) in CUSP_ZONES]

    nx, ny = 12, 6
    prev = None
    for _ in range(max_doublings + 1):
        core = _core_piece(C_by_cusp["inf"], weight, h, nx, ny)
        A, O = _combine_pieces(pieces + [core])
        if prev is not None and _gram_close(prev, (A, O), core_rel_tol):
            return A, O
        prev = (A, O)
        nx *= 2
        ny *= 2
    raise QuadratureError("Petersson core quadrature did not stabilize")


def _combine_pieces(pieces):
    """Sum (A, O) pairs entrywise with per-entry rescaling."""
    Os = np.stack([p[1] for p in pieces])
    As = np.stack([p[0] for p in pieces])
    M = np.max(Os, axis=0)
    A = np.sum(As * np.exp(Os - M[None, :, :]), axis=0)
    return A, M


def _gram_close(g1, g2, rel_tol: float) -> bool:
    A1, O1 = g1
    A2, O2 = g2
    ref = np.max(np.abs(A2) * np.exp(O2 - np.max(O2)))
    diff = np.abs(A1 * np.exp(O1 - np.max(O2)) - A2 * np.exp(O2 - np.max(O2)))
    return bool(np.max(diff) <= rel_tol * ref)


def slashed_qexp(monos: list[ThetaMonomial], m_max: int) -> dict[str, np.ndarray]:
    """q-expansions of a monomial basis at all four cusp zones."""
    out = {}
    for name, word, _ in CUSP_ZONES:
        out[name] = np.stack([m.slash(word).q_expansion(m_max) for m in monos])
    return out


# ---------------------------------------------------------------------------
# exact integer q-expansions and the echelon basis
#
# The theta monomials become numerically dependent long before the float
# Gram loses positivity (their leading q-coefficient blocks have condition
# growing exponentially in N), so the reduction to an echelon basis
# f_i = q^(i+1) + O(q^(d+1)) is carried out in exact integer/rational
# arithmetic and only the echelon coefficients are converted to floats.
# All theta q-coefficients are integers once the q^(p/4) prefactor of
# th2^p is split off, and every slash phase is a fourth root of unity, so
# exactness costs nothing but big-int convolutions.

_int_core_cache: dict[tuple[str, int], list] = {}
_int_power_cache: dict[tuple[str, int, int], list] = {}


def _int_core(name: str, n_q: int) -> list:
    """Integer q-series of a theta constant, th2 stripped of its q^(1/4)."""
    key = (name, n_q)
    if key in _int_core_cache:
        return _int_core_cache[key]
    c = [0] * (n_q + 1)
    if name == "theta2":
        n = 0
        while n * (n + 1) <= n_q:
            c[n * (n + 1)] = 2
            n += 1
    elif name == "theta3":
        c[0] = 1
        n = 1
        while n * n <= n_q:
            c[n * n] = 2
            n += 1
    elif name == "theta4":
        c[0] = 1
        n = 1
        while n * n <= n_q:
            c[n * n] = -2 if n % 2 else 2
            n += 1
    else:
        raise ValueError(name)
    _int_core_cache[key] = c
    return c


def _int_mul(a: list, b: list, n_q: int) -> list:
    out = [0] * (n_q + 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        top = min(len(b), n_q + 1 - i)
        for j in range(top):
            bj = b[j]
            if bj:
                out[i + j] += ai * bj
    return out


def _int_power(name: str, k: int, n_q: int) -> list:
    if k == 0:
        return [1] + [0] * n_q
    key = (name, k, n_q)
    if key in _int_power_cache:
        return _int_power_cache[key]
    if k == 1:
        out = _int_core(name, n_q)
    elif k % 2 == 0:
        half = _int_power(name, k // 2, n_q)
        out = _int_mul(half, half, n_q)
    else:
        out = _int_mul(_int_power(name, k - 1, n_q), _int_core(name, n_q), n_q)
    _int_power_cache[key] = out
    return out


def exact_monomial_qexp(mono: ThetaMonomial, m_max: int):
    """Exact q-expansion ``i^unit * q^shift * sum_k coeffs[k] q^k``.

    Returns (shift, coeffs, unit) with integer coefficients; requires the
    th2-exponent to be a multiple of four and the phase a power of i, both
    automatic for slashed cusp monomials.
    """
    if mono.p % 4:
        raise ModelConstructionError("th2 exponent must be a multiple of 4")
    shift = mono.p // 4
    n = max(m_max - shift, 0)
    c = _int_power("theta2", mono.p, n)
    c = _int_mul(c, _int_power("theta3", mono.r, n), n)
    c = _int_mul(c, _int_power("theta4", mono.s, n), n)
    ph = complex(mono.phase)
    unit = round(cmath.phase(ph) / (math.pi / 2.0)) % 4
    if abs(ph - 1j ** unit) > 1e-9:
        raise ModelConstructionError(f"slash phase {ph} is not a power of i")
    return shift, c, unit


def echelon_transform(monos: list[ThetaMonomial]) -> list:
    """Exact rational matrix R turning the monomial basis into echelon form.

    Rows of R applied to the monomial q-expansions at the infinite cusp give
    f_i = q^(i+1) + O(q^(d+1)).  Monomial a leads with q^(1+a), so the pivot
    block is triangular and the elimination cannot degenerate.
    """
    d = len(monos)
    M = []
    for mono in monos:
        shift, c, unit = exact_monomial_qexp(mono, d)
        if unit != 0:
            raise ModelConstructionError("unexpected phase at the infinite cusp")
        M.append([Fraction(c[m - shift]) if 0 <= m - shift < len(c)
                  else Fraction(0) for m in range(1, d + 1)])
    R = [[Fraction(1 if i == j else 0) for j in range(d)] for i in range(d)]
    for i in range(d):
        piv = M[i][i]
        if piv == 0:
            raise ModelConstructionError("degenerate pivot in echelon reduction")
        M[i] = [v / piv for v in M[i]]
        R[i] = [v / piv for v in R[i]]
        for j in range(d):
            if j == i:
                continue
            f = M[j][i]
            if f == 0:
                continue
            M[j] = [vj - f * vi for vj, vi in zip(M[j], M[i])]
            R[j] = [vj - f * vi for vj, vi in zip(R[j], R[i])]
    return R


def echelon_qexp(monos: list[ThetaMonomial], R: list, m_max: int,
                 zones=CUSP_ZONES) -> dict[str, np.ndarray]:
    """Per-zone q-expansions of the echelon basis.

    The combination R @ (slashed monomial expansions) is accumulated in
    exact big-int arithmetic (one numerator array per row over a common
    denominator) and converted to complex floats at the very end, so the
    massive cancellation between monomials never touches floating point.
    """
    d = len(monos)
    out = {}
    for name, word, _ in zones:
        exact = [exact_monomial_qexp(m.slash(word), m_max) for m in monos]
        rows = np.empty((d, m_max + 1), dtype=complex)
        for i in range(d):
            den = 1
            for j in range(d):
                den = den * R[i][j].denominator // math.gcd(
                    den, R[i][j].denominator)
            re = [0] * (m_max + 1)
            im = [0] * (m_max + 1)
            for j in range(d):
                if R[i][j] == 0:
                    continue
                nij = R[i][j].numerator * (den // R[i][j].denominator)
                shift, c, unit = exact[j]
                acc = re if unit % 2 == 0 else im
                sgn = -nij if unit >= 2 else nij
                top = min(len(c), m_max + 1 - shift)
                for k in range(top):
                    if c[k]:
                        acc[shift + k] += sgn * c[k]
            rows[i] = np.array([float(Fraction(a, den)) for a in re]) \
                + 1j * np.array([float(Fraction(b, den)) for b in im])
        out[name] = rows
    return out


# ---------------------------------------------------------------------------
# covering-strip preconditioner
#
# Even the echelon cusp basis has a Petersson Gram whose condition number
# grows exponentially in N, so double precision cannot orthonormalize it
# beyond N ~ 15.  The cure: the four cusp-zone strips taken at a height
# h0 < 1 *cover* the fundamental domain (the horoball disks have radius
# 1/(2*h0) > 1/2 and swallow the corner at (1+i)/2), and on each strip the
# product int f conj(g) y^(2N-2) dx dy has a closed form in the zone
# q-coefficients.  The sum of the four strip products therefore dominates
# the Petersson product and is dominated by (covering multiplicity) times
# it.  Orthonormalizing against this covering product - done in exact
# integer input / high-precision arithmetic - yields a working basis whose
# true Petersson Gram has condition bounded by a small constant at every N.

_COVER_HEIGHT = 0.8


class CuspPreconditioner:
    """High-precision covering-product orthonormalization of the cusp basis.

    Holds the lower Cholesky factor L of the covering Gram of the theta
    monomials (truncated at ``m_cov`` terms, which keeps the matrix exactly
    positive definite); ``rows(m)`` returns the float q-expansions of the
    preconditioned basis L^{-1} (monomials) at each cusp zone.
    """

    def __init__(self, weight_power: int, h0: float = _COVER_HEIGHT,
                 m_cov: int | None = None, dps: int | None = None):
        import mpmath as mp

        self._mp = mp
        self.weight_power = weight_power
        self.monos = cusp_basis(weight_power)
        self.h0 = h0
        self.m_cov = m_cov if m_cov is not None else max(80, 4 * weight_power)
        self.dps = dps if dps is not None else 40 + 6 * weight_power
        with mp.workdps(self.dps):
            gram = self._covering_gram()
            self._chol = self._cholesky(gram)

    # -- internals ----------------------------------------------------------

    def _zone_rows(self, word: str, m_max: int):
        """Exact zone expansions as lists of mpc coefficients."""
        mp = self._mp
        units = (mp.mpc(1), mp.mpc(0, 1), mp.mpc(-1), mp.mpc(0, -1))
        rows = []
        for mono in self.monos:
            shift, c, unit = exact_monomial_qexp(mono.slash(word), m_max)
            row = [mp.mpc(0)] * (m_max + 1)
            u = units[unit]
            for k, v in enumerate(c):
                if v and shift + k <= m_max:
                    row[shift + k] = u * v
            rows.append(row)
        return rows

    def _y_integrals(self, p_max: int):
        """int_{h0}^inf y^(2N-2) exp(-pi*p*y) dy for p = 0..p_max (0 unused)."""
        mp = self._mp
        e_top = 2 * self.weight_power - 2
        h0 = mp.mpf(self.h0)
        out = [mp.mpf(0)] * (p_max + 1)
        for p in range(2, p_max + 1):
            b = mp.pi * p
            damp = mp.e ** (-b * h0)
            val = damp / b
            for e in range(1, e_top + 1):
                val = (h0 ** e * damp + e * val) / b
            out[p] = val
        return out

    def _covering_gram(self):
        mp = self._mp
        d = len(self.monos)
        m1 = self.m_cov + 1
        y_int = self._y_integrals(2 * self.m_cov)
        gram = [[mp.mpc(0)] * d for _ in range(d)]
        for name, word, (x0, x1) in CUSP_ZONES:
            rows = self._zone_rows(word, self.m_cov)
            if (x0, x1) == (-1.0, 1.0):
                # full-width strip: plane waves orthogonal, diagonal kernel
                for a in range(1, m1):
                    ya = 2 * y_int[2 * a]
                    col = [mp.conj(rows[j][a]) for j in range(d)]
                    for i in range(d):
                        ria = rows[i][a]
                        if ria:
                            for j in range(d):
                                gram[i][j] += ria * ya * col[j]
            else:
                # half-width strip: x-integral couples modes of odd offset
                x_fac = [mp.mpc(0)] * (2 * m1)
                for k in range(-self.m_cov, m1):
                    if k == 0:
                        x_fac[k] = mp.mpc(x1 - x0)
                    elif k % 2:
                        x_fac[k] = (mp.e ** (1j * mp.pi * k * x1)
                                    - mp.e ** (1j * mp.pi * k * x0)) \
                            / (1j * mp.pi * k)
                v = [[mp.mpc(0)] * m1 for _ in range(d)]
                for j in range(d):
                    for b in range(1, m1):
                        cjb = mp.conj(rows[j][b])
                        if not cjb:
                            continue
                        for a in range(1, m1):
                            f = x_fac[a - b]
                            if f:
                                v[j][a] += f * y_int[a + b] * cjb
                for i in range(d):
                    for a in range(1, m1):
                        ria = rows[i][a]
                        if ria:
                            for j in range(d):
                                gram[i][j] += ria * v[j][a]
        return gram

    def _cholesky(self, gram):
        mp = self._mp
        d = len(gram)
        low = [[mp.mpc(0)] * d for _ in range(d)]
        for i in range(d):
            for j in range(i + 1):
                s = gram[i][j]
                for k in range(j):
                    s -= low[i][k] * mp.conj(low[j][k])
                if i == j:
                    sr = mp.re(s)
                    if sr <= 0:
                        raise ModelConstructionError(
                            "covering Gram lost positivity; raise precision")
                    low[i][j] = mp.sqrt(sr)
                else:
                    low[i][j] = s / low[j][j]
        return low

    # -- public -------------------------------------------------------------

    def rows(self, m_max: int, zones=CUSP_ZONES) -> dict[str, np.ndarray]:
        """Float q-expansions of the preconditioned basis per cusp zone."""
        mp = self._mp
        d = len(self.monos)
        low = self._chol
        out = {}
        with mp.workdps(self.dps):
            for name, word, _ in zones:
                c = self._zone_rows(word, m_max)
                b = []
                for i in range(d):
                    row = c[i]
                    for k in range(i):
                        lik = low[i][k]
                        if lik:
                            bk = b[k]
                            row = [rv - lik * bv for rv, bv in zip(row, bk)]
                    inv = 1 / low[i][i]
                    b.append([rv * inv for rv in row])
                out[name] = np.array([[complex(v) for v in row] for row in b])
        return out
