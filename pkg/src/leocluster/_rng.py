"""Counter-based random number generation (Philox4x64-10).

Every random draw in the package is a pure function of
``(seed, domain, trial, draw_index)``: the Philox key is ``(seed, SALT)``
and the counter is ``(block, trial, domain, 0)`` with ``block = draw >> 2``.
Trials therefore own independent substreams, which makes results
independent of batching, scheduling and thread count.

Two implementations coexist: scalar kernels compiled with numba (used
inside jitted Monte Carlo loops) and vectorised numpy twins (used by the
pure numpy backend and by the public samplers).  Both consume the same
integer stream; floating point transforms may differ in the last ulp
between backends.
"""

import math

import numpy as np

from ._backend import njit

# Philox4x64 round multipliers and Weyl key increments (Random123 constants).
_M0 = 0xD2E7470EE14C6C93
_M1 = 0xCA5A826395121157
_W0 = 0x9E3779B97F4A7C15
_W1 = 0xBB67AE8584CAA73B
_MASK64 = 0xFFFFFFFFFFFFFFFF

# Key salt: the second key word, fixed so a 64-bit seed defines the stream.
KEY_SALT = 0x1BD11BDAA9FC1A22

M0 = np.uint64(_M0)
M1 = np.uint64(_M1)
W0 = np.uint64(_W0)
W1 = np.uint64(_W1)
MASK32 = np.uint64(0xFFFFFFFF)
U32 = np.uint64(32)
U11 = np.uint64(11)
U2 = np.uint64(2)
U3 = np.uint64(3)
U1 = np.uint64(1)
U0 = np.uint64(0)

_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_TWO_PI = 2.0 * math.pi

# stream domains (third counter word)
DOMAIN_OUTAGE = 1
DOMAIN_RATE = 2
DOMAIN_LEMMA_LEADER = 3
DOMAIN_LEMMA_FOLLOWER = 4
DOMAIN_LEMMA_EXTREME = 5
DOMAIN_CHANNEL = 6
DOMAIN_GEOMETRY = 7


# ---------------------------------------------------------------------------
# scalar kernels (numba path)
# ---------------------------------------------------------------------------

@njit(inline="always")
def _mulhilo(a, b):
    lo = a * b
    a_lo = a & MASK32
    a_hi = a >> U32
    b_lo = b & MASK32
    b_hi = b >> U32
    t1 = a_lo * b_lo
    t2 = a_hi * b_lo
    t3 = a_lo * b_hi
    cross = (t1 >> U32) + (t2 & MASK32) + t3
    hi = a_hi * b_hi + (t2 >> U32) + (cross >> U32)
    return hi, lo


@njit(inline="always")
def _philox4(k0, k1, c0, c1, c2, c3):
    for r in range(10):
        if r > 0:
            k0 = k0 + W0
            k1 = k1 + W1
        hi0, lo0 = _mulhilo(M0, c0)
        hi1, lo1 = _mulhilo(M1, c2)
        n0 = hi1 ^ c1 ^ k0
        n1 = lo1
        n2 = hi0 ^ c3 ^ k1
        n3 = lo0
        c0, c1, c2, c3 = n0, n1, n2, n3
    return c0, c1, c2, c3


@njit(inline="always")
def _block(seed, domain, trial, block):
    return _philox4(seed, np.uint64(KEY_SALT), block, trial, domain, U0)


@njit(inline="always")
def u64_at(seed, domain, trial, idx):
    x0, x1, x2, x3 = _block(seed, domain, trial, idx >> U2)
    lane = idx & U3
    if lane == U0:
        return x0
    elif lane == U1:
        return x1
    elif lane == U2:
        return x2
    return x3


@njit(inline="always")
def dbl_at(seed, domain, trial, idx):
    # uniform in [0, 1)
    return float(u64_at(seed, domain, trial, idx) >> U11) * _INV53


@njit(inline="always")
def dbl_pos_at(seed, domain, trial, idx):
    # uniform in (0, 1]
    return float((u64_at(seed, domain, trial, idx) >> U11) + U1) * _INV53


@njit(inline="always")
def normal_pair_at(seed, domain, trial, cursor):
    u1 = dbl_pos_at(seed, domain, trial, cursor)
    u2 = dbl_at(seed, domain, trial, cursor + U1)
    r = math.sqrt(-2.0 * math.log(u1))
    a = _TWO_PI * u2
    return r * math.cos(a), r * math.sin(a), cursor + U2


@njit
def gamma_at(seed, domain, trial, cursor, shape, scale):
    """One Gamma(shape, scale) draw via Marsaglia-Tsang squeeze."""
    if scale == 0.0 or shape <= 0.0:
        return 0.0, cursor
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    z = 0.0
    while True:
        u1 = dbl_pos_at(seed, domain, trial, cursor)
        u2 = dbl_at(seed, domain, trial, cursor + U1)
        u3 = dbl_at(seed, domain, trial, cursor + U2)
        cursor = cursor + U3
        r = math.sqrt(-2.0 * math.log(u1))
        x = r * math.cos(_TWO_PI * u2)
        t = 1.0 + c * x
        if t <= 0.0:
            continue
        v = t * t * t
        xsq = x * x
        if u3 < 1.0 - 0.0331 * xsq * xsq:
            z = d * v
            break
        if u3 > 0.0 and math.log(u3) < 0.5 * xsq + d * (1.0 - v + math.log(v)):
            z = d * v
            break
        if u3 == 0.0:
            z = d * v
            break
    if boost:
        u4 = dbl_pos_at(seed, domain, trial, cursor)
        cursor = cursor + U1
        z = z * u4 ** (1.0 / shape)
    return z * scale, cursor


@njit
def sr_power_at(seed, domain, trial, cursor, omega, b0, m):
    """One shadowed-Rician power draw: diffuse Gaussian plus
    Nakagami-shadowed line-of-sight amplitude."""
    g1, g2, cursor = normal_pair_at(seed, domain, trial, cursor)
    los, cursor = gamma_at(seed, domain, trial, cursor, m, omega / m)
    sb = math.sqrt(b0)
    re = sb * g1 + math.sqrt(los)
    im = sb * g2
    return re * re + im * im, cursor


# ---------------------------------------------------------------------------
# vectorised twins (numpy path and public samplers)
# ---------------------------------------------------------------------------

def _mulhilo_vec(m_int, v):
    m = np.uint64(m_int)
    m_lo = np.uint64(m_int & 0xFFFFFFFF)
    m_hi = np.uint64(m_int >> 32)
    lo = v * m
    v_lo = v & MASK32
    v_hi = v >> U32
    t1 = m_lo * v_lo
    t2 = m_hi * v_lo
    t3 = m_lo * v_hi
    cross = (t1 >> U32) + (t2 & MASK32) + t3
    hi = m_hi * v_hi + (t2 >> U32) + (cross >> U32)
    return hi, lo


def philox4_vec(key0, key1, c0, c1, c2, c3):
    """Philox4x64-10 on uint64 arrays; key schedule in exact int arithmetic."""
    k0 = int(key0) & _MASK64
    k1 = int(key1) & _MASK64
    v0 = np.atleast_1d(np.asarray(c0, dtype=np.uint64))
    v1 = np.atleast_1d(np.asarray(c1, dtype=np.uint64))
    v2 = np.atleast_1d(np.asarray(c2, dtype=np.uint64))
    v3 = np.atleast_1d(np.asarray(c3, dtype=np.uint64))
    v0, v1, v2, v3 = np.broadcast_arrays(v0, v1, v2, v3)
    with np.errstate(over="ignore"):
        for r in range(10):
            if r:
                k0 = (k0 + _W0) & _MASK64
                k1 = (k1 + _W1) & _MASK64
            hi0, lo0 = _mulhilo_vec(_M0, v0)
            hi1, lo1 = _mulhilo_vec(_M1, v2)
            v0, v1, v2, v3 = (hi1 ^ v1 ^ np.uint64(k0), lo1,
                              hi0 ^ v3 ^ np.uint64(k1), lo0)
    return v0, v1, v2, v3


def _blocks_vec(seed, domain, trials, blocks):
    return philox4_vec(seed, KEY_SALT, blocks, trials,
                       np.uint64(domain), np.zeros_like(np.asarray(blocks, np.uint64)))


def u64_at_vec(seed, domain, trials, idxs):
    trials = np.atleast_1d(np.asarray(trials, dtype=np.uint64))
    idxs = np.atleast_1d(np.asarray(idxs, dtype=np.uint64))
    trials, idxs = np.broadcast_arrays(trials, idxs)
    x0, x1, x2, x3 = _blocks_vec(seed, domain, trials, idxs >> U2)
    lane = (idxs & U3).astype(np.int64)
    stack = np.stack((x0, x1, x2, x3))
    return stack[lane, np.arange(lane.size)]


def dbl_at_vec(seed, domain, trials, idxs):
    return (u64_at_vec(seed, domain, trials, idxs) >> U11).astype(np.float64) * _INV53


def dbl_pos_at_vec(seed, domain, trials, idxs):
    return ((u64_at_vec(seed, domain, trials, idxs) >> U11) + U1).astype(np.float64) * _INV53


def normal_pair_at_vec(seed, domain, trials, cursors):
    """Box-Muller pair per element; consumes two draws per element."""
    u1 = dbl_pos_at_vec(seed, domain, trials, cursors)
    u2 = dbl_at_vec(seed, domain, trials, cursors + U1)
    r = np.sqrt(-2.0 * np.log(u1))
    a = _TWO_PI * u2
    return r * np.cos(a), r * np.sin(a), cursors + U2


def gamma_at_vec(seed, domain, trials, cursors, shape, scale):
    """Gamma(shape, scale) draws, one per element, matching the scalar
    kernel's per-trial draw consumption."""
    trials = np.asarray(trials, dtype=np.uint64)
    cursors = np.array(cursors, dtype=np.uint64, copy=True)
    n = trials.size
    out = np.zeros(n, dtype=np.float64)
    if scale == 0.0 or shape <= 0.0:
        return out, cursors
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    pending = np.ones(n, dtype=bool)
    guard = 0
    while pending.any():
        guard += 1
        if guard > 10000:
            raise RuntimeError("gamma sampler failed to accept after 10000 rounds")
        idx = np.nonzero(pending)[0]
        t_sub = trials[idx]
        cur = cursors[idx]
        u1 = dbl_pos_at_vec(seed, domain, t_sub, cur)
        u2 = dbl_at_vec(seed, domain, t_sub, cur + U1)
        u3 = dbl_at_vec(seed, domain, t_sub, cur + U2)
        cursors[idx] = cur + U3
        r = np.sqrt(-2.0 * np.log(u1))
        x = r * np.cos(_TWO_PI * u2)
        t = 1.0 + c * x
        ok = t > 0.0
        v = np.where(ok, t, 1.0) ** 3
        xsq = x * x
        squeeze = u3 < 1.0 - 0.0331 * xsq * xsq
        with np.errstate(divide="ignore"):
            logu = np.where(u3 > 0.0, np.log(np.where(u3 > 0.0, u3, 1.0)), -np.inf)
        full = logu < 0.5 * xsq + d * (1.0 - v + np.log(v))
        accept = ok & (squeeze | full | (u3 == 0.0))
        hit = idx[accept]
        out[hit] = d * v[accept]
        pending[hit] = False
    if boost:
        u4 = dbl_pos_at_vec(seed, domain, trials, cursors)
        cursors = cursors + U1
        out *= u4 ** (1.0 / shape)
    return out * scale, cursors


def sr_power_at_vec(seed, domain, trials, cursors, omega, b0, m):
    g1, g2, cursors = normal_pair_at_vec(seed, domain, trials, cursors)
    los, cursors = gamma_at_vec(seed, domain, trials, cursors, m, omega / m)
    sb = math.sqrt(b0)
    re = sb * g1 + np.sqrt(los)
    im = sb * g2
    return re * re + im * im, cursors


# ---------------------------------------------------------------------------
# public stream object
# ---------------------------------------------------------------------------

class SampleStream:
    """Mutable handle over a counter-based stream.

    Each drawn sample owns the substream ``(seed, domain, counter + i)``;
    ``take(n)`` reserves the next ``n`` sample indices.  Identical
    ``(seed, domain)`` always reproduces the same sequence.
    """

    def __init__(self, seed: int, domain: int = DOMAIN_GEOMETRY):
        self.seed = np.uint64(int(seed) & _MASK64)
        self.domain = int(domain)
        self.counter = 0

    def take(self, n: int) -> np.ndarray:
        start = self.counter
        self.counter += int(n)
        return np.arange(start, self.counter, dtype=np.uint64)

    def spawn(self, domain: int) -> "SampleStream":
        return SampleStream(int(self.seed), domain)
