"""Counter-based random streams (Philox4x64-10).

Every replication gets its own stream keyed by ``(master_seed, replication)``.
Draw ``j`` of a stream is a pure function of ``(seed, replication, tag, j)``,
so a replication produces the same numbers whether it runs serially, on any
worker, or in any batch order.

Layout: Philox block ``b`` with counter ``(b, tag, 0, 0)`` yields four 64-bit
words, turned into four standard normals by two Box-Muller transforms. Normal
``j`` lives in block ``j // 4``, lane ``j % 4``.
"""

import math

import numba as nb
import numpy as np

from .errors import ValidationError

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO_NEG53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * math.pi


@nb.njit(cache=True)
def _mulhilo(a, b):
    a_lo = a & _MASK32
    a_hi = a >> _S32
    b_lo = b & _MASK32
    b_hi = b >> _S32
    p0 = a_lo * b_lo
    p1 = a_lo * b_hi
    p2 = a_hi * b_lo
    p3 = a_hi * b_hi
    mid = (p0 >> _S32) + (p1 & _MASK32) + (p2 & _MASK32)
    hi = p3 + (p1 >> _S32) + (p2 >> _S32) + (mid >> _S32)
    lo = a * b
    return hi, lo


@nb.njit(cache=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox4x64 with 10 rounds. All arguments are ``np.uint64``."""
    for r in range(10):
        if r > 0:
            k0 = k0 + _W0
            k1 = k1 + _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@nb.njit(cache=True)
def _open_unit(w):
    # (0, 1]: safe for log
    return ((w >> _S11) + _ONE) * _TWO_NEG53


@nb.njit(cache=True)
def _half_open_unit(w):
    # [0, 1)
    return (w >> _S11) * _TWO_NEG53


@nb.njit(cache=True)
def normal_block(seed, rep, tag, block):
    """Four standard normals for Philox block ``block`` of one stream."""
    w0, w1, w2, w3 = philox4x64(
        np.uint64(block), np.uint64(tag), np.uint64(0), np.uint64(0),
        np.uint64(seed), np.uint64(rep),
    )
    r0 = math.sqrt(-2.0 * math.log(_open_unit(w0)))
    t0 = _TWO_PI * _half_open_unit(w1)
    r1 = math.sqrt(-2.0 * math.log(_open_unit(w2)))
    t1 = _TWO_PI * _half_open_unit(w3)
    return r0 * math.cos(t0), r0 * math.sin(t0), r1 * math.cos(t1), r1 * math.sin(t1)


@nb.njit(cache=True)
def uniform_block(seed, rep, tag, block):
    """Four uniforms on (0, 1] for Philox block ``block`` of one stream."""
    w0, w1, w2, w3 = philox4x64(
        np.uint64(block), np.uint64(tag), np.uint64(0), np.uint64(0),
        np.uint64(seed), np.uint64(rep),
    )
    return _open_unit(w0), _open_unit(w1), _open_unit(w2), _open_unit(w3)


@nb.njit(cache=True)
def normal_at(seed, rep, tag, j):
    z = normal_block(seed, rep, tag, j // 4)
    lane = j % 4
    if lane == 0:
        return z[0]
    if lane == 1:
        return z[1]
    if lane == 2:
        return z[2]
    return z[3]


@nb.njit(cache=True)
def _fill_normals(seed, rep, tag, start, out):
    for i in range(out.shape[0]):
        out[i] = normal_at(seed, rep, tag, start + i)


class CounterStream:
    """Sequential view of one replication's stream.

    Quacks like the subset of :class:`numpy.random.Generator` the library
    uses (``standard_normal``), so it can be handed to
    :func:`arcpd.detectors.run_until_stop` or :func:`arcpd.model.generate_path`
    and reproduce the batch engine draw for draw.
    """

    def __init__(self, seed, replication=0, tag=0, position=0):
        self.seed = int(seed)
        self.replication = int(replication)
        self.tag = int(tag)
        self.position = int(position)
        _check_u64(self.seed, "seed")
        _check_u64(self.replication, "replication")

    def standard_normal(self, size=None):
        if size is None:
            z = normal_at(self.seed, self.replication, self.tag, self.position)
            self.position += 1
            return float(z)
        out = np.empty(int(np.prod(size)), dtype=np.float64)
        _fill_normals(self.seed, self.replication, self.tag, self.position, out)
        self.position += out.size
        return out.reshape(size)

    def __repr__(self):
        return (f"CounterStream(seed={self.seed}, replication={self.replication}, "
                f"tag={self.tag}, position={self.position})")


def derive_seed(master_seed, *path):
    """Child seed for a named sub-experiment, independent of ``master_seed``'s own streams."""
    _check_u64(int(master_seed), "master_seed")
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _check_u64(value, name):
    if not 0 <= value < 2**64:
        raise ValidationError(f"{name} must be a 64-bit unsigned integer, got {value}")
