"""Finite fields GF(p) and GF(2^m) carried in discrete-log form.

Every construction downstream consumes exponents of a fixed primitive
element, so elements live as ``alpha**e`` with ``e`` in ``[0, q-2]`` and the
zero element is the sentinel ``ZERO_LOG`` (-1). Addition goes through the
antilog/log tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from math import gcd

import numpy as np

ZERO_LOG = -1


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _poly_cycle(modulus: int, m: int) -> list[int] | None:
    """Powers of x modulo ``modulus``; None unless x has order exactly 2^m - 1."""
    order = (1 << m) - 1
    top = 1 << m
    powers = [1]
    v = 1
    for _ in range(order - 1):
        v <<= 1
        if v & top:
            v ^= modulus
        if v == 1:
            return None
        powers.append(v)
    v <<= 1
    if v & top:
        v ^= modulus
    return powers if v == 1 else None


def smallest_primitive_polynomial(m: int) -> int:
    """Smallest primitive degree-``m`` polynomial over GF(2), as a bit mask.

    Bit ``i`` holds the coefficient of ``x**i``; candidates are scanned in
    increasing integer order, so x^4 + x + 1 (0b10011) wins over x^4 + x^3 + 1.
    """
    for cand in range((1 << m) | 1, 1 << (m + 1), 2):
        if _poly_cycle(cand, m) is not None:
            return cand
    raise RuntimeError(f"no primitive polynomial of degree {m} found")


def smallest_primitive_root(p: int) -> int:
    if p == 2:
        return 1
    factors = prime_factors(p - 1)
    for g in range(2, p):
        if all(pow(g, (p - 1) // r, p) != 1 for r in factors):
            return g
    raise RuntimeError(f"no primitive root mod {p}")


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """GF(q) with a designated primitive element ``alpha``.

    Attributes
    ----------
    q, p, m : int
        Field size, characteristic and extension degree (``q == p**m``).
    modulus : tuple of int or None
        Coefficients (low to high) of the primitive polynomial when
        ``p == 2`` and ``m > 1``.
    alpha : int
        Integer image of the primitive element: the primitive root for prime
        fields, the polynomial ``x`` (i.e. 2) for binary extension fields.
    exp, log : ndarray
        Antilog table of length ``2(q-1)`` and log table of length ``q`` with
        ``log[0] == ZERO_LOG``.
    """

    q: int
    p: int
    m: int
    modulus: tuple[int, ...] | None
    alpha: int
    exp: np.ndarray = dc_field(repr=False)
    log: np.ndarray = dc_field(repr=False)

    @property
    def order(self) -> int:
        """Order of the multiplicative group, ``q - 1``."""
        return self.q - 1

    @property
    def is_binary(self) -> bool:
        return self.p == 2

    def __eq__(self, other):
        return isinstance(other, FieldSpec) and (self.q, self.modulus, self.alpha) == (
            other.q, other.modulus, other.alpha)

    def __hash__(self):
        return hash((self.q, self.modulus, self.alpha))

    # scalar API -----------------------------------------------------------

    def element(self, e: int | None) -> FieldElement:
        """``alpha**e``; ``None`` gives the zero element."""
        if e is None:
            return FieldElement(self, ZERO_LOG)
        return FieldElement(self, e % self.order)

    @property
    def zero(self) -> FieldElement:
        return FieldElement(self, ZERO_LOG)

    @property
    def one(self) -> FieldElement:
        return FieldElement(self, 0)

    def from_int(self, v: int) -> FieldElement:
        if not 0 <= v < self.q:
            raise ValueError(f"{v} is not an element of GF({self.q})")
        return FieldElement(self, int(self.log[v]))

    def add(self, a: FieldElement, b: FieldElement) -> FieldElement:
        self._same(a, b)
        return FieldElement(self, int(self.add_logs(a.log, b.log)))

    def sub(self, a: FieldElement, b: FieldElement) -> FieldElement:
        self._same(a, b)
        return FieldElement(self, int(self.sub_logs(a.log, b.log)))

    def mul(self, a: FieldElement, b: FieldElement) -> FieldElement:
        self._same(a, b)
        return FieldElement(self, int(self.mul_logs(a.log, b.log)))

    def pow(self, a: FieldElement, k: int) -> FieldElement:
        if a.field != self:
            raise ValueError("element belongs to a different field")
        if a.is_zero and k == 0:
            raise ValueError("0**0 is undefined")
        if a.is_zero and k < 0:
            raise ZeroDivisionError("zero has no inverse")
        return FieldElement(self, int(self.pow_logs(a.log, k)))

    def element_order(self, a: FieldElement) -> int:
        if a.is_zero:
            raise ValueError("zero has no multiplicative order")
        return self.order // gcd(a.log, self.order)

    def _same(self, a: FieldElement, b: FieldElement) -> None:
        if a.field != self or b.field != self:
            raise ValueError("elements belong to different fields")

    # vectorised log-domain arithmetic -------------------------------------

    def to_int(self, logs) -> np.ndarray:
        logs = np.asarray(logs, dtype=np.int64)
        return np.where(logs < 0, 0, self.exp[np.maximum(logs, 0)])

    def to_log(self, ints) -> np.ndarray:
        return self.log[np.asarray(ints, dtype=np.int64)]

    def add_ints(self, a, b) -> np.ndarray:
        if self.is_binary:
            return np.bitwise_xor(a, b)
        return (np.asarray(a) + b) % self.p

    def sub_ints(self, a, b) -> np.ndarray:
        if self.is_binary:
            return np.bitwise_xor(a, b)
        return (np.asarray(a) - b) % self.p

    def mul_ints(self, a, b) -> np.ndarray:
        return self.to_int(self.mul_logs(self.to_log(a), self.to_log(b)))

    def add_logs(self, a, b) -> np.ndarray:
        return self.to_log(self.add_ints(self.to_int(a), self.to_int(b)))

    def sub_logs(self, a, b) -> np.ndarray:
        return self.to_log(self.sub_ints(self.to_int(a), self.to_int(b)))

    def mul_logs(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        return np.where((a < 0) | (b < 0), ZERO_LOG, (a + b) % self.order)

    def pow_logs(self, a, k: int) -> np.ndarray:
        """Element-wise ``a**k`` for ``k >= 1`` (zero stays zero)."""
        a = np.asarray(a, dtype=np.int64)
        if k == 0:
            return np.zeros_like(a)
        return np.where(a < 0, ZERO_LOG, (a * k) % self.order)

    def inv_ints(self, a) -> np.ndarray:
        logs = self.to_log(a)
        if np.any(logs < 0):
            raise ZeroDivisionError("zero has no inverse")
        return self.to_int((-logs) % self.order)

    def __repr__(self):
        if self.modulus is not None:
            return f"FieldSpec(q={self.q}, modulus={self.modulus})"
        return f"FieldSpec(q={self.q}, alpha={self.alpha})"


@dataclass(frozen=True)
class FieldElement:
    """``alpha**log`` in ``field``, or zero when ``log == ZERO_LOG``."""

    field: FieldSpec
    log: int

    @property
    def is_zero(self) -> bool:
        return self.log == ZERO_LOG

    @property
    def value(self) -> int:
        """Integer image (residue, or polynomial bit mask)."""
        return 0 if self.is_zero else int(self.field.exp[self.log])

    def __add__(self, other):
        return self.field.add(self, other)

    def __sub__(self, other):
        return self.field.sub(self, other)

    def __mul__(self, other):
        return self.field.mul(self, other)

    def __pow__(self, k):
        return self.field.pow(self, k)

    def __neg__(self):
        return self.field.sub(self.field.zero, self)

    def order(self) -> int:
        return self.field.element_order(self)

    def __repr__(self):
        return "0" if self.is_zero else f"a^{self.log}"


def _parse_q(q: int) -> tuple[int, int]:
    if is_prime(q):
        return q, 1
    m = q.bit_length() - 1
    if q == 1 << m and 2 <= m <= 16:
        return 2, m
    raise ValueError(f"GF({q}) unsupported: q must be prime or 2**m with 2 <= m <= 16")


@lru_cache(maxsize=None)
def _build(q: int, modulus_mask: int | None) -> FieldSpec:
    p, m = _parse_q(q)
    if p == 2 and m > 1:
        mask = modulus_mask if modulus_mask is not None else smallest_primitive_polynomial(m)
        if mask >> m != 1:
            raise ValueError(f"modulus must have degree {m}")
        powers = _poly_cycle(mask, m)
        if powers is None:
            raise ValueError("modulus is not primitive (x does not have order q-1)")
        modulus = tuple((mask >> i) & 1 for i in range(m + 1))
        alpha = 2
    else:
        if modulus_mask is not None:
            raise ValueError("a modulus only applies to GF(2**m), m > 1")
        alpha = smallest_primitive_root(q)
        powers = [1]
        for _ in range(q - 2):
            powers.append(powers[-1] * alpha % q)
        modulus = None
    exp = np.array(powers + powers, dtype=np.int64)
    exp.setflags(write=False)
    log = np.full(q, ZERO_LOG, dtype=np.int64)
    log[np.array(powers, dtype=np.int64)] = np.arange(q - 1)
    log.setflags(write=False)
    return FieldSpec(q=q, p=p, m=m, modulus=modulus, alpha=alpha, exp=exp, log=log)


def build_field(q: int, modulus: int | tuple[int, ...] | None = None) -> FieldSpec:
    """Build GF(q) for prime ``q`` or ``q = 2**m`` (2 <= m <= 16).

    The primitive element is the smallest primitive root (prime fields) or the
    class of ``x`` modulo the smallest primitive polynomial (binary fields).
    An explicit ``modulus`` may be given as a bit mask or as a low-to-high
    coefficient tuple.
    """
    if isinstance(modulus, (tuple, list)):
        modulus = sum(int(c) << i for i, c in enumerate(modulus))
    return _build(int(q), modulus)
