"""Exact arithmetic over GF(p^r).

Elements are carried as integer indices in ``[0, q)``: the index of the
polynomial ``c_0 + c_1 x + ... + c_{r-1} x^{r-1}`` is ``sum(c_i * p**i)``.
All array-level operations accept numpy integer arrays (or plain ints) and
broadcast, so the protocol code never loops over symbols in Python.

:class:`FieldElement` is a thin scalar wrapper for interactive use and
examples; hot paths use the :class:`FieldSpec` methods directly.
"""
from __future__ import annotations

import cmath
import functools
import itertools
import math
from typing import Iterable, Sequence

import numpy as np

# Full q x q add/mul tables below this order; log/antilog tables above it.
_FULL_TABLE_MAX = 256
_MAX_BITS = 20


class FieldError(ValueError):
    """Invalid field construction or mixed-field arithmetic."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for d in range(3, math.isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


def prime_power(n: int) -> tuple[int, int] | None:
    """Return ``(p, r)`` with ``p**r == n`` or None when n is not a prime power."""
    if n < 2:
        return None
    for p in range(2, n + 1):
        if n % p == 0:
            if not is_prime(p):
                return None
            r, m = 0, n
            while m % p == 0:
                m //= p
                r += 1
            return (p, r) if m == 1 else None
    return None


def smallest_prime_power_at_least(n: int) -> tuple[int, int]:
    m = max(n, 2)
    while True:
        pr = prime_power(m)
        if pr is not None:
            return pr
        m += 1


# -- polynomial helpers over Z_p (coefficient lists, low degree first) --------

def _poly_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mod(a: Sequence[int], m: Sequence[int], p: int) -> list[int]:
    a = _poly_trim([c % p for c in a])
    m = _poly_trim([c % p for c in m])
    inv_lead = pow(m[-1], p - 2, p)
    while len(a) >= len(m):
        coef = a[-1] * inv_lead % p
        shift = len(a) - len(m)
        for i, c in enumerate(m):
            a[shift + i] = (a[shift + i] - coef * c) % p
        _poly_trim(a)
    return a


def _monic_polys(p: int, degree: int) -> Iterable[list[int]]:
    # Ordered by sum(c_i p^i) over the low coefficients: lexicographic from the
    # constant term upward once read as base-p digits.
    for idx in range(p ** degree):
        low = [(idx // p ** i) % p for i in range(degree)]
        yield low + [1]


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Exhaustive trial division by every monic polynomial of degree <= deg/2."""
    poly = _poly_trim([c % p for c in poly])
    deg = len(poly) - 1
    if deg < 1:
        return False
    if deg == 1:
        return True
    for d in range(1, deg // 2 + 1):
        for cand in _monic_polys(p, d):
            if not _poly_mod(poly, cand, p):
                return False
    return True


def default_modulus(p: int, r: int) -> tuple[int, ...]:
    if r == 1:
        return (0, 1)
    for cand in _monic_polys(p, r):
        if is_irreducible(cand, p):
            return tuple(cand)
    raise FieldError(f"no irreducible polynomial of degree {r} over Z_{p}")


class FieldSpec:
    """The field GF(p^r) under a fixed irreducible modulus.

    Instances are immutable and cached per ``(p, r, modulus)``; build them
    with :func:`field_make`.
    """

    def __init__(self, p: int, r: int, modulus: tuple[int, ...]):
        self.p = p
        self.r = r
        self.modulus = modulus
        self.q = p ** r
        q = self.q
        self._digits = np.array(
            [[(i // p ** k) % p for k in range(r)] for i in range(q)], dtype=np.int64
        ).reshape(q, r)
        self._weights = np.array([p ** k for k in range(r)], dtype=np.int64)

        self._exp, self._log, self.generator = self._build_log_tables()
        self._inv = np.zeros(q, dtype=np.int64)
        nz = np.arange(1, q)
        self._inv[1:] = self._exp[(q - 1 - self._log[nz]) % (q - 1)]
        self._neg = self._from_digits((-self._digits) % p)

        if q <= _FULL_TABLE_MAX:
            a = np.arange(q)
            self._add_t = self._add_digits(a[:, None], a[None, :])
            self._mul_t = self._mul_logs(a[:, None], a[None, :])
        else:
            self._add_t = None
            self._mul_t = None

        # tr(a) = a + a^p + ... + a^{p^{r-1}} lands in the prime subfield,
        # whose indices are exactly 0..p-1.
        tr = np.zeros(q, dtype=np.int64)
        for k in range(r):
            tr = self.add(tr, self.pow(np.arange(q), p ** k))
        if np.any(tr >= p):
            raise FieldError("trace left the prime subfield; modulus is broken")
        self._trace = tr
        omega = cmath.exp(2j * math.pi / p)
        self._char = np.array([omega ** int(t) for t in tr], dtype=np.complex128)

        for arr in (self._exp, self._log, self._inv, self._neg, self._trace, self._char):
            arr.setflags(write=False)

    # -- construction helpers ------------------------------------------------

    def _from_digits(self, d: np.ndarray) -> np.ndarray:
        return (d * self._weights).sum(axis=-1)

    def _add_digits(self, a, b):
        if self.r == 1:
            return (a + b) % self.p
        if self.p == 2:
            return np.bitwise_xor(a, b)
        return self._from_digits((self._digits[a] + self._digits[b]) % self.p)

    def _poly_mulmod(self, a: int, b: int) -> int:
        p, r = self.p, self.r
        da = [(a // p ** k) % p for k in range(r)]
        db = [(b // p ** k) % p for k in range(r)]
        prod = [0] * (2 * r - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    prod[i + j] += x * y
        red = _poly_mod(prod, self.modulus, p)
        return sum(c * p ** k for k, c in enumerate(red))

    def _build_log_tables(self):
        q = self.q
        exp = np.zeros(2 * q, dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        if q == 2:
            exp[:] = 1
            return exp, log, 1
        for g in range(2, q):
            seq = [1]
            x = g
            while x != 1 and len(seq) < q:
                seq.append(x)
                x = self._poly_mulmod(x, g)
            if len(seq) == q - 1 and x == 1:
                break
        else:  # pragma: no cover - every finite field has a primitive element
            raise FieldError("no primitive element found")
        for i, v in enumerate(seq):
            exp[i] = v
            log[v] = i
        exp[q - 1:2 * (q - 1)] = exp[: q - 1]
        return exp, log, g

    def _mul_logs(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self._exp[(self._log[a] + self._log[b]) % (self.q - 1)]
        return np.where((a == 0) | (b == 0), 0, out)

    # -- vectorised arithmetic ----------------------------------------------

    def add(self, a, b):
        if self._add_t is not None:
            return self._add_t[a, b]
        return self._add_digits(np.asarray(a), np.asarray(b))

    def neg(self, a):
        return self._neg[a]

    def sub(self, a, b):
        return self.add(a, self._neg[b])

    def mul(self, a, b):
        if self._mul_t is not None:
            return self._mul_t[a, b]
        return self._mul_logs(a, b)

    def inv(self, a):
        a = np.asarray(a)
        if np.any(a == 0):
            raise ZeroDivisionError("zero has no inverse in GF(%d)" % self.q)
        return self._inv[a]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, e: int):
        a = np.asarray(a, dtype=np.int64)
        if e == 0:
            return np.ones_like(a)
        if e < 0:
            return self.pow(self.inv(a), -e)
        out = self._exp[(self._log[a] * e) % (self.q - 1)]
        return np.where(a == 0, 0, out)

    def trace(self, a):
        """Absolute trace to the prime subfield, as an integer in [0, p)."""
        return self._trace[a]

    def character(self, a):
        """Additive character ``exp(2 pi i tr(a) / p)``."""
        return self._char[a]

    def sum(self, a, axis=None):
        """Field sum along ``axis`` (all entries when None)."""
        a = np.asarray(a, dtype=np.int64)
        if axis is None:
            a = a.reshape(-1)
            axis = 0
        axis = axis % a.ndim
        if self.r == 1:
            return a.sum(axis=axis) % self.p
        if self.p == 2:
            return np.bitwise_xor.reduce(a, axis=axis)
        d = self._digits[a].sum(axis=axis) % self.p
        return self._from_digits(d)

    def dot(self, a, b, axis=-1):
        return self.sum(self.mul(a, b), axis=axis)

    def matmul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.r == 1:
            return (a @ b) % self.p
        if a.ndim == 1:
            return self.sum(self.mul(a[:, None], b), axis=0)
        if b.ndim == 1:
            return self.sum(self.mul(a, b[None, :]), axis=1)
        return self.sum(self.mul(a[:, :, None], b[None, :, :]), axis=1)

    def random(self, rng: np.random.Generator, size=None):
        return rng.integers(0, self.q, size=size, dtype=np.int64)

    def elements(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int64)

    def subfield_solver(self):
        """Table mapping ``(tr(b_0 y), ..., tr(b_{r-1} y))`` back to ``y``.

        ``b_k`` is the polynomial basis element of index ``p**k``. The trace
        form is nondegenerate, so the map ``y -> trace vector`` is a bijection.
        """
        return _trace_decoder(self)

    # -- scalar conveniences -------------------------------------------------

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(self, value)

    def __repr__(self) -> str:
        if self.r == 1:
            return f"GF({self.p})"
        return f"GF({self.p}^{self.r})"

    def to_dict(self) -> dict:
        return {"p": self.p, "r": self.r, "modulus": list(self.modulus)}

    @classmethod
    def from_dict(cls, d: dict) -> "FieldSpec":
        return field_make(d["p"], d["r"], d.get("modulus"))


@functools.lru_cache(maxsize=None)
def _trace_decoder(field: FieldSpec) -> np.ndarray:
    basis = np.array([field.p ** k for k in range(field.r)], dtype=np.int64)
    ys = field.elements()
    digits = field.trace(field.mul(basis[None, :], ys[:, None]))
    key = (digits * field._weights).sum(axis=1)
    table = np.full(field.q, -1, dtype=np.int64)
    table[key] = ys
    if np.any(table < 0):  # pragma: no cover
        raise FieldError("trace form is degenerate")
    return table


@functools.lru_cache(maxsize=None)
def _field_cached(p: int, r: int, modulus: tuple[int, ...]) -> FieldSpec:
    return FieldSpec(p, r, modulus)


def field_make(p: int, r: int = 1, modulus: Sequence[int] | None = None) -> FieldSpec:
    """Build (or fetch the cached) GF(p^r).

    ``modulus`` lists polynomial coefficients from the constant term up and must
    be monic of degree ``r``; the default is the irreducible polynomial whose
    base-p digit value is smallest, e.g. ``x^3 + x + 1`` for GF(8).
    """
    if not is_prime(p):
        raise FieldError(f"characteristic {p} is not prime")
    if r < 1:
        raise FieldError(f"extension degree must be >= 1, got {r}")
    if r * math.log2(p) > _MAX_BITS:
        raise FieldError(f"GF({p}^{r}) exceeds the 2^{_MAX_BITS} size guard")
    if modulus is None:
        mod = default_modulus(p, r)
    else:
        mod = tuple(int(c) % p for c in modulus)
        if len(mod) != r + 1 or mod[-1] != 1:
            raise FieldError(f"modulus must be monic of degree {r}")
        if not is_irreducible(mod, p):
            raise FieldError(f"modulus {list(mod)} is reducible over Z_{p}")
    return _field_cached(p, r, mod)


def field_of_order(q: int) -> FieldSpec:
    pr = prime_power(q)
    if pr is None:
        raise FieldError(f"{q} is not a prime power")
    return field_make(*pr)


class FieldElement:
    """Scalar element bound to a :class:`FieldSpec`."""

    __slots__ = ("field", "value")

    def __init__(self, field: FieldSpec, value: int):
        value = int(value)
        if not 0 <= value < field.q:
            raise FieldError(f"index {value} outside [0, {field.q})")
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "value", value)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    @property
    def coeffs(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.field._digits[self.value])

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field is not self.field:
                raise FieldError(f"mixed fields {self.field} and {other.field}")
            return other.value
        if isinstance(other, (int, np.integer)):
            return int(other) % self.field.p if self.field.r == 1 else int(other)
        return NotImplemented

    def _wrap(self, v) -> "FieldElement":
        return FieldElement(self.field, int(v))

    def __add__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.field.add(self.value, o))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.field.sub(self.value, o))

    def __rsub__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.field.sub(o, self.value))

    def __mul__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.field.mul(self.value, o))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.field.div(self.value, o))

    def __rtruediv__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.field.div(o, self.value))

    def __neg__(self):
        return self._wrap(self.field.neg(self.value))

    def __pow__(self, e: int):
        return self._wrap(self.field.pow(self.value, int(e)))

    def inv(self) -> "FieldElement":
        return self._wrap(self.field.inv(self.value))

    def trace(self) -> int:
        return int(self.field.trace(self.value))

    def character(self) -> complex:
        return complex(self.field.character(self.value))

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.field is other.field and self.value == other.value
        if isinstance(other, (int, np.integer)):
            return self.value == int(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.field.p, self.field.r, self.field.modulus, self.value))

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value

    def __repr__(self):
        return f"{self.field}({self.value})"


def field_arith(a: FieldElement, b: FieldElement | None, kind: str) -> FieldElement:
    """Dispatch one of add/sub/mul/div/inv/pow; ``b`` is the exponent for pow."""
    if kind == "inv":
        return a.inv()
    if kind == "pow":
        return a ** int(b)
    if not isinstance(b, FieldElement) or b.field is not a.field:
        raise FieldError("operands must share one FieldSpec")
    ops = {
        "add": lambda: a + b,
        "sub": lambda: a - b,
        "mul": lambda: a * b,
        "div": lambda: a / b,
    }
    if kind not in ops:
        raise ValueError(f"unknown operation {kind!r}")
    return ops[kind]()


def fourier_matrix(field: FieldSpec) -> np.ndarray:
    """``F[k, l] = character(k * l)``; satisfies ``F F^* = q I``."""
    e = field.elements()
    return field.character(field.mul(e[:, None], e[None, :]))


def iter_vectors(field: FieldSpec, length: int):
    """All vectors of ``F_q^length`` in index order (first coordinate slowest)."""
    for t in itertools.product(range(field.q), repeat=length):
        yield np.array(t, dtype=np.int64)
