"""Exact multivariate polynomials in variables x1..xn.

Coefficients are stored as `fractions.Fraction`, so ring arithmetic is exact:
adding a polynomial and subtracting it again restores the original term by
term, and identities like the tangency of the sliding field to the switching
surface come out as the literal zero polynomial.  Numeric evaluation goes
through a cached float-compiled form (numpy) so the integrator stays fast.

Terms are kept in graded lexicographic order (total degree first, then
exponent tuple) which gives every polynomial a canonical term list.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

MAX_VARS = 3


def _as_fraction(c):
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, float):
        return Fraction(c)  # exact binary expansion
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError("unsupported coefficient type: %r" % (type(c),))


def _grlex_key(expo):
    return (sum(expo), tuple(-e for e in expo))


class PolyBundle:
    """Joint float evaluator for a fixed tuple of polynomials.

    Packs all terms of all member polynomials into one coefficient/exponent
    table so a single numpy pass evaluates the whole bundle; used in the
    integrator inner loop where per-polynomial call overhead adds up.
    """

    def __init__(self, polys):
        self.polys = tuple(polys)
        self.size = len(self.polys)
        nvars = self.polys[0].nvars
        coeffs, expos, owner = [], [], []
        for k, p in enumerate(self.polys):
            if p.nvars != nvars:
                raise ValueError("bundle members must share the variable count")
            for expo, c in p.terms.items():
                coeffs.append(float(c))
                expos.append(expo)
                owner.append(k)
        self.nvars = nvars
        self._coeffs = np.asarray(coeffs, dtype=float)
        self._expos = np.asarray(expos, dtype=np.int64).reshape(len(coeffs), nvars)
        scatter = np.zeros((len(coeffs), self.size))
        for row, k in enumerate(owner):
            scatter[row, k] = 1.0
        self._scatter = scatter

    def __call__(self, point):
        pt = np.asarray(point, dtype=float)
        if self._coeffs.size == 0:
            shape = (self.size,) if pt.ndim == 1 else (pt.shape[0], self.size)
            return np.zeros(shape)
        if pt.ndim == 1:
            mono = np.prod(pt[None, :] ** self._expos, axis=1)
            return (mono * self._coeffs) @ self._scatter
        mono = np.prod(pt[:, None, :] ** self._expos[None, :, :], axis=2)
        return (mono * self._coeffs[None, :]) @ self._scatter


class Polynomial:
    """Immutable exact polynomial.

    `terms` maps exponent tuples (length = nvars, non-negative ints) to
    nonzero Fraction coefficients.
    """

    __slots__ = ("nvars", "terms", "_compiled")

    def __init__(self, nvars, terms=None):
        if not 1 <= nvars <= MAX_VARS:
            raise ValueError("nvars must be between 1 and %d" % MAX_VARS)
        self.nvars = nvars
        clean = {}
        if terms:
            for expo, coeff in terms.items():
                expo = tuple(int(e) for e in expo)
                if len(expo) != nvars or any(e < 0 for e in expo):
                    raise ValueError("bad exponent tuple %r" % (expo,))
                coeff = _as_fraction(coeff)
                if coeff != 0:
                    clean[expo] = clean.get(expo, Fraction(0)) + coeff
                    if clean[expo] == 0:
                        del clean[expo]
        # canonical storage order so evaluation sums floats the same way
        # no matter how the polynomial was assembled
        self.terms = {e: clean[e] for e in sorted(clean, key=_grlex_key)}
        self._compiled = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, nvars):
        return cls(nvars, {})

    @classmethod
    def constant(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars, index):
        if not 0 <= index < nvars:
            raise ValueError("variable index out of range")
        expo = [0] * nvars
        expo[index] = 1
        return cls(nvars, {tuple(expo): 1})

    # -- canonical form ----------------------------------------------------

    def term_list(self):
        """Terms as (exponent_tuple, Fraction) in graded-lex order."""
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]))

    def degree(self):
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def is_zero(self):
        return not self.terms

    # -- ring arithmetic ---------------------------------------------------

    def _check(self, other):
        if self.nvars != other.nvars:
            raise ValueError("variable count mismatch")

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        self._check(other)
        terms = dict(self.terms)
        for expo, c in other.terms.items():
            terms[expo] = terms.get(expo, Fraction(0)) + c
        return Polynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = _as_fraction(other)
            return Polynomial(self.nvars, {e: k * c for e, k in self.terms.items()})
        self._check(other)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                expo = tuple(a + b for a, b in zip(e1, e2))
                terms[expo] = terms.get(expo, Fraction(0)) + c1 * c2
        return Polynomial(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.nvars, tuple(self.term_list())))

    # -- calculus ----------------------------------------------------------

    def diff(self, index):
        """Partial derivative with respect to x{index+1}."""
        terms = {}
        for expo, c in self.terms.items():
            e = expo[index]
            if e == 0:
                continue
            nexpo = list(expo)
            nexpo[index] = e - 1
            nexpo = tuple(nexpo)
            terms[nexpo] = terms.get(nexpo, Fraction(0)) + c * e
        return Polynomial(self.nvars, terms)

    def gradient(self):
        return [self.diff(i) for i in range(self.nvars)]

    # -- evaluation ----------------------------------------------------------

    def _compile(self):
        if self._compiled is None:
            items = self.term_list()
            coeffs = np.array([float(c) for _, c in items], dtype=float)
            expos = np.array([e for e, _ in items], dtype=np.int64)
            if not items:
                coeffs = np.zeros(0)
                expos = np.zeros((0, self.nvars), dtype=np.int64)
            self._compiled = (coeffs, expos)
        return self._compiled

    def __call__(self, point):
        """Evaluate at a point (len nvars) or a batch of points (k, nvars)."""
        coeffs, expos = self._compile()
        pt = np.asarray(point, dtype=float)
        if pt.ndim == 1:
            if coeffs.size == 0:
                return 0.0
            mono = np.prod(pt[None, :] ** expos, axis=1)
            return float(coeffs @ mono)
        if coeffs.size == 0:
            return np.zeros(pt.shape[0])
        mono = np.prod(pt[:, None, :] ** expos[None, :, :], axis=2)
        return mono @ coeffs

    def eval_exact(self, point):
        """Evaluate with Fraction arithmetic (point entries int/Fraction)."""
        total = Fraction(0)
        for expo, c in self.terms.items():
            term = c
            for x, e in zip(point, expo):
                term *= _as_fraction(x) ** e
            total += term
        return total

    # -- display -------------------------------------------------------------

    def __str__(self):
        return self.__repr__()

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for expo, c in self.term_list():
            factors = []
            if c != 1 or not any(expo):
                factors.append(str(c))
            for i, e in enumerate(expo):
                if e == 1:
                    factors.append("x%d" % (i + 1))
                elif e > 1:
                    factors.append("x%d^%d" % (i + 1, e))
            parts.append("*".join(factors))
        return " + ".join(parts).replace("+ -", "- ")
