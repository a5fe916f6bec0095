"""Minimal symbolic kernel: exact expression trees with differentiation,
substitution, canonicalization and numeric evaluation.

Everything downstream (problem catalogs, reductions, symmetry residuals) is
written against this module.  Design constraints:

* coefficients are exact rationals; floats appear only in `eval_numeric`,
* expressions are immutable and hashable; all operations are pure,
* canonical form: flattened n-ary sums/products, collected rational
  coefficients, lexicographic term order, with a small fixed rewrite set
  (integer-multiple angle expansion, elimination of sin powers >= 2,
  cancellation of sums against power-of-sum denominators),
* definite integrals with a symbolic upper limit are opaque nodes: they are
  never evaluated symbolically, only differentiated (Leibniz rule) or
  evaluated by quadrature.  Dependent-variable symbols occurring inside an
  integrand are read as functions of the bound variable.
* `expi(x)` denotes the formal pair cos(x) + i sin(x); it is split into its
  two real components before any calculus is done on it.

Structural equality of canonical forms is the notion of equality; `equals`
is sound for the rewrite set above but is not a general zero-test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Mapping


class ExprError(Exception):
    """Malformed expression or unsupported symbolic operation."""


class BoundVariableError(ExprError):
    """Raised on differentiation with respect to a bound variable."""


class EvalError(ExprError):
    """Raised by eval_numeric on unbound symbols or non-finite values."""


class Role(Enum):
    INDEPENDENT = "independent"
    DEPENDENT = "dependent"
    PARAMETER = "parameter"
    BOUND = "bound"


class Expr:
    """Base class for expression nodes."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return add(self, neg(_coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), neg(self))

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __pow__(self, other):
        return pow_(self, other)

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        return to_prefix(self)


@dataclass(frozen=True, repr=False)
class Rat(Expr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True, repr=False)
class Symbol(Expr):
    name: str
    role: Role = Role.PARAMETER


@dataclass(frozen=True, repr=False)
class Add(Expr):
    terms: tuple


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    factors: tuple


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    base: Expr
    exp: Fraction


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    """Raw negation node; canonicalization lowers it to (* -1 x)."""

    arg: Expr


@dataclass(frozen=True, repr=False)
class Sin(Expr):
    arg: Expr


@dataclass(frozen=True, repr=False)
class Cos(Expr):
    arg: Expr


@dataclass(frozen=True, repr=False)
class Exp(Expr):
    arg: Expr


@dataclass(frozen=True, repr=False)
class ExpI(Expr):
    """Formal cos(arg) + i sin(arg); split with expi_split before calculus."""

    arg: Expr


@dataclass(frozen=True, repr=False)
class Deriv(Expr):
    arg: Symbol
    var: Symbol
    order: int


@dataclass(frozen=True, repr=False)
class Integral(Expr):
    """Definite integral of `integrand` in `bound` from a fixed constant
    (numerically 0) up to `upper`.  Dependent symbols in the integrand are
    functions of the bound variable."""

    integrand: Expr
    bound: Symbol
    upper: Symbol


def _install_hash_cache(cls):
    generated = cls.__hash__

    def cached(self, _gen=generated):
        h = self.__dict__.get("_h")
        if h is None:
            h = _gen(self)
            object.__setattr__(self, "_h", h)
        return h

    cls.__hash__ = cached


for _cls in (Rat, Symbol, Add, Mul, Pow, Neg, Sin, Cos, Exp, ExpI, Deriv, Integral):
    _install_hash_cache(_cls)


def _mark_canonical(e: Expr) -> Expr:
    if not isinstance(e, (Rat, Symbol)):
        object.__setattr__(e, "_canon", True)
    return e


def _canonical_constructor(fn):
    """Constructors return canonical forms; remember that on the node so
    canonicalize() can short-circuit."""

    def wrapper(*args, **kwargs):
        out = fn(*args, **kwargs)
        if isinstance(out, Expr):
            _mark_canonical(out)
        return out

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


ZERO = Rat(Fraction(0))
ONE = Rat(Fraction(1))
MINUS_ONE = Rat(Fraction(-1))


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Rat(Fraction(x))
    raise ExprError(f"cannot coerce {x!r} to Expr (use exact rationals)")


def rat(p, q=1) -> Rat:
    return Rat(Fraction(p, q))


def sym(name: str, role: Role = Role.PARAMETER) -> Symbol:
    return Symbol(name, role)


# ---------------------------------------------------------------------------
# ordering


_CLASS_RANK = {
    Rat: 0,
    Symbol: 1,
    Pow: 2,
    Sin: 3,
    Cos: 4,
    Exp: 5,
    ExpI: 6,
    Deriv: 7,
    Integral: 8,
    Mul: 9,
    Add: 10,
    Neg: 11,
}


def sort_key(e: Expr):
    k = e.__dict__.get("_sk") if not isinstance(e, (Rat, Symbol)) else None
    if k is None:
        k = _sort_key_impl(e)
        if not isinstance(e, (Rat, Symbol)):
            object.__setattr__(e, "_sk", k)
    return k


def _sort_key_impl(e: Expr):
    rank = _CLASS_RANK[type(e)]
    if isinstance(e, Rat):
        return (rank, e.value)
    if isinstance(e, Symbol):
        return (rank, (e.name, e.role.value))
    if isinstance(e, Pow):
        return (rank, (sort_key(e.base), e.exp))
    if isinstance(e, (Sin, Cos, Exp, ExpI)):
        return (rank, sort_key(e.arg))
    if isinstance(e, Deriv):
        return (rank, (e.arg.name, e.var.name, e.order))
    if isinstance(e, Integral):
        return (rank, (sort_key(e.integrand), e.bound.name, e.upper.name))
    if isinstance(e, Mul):
        return (rank, tuple(sort_key(f) for f in e.factors))
    if isinstance(e, Add):
        return (rank, tuple(sort_key(t) for t in e.terms))
    if isinstance(e, Neg):
        return (rank, sort_key(e.arg))
    raise ExprError(f"unknown node {type(e)}")


# ---------------------------------------------------------------------------
# decomposition helpers (operate on canonical expressions)


def _coeff_monomial(term: Expr) -> tuple[Fraction, Expr]:
    """Split a canonical term into (rational coefficient, monomial)."""
    if isinstance(term, Rat):
        return term.value, ONE
    if isinstance(term, Mul) and isinstance(term.factors[0], Rat):
        rest = term.factors[1:]
        if len(rest) == 1:
            return term.factors[0].value, rest[0]
        return term.factors[0].value, Mul(rest)
    return Fraction(1), term


def _base_exp(factor: Expr) -> tuple[Expr, Fraction]:
    if isinstance(factor, Pow):
        return factor.base, factor.exp
    return factor, Fraction(1)


def _monomial_factors(monom: Expr) -> tuple:
    if monom is ONE or monom == ONE:
        return ()
    if isinstance(monom, Mul):
        return monom.factors
    return (monom,)


def _term_from(coeff: Fraction, monom: Expr) -> Expr | None:
    if coeff == 0:
        return None
    if monom == ONE:
        return Rat(coeff)
    if coeff == 1:
        return monom
    if isinstance(monom, Mul):
        return Mul((Rat(coeff),) + monom.factors)
    return Mul((Rat(coeff), monom))


# ---------------------------------------------------------------------------
# smart constructors (assume canonical children, return canonical results)


@_canonical_constructor
def add(*args) -> Expr:
    terms: dict[Expr, Fraction] = {}
    stack = [_coerce(a) for a in args]
    while stack:
        e = stack.pop()
        if isinstance(e, Add):
            stack.extend(e.terms)
            continue
        coeff, monom = _coeff_monomial(e)
        terms[monom] = terms.get(monom, Fraction(0)) + coeff
    terms = {m: c for m, c in terms.items() if c != 0}
    terms = _cancel_sum_denominators(terms)
    built = [_term_from(c, m) for m, c in terms.items()]
    built = [t for t in built if t is not None]
    if not built:
        return ZERO
    if len(built) == 1:
        return built[0]
    built.sort(key=sort_key)
    return Add(tuple(built))


@_canonical_constructor
def mul(*args) -> Expr:
    coeff = Fraction(1)
    powers: dict[Expr, Fraction] = {}
    order: list[Expr] = []
    expi_args: list[Expr] = []
    exp_args: list[Expr] = []
    adds: list[Expr] = []
    stack = [_coerce(a) for a in reversed(args)]
    while stack:
        e = stack.pop()
        if isinstance(e, Rat):
            coeff *= e.value
        elif isinstance(e, Mul):
            stack.extend(reversed(e.factors))
        elif isinstance(e, ExpI):
            expi_args.append(e.arg)
        elif isinstance(e, Exp):
            exp_args.append(e.arg)
        elif isinstance(e, Add):
            adds.append(e)
        else:
            base, exp = _base_exp(e)
            if base not in powers:
                powers[base] = Fraction(0)
                order.append(base)
            powers[base] += exp
    if coeff == 0:
        return ZERO

    factors: list[Expr] = []
    redo: list[Expr] = []
    for base in order:
        exp = powers[base]
        if exp == 0:
            continue
        f = pow_(base, exp)
        if isinstance(f, (Rat, Mul, Add, ExpI)):
            redo.append(f)  # collapsed into another shape; fold it back in
        else:
            factors.append(f)
    if expi_args:
        f = expi(add(*expi_args))
        if isinstance(f, ExpI):
            factors.append(f)
    if exp_args:
        f = exp_(add(*exp_args))
        if isinstance(f, Exp):
            factors.append(f)

    if redo:
        return mul(Rat(coeff), *factors, *redo, *adds)

    if adds:
        first, rest = adds[0], adds[1:]
        others = factors + list(rest)
        pieces = [mul(Rat(coeff), t, *others) for t in first.terms]
        return add(*pieces)

    factors.sort(key=sort_key)
    if not factors:
        return Rat(coeff)
    if coeff == 1 and len(factors) == 1:
        return factors[0]
    if coeff != 1:
        factors.insert(0, Rat(coeff))
    if len(factors) == 1:
        return factors[0]
    return Mul(tuple(factors))


def _int_nth_root(n: int, k: int) -> int | None:
    """Exact k-th root of nonnegative n, or None."""
    if n in (0, 1):
        return n
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == n:
            return cand
    return None


def _rat_power(v: Fraction, e: Fraction) -> Fraction | None:
    if e.denominator == 1:
        if v == 0 and e < 0:
            raise ExprError("zero raised to a negative power")
        return v**e.numerator
    if v < 0:
        return None
    pn = _int_nth_root(v.numerator, e.denominator)
    pd = _int_nth_root(v.denominator, e.denominator)
    if pn is None or pd is None:
        return None
    return Fraction(pn, pd) ** e.numerator


def _add_content(e: Add) -> Fraction:
    """Positive rational content with the sign of the leading term."""
    coeffs = [_coeff_monomial(t)[0] for t in e.terms]
    g = Fraction(0)
    for c in coeffs:
        g = _frac_gcd(g, c)
    lead = _coeff_monomial(min(e.terms, key=sort_key))[0]
    return -g if lead < 0 else g


def _monomial_content(e: Add) -> list[tuple[Expr, Fraction]]:
    """Factors (base, exponent) common to every term of the sum."""
    common: dict[Expr, Fraction] | None = None
    for t in e.terms:
        _c, monom = _coeff_monomial(t)
        exps: dict[Expr, Fraction] = {}
        for f in _monomial_factors(monom):
            b, ex = _base_exp(f)
            exps[b] = ex
        if common is None:
            common = exps
        else:
            common = {
                b: min(ec, exps[b]) for b, ec in common.items() if b in exps
            }
        if not common:
            return []
    return sorted(common.items(), key=lambda kv: sort_key(kv[0]))


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    a, b = abs(a), abs(b)
    return Fraction(
        math.gcd(a.numerator * b.denominator, b.numerator * a.denominator),
        a.denominator * b.denominator,
    )


@_canonical_constructor
def pow_(base, exp) -> Expr:
    base = _coerce(base)
    if isinstance(exp, Rat):
        exp = exp.value
    if isinstance(exp, Expr):
        raise ExprError("exponents must be exact rationals")
    exp = Fraction(exp)
    if exp == 0:
        return ONE
    if exp == 1:
        return base
    if isinstance(base, Rat):
        v = _rat_power(base.value, exp)
        if v is not None:
            return Rat(v)
        return Pow(base, exp)
    if isinstance(base, Mul):
        return mul(*[pow_(f, exp) for f in base.factors])
    if isinstance(base, Pow):
        return pow_(base.base, base.exp * exp)
    if isinstance(base, ExpI):
        return expi(mul(Rat(exp), base.arg))
    if isinstance(base, Exp):
        return exp_(mul(Rat(exp), base.arg))
    if isinstance(base, Sin) and exp.denominator == 1 and exp >= 2:
        n = exp.numerator
        cos2 = add(ONE, neg(Pow(Cos(base.arg), Fraction(2))))
        out = pow_(cos2, Fraction(n // 2))
        if n % 2:
            out = mul(out, base)
        return out
    if isinstance(base, Add):
        common = _monomial_content(base)
        if common:
            inv = mul(*[pow_(b, -e) for b, e in common])
            reduced = add(*[mul(t, inv) for t in base.terms])
            pulled = [pow_(b, e * exp) for b, e in common]
            return mul(*pulled, pow_(reduced, exp))
        if exp.denominator == 1 and exp < 0:
            # negative powers of perfect powers normalize onto the root so
            # that q**2 * (expanded q^2)**-1 style products cancel
            pp = _perfect_power_base(base)
            if pp is not None:
                return pow_(pp[0], pp[1] * exp)
        if exp.denominator == 1:
            content = _add_content(base)
            if content != 1:
                reduced = add(*[mul(Rat(1 / content), t) for t in base.terms])
                return mul(Rat(content**exp.numerator), pow_(reduced, exp))
            if exp > 0:
                out = ONE
                for _ in range(exp.numerator):
                    out = mul(out, base)
                return out
        return Pow(base, exp)
    return Pow(base, exp)


def neg(x) -> Expr:
    return mul(MINUS_ONE, _coerce(x))


def sub(a, b) -> Expr:
    return add(_coerce(a), neg(b))


def div(a, b) -> Expr:
    return mul(_coerce(a), pow_(b, Fraction(-1)))


def _arg_sign_split(x: Expr) -> tuple[int, Expr]:
    """x == s * y with the leading rational coefficient of y positive."""
    if isinstance(x, Rat):
        return (1, x) if x.value >= 0 else (-1, Rat(-x.value))
    if isinstance(x, Add):
        lead = min(x.terms, key=sort_key)
        if _coeff_monomial(lead)[0] < 0:
            return -1, neg(x)
        return 1, x
    coeff, _ = _coeff_monomial(x)
    if coeff < 0:
        return -1, neg(x)
    return 1, x


def _integer_multiple(x: Expr) -> tuple[int, Expr]:
    """x == n * y for a maximal integer n >= 1 (non-constant x only)."""
    if isinstance(x, Rat):
        return 1, x
    if isinstance(x, Add):
        g = Fraction(0)
        for t in x.terms:
            g = _frac_gcd(g, _coeff_monomial(t)[0])
        if g.denominator == 1 and g.numerator >= 2:
            n = g.numerator
            return n, add(*[mul(Rat(Fraction(1, n)), t) for t in x.terms])
        return 1, x
    coeff, monom = _coeff_monomial(x)
    if coeff.denominator == 1 and coeff.numerator >= 2:
        n = coeff.numerator
        return n, _term_from(coeff / n, monom)
    return 1, x


@_canonical_constructor
def sin_(x) -> Expr:
    x = _coerce(x)
    if x == ZERO:
        return ZERO
    s, y = _arg_sign_split(x)
    n, z = _integer_multiple(y)
    if n >= 2:
        rest = _term_from(Fraction(n - 1), z) if n > 2 else z
        out = add(mul(sin_(rest), cos_(z)), mul(cos_(rest), sin_(z)))
    else:
        out = Sin(z)
    return neg(out) if s < 0 else out


@_canonical_constructor
def cos_(x) -> Expr:
    x = _coerce(x)
    if x == ZERO:
        return ONE
    s, y = _arg_sign_split(x)
    n, z = _integer_multiple(y)
    if n >= 2:
        rest = _term_from(Fraction(n - 1), z) if n > 2 else z
        return add(mul(cos_(rest), cos_(z)), neg(mul(sin_(rest), sin_(z))))
    return Cos(y)


@_canonical_constructor
def exp_(x) -> Expr:
    x = _coerce(x)
    if x == ZERO:
        return ONE
    return Exp(x)


@_canonical_constructor
def expi(x) -> Expr:
    x = _coerce(x)
    if x == ZERO:
        return ONE
    return ExpI(x)


def deriv(f: Expr, v: Symbol, order: int = 1) -> Expr:
    if order == 0:
        return f
    if not isinstance(f, Symbol) or f.role != Role.DEPENDENT:
        raise ExprError("derivative nodes wrap dependent-variable symbols")
    if v.role != Role.INDEPENDENT:
        raise ExprError("derivative nodes are taken along independent variables")
    return Deriv(f, v, order)


def _is_bound_free(e: Expr) -> bool:
    """True if e contains no bound symbols, dependent symbols or derivatives
    (so it can be pulled out of an integral)."""
    for s in free_symbols(e):
        if s.role in (Role.BOUND, Role.DEPENDENT):
            return False
    return not _contains_type(e, Deriv)


@_canonical_constructor
def integral(f, bound: Symbol, upper: Symbol) -> Expr:
    f = _coerce(f)
    if bound.role != Role.BOUND:
        raise ExprError("integration variable must have the bound role")
    if not isinstance(upper, Symbol):
        raise ExprError("upper limit must be a symbol")
    if f == ZERO:
        return ZERO
    if isinstance(f, Add):
        return add(*[integral(t, bound, upper) for t in f.terms])
    coeff, monom = _coeff_monomial(f)
    inside, outside = [], []
    for factor in _monomial_factors(monom):
        (outside if _is_bound_free(factor) else inside).append(factor)
    if not inside:
        # constant integrand: integral equals integrand * (upper - lower);
        # keep it opaque rather than guessing the lower limit.
        return _term_from(coeff, _wrap_integral(monom, bound, upper))
    node = _wrap_integral(mul(*inside) if inside else ONE, bound, upper)
    return mul(Rat(coeff), *outside, node)


def _wrap_integral(f: Expr, bound: Symbol, upper: Symbol) -> Expr:
    return Integral(f, bound, upper)


# ---------------------------------------------------------------------------
# cancellation of sums against power-of-sum denominators


def _add_base_exponent(monom: Expr, base: Expr) -> Fraction:
    for f in _monomial_factors(monom):
        b, e = _base_exp(f)
        if b == base:
            return e
    return Fraction(0)


def _strip_base(monom: Expr, base: Expr) -> Expr:
    kept = [f for f in _monomial_factors(monom) if _base_exp(f)[0] != base]
    if not kept:
        return ONE
    if len(kept) == 1:
        return kept[0]
    return Mul(tuple(kept))


def _poly_dict(e: Expr) -> dict[tuple, Fraction] | None:
    """Expression as a polynomial over opaque atoms; None if not polynomial."""
    terms = e.terms if isinstance(e, Add) else (e,)
    rows = []
    atoms: set[Expr] = set()
    for t in terms:
        coeff, monom = _coeff_monomial(t)
        entry = {}
        for f in _monomial_factors(monom):
            b, ex = _base_exp(f)
            if ex.denominator != 1:
                return None
            entry[b] = int(ex)
            atoms.add(b)
        rows.append((coeff, entry))
    keys = sorted(atoms, key=sort_key)
    out: dict[tuple, Fraction] = {}
    for coeff, entry in rows:
        mono = tuple(entry.get(k, 0) for k in keys)
        out[mono] = out.get(mono, Fraction(0)) + coeff
    out["atoms"] = keys  # type: ignore[index]
    return out


def _poly_ops(atoms_len: int):
    def pmul(a: dict, b: dict) -> dict:
        out: dict[tuple, Fraction] = {}
        for ma, ca in a.items():
            for mb, cb in b.items():
                m = tuple(x + y for x, y in zip(ma, mb))
                v = out.get(m, Fraction(0)) + ca * cb
                if v == 0:
                    out.pop(m, None)
                else:
                    out[m] = v
        return out

    def ppow(a: dict, n: int) -> dict:
        out = {(0,) * atoms_len: Fraction(1)}
        for _ in range(n):
            out = pmul(out, a)
        return out

    def psub(a: dict, b: dict) -> dict:
        out = dict(a)
        for m, c in b.items():
            v = out.get(m, Fraction(0)) - c
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
        return out

    return pmul, ppow, psub


def _poly_nth_root(base: Expr, k: int) -> Expr | None:
    """Exact k-th root of a polynomial-in-atoms sum, or None."""
    p = _poly_dict(base)
    if p is None:
        return None
    atoms = p.pop("atoms")  # type: ignore[arg-type]
    if len(p) < 2:
        return None
    mins = [0] * len(atoms)
    for mono in p:
        for i, e in enumerate(mono):
            mins[i] = min(mins[i], e)
    if any(m % k for m in mins):
        return None
    p = {tuple(e - m for e, m in zip(mono, mins)): c for mono, c in p.items()}
    back = tuple(m // k for m in mins)
    _pmul, ppow, psub = _poly_ops(len(atoms))
    lead = max(p)
    if any(e % k for e in lead):
        return None
    c_root = _rat_power(p[lead], Fraction(1, k))
    if c_root is None:
        return None
    root_lead = tuple(e // k for e in lead)
    root = {root_lead: c_root}
    for _ in range(len(p) + 3):
        rem = psub(p, ppow(root, k))
        if not rem:
            pieces = []
            for mono, c in root.items():
                fs = [
                    pow_(a, Fraction(e + z))
                    for a, e, z in zip(atoms, mono, back)
                    if e + z
                ]
                pieces.append(mul(Rat(c), *fs))
            return add(*pieces)
        lt = max(rem)
        mono = tuple(a - (k - 1) * b for a, b in zip(lt, root_lead))
        if any(x < 0 for x in mono):
            return None
        root[mono] = rem[lt] / (k * c_root ** (k - 1))
    return None


_PERFECT_POWER_CACHE: dict[Expr, tuple[Expr, int] | None] = {}


def _perfect_power_base(base: Expr) -> tuple[Expr, int] | None:
    """base == q**k for a sum q and k in {2, 3}, detected exactly."""
    if base in _PERFECT_POWER_CACHE:
        return _PERFECT_POWER_CACHE[base]
    out = None
    for k in (2, 3):
        q = _poly_nth_root(base, k)
        if q is not None and isinstance(q, Add):
            out = (q, k)
            break
    if len(_PERFECT_POWER_CACHE) > 8192:
        _PERFECT_POWER_CACHE.clear()
    _PERFECT_POWER_CACHE[base] = out
    return out


def _poly_divide(num: Expr, den: Expr) -> Expr | None:
    """Exact polynomial quotient num/den over shared atoms, else None."""
    pn = _poly_dict(num)
    pd = _poly_dict(den)
    if pn is None or pd is None:
        return None
    n_atoms = pn.pop("atoms")  # type: ignore[arg-type]
    d_atoms = pd.pop("atoms")  # type: ignore[arg-type]
    atoms = sorted(set(n_atoms) | set(d_atoms), key=sort_key)

    def widen(p, own_atoms):
        index = {a: i for i, a in enumerate(own_atoms)}
        out = {}
        for mono, c in p.items():
            out[tuple(mono[index[a]] if a in index else 0 for a in atoms)] = c
        return out

    n = widen(pn, n_atoms)
    d = widen(pd, d_atoms)

    def shift_nonneg(p):
        mins = [0] * len(atoms)
        for mono in p:
            for i, e in enumerate(mono):
                mins[i] = min(mins[i], e)
        if all(m == 0 for m in mins):
            return p, tuple([0] * len(atoms))
        shifted = {
            tuple(e - m for e, m in zip(mono, mins)): c for mono, c in p.items()
        }
        return shifted, tuple(mins)

    n, s_n = shift_nonneg(n)
    d, s_d = shift_nonneg(d)
    back = tuple(a - b for a, b in zip(s_n, s_d))

    quotient: dict[tuple, Fraction] = {}
    lead_d = max(d)
    guard = 0
    while n:
        guard += 1
        if guard > 2000:
            return None
        lead_n = max(n)
        q_mono = tuple(a - b for a, b in zip(lead_n, lead_d))
        if any(x < 0 for x in q_mono):
            return None
        q_coeff = n[lead_n] / d[lead_d]
        quotient[q_mono] = quotient.get(q_mono, Fraction(0)) + q_coeff
        for mono, c in d.items():
            m2 = tuple(a + b for a, b in zip(q_mono, mono))
            nv = n.get(m2, Fraction(0)) - q_coeff * c
            if nv == 0:
                n.pop(m2, None)
            else:
                n[m2] = nv
    pieces = []
    for mono, c in quotient.items():
        fs = [
            pow_(a, Fraction(e + z))
            for a, e, z in zip(atoms, mono, back)
            if e + z
        ]
        pieces.append(mul(Rat(c), *fs))
    return add(*pieces)


def _cancel_sum_denominators(
    terms: dict[Expr, Fraction],
) -> dict[Expr, Fraction]:
    """Collapse groups like L^2*B^-1 + lam^2*B^-1 when their numerator sum is
    divisible by the sum B; only integer powers of Add bases take part."""
    changed = True
    guard = 0
    while changed and guard < 32:
        changed = False
        guard += 1
        bases = []
        for monom in terms:
            for f in _monomial_factors(monom):
                b, e = _base_exp(f)
                if isinstance(b, Add) and e.denominator == 1 and e < 0 and b not in bases:
                    bases.append(b)
        for base in sorted(bases, key=sort_key):
            group = {
                m: c for m, c in terms.items() if _add_base_exponent(m, base) < 0
            }
            if not group:
                continue
            emin = min(int(_add_base_exponent(m, base)) for m in group)
            promoted = []
            for m, c in group.items():
                e = int(_add_base_exponent(m, base))
                promoted.append(
                    mul(Rat(c), _strip_base(m, base), pow_(base, Fraction(e - emin)))
                )
            numerator = add(*promoted)
            replacement = None
            if numerator == ZERO:
                replacement = ZERO
            else:
                q = _poly_divide(numerator, base)
                if q is not None:
                    replacement = mul(q, pow_(base, Fraction(emin + 1)))
            if replacement is None:
                rest = {m: c for m, c in terms.items() if m not in group}
                # pulling every term over the denominator is only worth it on
                # small sums; it exists to normalize forms like 1 - a/B
                if 0 < len(rest) <= 6 and len(group) <= 6 and emin == -1:
                    pulled = [
                        mul(Rat(c), m, pow_(base, Fraction(-emin)))
                        for m, c in rest.items()
                    ]
                    full = add(*(promoted + pulled))
                    n_terms = len(full.terms) if isinstance(full, Add) else 1
                    if n_terms < len(terms):
                        replacement = mul(full, pow_(base, Fraction(emin)))
                        group = dict(terms)
            if replacement is not None:
                new_terms = {m: c for m, c in terms.items() if m not in group}
                for piece in (
                    replacement.terms if isinstance(replacement, Add) else (replacement,)
                ):
                    if piece == ZERO:
                        continue
                    c, m = _coeff_monomial(piece)
                    new_terms[m] = new_terms.get(m, Fraction(0)) + c
                terms = {m: c for m, c in new_terms.items() if c != 0}
                changed = True
                break
    return terms


# ---------------------------------------------------------------------------
# canonicalize / equals


def canonicalize(e: Expr) -> Expr:
    e = _coerce(e)
    if isinstance(e, (Rat, Symbol)) or e.__dict__.get("_canon"):
        return e
    if isinstance(e, Neg):
        return neg(canonicalize(e.arg))
    if isinstance(e, Add):
        return add(*[canonicalize(t) for t in e.terms])
    if isinstance(e, Mul):
        return mul(*[canonicalize(f) for f in e.factors])
    if isinstance(e, Pow):
        return pow_(canonicalize(e.base), e.exp)
    if isinstance(e, Sin):
        return sin_(canonicalize(e.arg))
    if isinstance(e, Cos):
        return cos_(canonicalize(e.arg))
    if isinstance(e, Exp):
        return exp_(canonicalize(e.arg))
    if isinstance(e, ExpI):
        return expi(canonicalize(e.arg))
    if isinstance(e, Deriv):
        return deriv(e.arg, e.var, e.order)
    if isinstance(e, Integral):
        return integral(canonicalize(e.integrand), e.bound, e.upper)
    raise ExprError(f"unknown node {type(e)}")


def equals(a: Expr, b: Expr) -> bool:
    return canonicalize(sub(canonicalize(a), canonicalize(b))) == ZERO


# ---------------------------------------------------------------------------
# traversal helpers


def free_symbols(e: Expr) -> frozenset[Symbol]:
    out: set[Symbol] = set()

    def walk(x: Expr, bound: frozenset[Symbol]):
        if isinstance(x, Symbol):
            if x not in bound:
                out.add(x)
        elif isinstance(x, Rat):
            pass
        elif isinstance(x, Add):
            for t in x.terms:
                walk(t, bound)
        elif isinstance(x, Mul):
            for f in x.factors:
                walk(f, bound)
        elif isinstance(x, Pow):
            walk(x.base, bound)
        elif isinstance(x, (Sin, Cos, Exp, ExpI, Neg)):
            walk(x.arg, bound)
        elif isinstance(x, Deriv):
            walk(x.arg, bound)
            walk(x.var, bound)
        elif isinstance(x, Integral):
            walk(x.integrand, bound | {x.bound})
            walk(x.upper, bound)

    walk(e, frozenset())
    return frozenset(out)


def _contains_type(e: Expr, node_type) -> bool:
    if isinstance(e, node_type):
        return True
    if isinstance(e, Add):
        return any(_contains_type(t, node_type) for t in e.terms)
    if isinstance(e, Mul):
        return any(_contains_type(f, node_type) for f in e.factors)
    if isinstance(e, Pow):
        return _contains_type(e.base, node_type)
    if isinstance(e, (Sin, Cos, Exp, ExpI, Neg)):
        return _contains_type(e.arg, node_type)
    if isinstance(e, Integral):
        return _contains_type(e.integrand, node_type)
    return False


def has_integral(e: Expr) -> bool:
    return _contains_type(e, Integral)


def has_expi(e: Expr) -> bool:
    return _contains_type(e, ExpI)


def _uses_as_bound(e: Expr, v: Symbol) -> bool:
    if isinstance(e, Integral):
        if e.bound == v:
            return True
        return _uses_as_bound(e.integrand, v)
    if isinstance(e, Add):
        return any(_uses_as_bound(t, v) for t in e.terms)
    if isinstance(e, Mul):
        return any(_uses_as_bound(f, v) for f in e.factors)
    if isinstance(e, Pow):
        return _uses_as_bound(e.base, v)
    if isinstance(e, (Sin, Cos, Exp, ExpI, Neg)):
        return _uses_as_bound(e.arg, v)
    return False


# ---------------------------------------------------------------------------
# differentiation


def differentiate(e: Expr, v: Symbol) -> Expr:
    """Formal derivative.  Dependent symbols chain to derivative nodes when v
    is an independent variable; inside integrals they are held as functions
    of the bound variable."""
    e = _coerce(e)
    if v.role == Role.BOUND or _uses_as_bound(e, v):
        raise BoundVariableError("bound-variable differentiation")
    return _diff(e, v, None, False)


def total_derivative(e: Expr, v: Symbol, rates: Mapping[Expr, Expr]) -> Expr:
    """Derivative along v with explicit rates for symbols / derivative nodes;
    symbols without a rate are treated as constants."""
    if v.role == Role.BOUND or _uses_as_bound(e, v):
        raise BoundVariableError("bound-variable differentiation")
    return _diff(_coerce(e), v, dict(rates), False)


def _diff(e: Expr, v: Symbol, rates, inside: bool) -> Expr:
    if isinstance(e, Rat):
        return ZERO
    if isinstance(e, Symbol):
        if e == v:
            return ONE
        if rates is not None:
            return rates.get(e, ZERO)
        if inside and e.role == Role.DEPENDENT:
            return ZERO
        if e.role == Role.DEPENDENT and v.role == Role.INDEPENDENT:
            return Deriv(e, v, 1)
        return ZERO
    if isinstance(e, Deriv):
        if rates is not None:
            return rates.get(e, ZERO)
        if inside:
            return ZERO
        if e.var == v:
            return Deriv(e.arg, v, e.order + 1)
        return ZERO
    if isinstance(e, Add):
        return add(*[_diff(t, v, rates, inside) for t in e.terms])
    if isinstance(e, Mul):
        pieces = []
        for i, f in enumerate(e.factors):
            df = _diff(f, v, rates, inside)
            if df == ZERO:
                continue
            others = e.factors[:i] + e.factors[i + 1 :]
            pieces.append(mul(df, *others))
        return add(*pieces)
    if isinstance(e, Pow):
        db = _diff(e.base, v, rates, inside)
        if db == ZERO:
            return ZERO
        return mul(Rat(e.exp), pow_(e.base, e.exp - 1), db)
    if isinstance(e, Sin):
        return mul(cos_(e.arg), _diff(e.arg, v, rates, inside))
    if isinstance(e, Cos):
        return neg(mul(sin_(e.arg), _diff(e.arg, v, rates, inside)))
    if isinstance(e, Exp):
        return mul(e, _diff(e.arg, v, rates, inside))
    if isinstance(e, ExpI):
        raise ExprError(
            "cannot differentiate through expi; split into components first"
        )
    if isinstance(e, Integral):
        boundary = ZERO
        if e.upper == v:
            # evaluate the integrand at the upper limit; the bound symbol is
            # no longer bound once the integral node is stripped
            boundary = _subst(e.integrand, {e.bound: e.upper}, {e.bound: frozenset()})
        interior = integral(_diff(e.integrand, v, rates, True), e.bound, e.upper)
        return add(boundary, interior)
    if isinstance(e, Neg):
        return neg(_diff(e.arg, v, rates, inside))
    raise ExprError(f"cannot differentiate {type(e)}")


# ---------------------------------------------------------------------------
# substitution


def substitute(e: Expr, bindings: Mapping[Expr, Expr]) -> Expr:
    """Simultaneous substitution; keys are symbols or derivative nodes."""
    bnd: dict[Expr, Expr] = {}
    for k, val in bindings.items():
        if not isinstance(k, (Symbol, Deriv)):
            raise ExprError("substitution keys must be symbols or derivatives")
        if isinstance(k, Symbol) and k.role == Role.BOUND:
            raise ExprError("cannot bind a bound symbol")
        bnd[k] = canonicalize(_coerce(val))
    value_frees = {k: free_symbols(v) for k, v in bnd.items()}
    return _subst(canonicalize(e), bnd, value_frees)


def _subst(e: Expr, bnd, value_frees) -> Expr:
    if isinstance(e, (Symbol, Deriv)):
        if e in bnd:
            return bnd[e]
        if isinstance(e, Deriv) and e.arg in bnd:
            raise ExprError(
                f"substituting {e.arg.name} under an unmapped derivative node"
            )
        return e
    if isinstance(e, Rat):
        return e
    if isinstance(e, Add):
        return add(*[_subst(t, bnd, value_frees) for t in e.terms])
    if isinstance(e, Mul):
        return mul(*[_subst(f, bnd, value_frees) for f in e.factors])
    if isinstance(e, Pow):
        return pow_(_subst(e.base, bnd, value_frees), e.exp)
    if isinstance(e, Sin):
        return sin_(_subst(e.arg, bnd, value_frees))
    if isinstance(e, Cos):
        return cos_(_subst(e.arg, bnd, value_frees))
    if isinstance(e, Exp):
        return exp_(_subst(e.arg, bnd, value_frees))
    if isinstance(e, ExpI):
        return expi(_subst(e.arg, bnd, value_frees))
    if isinstance(e, Integral):
        if e.bound in bnd:
            raise ExprError("cannot bind a bound symbol")
        for k, frees in value_frees.items():
            if e.bound in frees and k in free_symbols(e.integrand):
                raise ExprError("substitution would capture a bound symbol")
        upper = e.upper
        if upper in bnd:
            newu = bnd[upper]
            if not isinstance(newu, Symbol):
                raise ExprError("integral upper limit must stay a symbol")
            upper = newu
        return integral(_subst(e.integrand, bnd, value_frees), e.bound, upper)
    raise ExprError(f"cannot substitute into {type(e)}")


# ---------------------------------------------------------------------------
# numeric evaluation


def eval_numeric(
    e: Expr,
    env: Mapping[Expr, float],
    quadrature_tol: float = 1e-10,
) -> float:
    """Evaluate with all free symbols bound; integrals by adaptive quadrature
    from 0 to the bound upper limit."""
    return _eval(canonicalize(e), dict(env), quadrature_tol)


def _check_finite(v: float) -> float:
    if not math.isfinite(v):
        raise EvalError("non-finite value")
    return v


def _eval(e: Expr, env, qtol: float) -> float:
    if isinstance(e, Rat):
        return float(e.value)
    if isinstance(e, (Symbol, Deriv)):
        if e in env:
            return float(env[e])
        name = e.name if isinstance(e, Symbol) else to_prefix(e)
        raise EvalError(f"unbound symbol {name}")
    if isinstance(e, Add):
        return _check_finite(math.fsum(_eval(t, env, qtol) for t in e.terms))
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= _eval(f, env, qtol)
        return _check_finite(out)
    if isinstance(e, Pow):
        b = _eval(e.base, env, qtol)
        ex = e.exp
        if b == 0 and ex < 0:
            raise EvalError("non-finite value (division by zero)")
        if b < 0 and ex.denominator != 1:
            raise EvalError("non-finite value (fractional power of negative)")
        return _check_finite(b ** float(ex))
    if isinstance(e, Sin):
        return math.sin(_eval(e.arg, env, qtol))
    if isinstance(e, Cos):
        return math.cos(_eval(e.arg, env, qtol))
    if isinstance(e, Exp):
        return _check_finite(math.exp(_eval(e.arg, env, qtol)))
    if isinstance(e, ExpI):
        raise EvalError("expi is complex-valued; split before evaluating")
    if isinstance(e, Integral):
        for s in free_symbols(e.integrand):
            if s.role == Role.DEPENDENT:
                raise EvalError(
                    "integral over dependent quantities needs trajectory data"
                )
        if _contains_type(e.integrand, Deriv):
            raise EvalError("integral over dependent quantities needs trajectory data")
        from scipy.integrate import quad

        upper = _eval(e.upper, env, qtol)

        def f(sv: float) -> float:
            env2 = dict(env)
            env2[e.bound] = sv
            return _eval(e.integrand, env2, qtol)

        val, _err = quad(f, 0.0, upper, epsabs=qtol, epsrel=qtol, limit=400)
        return _check_finite(val)
    raise EvalError(f"cannot evaluate {type(e)}")


# ---------------------------------------------------------------------------
# real/imaginary split of expi expressions


def expi_split(e: Expr) -> tuple[Expr, Expr]:
    """(real, imaginary) parts of an expression linear/multiplicative in expi
    nodes; errors on expi under powers or inside function arguments."""
    e = canonicalize(e)
    return _split(e)


def _split(e: Expr) -> tuple[Expr, Expr]:
    if isinstance(e, (Rat, Symbol, Deriv)):
        return e, ZERO
    if isinstance(e, ExpI):
        return cos_(e.arg), sin_(e.arg)
    if isinstance(e, Add):
        res, ims = zip(*[_split(t) for t in e.terms])
        return add(*res), add(*ims)
    if isinstance(e, Mul):
        re_acc, im_acc = ONE, ZERO
        for f in e.factors:
            fr, fi = _split(f)
            re_acc, im_acc = (
                add(mul(re_acc, fr), neg(mul(im_acc, fi))),
                add(mul(re_acc, fi), mul(im_acc, fr)),
            )
        return re_acc, im_acc
    if isinstance(e, (Pow, Sin, Cos, Exp)):
        inner = e.base if isinstance(e, Pow) else e.arg
        if has_expi(inner):
            raise ExprError("expi under powers or function arguments")
        return e, ZERO
    if isinstance(e, Integral):
        fr, fi = _split(e.integrand)
        return (
            integral(fr, e.bound, e.upper),
            integral(fi, e.bound, e.upper),
        )
    raise ExprError(f"cannot split {type(e)}")


def expi_join(re: Expr, im: Expr) -> Expr:
    """Inverse of expi_split for trig-polynomial pairs; raises if the pair is
    not expressible as a combination of expi terms."""
    re, im = canonicalize(re), canonicalize(im)
    if im == ZERO:
        return re
    # match c*m*cos(x) in re with c*m*sin(x) in im -> c*m*expi(x)
    re_terms = list(re.terms) if isinstance(re, Add) else [re]
    im_terms = list(im.terms) if isinstance(im, Add) else [im]
    out = []
    for t in re_terms:
        coeff, monom = _coeff_monomial(t)
        trig = [f for f in _monomial_factors(monom) if isinstance(f, (Sin, Cos))]
        if len(trig) != 1 or not isinstance(trig[0], Cos):
            raise ExprError("pair is not a combination of expi terms")
        arg = trig[0].arg
        # c*m*cos(x) pairs with +c*m*sin(x) for e^{ix}, -c*m*sin(x) for e^{-ix}
        for sign in (1, -1):
            partner = _term_from(
                sign * coeff, _swap_factor(monom, trig[0], Sin(arg))
            )
            if partner in im_terms:
                im_terms.remove(partner)
                node = ExpI(arg) if sign > 0 else ExpI(canonicalize(neg(arg)))
                out.append(_term_from(coeff, _swap_factor(monom, trig[0], node)))
                break
        else:
            raise ExprError("pair is not a combination of expi terms")
    if im_terms:
        raise ExprError("pair is not a combination of expi terms")
    return add(*out)


def _swap_factor(monom: Expr, old: Expr, new: Expr) -> Expr:
    fs = list(_monomial_factors(monom))
    fs[fs.index(old)] = new
    return mul(*fs)


# ---------------------------------------------------------------------------
# serialization


def to_prefix(e: Expr) -> str:
    """Fully parenthesized prefix form, stable across runs."""
    if isinstance(e, Rat):
        return str(e.value)
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Add):
        return "(+ " + " ".join(to_prefix(t) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "(* " + " ".join(to_prefix(f) for f in e.factors) + ")"
    if isinstance(e, Pow):
        return f"(^ {to_prefix(e.base)} {e.exp})"
    if isinstance(e, Sin):
        return f"(sin {to_prefix(e.arg)})"
    if isinstance(e, Cos):
        return f"(cos {to_prefix(e.arg)})"
    if isinstance(e, Exp):
        return f"(exp {to_prefix(e.arg)})"
    if isinstance(e, ExpI):
        return f"(expi {to_prefix(e.arg)})"
    if isinstance(e, Deriv):
        return f"(deriv {e.arg.name} {e.var.name} {e.order})"
    if isinstance(e, Integral):
        return f"(int {to_prefix(e.integrand)} {e.bound.name} {e.upper.name})"
    if isinstance(e, Neg):
        return f"(neg {to_prefix(e.arg)})"
    raise ExprError(f"cannot serialize {type(e)}")


_PRETTY = {
    "theta": "θ",
    "phi": "φ",
    "mu": "μ",
    "alpha": "α",
    "lam": "λ",
    "nu": "ν",
    "beta": "β",
    "eta": "η",
    "Omega": "Ω",
    "u1": "u₁",
    "u2": "u₂",
    "u1'": "u₁′",
    "u2'": "u₂′",
    "u1''": "u₁″",
    "u2''": "u₂″",
    "w1": "w₁",
    "w2": "w₂",
    "w3": "w₃",
    "w4": "w₄",
    "L0": "L₀",
    "L1": "L₁",
    "S": "S",
}


def to_infix(e: Expr, pretty: bool = True) -> str:
    """Human-readable infix rendering used in text reports."""

    def name(s: str) -> str:
        return _PRETTY.get(s, s) if pretty else s

    def rend(x: Expr, prec: int) -> str:
        if isinstance(x, Rat):
            out = str(x.value)
            return f"({out})" if (x.value < 0 and prec > 0) else out
        if isinstance(x, Symbol):
            return name(x.name)
        if isinstance(x, Add):
            parts = []
            for i, t in enumerate(x.terms):
                c, _m = _coeff_monomial(t)
                body = rend(neg(t), 1) if c < 0 else rend(t, 1)
                if i == 0:
                    parts.append("-" + body if c < 0 else body)
                else:
                    parts.append(("- " if c < 0 else "+ ") + body)
            out = " ".join(parts)
            return f"({out})" if prec > 1 else out
        if isinstance(x, Mul):
            c, m = _coeff_monomial(x)
            fs = list(_monomial_factors(m))
            num = [f for f in fs if _base_exp(f)[1] > 0]
            den = [f for f in fs if _base_exp(f)[1] < 0]
            body = "*".join(rend(f, 2) for f in num) if num else "1"
            if c == -1:
                body = "-" + body
            elif c != 1:
                body = f"{c}*{body}"
            for f in den:
                b, ex = _base_exp(f)
                body += f"/{rend(pow_(b, -ex), 3)}"
            return f"({body})" if prec > 2 and (len(fs) > 1 or c != 1) else body
        if isinstance(x, Pow):
            return f"{rend(x.base, 3)}^({x.exp})"
        if isinstance(x, Sin):
            return f"sin({rend(x.arg, 0)})"
        if isinstance(x, Cos):
            return f"cos({rend(x.arg, 0)})"
        if isinstance(x, Exp):
            return f"exp({rend(x.arg, 0)})"
        if isinstance(x, ExpI):
            return f"e^(i*({rend(x.arg, 0)}))"
        if isinstance(x, Deriv):
            marks = "'" * x.order
            return f"{name(x.arg.name)}{marks}"
        if isinstance(x, Integral):
            return (
                f"∫^{name(x.upper.name)} {rend(x.integrand, 0)} "
                f"d{name(x.bound.name)}"
            )
        raise ExprError(f"cannot render {type(x)}")

    return rend(canonicalize(e), 0)


# ---------------------------------------------------------------------------
# tiny infix parser for configuration expressions such as "exp(-t)"


_FUNCS: dict[str, Callable[[Expr], Expr]] = {"sin": sin_, "cos": cos_, "exp": exp_}


def parse_expression(text: str, symbols: Mapping[str, Symbol]) -> Expr:
    tokens = _tokenize(text)
    pos = [0]

    def peek():
        return tokens[pos[0]] if pos[0] < len(tokens) else None

    def take(expected=None):
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ExprError(f"unparseable expression {text!r} (near token {tok!r})")
        pos[0] += 1
        return tok

    def parse_sum():
        node = parse_product()
        while peek() in ("+", "-"):
            op = take()
            rhs = parse_product()
            node = add(node, rhs if op == "+" else neg(rhs))
        return node

    def parse_product():
        node = parse_power()
        while peek() in ("*", "/"):
            op = take()
            rhs = parse_power()
            node = mul(node, rhs) if op == "*" else div(node, rhs)
        return node

    def parse_power():
        base = parse_atom()
        if peek() in ("^", "**"):
            take()
            ex = parse_power()
            if not isinstance(ex, Rat):
                raise ExprError("exponents must be rational constants")
            return pow_(base, ex.value)
        return base

    def parse_atom():
        tok = peek()
        if tok == "-":
            take()
            return neg(parse_atom())
        if tok == "(":
            take()
            node = parse_sum()
            take(")")
            return node
        tok = take()
        if tok is None:
            raise ExprError(f"unparseable expression {text!r}")
        if tok[0].isdigit() or tok[0] == ".":
            try:
                return Rat(Fraction(tok))
            except ValueError as err:
                raise ExprError(f"bad number {tok!r}") from err
        if tok in _FUNCS:
            take("(")
            inner = parse_sum()
            take(")")
            return _FUNCS[tok](inner)
        if tok in symbols:
            return symbols[tok]
        raise ExprError(
            f"unknown name {tok!r}; allowed: {sorted(symbols)} and sin/cos/exp"
        )

    node = parse_sum()
    if pos[0] != len(tokens):
        raise ExprError(f"unparseable expression {text!r} (trailing tokens)")
    return canonicalize(node)


def _tokenize(text: str) -> list[str]:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "+-/()":
            out.append(ch)
            i += 1
        elif ch == "*":
            if i + 1 < len(text) and text[i + 1] == "*":
                out.append("**")
                i += 2
            else:
                out.append("*")
                i += 1
        elif ch == "^":
            out.append("^")
            i += 1
        elif ch.isdigit() or ch == ".":
            j = i
            while j < len(text) and (text[j].isdigit() or text[j] == "."):
                j += 1
            out.append(text[i:j])
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            out.append(text[i:j])
            i = j
        else:
            raise ExprError(f"bad character {ch!r} in expression")
    return out
