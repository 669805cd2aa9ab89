"""
Symbolic amplitudes and the bilinear forms built from them.

    a = Amplitude
    a((0, -1)) * a((2, 1)) - a((0, 1)) * a((2, -1))

is the form α(0,-1)α(2,1) - α(0,1)α(2,-1). Coefficients are exact fractions.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterator, Mapping, Union

from ghostlab._typing import WaveVectorLike
from ghostlab.core.field import ScalarAmplitudeField
from ghostlab.core.lattice import WaveVector

Coefficient = Union[int, Fraction]
FactorPair = tuple[WaveVector, WaveVector]
AmplitudeLookup = Union[
    ScalarAmplitudeField, Mapping[WaveVector, complex], Callable[[WaveVector], complex]
]


def factor_pair(a: WaveVector, b: WaveVector) -> FactorPair:
    """Unordered pair in canonical order."""
    return (a, b) if a.sort_key <= b.sort_key else (b, a)


def _pair_key(pair: FactorPair):
    return pair[0].sort_key, pair[1].sort_key


def _lookup(amps: AmplitudeLookup) -> Callable[[WaveVector], complex]:
    if isinstance(amps, ScalarAmplitudeField):
        return lambda k: complex(amps[k])
    if isinstance(amps, Mapping):
        return lambda k: complex(amps.get(k, 0j))
    return amps


class Amplitude:
    """The unknown α(k)."""

    __slots__ = ("k",)

    def __init__(self, k: WaveVector | WaveVectorLike):
        self.k = WaveVector.of(k)

    def __mul__(self, other):
        if isinstance(other, Amplitude):
            return Monomial(1, (self.k, other.k))
        return NotImplemented

    def conjugate(self) -> Amplitude:
        return Amplitude(-self.k)

    def __eq__(self, other):
        return isinstance(other, Amplitude) and self.k == other.k

    def __hash__(self):
        return hash(("α", self.k))

    def __repr__(self):
        return f"a{self.k}"

    def __str__(self):
        return f"α{self.k}"


class Monomial:
    __slots__ = ("coefficient", "factors")

    def __init__(self, coefficient: Coefficient, factors: tuple[WaveVector, WaveVector]):
        self.coefficient = Fraction(coefficient)
        self.factors = factor_pair(*factors)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, Fraction)):
            return Monomial(self.coefficient * scalar, self.factors)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return Monomial(-self.coefficient, self.factors)

    def __add__(self, other):
        return BilinearForm.of(self) + other

    def __sub__(self, other):
        return BilinearForm.of(self) - other

    def __eq__(self, other):
        if not isinstance(other, Monomial):
            return False
        return self.coefficient == other.coefficient and self.factors == other.factors

    def __hash__(self):
        return hash((self.coefficient, self.factors))

    def has_factor(self, k: WaveVector) -> bool:
        return k in self.factors

    def other_factor(self, k: WaveVector) -> WaveVector:
        a, b = self.factors
        return b if a == k else a

    @property
    def target(self) -> WaveVector:
        return self.factors[0] + self.factors[1]

    def evaluate(self, amps: AmplitudeLookup) -> complex:
        get = _lookup(amps)
        a, b = self.factors
        return float(self.coefficient) * get(a) * get(b)

    def product_text(self) -> str:
        a, b = self.factors
        return f"α{a}α{b}"

    def __repr__(self):
        return f"<Monomial {self.coefficient} {self.product_text()}>"


class BilinearForm:
    """Σ c·α(h)α(j) with the zero coefficients dropped."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[FactorPair, Coefficient] | None = None):
        self._terms: dict[FactorPair, Fraction] = {}
        for pair, coefficient in (terms or {}).items():
            self._add(factor_pair(*pair), Fraction(coefficient))

    @classmethod
    def of(cls, *monomials: Monomial) -> BilinearForm:
        form = cls()
        for m in monomials:
            form._add(m.factors, m.coefficient)
        return form

    def _add(self, pair: FactorPair, coefficient: Fraction):
        total = self._terms.get(pair, Fraction(0)) + coefficient
        if total:
            self._terms[pair] = total
        else:
            self._terms.pop(pair, None)

    @property
    def monomials(self) -> tuple[Monomial, ...]:
        return tuple(Monomial(self._terms[p], p) for p in sorted(self._terms, key=_pair_key))

    def __iter__(self) -> Iterator[Monomial]:
        return iter(self.monomials)

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __add__(self, other):
        if isinstance(other, Monomial):
            other = BilinearForm.of(other)
        if not isinstance(other, BilinearForm):
            return NotImplemented
        out = BilinearForm(self._terms)
        for pair, coefficient in other._terms.items():
            out._add(pair, coefficient)
        return out

    def __neg__(self):
        return BilinearForm({p: -c for p, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, Monomial):
            other = BilinearForm.of(other)
        if not isinstance(other, BilinearForm):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, Fraction)):
            return BilinearForm({p: c * scalar for p, c in self._terms.items()})
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, BilinearForm) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def factors(self) -> set[WaveVector]:
        return {k for pair in self._terms for k in pair}

    def evaluate(self, amps: AmplitudeLookup) -> complex:
        get = _lookup(amps)
        return sum((m.evaluate(get) for m in self.monomials), 0j)

    def __str__(self):
        parts = []
        for i, m in enumerate(self.monomials):
            c = m.coefficient
            sign = "-" if c < 0 else "+"
            magnitude = abs(c)
            body = m.product_text() if magnitude == 1 else f"{magnitude}·{m.product_text()}"
            if i == 0:
                parts.append(body if sign == "+" else f"-{body}")
            else:
                parts.append(f"{sign} {body}")
        return " ".join(parts) if parts else "0"

    def __repr__(self):
        return f"<BilinearForm {self}>"


class BilinearConstraint:
    """The requirement that `form` vanishes, generated by the wave vector `target`."""

    __slots__ = ("form", "target")

    def __init__(self, form: BilinearForm, target: WaveVector | WaveVectorLike):
        self.form = form
        self.target = WaveVector.of(target)

    @property
    def id(self) -> str:
        return f"R{self.target}"

    @property
    def source_shell(self) -> int:
        return self.target.norm_sq

    @property
    def monomials(self) -> tuple[Monomial, ...]:
        return self.form.monomials

    def is_single_product(self) -> bool:
        return len(self.form) == 1

    def evaluate(self, amps: AmplitudeLookup) -> complex:
        return self.form.evaluate(amps)

    def __eq__(self, other):
        return (
            isinstance(other, BilinearConstraint)
            and self.target == other.target
            and self.form == other.form
        )

    def __hash__(self):
        return hash((self.target, self.form))

    def __repr__(self):
        return f"<BilinearConstraint {self.id}: {self.form} = 0>"
