from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable

from ghostlab.constraints.symbolic import BilinearConstraint, BilinearForm, Monomial
from ghostlab.core.lattice import WaveVector
from ghostlab.errors import ConstraintParseError

_TOKEN = re.compile(
    r"""
    \s*(?:
        (?P<sign>[+-])
      | (?P<amp>a\(\s*(?P<k1>-?\d+)\s*,\s*(?P<k2>-?\d+)\s*\))
      | (?P<num>\d+(?:/\d+)?)
      | (?P<star>\*)
    )
    """,
    re.VERBOSE,
)
_LABEL = re.compile(r"^\s*R\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)\s*:\s*")


class ConstraintCompiler:
    """
    Brings bilinear constraints to the canonical form used to compare systems,
    and reads and writes their text representation:

        R(2,0): a(0,-1)*a(2,1) - a(0,1)*a(2,-1)
    """

    def normalize(self, form: BilinearForm) -> BilinearForm:
        """
        Integer coefficients without a common factor, the first monomial
        positive. Constraints equal up to a nonzero factor normalize equally.
        """
        if form.is_zero():
            return form
        monomials = form.monomials
        denominators = math.lcm(*(m.coefficient.denominator for m in monomials))
        integers = [int(m.coefficient * denominators) for m in monomials]
        divisor = math.gcd(*integers)
        if integers[0] < 0:
            divisor = -divisor
        return BilinearForm(
            {m.factors: Fraction(c, divisor) for m, c in zip(monomials, integers)}
        )

    def compile(self, constraint: BilinearConstraint) -> BilinearConstraint:
        return BilinearConstraint(self.normalize(constraint.form), constraint.target)

    def canonical(self, constraint: BilinearConstraint) -> tuple:
        """Hashable key, equal for constraints that agree up to scaling."""
        form = self.normalize(constraint.form)
        return (
            constraint.target.sort_key,
            tuple(
                (m.factors[0].sort_key, m.factors[1].sort_key, m.coefficient)
                for m in form.monomials
            ),
        )

    # Text

    def parse_form(self, text: str) -> BilinearForm:
        tokens = self._tokenize(text)
        form = BilinearForm()
        pos = 0
        sign = 1
        if tokens and tokens[0][0] == "sign":
            sign = -1 if tokens[0][1] == "-" else 1
            pos = 1
        while True:
            monomial, pos = self._parse_term(tokens, pos, text)
            form = form + sign * monomial
            if pos == len(tokens):
                return form
            kind, value, offset = tokens[pos]
            if kind != "sign":
                raise ConstraintParseError(f"Expected '+' or '-' at {offset} in {text!r}")
            sign = -1 if value == "-" else 1
            pos += 1

    def _parse_term(self, tokens, pos: int, text: str) -> tuple[Monomial, int]:
        coefficient = Fraction(1)
        if pos < len(tokens) and tokens[pos][0] == "num":
            value = tokens[pos][1]
            coefficient = Fraction(value)
            pos = self._expect(tokens, pos + 1, "star", text)
        factors = []
        for i in range(2):
            if pos >= len(tokens) or tokens[pos][0] != "amp":
                where = tokens[pos][2] if pos < len(tokens) else len(text)
                raise ConstraintParseError(f"Expected an amplitude a(k1,k2) at {where} in {text!r}")
            factors.append(tokens[pos][1])
            pos += 1
            if i == 0:
                pos = self._expect(tokens, pos, "star", text)
        return Monomial(coefficient, (factors[0], factors[1])), pos

    @staticmethod
    def _expect(tokens, pos: int, kind: str, text: str) -> int:
        if pos >= len(tokens) or tokens[pos][0] != kind:
            where = tokens[pos][2] if pos < len(tokens) else len(text)
            raise ConstraintParseError(f"Expected '*' at {where} in {text!r}")
        return pos + 1

    @staticmethod
    def _tokenize(text: str):
        tokens = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            match = _TOKEN.match(text, pos)
            if match is None or match.end() == pos:
                raise ConstraintParseError(f"Unexpected character at {pos} in {text!r}")
            if match.group("sign"):
                tokens.append(("sign", match.group("sign"), match.start("sign")))
            elif match.group("amp"):
                k = WaveVector(int(match.group("k1")), int(match.group("k2")))
                tokens.append(("amp", k, match.start("amp")))
            elif match.group("num"):
                tokens.append(("num", match.group("num"), match.start("num")))
            else:
                tokens.append(("star", "*", match.start("star")))
            pos = match.end()
        return tokens

    def parse_constraint(self, line: str) -> BilinearConstraint:
        """
        One constraint. Without an `R(k1,k2):` label the target is the common
        sum of the factor pairs.
        """
        label = _LABEL.match(line)
        body = line[label.end():] if label else line
        form = self.parse_form(body)
        if form.is_zero():
            raise ConstraintParseError(f"Constraint {line!r} is identically zero")
        targets = {m.target for m in form.monomials}
        if len(targets) != 1:
            raise ConstraintParseError(
                f"Factor pairs of {line!r} add up to different wave vectors:"
                f" {', '.join(sorted(map(str, targets)))}"
            )
        target = targets.pop()
        if label:
            declared = WaveVector(int(label.group(1)), int(label.group(2)))
            if declared != target:
                raise ConstraintParseError(f"Label {declared} does not match factor sum {target}")
        return BilinearConstraint(form, target)

    def parse_system(self, text: str) -> list[BilinearConstraint]:
        constraints = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                constraints.append(self.parse_constraint(line))
        return constraints

    def format_form(self, form: BilinearForm) -> str:
        parts = []
        for i, m in enumerate(form.monomials):
            a, b = m.factors
            magnitude = abs(m.coefficient)
            body = f"a{a}*a{b}" if magnitude == 1 else f"{magnitude}*a{a}*a{b}"
            if i == 0:
                parts.append(body if m.coefficient > 0 else f"-{body}")
            else:
                parts.append(f"{'-' if m.coefficient < 0 else '+'} {body}")
        return " ".join(parts)

    def format_constraint(self, constraint: BilinearConstraint) -> str:
        return f"{constraint.id}: {self.format_form(constraint.form)}"

    def format_system(self, constraints: Iterable[BilinearConstraint]) -> str:
        return "\n".join(self.format_constraint(c) for c in constraints)
