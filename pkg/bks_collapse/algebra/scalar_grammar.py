"""
Scalar expression grammar: integers, + - * /, sqrt(k), c<i>, s<i> and parentheses.
Whitespace-insensitive. Vectors are parenthesised comma-separated triples.
"""

import logging
from functools import lru_cache
from typing import Tuple

import lark
from lark import Lark, Transformer, v_args

from ..errors import ScalarGrammarError, ZeroDivisorError
from .scalars import ExactScalar

logger = logging.getLogger(__name__)

MAX_RADICAND_DIGITS = 18

SCALAR_GRAMMAR = r"""
    ?scalar: sum
    vector: "(" sum "," sum "," sum ")"
          | sum "," sum "," sum

    ?sum: product
        | sum "+" product   -> add
        | sum "-" product   -> sub

    ?product: unary
            | product "*" unary -> mul
            | product "/" unary -> div

    ?unary: atom
          | "-" unary -> neg
          | "+" unary

    ?atom: INT                  -> integer
         | "sqrt" "(" INT ")"   -> root
         | PAIR_SYMBOL          -> symbol
         | "(" sum ")"

    PAIR_SYMBOL: /[cs][0-9]+/

    %import common.INT
    %import common.WS
    %ignore WS
"""


@v_args(inline=True)
class ScalarBuilder(Transformer):
    def integer(self, token):
        return ExactScalar.from_fraction(int(token))

    def root(self, token):
        if len(token.lstrip("0")) > MAX_RADICAND_DIGITS:
            raise ScalarGrammarError(f"sqrt radicand longer than {MAX_RADICAND_DIGITS} digits", str(token),
                                     token.column)
        return ExactScalar.sqrt_int(int(token))

    def symbol(self, token):
        return ExactScalar.symbol(str(token))

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def div(self, a, b):
        return a / b

    def neg(self, a):
        return -a

    def vector(self, x, y, z):
        return (x, y, z)


@lru_cache(maxsize=1)
def _parser() -> Lark:
    return Lark(SCALAR_GRAMMAR, start=["scalar", "vector"], parser="lalr")


def _parse(text: str, start: str):
    try:
        tree = _parser().parse(text, start=start)
        return ScalarBuilder().transform(tree)
    except lark.exceptions.UnexpectedInput as exc:
        raise ScalarGrammarError("malformed expression", text, getattr(exc, "column", None)) from exc
    except lark.exceptions.VisitError as exc:
        if isinstance(exc.orig_exc, (ZeroDivisorError, ScalarGrammarError)):
            raise exc.orig_exc
        raise ScalarGrammarError(f"invalid expression ({exc.orig_exc})", text) from exc


def parse_scalar(text: str) -> ExactScalar:
    if not isinstance(text, str) or not text.strip():
        raise ScalarGrammarError("empty expression", str(text))
    return _parse(text, "scalar")


def parse_vector_text(text: str) -> Tuple[ExactScalar, ExactScalar, ExactScalar]:
    """'(1, 1, sqrt(2))' or '1,1,sqrt(2)'"""
    if not isinstance(text, str) or not text.strip():
        raise ScalarGrammarError("empty vector expression", str(text))
    return _parse(text, "vector")
