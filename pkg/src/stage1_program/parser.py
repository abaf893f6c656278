"""
Parser for the supported ASP-Core-2 subset.

Accepted: facts, normal rules, constraints, negation as failure, comparison
builtins and unbounded choice rules with conditions. Aggregates, weak
constraints, optimisation statements, disjunction, intervals and arithmetic
are rejected with an UnsupportedConstructError.

Input predicates come either from the ``input_preds`` argument (``p/2``
strings) or from ``% #input p/2.`` comment directives in the text.
"""

import re
from dataclasses import replace
from typing import FrozenSet, Iterable, List, Optional, Set, Tuple

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from stage1_program.syntax import (
    Atom, AtomKind, ChoiceElement, Constant, Function, Literal, Program, Rule, Variable,
    builtin_atom,
)
from utils.errors import (
    AspError, InputPredicateError, ProgramSyntaxError, UnsafeRuleError,
    UnsupportedConstructError,
)
from utils.log import get_logger

logger = get_logger(__name__)

GRAMMAR = r"""
start: statement*

?statement: fact
          | normal_rule
          | constraint
          | choice_rule

fact: atom "."
normal_rule: atom ":-" body "."
constraint: ":-" body "."
choice_rule: choice_head (":-" body)? "."

choice_head: lower_bound? "{" choice_elements? "}" upper_bound?
lower_bound: term
upper_bound: term
choice_elements: choice_element (";" choice_element)*
choice_element: atom (":" body)?

body: literal ("," literal)*
literal: atom                   -> positive
       | "not" atom             -> naf
       | term COMPARISON term   -> comparison

atom: ID ("(" terms ")")?
terms: term ("," term)*

term: VARIABLE                  -> variable
    | "_"                       -> anonymous
    | ID "(" terms ")"          -> function
    | ID                        -> symbol
    | INT                       -> integer
    | "-" INT                   -> negative
    | STRING                    -> string

COMPARISON: "<=" | ">=" | "!=" | "<" | ">" | "="
ID: /[a-z][A-Za-z0-9_']*/
VARIABLE: /_*[A-Z][A-Za-z0-9_']*/
INT: /0|[1-9][0-9]*/
STRING: /"([^"\\\n]|\\.)*"/
COMMENT: /%[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

_parser = Lark(GRAMMAR, parser="lalr", propagate_positions=True, maybe_placeholders=False)

_INPUT_DIRECTIVE = re.compile(r"^\s*%\s*#input\s+([a-z][A-Za-z0-9_']*)\s*/\s*(\d+)\s*\.?\s*$", re.M)
_INPUT_DECLARATION = re.compile(r"^\s*([a-z][A-Za-z0-9_']*)\s*/\s*(\d+)\s*$")
_STRING_OR_COMMENT = re.compile(r'"(?:[^"\\\n]|\\.)*"|%[^\n]*')

_UNSUPPORTED = (
    (re.compile(r"#(?:count|sum\+?|min|max)\b"), "aggregate"),
    (re.compile(r"#(?:minimi[sz]e|maximi[sz]e)\b"), "optimisation statement"),
    (re.compile(r":~"), "weak constraint"),
    (re.compile(r"\|"), "disjunctive head"),
    (re.compile(r"\.\."), "interval term"),
    (re.compile(r"[+*/\\]|(?<=[\w)])\s*-\s*(?=[\w(])"), "arithmetic term"),
)


class _Bound:
    """Marker for a cardinality bound on a choice head."""


class _StatementBuilder(Transformer):
    """Turns the parse tree into (Rule, line, column) triples with placeholder ids."""

    def __init__(self):
        super().__init__()
        self._anonymous = 0

    def start(self, children):
        return children

    # Terms

    def variable(self, children):
        return Variable(str(children[0]))

    def anonymous(self, children):
        self._anonymous += 1
        return Variable(f"_Anon{self._anonymous}")

    def function(self, children):
        return Function(str(children[0]), children[1])

    def symbol(self, children):
        return Constant(str(children[0]))

    def integer(self, children):
        return Constant(int(children[0]))

    def negative(self, children):
        return Constant(-int(children[0]))

    def string(self, children):
        return Constant(str(children[0]))

    def terms(self, children):
        return tuple(children)

    # Atoms and literals

    def atom(self, children):
        return Atom(str(children[0]), children[1] if len(children) > 1 else ())

    def positive(self, children):
        return Literal(children[0])

    def naf(self, children):
        return Literal(children[0], negated=True)

    def comparison(self, children):
        left, operator, right = children
        return Literal(builtin_atom(str(operator), left, right))

    def body(self, children):
        return tuple(children)

    # Choice heads

    def lower_bound(self, children):
        return _Bound()

    def upper_bound(self, children):
        return _Bound()

    def choice_element(self, children):
        return ChoiceElement(children[0], children[1] if len(children) > 1 else ())

    def choice_elements(self, children):
        return tuple(children)

    @v_args(meta=True)
    def choice_head(self, meta, children):
        if any(isinstance(child, _Bound) for child in children):
            raise UnsupportedConstructError("choice bounds", meta.line, meta.column)
        elements = [child for child in children if isinstance(child, tuple)]
        return elements[0] if elements else ()

    # Statements

    @v_args(meta=True)
    def fact(self, meta, children):
        return Rule(-1, head=children[0]), meta.line, meta.column

    @v_args(meta=True)
    def normal_rule(self, meta, children):
        return Rule(-1, head=children[0], body=children[1]), meta.line, meta.column

    @v_args(meta=True)
    def constraint(self, meta, children):
        return Rule(-1, body=children[0]), meta.line, meta.column

    @v_args(meta=True)
    def choice_rule(self, meta, children):
        body = children[1] if len(children) > 1 else ()
        return Rule(-1, body=body, choice=children[0], is_choice=True), meta.line, meta.column


def parse_input_declaration(declaration: str) -> Tuple[str, int]:
    """Parse ``p/2`` into ``("p", 2)``."""
    match = _INPUT_DECLARATION.match(declaration)
    if not match:
        raise ProgramSyntaxError(f"bad input predicate declaration {declaration!r}, expected name/arity")
    return match.group(1), int(match.group(2))


def input_directives(text: str) -> Set[Tuple[str, int]]:
    """Input predicates declared with ``% #input p/n.`` lines."""
    return {(m.group(1), int(m.group(2))) for m in _INPUT_DIRECTIVE.finditer(text)}


def _blank(match) -> str:
    return " " * len(match.group(0))


def _line_column(text: str, offset: int) -> Tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def _reject_unsupported(text: str) -> None:
    code = _STRING_OR_COMMENT.sub(_blank, text)
    hits = []
    for pattern, construct in _UNSUPPORTED:
        match = pattern.search(code)
        if match:
            hits.append((match.start(), construct))
    if hits:
        offset, construct = min(hits)
        raise UnsupportedConstructError(construct, *_line_column(text, offset))


def _check_safety(rule: Rule, line: int) -> None:
    if rule.is_fact:
        if not rule.head.is_ground():
            raise UnsafeRuleError(f"fact {rule.head} at line {line} is not ground")
        return

    bound = {name for lit in rule.positive_body for name in lit.atom.variables()}
    needed = set()
    if rule.head is not None:
        needed.update(rule.head.variables())
    for lit in rule.body:
        if lit.negated or lit.atom.kind is AtomKind.BUILTIN:
            needed.update(lit.atom.variables())
    unsafe = needed - bound

    for element in rule.choice:
        local = bound | {name for lit in element.condition
                         if not lit.negated and lit.atom.kind is not AtomKind.BUILTIN
                         for name in lit.atom.variables()}
        wanted = set(element.atom.variables())
        for lit in element.condition:
            wanted.update(lit.atom.variables())
        unsafe |= wanted - local

    if unsafe:
        names = ", ".join(sorted(unsafe))
        raise UnsafeRuleError(f"unsafe variable(s) {names} in rule at line {line}: {rule}")


def _check_input_heads(rule: Rule, inputs: FrozenSet[Tuple[str, int]], line: int) -> None:
    heads = [rule.head] if rule.head is not None else []
    heads.extend(element.atom for element in rule.choice)
    for head in heads:
        if head.signature in inputs:
            name, arity = head.signature
            raise InputPredicateError(f"input predicate {name}/{arity} occurs in head at line {line}")


def parse_program(text: str, input_preds: Optional[Iterable[str]] = None) -> Program:
    """
    Parse program text into a Program with choice rules left untranslated.

    Args:
        text: ASP source
        input_preds: ``name/arity`` declarations of instance predicates

    Returns:
        Program with rule ids assigned in statement order
    """
    inputs = set(input_directives(text))
    for declaration in input_preds or ():
        inputs.add(parse_input_declaration(declaration))
    inputs = frozenset(inputs)

    _reject_unsupported(text)
    try:
        tree = _parser.parse(text)
        statements = _StatementBuilder().transform(tree)
    except UnexpectedInput as e:
        raise ProgramSyntaxError(_describe(e), e.line, e.column) from None
    except VisitError as e:
        if isinstance(e.orig_exc, AspError):
            raise e.orig_exc from None
        raise

    rules: List[Rule] = []
    for rule_id, (rule, line, _column) in enumerate(statements):
        _check_safety(rule, line)
        _check_input_heads(rule, inputs, line)
        rules.append(replace(rule, id=rule_id))

    logger.debug("Parsed %d statements, %d input predicates", len(rules), len(inputs))
    return Program(tuple(rules), inputs)


def parse_facts(text: str) -> Set[Atom]:
    """Parse an instance file; every statement must be a ground fact."""
    program = parse_program(text)
    facts = set()
    for rule in program.rules:
        if not rule.is_fact:
            raise ProgramSyntaxError(f"instance files may only contain facts, found: {rule}")
        facts.add(rule.head)
    return facts


def load_program(path: str, input_preds: Optional[Iterable[str]] = None) -> Program:
    with open(path, "r", encoding="utf-8") as f:
        return parse_program(f.read(), input_preds)


def load_facts(paths: Iterable[str]) -> Set[Atom]:
    facts: Set[Atom] = set()
    for path in paths:
        with open(path, "r", encoding="utf-8") as f:
            facts |= parse_facts(f.read())
    return facts


def _describe(error: UnexpectedInput) -> str:
    token = getattr(error, "token", None)
    if token is not None:
        if token.type == "$END":
            return "unexpected end of input"
        return f"unexpected {token!r}"
    char = getattr(error, "char", None)
    if char is not None:
        return f"unexpected character {char!r}"
    return "unexpected input"
