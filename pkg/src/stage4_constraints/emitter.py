"""
Learned constraint emission.

Non-ground nogoods learned by conflict generalisation mention body atoms and
choice-hat atoms. This module rewrites them into constraints over the
predicates of the original program, ranks the conflict classes they belong
to and writes the constraint report.
"""

import re
from dataclasses import dataclass, field
from itertools import islice
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, TextIO, Tuple, Union

from stage1_program.parser import parse_program
from stage1_program.syntax import (
    COMPLEMENT_OPERATOR, Atom, AtomKind, Literal, Program, Rule, SignedLiteral,
    body_atom_rule, body_atom_terms, unwrap_hat,
)
from stage1_program.transform import (
    CanonicalConstraint, canonicalise_constraint, nogood_as_body,
    pretty_print_constraint, translate_choice_rules,
)
from stage2_grounding.grounder import completion_support_set, defining_key
from stage3_solving.generaliser import ConflictClass, rank_classes
from utils.config import Config
from utils.errors import InternalAtomError, IrreplaceableLiteralError
from utils.log import get_logger

logger = get_logger(__name__)

UIP_MODES = ("first", "last", "both", "all")

_PROVENANCE = re.compile(r"^%\s*class violations:\s*(\d+),\s*uip:\s*(\w+)")

# Replacement candidates explored per nogood before giving up
_MAX_ALTERNATIVES = 256


def is_safe(body: Sequence[Literal]) -> bool:
    """Every variable occurs in a positive classical literal."""
    bound: Set[str] = set()
    for literal in body:
        if not literal.negated and literal.atom.kind is AtomKind.CLASSICAL:
            bound.update(literal.atom.variables())
    return all(set(l.atom.variables()) <= bound for l in body)


@dataclass(frozen=True)
class LearnedConstraint:
    """A constraint over original predicates, with the class it was learned in."""

    body: Tuple[Literal, ...]
    uip: str = "first"
    class_key: Optional[CanonicalConstraint] = None
    violations: int = 0
    reduced_from: Optional["LearnedConstraint"] = None
    # reduction stopped early (budget or inconclusive validation)
    partial: bool = False

    @property
    def canonical(self) -> CanonicalConstraint:
        return canonicalise_constraint(self.body)

    @property
    def text(self) -> str:
        return pretty_print_constraint(self.body)

    @property
    def provenance(self) -> str:
        return f"% class violations: {self.violations}, uip: {self.uip}"

    def __str__(self) -> str:
        return self.text


class InternalLiteralReplacer:
    """
    Rewrites internal literals of a learned nogood until none are left.

    ``T β`` becomes the spliced body of its rule (or the rule head when the
    head has a single defining rule and ``prefer_head`` is set), ``F β``
    becomes ``F head`` or, failing safety, the complement of one body
    literal. Hat literals flip onto the atom they stand for.
    """

    def __init__(self, program: Program, prefer_head: bool = False):
        if any(r.is_choice for r in program.rules):
            program = translate_choice_rules(program)
        self.program = program
        self.prefer_head = prefer_head
        self.rules: Dict[int, Rule] = {r.id: r for r in program.rules}
        self.support_keys = completion_support_set(program)

    def _single_ruled(self, rule: Rule) -> bool:
        return (defining_key(rule.head) in self.support_keys
                and set(rule.variables()) <= set(rule.head.variables()))

    def _alternatives(self, literal: SignedLiteral) -> List[Tuple[SignedLiteral, ...]]:
        atom = literal.atom
        if atom.kind is AtomKind.HAT:
            return [(SignedLiteral(unwrap_hat(atom), not literal.truth),)]
        if atom.kind is AtomKind.BUILTIN:
            return [(SignedLiteral(Atom(COMPLEMENT_OPERATOR[atom.predicate], atom.args, AtomKind.BUILTIN)),)]

        rule = self.rules.get(body_atom_rule(atom))
        if rule is None or rule.head is None:
            raise IrreplaceableLiteralError(f"no rule behind body atom {atom}")
        mapping = dict(zip(rule.variables(), body_atom_terms(atom)))
        head = rule.head.substitute(mapping)
        if literal.truth:
            options = [tuple(SignedLiteral(l.atom.substitute(mapping), not l.negated) for l in rule.body)]
            if self._single_ruled(rule):
                options.insert(0 if self.prefer_head else 1, (SignedLiteral(head, True),))
            return options
        options = [(SignedLiteral(head, False),)]
        for l in rule.body:
            if l.atom.kind is not AtomKind.BUILTIN:
                # {T β, F b} and {T β, T c} make the complement of a body literal imply F β
                options.append((SignedLiteral(l.atom.substitute(mapping), l.negated),))
        return options

    @staticmethod
    def _pending(literal: SignedLiteral) -> bool:
        return literal.atom.is_internal or (literal.atom.kind is AtomKind.BUILTIN and not literal.truth)

    def _expand(self, literals: Tuple[SignedLiteral, ...]) -> Iterator[Tuple[SignedLiteral, ...]]:
        for index, literal in enumerate(literals):
            if self._pending(literal):
                for option in self._alternatives(literal):
                    yield from self._expand(literals[:index] + option + literals[index + 1:])
                return
        yield literals

    def replace(self, nogood: Sequence[SignedLiteral]) -> CanonicalConstraint:
        """
        Canonical constraint body for ``nogood`` without internal atoms.

        Raises:
            IrreplaceableLiteralError: every replacement is unsafe
        """
        unsafe = None
        for candidate in islice(self._expand(tuple(nogood)), _MAX_ALTERNATIVES):
            signed = set(candidate)
            if any(l.complement() in signed for l in signed):
                # never violated, nothing to learn
                continue
            canonical = canonicalise_constraint(nogood_as_body(candidate))
            if is_safe(canonical.body):
                return canonical
            unsafe = unsafe or canonical
        detail = f" (closest: {unsafe})" if unsafe is not None else ""
        raise IrreplaceableLiteralError(
            "irreplaceable internal literal in {" + ", ".join(str(l) for l in nogood) + "}" + detail)


def _as_signed(nogood: Union[CanonicalConstraint, Sequence[SignedLiteral]]) -> Tuple[SignedLiteral, ...]:
    if isinstance(nogood, CanonicalConstraint):
        return tuple(SignedLiteral(l.atom, not l.negated) for l in nogood.body)
    return tuple(nogood)


def replace_internal_literals(nogood: Union[CanonicalConstraint, Sequence[SignedLiteral]], program: Program,
                              uip: str = "first", class_key: Optional[CanonicalConstraint] = None,
                              violations: int = 0, prefer_head: bool = False) -> LearnedConstraint:
    """
    Turn a learned non-ground nogood into a constraint over original predicates.

    Args:
        nogood: signed literals, or a canonical constraint read as a nogood
        program: the encoding the nogood was learned on
        uip: label carried into the report
        class_key: key of the conflict class
        violations: violation count of that class
        prefer_head: replace ``T β`` by the head of a single-ruled rule

    Returns:
        LearnedConstraint in canonical form

    Raises:
        IrreplaceableLiteralError: no safe replacement exists
    """
    canonical = InternalLiteralReplacer(program, prefer_head).replace(_as_signed(nogood))
    return LearnedConstraint(canonical.body, uip, class_key, violations)


@dataclass
class ConstraintReport:
    constraints: List[LearnedConstraint] = field(default_factory=list)
    # (nogood text, reason)
    quarantined: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def text(self) -> str:
        lines = []
        for constraint in self.constraints:
            lines.append(constraint.provenance)
            lines.append(constraint.text)
        for nogood, reason in self.quarantined:
            lines.append(f"% quarantined {nogood}: {reason}")
        return "\n".join(lines) + ("\n" if lines else "")

    def write(self, out: Union[str, TextIO]) -> None:
        if isinstance(out, str):
            with open(out, "w", encoding="utf-8") as f:
                f.write(self.text)
        else:
            out.write(self.text)

    def __len__(self) -> int:
        return len(self.constraints)


def _selected(cls: ConflictClass, uip: str) -> List[Tuple[str, CanonicalConstraint]]:
    picks: List[Tuple[str, CanonicalConstraint]] = []
    if uip in ("first", "both", "all") and cls.best_first is not None:
        picks.append(("first", cls.best_first))
    if uip in ("last", "both", "all") and cls.best_last is not None:
        picks.append(("last", cls.best_last))
    if uip == "all":
        chosen = {c for _, c in picks}
        picks.extend((str(index), c) for index, c in cls.ordered_learned() if c not in chosen)
    return picks


def rank_and_emit(classes: Union[Dict[CanonicalConstraint, ConflictClass], Iterable[ConflictClass]],
                  program: Program, top_k: Optional[int] = None, out: Union[str, TextIO, None] = None,
                  uip: str = "both", prefer_head: bool = False) -> ConstraintReport:
    """
    Emit the constraints of the ``top_k`` most violated classes.

    Each constraint is preceded by ``% class violations: N, uip: first|last``.
    Nogoods that cannot be rewritten safely are listed as quarantined.
    """
    if uip not in UIP_MODES:
        raise ValueError(f"uip must be one of {', '.join(UIP_MODES)}")
    top_k = Config.TOP_K if top_k is None else top_k
    table = classes if isinstance(classes, dict) else {c.key: c for c in classes}
    replacer = InternalLiteralReplacer(program, prefer_head)

    report = ConstraintReport()
    emitted: Set[str] = set()
    for cls in rank_classes(table)[:max(top_k, 0)]:
        for label, nogood in _selected(cls, uip):
            try:
                canonical = replacer.replace(_as_signed(nogood))
            except IrreplaceableLiteralError as e:
                logger.warning("Quarantined learned nogood %s: %s", nogood, e)
                report.quarantined.append((str(nogood), str(e)))
                continue
            constraint = LearnedConstraint(canonical.body, label, cls.key, cls.violation_count)
            if constraint.text in emitted:
                continue
            emitted.add(constraint.text)
            report.constraints.append(constraint)

    logger.info("Emitted %d constraint(s) from %d class(es)", len(report.constraints), min(top_k, len(table)))
    if out is not None:
        report.write(out)
    return report


def augment_encoding(program: Program,
                     constraints: Iterable[Union[LearnedConstraint, CanonicalConstraint, Rule]]) -> Program:
    """Append constraints to ``program`` as headless rules with fresh ids."""
    rules = list(program.rules)
    next_id = program.next_rule_id
    for constraint in constraints:
        body = constraint.body
        if any(l.atom.is_internal for l in body):
            raise InternalAtomError(f"constraint mentions internal atoms: {constraint}")
        rules.append(Rule(next_id, body=tuple(body)))
        next_id += 1
    return program.with_rules(rules)


def read_constraint_report(text: str) -> List[LearnedConstraint]:
    """Parse a constraint report back, keeping provenance comments."""
    constraints: List[LearnedConstraint] = []
    violations, label = 0, "first"
    for line in text.splitlines():
        line = line.strip()
        provenance = _PROVENANCE.match(line)
        if provenance:
            violations, label = int(provenance.group(1)), provenance.group(2)
            continue
        if not line.startswith(":-"):
            continue
        for rule in parse_program(line).rules:
            constraints.append(LearnedConstraint(canonicalise_constraint(rule).body, label, None, violations))
    return constraints


def load_constraint_report(path: str) -> List[LearnedConstraint]:
    with open(path, "r", encoding="utf-8") as f:
        return read_constraint_report(f.read())
