"""Line-oriented grammar for class and reduct files, and the renderers
that emit byte-stable files the parser round-trips."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .ages import BoundedClass
from .errors import InputError, ParseError
from .ktypes import parse_type, serialize_type
from .reducts import FormulaDef, OrbitsDef, Relation, Reduct, render_reldef
from .structures import (
    And,
    Atom,
    Eq,
    FinStructure,
    Not,
    Or,
    Signature,
    parse_literal,
    render_literal,
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_VAR = re.compile(r"x(\d+)$")


@dataclass
class Catalog:
    """Parsed contents of one or more input files, in declaration order."""

    classes: dict[str, BoundedClass] = field(default_factory=dict)
    reducts: dict[str, Reduct] = field(default_factory=dict)
    order: list = field(default_factory=list)

    def bounded_class(self, name: str) -> BoundedClass:
        if name not in self.classes:
            raise InputError(f"unknown class {name!r}")
        return self.classes[name]

    def reduct(self, name: str) -> Reduct:
        if name not in self.reducts:
            raise InputError(f"unknown reduct {name!r}")
        return self.reducts[name]

    def sole_class(self) -> BoundedClass:
        if len(self.classes) != 1:
            raise InputError(
                f"expected exactly one class, found {sorted(self.classes)}")
        return next(iter(self.classes.values()))


def parse_input(text: str, catalog: Catalog | None = None) -> Catalog:
    """Parse class/reduct stanzas into fully validated objects."""
    cat = catalog if catalog is not None else Catalog()
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line, lineno = _strip(lines[i]), i + 1
        i += 1
        if not line:
            continue
        head = line.split()
        if head[0] == "class":
            if len(head) != 2 or not _IDENT.match(head[1]):
                raise ParseError("expected 'class <name>'", lineno, 1)
            i = _parse_class(lines, i, head[1], cat)
        elif head[0] == "reduct":
            if len(head) != 4 or head[2] != "over":
                raise ParseError("expected 'reduct <name> over <class>'", lineno, 1)
            if not _IDENT.match(head[1]):
                raise ParseError(f"bad reduct name {head[1]!r}", lineno, 1)
            i = _parse_reduct(lines, i, head[1], head[3], cat)
        else:
            raise ParseError(f"expected 'class' or 'reduct', got {head[0]!r}",
                             lineno, 1)
    return cat


def _strip(raw: str) -> str:
    return raw.split("#", 1)[0].strip()


def _parse_class(lines, i, name, cat) -> int:
    sig: Signature | None = None
    bounds: list[FinStructure] = []
    homogeneous = ramsey = False
    while True:
        if i >= len(lines):
            raise ParseError(f"class {name}: missing 'end'", len(lines), 1)
        line, lineno = _strip(lines[i]), i + 1
        i += 1
        if not line:
            continue
        if line == "end":
            break
        key, _, rest = line.partition(" ")
        if key == "sig":
            symbols = []
            for token in rest.split():
                sym, _, ar = token.partition("/")
                if not _IDENT.match(sym) or not ar.isdigit():
                    raise ParseError(f"bad symbol {token!r}", lineno, 1)
                symbols.append((sym, int(ar)))
            if not symbols:
                raise ParseError("sig line declares no symbols", lineno, 1)
            try:
                sig = Signature(tuple(symbols))
            except InputError as exc:
                raise ParseError(str(exc), lineno, 1)
        elif key == "bound":
            if sig is None:
                raise ParseError("bound before sig", lineno, 1)
            try:
                bounds.append(parse_literal(sig, rest))
            except InputError as exc:
                raise ParseError(str(exc), lineno, 1)
        elif key == "assert":
            for flag in rest.split():
                if flag == "homogeneous":
                    homogeneous = True
                elif flag == "ramsey":
                    ramsey = True
                else:
                    raise ParseError(f"unknown assertion {flag!r}", lineno, 1)
        else:
            raise ParseError(f"unknown class item {key!r}", lineno, 1)
    if sig is None:
        raise ParseError(f"class {name}: missing sig", i, 1)
    if name in cat.classes:
        if cat.classes[name] == BoundedClass(name, sig, tuple(bounds),
                                             homogeneous, ramsey):
            return i
        raise ParseError(f"class {name} redefined inconsistently", i, 1)
    try:
        k = BoundedClass(name, sig, tuple(bounds), homogeneous, ramsey)
    except InputError as exc:
        raise ParseError(str(exc), i, 1)
    cat.classes[name] = k
    cat.order.append(k)
    return i


def _parse_reduct(lines, i, name, base_name, cat) -> int:
    if base_name not in cat.classes:
        raise ParseError(f"reduct {name} references undeclared class {base_name!r}",
                         i, 1)
    base = cat.classes[base_name]
    relations: list[Relation] = []
    while True:
        if i >= len(lines):
            raise ParseError(f"reduct {name}: missing 'end'", len(lines), 1)
        line, lineno = _strip(lines[i]), i + 1
        i += 1
        if not line:
            continue
        if line == "end":
            break
        key, _, rest = line.partition(" ")
        if key != "rel":
            raise ParseError(f"unknown reduct item {key!r}", lineno, 1)
        decl, sep, body = rest.partition(":=")
        if not sep:
            raise ParseError("rel line needs ':='", lineno, 1)
        rname, _, ar = decl.strip().partition("/")
        if not _IDENT.match(rname) or not ar.isdigit() or int(ar) < 1:
            raise ParseError(f"bad relation declaration {decl.strip()!r}", lineno, 1)
        arity = int(ar)
        body = body.strip()
        try:
            if body.startswith("orbits"):
                definition = OrbitsDef(_parse_orbit_list(base.signature, body, lineno))
            else:
                definition = FormulaDef(parse_formula(body, lineno))
        except InputError as exc:
            raise ParseError(str(exc), lineno, 1) from None
        relations.append(Relation(rname, arity, definition))
    if name in cat.reducts:
        if cat.reducts[name] == Reduct(name, base, tuple(relations)):
            return i
        raise ParseError(f"reduct {name} redefined inconsistently", i, 1)
    try:
        reduct = Reduct(name, base, tuple(relations))
    except InputError as exc:
        raise ParseError(str(exc), i, 1)
    cat.reducts[name] = reduct
    cat.order.append(reduct)
    return i


def _parse_orbit_list(sig, body, lineno):
    rest = body[len("orbits"):].strip()
    if not (rest.startswith("[") and rest.endswith("]")):
        raise ParseError("orbits literal needs [ ... ]", lineno, 1)
    inner = rest[1:-1].strip()
    members = []
    for chunk in _split_bracketed(inner, lineno):
        members.append(parse_type(sig, chunk))
    return tuple(sorted(set(members), key=serialize_type))


def _split_bracketed(inner: str, lineno: int):
    """Split `[..], [..]` at top-level commas."""
    out = []
    depth = 0
    cur = []
    for ch in inner:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced brackets in orbits literal", lineno, 1)
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        out.append(tail)
    return [c for c in out if c]


# -- formula parsing -----------------------------------------------------------

_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*|[()!&|=,])")


def _tokenize(text: str, lineno: int):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"bad formula character {text[pos]!r}", lineno, pos + 1)
        tokens.append((m.group(1), m.start(1) + 1))
        pos = m.end()
    return tokens


def parse_formula(text: str, lineno: int = 0):
    """Tokens: R(x0,x1,...), x0=x1, !, &, |, parentheses."""
    tokens = _tokenize(text, lineno)
    pos = 0

    def peek():
        return tokens[pos][0] if pos < len(tokens) else None

    def take(expected=None):
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError(f"formula ended unexpectedly (wanted {expected})",
                             lineno, len(text))
        tok, col = tokens[pos]
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, got {tok!r}", lineno, col)
        pos += 1
        return tok, col

    def parse_or():
        parts = [parse_and()]
        while peek() == "|":
            take("|")
            parts.append(parse_and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def parse_and():
        parts = [parse_not()]
        while peek() == "&":
            take("&")
            parts.append(parse_not())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def parse_not():
        if peek() == "!":
            take("!")
            return Not(parse_not())
        return parse_atom()

    def parse_var():
        tok, col = take()
        m = _VAR.match(tok)
        if not m:
            raise ParseError(f"expected a variable x<i>, got {tok!r}", lineno, col)
        return int(m.group(1))

    def parse_atom():
        if peek() == "(":
            take("(")
            inner = parse_or()
            take(")")
            return inner
        tok, col = take()
        if _VAR.match(tok):
            take("=")
            return Eq(int(_VAR.match(tok).group(1)), parse_var())
        if not _IDENT.match(tok):
            raise ParseError(f"expected an atom, got {tok!r}", lineno, col)
        take("(")
        args = [parse_var()]
        while peek() == ",":
            take(",")
            args.append(parse_var())
        take(")")
        return Atom(tok, tuple(args))

    phi = parse_or()
    if pos != len(tokens):
        tok, col = tokens[pos]
        raise ParseError(f"unexpected trailing token {tok!r}", lineno, col)
    return phi


# -- rendering -----------------------------------------------------------------

def render_class(k: BoundedClass) -> str:
    lines = [f"class {k.name}"]
    sig = " ".join(f"{n}/{a}" for n, a in k.signature.symbols)
    lines.append(f"  sig {sig}")
    for b in k.bounds:
        lines.append(f"  bound {render_literal(b)}")
    flags = []
    if k.homogeneous_asserted:
        flags.append("homogeneous")
    if k.ramsey_asserted:
        flags.append("ramsey")
    if flags:
        lines.append(f"  assert {' '.join(flags)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def render_reduct(c: Reduct) -> str:
    lines = [f"reduct {c.name} over {c.base.name}"]
    for r in c.relations:
        lines.append(f"  rel {r.name}/{r.arity} := {render_reldef(c.base, r.definition)}")
    lines.append("end")
    return "\n".join(lines) + "\n"
