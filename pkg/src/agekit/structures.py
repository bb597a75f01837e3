"""Finite relational structures: the substrate everything else computes over.

A structure is a finite relational structure over an explicit ordered
signature; relations are arbitrary sets of tuples (entries may repeat).
Embeddings are injective maps that preserve and reflect every relation.

Canonical form and the bit-encoding it minimizes
------------------------------------------------
A structure of size n is encoded as one bit string: for each symbol in
signature order, for each tuple over {0,..,n-1}^arity in lexicographic
order, one bit (1 iff the tuple is in the relation); earlier bits are more
significant.  canonical_form returns the relabelling (over all n!
permutations, n <= 8) whose encoding is lexicographically least.  The
rendered literal of the canonical form lists atoms in the same
(symbol-major, tuple-lex) order, so canonical literals are byte-portable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations, product

from .errors import InputError


@dataclass(frozen=True)
class Signature:
    """Ordered list of (name, arity); the ordering is part of identity."""

    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [n for n, _ in self.symbols]
        if len(set(names)) != len(names):
            raise InputError(f"duplicate symbol names in signature: {names}")
        for name, arity in self.symbols:
            if arity < 1:
                raise InputError(f"symbol {name} has arity {arity} < 1")

    def index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.symbols):
            if n == name:
                return i
        raise InputError(f"unknown symbol {name!r}")

    def arity(self, name: str) -> int:
        return self.symbols[self.index(name)][1]

    @property
    def max_arity(self) -> int:
        return max((a for _, a in self.symbols), default=0)


@dataclass(frozen=True, eq=True)
class FinStructure:
    """A finite structure: size n and one tuple-set per signature symbol."""

    signature: Signature
    size: int
    tables: tuple[frozenset[tuple[int, ...]], ...]
    _hash: int = field(init=False, repr=False, compare=False, default=0)

    def __post_init__(self):
        if self.size < 0:
            raise InputError("structure size must be >= 0")
        if len(self.tables) != len(self.signature.symbols):
            raise InputError("one table per signature symbol required")
        for (name, arity), table in zip(self.signature.symbols, self.tables):
            for t in table:
                if len(t) != arity:
                    raise InputError(f"tuple {t} has wrong arity for {name}/{arity}")
                if any(not (0 <= v < self.size) for v in t):
                    raise InputError(f"tuple {t} out of range for size {self.size}")
        object.__setattr__(self, "_hash", hash((self.signature, self.size, self.tables)))

    def __hash__(self) -> int:
        return self._hash

    def table(self, name: str) -> frozenset[tuple[int, ...]]:
        return self.tables[self.signature.index(name)]


def structure(sig: Signature, size: int, atoms=()) -> FinStructure:
    """Build a structure from (symbol_name, tuple) atoms."""
    tables = [set() for _ in sig.symbols]
    for name, t in atoms:
        tables[sig.index(name)].add(tuple(t))
    return FinStructure(sig, size, tuple(frozenset(t) for t in tables))


def empty_structure(sig: Signature) -> FinStructure:
    return structure(sig, 0)


@lru_cache(maxsize=None)
def _tuple_ranks(n: int, arity: int) -> dict[tuple[int, ...], int]:
    return {t: r for r, t in enumerate(product(range(n), repeat=arity))}


def encode_key(s: FinStructure) -> tuple[int, ...]:
    """Per-symbol integers whose tuple order equals bit-string order."""
    key = []
    for (_, arity), table in zip(s.signature.symbols, s.tables):
        m = s.size ** arity
        ranks = _tuple_ranks(s.size, arity)
        bits = 0
        for t in table:
            bits |= 1 << (m - 1 - ranks[t])
        key.append(bits)
    return tuple(key)


def sort_key(s: FinStructure) -> tuple:
    return (s.size, encode_key(s))


def apply_perm(s: FinStructure, perm) -> FinStructure:
    """Relabel: point i becomes perm[i]."""
    tables = tuple(
        frozenset(tuple(perm[v] for v in t) for t in table) for table in s.tables
    )
    return FinStructure(s.signature, s.size, tables)


def induced(s: FinStructure, subset) -> FinStructure:
    """Induced substructure on an ordered list of distinct indices."""
    subset = tuple(subset)
    if len(set(subset)) != len(subset):
        raise InputError(f"induced: indices must be distinct: {subset}")
    if any(not (0 <= v < s.size) for v in subset):
        raise InputError(f"induced: index out of range: {subset}")
    pos = {old: new for new, old in enumerate(subset)}
    keep = set(subset)
    tables = tuple(
        frozenset(tuple(pos[v] for v in t) for t in table if set(t) <= keep)
        for table in s.tables
    )
    return FinStructure(s.signature, len(subset), tables)


@lru_cache(maxsize=None)
def _check_slots(sig: Signature, upto: int) -> tuple:
    """For each new point i: the (symbol, tuple) slots over {0..i} that involve i."""
    out = []
    for i in range(upto):
        slots = []
        for si, (_, arity) in enumerate(sig.symbols):
            for t in product(range(i + 1), repeat=arity):
                if i in t:
                    slots.append((si, t))
        out.append(tuple(slots))
    return tuple(out)


def embeds(p: FinStructure, s: FinStructure, return_witness: bool = False):
    """Injective map preserving and reflecting every relation, if one exists."""
    if p.signature != s.signature:
        raise InputError("embeds: signature mismatch")
    n, m = p.size, s.size
    if n > m:
        return (False, None) if return_witness else False
    if n == 0:
        return (True, ()) if return_witness else True
    slots = _check_slots(p.signature, n)
    assign = [-1] * n
    used = [False] * m

    def extend(i: int) -> bool:
        if i == n:
            return True
        for cand in range(m):
            if used[cand]:
                continue
            assign[i] = cand
            ok = True
            for si, t in slots[i]:
                mapped = tuple(assign[v] for v in t)
                if (t in p.tables[si]) != (mapped in s.tables[si]):
                    ok = False
                    break
            if ok:
                used[cand] = True
                if extend(i + 1):
                    return True
                used[cand] = False
        assign[i] = -1
        return False

    found = extend(0)
    if return_witness:
        return (found, tuple(assign) if found else None)
    return found


@lru_cache(maxsize=1 << 18)
def canonical_form(s: FinStructure) -> FinStructure:
    """The relabelling with lexicographically least bit-encoding (n <= 8)."""
    n = s.size
    if n > 8:
        raise InputError(f"canonical_form limited to size <= 8, got {n}")
    if n <= 1:
        return s
    weights = {
        arity: [n ** (arity - 1 - j) for j in range(arity)]
        for _, arity in s.signature.symbols
    }
    best_key = None
    best_perm = None
    for perm in permutations(range(n)):
        key = []
        for (_, arity), table in zip(s.signature.symbols, s.tables):
            m = n ** arity
            w = weights[arity]
            bits = 0
            for t in table:
                r = 0
                for v, wt in zip(t, w):
                    r += perm[v] * wt
                bits |= 1 << (m - 1 - r)
            key.append(bits)
        key = tuple(key)
        if best_key is None or key < best_key:
            best_key = key
            best_perm = perm
    return apply_perm(s, best_perm)


def isomorphic(a: FinStructure, b: FinStructure) -> bool:
    return a.size == b.size and embeds(a, b)


def one_point_extensions(s: FinStructure):
    """All labelled structures extending s by one new point (index s.size)."""
    sig = s.signature
    new = s.size
    slots = []
    for si, (_, arity) in enumerate(sig.symbols):
        for t in product(range(new + 1), repeat=arity):
            if new in t:
                slots.append((si, t))
    if len(slots) > 24:
        raise InputError("one_point_extensions: relation space too large")
    base = [set(t) for t in s.tables]
    for bits in range(1 << len(slots)):
        tables = [set(t) for t in base]
        for j, (si, t) in enumerate(slots):
            if bits >> j & 1:
                tables[si].add(t)
        yield FinStructure(sig, new + 1, tuple(frozenset(t) for t in tables))


@lru_cache(maxsize=None)
def enumerate_structures(sig: Signature, n: int) -> tuple[FinStructure, ...]:
    """One canonical representative per isomorphism class of size n."""
    if n < 0:
        raise InputError("enumerate_structures: n must be >= 0")
    if n == 0:
        return (empty_structure(sig),)
    seen = set()
    for base in enumerate_structures(sig, n - 1):
        for ext in one_point_extensions(base):
            seen.add(canonical_form(ext))
    return tuple(sorted(seen, key=encode_key))


# -- structure literals -------------------------------------------------------

def render_literal(s: FinStructure) -> str:
    """`size=<n>: R(i,j) ...` with atoms in (symbol, tuple-lex) order."""
    atoms = []
    for (name, _), table in zip(s.signature.symbols, s.tables):
        for t in sorted(table):
            atoms.append(f"{name}({','.join(str(v) for v in t)})")
    body = " " + " ".join(atoms) if atoms else ""
    return f"size={s.size}:{body}"


def parse_literal(sig: Signature, text: str) -> FinStructure:
    """Parse the structure literal syntax; raises InputError on bad input."""
    text = text.strip()
    if not text.startswith("size="):
        raise InputError(f"structure literal must start with 'size=': {text!r}")
    head, _, rest = text.partition(":")
    try:
        size = int(head[len("size="):])
    except ValueError:
        raise InputError(f"bad size in structure literal: {head!r}")
    atoms = []
    for token in rest.split():
        if "(" not in token or not token.endswith(")"):
            raise InputError(f"bad atom {token!r} in structure literal")
        name, _, args = token[:-1].partition("(")
        try:
            t = tuple(int(x) for x in args.split(",")) if args else ()
        except ValueError:
            raise InputError(f"bad atom arguments in {token!r}")
        if len(t) != sig.arity(name):
            raise InputError(f"atom {token!r} has wrong arity for {name}")
        atoms.append((name, t))
    return structure(sig, size, atoms)


# -- quantifier-free formulas --------------------------------------------------

@dataclass(frozen=True)
class Atom:
    symbol: str
    vars: tuple[int, ...]


@dataclass(frozen=True)
class Eq:
    left: int
    right: int


@dataclass(frozen=True)
class Not:
    inner: "QfFormula"


@dataclass(frozen=True)
class And:
    parts: tuple["QfFormula", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["QfFormula", ...]


QfFormula = Atom | Eq | Not | And | Or


def formula_vars(phi: QfFormula) -> set[int]:
    if isinstance(phi, Atom):
        return set(phi.vars)
    if isinstance(phi, Eq):
        return {phi.left, phi.right}
    if isinstance(phi, Not):
        return formula_vars(phi.inner)
    return set().union(*(formula_vars(p) for p in phi.parts)) if phi.parts else set()


def validate_formula(phi: QfFormula, sig: Signature, nvars: int) -> None:
    if isinstance(phi, Atom):
        if sig.arity(phi.symbol) != len(phi.vars):
            raise InputError(f"atom {phi.symbol} used with {len(phi.vars)} arguments")
    bad = [v for v in formula_vars(phi) if not (0 <= v < nvars)]
    if bad:
        raise InputError(f"formula uses variables {bad} outside x0..x{nvars - 1}")


def eval_qf(phi: QfFormula, s: FinStructure, points) -> bool:
    """Standard quantifier-free satisfaction; points assigns x_i -> points[i]."""
    points = tuple(points)
    if any(not (0 <= v < s.size) for v in points):
        raise InputError(f"eval_qf: point out of range: {points}")
    bad = [v for v in formula_vars(phi) if v >= len(points)]
    if bad:
        raise InputError(f"eval_qf: tuple too short for variables {bad}")
    return _eval(phi, s, points)


def _eval(phi, s, points):
    if isinstance(phi, Atom):
        return tuple(points[v] for v in phi.vars) in s.table(phi.symbol)
    if isinstance(phi, Eq):
        return points[phi.left] == points[phi.right]
    if isinstance(phi, Not):
        return not _eval(phi.inner, s, points)
    if isinstance(phi, And):
        return all(_eval(p, s, points) for p in phi.parts)
    if isinstance(phi, Or):
        return any(_eval(p, s, points) for p in phi.parts)
    raise InputError(f"not a formula: {phi!r}")


def render_formula(phi: QfFormula) -> str:
    return _render(phi, 0)


def _render(phi, level):
    # level: 0 = or-context, 1 = and-context, 2 = atom-context
    if isinstance(phi, Atom):
        return f"{phi.symbol}({','.join(f'x{v}' for v in phi.vars)})"
    if isinstance(phi, Eq):
        return f"x{phi.left}=x{phi.right}"
    if isinstance(phi, Not):
        return "!" + _wrap(_render(phi.inner, 2), not isinstance(phi.inner, (Atom, Eq, Not)))
    if isinstance(phi, And):
        body = " & ".join(_render(p, 1) for p in phi.parts)
        return _wrap(body, level >= 2)
    if isinstance(phi, Or):
        body = " | ".join(_render(p, 0) for p in phi.parts)
        return _wrap(body, level >= 1)
    raise InputError(f"not a formula: {phi!r}")


def _wrap(text, needed):
    return f"({text})" if needed else text
