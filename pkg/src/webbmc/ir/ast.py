"""Core syntax of the guarded-rule IR.

The IR is a small inductive-relations language: algebraic datatypes with
optional constructor side-constraints, Horn-style relations, non-recursive
functions (possibly polymorphic / higher-order before the pipeline runs),
and reachability lemmas.  Everything downstream -- the reference
interpreter, the lowering pipeline and the solver emission -- consumes the
definitions in this module.

Terms are first-order s-expressions: ``Var``, ``Lit``, ``App`` and
``Lambda``.  Builtin operators (``and``, ``or``, ``not``, ``=>``, ``=``,
``ite``, arithmetic, ``select``/``store`` on functional arrays) are plain
``App`` nodes so that passes can treat the syntax uniformly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

# ---------------------------------------------------------------------------
# Sorts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sort:
    """Base class for sorts; concrete subclasses below."""


@dataclass(frozen=True)
class BoolSort(Sort):
    def __repr__(self) -> str:
        return "Bool"


@dataclass(frozen=True)
class IntSort(Sort):
    def __repr__(self) -> str:
        return "Int"


@dataclass(frozen=True)
class AdtSort(Sort):
    """A (possibly applied) algebraic datatype, e.g. ``option(URL)``."""

    name: str
    args: tuple[Sort, ...] = ()

    def __repr__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(map(repr, self.args))})"


@dataclass(frozen=True)
class SortVar(Sort):
    """A sort variable; only legal before specialization."""

    name: str

    def __repr__(self) -> str:
        return f"'{self.name}"


@dataclass(frozen=True)
class ArrowSort(Sort):
    """Function sort; only legal before specialization."""

    params: tuple[Sort, ...]
    ret: Sort

    def __repr__(self) -> str:
        ps = " × ".join(map(repr, self.params))
        return f"({ps} → {self.ret!r})"


@dataclass(frozen=True)
class ArraySort(Sort):
    """Functional array over integer indices; lowered to fixed-size slots."""

    elem: Sort

    def __repr__(self) -> str:
        return f"array({self.elem!r})"


BOOL = BoolSort()
INT = IntSort()


def adt(name: str, *args: Sort) -> AdtSort:
    return AdtSort(name, tuple(args))


def option(elem: Sort) -> AdtSort:
    return AdtSort("option", (elem,))


def lst(elem: Sort) -> AdtSort:
    return AdtSort("lst", (elem,))


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

BUILTIN_OPS = {
    "and", "or", "not", "=>", "=", "distinct", "ite",
    "+", "-", "*", "div", "<", "<=", ">", ">=",
    "select", "store", "mkarray", "const_array", "alen", "amap", "call",
}


@dataclass(frozen=True)
class Term:
    def __and__(self, other: "Term") -> "Term":
        return conj(self, other)

    def __or__(self, other: "Term") -> "Term":
        return disj(self, other)

    def __invert__(self) -> "Term":
        return neg(self)

    def __rshift__(self, other: "Term") -> "Term":
        return App("=>", (self, other))

    def __getattr__(self, name: str) -> "Term":
        # Field access builds an accessor application: ``rq.rq_url``.
        if name.startswith("_"):
            raise AttributeError(name)
        return App(name, (self,))


@dataclass(frozen=True)
class Var(Term):
    name: str
    sort: Sort

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Lit(Term):
    value: Union[int, bool]

    def __repr__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class App(Term):
    sym: str
    args: tuple[Term, ...]

    def __repr__(self) -> str:
        if not self.args:
            return self.sym
        return f"({self.sym} {' '.join(map(repr, self.args))})"


@dataclass(frozen=True)
class Lambda(Term):
    params: tuple[tuple[str, Sort], ...]
    body: Term

    def __repr__(self) -> str:
        ps = " ".join(n for n, _ in self.params)
        return f"(λ {ps}. {self.body!r})"


TRUE = Lit(True)
FALSE = Lit(False)


def app(sym: str, *args: Term) -> App:
    return App(sym, tuple(args))


def eq(a: Term, b: Term) -> Term:
    return App("=", (a, b))


def neg(a: Term) -> Term:
    return App("not", (a,))


def conj(*ts: Term) -> Term:
    flat: list[Term] = []
    for t in ts:
        if isinstance(t, App) and t.sym == "and":
            flat.extend(t.args)
        elif t is TRUE or (isinstance(t, Lit) and t.value is True):
            continue
        else:
            flat.append(t)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return App("and", tuple(flat))


def disj(*ts: Term) -> Term:
    flat: list[Term] = []
    for t in ts:
        if isinstance(t, App) and t.sym == "or":
            flat.extend(t.args)
        elif isinstance(t, Lit) and t.value is False:
            continue
        else:
            flat.append(t)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return App("or", tuple(flat))


def ite(c: Term, t: Term, e: Term) -> Term:
    return App("ite", (c, t, e))


def intlit(n: int) -> Lit:
    return Lit(n)


def select(arr: Term, idx: Term) -> Term:
    return App("select", (arr, idx))


def store(arr: Term, idx: Term, val: Term) -> Term:
    return App("store", (arr, idx, val))


# ---------------------------------------------------------------------------
# Definitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constructor:
    name: str
    fields: tuple[tuple[str, Sort], ...]
    # Side-constraint over the constructor's field variables; split off into
    # a companion well-formedness relation by the pipeline.
    constraint: Optional[Term] = None


@dataclass(frozen=True)
class DataDef:
    name: str
    params: tuple[str, ...]  # sort-variable names
    constructors: tuple[Constructor, ...]

    @property
    def sort(self) -> AdtSort:
        return AdtSort(self.name, tuple(SortVar(p) for p in self.params))


@dataclass(frozen=True)
class Clause:
    """One Horn clause: ``body ⇒ rel(head_args)``.

    Variables free in the body but absent from the head are existential.
    """

    name: str
    vars: tuple[Var, ...]
    body: tuple[Term, ...]
    head_args: tuple[Term, ...]


@dataclass(frozen=True)
class RelDef:
    name: str
    params: tuple[tuple[str, Sort], ...]
    clauses: tuple[Clause, ...]


@dataclass(frozen=True)
class FunDef:
    name: str
    params: tuple[tuple[str, Sort], ...]
    ret: Sort
    body: Term


@dataclass(frozen=True)
class LemmaDef:
    """A proven-reachable configuration: ``constraints(gb) ⇒
    Reachable(gb, events, state)`` with ``events``/``state`` literal terms
    over the global environment variable."""

    name: str
    gb: Var
    constraints: tuple[Term, ...]
    events: Term
    state: Term


IrDef = Union[DataDef, RelDef, FunDef, LemmaDef]


# ---------------------------------------------------------------------------
# Program: a named collection of definitions with symbol tables
# ---------------------------------------------------------------------------


class Program:
    """An IR program: datatypes, relations, functions and lemmas.

    Keeps symbol tables for constructor / accessor / tester resolution.
    Programs are immutable by convention; passes return new instances.
    """

    def __init__(self, defs: Iterable[IrDef]):
        self.defs: list[IrDef] = list(defs)
        self.datatypes: dict[str, DataDef] = {}
        self.relations: dict[str, RelDef] = {}
        self.functions: dict[str, FunDef] = {}
        self.lemmas: dict[str, LemmaDef] = {}
        self.constructors: dict[str, tuple[DataDef, Constructor]] = {}
        self.accessors: dict[str, tuple[DataDef, Constructor, int]] = {}
        for d in self.defs:
            if isinstance(d, DataDef):
                if d.name in self.datatypes:
                    raise ValueError(f"duplicate datatype {d.name}")
                self.datatypes[d.name] = d
                for c in d.constructors:
                    if c.name in self.constructors:
                        raise ValueError(f"duplicate constructor {c.name}")
                    self.constructors[c.name] = (d, c)
                    for i, (fname, _) in enumerate(c.fields):
                        if fname in self.accessors:
                            raise ValueError(f"duplicate accessor {fname}")
                        self.accessors[fname] = (d, c, i)
            elif isinstance(d, RelDef):
                self.relations[d.name] = d
            elif isinstance(d, FunDef):
                self.functions[d.name] = d
            elif isinstance(d, LemmaDef):
                self.lemmas[d.name] = d

    def with_defs(self, defs: Iterable[IrDef]) -> "Program":
        return Program(defs)

    def classify(self, sym: str) -> str:
        """Classify an applied symbol: builtin / ctor / accessor / tester /
        fun / rel."""
        if sym in BUILTIN_OPS:
            return "builtin"
        if sym.startswith("is$"):
            return "tester"
        if sym in self.constructors:
            return "ctor"
        if sym in self.accessors:
            return "accessor"
        if sym in self.functions:
            return "fun"
        if sym in self.relations:
            return "rel"
        raise KeyError(f"unknown symbol {sym!r}")


# ---------------------------------------------------------------------------
# Generic traversals
# ---------------------------------------------------------------------------


def sub_terms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from sub_terms(a)
    elif isinstance(t, Lambda):
        yield from sub_terms(t.body)


def free_vars(t: Term) -> dict[str, Var]:
    """Free variables, in first-occurrence order."""
    out: dict[str, Var] = {}

    def go(t: Term, bound: frozenset[str]) -> None:
        if isinstance(t, Var):
            if t.name not in bound and t.name not in out:
                out[t.name] = t
        elif isinstance(t, App):
            for a in t.args:
                go(a, bound)
        elif isinstance(t, Lambda):
            inner = bound | frozenset(n for n, _ in t.params)
            go(t.body, inner)

    go(t, frozenset())
    return out


def subst(t: Term, env: dict[str, Term]) -> Term:
    """Capture-avoiding substitution (lambda params shadow)."""
    if isinstance(t, Var):
        return env.get(t.name, t)
    if isinstance(t, App):
        return App(t.sym, tuple(subst(a, env) for a in t.args))
    if isinstance(t, Lambda):
        inner = {k: v for k, v in env.items() if k not in {n for n, _ in t.params}}
        if not inner:
            return t
        return Lambda(t.params, subst(t.body, inner))
    return t


def map_terms(t: Term, f: Callable[[Term], Optional[Term]]) -> Term:
    """Bottom-up rewrite: ``f`` may return a replacement or ``None``."""
    if isinstance(t, App):
        t = App(t.sym, tuple(map_terms(a, f) for a in t.args))
    elif isinstance(t, Lambda):
        t = Lambda(t.params, map_terms(t.body, f))
    r = f(t)
    return t if r is None else r


_FRESH = itertools.count()


def fresh_name(base: str) -> str:
    return f"{base}%{next(_FRESH)}"


def reset_fresh_counter() -> None:
    """Restart the gensym counter (deterministic emission in tests)."""
    global _FRESH
    _FRESH = itertools.count()


def rename_clause_vars(cl: Clause, suffix: str) -> Clause:
    env = {v.name: Var(f"{v.name}~{suffix}", v.sort) for v in cl.vars}
    return Clause(
        cl.name,
        tuple(Var(f"{v.name}~{suffix}", v.sort) for v in cl.vars),
        tuple(subst(b, env) for b in cl.body),
        tuple(subst(h, env) for h in cl.head_args),
    )


def alpha_equal(a: Term, b: Term) -> bool:
    """Alpha-equivalence (lambda binders normalized positionally)."""

    def go(a: Term, b: Term, ea: dict[str, int], eb: dict[str, int]) -> bool:
        if isinstance(a, Var) and isinstance(b, Var):
            ia, ib = ea.get(a.name), eb.get(b.name)
            if ia is None and ib is None:
                return a.name == b.name and a.sort == b.sort
            return ia == ib
        if isinstance(a, Lit) and isinstance(b, Lit):
            return a.value == b.value and type(a.value) is type(b.value)
        if isinstance(a, App) and isinstance(b, App):
            return (
                a.sym == b.sym
                and len(a.args) == len(b.args)
                and all(go(x, y, ea, eb) for x, y in zip(a.args, b.args))
            )
        if isinstance(a, Lambda) and isinstance(b, Lambda):
            if len(a.params) != len(b.params):
                return False
            if any(sa != sb for (_, sa), (_, sb) in zip(a.params, b.params)):
                return False
            depth = len(ea)
            ea2 = dict(ea)
            eb2 = dict(eb)
            for i, ((na, _), (nb, _)) in enumerate(zip(a.params, b.params)):
                ea2[na] = depth + i
                eb2[nb] = depth + i
            return go(a.body, b.body, ea2, eb2)
        return False

    return go(a, b, {}, {})
