"""Direct evaluation of IR definitions over Python model values.

The evaluator executes rule bodies by constraint propagation over finite
domains: equalities unify constructor patterns against computed values,
``select`` with an unbound index enumerates the (fixed-size) array, and
relation atoms recurse through their clauses.  Body atoms are processed in
authored order with a pending queue, so rules must be mode-correct: every
variable must become determinable from earlier atoms, pool enumeration or
the head bindings.

Values are plain Python data: ``int``/``bool``, ``None``-or-value for
options, tuples for arrays and lists, ``Enum`` members for nullary-only
datatypes and frozen dataclasses for everything else.  The mapping between
constructor names and Python classes lives in a :class:`ValueRegistry`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields as dc_fields
from typing import Any, Callable, Iterator, Optional, Sequence

from .ast import (
    App,
    Clause,
    FunDef,
    Lambda,
    Lit,
    Program,
    RelDef,
    Sort,
    Term,
    Var,
)


class EvalError(Exception):
    """Raised on genuine evaluation defects (mode violations, bad arity)."""


class _Fail(Exception):
    """Internal: current branch is inconsistent (never escapes the solver)."""


@dataclass(frozen=True)
class Closure:
    """A function value: lambda or partially applied symbol."""

    params: tuple[tuple[str, Sort], ...]
    body: Term
    env: dict[str, Any]

    def __hash__(self) -> int:  # env is a dict; identity hashing suffices
        return id(self)


class ValueRegistry:
    """Constructor-name <-> Python-value mapping for one model vocabulary."""

    def __init__(self) -> None:
        self.ctor_to_py: dict[str, Callable[..., Any]] = {}
        self.ctor_fields: dict[str, tuple[str, ...]] = {}
        self.value_ctor: dict[type, str] = {}
        self.enum_members: dict[str, Any] = {}

    def register_class(self, ctor: str, cls: type, field_names: Sequence[str]) -> None:
        self.ctor_to_py[ctor] = cls
        self.ctor_fields[ctor] = tuple(field_names)
        self.value_ctor[cls] = ctor

    def register_enum(self, cls: type[enum.Enum]) -> None:
        for member in cls:
            self.enum_members[member.name] = member
            self.ctor_to_py[member.name] = lambda m=member: m
            self.ctor_fields[member.name] = ()

    def ctor_of_value(self, v: Any) -> Optional[str]:
        if isinstance(v, enum.Enum):
            return v.name
        if type(v) in self.value_ctor:
            return self.value_ctor[type(v)]
        return None

    def fields_of_value(self, v: Any) -> tuple[Any, ...]:
        return tuple(getattr(v, f.name) for f in dc_fields(v))


# Options use ``None`` for the absent case and the raw value otherwise; the
# model vocabulary never nests options, which keeps this unambiguous.
_OPTION_NONE = "none"
_OPTION_SOME = "some"
_LIST_NIL = "nil"
_LIST_CONS = "cons"


class Evaluator:
    def __init__(
        self,
        program: Program,
        registry: ValueRegistry,
        scale: Optional[int] = None,
    ):
        self.program = program
        self.registry = registry
        self.scale = scale

    # -- term evaluation ----------------------------------------------------

    def eval(self, t: Term, env: dict[str, Any]) -> Any:
        """Evaluate a ground term; raises EvalError on unbound variables."""
        if isinstance(t, Lit):
            return t.value
        if isinstance(t, Var):
            if t.name not in env:
                raise EvalError(f"unbound variable {t.name}")
            return env[t.name]
        if isinstance(t, Lambda):
            return Closure(t.params, t.body, dict(env))
        assert isinstance(t, App)
        return self._eval_app(t, env)

    def _eval_app(self, t: App, env: dict[str, Any]) -> Any:
        sym = t.sym
        if sym == "and":
            return all(self.eval(a, env) for a in t.args)
        if sym == "or":
            return any(self.eval(a, env) for a in t.args)
        if sym == "not":
            return not self.eval(t.args[0], env)
        if sym == "=>":
            return (not self.eval(t.args[0], env)) or self.eval(t.args[1], env)
        if sym == "=":
            return self.eval(t.args[0], env) == self.eval(t.args[1], env)
        if sym == "distinct":
            vals = [self.eval(a, env) for a in t.args]
            return len(set(map(self._hashable, vals))) == len(vals)
        if sym == "ite":
            return (
                self.eval(t.args[1], env)
                if self.eval(t.args[0], env)
                else self.eval(t.args[2], env)
            )
        if sym in ("+", "-", "*", "div"):
            a, b = (self.eval(x, env) for x in t.args)
            if sym == "+":
                return a + b
            if sym == "-":
                return a - b
            if sym == "*":
                return a * b
            return a // b
        if sym in ("<", "<=", ">", ">="):
            a, b = (self.eval(x, env) for x in t.args)
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[sym]
        if sym == "select":
            arr = self.eval(t.args[0], env)
            idx = self.eval(t.args[1], env)
            if not (0 <= idx < len(arr)):
                raise _Fail()  # out-of-range select falsifies the clause
            return arr[idx]
        if sym == "store":
            arr = self.eval(t.args[0], env)
            idx = self.eval(t.args[1], env)
            val = self.eval(t.args[2], env)
            if not (0 <= idx < len(arr)):
                raise _Fail()
            return arr[:idx] + (val,) + arr[idx + 1 :]
        if sym == "call":
            fn = self.eval(t.args[0], env)
            args = [self.eval(a, env) for a in t.args[1:]]
            return self.apply_closure(fn, args)
        if sym == "mkarray":
            return tuple(self.eval(a, env) for a in t.args)
        if sym == "alen":
            return len(self.eval(t.args[0], env))
        if sym == "amap":
            f = self.eval(t.args[0], env)
            arr = self.eval(t.args[1], env)
            return tuple(self.apply_closure(f, [x]) for x in arr)
        if sym == "const_array":
            if self.scale is None:
                raise EvalError("const_array needs an evaluator scale")
            return (self.eval(t.args[0], env),) * self.scale
        if sym == _OPTION_NONE:
            return None
        if sym == _OPTION_SOME:
            return self.eval(t.args[0], env)
        if sym == _LIST_NIL:
            return ()
        if sym == _LIST_CONS:
            head = self.eval(t.args[0], env)
            tail = self.eval(t.args[1], env)
            return (head,) + tail
        if sym == "is$some":
            return self.eval(t.args[0], env) is not None
        if sym == "is$none":
            return self.eval(t.args[0], env) is None
        if sym.startswith("is$"):
            ctor = sym[3:]
            v = self.eval(t.args[0], env)
            return self._value_ctor_name(v) == ctor
        if sym in self.registry.ctor_to_py:
            args = [self.eval(a, env) for a in t.args]
            return self.registry.ctor_to_py[sym](*args)
        if sym in self.program.functions:
            fd = self.program.functions[sym]
            if len(t.args) < len(fd.params):
                # partial application: build a closure over remaining params
                supplied = [self.eval(a, env) for a in t.args]
                fenv = {p[0]: v for p, v in zip(fd.params, supplied)}
                return Closure(fd.params[len(t.args) :], fd.body, fenv)
            args = [self.eval(a, env) for a in t.args]
            fenv = {p[0]: v for p, v in zip(fd.params, args)}
            return self.eval(fd.body, fenv)
        if sym in self.program.relations:
            # A relation in term position is its truth value (ground args).
            args = [self.eval(a, env) for a in t.args]
            return self.holds(sym, args)
        if sym == "some_val":
            v = self.eval(t.args[0], env)
            if v is None:
                raise _Fail()  # accessor on the wrong constructor: guard false
            return v
        if sym in self.program.accessors:
            v = self.eval(t.args[0], env)
            _, ctor, idx = self.program.accessors[sym]
            if self._value_ctor_name(v) != ctor.name:
                raise _Fail()  # accessor on the wrong constructor: guard false
            return getattr(v, sym)
        raise EvalError(f"cannot evaluate symbol {sym!r}")

    def apply_closure(self, fn: Any, args: list[Any]) -> Any:
        if not isinstance(fn, Closure):
            raise EvalError(f"calling non-function value {fn!r}")
        if len(args) < len(fn.params):
            env = dict(fn.env)
            env.update({p[0]: v for p, v in zip(fn.params, args)})
            return Closure(fn.params[len(args) :], fn.body, env)
        env = dict(fn.env)
        env.update({p[0]: v for p, v in zip(fn.params, args)})
        return self.eval(fn.body, env)

    def _value_ctor_name(self, v: Any) -> str:
        if v is None:
            return _OPTION_NONE
        if isinstance(v, tuple):
            return _LIST_CONS if v else _LIST_NIL
        name = self.registry.ctor_of_value(v)
        if name is not None:
            return name
        raise EvalError(f"value {v!r} has no registered constructor")

    @staticmethod
    def _hashable(v: Any) -> Any:
        return v

    # -- pattern matching ---------------------------------------------------

    def match(self, pat: Term, value: Any, env: dict[str, Any]) -> Optional[dict[str, Any]]:
        """Match a constructor/variable/literal pattern against a value.

        Returns the extended environment or ``None``; accessor and builtin
        applications are not patterns and must be evaluable instead.
        """
        if isinstance(pat, Var):
            if pat.name in env:
                return env if env[pat.name] == value else None
            env2 = dict(env)
            env2[pat.name] = value
            return env2
        if isinstance(pat, Lit):
            return env if pat.value == value else None
        if isinstance(pat, App):
            sym = pat.sym
            if sym == _OPTION_SOME:
                if value is None:
                    return None
                return self.match(pat.args[0], value, env)
            if sym == _OPTION_NONE:
                return env if value is None else None
            if sym == _LIST_NIL:
                return env if value == () else None
            if sym == _LIST_CONS:
                if not isinstance(value, tuple) or not value:
                    return None
                env2 = self.match(pat.args[0], value[0], env)
                if env2 is None:
                    return None
                return self.match(pat.args[1], value[1:], env2)
            if sym in self.registry.ctor_to_py:
                if self._value_ctor_name(value) != sym:
                    return None
                sub_values = (
                    self.registry.fields_of_value(value) if pat.args else ()
                )
                env2: Optional[dict[str, Any]] = env
                for p, v in zip(pat.args, sub_values):
                    env2 = self.match(p, v, env2)
                    if env2 is None:
                        return None
                return env2
        return None

    @staticmethod
    def _is_pattern(t: Term) -> bool:
        return isinstance(t, (Var, Lit)) or (
            isinstance(t, App)
            and t.sym
            in (_OPTION_SOME, _OPTION_NONE, _LIST_NIL, _LIST_CONS)
            or isinstance(t, App)
            and not t.sym.startswith("is$")
            and t.sym not in (
                "and", "or", "not", "=>", "=", "distinct", "ite", "+", "-",
                "*", "<", "<=", ">", ">=", "select", "store", "call",
            )
        )

    # -- clause solving -----------------------------------------------------

    def solve_atoms(
        self, atoms: Sequence[Term], env: dict[str, Any], depth: int = 0
    ) -> Iterator[dict[str, Any]]:
        """All solutions of a conjunction of body atoms, deterministically."""
        if depth > 64:
            raise EvalError("relation recursion too deep")
        pending = list(atoms)
        # Atoms are attempted in order; an atom that cannot run yet (unbound
        # vars on both sides of an equality) is retried after others bind.
        yield from self._solve(pending, env, depth)

    def _solve(
        self, atoms: list[Term], env: dict[str, Any], depth: int
    ) -> Iterator[dict[str, Any]]:
        if not atoms:
            yield env
            return
        for i, atom in enumerate(atoms):
            rest = atoms[:i] + atoms[i + 1 :]
            handled = True
            try:
                results = self._try_atom(atom, env, depth)
            except _Defer:
                handled = False
            if handled:
                for env2 in results:
                    yield from self._solve(rest, env2, depth)
                return
        raise EvalError(
            f"mode violation: cannot make progress on atoms {atoms!r} "
            f"with bound vars {sorted(env)}"
        )

    def _try_atom(
        self, atom: Term, env: dict[str, Any], depth: int
    ) -> list[dict[str, Any]]:
        if isinstance(atom, App) and atom.sym == "=":
            try:
                return self._solve_eq(atom.args[0], atom.args[1], env, depth)
            except _Fail:
                return []
        if isinstance(atom, App) and atom.sym in self.program.relations:
            try:
                return list(self._solve_rel(atom, env, depth))
            except _Fail:
                return []
        if isinstance(atom, App) and atom.sym == "or":
            out: list[dict[str, Any]] = []
            for d in atom.args:
                sub = d.args if isinstance(d, App) and d.sym == "and" else (d,)
                try:
                    out.extend(self._solve(list(sub), env, depth))
                except _Fail:
                    continue
            return out
        # Plain boolean guard: evaluate (deferring if unbound).
        try:
            val = self.eval(atom, env)
        except EvalError as e:
            if "unbound variable" in str(e):
                raise _Defer() from None
            raise
        except _Fail:
            return []
        if val is True:
            return [env]
        if val is False:
            return []
        raise EvalError(f"guard atom {atom!r} evaluated to non-boolean {val!r}")

    def _solve_eq(
        self, lhs: Term, rhs: Term, env: dict[str, Any], depth: int
    ) -> list[dict[str, Any]]:
        lv = self._try_eval(lhs, env)
        rv = self._try_eval(rhs, env)
        if lv is not _UNBOUND and rv is not _UNBOUND:
            return [env] if lv == rv else []
        if lv is not _UNBOUND:
            return self._bind_side(rhs, lv, env, depth)
        if rv is not _UNBOUND:
            return self._bind_side(lhs, rv, env, depth)
        # Neither side ground: enumerate a select over an unbound index so
        # the other side can be matched per element.
        for sel, other in ((lhs, rhs), (rhs, lhs)):
            branches = self._enumerate_select(sel, env)
            if branches is None:
                continue
            out: list[dict[str, Any]] = []
            for env2 in branches:
                try:
                    out.extend(self._solve_eq(sel, other, env2, depth))
                except _Fail:
                    continue
            return out
        raise _Defer()

    def _enumerate_select(
        self, t: Term, env: dict[str, Any]
    ) -> Optional[list[dict[str, Any]]]:
        """Environments binding the index of ``select(arr, i)`` when ``arr``
        is known and ``i`` is an unbound variable; ``None`` otherwise."""
        if not (isinstance(t, App) and t.sym == "select"):
            return None
        if not isinstance(t.args[1], Var) or t.args[1].name in env:
            return None
        arr = self._try_eval(t.args[0], env)
        if arr is _UNBOUND:
            return None
        out = []
        for j in range(len(arr)):
            env2 = dict(env)
            env2[t.args[1].name] = j
            out.append(env2)
        return out

    def _bind_side(
        self, pat: Term, value: Any, env: dict[str, Any], depth: int
    ) -> list[dict[str, Any]]:
        # select with an unbound index: enumerate the array.
        if isinstance(pat, App) and pat.sym == "select":
            arr = self._try_eval(pat.args[0], env)
            idx = self._try_eval(pat.args[1], env)
            if arr is not _UNBOUND and idx is _UNBOUND and isinstance(pat.args[1], Var):
                out = []
                for j, elem in enumerate(arr):
                    if elem == value:
                        env2 = dict(env)
                        env2[pat.args[1].name] = j
                        out.append(env2)
                return out
            raise _Defer()
        env2 = self.match(pat, value, env)
        return [env2] if env2 is not None else []

    def _solve_rel(
        self, atom: App, env: dict[str, Any], depth: int
    ) -> Iterator[dict[str, Any]]:
        rel = self.program.relations[atom.sym]
        arg_vals = [self._try_eval(a, env) for a in atom.args]
        for cl in rel.clauses:
            # No renaming: each clause application solves in its own fresh
            # environment and exchanges only values with the caller.
            cenv: dict[str, Any] = {}
            ok = True
            unbound_pairs: list[tuple[Term, Term]] = []
            for formal, actual, val in zip(cl.head_args, atom.args, arg_vals):
                if val is not _UNBOUND:
                    m = self.match(formal, val, cenv)
                    if m is None:
                        ok = False
                        break
                    cenv = m
                else:
                    unbound_pairs.append((actual, formal))
            if not ok:
                continue
            try:
                for solved in self._solve(list(cl.body), cenv, depth + 1):
                    env2 = dict(env)
                    consistent = True
                    for actual, formal in unbound_pairs:
                        fval = self.eval(formal, solved)
                        m = self.match(actual, fval, env2)
                        if m is None:
                            consistent = False
                            break
                        env2 = m
                    if consistent:
                        yield env2
            except _Fail:
                continue

    def _try_eval(self, t: Term, env: dict[str, Any]) -> Any:
        try:
            return self.eval(t, env)
        except EvalError as e:
            if "unbound variable" in str(e):
                return _UNBOUND
            raise

    # -- public entry points -------------------------------------------------

    def holds(self, rel_name: str, args: Sequence[Any]) -> bool:
        """Truth of ``rel(args)`` for fully ground arguments."""
        rel = self.program.relations[rel_name]
        atom = App(
            rel_name,
            tuple(Var(f"$a{i}", rel.params[i][1]) for i in range(len(args))),
        )
        env = {f"$a{i}": v for i, v in enumerate(args)}
        try:
            for _ in self._solve_rel(atom, env, 0):
                return True
        except _Fail:
            return False
        return False

    def solutions(
        self, rel_name: str, args: Sequence[Any | None], free: Sequence[str]
    ) -> Iterator[dict[str, Any]]:
        """Solutions of ``rel(args)`` where ``None`` entries in ``args`` are
        free variables named by ``free`` (in order)."""
        rel = self.program.relations[rel_name]
        terms: list[Term] = []
        env: dict[str, Any] = {}
        fi = 0
        for i, v in enumerate(args):
            if v is None:
                terms.append(Var(free[fi], rel.params[i][1]))
                fi += 1
            else:
                terms.append(Var(f"$g{i}", rel.params[i][1]))
                env[f"$g{i}"] = v
        atom = App(rel_name, tuple(terms))
        try:
            yield from self._solve_rel(atom, env, 0)
        except _Fail:
            return


class _Defer(Exception):
    """Internal: atom cannot run yet; retry after other atoms bind vars."""


_UNBOUND = object()
