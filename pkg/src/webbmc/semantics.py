"""Reference interpreter of the browser transition system.

``step`` applies the unique transition rule whose guard accepts an event;
``replay`` folds a trace from the initial state.  Both execute the same
rule objects the compiler lowers to solver form, by running the IR
evaluator over them, so the interpreter is the executable ground truth the
solver pipeline is validated against.

Traces handed to ``replay`` are in storage order, newest event first, like
every trace the invariant catalog sees.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from . import model as M
from .ir.ast import App, Program, Var
from .ir.evaluate import EvalError, Evaluator
from .rules import datatypes as D
from .rules.transitions import CONFIG_GATES, RULES, browser_program


class StepRejected(Exception):
    """The event is not enabled in this state."""

    def __init__(self, reason: M.StepError):
        super().__init__(str(reason))
        self.reason = reason


class ReplayError(Exception):
    """A trace replay failed at a specific position (chronological)."""

    def __init__(self, index: int, reason: M.StepError):
        super().__init__(f"event {index}: {reason}")
        self.index = index
        self.reason = reason


@functools.lru_cache(maxsize=None)
def shared_program() -> Program:
    return browser_program()


@functools.lru_cache(maxsize=None)
def _evaluator() -> Evaluator:
    return Evaluator(shared_program(), D.REGISTRY)


def initial_state(gb: M.Global, scale: Optional[M.Scale] = None) -> M.BrowserState:
    """Blank top-level window, empty engine, empty stores."""
    sc = scale or M.Scale()
    blank = M.Window(
        M.ABOUT_BLANK,
        M.Document(
            (None,) * sc.doc_elems,
            (None,) * sc.doc_elems,
            M.EMPTY_RESPONSE_HEADERS,
            None,
        ),
        None,
        None,
    )
    engine = M.FetchEngine(
        None, None, None, None, None, None, None, None, 0, (None,) * sc.history
    )
    return M.BrowserState(
        (blank,) + (None,) * (sc.windows - 1),
        engine,
        (None,) * sc.jar,
        (None,) * sc.storage,
        (None,) * sc.cache,
        (None,) * sc.blobs,
        (None,) * sc.knowledge,
    )


def step_solutions(
    gb: M.Global, st: M.BrowserState, ev: M.Event
) -> Iterator[M.BrowserState]:
    evaluator = _evaluator()
    for env in evaluator.solutions("step", [gb, st, ev, None], ["st2"]):
        yield env["st2"]


def step(gb: M.Global, st: M.BrowserState, ev: M.Event) -> M.BrowserState:
    """Apply the transition rule accepting ``ev``; raises StepRejected.

    Rules are deterministic: the first solution is the only one.
    """
    for st2 in step_solutions(gb, st, ev):
        return st2
    raise StepRejected(_diagnose(gb, st, ev))


def try_step(
    gb: M.Global, st: M.BrowserState, ev: M.Event
) -> Optional[M.BrowserState]:
    for st2 in step_solutions(gb, st, ev):
        return st2
    return None


def replay(gb: M.Global, evs: Sequence[M.Event]) -> M.BrowserState:
    """Fold ``step`` over a newest-first trace; raises ReplayError with the
    chronological index of the first rejected event."""
    st = initial_state(gb, scale_of(gb))
    for i, ev in enumerate(reversed(evs)):
        nxt = try_step(gb, st, ev)
        if nxt is None:
            raise ReplayError(i, _diagnose(gb, st, ev))
        st = nxt
    return st


def replay_chronological(
    gb: M.Global, evs: Sequence[M.Event]
) -> M.BrowserState:
    return replay(gb, tuple(reversed(tuple(evs))))


def scale_of(gb: M.Global) -> M.Scale:
    """State capacities used for this run; uniform with the pool size."""
    n = max(len(gb.urls), 2)
    return M.Scale.of(n)


# ---------------------------------------------------------------------------
# Predicate library (evaluated over the shared rule definitions)
# ---------------------------------------------------------------------------


def holds(rel: str, *args: object) -> bool:
    return _evaluator().holds(rel, list(args))


def rel_solutions(rel: str, args: list, free: list[str]) -> Iterator[dict]:
    return _evaluator().solutions(rel, args, free)


def is_script_in_dom_path(
    gb: M.Global, st: M.BrowserState, path: M.DOMPath
) -> Optional[tuple[int, M.URL, int]]:
    """Script id, source URL and window slot of the script at ``path``."""
    for env in rel_solutions(
        "is_script_in_dom_path",
        [st.st_windows, path, None, None, None],
        ["sid", "src", "ctx"],
    ):
        return (env["sid"], env["src"], env["ctx"])
    return None


def is_frame_in_dom_path(
    gb: M.Global, st: M.BrowserState, path: M.DOMPath
) -> Optional[tuple[int, int]]:
    """Framed window slot and embedding window slot at ``path``."""
    for env in rel_solutions(
        "is_frame_in_dom_path", [st.st_windows, path, None, None], ["fslot", "ctx"]
    ):
        return (env["fslot"], env["ctx"])
    return None


def is_secure_context(st: M.BrowserState, slot: int) -> bool:
    return holds("is_secure_context", st.st_windows, slot)


def in_history(
    st: M.BrowserState, corr: M.Corr
) -> Optional[tuple[M.Emitter, int, int]]:
    for env in rel_solutions(
        "in_history",
        [st.st_fetch_engine, corr, None, None, None],
        ["em", "rqi", "rpi"],
    ):
        return (env["em"], env["rqi"], env["rpi"])
    return None


def is_request_source(
    st: M.BrowserState, rq: M.Request
) -> Optional[M.TupleOrigin]:
    for env in rel_solutions("is_request_source", [st, rq, None], ["org"]):
        return env["org"]
    return None


def is_cors_authorization_response(
    gb: M.Global, st: M.BrowserState, em_idx: int, origin: M.TupleOrigin
) -> Optional[tuple[M.Response, M.Corr]]:
    for env in rel_solutions(
        "is_cors_authorization_response",
        [gb, st, em_idx, origin, None, None],
        ["rp", "rpc"],
    ):
        return (env["rp"], env["rpc"])
    return None


def script_state(st: M.BrowserState, sid: int, item: M.KnowledgeItem) -> bool:
    return holds("script_state", st, sid, item)


def is_cors_simple_request(rq: M.Request) -> bool:
    return rq.rq_method in (M.Method.GET, M.Method.POST)


def is_cross_origin_request(st: M.BrowserState, rq: M.Request) -> bool:
    root = st.st_window
    a = M.origin_of_url(root.wd_location)
    b = M.origin_of_url(rq.rq_url)
    return a is None or b is None or a != b


def wf_global(gb: M.Global) -> bool:
    """Pool well-formedness: parallel rows, canonical domains, sane ranges."""
    return holds("wf_global", gb)


def wf_value(value: object) -> bool:
    """Constructor side-constraint of a model value (True when none)."""
    prog = shared_program()
    reg = D.REGISTRY
    ctor_name = reg.ctor_of_value(value)
    if ctor_name is None or ctor_name not in prog.constructors:
        return True
    _, ctor = prog.constructors[ctor_name]
    if ctor.constraint is None:
        return True
    env = {n: getattr(value, n) for n, _ in ctor.fields}
    return bool(_evaluator().eval(ctor.constraint, env))


# ---------------------------------------------------------------------------
# Step rejection diagnosis
# ---------------------------------------------------------------------------

_EVENT_RULE = {rule.event_ctor: rule.name for rule in RULES}

_SCRIPT_PATH_FIELDS = (
    "ev_uh_script", "ev_sc_script", "ev_rc_script", "ev_rh_script",
    "ev_nf_script", "ev_sd_script", "ev_pm_sender", "ev_cb_script",
    "ev_ss_script", "ev_sg_script", "ev_cu_script", "ev_ct_script",
)


def _diagnose(gb: M.Global, st: M.BrowserState, ev: M.Event) -> M.StepError:
    ctor = type(ev).__name__
    flag = CONFIG_GATES.get(ctor)
    if flag is not None and not getattr(gb.config, flag):
        return M.ConfigForbids(flag)
    if (
        isinstance(ev, M.EvResponse)
        and ev.ev_rp_provenance is M.Provenance.WORKER_SYNTHETIC
        and not gb.config.worker_allow_synthetic_responses
    ):
        return M.ConfigForbids("worker_allow_synthetic_responses")
    for f2 in _SCRIPT_PATH_FIELDS:
        path = getattr(ev, f2, None)
        if path is not None and is_script_in_dom_path(gb, st, path) is None:
            return M.UnresolvedPath()
    if isinstance(ev, M.EvDOMUpdate):
        if M.resolve_window_slot(st.st_windows, ev.ev_dom_path.dp_levels) is None:
            return M.UnresolvedPath()
    if isinstance(ev, M.EvResponse) and all(
        h is not None for h in st.st_fetch_engine.ft_history
    ):
        return M.PoolExhausted("history")
    if isinstance(ev, (M.EvResponse, M.EvScriptSetCookie)):
        sc = (
            ev.ev_sc_cookie
            if isinstance(ev, M.EvScriptSetCookie)
            else (
                ev.ev_rp_response.rp_headers.rp_hd_set_cookie
                if isinstance(ev, M.EvResponse)
                else None
            )
        )
        if sc is not None and all(c is not None for c in st.st_cookiejar):
            if not any(
                c is not None
                and c.cj_name == sc.sc_name
                and c.cj_reg_domain == sc.sc_reg_domain
                for c in st.st_cookiejar
            ):
                return M.PoolExhausted("cookiejar")
    return M.GuardFailed(_EVENT_RULE.get(ctor, ctor))
