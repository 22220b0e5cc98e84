"""Predicate library of the browser semantics.

Functions here are non-recursive and get macro-expanded during
compilation; relations may recurse (DOM tree descent, scans over
fixed-size arrays, list membership) and are unrolled to a finite depth by
the pipeline.  Array scans share two polymorphic higher-order relations,
``find_first`` and ``store_first``, that the specialization pass clones
per call site; both fail when the array is exhausted, which is what makes
pool capacities observable (a full jar or history rejects the step).
"""

from __future__ import annotations

from ..ir.ast import (
    App,
    ArraySort,
    BOOL,
    Clause,
    FunDef,
    INT,
    Lambda,
    Lit,
    RelDef,
    Sort,
    SortVar,
    Term,
    Var,
    app,
    conj,
    disj,
    eq,
    intlit,
    ite,
    lst,
    neg,
    option,
    select,
    store,
)
from . import datatypes as D
from .datatypes import C

# -- tiny authoring helpers ----------------------------------------------------


def V(name: str, sort: Sort) -> Var:
    return Var(name, sort)


def some(t: Term) -> Term:
    return App("some", (t,))


NONE = App("none", ())
NIL = App("nil", ())


def cons(h: Term, t: Term) -> Term:
    return App("cons", (h, t))


def is_some(t: Term) -> Term:
    return app("is$some", t)


def is_none(t: Term) -> Term:
    return eq(t, NONE)


def fn(name: str, *args: Term) -> Term:
    return App(name, tuple(args))


def clause(name: str, head: tuple[Var, ...], *body: Term) -> Clause:
    vs: dict[str, Var] = {v.name: v for v in head}
    for b in body:
        from ..ir.ast import free_vars

        for n, v in free_vars(b).items():
            vs.setdefault(n, v)
    return Clause(name, tuple(vs.values()), tuple(body), tuple(head))


# -- URL / origin functions ------------------------------------------------------

gb = V("gb", D.GLOBAL)
u = V("u", D.URL)
w = V("w", D.WINDOW)
d1 = V("d1", D.DOMAIN)
d2 = V("d2", D.DOMAIN)

url_origin = FunDef(
    "url_origin",
    (("u", D.URL),),
    option(D.ORIGIN),
    ite(
        conj(
            disj(eq(u.url_protocol, C.HTTP()), eq(u.url_protocol, C.HTTPS())),
            is_some(u.url_host),
        ),
        some(C.TupleOrigin(u.url_protocol, app("some_val", u.url_host))),
        NONE,
    ),
)

url_is_local = FunDef(
    "url_is_local",
    (("u", D.URL),),
    BOOL,
    disj(
        eq(u.url_protocol, C.DATA()),
        eq(u.url_protocol, C.BLOB()),
        eq(u.url_protocol, C.ABOUT()),
    ),
)

# document.domain value if relaxed, URL host otherwise
window_effective_domain = FunDef(
    "window_effective_domain",
    (("w", D.WINDOW),),
    option(D.DOMAIN),
    ite(
        is_some(w.wd_document.dc_domain),
        w.wd_document.dc_domain,
        w.wd_location.url_host,
    ),
)

w2 = V("w2", D.WINDOW)

# DOM access control: equal protocols and equal, present effective domains.
same_effective_origin = FunDef(
    "same_effective_origin",
    (("w", D.WINDOW), ("w2", D.WINDOW)),
    BOOL,
    conj(
        eq(w.wd_location.url_protocol, w2.wd_location.url_protocol),
        eq(fn("window_effective_domain", w), fn("window_effective_domain", w2)),
        is_some(fn("window_effective_domain", w)),
    ),
)

# ``d1`` is ``d2`` itself or its registrable suffix.
is_ancestor_or_self = FunDef(
    "is_ancestor_or_self",
    (("d1", D.DOMAIN), ("d2", D.DOMAIN)),
    BOOL,
    disj(
        eq(d1, d2),
        conj(eq(d2.dm_parent, some(d1.dm_name)), is_none(d1.dm_parent)),
    ),
)

cfg = V("cfg", D.CONFIG)
se = V("se", D.SOURCE_EXPR)
org = V("org", D.ORIGIN)

# 'none' allows nothing, '*' everything, 'self' the page's own origin.
csp_src_match = FunDef(
    "csp_src_match",
    (("se", D.SOURCE_EXPR), ("org", D.ORIGIN), ("u", D.URL)),
    BOOL,
    ite(
        app("is$SrcNone", se),
        Lit(False),
        ite(
            app("is$SrcAny", se),
            Lit(True),
            ite(
                app("is$SrcSelf", se),
                eq(fn("url_origin", u), some(org)),
                eq(fn("url_origin", u), some(se.src_origin)),
            ),
        ),
    ),
)

rq = V("rq", D.REQUEST)

# Simple requests use GET or POST and carry no custom headers (the model
# has none to add).
is_cors_simple_request = FunDef(
    "is_cors_simple_request",
    (("rq", D.REQUEST),),
    BOOL,
    disj(eq(rq.rq_method, C.GET()), eq(rq.rq_method, C.POST())),
)

st = V("st", D.STATE)

# Cross-origin is judged against the top-level window.
is_cross_origin_request = FunDef(
    "is_cross_origin_request",
    (("st", D.STATE), ("rq", D.REQUEST)),
    BOOL,
    neg(
        conj(
            is_some(fn("url_origin", rq.rq_url)),
            eq(
                fn("url_origin", app("some_val", select(st.st_windows, intlit(0))).wd_location),
                fn("url_origin", rq.rq_url),
            ),
        )
    ),
)

e = V("e", D.COOKIE_ENTRY)

# Is a stored cookie in scope for this URL?  Path matching is identity
# against the distinguished root path.
cookie_applicable = FunDef(
    "cookie_applicable",
    (("e", D.COOKIE_ENTRY), ("u", D.URL)),
    BOOL,
    conj(
        is_some(u.url_host),
        ite(
            is_some(e.cj_domain),
            fn("is_ancestor_or_self", app("some_val", e.cj_domain), app("some_val", u.url_host)),
            eq(some(e.cj_reg_domain), u.url_host),
        ),
        eq(e.cj_secure, Lit(True)) >> eq(u.url_protocol, C.HTTPS()),
        disj(eq(e.cj_path, intlit(0)), eq(e.cj_path, u.url_path)),
    ),
)

ev = V("ev", D.EVENT)

aeh = V("aeh", option(D.HTML_ELEMENT))

# Static elements render with the document; subresources need a fetch.
render_static_slot = FunDef(
    "render_static_slot",
    (("aeh", option(D.HTML_ELEMENT)),),
    option(D.DOM_ELEMENT),
    ite(
        conj(is_some(aeh), app("is$HTMLForm", app("some_val", aeh))),
        some(C.DOMForm()),
        NONE,
    ),
)


# -- recursive relations --------------------------------------------------------

_WINS = ArraySort(option(D.WINDOW))

wins = V("wins", _WINS)
lvls = V("lvls", lst(INT))
rest = V("rest", lst(INT))
cur = V("cur", INT)
out = V("out", INT)
l = V("l", INT)
s = V("s", INT)

# Walk rendered frame elements; fails on any missing frame or window.
resolve_slot = RelDef(
    "resolve_slot",
    (("wins", _WINS), ("lvls", lst(INT)), ("cur", INT), ("out", INT)),
    (
        clause(
            "resolve_nil",
            (wins, lvls, cur, out),
            eq(lvls, NIL),
            is_some(select(wins, cur)),
            eq(out, cur),
        ),
        clause(
            "resolve_step",
            (wins, lvls, cur, out),
            eq(lvls, cons(l, rest)),
            eq(
                select(app("some_val", select(wins, cur)).wd_document.dc_dom, l),
                some(C.DOMFrame(s)),
            ),
            app("resolve_slot", wins, rest, s, out),
        ),
    ),
)

pt = V("pt", D.DOM_PATH)
sid = V("sid", INT)
src = V("src", D.URL)
ctx = V("ctx", INT)
i = V("i", INT)
fslot = V("fslot", INT)

# A script element at a DOM path: yields its id, source URL and the slot
# of the window it runs in.
is_script_in_dom_path = RelDef(
    "is_script_in_dom_path",
    (("wins", _WINS), ("pt", D.DOM_PATH), ("sid", INT), ("src", D.URL), ("ctx", INT)),
    (
        clause(
            "script_at_path",
            (wins, pt, sid, src, ctx),
            eq(pt, C.MkDOMPath(lvls, C.DOMIndex(i))),
            app("resolve_slot", wins, lvls, intlit(0), ctx),
            eq(
                select(app("some_val", select(wins, ctx)).wd_document.dc_dom, i),
                some(C.DOMScript(sid, src)),
            ),
        ),
    ),
)

is_frame_in_dom_path = RelDef(
    "is_frame_in_dom_path",
    (("wins", _WINS), ("pt", D.DOM_PATH), ("fslot", INT), ("ctx", INT)),
    (
        clause(
            "frame_at_path",
            (wins, pt, fslot, ctx),
            eq(pt, C.MkDOMPath(lvls, C.DOMIndex(i))),
            app("resolve_slot", wins, lvls, intlit(0), ctx),
            eq(
                select(app("some_val", select(wins, ctx)).wd_document.dc_dom, i),
                some(C.DOMFrame(fslot)),
            ),
        ),
    ),
)

slot = V("slot", INT)
p_ = V("p_", INT)

# A context is secure when it is HTTPS and all its ancestors are.
is_secure_context = RelDef(
    "is_secure_context",
    (("wins", _WINS), ("slot", INT)),
    (
        clause(
            "secure_top",
            (wins, slot),
            eq(app("some_val", select(wins, slot)).wd_location.url_protocol, C.HTTPS()),
            eq(app("some_val", select(wins, slot)).wd_parent, NONE),
        ),
        clause(
            "secure_nested",
            (wins, slot),
            eq(app("some_val", select(wins, slot)).wd_location.url_protocol, C.HTTPS()),
            eq(app("some_val", select(wins, slot)).wd_parent, some(p_)),
            app("is_secure_context", wins, p_),
        ),
    ),
)

# -- generic array scans (polymorphic, higher-order) ----------------------------

_A = SortVar("a")
_ARR = ArraySort(_A)

pr = Var("pr", SortVar("p"))
av = Var("av", _A)
ar = Var("ar", _ARR)
ar2 = Var("ar2", _ARR)
ix = Var("ix", INT)
ox = Var("ox", INT)

# First index whose element satisfies the predicate; scans ascending and
# fails past the end of the array.
find_first = RelDef(
    "find_first",
    (("pr", SortVar("p")), ("ar", _ARR), ("ix", INT), ("ox", INT)),
    (
        clause(
            "find_here",
            (pr, ar, ix, ox),
            eq(app("call", pr, select(ar, ix)), Lit(True)),
            eq(ox, ix),
        ),
        clause(
            "find_later",
            (pr, ar, ix, ox),
            eq(app("call", pr, select(ar, ix)), Lit(False)),
            app("find_first", pr, ar, App("+", (ix, Lit(1))), ox),
        ),
    ),
)

# Store into the first slot accepted by the predicate (free slot or a
# matching entry to overwrite); fails when the array is full.
store_first = RelDef(
    "store_first",
    (
        ("pr", SortVar("p")),
        ("ar", _ARR),
        ("av", _A),
        ("ix", INT),
        ("ar2", _ARR),
        ("ox", INT),
    ),
    (
        clause(
            "store_here",
            (pr, ar, av, ix, ar2, ox),
            eq(app("call", pr, select(ar, ix)), Lit(True)),
            eq(ar2, store(ar, ix, av)),
            eq(ox, ix),
        ),
        clause(
            "store_later",
            (pr, ar, av, ix, ar2, ox),
            eq(app("call", pr, select(ar, ix)), Lit(False)),
            app("store_first", pr, ar, av, App("+", (ix, Lit(1))), ar2, ox),
        ),
    ),
)

# -- list membership -------------------------------------------------------------

_LA = SortVar("a")
le = Var("le", _LA)
lt = Var("lt", lst(_LA))
lxs = Var("lxs", lst(_LA))
lp = Var("lp", SortVar("p"))

exists_in_list = RelDef(
    "exists_in_list",
    (("lp", SortVar("p")), ("lxs", lst(_LA))),
    (
        clause(
            "exists_head",
            (lp, lxs),
            eq(lxs, cons(le, lt)),
            eq(app("call", lp, le), Lit(True)),
        ),
        clause(
            "exists_tail",
            (lp, lxs),
            eq(lxs, cons(le, lt)),
            app("exists_in_list", lp, lt),
        ),
    ),
)

# Positive complement of membership: every element satisfies ``lp``.
all_in_list = RelDef(
    "all_in_list",
    (("lp", SortVar("p")), ("lxs", lst(_LA))),
    (
        clause("all_nil", (lp, lxs), eq(lxs, NIL)),
        clause(
            "all_cons",
            (lp, lxs),
            eq(lxs, cons(le, lt)),
            eq(app("call", lp, le), Lit(True)),
            app("all_in_list", lp, lt),
        ),
    ),
)

# -- fetch history ----------------------------------------------------------------

fe = V("fe", D.FETCH_ENGINE)
corr = V("corr", D.CORR)
em = V("em", D.EMITTER)
rqi = V("rqi", INT)
rpi = V("rpi", INT)
hi = V("hi", INT)

in_history = RelDef(
    "in_history",
    (("fe", D.FETCH_ENGINE), ("corr", D.CORR), ("em", D.EMITTER), ("rqi", INT), ("rpi", INT)),
    (
        clause(
            "history_entry",
            (fe, corr, em, rqi, rpi),
            eq(select(fe.ft_history, hi), some(C.MkHistEntry(corr, em, rqi, rpi))),
        ),
    ),
)

# Origin that generated the pending request; follows redirects by taking
# the redirector's origin, which the engine records when re-emitting.
is_request_source = RelDef(
    "is_request_source",
    (("st", D.STATE), ("rq", D.REQUEST), ("org", D.ORIGIN)),
    (
        clause(
            "source_of_pending",
            (st, rq, org),
            eq(st.st_fetch_engine.ft_request, some(rq)),
            eq(st.st_fetch_engine.ft_source, some(org)),
        ),
    ),
)

emi = V("emi", INT)
rp = V("rp", D.RESPONSE)
rpc = V("rpc", D.CORR)

# The response that authorized a cross-origin non-simple request: a
# history entry of the request's preflight emitter carrying an
# Access-Control-Allow-Origin for the requesting origin.
is_cors_authorization_response = RelDef(
    "is_cors_authorization_response",
    (
        ("gb", D.GLOBAL),
        ("st", D.STATE),
        ("emi", INT),
        ("org", D.ORIGIN),
        ("rp", D.RESPONSE),
        ("rpc", D.CORR),
    ),
    (
        clause(
            "preflight_grant",
            (gb, st, emi, org, rp, rpc),
            app(
                "in_history",
                st.st_fetch_engine,
                rpc,
                C.EmitterCORSPreflight(emi),
                rqi,
                rpi,
            ),
            eq(rp, select(gb.responses, rpi)),
            eq(rp.rp_headers.rp_hd_acao, some(org)),
        ),
    ),
)

ki = V("ki", D.KNOWLEDGE_ITEM)
kn = V("kn", INT)

# The paper's Scriptstate relation: what a script has learned.
script_state = RelDef(
    "script_state",
    (("st", D.STATE), ("sid", INT), ("ki", D.KNOWLEDGE_ITEM)),
    (
        clause(
            "knowledge_entry",
            (st, sid, ki),
            eq(select(st.st_script_knowledge, kn), some(C.MkKnowledgeEntry(sid, ki))),
        ),
    ),
)

# Same-origin CSP uniformity, demanded when origin_wide_csp is on: every
# live window with the installing document's origin carries the same CSP.
oc = V("oc", option(D.CSP))
csp_uniform_from = RelDef(
    "csp_uniform_from",
    (("cfg", D.CONFIG), ("wins", _WINS), ("org", D.ORIGIN), ("oc", option(D.CSP)), ("ix", INT)),
    (
        clause(
            "uniform_off",
            (cfg, wins, org, oc, ix),
            eq(cfg.origin_wide_csp, Lit(False)),
        ),
        clause(
            "uniform_done",
            (cfg, wins, org, oc, ix),
            eq(cfg.origin_wide_csp, Lit(True)),
            App(">=", (ix, app("alen", wins))),
        ),
        clause(
            "uniform_skip",
            (cfg, wins, org, oc, ix),
            eq(cfg.origin_wide_csp, Lit(True)),
            App("<", (ix, app("alen", wins))),
            disj(
                eq(select(wins, ix), NONE),
                neg(
                    eq(
                        fn("url_origin", app("some_val", select(wins, ix)).wd_location),
                        some(org),
                    )
                ),
            ),
            app("csp_uniform_from", cfg, wins, org, oc, App("+", (ix, Lit(1)))),
        ),
        clause(
            "uniform_check",
            (cfg, wins, org, oc, ix),
            eq(cfg.origin_wide_csp, Lit(True)),
            App("<", (ix, app("alen", wins))),
            is_some(select(wins, ix)),
            eq(fn("url_origin", app("some_val", select(wins, ix)).wd_location), some(org)),
            eq(app("some_val", select(wins, ix)).wd_document.dc_headers.rp_hd_csp, oc),
            app("csp_uniform_from", cfg, wins, org, oc, App("+", (ix, Lit(1)))),
        ),
    ),
)

# -- global pool well-formedness ---------------------------------------------------

# Domains are canonical: names below 4 are registrable roots; 4..7 are
# subdomains, two per root (4,5 under 0 and 6,7 under 1).  Fixing the
# parent structurally keeps host equality a plain structural equality.
dm = V("dm", D.DOMAIN)
domain_canonical = FunDef(
    "domain_canonical",
    (("dm", D.DOMAIN),),
    BOOL,
    conj(
        App(">=", (dm.dm_name, Lit(0))),
        App("<", (dm.dm_name, Lit(8))),
        ite(
            App("<", (dm.dm_name, Lit(4))),
            eq(dm.dm_parent, NONE),
            eq(
                dm.dm_parent,
                some(App("div", (App("-", (dm.dm_name, Lit(4))), Lit(2)))),
            ),
        ),
    ),
)

url_canonical = FunDef(
    "url_canonical",
    (("u", D.URL),),
    BOOL,
    conj(
        ite(is_some(u.url_host), fn("domain_canonical", app("some_val", u.url_host)), Lit(True)),
        ite(
            fn("url_is_local", u),
            eq(u.url_host, NONE),
            is_some(u.url_host),
        ),
        App(">=", (u.url_path, Lit(0))),
        App("<", (u.url_path, Lit(8))),
    ),
)

# Row consistency of the parallel pools: the server oracle answers
# ``urls[j]`` with ``responses[j]`` and serves the ``windows[j]`` template.
pool_rows_ok = RelDef(
    "pool_rows_ok",
    (("gb", D.GLOBAL), ("ix", INT)),
    (
        clause(
            "rows_done",
            (gb, ix),
            App(">=", (ix, app("alen", gb.urls))),
        ),
        clause(
            "rows_step",
            (gb, ix),
            App("<", (ix, app("alen", gb.urls))),
            fn("url_canonical", select(gb.urls, ix)),
            eq(select(gb.responses, ix).rp_url, select(gb.urls, ix)),
            eq(select(gb.windows, ix).wd_location, select(gb.urls, ix)),
            fn("url_is_local", select(gb.urls, ix))
            >> conj(
                eq(select(gb.responses, ix).rp_code, Lit(200)),
                eq(select(gb.responses, ix).rp_headers.rp_hd_set_cookie, NONE),
                eq(select(gb.responses, ix).rp_headers.rp_hd_location, NONE),
            ),
            app("pool_rows_ok", gb, App("+", (ix, Lit(1)))),
        ),
    ),
)

wf_global = RelDef(
    "wf_global",
    (("gb", D.GLOBAL),),
    (
        clause(
            "global_ok",
            (gb,),
            App(">=", (gb.origin_count, Lit(1))),
            App("<=", (gb.origin_count, Lit(3))),
            app("pool_rows_ok", gb, intlit(0)),
        ),
    ),
)

# -- query support -----------------------------------------------------------

rqv = V("rqv", D.REQUEST)
ev_ = V("ev_", D.EVENT)

is_preflight_for = FunDef(
    "is_preflight_for",
    (("rqv", D.REQUEST), ("ev_", D.EVENT)),
    BOOL,
    conj(
        app("is$EvRequest", ev_),
        app("is$EmitterCORSPreflight", ev_.ev_rq_emitter),
        eq(ev_.ev_rq_request.rq_url, rqv.rq_url),
    ),
)

is_not_preflight_for = FunDef(
    "is_not_preflight_for",
    (("rqv", D.REQUEST), ("ev_", D.EVENT)),
    BOOL,
    neg(App("is_preflight_for", (rqv, ev_))),
)

evs_ = V("evs_", lst(D.EVENT))
tctx_ = V("tctx_", D.WINDOW)
e0 = V("e0", D.EVENT)
t0 = V("t0", lst(D.EVENT))
p0 = V("p0", D.DOM_PATH)
p1 = V("p1", D.DOM_PATH)
pl0 = V("pl0", D.PAYLOAD)

# Membership instance for the Trusted Types query: some DOM sink write in
# the trace targeted this window (matched by the event's snapshot field).
update_html_targeting = RelDef(
    "update_html_targeting",
    (("evs_", lst(D.EVENT)), ("tctx_", D.WINDOW)),
    (
        clause(
            "targeting_head",
            (evs_, tctx_),
            eq(evs_, cons(C.EvScriptUpdateHTML(p0, p1, tctx_, pl0), t0)),
        ),
        clause(
            "targeting_tail",
            (evs_, tctx_),
            eq(evs_, cons(e0, t0)),
            app("update_html_targeting", t0, tctx_),
        ),
    ),
)


FUN_DEFS = (
    url_origin,
    url_is_local,
    window_effective_domain,
    same_effective_origin,
    is_ancestor_or_self,
    csp_src_match,
    is_cors_simple_request,
    is_cross_origin_request,
    cookie_applicable,
    render_static_slot,
    domain_canonical,
    url_canonical,
    is_preflight_for,
    is_not_preflight_for,
)

REL_DEFS = (
    resolve_slot,
    is_script_in_dom_path,
    is_frame_in_dom_path,
    is_secure_context,
    find_first,
    store_first,
    exists_in_list,
    all_in_list,
    in_history,
    is_request_source,
    is_cors_authorization_response,
    script_state,
    csp_uniform_from,
    pool_rows_ok,
    wf_global,
    update_html_targeting,
)
