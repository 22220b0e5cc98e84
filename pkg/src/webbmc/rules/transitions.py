"""Transition rules of the browser model: one rule per event constructor.

Every rule is a set of Horn clauses over ``step(gb, st, ev, st')``.  The
reference interpreter solves these clauses directly and the compiler lowers
the same objects to solver form, so the two semantics cannot drift.

Conventions that keep interpreter and solver aligned:

- pool lookups take the first matching row (``find_first``), never an
  arbitrary one;
- array writes go through ``store_first`` (first free or matching slot),
  so a full jar, history or cache rejects the step;
- option payloads are only accessed under a matching pattern or an
  ``is$some`` guard.

Loading is uniform: every navigation or subresource fetch takes three
events (request, response, DOM update installing the result).  Documents
install with static elements (forms) already rendered; frames, scripts and
images each need their own three-event load.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..ir.ast import (
    App,
    Clause,
    Lambda,
    Lit,
    Program,
    RelDef,
    Sort,
    Term,
    Var,
    app,
    conj,
    disj,
    eq,
    ite,
    lst,
    neg,
    select,
    store,
)
from ..ir.ast import INT, BOOL
from . import datatypes as D
from .datatypes import C, REGISTRY
from .predicates import (
    FUN_DEFS,
    NIL,
    NONE,
    REL_DEFS,
    V,
    clause,
    cons,
    fn,
    is_none,
    is_some,
    some,
)

# ---------------------------------------------------------------------------
# authoring helpers
# ---------------------------------------------------------------------------


def upd(ctor: str, base: Term, **changes: Term) -> Term:
    """Record update: rebuild ``ctor`` copying unchanged fields of ``base``."""
    names = REGISTRY.ctor_fields[ctor]
    unknown = set(changes) - set(names)
    if unknown:
        raise KeyError(f"{ctor} has no fields {unknown}")
    return App(ctor, tuple(changes.get(f2, App(f2, (base,))) for f2 in names))


_lam_count = 0


def lam(*sorts: Sort):
    """Decorator-style lambda builder: ``lam(S)(lambda x: body)``."""

    def build(f) -> Lambda:
        global _lam_count
        _lam_count += 1
        vs = tuple(Var(f"_x{_lam_count}_{i}", s) for i, s in enumerate(sorts))
        return Lambda(tuple((v.name, v.sort) for v in vs), f(*vs))

    return build


def call(f: Term, *args: Term) -> Term:
    return App("call", (f,) + tuple(args))


L = Lit
I0, I1 = Lit(0), Lit(1)


def plus1(t: Term) -> Term:
    return App("+", (t, I1))


def free_slot_pred(elem_sort: Sort) -> Lambda:
    return lam(D.option(elem_sort))(lambda o: is_none(o))


ABOUT_BLANK_T = C.MkURL(C.ABOUT(), NONE, I0, NONE)

EMPTY_HEADERS_T = C.MkResponseHeaders(NONE, NONE, NONE, NONE, NONE, NONE)


def headers_with_csp(ocsp: Term) -> Term:
    return C.MkResponseHeaders(NONE, NONE, NONE, NONE, ocsp, NONE)


BLANK_WINDOW_T = C.MkWindow(
    ABOUT_BLANK_T,
    C.MkDocument(
        app("const_array", NONE), app("const_array", NONE), EMPTY_HEADERS_T, NONE
    ),
    NONE,
    NONE,
)


def initial_state_term() -> Term:
    engine = C.MkFetchEngine(
        NONE, NONE, NONE, NONE, NONE, NONE, NONE, NONE, I0, app("const_array", NONE)
    )
    return C.MkBrowserState(
        store(app("const_array", NONE), I0, some(BLANK_WINDOW_T)),
        engine,
        app("const_array", NONE),
        app("const_array", NONE),
        app("const_array", NONE),
        app("const_array", NONE),
        app("const_array", NONE),
    )


# shared variables
gb = V("gb", D.GLOBAL)
st = V("st", D.STATE)
ev = V("ev", D.EVENT)
st2 = V("st2", D.STATE)

STEP_HEAD = (gb, st, ev, st2)

em_ = V("em_", D.EMITTER)
rq_ = V("rq_", D.REQUEST)
rp_ = V("rp_", D.RESPONSE)
corr_ = V("corr_", D.CORR)
pt_ = V("pt_", D.DOM_PATH)
lvls_ = V("lvls_", lst(INT))
i_ = V("i_", INT)
tw_ = V("tw_", INT)
ui_ = V("ui_", INT)
rqi_ = V("rqi_", INT)
rpi_ = V("rpi_", INT)
sid_ = V("sid_", INT)
ssrc_ = V("ssrc_", D.URL)
ctx_ = V("ctx_", INT)


def fe_of(s: Term) -> Term:
    return s.st_fetch_engine


def wins_of(s: Term) -> Term:
    return s.st_windows


def win_at(s: Term, idx: Term) -> Term:
    return app("some_val", select(wins_of(s), idx))


def doc_of(w: Term) -> Term:
    return w.wd_document


def engine_free() -> tuple[Term, ...]:
    return (
        eq(fe_of(st).ft_request, NONE),
        eq(fe_of(st).ft_redirect, NONE),
    )


def fresh_corr() -> Term:
    return eq(corr_, C.MkCorr(fe_of(st).ft_next_corr, I0))


def url_in_pool(u: Term, out: Var) -> Term:
    """First pool row carrying this URL value (the server-oracle row)."""
    return app(
        "find_first",
        lam(D.URL)(lambda x: eq(x, u)),
        gb.urls,
        I0,
        out,
    )


def is_network_url(u: Term) -> Term:
    return disj(eq(u.url_protocol, C.HTTP()), eq(u.url_protocol, C.HTTPS()))


def pending_engine(
    rq: Term, em: Term, corr: Term, rqi: Term, source: Term, bump: bool = True
) -> Term:
    base = fe_of(st)
    return C.MkFetchEngine(
        some(rq),
        some(em),
        some(corr),
        NONE,
        some(rqi),
        source,
        NONE,
        base.ft_pending_nav,
        plus1(base.ft_next_corr) if bump else base.ft_next_corr,
        base.ft_history,
    )


def request_headers(origin: Term, referer: Term) -> Term:
    # Cookie attachment is not modeled: no checked invariant reads the
    # Cookie request header, so it stays empty.
    return C.MkRequestHeaders(origin, NONE, referer)


def script_at(path: Term) -> Term:
    return app("is_script_in_dom_path", wins_of(st), path, sid_, ssrc_, ctx_)


def knowledge_dedupe_pred(sidt: Term, item: Term) -> Lambda:
    return lam(D.option(D.KNOWLEDGE_ENTRY))(
        lambda o: disj(is_none(o), eq(o, some(C.MkKnowledgeEntry(sidt, item))))
    )


def add_knowledge(sidt: Term, item: Term, out: Var, slot_out: Var) -> Term:
    return app(
        "store_first",
        knowledge_dedupe_pred(sidt, item),
        st.st_script_knowledge,
        some(C.MkKnowledgeEntry(sidt, item)),
        I0,
        out,
        slot_out,
    )


@dataclass(frozen=True)
class TransitionRule:
    """All clauses realizing one event constructor."""

    name: str
    event_ctor: str
    clauses: tuple[Clause, ...]


# ---------------------------------------------------------------------------
# EvRequest
# ---------------------------------------------------------------------------

el_ = V("el_", D.HTML_ELEMENT)
m_ = V("m_", D.METHOD)
act_ = V("act_", INT)
emi_ = V("emi_", INT)
rd_ = V("rd_", D.REDIRECT_INFO)
ini_ = V("ini_", INT)
bslot_ = V("bslot_", INT)
pfc_ = V("pfc_", D.CORR)
pfrqi_ = V("pfrqi_", INT)
pfrpi_ = V("pfrpi_", INT)


def blob_available(u: Term) -> Term:
    """blob: URLs resolve only after a script created an entry for them."""
    return disj(
        neg(eq(u.url_protocol, C.BLOB())),
        conj(
            eq(u.url_protocol, C.BLOB()),
            app(
                "find_first",
                lam(D.option(D.BLOB_ENTRY))(
                    lambda o: conj(
                        is_some(o),
                        eq(select(gb.urls, app("some_val", o).bl_url_idx), u),
                    )
                ),
                st.st_blob_store,
                I0,
                bslot_,
            ),
        ),
    )


def csp_allows_script(w: Term, u: Term) -> Term:
    """script-src gate of the including document; absent policy allows."""
    hdrs = doc_of(w).dc_headers
    page_origin = fn("url_origin", w.wd_location)
    return ite(
        conj(is_some(hdrs.rp_hd_csp), is_some(app("some_val", hdrs.rp_hd_csp).csp_script_src)),
        ite(
            is_some(page_origin),
            fn(
                "csp_src_match",
                app("some_val", app("some_val", hdrs.rp_hd_csp).csp_script_src),
                app("some_val", page_origin),
                u,
            ),
            Lit(False),
        ),
        Lit(True),
    )


REQUEST_RULE = TransitionRule(
    "request",
    "EvRequest",
    (
        clause(
            "request_top_level",
            STEP_HEAD,
            eq(ev, C.EvRequest(em_, rq_, corr_)),
            eq(em_, C.EmitterTopLevel()),
            *engine_free(),
            fresh_corr(),
            # one top-level navigation per run: the root is still blank
            eq(win_at(st, I0).wd_location, ABOUT_BLANK_T),
            eq(rq_.rq_method, C.GET()),
            eq(rq_.rq_body, I0),
            is_network_url(rq_.rq_url),
            url_in_pool(rq_.rq_url, rqi_),
            eq(rq_.rq_headers, request_headers(NONE, NONE)),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_fetch_engine=pending_engine(rq_, em_, corr_, rqi_, NONE),
                ),
            ),
        ),
        clause(
            "request_subresource",
            STEP_HEAD,
            eq(ev, C.EvRequest(em_, rq_, corr_)),
            eq(em_, C.EmitterSubresource(pt_)),
            *engine_free(),
            fresh_corr(),
            eq(pt_, C.MkDOMPath(lvls_, C.DOMIndex(i_))),
            app("resolve_slot", wins_of(st), lvls_, I0, tw_),
            eq(select(doc_of(win_at(st, tw_)).dc_html, i_), some(el_)),
            eq(select(doc_of(win_at(st, tw_)).dc_dom, i_), NONE),
            disj(
                eq(el_, C.HTMLFrame(ui_)),
                eq(el_, C.HTMLScript(ui_)),
                eq(el_, C.HTMLImage(ui_)),
            ),
            eq(rq_.rq_url, select(gb.urls, ui_)),
            eq(rq_.rq_method, C.GET()),
            eq(rq_.rq_body, I0),
            url_in_pool(rq_.rq_url, rqi_),
            blob_available(rq_.rq_url),
            disj(
                neg(app("is$HTMLScript", el_)),
                conj(
                    app("is$HTMLScript", el_),
                    eq(csp_allows_script(win_at(st, tw_), rq_.rq_url), Lit(True)),
                ),
            ),
            eq(
                rq_.rq_headers,
                request_headers(NONE, some(win_at(st, tw_).wd_location)),
            ),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_fetch_engine=pending_engine(
                        rq_, em_, corr_, rqi_, fn("url_origin", win_at(st, tw_).wd_location)
                    ),
                ),
            ),
        ),
        clause(
            "request_frame_navigation",
            STEP_HEAD,
            eq(ev, C.EvRequest(em_, rq_, corr_)),
            eq(em_, C.EmitterSubresource(pt_)),
            *engine_free(),
            fresh_corr(),
            eq(
                fe_of(st).ft_pending_nav,
                some(C.MkPendingNav(pt_, rq_.rq_url, ini_)),
            ),
            eq(pt_, C.MkDOMPath(lvls_, C.DOMIndex(i_))),
            app("resolve_slot", wins_of(st), lvls_, I0, tw_),
            app("is$DOMFrame", app("some_val", select(doc_of(win_at(st, tw_)).dc_dom, i_))),
            eq(rq_.rq_method, C.GET()),
            eq(rq_.rq_body, I0),
            url_in_pool(rq_.rq_url, rqi_),
            blob_available(rq_.rq_url),
            eq(
                rq_.rq_headers,
                request_headers(NONE, some(win_at(st, ini_).wd_location)),
            ),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_fetch_engine=pending_engine(
                        rq_, em_, corr_, rqi_, fn("url_origin", win_at(st, ini_).wd_location)
                    ),
                ),
            ),
        ),
        clause(
            "request_form_submission",
            STEP_HEAD,
            eq(ev, C.EvRequest(em_, rq_, corr_)),
            eq(em_, C.EmitterForm(pt_)),
            *engine_free(),
            fresh_corr(),
            eq(pt_, C.MkDOMPath(lvls_, C.DOMIndex(i_))),
            app("resolve_slot", wins_of(st), lvls_, I0, tw_),
            eq(select(doc_of(win_at(st, tw_)).dc_dom, i_), some(C.DOMForm())),
            eq(select(doc_of(win_at(st, tw_)).dc_html, i_), some(C.HTMLForm(m_, act_))),
            eq(rq_.rq_method, m_),
            # early HTML5 drafts allowed PUT/DELETE form methods
            disj(
                eq(m_, C.GET()),
                eq(m_, C.POST()),
                conj(
                    eq(gb.config.earlyhtml5_form_methods, Lit(True)),
                    disj(eq(m_, C.PUT()), eq(m_, C.DELETE())),
                ),
            ),
            eq(rq_.rq_url, select(gb.urls, act_)),
            is_network_url(rq_.rq_url),
            url_in_pool(rq_.rq_url, rqi_),
            eq(
                rq_.rq_body,
                ite(disj(eq(m_, C.POST()), eq(m_, C.PUT())), I1, I0),
            ),
            eq(
                rq_.rq_headers,
                request_headers(
                    ite(
                        eq(m_, C.GET()),
                        NONE,
                        fn("url_origin", win_at(st, tw_).wd_location),
                    ),
                    some(win_at(st, tw_).wd_location),
                ),
            ),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_fetch_engine=pending_engine(
                        rq_, em_, corr_, rqi_, fn("url_origin", win_at(st, tw_).wd_location)
                    ),
                ),
            ),
        ),
        clause(
            "request_script_fetch",
            STEP_HEAD,
            eq(ev, C.EvRequest(em_, rq_, corr_)),
            eq(em_, C.EmitterScript(sid_, pt_)),
            *engine_free(),
            fresh_corr(),
            script_at(pt_),
            is_network_url(rq_.rq_url),
            url_in_pool(rq_.rq_url, rqi_),
            neg(eq(rq_.rq_method, C.OPTIONS())),
            eq(
                rq_.rq_body,
                ite(
                    disj(eq(rq_.rq_method, C.POST()), eq(rq_.rq_method, C.PUT())),
                    I1,
                    I0,
                ),
            ),
            # non-simple cross-origin fetches need a prior successful
            # preflight authorization for this emitter
            disj(
                eq(fn("is_cors_simple_request", rq_), Lit(True)),
                conj(
                    eq(fn("is_cors_simple_request", rq_), Lit(False)),
                    eq(
                        fn("url_origin", win_at(st, ctx_).wd_location),
                        fn("url_origin", rq_.rq_url),
                    ),
                    is_some(fn("url_origin", rq_.rq_url)),
                ),
                conj(
                    eq(fn("is_cors_simple_request", rq_), Lit(False)),
                    neg(
                        conj(
                            eq(
                                fn("url_origin", win_at(st, ctx_).wd_location),
                                fn("url_origin", rq_.rq_url),
                            ),
                            is_some(fn("url_origin", rq_.rq_url)),
                        )
                    ),
                    app(
                        "in_history",
                        fe_of(st),
                        pfc_,
                        C.EmitterCORSPreflight(emi_),
                        pfrqi_,
                        pfrpi_,
                    ),
                    eq(select(gb.emitters, emi_), em_),
                    eq(
                        select(gb.responses, pfrpi_).rp_headers.rp_hd_acao,
                        fn("url_origin", win_at(st, ctx_).wd_location),
                    ),
                    is_some(fn("url_origin", win_at(st, ctx_).wd_location)),
                ),
            ),
            eq(
                rq_.rq_headers,
                request_headers(
                    ite(
                        conj(
                            eq(rq_.rq_method, C.GET()),
                            eq(
                                fn("url_origin", win_at(st, ctx_).wd_location),
                                fn("url_origin", rq_.rq_url),
                            ),
                        ),
                        NONE,
                        fn("url_origin", win_at(st, ctx_).wd_location),
                    ),
                    some(win_at(st, ctx_).wd_location),
                ),
            ),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_fetch_engine=pending_engine(
                        rq_, em_, corr_, rqi_, fn("url_origin", win_at(st, ctx_).wd_location)
                    ),
                ),
            ),
        ),
        clause(
            "request_worker_fetch",
            STEP_HEAD,
            eq(ev, C.EvRequest(em_, rq_, corr_)),
            eq(em_, C.EmitterWorker()),
            *engine_free(),
            fresh_corr(),
            is_network_url(rq_.rq_url),
            url_in_pool(rq_.rq_url, rqi_),
            eq(rq_.rq_method, C.GET()),
            eq(rq_.rq_body, I0),
            eq(rq_.rq_headers, request_headers(NONE, NONE)),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_fetch_engine=pending_engine(rq_, em_, corr_, rqi_, NONE),
                ),
            ),
        ),
        clause(
            "request_cors_preflight",
            STEP_HEAD,
            eq(ev, C.EvRequest(em_, rq_, corr_)),
            eq(em_, C.EmitterCORSPreflight(emi_)),
            *engine_free(),
            fresh_corr(),
            eq(select(gb.emitters, emi_), C.EmitterScript(sid_, pt_)),
            script_at(pt_),
            eq(rq_.rq_method, C.OPTIONS()),
            eq(rq_.rq_body, I0),
            is_network_url(rq_.rq_url),
            url_in_pool(rq_.rq_url, rqi_),
            # preflights exist for cross-origin targets only
            is_some(fn("url_origin", win_at(st, ctx_).wd_location)),
            neg(
                eq(
                    fn("url_origin", win_at(st, ctx_).wd_location),
                    fn("url_origin", rq_.rq_url),
                )
            ),
            eq(
                rq_.rq_headers,
                request_headers(
                    fn("url_origin", win_at(st, ctx_).wd_location), NONE
                ),
            ),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_fetch_engine=pending_engine(
                        rq_, em_, corr_, rqi_, fn("url_origin", win_at(st, ctx_).wd_location)
                    ),
                ),
            ),
        ),
        clause(
            "request_redirected",
            STEP_HEAD,
            eq(ev, C.EvRequest(em_, rq_, corr_)),
            eq(fe_of(st).ft_redirect, some(rd_)),
            eq(em_, rd_.rd_emitter),
            eq(corr_, rd_.rd_corr),
            eq(rq_.rq_url, rd_.rd_location),
            eq(rq_.rq_method, rd_.rd_method),
            eq(rq_.rq_body, rd_.rd_body),
            eq(rq_.rq_headers, request_headers(rd_.rd_origin, NONE)),
            url_in_pool(rq_.rq_url, rqi_),
            blob_available(rq_.rq_url),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_fetch_engine=C.MkFetchEngine(
                        some(rq_),
                        some(em_),
                        some(corr_),
                        NONE,
                        some(rqi_),
                        some(rd_.rd_redirector),
                        NONE,
                        fe_of(st).ft_pending_nav,
                        fe_of(st).ft_next_corr,
                        fe_of(st).ft_history,
                    ),
                ),
            ),
        ),
    ),
)

# ---------------------------------------------------------------------------
# EvResponse
# ---------------------------------------------------------------------------

prov_ = V("prov_", D.PROVENANCE)
sc_ = V("sc_", D.SET_COOKIE)
jar2_ = V("jar2_", D.ArraySort(D.option(D.COOKIE_ENTRY)))
hist2_ = V("hist2_", D.ArraySort(D.option(D.HIST_ENTRY)))
fe2_ = V("fe2_", D.FETCH_ENGINE)
loc_ = V("loc_", D.URL)
cslot_ = V("cslot_", INT)
hslot_ = V("hslot_", INT)
jslot_ = V("jslot_", INT)


def _is_redirect_code(t: Term) -> Term:
    return disj(eq(t, L(302)), eq(t, L(307)))


def _renderable(em: Term) -> Term:
    return disj(app("is$EmitterTopLevel", em), app("is$EmitterSubresource", em))


_cookie_entry_of = C.MkCookieEntry(
    sc_.sc_reg_domain,
    sc_.sc_name,
    sc_.sc_value,
    sc_.sc_domain,
    sc_.sc_path,
    sc_.sc_secure,
    sc_.sc_http_only,
    sc_.sc_same_site,
)

# Same name registered by the same host overwrites; otherwise first free.
_jar_slot_pred = lam(D.option(D.COOKIE_ENTRY))(
    lambda o: disj(
        is_none(o),
        conj(
            is_some(o),
            eq(app("some_val", o).cj_name, sc_.sc_name),
            eq(app("some_val", o).cj_reg_domain, sc_.sc_reg_domain),
        ),
    )
)


def _set_cookie_guards(url: Term) -> tuple[Term, ...]:
    """Storage-time checks shared by header and script cookie writes.

    Secure cookies demand HTTPS; prefixed names add Secure/HTTPS and, for
    __Host-, host-only registration with the root path.  The registrar is
    stamped from the setting context's URL, so prefix checks always run
    against the original domain, never the relaxed one.
    """
    return (
        eq(sc_.sc_secure, Lit(True)) >> eq(url.url_protocol, C.HTTPS()),
        app("is$SecurePrefix", sc_.sc_name)
        >> conj(eq(sc_.sc_secure, Lit(True)), eq(url.url_protocol, C.HTTPS())),
        app("is$Host", sc_.sc_name)
        >> conj(
            eq(sc_.sc_secure, Lit(True)),
            eq(url.url_protocol, C.HTTPS()),
            eq(sc_.sc_domain, NONE),
            eq(sc_.sc_path, I0),
        ),
        eq(some(sc_.sc_reg_domain), url.url_host),
        is_some(sc_.sc_domain)
        >> fn(
            "is_ancestor_or_self",
            app("some_val", sc_.sc_domain),
            sc_.sc_reg_domain,
        ),
    )


RESPONSE_RULE = TransitionRule(
    "response",
    "EvResponse",
    (
        clause(
            "response_accepted",
            STEP_HEAD,
            eq(ev, C.EvResponse(rp_, corr_, prov_)),
            eq(fe_of(st).ft_request, some(rq_)),
            eq(fe_of(st).ft_corr, some(corr_)),
            eq(fe_of(st).ft_response, NONE),
            eq(fe_of(st).ft_emitter, some(em_)),
            eq(fe_of(st).ft_rq_idx, some(rqi_)),
            eq(rp_.rp_url, rq_.rq_url),
            # provenance: the network answers with the oracle row; workers
            # may substitute any pool response or replay a cached pair
            disj(
                conj(
                    eq(prov_, C.NETWORK()),
                    eq(rpi_, rqi_),
                    eq(rp_, select(gb.responses, rqi_)),
                ),
                conj(
                    eq(prov_, C.WORKER_SYNTHETIC()),
                    eq(gb.config.worker_allow_synthetic_responses, Lit(True)),
                    is_network_url(rq_.rq_url),
                    app(
                        "find_first",
                        lam(D.RESPONSE)(lambda r: eq(r, rp_)),
                        gb.responses,
                        I0,
                        rpi_,
                    ),
                ),
                conj(
                    eq(prov_, C.WORKER_CACHE()),
                    app(
                        "find_first",
                        lam(D.option(D.CACHE_ENTRY))(
                            lambda o: conj(
                                is_some(o), eq(app("some_val", o).ca_rq_idx, rqi_)
                            )
                        ),
                        st.st_cache,
                        I0,
                        cslot_,
                    ),
                    eq(rpi_, app("some_val", select(st.st_cache, cslot_)).ca_rp_idx),
                    eq(rp_, select(gb.responses, rpi_)),
                ),
            ),
            # record the exchange
            app(
                "store_first",
                free_slot_pred(D.HIST_ENTRY),
                fe_of(st).ft_history,
                some(C.MkHistEntry(corr_, em_, rqi_, rpi_)),
                I0,
                hist2_,
                hslot_,
            ),
            # Set-Cookie processing; a violating cookie rejects the response
            disj(
                conj(
                    eq(rp_.rp_headers.rp_hd_set_cookie, NONE),
                    eq(jar2_, st.st_cookiejar),
                ),
                conj(
                    eq(rp_.rp_headers.rp_hd_set_cookie, some(sc_)),
                    *_set_cookie_guards(rp_.rp_url),
                    app(
                        "store_first",
                        _jar_slot_pred,
                        st.st_cookiejar,
                        some(_cookie_entry_of),
                        I0,
                        jar2_,
                        jslot_,
                    ),
                ),
            ),
            # engine continuation: follow a redirect, keep a renderable
            # response pending, or finish the exchange
            disj(
                conj(
                    _is_redirect_code(rp_.rp_code),
                    disj(
                        neg(app("is$EmitterCORSPreflight", em_)),
                        eq(gb.config.redirect_preflight_requests, Lit(True)),
                    ),
                    eq(rp_.rp_headers.rp_hd_location, some(loc_)),
                    is_some(fn("url_origin", rp_.rp_url)),
                    eq(
                        fe2_,
                        upd(
                            "MkFetchEngine",
                            fe_of(st),
                            ft_response=some(rp_),
                            ft_redirect=some(
                                C.MkRedirectInfo(
                                    loc_,
                                    ite(eq(rp_.rp_code, L(307)), rq_.rq_method, C.GET()),
                                    ite(eq(rp_.rp_code, L(307)), rq_.rq_body, I0),
                                    ite(
                                        is_none(rq_.rq_headers.rq_hd_origin),
                                        NONE,
                                        ite(
                                            eq(
                                                fn("url_origin", loc_),
                                                fn("url_origin", rq_.rq_url),
                                            ),
                                            rq_.rq_headers.rq_hd_origin,
                                            ite(
                                                eq(
                                                    gb.config.origin_header_on_cross_origin_redirect,
                                                    Lit(True),
                                                ),
                                                rq_.rq_headers.rq_hd_origin,
                                                NONE,
                                            ),
                                        ),
                                    ),
                                    app("some_val", fn("url_origin", rp_.rp_url)),
                                    em_,
                                    C.MkCorr(corr_.corr_base, plus1(corr_.corr_hops)),
                                )
                            ),
                            ft_history=hist2_,
                        ),
                    ),
                ),
                conj(
                    eq(rp_.rp_code, L(200)),
                    _renderable(em_),
                    eq(
                        fe2_,
                        upd(
                            "MkFetchEngine",
                            fe_of(st),
                            ft_response=some(rp_),
                            ft_history=hist2_,
                        ),
                    ),
                ),
                conj(
                    disj(
                        eq(rp_.rp_code, L(204)),
                        conj(eq(rp_.rp_code, L(200)), neg(_renderable(em_))),
                        conj(
                            _is_redirect_code(rp_.rp_code),
                            app("is$EmitterCORSPreflight", em_),
                            eq(gb.config.redirect_preflight_requests, Lit(False)),
                        ),
                    ),
                    eq(
                        fe2_,
                        C.MkFetchEngine(
                            NONE,
                            NONE,
                            NONE,
                            NONE,
                            NONE,
                            NONE,
                            NONE,
                            fe_of(st).ft_pending_nav,
                            fe_of(st).ft_next_corr,
                            hist2_,
                        ),
                    ),
                ),
            ),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_fetch_engine=fe2_,
                    st_cookiejar=jar2_,
                ),
            ),
        ),
    ),
)

# ---------------------------------------------------------------------------
# EvDOMUpdate
# ---------------------------------------------------------------------------

fs_ = V("fs_", INT)
nw_ = V("nw_", INT)
winsA_ = V("winsA_", D.ArraySort(D.option(D.WINDOW)))
u_ = V("u_", D.URL)
sel_ = V("sel_", D.SELECTOR)


def _template_html(rqi: Term) -> Term:
    return select(gb.windows, rqi).wd_document.dc_html


def _render_document(rqi: Term, hdrs: Term) -> Term:
    html = _template_html(rqi)
    return C.MkDocument(
        html, app("amap", app("render_static_slot"), html), hdrs, NONE
    )


def _cleared_engine(clear_nav: bool = False) -> Term:
    return C.MkFetchEngine(
        NONE,
        NONE,
        NONE,
        NONE,
        NONE,
        NONE,
        NONE,
        NONE if clear_nav else fe_of(st).ft_pending_nav,
        fe_of(st).ft_next_corr,
        fe_of(st).ft_history,
    )


def _blob_creator_csp(u: Term) -> Term:
    """CSP of the live window that created this blob URL."""
    entry = app("some_val", select(st.st_blob_store, bslot_))
    creator = app("some_val", select(wins_of(st), entry.bl_creator))
    return doc_of(creator).dc_headers.rp_hd_csp


def _blob_entry_lookup(u: Term) -> Term:
    return app(
        "find_first",
        lam(D.option(D.BLOB_ENTRY))(
            lambda o: conj(
                is_some(o), eq(select(gb.urls, app("some_val", o).bl_url_idx), u)
            )
        ),
        st.st_blob_store,
        I0,
        bslot_,
    )


def _inherited_headers(u: Term, initiator_slot: Term, embedder_slot: Term) -> Term:
    """Headers of an installing document: local schemes inherit a policy
    copy instead of carrying their own (empty) network headers."""
    init_csp = doc_of(win_at(st, initiator_slot)).dc_headers.rp_hd_csp
    embed_csp = doc_of(win_at(st, embedder_slot)).dc_headers.rp_hd_csp
    nonblob = ite(
        eq(gb.config.csp_inherit_local_from_initiator, Lit(True)),
        init_csp,
        embed_csp,
    )
    inherited = ite(
        conj(
            eq(u.url_protocol, C.BLOB()),
            eq(gb.config.csp_inherit_blob_from_creator, Lit(True)),
        ),
        _blob_creator_csp(u),
        nonblob,
    )
    return ite(
        fn("url_is_local", u),
        headers_with_csp(inherited),
        rp_.rp_headers,
    )


def _install_prefix() -> tuple[Term, ...]:
    return (
        eq(ev, C.EvDOMUpdate(pt_)),
        eq(fe_of(st).ft_request, some(rq_)),
        eq(fe_of(st).ft_response, some(rp_)),
        eq(rp_.rp_code, L(200)),
        eq(fe_of(st).ft_rq_idx, some(rqi_)),
    )


DOM_UPDATE_RULE = TransitionRule(
    "dom_update",
    "EvDOMUpdate",
    (
        clause(
            "install_top_level",
            STEP_HEAD,
            *_install_prefix(),
            eq(fe_of(st).ft_emitter, some(C.EmitterTopLevel())),
            eq(pt_, C.MkDOMPath(NIL, C.DOMTopLevel())),
            eq(win_at(st, I0).wd_location, ABOUT_BLANK_T),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_windows=store(
                        wins_of(st),
                        I0,
                        some(
                            C.MkWindow(
                                rq_.rq_url,
                                _render_document(rqi_, rp_.rp_headers),
                                NONE,
                                NONE,
                            )
                        ),
                    ),
                    st_fetch_engine=_cleared_engine(),
                ),
            ),
        ),
        clause(
            "install_new_frame",
            STEP_HEAD,
            *_install_prefix(),
            eq(fe_of(st).ft_emitter, some(C.EmitterSubresource(pt_))),
            eq(pt_, C.MkDOMPath(lvls_, C.DOMIndex(i_))),
            app("resolve_slot", wins_of(st), lvls_, I0, tw_),
            app("is$HTMLFrame", app("some_val", select(doc_of(win_at(st, tw_)).dc_html, i_))),
            eq(select(doc_of(win_at(st, tw_)).dc_dom, i_), NONE),
            disj(
                neg(eq(rq_.rq_url.url_protocol, C.BLOB())),
                conj(eq(rq_.rq_url.url_protocol, C.BLOB()), _blob_entry_lookup(rq_.rq_url)),
            ),
            # allocate a window slot for the framed document
            app(
                "store_first",
                free_slot_pred(D.WINDOW),
                wins_of(st),
                some(
                    C.MkWindow(
                        rq_.rq_url,
                        _render_document(rqi_, _inherited_headers(rq_.rq_url, tw_, tw_)),
                        some(tw_),
                        some(tw_),
                    )
                ),
                I0,
                winsA_,
                nw_,
            ),
            app(
                "csp_uniform_ok",
                gb.config,
                winsA_,
                fn("url_origin", rq_.rq_url),
                app("rp_hd_csp", _inherited_headers(rq_.rq_url, tw_, tw_)),
            ),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_windows=store(
                        winsA_,
                        tw_,
                        some(
                            upd(
                                "MkWindow",
                                win_at(st, tw_),
                                wd_document=upd(
                                    "MkDocument",
                                    doc_of(win_at(st, tw_)),
                                    dc_dom=store(
                                        doc_of(win_at(st, tw_)).dc_dom,
                                        i_,
                                        some(C.DOMFrame(nw_)),
                                    ),
                                ),
                            )
                        ),
                    ),
                    st_fetch_engine=_cleared_engine(),
                ),
            ),
        ),
        clause(
            "install_frame_navigation",
            STEP_HEAD,
            *_install_prefix(),
            eq(fe_of(st).ft_emitter, some(C.EmitterSubresource(pt_))),
            eq(fe_of(st).ft_pending_nav, some(C.MkPendingNav(pt_, rq_.rq_url, ini_))),
            eq(pt_, C.MkDOMPath(lvls_, C.DOMIndex(i_))),
            app("resolve_slot", wins_of(st), lvls_, I0, tw_),
            eq(
                select(doc_of(win_at(st, tw_)).dc_dom, i_),
                some(C.DOMFrame(fs_)),
            ),
            disj(
                neg(eq(rq_.rq_url.url_protocol, C.BLOB())),
                conj(eq(rq_.rq_url.url_protocol, C.BLOB()), _blob_entry_lookup(rq_.rq_url)),
            ),
            app(
                "csp_uniform_ok",
                gb.config,
                wins_of(st),
                fn("url_origin", rq_.rq_url),
                app("rp_hd_csp", _inherited_headers(rq_.rq_url, ini_, tw_)),
            ),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_windows=store(
                        wins_of(st),
                        fs_,
                        some(
                            C.MkWindow(
                                rq_.rq_url,
                                _render_document(
                                    rqi_, _inherited_headers(rq_.rq_url, ini_, tw_)
                                ),
                                some(tw_),
                                some(ini_),
                            )
                        ),
                    ),
                    st_fetch_engine=_cleared_engine(clear_nav=True),
                ),
            ),
        ),
        clause(
            "install_script",
            STEP_HEAD,
            *_install_prefix(),
            eq(fe_of(st).ft_emitter, some(C.EmitterSubresource(pt_))),
            eq(pt_, C.MkDOMPath(lvls_, C.DOMIndex(i_))),
            app("resolve_slot", wins_of(st), lvls_, I0, tw_),
            app("is$HTMLScript", app("some_val", select(doc_of(win_at(st, tw_)).dc_html, i_))),
            eq(select(doc_of(win_at(st, tw_)).dc_dom, i_), NONE),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_windows=store(
                        wins_of(st),
                        tw_,
                        some(
                            upd(
                                "MkWindow",
                                win_at(st, tw_),
                                wd_document=upd(
                                    "MkDocument",
                                    doc_of(win_at(st, tw_)),
                                    dc_dom=store(
                                        doc_of(win_at(st, tw_)).dc_dom,
                                        i_,
                                        some(
                                            C.DOMScript(
                                                App(
                                                    "+",
                                                    (
                                                        App(
                                                            "*",
                                                            (
                                                                tw_,
                                                                app(
                                                                    "alen",
                                                                    doc_of(win_at(st, tw_)).dc_dom,
                                                                ),
                                                            ),
                                                        ),
                                                        i_,
                                                    ),
                                                ),
                                                rq_.rq_url,
                                            )
                                        ),
                                    ),
                                ),
                            )
                        ),
                    ),
                    st_fetch_engine=_cleared_engine(),
                ),
            ),
        ),
        clause(
            "install_image",
            STEP_HEAD,
            *_install_prefix(),
            eq(fe_of(st).ft_emitter, some(C.EmitterSubresource(pt_))),
            eq(pt_, C.MkDOMPath(lvls_, C.DOMIndex(i_))),
            app("resolve_slot", wins_of(st), lvls_, I0, tw_),
            app("is$HTMLImage", app("some_val", select(doc_of(win_at(st, tw_)).dc_html, i_))),
            eq(select(doc_of(win_at(st, tw_)).dc_dom, i_), NONE),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_windows=store(
                        wins_of(st),
                        tw_,
                        some(
                            upd(
                                "MkWindow",
                                win_at(st, tw_),
                                wd_document=upd(
                                    "MkDocument",
                                    doc_of(win_at(st, tw_)),
                                    dc_dom=store(
                                        doc_of(win_at(st, tw_)).dc_dom,
                                        i_,
                                        some(C.DOMImage()),
                                    ),
                                ),
                            )
                        ),
                    ),
                    st_fetch_engine=_cleared_engine(),
                ),
            ),
        ),
        # Re-rendering an already-rendered path is an accepted no-op.
        clause(
            "rerender_top",
            STEP_HEAD,
            eq(ev, C.EvDOMUpdate(pt_)),
            eq(fe_of(st).ft_request, NONE),
            eq(pt_, C.MkDOMPath(lvls_, C.DOMTopLevel())),
            app("resolve_slot", wins_of(st), lvls_, I0, tw_),
            neg(eq(win_at(st, tw_).wd_location, ABOUT_BLANK_T)),
            eq(st2, st),
        ),
        clause(
            "rerender_element",
            STEP_HEAD,
            eq(ev, C.EvDOMUpdate(pt_)),
            eq(fe_of(st).ft_request, NONE),
            eq(pt_, C.MkDOMPath(lvls_, C.DOMIndex(i_))),
            app("resolve_slot", wins_of(st), lvls_, I0, tw_),
            is_some(select(doc_of(win_at(st, tw_)).dc_dom, i_)),
            eq(st2, st),
        ),
    ),
)

# ---------------------------------------------------------------------------
# Script API rules
# ---------------------------------------------------------------------------

tgt_ = V("tgt_", D.DOM_PATH)
tlv_ = V("tlv_", lst(INT))
ts_ = V("ts_", INT)
snap_ = V("snap_", D.WINDOW)
pl_ = V("pl_", D.PAYLOAD)
rlm_ = V("rlm_", INT)
ci_ = V("ci_", INT)
e_ = V("e_", D.COOKIE_ENTRY)
kn2_ = V("kn2_", D.ArraySort(D.option(D.KNOWLEDGE_ENTRY)))
kn1_ = V("kn1_", D.ArraySort(D.option(D.KNOWLEDGE_ENTRY)))
kslot_ = V("kslot_", INT)
kslot2_ = V("kslot2_", INT)
hem_ = V("hem_", D.EMITTER)
hrqi_ = V("hrqi_", INT)
hrpi_ = V("hrpi_", INT)
ci2_ = V("ci2_", INT)
d_ = V("d_", D.DOMAIN)
h_ = V("h_", D.DOMAIN)
fpt_ = V("fpt_", D.DOM_PATH)
fctx_ = V("fctx_", INT)
spt_ = V("spt_", D.DOM_PATH)
rpt_ = V("rpt_", D.DOM_PATH)
val_ = V("val_", BOOL)
rsid_ = V("rsid_", INT)
rssrc_ = V("rssrc_", D.URL)
rctx_ = V("rctx_", INT)
so_ = V("so_", D.ORIGIN)
k_ = V("k_", INT)
v_ = V("v_", INT)
ls2_ = V("ls2_", D.ArraySort(D.option(D.STORAGE_ENTRY)))
lslot_ = V("lslot_", INT)
li_ = V("li_", INT)
cri_ = V("cri_", INT)
cpi_ = V("cpi_", INT)
ca2_ = V("ca2_", D.ArraySort(D.option(D.CACHE_ENTRY)))
caslot_ = V("caslot_", INT)
bs2_ = V("bs2_", D.ArraySort(D.option(D.BLOB_ENTRY)))
bslot2_ = V("bslot2_", INT)

_tt_of_target = doc_of(snap_).dc_headers


def _tt_directives(hdrs: Term) -> Term:
    return app("some_val", app("some_val", hdrs.rp_hd_csp).csp_trusted_types)


UPDATE_HTML_RULE = TransitionRule(
    "script_update_html",
    "EvScriptUpdateHTML",
    (
        clause(
            "script_update_html",
            STEP_HEAD,
            eq(ev, C.EvScriptUpdateHTML(pt_, tgt_, snap_, pl_)),
            script_at(pt_),
            eq(tgt_, C.MkDOMPath(tlv_, sel_)),
            app("resolve_slot", wins_of(st), tlv_, I0, ts_),
            eq(snap_, win_at(st, ts_)),
            eq(fn("same_effective_origin", win_at(st, ctx_), snap_), Lit(True)),
            # Trusted Types: with both directives in force the sink only
            # accepts a Trusted value, from the target's realm when the
            # strict check is on; otherwise anything passes
            disj(
                is_none(_tt_of_target.rp_hd_csp),
                conj(
                    is_some(_tt_of_target.rp_hd_csp),
                    is_none(app("some_val", _tt_of_target.rp_hd_csp).csp_trusted_types),
                ),
                conj(
                    is_some(_tt_of_target.rp_hd_csp),
                    is_some(app("some_val", _tt_of_target.rp_hd_csp).csp_trusted_types),
                    eq(_tt_directives(_tt_of_target).tt_require_for_script, Lit(False)),
                ),
                conj(
                    eq(gb.config.restrict_tt_to_secure_contexts, Lit(True)),
                    app("is_insecure_context", wins_of(st), ts_),
                ),
                conj(
                    is_some(_tt_of_target.rp_hd_csp),
                    is_some(app("some_val", _tt_of_target.rp_hd_csp).csp_trusted_types),
                    eq(_tt_directives(_tt_of_target).tt_require_for_script, Lit(True)),
                    disj(
                        eq(gb.config.restrict_tt_to_secure_contexts, Lit(False)),
                        app("is_secure_context", wins_of(st), ts_),
                    ),
                    eq(pl_, C.Trusted(rlm_)),
                    app("script_state", st, sid_, C.SOTrusted(rlm_)),
                    disj(
                        eq(gb.config.tt_strict_realm_check, Lit(False)),
                        eq(rlm_, ts_),
                    ),
                ),
            ),
            eq(st2, st),
        ),
    ),
)

SET_COOKIE_RULE = TransitionRule(
    "script_set_cookie",
    "EvScriptSetCookie",
    (
        clause(
            "script_set_cookie",
            STEP_HEAD,
            eq(ev, C.EvScriptSetCookie(pt_, tgt_, ci_, sc_)),
            script_at(pt_),
            eq(tgt_, C.MkDOMPath(tlv_, C.DOMTopLevel())),
            app("resolve_slot", wins_of(st), tlv_, I0, ts_),
            eq(fn("same_effective_origin", win_at(st, ctx_), win_at(st, ts_)), Lit(True)),
            # document.cookie cannot create HttpOnly cookies
            eq(sc_.sc_http_only, Lit(False)),
            # prefix and Secure checks run against the target window's
            # original URL, not its relaxed effective domain
            *_set_cookie_guards(win_at(st, ts_).wd_location),
            app(
                "store_first",
                _jar_slot_pred,
                st.st_cookiejar,
                some(_cookie_entry_of),
                I0,
                jar2_,
                jslot_,
            ),
            eq(ci_, jslot_),
            eq(st2, upd("MkBrowserState", st, st_cookiejar=jar2_)),
        ),
    ),
)

READ_COOKIE_RULE = TransitionRule(
    "script_read_cookie",
    "EvScriptReadCookie",
    (
        clause(
            "script_read_cookie",
            STEP_HEAD,
            eq(ev, C.EvScriptReadCookie(pt_, ci_)),
            script_at(pt_),
            eq(select(st.st_cookiejar, ci_), some(e_)),
            # HttpOnly entries are invisible to document.cookie
            eq(e_.cj_http_only, Lit(False)),
            eq(fn("cookie_applicable", e_, win_at(st, ctx_).wd_location), Lit(True)),
            add_knowledge(
                sid_,
                C.SOCookie(ci_, C.MkCookiePair(e_.cj_name, e_.cj_value)),
                kn2_,
                kslot_,
            ),
            eq(st2, upd("MkBrowserState", st, st_script_knowledge=kn2_)),
        ),
    ),
)

READ_HEADERS_RULE = TransitionRule(
    "script_read_response_headers",
    "EvScriptReadResponseHeaders",
    (
        clause(
            "script_read_response_headers",
            STEP_HEAD,
            eq(ev, C.EvScriptReadResponseHeaders(pt_, corr_)),
            script_at(pt_),
            app("in_history", fe_of(st), corr_, hem_, hrqi_, hrpi_),
            # scripts read responses for their own origin only
            eq(
                fn("url_origin", select(gb.urls, hrqi_)),
                fn("url_origin", win_at(st, ctx_).wd_location),
            ),
            is_some(fn("url_origin", select(gb.urls, hrqi_))),
            add_knowledge(sid_, C.SOHeader(corr_), kn1_, kslot_),
            # Set-Cookie is visible to getResponseHeaders-style access only
            # while it is not a forbidden header
            disj(
                conj(
                    disj(
                        eq(select(gb.responses, hrpi_).rp_headers.rp_hd_set_cookie, NONE),
                        eq(gb.config.forbidden_headers, Lit(True)),
                    ),
                    eq(kn2_, kn1_),
                ),
                conj(
                    eq(
                        select(gb.responses, hrpi_).rp_headers.rp_hd_set_cookie,
                        some(sc_),
                    ),
                    eq(gb.config.forbidden_headers, Lit(False)),
                    app(
                        "find_first",
                        lam(D.option(D.COOKIE_ENTRY))(
                            lambda o: conj(
                                is_some(o),
                                eq(app("some_val", o).cj_name, sc_.sc_name),
                                eq(app("some_val", o).cj_reg_domain, sc_.sc_reg_domain),
                                eq(app("some_val", o).cj_value, sc_.sc_value),
                            )
                        ),
                        st.st_cookiejar,
                        I0,
                        ci2_,
                    ),
                    app(
                        "store_first",
                        knowledge_dedupe_pred(
                            sid_,
                            C.SOCookie(ci2_, C.MkCookiePair(sc_.sc_name, sc_.sc_value)),
                        ),
                        kn1_,
                        some(
                            C.MkKnowledgeEntry(
                                sid_,
                                C.SOCookie(
                                    ci2_, C.MkCookiePair(sc_.sc_name, sc_.sc_value)
                                ),
                            )
                        ),
                        I0,
                        kn2_,
                        kslot2_,
                    ),
                ),
            ),
            eq(st2, upd("MkBrowserState", st, st_script_knowledge=kn2_)),
        ),
    ),
)

NAVIGATE_FRAME_RULE = TransitionRule(
    "script_navigate_frame",
    "EvScriptNavigateFrame",
    (
        clause(
            "script_navigate_frame",
            STEP_HEAD,
            eq(ev, C.EvScriptNavigateFrame(pt_, fpt_, u_)),
            script_at(pt_),
            app("is_frame_in_dom_path", wins_of(st), fpt_, fs_, fctx_),
            # a script may navigate its own frame, a same-origin frame or a
            # child frame of its window
            disj(
                eq(ctx_, fs_),
                eq(
                    fn("same_effective_origin", win_at(st, ctx_), win_at(st, fs_)),
                    Lit(True),
                ),
                eq(win_at(st, fs_).wd_parent, some(ctx_)),
            ),
            *engine_free(),
            eq(fe_of(st).ft_pending_nav, NONE),
            url_in_pool(u_, ui_),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_fetch_engine=upd(
                        "MkFetchEngine",
                        fe_of(st),
                        ft_pending_nav=some(C.MkPendingNav(fpt_, u_, ctx_)),
                    ),
                ),
            ),
        ),
    ),
)

SET_DOMAIN_RULE = TransitionRule(
    "script_set_domain",
    "EvScriptSetDomain",
    (
        clause(
            "script_set_domain",
            STEP_HEAD,
            eq(ev, C.EvScriptSetDomain(pt_, d_)),
            eq(gb.config.domain_relaxation, Lit(True)),
            script_at(pt_),
            eq(win_at(st, ctx_).wd_location.url_host, some(h_)),
            eq(fn("is_ancestor_or_self", d_, h_), Lit(True)),
            eq(
                st2,
                upd(
                    "MkBrowserState",
                    st,
                    st_windows=store(
                        wins_of(st),
                        ctx_,
                        some(
                            upd(
                                "MkWindow",
                                win_at(st, ctx_),
                                wd_document=upd(
                                    "MkDocument",
                                    doc_of(win_at(st, ctx_)),
                                    dc_domain=some(d_),
                                ),
                            )
                        ),
                    ),
                ),
            ),
        ),
    ),
)

POST_MESSAGE_RULE = TransitionRule(
    "script_post_message",
    "EvScriptPostMessage",
    (
        clause(
            "script_post_message",
            STEP_HEAD,
            eq(ev, C.EvScriptPostMessage(spt_, rpt_, val_)),
            script_at(spt_),
            app("is_script_in_dom_path", wins_of(st), rpt_, rsid_, rssrc_, rctx_),
            # the reported sender origin uses the original domain
            eq(fn("url_origin", win_at(st, ctx_).wd_location), some(so_)),
            app(
                "store_first",
                knowledge_dedupe_pred(rsid_, C.SOMessage(so_)),
                st.st_script_knowledge,
                some(C.MkKnowledgeEntry(rsid_, C.SOMessage(so_))),
                I0,
                kn2_,
                kslot_,
            ),
            eq(st2, upd("MkBrowserState", st, st_script_knowledge=kn2_)),
        ),
    ),
)

CREATE_BLOB_RULE = TransitionRule(
    "script_create_blob_url",
    "EvScriptCreateBlobUrl",
    (
        clause(
            "script_create_blob_url",
            STEP_HEAD,
            eq(ev, C.EvScriptCreateBlobUrl(pt_, ui_)),
            script_at(pt_),
            eq(select(gb.urls, ui_).url_protocol, C.BLOB()),
            app(
                "store_first",
                free_slot_pred(D.BLOB_ENTRY),
                st.st_blob_store,
                some(C.MkBlobEntry(ui_, ctx_)),
                I0,
                bs2_,
                bslot2_,
            ),
            eq(st2, upd("MkBrowserState", st, st_blob_store=bs2_)),
        ),
    ),
)

STORAGE_SET_RULE = TransitionRule(
    "script_storage_set",
    "EvScriptStorageSet",
    (
        clause(
            "script_storage_set",
            STEP_HEAD,
            eq(ev, C.EvScriptStorageSet(pt_, k_, v_)),
            script_at(pt_),
            eq(fn("url_origin", win_at(st, ctx_).wd_location), some(so_)),
            App(">=", (k_, I0)),
            App("<", (k_, L(4))),
            App(">=", (v_, I0)),
            App("<", (v_, L(4))),
            app(
                "store_first",
                lam(D.option(D.STORAGE_ENTRY))(
                    lambda o: disj(
                        is_none(o),
                        conj(
                            is_some(o),
                            eq(app("some_val", o).ls_origin, so_),
                            eq(app("some_val", o).ls_key, k_),
                        ),
                    )
                ),
                st.st_local_storage,
                some(C.MkStorageEntry(so_, k_, v_)),
                I0,
                ls2_,
                lslot_,
            ),
            eq(st2, upd("MkBrowserState", st, st_local_storage=ls2_)),
        ),
    ),
)

STORAGE_GET_RULE = TransitionRule(
    "script_storage_get",
    "EvScriptStorageGet",
    (
        clause(
            "script_storage_get",
            STEP_HEAD,
            eq(ev, C.EvScriptStorageGet(pt_, k_)),
            script_at(pt_),
            eq(fn("url_origin", win_at(st, ctx_).wd_location), some(so_)),
            app(
                "find_first",
                lam(D.option(D.STORAGE_ENTRY))(
                    lambda o: conj(
                        is_some(o),
                        eq(app("some_val", o).ls_origin, so_),
                        eq(app("some_val", o).ls_key, k_),
                    )
                ),
                st.st_local_storage,
                I0,
                li_,
            ),
            add_knowledge(
                sid_,
                C.SOStorage(k_, app("some_val", select(st.st_local_storage, li_)).ls_value),
                kn2_,
                kslot_,
            ),
            eq(st2, upd("MkBrowserState", st, st_script_knowledge=kn2_)),
        ),
    ),
)

CACHE_UPDATE_RULE = TransitionRule(
    "script_cache_update",
    "EvScriptCacheUpdate",
    (
        clause(
            "script_cache_update",
            STEP_HEAD,
            eq(ev, C.EvScriptCacheUpdate(pt_, cri_, cpi_)),
            eq(gb.config.script_update_cache, Lit(True)),
            script_at(pt_),
            # the cached response must claim the cached URL, but may be any
            # pool row: this is what allows policy-stripping cache poisoning
            eq(select(gb.responses, cpi_).rp_url, select(gb.urls, cri_)),
            app(
                "store_first",
                lam(D.option(D.CACHE_ENTRY))(
                    lambda o: disj(
                        is_none(o), eq(o, some(C.MkCacheEntry(cri_, cpi_)))
                    )
                ),
                st.st_cache,
                some(C.MkCacheEntry(cri_, cpi_)),
                I0,
                ca2_,
                caslot_,
            ),
            eq(st2, upd("MkBrowserState", st, st_cache=ca2_)),
        ),
    ),
)

WORKER_CACHE_UPDATE_RULE = TransitionRule(
    "worker_cache_update",
    "EvWorkerCacheUpdate",
    (
        clause(
            "worker_cache_update",
            STEP_HEAD,
            eq(ev, C.EvWorkerCacheUpdate(cri_, cpi_)),
            # workers cache authentic exchanges: the oracle response row
            eq(cri_, cpi_),
            App(">=", (cri_, I0)),
            App("<", (cri_, app("alen", gb.urls))),
            app(
                "store_first",
                lam(D.option(D.CACHE_ENTRY))(
                    lambda o: disj(
                        is_none(o), eq(o, some(C.MkCacheEntry(cri_, cpi_)))
                    )
                ),
                st.st_cache,
                some(C.MkCacheEntry(cri_, cpi_)),
                I0,
                ca2_,
                caslot_,
            ),
            eq(st2, upd("MkBrowserState", st, st_cache=ca2_)),
        ),
    ),
)

CREATE_TRUSTED_RULE = TransitionRule(
    "script_create_trusted_html",
    "EvScriptCreateTrustedHTML",
    (
        clause(
            "script_create_trusted_html",
            STEP_HEAD,
            eq(ev, C.EvScriptCreateTrustedHTML(pt_, rlm_)),
            script_at(pt_),
            eq(rlm_, ctx_),
            # policy creation is allowed unless the document's trusted-types
            # directive forbids it ('none' or a bare directive)
            disj(
                is_none(doc_of(win_at(st, ctx_)).dc_headers.rp_hd_csp),
                conj(
                    is_some(doc_of(win_at(st, ctx_)).dc_headers.rp_hd_csp),
                    is_none(
                        app(
                            "some_val", doc_of(win_at(st, ctx_)).dc_headers.rp_hd_csp
                        ).csp_trusted_types
                    ),
                ),
                conj(
                    is_some(doc_of(win_at(st, ctx_)).dc_headers.rp_hd_csp),
                    is_some(
                        app(
                            "some_val", doc_of(win_at(st, ctx_)).dc_headers.rp_hd_csp
                        ).csp_trusted_types
                    ),
                    app(
                        "is$TTPolicyNamed",
                        app(
                            "some_val",
                            app(
                                "some_val", doc_of(win_at(st, ctx_)).dc_headers.rp_hd_csp
                            ).csp_trusted_types,
                        ).tt_policy,
                    ),
                ),
            ),
            disj(
                eq(gb.config.restrict_tt_to_secure_contexts, Lit(False)),
                app("is_secure_context", wins_of(st), ctx_),
            ),
            add_knowledge(sid_, C.SOTrusted(rlm_), kn2_, kslot_),
            eq(st2, upd("MkBrowserState", st, st_script_knowledge=kn2_)),
        ),
    ),
)

RULES: tuple[TransitionRule, ...] = (
    REQUEST_RULE,
    RESPONSE_RULE,
    DOM_UPDATE_RULE,
    UPDATE_HTML_RULE,
    SET_COOKIE_RULE,
    READ_COOKIE_RULE,
    READ_HEADERS_RULE,
    NAVIGATE_FRAME_RULE,
    SET_DOMAIN_RULE,
    POST_MESSAGE_RULE,
    CREATE_BLOB_RULE,
    STORAGE_SET_RULE,
    STORAGE_GET_RULE,
    CACHE_UPDATE_RULE,
    WORKER_CACHE_UPDATE_RULE,
    CREATE_TRUSTED_RULE,
)

# Config gate per event constructor, for step-rejection diagnostics.
CONFIG_GATES: dict[str, str] = {
    "EvScriptSetDomain": "domain_relaxation",
    "EvScriptCacheUpdate": "script_update_cache",
}


def step_relation() -> RelDef:
    return RelDef(
        "step",
        (("gb", D.GLOBAL), ("st", D.STATE), ("ev", D.EVENT), ("st2", D.STATE)),
        tuple(cl for rule in RULES for cl in rule.clauses),
    )


def reachable_relation() -> RelDef:
    evs = V("evs", D.EVENT_LIST)
    e0 = V("e0", D.EVENT)
    rest0 = V("rest0", D.EVENT_LIST)
    st0 = V("st0", D.STATE)
    return RelDef(
        "reachable",
        (("gb", D.GLOBAL), ("evs", D.EVENT_LIST), ("st", D.STATE)),
        (
            clause(
                "reachable_init",
                (gb, evs, st),
                eq(evs, NIL),
                app("wf_global", gb),
                eq(st, initial_state_term()),
            ),
            clause(
                "reachable_step",
                (gb, evs, st),
                eq(evs, cons(e0, rest0)),
                app("reachable", gb, rest0, st0),
                app("step", gb, st0, e0, st),
            ),
        ),
    )


# The "insecure context" complement used by the Trusted Types rule: some
# window on the parent chain is not HTTPS.
def _insecure_context_relation() -> RelDef:
    wins = V("wins", D.ArraySort(D.option(D.WINDOW)))
    slot = V("slot", INT)
    p_ = V("p_", INT)
    return RelDef(
        "is_insecure_context",
        (("wins", D.ArraySort(D.option(D.WINDOW))), ("slot", INT)),
        (
            clause(
                "insecure_here",
                (wins, slot),
                is_some(select(wins, slot)),
                neg(
                    eq(
                        app("some_val", select(wins, slot)).wd_location.url_protocol,
                        C.HTTPS(),
                    )
                ),
            ),
            clause(
                "insecure_parent",
                (wins, slot),
                eq(app("some_val", select(wins, slot)).wd_parent, some(p_)),
                app("is_insecure_context", wins, p_),
            ),
        ),
    )


def _csp_uniform_ok_relation() -> RelDef:
    cfg = V("cfg", D.CONFIG)
    wins = V("wins", D.ArraySort(D.option(D.WINDOW)))
    oorg = V("oorg", D.option(D.ORIGIN))
    ocsp = V("ocsp", D.option(D.CSP))
    org = V("org", D.ORIGIN)
    return RelDef(
        "csp_uniform_ok",
        (
            ("cfg", D.CONFIG),
            ("wins", D.ArraySort(D.option(D.WINDOW))),
            ("oorg", D.option(D.ORIGIN)),
            ("ocsp", D.option(D.CSP)),
        ),
        (
            clause("uniform_no_origin", (cfg, wins, oorg, ocsp), eq(oorg, NONE)),
            clause(
                "uniform_with_origin",
                (cfg, wins, oorg, ocsp),
                eq(oorg, some(org)),
                app("csp_uniform_from", cfg, wins, org, ocsp, I0),
            ),
        ),
    )


def browser_program() -> Program:
    """The complete authored rule set as one IR program."""
    return Program(
        list(D.DATATYPE_DEFS)
        + list(FUN_DEFS)
        + list(REL_DEFS)
        + [
            _insecure_context_relation(),
            _csp_uniform_ok_relation(),
            step_relation(),
            reachable_relation(),
        ]
    )
