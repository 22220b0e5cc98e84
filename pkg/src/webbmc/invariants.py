"""Catalog of the ten Web invariants and their counterexample queries.

Each invariant is a hypothesis/conclusion pair over ``(gb, evs, st)``
authored once as IR terms.  The executable checkers and the compiled
queries are both derived from that single definition: ``check_invariant``
runs the terms through the IR evaluator, ``build_query`` packages the same
terms (with the conclusion negated) as a Horn query for the compiler.

Invariant identifiers are stable kebab-case strings; the Host-cookie
invariant decomposes into a response case and a script case, which are
also exposed individually.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence

from . import model as M
from . import semantics as S
from .ir.ast import (
    App,
    Clause,
    INT,
    Lambda,
    Lit,
    RelDef,
    Term,
    Var,
    app,
    conj,
    disj,
    eq,
    lst,
    neg,
)
from .rules import datatypes as D
from .rules.datatypes import C
from .rules.predicates import NIL, V, clause, cons, fn, is_some, some
from .rules.transitions import lam

gb = V("gb", D.GLOBAL)
evs = V("evs", D.EVENT_LIST)
st = V("st", D.STATE)

QUERY_HEAD = (gb, evs, st)

rp = V("rp", D.RESPONSE)
corr = V("corr", D.CORR)
prov = V("prov", D.PROVENANCE)
rest = V("rest", D.EVENT_LIST)
sc = V("sc", D.SET_COOKIE)
sid = V("sid", INT)
src = V("src", D.URL)
ctx = V("ctx", INT)
pt = V("pt", D.DOM_PATH)
ci = V("ci", INT)
pair = V("pair", D.COOKIE_PAIR)
e = V("e", D.COOKIE_ENTRY)
n = V("n", INT)
h = V("h", D.DOMAIN)
em = V("em", D.EMITTER)
rq = V("rq", D.REQUEST)
sel = V("sel", D.SELECTOR)
snap = V("snap", D.WINDOW)
pl = V("pl", D.PAYLOAD)
se = V("se", D.SOURCE_EXPR)
ott = V("ott", D.option(D.TT_DIRECTIVES))
org = V("org", D.ORIGIN)
rqi = V("rqi", INT)
rpi = V("rpi", INT)
tctx = V("tctx", D.WINDOW)
ssrc = V("ssrc", D.option(D.SOURCE_EXPR))
lv = V("lv", lst(INT))
i = V("i", INT)
fslot = V("fslot", INT)
init = V("init", INT)
orghd = V("orghd", D.ORIGIN)
orgsrc = V("orgsrc", D.ORIGIN)
emi = V("emi", INT)
orgsw = V("orgsw", D.ORIGIN)
rpc = V("rpc", D.CORR)


def _root_window() -> Term:
    return app("some_val", app("select", st.st_windows, Lit(0)))


def _win(slot: Term) -> Term:
    return app("some_val", app("select", st.st_windows, slot))


_get_csp = lam(D.WINDOW)(
    lambda w: w.wd_document.dc_headers.rp_hd_csp
)


@dataclass(frozen=True)
class InvariantCase:
    """One hypothesis alternative with its conclusion."""

    name: str
    hypothesis: tuple[Term, ...]
    conclusion: Term
    negated_conclusion: tuple[Term, ...]


@dataclass(frozen=True)
class InvariantDef:
    id: str
    feature: str
    title: str
    holds_by_default: bool
    cases: tuple[InvariantCase, ...]
    fix_config: dict[str, bool] = field(default_factory=dict)


@dataclass(frozen=True)
class InvariantQuery:
    """Hypothesis plus negated conclusion; satisfied triples are exactly
    the invariant's counterexamples."""

    id: str
    defn: InvariantDef

    def relation(self) -> RelDef:
        clauses = []
        for case in self.defn.cases:
            clauses.append(
                clause(
                    f"query_{case.name}",
                    QUERY_HEAD,
                    app("reachable", gb, evs, st),
                    *case.hypothesis,
                    *case.negated_conclusion,
                )
            )
        return RelDef(
            f"query${self.id}",
            (("gb", D.GLOBAL), ("evs", D.EVENT_LIST), ("st", D.STATE)),
            tuple(clauses),
        )

    def satisfied(self, gbv: M.Global, evsv: Sequence[M.Event], stv: M.BrowserState) -> bool:
        """Hypothesis-and-negated-conclusion satisfaction on a concrete
        triple (reachability is the caller's obligation)."""
        ev = S._evaluator()
        env = {"gb": gbv, "evs": tuple(evsv), "st": stv}
        for case in self.defn.cases:
            atoms = list(case.hypothesis) + list(case.negated_conclusion)
            for _ in ev.solve_atoms(atoms, dict(env)):
                return True
        return False


# ---------------------------------------------------------------------------
# The ten invariants
# ---------------------------------------------------------------------------

_SECURE_COOKIES = InvariantDef(
    "secure-cookies",
    "Cookies",
    "Secure cookies are set over HTTPS only",
    True,
    (
        InvariantCase(
            "secure_cookies",
            (
                eq(evs, cons(C.EvResponse(rp, corr, prov), rest)),
                eq(rp.rp_headers.rp_hd_set_cookie, some(sc)),
                eq(sc.sc_secure, Lit(True)),
            ),
            eq(rp.rp_url.url_protocol, C.HTTPS()),
            (neg(eq(rp.rp_url.url_protocol, C.HTTPS())),),
        ),
    ),
    {},
)

_HTTP_ONLY = InvariantDef(
    "http-only-confidentiality",
    "Cookies",
    "Scripts never learn HttpOnly cookie values",
    True,
    (
        InvariantCase(
            "http_only",
            (
                app("script_state", st, sid, C.SOCookie(ci, pair)),
                eq(app("select", st.st_cookiejar, ci), some(e)),
            ),
            eq(e.cj_http_only, Lit(False)),
            (eq(e.cj_http_only, Lit(True)),),
        ),
    ),
    {"forbidden_headers": True},
)

_HOST_RP_CASE = InvariantCase(
    "host_rp",
    (
        eq(evs, cons(C.EvResponse(rp, corr, prov), rest)),
        eq(rp.rp_headers.rp_hd_set_cookie, some(sc)),
        eq(sc.sc_name, C.Host(n)),
        eq(rp.rp_url.url_host, some(h)),
    ),
    eq(sc.sc_reg_domain, h),
    (neg(eq(sc.sc_reg_domain, h)),),
)

_HOST_SC_CASE = InvariantCase(
    "host_sc",
    (
        eq(evs, cons(C.EvScriptSetCookie(pt, C.MkDOMPath(NIL, C.DOMTopLevel()), ci, sc), rest)),
        app("is_script_in_dom_path", st.st_windows, pt, sid, src, ctx),
        eq(sc.sc_name, C.Host(n)),
        eq(_win(ctx).wd_location.url_host, some(h)),
    ),
    eq(sc.sc_reg_domain, h),
    (neg(eq(sc.sc_reg_domain, h)),),
)

_HOST_RP = InvariantDef(
    "host-integrity-rp",
    "Cookies",
    "Host-prefixed cookies set by headers register their sender",
    True,
    (_HOST_RP_CASE,),
    {},
)

_HOST_SC = InvariantDef(
    "host-integrity-sc",
    "Cookies",
    "Host-prefixed cookies set by scripts register the script's host",
    False,
    (_HOST_SC_CASE,),
    {"domain_relaxation": False},
)

_HOST_BOTH = InvariantDef(
    "host-integrity",
    "Cookies",
    "Integrity of Host-prefixed cookies",
    False,
    (_HOST_RP_CASE, _HOST_SC_CASE),
    {"domain_relaxation": False},
)

_CSP_SOP = InvariantDef(
    "csp-sop",
    "CSP",
    "Only policy-allowed scripts touch a CSP-protected DOM",
    False,
    (
        InvariantCase(
            "csp_sop",
            (
                eq(evs, cons(C.EvScriptUpdateHTML(pt, C.MkDOMPath(NIL, sel), snap, pl), rest)),
                app("is_script_in_dom_path", st.st_windows, pt, sid, src, ctx),
                eq(
                    _root_window().wd_document.dc_headers.rp_hd_csp,
                    some(C.MkCSP(some(se), ott)),
                ),
                eq(fn("url_origin", _root_window().wd_location), some(org)),
            ),
            eq(fn("csp_src_match", se, org, src), Lit(True)),
            (eq(fn("csp_src_match", se, org, src), Lit(False)),),
        ),
    ),
    {"origin_wide_csp": True},
)

_SERVER_POLICY = InvariantDef(
    "server-policy-integrity",
    "CSP",
    "The browser enforces the server's own security policy",
    False,
    (
        InvariantCase(
            "server_policy",
            (app("in_history", st.st_fetch_engine, corr, em, rqi, rpi),),
            eq(
                app("select", gb.responses, rpi).rp_headers.rp_hd_csp,
                app("select", gb.responses, rqi).rp_headers.rp_hd_csp,
            ),
            (
                neg(
                    eq(
                        app("select", gb.responses, rpi).rp_headers.rp_hd_csp,
                        app("select", gb.responses, rqi).rp_headers.rp_hd_csp,
                    )
                ),
            ),
        ),
    ),
    {"worker_allow_synthetic_responses": False, "script_update_cache": False},
)

_TT_SINKS = InvariantDef(
    "trusted-types-sinks",
    "CSP",
    "Locked-down Trusted Types block all DOM XSS sink writes",
    False,
    (
        InvariantCase(
            "tt_sinks",
            (
                eq(tctx.wd_location.url_protocol, C.HTTPS()),
                eq(
                    tctx.wd_document.dc_headers.rp_hd_csp,
                    some(
                        C.MkCSP(
                            ssrc,
                            some(C.MkTTDirectives(C.TTPolicyNone(), Lit(True))),
                        )
                    ),
                ),
            ),
            neg(app("update_html_targeting", evs, tctx)),
            (app("update_html_targeting", evs, tctx),),
        ),
    ),
    {"tt_strict_realm_check": True, "restrict_tt_to_secure_contexts": False},
)

_SAFE_INHERITANCE = InvariantDef(
    "safe-policy-inheritance",
    "CSP",
    "Local-scheme documents inherit the initiator's policy",
    True,
    (
        InvariantCase(
            "safe_inheritance",
            (
                eq(evs, cons(C.EvDOMUpdate(pt), rest)),
                eq(pt, C.MkDOMPath(lv, C.DOMIndex(i))),
                app("is_frame_in_dom_path", st.st_windows, pt, fslot, ctx),
                eq(fn("url_is_local", _win(fslot).wd_location), Lit(True)),
                eq(_win(fslot).wd_initiator, some(init)),
            ),
            eq(App("call", (_get_csp, _win(fslot))), App("call", (_get_csp, _win(init)))),
            (
                neg(
                    eq(
                        App("call", (_get_csp, _win(fslot))),
                        App("call", (_get_csp, _win(init))),
                    )
                ),
            ),
        ),
    ),
    {"csp_inherit_local_from_initiator": True, "csp_inherit_blob_from_creator": False},
)

_ORIGIN_AUTH = InvariantDef(
    "origin-authenticity",
    "Origin header",
    "An Origin header names the origin that generated the request",
    True,
    (
        InvariantCase(
            "origin_auth",
            (
                eq(evs, cons(C.EvRequest(em, rq, corr), rest)),
                eq(rq.rq_headers.rq_hd_origin, some(orghd)),
                app("is_request_source", st, rq, orgsrc),
            ),
            eq(orgsrc, orghd),
            (neg(eq(orgsrc, orghd)),),
        ),
    ),
    {"origin_header_on_cross_origin_redirect": False},
)

_NON_SIMPLE = InvariantDef(
    "non-simple-preflight",
    "SOP/CORS",
    "Cross-origin non-simple requests follow a preflight",
    True,
    (
        InvariantCase(
            "non_simple",
            (
                eq(evs, cons(C.EvRequest(em, rq, corr), rest)),
                eq(fn("is_cors_simple_request", rq), Lit(False)),
                eq(fn("is_cross_origin_request", st, rq), Lit(True)),
            ),
            app("exists_in_list", app("is_preflight_for", rq), rest),
            (app("all_in_list", app("is_not_preflight_for", rq), rest),),
        ),
    ),
    {"earlyhtml5_form_methods": False},
)

_PREFLIGHT_AUTH = InvariantDef(
    "preflight-authorization",
    "SOP/CORS",
    "Preflight authorization comes from the target origin",
    True,
    (
        InvariantCase(
            "preflight_auth",
            (
                eq(evs, cons(C.EvRequest(em, rq, corr), rest)),
                eq(em, C.EmitterScript(sid, pt)),
                eq(app("select", gb.emitters, emi), em),
                eq(fn("is_cors_simple_request", rq), Lit(False)),
                eq(fn("is_cross_origin_request", st, rq), Lit(True)),
                app("is_script_in_dom_path", st.st_windows, pt, sid, src, ctx),
                eq(fn("url_origin", _win(ctx).wd_location), some(orgsw)),
                app("is_cors_authorization_response", gb, st, emi, orgsw, rp, rpc),
            ),
            eq(fn("url_origin", rq.rq_url), fn("url_origin", rp.rp_url)),
            (neg(eq(fn("url_origin", rq.rq_url), fn("url_origin", rp.rp_url))),),
        ),
    ),
    {"redirect_preflight_requests": False},
)

# The ten catalog rows; the Host row decomposes into rp/sc conjuncts.
CATALOG_ROWS: tuple[InvariantDef, ...] = (
    _SECURE_COOKIES,
    _HTTP_ONLY,
    _HOST_BOTH,
    _CSP_SOP,
    _SERVER_POLICY,
    _TT_SINKS,
    _SAFE_INHERITANCE,
    _ORIGIN_AUTH,
    _NON_SIMPLE,
    _PREFLIGHT_AUTH,
)

ALL_INVARIANTS: dict[str, InvariantDef] = {
    d.id: d
    for d in CATALOG_ROWS + (_HOST_RP, _HOST_SC)
}

INVARIANT_IDS: tuple[str, ...] = tuple(ALL_INVARIANTS)


def get(invariant_id: str) -> InvariantDef:
    try:
        return ALL_INVARIANTS[invariant_id]
    except KeyError:
        raise KeyError(
            f"unknown invariant {invariant_id!r}; valid ids: {', '.join(sorted(ALL_INVARIANTS))}"
        ) from None


def build_query(invariant_id: str) -> InvariantQuery:
    return InvariantQuery(invariant_id, get(invariant_id))


def check_invariant(
    invariant_id: str,
    gbv: M.Global,
    evsv: Sequence[M.Event],
    stv: M.BrowserState,
) -> bool:
    """Does the invariant hold on this triple?  The caller establishes
    ``replay(gb, evs) = st``; traces are newest-first."""
    defn = get(invariant_id)
    evaluator = S._evaluator()
    env = {"gb": gbv, "evs": tuple(evsv), "st": stv}
    for case in defn.cases:
        for sol in evaluator.solve_atoms(list(case.hypothesis), dict(env)):
            if not bool(evaluator.eval(case.conclusion, sol)):
                return False
    return True


def query_satisfied(
    invariant_id: str,
    gbv: M.Global,
    evsv: Sequence[M.Event],
    stv: M.BrowserState,
) -> bool:
    return build_query(invariant_id).satisfied(gbv, evsv, stv)


def counterexample_invalidates(
    invariant_id: str,
    gbv: M.Global,
    evsv: Sequence[M.Event],
    stv: M.BrowserState,
) -> bool:
    """Runtime mirror of the soundness theorem: a satisfied query implies
    the invariant is falsified on the same triple."""
    if query_satisfied(invariant_id, gbv, evsv, stv):
        return not check_invariant(invariant_id, gbv, evsv, stv)
    return True


