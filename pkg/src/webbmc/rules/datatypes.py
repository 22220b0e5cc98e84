"""IR datatype declarations for the browser model.

Every model class from :mod:`webbmc.model` is declared here as an IR
algebraic datatype and registered for evaluation, so the rule set, the
invariant catalog and the compiler all speak about the same vocabulary.
Field names double as accessor symbols and are globally unique.

Two datatypes carry constructor side-constraints (split into companion
well-formedness relations by the pipeline): stored Host-prefixed cookies
and redirect/204 responses.
"""

from __future__ import annotations

import enum
from dataclasses import fields as dc_fields
from typing import Any, Callable, Optional, Sequence

from .. import model as M
from ..ir.ast import (
    AdtSort,
    App,
    ArraySort,
    BOOL,
    Constructor,
    DataDef,
    INT,
    Lit,
    Sort,
    SortVar,
    Term,
    Var,
    adt,
    app,
    conj,
    disj,
    eq,
    lst,
    neg,
    option,
)
from ..ir.evaluate import ValueRegistry

# -- sort constants ---------------------------------------------------------

PROTOCOL = adt("Protocol")
METHOD = adt("Method")
PROVENANCE = adt("Provenance")
DOMAIN = adt("Domain")
ORIGIN = adt("Origin")
URL = adt("URL")
SOURCE_EXPR = adt("SourceExpr")
TT_POLICY = adt("TTPolicy")
TT_DIRECTIVES = adt("TTDirectives")
CSP = adt("CSP")
COOKIE_NAME = adt("CookieName")
COOKIE_PAIR = adt("CookiePair")
SET_COOKIE = adt("SetCookie")
COOKIE_ENTRY = adt("CookieEntry")
REQUEST_HEADERS = adt("RequestHeaders")
REQUEST = adt("Request")
RESPONSE_HEADERS = adt("ResponseHeaders")
RESPONSE = adt("Response")
HTML_ELEMENT = adt("HTMLElement")
DOM_ELEMENT = adt("DOMElement")
SELECTOR = adt("Selector")
DOM_PATH = adt("DOMPath")
DOCUMENT = adt("Document")
WINDOW = adt("Window")
EMITTER = adt("Emitter")
CORR = adt("Corr")
REDIRECT_INFO = adt("RedirectInfo")
PENDING_NAV = adt("PendingNav")
HIST_ENTRY = adt("HistEntry")
FETCH_ENGINE = adt("FetchEngine")
KNOWLEDGE_ITEM = adt("KnowledgeItem")
KNOWLEDGE_ENTRY = adt("KnowledgeEntry")
STORAGE_ENTRY = adt("StorageEntry")
CACHE_ENTRY = adt("CacheEntry")
BLOB_ENTRY = adt("BlobEntry")
PAYLOAD = adt("Payload")
EVENT = adt("Event")
CONFIG = adt("Config")
GLOBAL = adt("Global")
STATE = adt("BrowserState")

EVENT_LIST = lst(EVENT)

# -- field sort table ---------------------------------------------------------

_FIELD_SORTS: dict[str, Sort] = {
    # Domain
    "dm_name": INT,
    "dm_parent": option(INT),
    # TupleOrigin
    "org_protocol": PROTOCOL,
    "org_host": DOMAIN,
    # URL
    "url_protocol": PROTOCOL,
    "url_host": option(DOMAIN),
    "url_path": INT,
    "url_payload": option(INT),
    # SourceExpr
    "src_origin": ORIGIN,
    # TTPolicy / TTDirectives / CSP
    "tt_name": INT,
    "tt_policy": TT_POLICY,
    "tt_require_for_script": BOOL,
    "csp_script_src": option(SOURCE_EXPR),
    "csp_trusted_types": option(TT_DIRECTIVES),
    # Cookie names / pairs
    "plain_name": INT,
    "secure_prefix_name": INT,
    "host_prefix_name": INT,
    "ck_name": COOKIE_NAME,
    "ck_value": INT,
    # SetCookie
    "sc_name": COOKIE_NAME,
    "sc_value": INT,
    "sc_domain": option(DOMAIN),
    "sc_path": INT,
    "sc_secure": BOOL,
    "sc_http_only": BOOL,
    "sc_same_site": INT,
    "sc_reg_domain": DOMAIN,
    # CookieEntry
    "cj_reg_domain": DOMAIN,
    "cj_name": COOKIE_NAME,
    "cj_value": INT,
    "cj_domain": option(DOMAIN),
    "cj_path": INT,
    "cj_secure": BOOL,
    "cj_http_only": BOOL,
    "cj_same_site": INT,
    # Request
    "rq_hd_origin": option(ORIGIN),
    "rq_hd_cookie": option(COOKIE_PAIR),
    "rq_hd_referer": option(URL),
    "rq_method": METHOD,
    "rq_url": URL,
    "rq_headers": REQUEST_HEADERS,
    "rq_body": INT,
    # Response
    "rp_hd_content_type": option(INT),
    "rp_hd_set_cookie": option(SET_COOKIE),
    "rp_hd_location": option(URL),
    "rp_hd_referrer_policy": option(INT),
    "rp_hd_csp": option(CSP),
    "rp_hd_acao": option(ORIGIN),
    "rp_code": INT,
    "rp_url": URL,
    "rp_headers": RESPONSE_HEADERS,
    "rp_body": INT,
    # HTML / DOM elements
    "html_frame_src": INT,
    "html_script_src": INT,
    "html_image_src": INT,
    "html_form_method": METHOD,
    "html_form_action": INT,
    "dom_frame_window": INT,
    "dom_script_id": INT,
    "dom_script_src": URL,
    "dom_index": INT,
    # DOMPath
    "dp_levels": lst(INT),
    "dp_selector": SELECTOR,
    # Document / Window
    "dc_html": ArraySort(option(HTML_ELEMENT)),
    "dc_dom": ArraySort(option(DOM_ELEMENT)),
    "dc_headers": RESPONSE_HEADERS,
    "dc_domain": option(DOMAIN),
    "wd_location": URL,
    "wd_document": DOCUMENT,
    "wd_parent": option(INT),
    "wd_initiator": option(INT),
    # Emitters
    "em_sub_path": DOM_PATH,
    "em_script_id": INT,
    "em_script_path": DOM_PATH,
    "em_form_path": DOM_PATH,
    "em_preflight_for": INT,
    # Corr / redirect / pending nav / history
    "corr_base": INT,
    "corr_hops": INT,
    "rd_location": URL,
    "rd_method": METHOD,
    "rd_body": INT,
    "rd_origin": option(ORIGIN),
    "rd_redirector": ORIGIN,
    "rd_emitter": EMITTER,
    "rd_corr": CORR,
    "nav_path": DOM_PATH,
    "nav_url": URL,
    "nav_initiator": INT,
    "h_corr": CORR,
    "h_emitter": EMITTER,
    "h_rq_idx": INT,
    "h_rp_idx": INT,
    # FetchEngine
    "ft_request": option(REQUEST),
    "ft_emitter": option(EMITTER),
    "ft_corr": option(CORR),
    "ft_response": option(RESPONSE),
    "ft_rq_idx": option(INT),
    "ft_source": option(ORIGIN),
    "ft_redirect": option(REDIRECT_INFO),
    "ft_pending_nav": option(PENDING_NAV),
    "ft_next_corr": INT,
    "ft_history": ArraySort(option(HIST_ENTRY)),
    # Knowledge / storage / cache / blobs
    "so_cookie_idx": INT,
    "so_cookie_pair": COOKIE_PAIR,
    "so_header_corr": CORR,
    "so_storage_key": INT,
    "so_storage_value": INT,
    "so_msg_origin": ORIGIN,
    "so_trusted_realm": INT,
    "k_script": INT,
    "k_item": KNOWLEDGE_ITEM,
    "ls_origin": ORIGIN,
    "ls_key": INT,
    "ls_value": INT,
    "ca_rq_idx": INT,
    "ca_rp_idx": INT,
    "bl_url_idx": INT,
    "bl_creator": INT,
    # Payload
    "tr_realm": INT,
    # Events
    "ev_rq_emitter": EMITTER,
    "ev_rq_request": REQUEST,
    "ev_rq_corr": CORR,
    "ev_rp_response": RESPONSE,
    "ev_rp_corr": CORR,
    "ev_rp_provenance": PROVENANCE,
    "ev_dom_path": DOM_PATH,
    "ev_uh_script": DOM_PATH,
    "ev_uh_target": DOM_PATH,
    "ev_uh_snapshot": WINDOW,
    "ev_uh_payload": PAYLOAD,
    "ev_sc_script": DOM_PATH,
    "ev_sc_target": DOM_PATH,
    "ev_sc_idx": INT,
    "ev_sc_cookie": SET_COOKIE,
    "ev_rc_script": DOM_PATH,
    "ev_rc_idx": INT,
    "ev_rh_script": DOM_PATH,
    "ev_rh_corr": CORR,
    "ev_nf_script": DOM_PATH,
    "ev_nf_frame": DOM_PATH,
    "ev_nf_url": URL,
    "ev_sd_script": DOM_PATH,
    "ev_sd_domain": DOMAIN,
    "ev_pm_sender": DOM_PATH,
    "ev_pm_receiver": DOM_PATH,
    "ev_pm_validates": BOOL,
    "ev_cb_script": DOM_PATH,
    "ev_cb_url_idx": INT,
    "ev_ss_script": DOM_PATH,
    "ev_ss_key": INT,
    "ev_ss_value": INT,
    "ev_sg_script": DOM_PATH,
    "ev_sg_key": INT,
    "ev_cu_script": DOM_PATH,
    "ev_cu_rq_idx": INT,
    "ev_cu_rp_idx": INT,
    "ev_wc_rq_idx": INT,
    "ev_wc_rp_idx": INT,
    "ev_ct_script": DOM_PATH,
    "ev_ct_realm": INT,
    # Global / state
    "windows": ArraySort(WINDOW),
    "responses": ArraySort(RESPONSE),
    "emitters": ArraySort(EMITTER),
    "urls": ArraySort(URL),
    "origin_count": INT,
    "st_windows": ArraySort(option(WINDOW)),
    "st_fetch_engine": FETCH_ENGINE,
    "st_cookiejar": ArraySort(option(COOKIE_ENTRY)),
    "st_local_storage": ArraySort(option(STORAGE_ENTRY)),
    "st_cache": ArraySort(option(CACHE_ENTRY)),
    "st_blob_store": ArraySort(option(BLOB_ENTRY)),
    "st_script_knowledge": ArraySort(option(KNOWLEDGE_ENTRY)),
    "config": CONFIG,
}
for _flag in M.CONFIG_FLAGS:
    _FIELD_SORTS[_flag] = BOOL


def _ctor_from_class(cls: type, name: Optional[str] = None) -> Constructor:
    names = [f.name for f in dc_fields(cls)]
    missing = [n for n in names if n not in _FIELD_SORTS]
    if missing:
        raise KeyError(f"no sort declared for fields {missing} of {cls.__name__}")
    return Constructor(
        name or cls.__name__, tuple((n, _FIELD_SORTS[n]) for n in names)
    )


# -- constructor side-constraints --------------------------------------------


def _cookie_entry_constraint(fields: dict[str, Var]) -> Term:
    # A stored __Host- cookie is host-only (no Domain attribute), rooted at
    # "/" and Secure.
    return app("is$Host", fields["cj_name"]) >> conj(
        eq(fields["cj_domain"], app("none")),
        eq(fields["cj_path"], Lit(M.ROOT_PATH)),
        eq(fields["cj_secure"], Lit(True)),
    )


def _response_constraint(fields: dict[str, Var]) -> Term:
    code = fields["rp_code"]
    return conj(
        disj(eq(code, Lit(200)), eq(code, Lit(204)), eq(code, Lit(302)), eq(code, Lit(307))),
        disj(eq(code, Lit(302)), eq(code, Lit(307)))
        >> neg(eq(app("rp_hd_location", fields["rp_headers"]), app("none"))),
        eq(code, Lit(204)) >> eq(fields["rp_body"], Lit(0)),
    )


def _with_constraint(c: Constructor, make: Callable[[dict[str, Var]], Term]) -> Constructor:
    fvars = {n: Var(n, s) for n, s in c.fields}
    return Constructor(c.name, c.fields, make(fvars))


# -- datatype declarations ----------------------------------------------------

_RECORD_CLASSES: list[tuple[AdtSort, type]] = [
    (DOMAIN, M.Domain),
    (URL, M.URL),
    (TT_DIRECTIVES, M.TTDirectives),
    (CSP, M.CSP),
    (COOKIE_PAIR, M.CookiePair),
    (SET_COOKIE, M.SetCookie),
    (REQUEST_HEADERS, M.RequestHeaders),
    (REQUEST, M.Request),
    (RESPONSE_HEADERS, M.ResponseHeaders),
    (DOM_PATH, M.DOMPath),
    (DOCUMENT, M.Document),
    (WINDOW, M.Window),
    (CORR, M.Corr),
    (REDIRECT_INFO, M.RedirectInfo),
    (PENDING_NAV, M.PendingNav),
    (HIST_ENTRY, M.HistEntry),
    (FETCH_ENGINE, M.FetchEngine),
    (KNOWLEDGE_ENTRY, M.KnowledgeEntry),
    (STORAGE_ENTRY, M.StorageEntry),
    (CACHE_ENTRY, M.CacheEntry),
    (BLOB_ENTRY, M.BlobEntry),
    (CONFIG, M.Config),
    (GLOBAL, M.Global),
    (STATE, M.BrowserState),
]

_SUM_CLASSES: list[tuple[AdtSort, list[type]]] = [
    (ORIGIN, [M.OpaqueOrigin, M.TupleOrigin]),
    (SOURCE_EXPR, [M.SrcNone, M.SrcSelf, M.SrcOrigin, M.SrcAny]),
    (TT_POLICY, [M.TTPolicyAbsent, M.TTPolicyNone, M.TTPolicyNamed]),
    (COOKIE_NAME, [M.Plain, M.SecurePrefix, M.Host]),
    (HTML_ELEMENT, [M.HTMLFrame, M.HTMLScript, M.HTMLImage, M.HTMLForm]),
    (DOM_ELEMENT, [M.DOMFrame, M.DOMScript, M.DOMImage, M.DOMForm]),
    (SELECTOR, [M.DOMTopLevel, M.DOMIndex]),
    (EMITTER, [
        M.EmitterTopLevel, M.EmitterSubresource, M.EmitterScript,
        M.EmitterForm, M.EmitterWorker, M.EmitterCORSPreflight,
    ]),
    (KNOWLEDGE_ITEM, [M.SOCookie, M.SOHeader, M.SOStorage, M.SOMessage, M.SOTrusted]),
    (PAYLOAD, [M.RawString, M.Trusted]),
    (EVENT, list(M.Event.__args__)),  # type: ignore[attr-defined]
]

_ENUM_CLASSES: list[tuple[AdtSort, type[enum.Enum]]] = [
    (PROTOCOL, M.Protocol),
    (METHOD, M.Method),
    (PROVENANCE, M.Provenance),
]

_MK_NAME = {cls: f"Mk{cls.__name__}" for _, cls in _RECORD_CLASSES}


def _build() -> tuple[list[DataDef], ValueRegistry]:
    defs: list[DataDef] = [
        DataDef(
            "option",
            ("a",),
            (
                Constructor("none", ()),
                Constructor("some", (("some_val", SortVar("a")),)),
            ),
        ),
        DataDef(
            "lst",
            ("a",),
            (
                Constructor("nil", ()),
                Constructor(
                    "cons",
                    (("lst_head", SortVar("a")), ("lst_tail", AdtSort("lst", (SortVar("a"),)))),
                ),
            ),
        ),
    ]
    reg = ValueRegistry()
    for sort, ecls in _ENUM_CLASSES:
        defs.append(
            DataDef(sort.name, (), tuple(Constructor(m.name, ()) for m in ecls))
        )
        reg.register_enum(ecls)
    for sort, cls in _RECORD_CLASSES:
        ctor = _ctor_from_class(cls, _MK_NAME[cls])
        defs.append(DataDef(sort.name, (), (ctor,)))
        reg.register_class(ctor.name, cls, [n for n, _ in ctor.fields])
    # CookieEntry carries the Host-prefix storage constraint.
    entry_ctor = _with_constraint(
        _ctor_from_class(M.CookieEntry, "MkCookieEntry"), _cookie_entry_constraint
    )
    defs.append(DataDef(COOKIE_ENTRY.name, (), (entry_ctor,)))
    reg.register_class("MkCookieEntry", M.CookieEntry, [n for n, _ in entry_ctor.fields])
    # Response constraints: redirect codes carry Location, 204 has no body.
    resp_ctor = _with_constraint(_ctor_from_class(M.Response, "MkResponse"), _response_constraint)
    defs.append(DataDef(RESPONSE.name, (), (resp_ctor,)))
    reg.register_class("MkResponse", M.Response, [n for n, _ in resp_ctor.fields])
    for sort, classes in _SUM_CLASSES:
        ctors = tuple(_ctor_from_class(c) for c in classes)
        defs.append(DataDef(sort.name, (), ctors))
        for c, ct in zip(classes, ctors):
            reg.register_class(ct.name, c, [n for n, _ in ct.fields])
    return defs, reg


_DEFS, REGISTRY = _build()
DATATYPE_DEFS: tuple[DataDef, ...] = tuple(_DEFS)


class _CtorNamespace:
    """Constructor application sugar: ``C.EvRequest(em, rq, corr)``."""

    def __getattr__(self, name: str) -> Callable[..., App]:
        def build(*args: Term) -> App:
            return App(name, tuple(args))

        return build


C = _CtorNamespace()


def mk(cls_or_name: Any, *args: Term) -> App:
    """Constructor application for a record class: ``mk(M.Window, ...)``."""
    if isinstance(cls_or_name, str):
        return App(cls_or_name, tuple(args))
    return App(_MK_NAME.get(cls_or_name, cls_or_name.__name__), tuple(args))


# -- value <-> term conversion -------------------------------------------------


def value_to_term(v: Any, sort: Sort) -> Term:
    """Sort-directed conversion of a runtime value into a literal term."""
    if sort == INT or sort == BOOL:
        return Lit(v)
    if isinstance(sort, AdtSort) and sort.name == "option":
        if v is None:
            return App("none", ())
        return App("some", (value_to_term(v, sort.args[0]),))
    if isinstance(sort, AdtSort) and sort.name == "lst":
        out: Term = App("nil", ())
        for item in reversed(v):
            out = App("cons", (value_to_term(item, sort.args[0]), out))
        return out
    if isinstance(sort, ArraySort):
        return App(
            "mkarray", tuple(value_to_term(item, sort.elem) for item in v)
        )
    if isinstance(v, enum.Enum):
        return App(v.name, ())
    ctor = REGISTRY.ctor_of_value(v)
    if ctor is None:
        raise TypeError(f"cannot convert value {v!r} to a term")
    field_names = REGISTRY.ctor_fields[ctor]
    return App(
        ctor,
        tuple(
            value_to_term(getattr(v, n), _FIELD_SORTS[n]) for n in field_names
        ),
    )


def sort_of_field(name: str) -> Sort:
    return _FIELD_SORTS[name]
