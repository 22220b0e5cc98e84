"""Domain vocabulary of the browser model.

Every type the interpreter, the invariant catalog and the rule compiler
share is defined here as an immutable value: configuration flags, the
global environment with its symbolic pools, URLs and origins, the window
tree, network requests and responses, cookies, emitters, events and the
evolving browser state.

Identifiers (domains, paths, bodies, keys, values, policy names) are small
integers rather than strings: the solver backend needs finite enumerable
sorts, and nothing in the checked invariants depends on string syntax.
Traces are stored newest-first (head of the list is the latest event).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union


class Protocol(enum.Enum):
    HTTP = "HTTP"
    HTTPS = "HTTPS"
    DATA = "DATA"
    BLOB = "BLOB"
    ABOUT = "ABOUT"


class Method(enum.Enum):
    GET = "GET"
    POST = "POST"
    PUT = "PUT"
    DELETE = "DELETE"
    OPTIONS = "OPTIONS"


class Provenance(enum.Enum):
    """Where a rendered response came from."""

    NETWORK = "NETWORK"
    WORKER_SYNTHETIC = "WORKER_SYNTHETIC"
    WORKER_CACHE = "WORKER_CACHE"


LOCAL_SCHEMES = (Protocol.DATA, Protocol.BLOB, Protocol.ABOUT)

# Path identifier reserved for "/": __Host- cookies must use it.
ROOT_PATH = 0


# ---------------------------------------------------------------------------
# Origins and URLs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    """A host name; ``dm_parent`` links a subdomain to its registrable
    suffix (one level is all the modeled attacks need)."""

    dm_name: int
    dm_parent: Optional[int] = None

    def ancestors(self) -> tuple["Domain", ...]:
        if self.dm_parent is None:
            return (self,)
        return (self, Domain(self.dm_parent))


@dataclass(frozen=True)
class OpaqueOrigin:
    pass


@dataclass(frozen=True)
class TupleOrigin:
    org_protocol: Protocol
    org_host: Domain


Origin = Union[OpaqueOrigin, TupleOrigin]


@dataclass(frozen=True)
class URL:
    url_protocol: Protocol
    url_host: Optional[Domain]
    url_path: int
    url_payload: Optional[int] = None  # blob/data payload identifier


def origin_of_url(u: URL) -> Optional[TupleOrigin]:
    """Tuple origin of a URL; absent for local schemes and hostless URLs."""
    if u.url_protocol in (Protocol.HTTP, Protocol.HTTPS) and u.url_host is not None:
        return TupleOrigin(u.url_protocol, u.url_host)
    return None


def is_local_scheme(u: URL) -> bool:
    return u.url_protocol in LOCAL_SCHEMES


ABOUT_BLANK = URL(Protocol.ABOUT, None, ROOT_PATH, None)


# ---------------------------------------------------------------------------
# Content Security Policy and Trusted Types directives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SrcNone:
    pass


@dataclass(frozen=True)
class SrcSelf:
    pass


@dataclass(frozen=True)
class SrcOrigin:
    src_origin: TupleOrigin


@dataclass(frozen=True)
class SrcAny:
    pass


SourceExpr = Union[SrcNone, SrcSelf, SrcOrigin, SrcAny]


@dataclass(frozen=True)
class TTPolicyAbsent:
    """trusted-types directive without a policy list."""


@dataclass(frozen=True)
class TTPolicyNone:
    """trusted-types 'none': no policy may be created."""


@dataclass(frozen=True)
class TTPolicyNamed:
    tt_name: int


TTPolicy = Union[TTPolicyAbsent, TTPolicyNone, TTPolicyNamed]


@dataclass(frozen=True)
class TTDirectives:
    tt_policy: TTPolicy
    tt_require_for_script: bool


@dataclass(frozen=True)
class CSP:
    csp_script_src: Optional[SourceExpr]
    csp_trusted_types: Optional[TTDirectives]


def csp_src_match(src: SourceExpr, page_origin: TupleOrigin, script_url: URL) -> bool:
    """Does the source expression allow loading ``script_url`` on a page of
    origin ``page_origin``?  'none' allows nothing; '*' allows everything."""
    if isinstance(src, SrcNone):
        return False
    if isinstance(src, SrcAny):
        return True
    target = origin_of_url(script_url)
    if isinstance(src, SrcSelf):
        return target == page_origin
    return target == src.src_origin


# ---------------------------------------------------------------------------
# Cookies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Plain:
    plain_name: int


@dataclass(frozen=True)
class SecurePrefix:
    secure_prefix_name: int


@dataclass(frozen=True)
class Host:
    host_prefix_name: int


CookieName = Union[Plain, SecurePrefix, Host]


@dataclass(frozen=True)
class CookiePair:
    ck_name: CookieName
    ck_value: int


@dataclass(frozen=True)
class SetCookie:
    """The payload of a Set-Cookie header or a document.cookie write."""

    sc_name: CookieName
    sc_value: int
    sc_domain: Optional[Domain]
    sc_path: int
    sc_secure: bool
    sc_http_only: bool
    sc_same_site: int
    sc_reg_domain: Domain  # host the cookie was registered by


@dataclass(frozen=True)
class CookieEntry:
    """A stored jar entry.  Host-prefixed entries never carry a Domain
    attribute, always use the root path and are always Secure; the storage
    rules enforce this, and the well-formedness relation mirrors it."""

    cj_reg_domain: Domain
    cj_name: CookieName
    cj_value: int
    cj_domain: Optional[Domain]
    cj_path: int
    cj_secure: bool
    cj_http_only: bool
    cj_same_site: int


# ---------------------------------------------------------------------------
# Requests and responses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RequestHeaders:
    rq_hd_origin: Optional[Origin]
    rq_hd_cookie: Optional[CookiePair]
    rq_hd_referer: Optional[URL]


@dataclass(frozen=True)
class Request:
    rq_method: Method
    rq_url: URL
    rq_headers: RequestHeaders
    rq_body: int


@dataclass(frozen=True)
class ResponseHeaders:
    rp_hd_content_type: Optional[int]
    rp_hd_set_cookie: Optional[SetCookie]
    rp_hd_location: Optional[URL]
    rp_hd_referrer_policy: Optional[int]
    rp_hd_csp: Optional[CSP]
    rp_hd_acao: Optional[Origin]  # Access-Control-Allow-Origin


EMPTY_RESPONSE_HEADERS = ResponseHeaders(None, None, None, None, None, None)


@dataclass(frozen=True)
class Response:
    """Redirect codes must carry a Location header and 204 must have an
    empty body; ``wf$Response`` enforces both."""

    rp_code: int  # one of 200, 204, 302, 307
    rp_url: URL
    rp_headers: ResponseHeaders
    rp_body: int


# ---------------------------------------------------------------------------
# Page structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HTMLFrame:
    html_frame_src: int  # URL pool index


@dataclass(frozen=True)
class HTMLScript:
    html_script_src: int


@dataclass(frozen=True)
class HTMLImage:
    html_image_src: int


@dataclass(frozen=True)
class HTMLForm:
    html_form_method: Method
    html_form_action: int


HTMLElement = Union[HTMLFrame, HTMLScript, HTMLImage, HTMLForm]


@dataclass(frozen=True)
class DOMFrame:
    dom_frame_window: int  # window slot of the framed document


@dataclass(frozen=True)
class DOMScript:
    dom_script_id: int
    dom_script_src: URL


@dataclass(frozen=True)
class DOMImage:
    pass


@dataclass(frozen=True)
class DOMForm:
    pass


DOMElement = Union[DOMFrame, DOMScript, DOMImage, DOMForm]


@dataclass(frozen=True)
class DOMTopLevel:
    pass


@dataclass(frozen=True)
class DOMIndex:
    dom_index: int


Selector = Union[DOMTopLevel, DOMIndex]


@dataclass(frozen=True)
class DOMPath:
    """A unique path in the rendered tree: frame element indices from the
    root (outermost first), then either the whole document or one element."""

    dp_levels: tuple[int, ...]
    dp_selector: Selector


TOP = DOMPath((), DOMTopLevel())


def dompath(levels: Sequence[int], selector: Optional[int] = None) -> DOMPath:
    sel: Selector = DOMTopLevel() if selector is None else DOMIndex(selector)
    return DOMPath(tuple(levels), sel)


@dataclass(frozen=True)
class Document:
    dc_html: tuple[Optional[HTMLElement], ...]
    dc_dom: tuple[Optional[DOMElement], ...]
    dc_headers: ResponseHeaders
    dc_domain: Optional[Domain]  # document.domain relaxation value


@dataclass(frozen=True)
class Window:
    wd_location: URL
    wd_document: Document
    wd_parent: Optional[int]  # absent for the top-level window
    wd_initiator: Optional[int]  # slot of the navigation's source context

    @property
    def wd_effective_domain(self) -> Optional[Domain]:
        """Runtime value of the document.domain setter."""
        return self.wd_document.dc_domain


# ---------------------------------------------------------------------------
# Fetch engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmitterTopLevel:
    pass


@dataclass(frozen=True)
class EmitterSubresource:
    em_sub_path: DOMPath


@dataclass(frozen=True)
class EmitterScript:
    em_script_id: int
    em_script_path: DOMPath


@dataclass(frozen=True)
class EmitterForm:
    em_form_path: DOMPath


@dataclass(frozen=True)
class EmitterWorker:
    pass


@dataclass(frozen=True)
class EmitterCORSPreflight:
    em_preflight_for: int  # emitter pool index of the authorized emitter


Emitter = Union[
    EmitterTopLevel,
    EmitterSubresource,
    EmitterScript,
    EmitterForm,
    EmitterWorker,
    EmitterCORSPreflight,
]


@dataclass(frozen=True)
class Corr:
    """Correlation id: ``corr_hops`` counts redirect re-emissions of the
    same logical fetch (lineage: new corr = old corr + one hop)."""

    corr_base: int
    corr_hops: int = 0


@dataclass(frozen=True)
class RedirectInfo:
    """Computed when a 30x response is accepted; consumed by the re-emitted
    request."""

    rd_location: URL
    rd_method: Method
    rd_body: int
    rd_origin: Optional[Origin]
    rd_redirector: TupleOrigin
    rd_emitter: Emitter
    rd_corr: Corr


@dataclass(frozen=True)
class PendingNav:
    """A frame navigation requested by a script, awaiting its fetch."""

    nav_path: DOMPath
    nav_url: URL
    nav_initiator: int


@dataclass(frozen=True)
class HistEntry:
    h_corr: Corr
    h_emitter: Emitter
    h_rq_idx: int
    h_rp_idx: int


@dataclass(frozen=True)
class FetchEngine:
    ft_request: Optional[Request]
    ft_emitter: Optional[Emitter]
    ft_corr: Optional[Corr]
    ft_response: Optional[Response]
    ft_rq_idx: Optional[int]  # URL pool index of the pending request
    ft_source: Optional[TupleOrigin]  # origin that generated the request
    ft_redirect: Optional[RedirectInfo]
    ft_pending_nav: Optional[PendingNav]
    ft_next_corr: int
    ft_history: tuple[Optional[HistEntry], ...]


# ---------------------------------------------------------------------------
# Script knowledge
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SOCookie:
    so_cookie_idx: int
    so_cookie_pair: CookiePair


@dataclass(frozen=True)
class SOHeader:
    so_header_corr: Corr


@dataclass(frozen=True)
class SOStorage:
    so_storage_key: int
    so_storage_value: int


@dataclass(frozen=True)
class SOMessage:
    so_msg_origin: TupleOrigin


@dataclass(frozen=True)
class SOTrusted:
    """Holds a Trusted Types object created in the given realm (window
    slot); consumed by DOM sink updates."""

    so_trusted_realm: int


KnowledgeItem = Union[SOCookie, SOHeader, SOStorage, SOMessage, SOTrusted]


@dataclass(frozen=True)
class KnowledgeEntry:
    k_script: int
    k_item: KnowledgeItem


@dataclass(frozen=True)
class StorageEntry:
    ls_origin: TupleOrigin
    ls_key: int
    ls_value: int


@dataclass(frozen=True)
class CacheEntry:
    ca_rq_idx: int
    ca_rp_idx: int


@dataclass(frozen=True)
class BlobEntry:
    bl_url_idx: int
    bl_creator: int  # window slot that called createObjectURL


# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RawString:
    pass


@dataclass(frozen=True)
class Trusted:
    tr_realm: int


Payload = Union[RawString, Trusted]


@dataclass(frozen=True)
class EvRequest:
    ev_rq_emitter: Emitter
    ev_rq_request: Request
    ev_rq_corr: Corr


@dataclass(frozen=True)
class EvResponse:
    ev_rp_response: Response
    ev_rp_corr: Corr
    ev_rp_provenance: Provenance


@dataclass(frozen=True)
class EvDOMUpdate:
    ev_dom_path: DOMPath


@dataclass(frozen=True)
class EvScriptUpdateHTML:
    ev_uh_script: DOMPath
    ev_uh_target: DOMPath
    ev_uh_snapshot: Window  # target window at update time
    ev_uh_payload: Payload


@dataclass(frozen=True)
class EvScriptSetCookie:
    ev_sc_script: DOMPath
    ev_sc_target: DOMPath
    ev_sc_idx: int
    ev_sc_cookie: SetCookie


@dataclass(frozen=True)
class EvScriptReadCookie:
    ev_rc_script: DOMPath
    ev_rc_idx: int


@dataclass(frozen=True)
class EvScriptReadResponseHeaders:
    ev_rh_script: DOMPath
    ev_rh_corr: Corr


@dataclass(frozen=True)
class EvScriptNavigateFrame:
    ev_nf_script: DOMPath
    ev_nf_frame: DOMPath
    ev_nf_url: URL


@dataclass(frozen=True)
class EvScriptSetDomain:
    ev_sd_script: DOMPath
    ev_sd_domain: Domain


@dataclass(frozen=True)
class EvScriptPostMessage:
    ev_pm_sender: DOMPath
    ev_pm_receiver: DOMPath
    ev_pm_validates: bool


@dataclass(frozen=True)
class EvScriptCreateBlobUrl:
    ev_cb_script: DOMPath
    ev_cb_url_idx: int


@dataclass(frozen=True)
class EvScriptStorageSet:
    ev_ss_script: DOMPath
    ev_ss_key: int
    ev_ss_value: int


@dataclass(frozen=True)
class EvScriptStorageGet:
    ev_sg_script: DOMPath
    ev_sg_key: int


@dataclass(frozen=True)
class EvScriptCacheUpdate:
    ev_cu_script: DOMPath
    ev_cu_rq_idx: int
    ev_cu_rp_idx: int


@dataclass(frozen=True)
class EvWorkerCacheUpdate:
    ev_wc_rq_idx: int
    ev_wc_rp_idx: int


@dataclass(frozen=True)
class EvScriptCreateTrustedHTML:
    ev_ct_script: DOMPath
    ev_ct_realm: int


Event = Union[
    EvRequest,
    EvResponse,
    EvDOMUpdate,
    EvScriptUpdateHTML,
    EvScriptSetCookie,
    EvScriptReadCookie,
    EvScriptReadResponseHeaders,
    EvScriptNavigateFrame,
    EvScriptSetDomain,
    EvScriptPostMessage,
    EvScriptCreateBlobUrl,
    EvScriptStorageSet,
    EvScriptStorageGet,
    EvScriptCacheUpdate,
    EvWorkerCacheUpdate,
    EvScriptCreateTrustedHTML,
]


# ---------------------------------------------------------------------------
# Configuration, global environment and browser state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Config:
    """Twelve independent platform switches; defaults model the current Web
    platform."""

    domain_relaxation: bool = True
    origin_wide_csp: bool = False
    worker_allow_synthetic_responses: bool = True
    script_update_cache: bool = True
    restrict_tt_to_secure_contexts: bool = False
    tt_strict_realm_check: bool = False
    csp_inherit_local_from_initiator: bool = True
    csp_inherit_blob_from_creator: bool = False
    forbidden_headers: bool = True
    origin_header_on_cross_origin_redirect: bool = False
    earlyhtml5_form_methods: bool = False
    redirect_preflight_requests: bool = False


CONFIG_FLAGS = tuple(f.name for f in Config.__dataclass_fields__.values())


@dataclass(frozen=True)
class Global:
    """Immutable environment of one run.

    ``urls`` and ``responses`` are parallel pools: ``responses[j]`` is the
    response the network produces for ``urls[j]`` (the server oracle), and
    ``windows[j]`` is the page template served at ``urls[j]`` (only its
    ``dc_html`` matters).  Duplicate URL rows model servers that can emit
    several responses for one URL; the network always answers with the
    first row, the rest are reachable through worker caches or synthetic
    responses only.
    """

    config: Config
    windows: tuple[Window, ...]
    responses: tuple[Response, ...]
    emitters: tuple[Emitter, ...]
    urls: tuple[URL, ...]
    origin_count: int


@dataclass(frozen=True)
class BrowserState:
    st_windows: tuple[Optional[Window], ...]
    st_fetch_engine: FetchEngine
    st_cookiejar: tuple[Optional[CookieEntry], ...]
    st_local_storage: tuple[Optional[StorageEntry], ...]
    st_cache: tuple[Optional[CacheEntry], ...]
    st_blob_store: tuple[Optional[BlobEntry], ...]
    st_script_knowledge: tuple[Optional[KnowledgeEntry], ...]

    @property
    def st_window(self) -> Window:
        """Root of the window tree."""
        root = self.st_windows[0]
        assert root is not None
        return root


@dataclass(frozen=True)
class Scale:
    """Fixed capacities of the state arrays and default pool sizes."""

    windows: int = 5
    doc_elems: int = 5
    jar: int = 5
    storage: int = 5
    cache: int = 5
    blobs: int = 5
    knowledge: int = 5
    history: int = 5

    def uniform(self) -> Optional[int]:
        sizes = {
            self.windows, self.doc_elems, self.jar, self.storage,
            self.cache, self.blobs, self.knowledge, self.history,
        }
        return sizes.pop() if len(sizes) == 1 else None

    @staticmethod
    def of(n: int) -> "Scale":
        return Scale(n, n, n, n, n, n, n, n)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def resolve_dompath(
    state_or_windows: Union[BrowserState, Sequence[Optional[Window]]],
    path: DOMPath,
    root: int = 0,
) -> Optional[tuple[Window, Optional[DOMElement]]]:
    """Resolve a DOM path against the window tree.

    Descends rendered frame elements along ``dp_levels`` starting from the
    root window, then returns the reached window together with the element
    named by a ``DOMIndex`` selector (or ``None`` for ``DOMTopLevel``).
    Any missing frame, window or element makes the whole resolution fail.
    """
    windows: Sequence[Optional[Window]]
    if isinstance(state_or_windows, BrowserState):
        windows = state_or_windows.st_windows
    else:
        windows = state_or_windows
    if root >= len(windows) or windows[root] is None:
        return None
    w = windows[root]
    for lv in path.dp_levels:
        assert w is not None
        doc = w.wd_document
        if not (0 <= lv < len(doc.dc_dom)):
            return None
        elem = doc.dc_dom[lv]
        if not isinstance(elem, DOMFrame):
            return None
        slot = elem.dom_frame_window
        if not (0 <= slot < len(windows)) or windows[slot] is None:
            return None
        w = windows[slot]
    assert w is not None
    if isinstance(path.dp_selector, DOMTopLevel):
        return (w, None)
    i = path.dp_selector.dom_index
    if not (0 <= i < len(w.wd_document.dc_dom)):
        return None
    elem = w.wd_document.dc_dom[i]
    if elem is None:
        return None
    return (w, elem)


def resolve_window_slot(
    windows: Sequence[Optional[Window]], levels: Sequence[int], root: int = 0
) -> Optional[int]:
    """Slot index of the window reached by descending frame levels."""
    slot = root
    if slot >= len(windows) or windows[slot] is None:
        return None
    for lv in levels:
        w = windows[slot]
        assert w is not None
        doc = w.wd_document
        if not (0 <= lv < len(doc.dc_dom)):
            return None
        elem = doc.dc_dom[lv]
        if not isinstance(elem, DOMFrame):
            return None
        slot = elem.dom_frame_window
        if not (0 <= slot < len(windows)) or windows[slot] is None:
            return None
    return slot


def effective_domain(w: Window) -> Optional[Domain]:
    """Domain used for DOM access checks: document.domain if relaxed, the
    URL host otherwise."""
    if w.wd_document.dc_domain is not None:
        return w.wd_document.dc_domain
    return w.wd_location.url_host


# ---------------------------------------------------------------------------
# Step rejection reasons (interpreter diagnostics)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GuardFailed:
    rule: str


@dataclass(frozen=True)
class UnresolvedPath:
    pass


@dataclass(frozen=True)
class PoolExhausted:
    pool: str


@dataclass(frozen=True)
class ConfigForbids:
    flag: str


StepError = Union[GuardFailed, UnresolvedPath, PoolExhausted, ConfigForbids]
