"""Builders for concrete global environments.

The solver explores symbolic pools; the interpreter, the BFS oracle and
the tests need concrete ones.  ``WorldBuilder`` keeps the three parallel
pools (URL, server response, page template) consistent and canonicalizes
domains: names 0..3 are registrable hosts, 4..7 are subdomains of
``name - 4``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from . import model as M


def host(name: int) -> M.Domain:
    """Canonical domain: 0..3 are roots, 4..7 subdomains ((4,5) under 0,
    (6,7) under 1)."""
    return M.Domain(name, (name - 4) // 2 if name >= 4 else None)


def https(host_name: int, path: int = 0) -> M.URL:
    return M.URL(M.Protocol.HTTPS, host(host_name), path, None)


def http(host_name: int, path: int = 0) -> M.URL:
    return M.URL(M.Protocol.HTTP, host(host_name), path, None)


def data_url(payload: int = 0, path: int = 0) -> M.URL:
    return M.URL(M.Protocol.DATA, None, path, payload)


def blob_url(payload: int = 0, path: int = 0) -> M.URL:
    return M.URL(M.Protocol.BLOB, None, path, payload)


def headers(
    set_cookie: Optional[M.SetCookie] = None,
    location: Optional[M.URL] = None,
    csp: Optional[M.CSP] = None,
    acao: Optional[M.Origin] = None,
    content_type: Optional[int] = None,
    referrer_policy: Optional[int] = None,
) -> M.ResponseHeaders:
    return M.ResponseHeaders(
        content_type, set_cookie, location, referrer_policy, csp, acao
    )


def csp_script_src(src: M.SourceExpr) -> M.CSP:
    return M.CSP(src, None)


def csp_trusted_types(
    policy: M.TTPolicy, require: bool = True, script_src: Optional[M.SourceExpr] = None
) -> M.CSP:
    return M.CSP(script_src, M.TTDirectives(policy, require))


@dataclass
class WorldBuilder:
    """Accumulates parallel pool rows and emitters for one Global."""

    doc_elems: int = 3
    origin_count: int = 2
    config: M.Config = field(default_factory=M.Config)
    _urls: list[M.URL] = field(default_factory=list)
    _responses: list[M.Response] = field(default_factory=list)
    _templates: list[tuple[Optional[M.HTMLElement], ...]] = field(default_factory=list)
    _emitters: list[M.Emitter] = field(default_factory=list)

    def row(
        self,
        url: M.URL,
        *,
        html: Sequence[Optional[M.HTMLElement]] = (),
        hdrs: Optional[M.ResponseHeaders] = None,
        code: int = 200,
        body: int = 0,
    ) -> int:
        """Add one pool row: the server answers ``url`` with this response
        and serves this page template.  Returns the row index."""
        elems = tuple(html) + (None,) * (self.doc_elems - len(html))
        if len(elems) != self.doc_elems:
            raise ValueError("too many template elements for doc_elems")
        self._urls.append(url)
        self._responses.append(
            M.Response(code, url, hdrs or M.EMPTY_RESPONSE_HEADERS, body)
        )
        self._templates.append(elems)
        return len(self._urls) - 1

    def emitter(self, em: M.Emitter) -> int:
        self._emitters.append(em)
        return len(self._emitters) - 1

    def build(self) -> M.Global:
        if not self._urls:
            raise ValueError("a world needs at least one pool row")
        blank_doc = M.Document(
            (None,) * self.doc_elems,
            (None,) * self.doc_elems,
            M.EMPTY_RESPONSE_HEADERS,
            None,
        )
        windows = tuple(
            M.Window(
                u,
                M.Document(
                    tpl, (None,) * self.doc_elems, M.EMPTY_RESPONSE_HEADERS, None
                ),
                None,
                None,
            )
            for u, tpl in zip(self._urls, self._templates)
        )
        emitters = tuple(self._emitters) or (M.EmitterTopLevel(),)
        return M.Global(
            self.config,
            windows,
            tuple(self._responses),
            emitters,
            tuple(self._urls),
            self.origin_count,
        )

    def with_config(self, **flags: bool) -> "WorldBuilder":
        self.config = replace(self.config, **flags)
        return self


def set_cookie(
    name: M.CookieName,
    value: int = 1,
    domain: Optional[M.Domain] = None,
    path: int = M.ROOT_PATH,
    secure: bool = False,
    http_only: bool = False,
    same_site: int = 0,
    reg_domain: Optional[M.Domain] = None,
) -> M.SetCookie:
    """A Set-Cookie payload; the registrar defaults to a placeholder that
    callers aligned with the serving URL should override."""
    return M.SetCookie(
        name, value, domain, path, secure, http_only, same_site,
        reg_domain if reg_domain is not None else host(0),
    )
