"""Landing-page retrieval and tolerant script extraction.

Pages are fetched over TLS with a hard byte cap; the HTML scanner is
non-validating so truncated or malformed markup still yields best-effort
script items.
"""

import socket
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional
from urllib.parse import urljoin, urlsplit

import requests

from .errors import (ConnectFailure, DnsFailure, FetchError, FetchTimeout,
                     TlsFailure, TooManyRedirects)
from .filters import ScriptItem

DEFAULT_TRUNCATE = 262144  # 256 KiB
DEFAULT_TIMEOUT = 15.0
MAX_REDIRECT_HOPS = 5

SOURCE_FETCHED = "fetched"
SOURCE_CAPTURE = "capture"


@dataclass(frozen=True)
class PageDocument:
    domain: str
    body: bytes
    truncated_at: Optional[int] = None
    source: str = SOURCE_FETCHED
    final_url: str = ""


@dataclass
class FetchOutcome:
    domain: str
    document: Optional[PageDocument] = None
    error_kind: str = ""
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.document is not None


# -- script extraction ---------------------------------------------------------

_WS = " \t\n\r\f"


def _parse_open_tag(text: str, start: int) -> tuple[dict, int]:
    """Parse attributes of a tag opened at ``start`` (index of '<').

    Returns (attributes, index just past '>'), or (attributes, len(text))
    when the buffer ends inside the tag.
    """
    attrs: dict[str, str] = {}
    i = start
    while i < len(text) and text[i] not in _WS and text[i] != ">":
        i += 1
    while i < len(text):
        while i < len(text) and text[i] in _WS:
            i += 1
        if i >= len(text):
            return attrs, i
        if text[i] == ">":
            return attrs, i + 1
        if text[i] == "/":
            i += 1
            continue
        name_start = i
        while i < len(text) and text[i] not in _WS and text[i] not in "=>/":
            i += 1
        name = text[name_start:i].lower()
        while i < len(text) and text[i] in _WS:
            i += 1
        value = ""
        if i < len(text) and text[i] == "=":
            i += 1
            while i < len(text) and text[i] in _WS:
                i += 1
            if i < len(text) and text[i] in "\"'":
                quote = text[i]
                i += 1
                value_start = i
                while i < len(text) and text[i] != quote:
                    i += 1
                value = text[value_start:i]
                i += 1
            else:
                value_start = i
                while i < len(text) and text[i] not in _WS and text[i] != ">":
                    i += 1
                value = text[value_start:i]
        if name:
            attrs.setdefault(name, value)
    return attrs, i


def extract_scripts(doc: PageDocument) -> list[ScriptItem]:
    """Scan for script open tags, their src attribute, and inline bodies up
    to the matching close tag or end of buffer (partial bodies included)."""
    text = doc.body.decode("latin-1")
    lower = text.lower()
    items = []
    pos = 0
    while True:
        start = lower.find("<script", pos)
        if start < 0:
            break
        after = start + len("<script")
        if after < len(text) and lower[after] not in _WS + "/>":
            pos = after
            continue
        attrs, body_start = _parse_open_tag(text, start)
        src = attrs.get("src") or None
        inline: Optional[str] = None
        if body_start >= len(text):
            pos = len(text)
        else:
            close = lower.find("</script", body_start)
            if close < 0:
                inline = text[body_start:]
                pos = len(text)
            else:
                inline = text[body_start:close]
                end = lower.find(">", close)
                pos = len(text) if end < 0 else end + 1
        if src is None and inline is None:
            inline = ""
        items.append(ScriptItem(position=start, src=src, inline_code=inline))
    return items


# -- fetching ------------------------------------------------------------------

def _classify_request_error(exc: Exception) -> FetchError:
    if isinstance(exc, requests.exceptions.SSLError):
        return TlsFailure(str(exc))
    if isinstance(exc, requests.exceptions.Timeout):
        return FetchTimeout(str(exc))
    text = str(exc)
    if "getaddrinfo" in text or "NameResolution" in text:
        return DnsFailure(text)
    return ConnectFailure(text)


def _read_capped(response: requests.Response, limit: int) -> tuple[bytes, Optional[int]]:
    chunks = []
    total = 0
    for chunk in response.iter_content(chunk_size=16384):
        chunks.append(chunk)
        total += len(chunk)
        if total > limit:
            response.close()
            return b"".join(chunks)[:limit], limit
    return b"".join(chunks), None


def fetch_landing(domain: str, limit: int = DEFAULT_TRUNCATE, *,
                  timeout: float = DEFAULT_TIMEOUT, scheme: str = "https",
                  prefix: str = "www.", port: Optional[int] = None,
                  max_redirects: int = MAX_REDIRECT_HOPS,
                  session: Optional[requests.Session] = None) -> PageDocument:
    """Fetch the landing page of a bare domain, stopping after ``limit``
    bytes. Same-host redirects are followed up to ``max_redirects`` hops.

    Raises DnsFailure, TlsFailure, FetchTimeout, ConnectFailure or
    TooManyRedirects; callers doing batches record these per domain.
    """
    host = prefix + domain
    try:
        socket.getaddrinfo(host, None)
    except socket.gaierror as exc:
        raise DnsFailure("%s: %s" % (host, exc))

    netloc = host if port is None else "%s:%d" % (host, port)
    url = "%s://%s/" % (scheme, netloc)
    own = session or requests.Session()
    try:
        for _ in range(max_redirects + 1):
            try:
                response = own.get(url, stream=True, allow_redirects=False,
                                   timeout=timeout)
            except requests.exceptions.RequestException as exc:
                raise _classify_request_error(exc)
            if response.is_redirect:
                location = response.headers.get("Location", "")
                response.close()
                if not location:
                    raise ConnectFailure("redirect without Location from %s" % url)
                next_url = urljoin(url, location)
                if (urlsplit(next_url).hostname or "").lower() != host.lower():
                    # cross-host redirect: record the destination, do not follow
                    url = next_url
                    break
                url = next_url
                continue
            body, truncated = _read_capped(response, limit)
            return PageDocument(domain=domain, body=body, truncated_at=truncated,
                                source=SOURCE_FETCHED, final_url=url)
        else:
            raise TooManyRedirects("%s: more than %d hops" % (domain, max_redirects))
    finally:
        if session is None:
            own.close()
    # terminal cross-host redirect: return the redirect response's (empty) body
    return PageDocument(domain=domain, body=b"", truncated_at=None,
                        source=SOURCE_FETCHED, final_url=url)


def fetch_batch(domains: list[str], limit: int = DEFAULT_TRUNCATE,
                workers: int = 8, **kwargs) -> list[FetchOutcome]:
    """Fetch many landing pages under a bounded worker pool. Per-domain
    failures are recorded, never fatal."""

    def one(domain: str) -> FetchOutcome:
        try:
            doc = fetch_landing(domain, limit, **kwargs)
            return FetchOutcome(domain=domain, document=doc)
        except FetchError as exc:
            return FetchOutcome(domain=domain,
                                error_kind=type(exc).__name__, error=str(exc))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(one, domains))
