import pytest

from minerscope.errors import DnsFailure, TooManyRedirects
from minerscope.pages import (PageDocument, extract_scripts, fetch_batch,
                              fetch_landing)


class TestExtractScripts:
    def doc(self, body: bytes) -> PageDocument:
        return PageDocument(domain="example.test", body=body)

    def test_src_script(self):
        items = extract_scripts(self.doc(b'<script src="a.js"></script>'))
        assert len(items) == 1
        assert items[0].src == "a.js"
        assert items[0].inline_code == ""

    def test_empty_body(self):
        assert extract_scripts(self.doc(b"")) == []

    def test_inline_body(self):
        items = extract_scripts(self.doc(b"<script>var x = 1;</script>"))
        assert items[0].inline_code == "var x = 1;"
        assert items[0].src is None

    def test_truncated_inline_script_returns_partial(self):
        body = b'<html><script>CoinHive.Anonymous("abc'
        items = extract_scripts(self.doc(body))
        assert len(items) == 1
        assert items[0].inline_code == 'CoinHive.Anonymous("abc'

    def test_positions_strictly_increasing(self):
        body = (b'<script src="1.js"></script> text '
                b"<SCRIPT>inline()</SCRIPT><script src='3.js'></script>")
        items = extract_scripts(self.doc(body))
        positions = [i.position for i in items]
        assert positions == sorted(positions)
        assert len(set(positions)) == len(positions)
        assert len(items) == 3

    def test_unquoted_and_single_quoted_attributes(self):
        items = extract_scripts(self.doc(
            b"<script type=text/javascript src=lib/a.js async></script>"
            b"<script src='b.js'></script>"))
        assert [i.src for i in items] == ["lib/a.js", "b.js"]

    def test_script_prefix_word_is_not_a_tag(self):
        assert extract_scripts(self.doc(b"<scripture>text</scripture>")) == []

    def test_unterminated_open_tag(self):
        items = extract_scripts(self.doc(b'<script src="a.js"'))
        assert len(items) == 1
        assert items[0].src == "a.js"
        assert items[0].inline_code is None


def _fetch(server, **kwargs):
    return fetch_landing("127.0.0.1", scheme="http", prefix="",
                         port=server.server_address[1], timeout=5.0, **kwargs)


class TestFetchLanding:
    def test_small_body_not_truncated(self, web_server):
        doc = _fetch(web_server)
        assert doc.body == b"0123456789"
        assert doc.truncated_at is None

    def test_stream_truncated_at_limit(self, web_server):
        web_server.mode = "big"
        doc = _fetch(web_server, limit=262144)
        assert len(doc.body) == 262144
        assert doc.truncated_at == 262144

    def test_small_limit(self, web_server):
        web_server.mode = "big"
        doc = _fetch(web_server, limit=1000)
        assert len(doc.body) == 1000
        assert doc.truncated_at == 1000

    def test_same_host_redirect_followed(self, web_server):
        web_server.mode = "redirect"
        doc = _fetch(web_server)
        assert b"after-redirect.js" in doc.body
        assert doc.final_url.endswith("/landing")

    def test_redirect_loop_rejected(self, web_server):
        web_server.mode = "loop"
        with pytest.raises(TooManyRedirects):
            _fetch(web_server)

    def test_cross_host_redirect_not_followed(self, web_server):
        web_server.mode = "away"
        doc = _fetch(web_server)
        assert doc.body == b""
        assert "elsewhere.invalid" in doc.final_url

    def test_dns_failure(self):
        with pytest.raises(DnsFailure):
            fetch_landing("no-such-host-here.invalid", timeout=5.0)

    def test_batch_continues_past_failures(self, web_server):
        port = web_server.server_address[1]
        outcomes = fetch_batch(["127.0.0.1", "no-such-host-here.invalid"],
                               scheme="http", prefix="", port=port,
                               workers=2, timeout=5.0)
        by_domain = {o.domain: o for o in outcomes}
        assert by_domain["127.0.0.1"].ok
        bad = by_domain["no-such-host-here.invalid"]
        assert not bad.ok
        assert bad.error_kind == "DnsFailure"
