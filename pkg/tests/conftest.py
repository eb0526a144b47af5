import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest


class FixtureHandler(BaseHTTPRequestHandler):
    """Modal test web server: behavior switches on server.mode."""

    def log_message(self, *args):
        pass

    def _body(self, body: bytes, status: int = 200):
        self.send_response(status)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        mode = self.server.mode
        if mode == "plain":
            self._body(b"0123456789")
        elif mode == "big":
            self._body(b"x" * 300_000)
        elif mode == "scripted":
            self._body(b'<html><head><script '
                       b'src="https://coinhive.com/lib/coinhive.min.js">'
                       b"</script></head></html>")
        elif mode == "redirect":
            if self.path == "/":
                self.send_response(302)
                self.send_header("Location", "/landing")
                self.end_headers()
            else:
                self._body(b'<script src="after-redirect.js"></script>')
        elif mode == "loop":
            self.send_response(302)
            self.send_header("Location", self.path + "r")
            self.end_headers()
        elif mode == "away":
            self.send_response(302)
            self.send_header("Location", "http://elsewhere.invalid/")
            self.end_headers()


@pytest.fixture()
def web_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), FixtureHandler)
    server.mode = "plain"
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    server.server_close()
