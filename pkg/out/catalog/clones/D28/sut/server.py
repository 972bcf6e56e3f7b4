"""Run the system as a standalone HTTP server.

    python -m <package>.server --port 8080 --fixture baseline-small \
        --log-file activity.log --activation-log activation.log
"""
from __future__ import annotations

import argparse
import sys
import threading
from socketserver import ThreadingMixIn
from wsgiref.simple_server import WSGIRequestHandler, WSGIServer, make_server

from . import activation, core
from .app import UisApp


class _ThreadingWSGIServer(ThreadingMixIn, WSGIServer):
    daemon_threads = True
    allow_reuse_address = True


class _QuietHandler(WSGIRequestHandler):
    def log_message(self, format, *args):
        pass


def create_app(fixture="baseline-small", log_file=None, log_level="INFO", activation_log=None, testbed=True) -> UisApp:
    activation.configure(activation_log)
    store = core.Store(core.load_fixture(fixture) if fixture else None)
    return UisApp(store, log_target=log_file, log_level=log_level, testbed=testbed)


def serve(app: UisApp, host: str = "127.0.0.1", port: int = 0):
    """Bind ``app`` and return the (not yet serving) server."""
    return make_server(host, port, app, server_class=_ThreadingWSGIServer, handler_class=_QuietHandler)


def start_in_thread(app: UisApp, host: str = "127.0.0.1", port: int = 0):
    server = serve(app, host, port)
    thread = threading.Thread(target=server.serve_forever, name=f"uis-{server.server_port}", daemon=True)
    thread.start()
    return server, thread


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="University information system server")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--fixture", default="baseline-small", help="shipped fixture id or path to a fixture file")
    parser.add_argument("--log-file", default=None, help="activity log file (default: stderr)")
    parser.add_argument("--log-level", default="INFO")
    parser.add_argument("--activation-log", default="activation.log")
    parser.add_argument("--no-testbed", dest="testbed", action="store_false", help="disable /testbed/* endpoints")
    args = parser.parse_args(argv)
    app = create_app(args.fixture, args.log_file or sys.stderr, args.log_level, args.activation_log, args.testbed)
    try:
        server = serve(app, args.host, args.port)
    except OSError as exc:
        print(f"cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 3
    print(f"ready http://{args.host}:{server.server_port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        app.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
