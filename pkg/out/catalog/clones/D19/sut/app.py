"""HTTP front end: routing, sessions, activity logging and testbed endpoints."""
from __future__ import annotations
from .activation import record_activation as _tb_activate

import json
import logging
import secrets
import threading
from dataclasses import dataclass, field
from http import HTTPStatus
from http.cookies import SimpleCookie
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from . import context, core, kvlog
from .pages import render_page

PACKAGE_DIR = Path(__file__).resolve().parent
MANIFEST_FILE = PACKAGE_DIR / "manifest.json"
SESSION_COOKIE = "uis_session"
BASELINE_MANIFEST = {"clone_id": "baseline", "defect_ids": [], "patched_files": [], "sites": []}


@dataclass
class Response:
    status: int
    body: bytes = b""
    headers: list[tuple[str, str]] = field(default_factory=list)
    view_id: str | None = None

    def header(self, name: str) -> str | None:
        for key, value in self.headers:
            if key.lower() == name.lower():
                return value
        return None


@dataclass
class Request:
    method: str
    path: str
    query: dict[str, str]
    form: dict[str, str]
    headers: dict[str, str]
    session: core.Session | None
    session_token: str | None


class _RunContextFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        if isinstance(record.msg, dict):
            record.msg = {
                "run_id": context.current_run_id.get(),
                "path": context.current_path.get(),
                "actor": context.current_actor.get(),
                **record.msg,
            }
        return True


def read_manifest() -> dict:
    if MANIFEST_FILE.is_file():
        with open(MANIFEST_FILE, encoding="utf-8") as fh:
            return json.load(fh)
    return dict(BASELINE_MANIFEST)


class UisApp:
    """WSGI application wrapping one :class:`core.Store`."""

    def __init__(self, store: core.Store | None = None, *, log_target=None, log_level="INFO", testbed=True):
        self.logger = kvlog.open_logger(f"{__name__}.activity.{id(self):x}", log_target, log_level)
        self.logger.addFilter(_RunContextFilter())
        self.store = store or core.Store()
        self.store._logger = self.logger
        self.testbed = testbed
        self._sessions: dict[str, core.Session] = {}
        self._sessions_lock = threading.Lock()
        self.routes = {
            ("GET", "/"): self.home,
            ("GET", "/subjects"): self.public_view("subject-list"),
            ("GET", "/lecturers"): self.public_view("lecturer-list"),
            ("GET", "/terms"): self.public_view("term-list"),
            ("GET", "/login"): self.login_form,
            ("POST", "/login"): self.login,
            ("POST", "/logout"): self.logout,
            ("GET", "/profile"): self.profile,
            ("GET", "/student"): self.role_home("student"),
            ("GET", "/student/my-subjects"): self.role_view("student", "my-subjects"),
            ("GET", "/student/available-subjects"): self.role_view("student", "available-subjects"),
            ("GET", "/student/my-terms"): self.role_view("student", "my-terms"),
            ("GET", "/student/available-terms"): self.role_view("student", "available-terms"),
            ("GET", "/student/my-grades"): self.role_view("student", "my-grades"),
            ("POST", "/student/enroll"): self.enroll,
            ("POST", "/student/cancel"): self.cancel,
            ("POST", "/student/register"): self.register_term,
            ("GET", "/lecturer"): self.role_home("lecturer"),
            ("GET", "/lecturer/subjects"): self.role_view("lecturer", "taught-subjects"),
            ("GET", "/lecturer/terms"): self.role_view("lecturer", "lecturer-terms"),
            ("GET", "/lecturer/terms/new"): self.new_term_form,
            ("POST", "/lecturer/terms/new"): self.create_term,
            ("GET", "/lecturer/participants"): self.role_view("lecturer", "term-participants"),
            ("POST", "/lecturer/grade"): self.grade,
        }
        if testbed:
            self.routes.update(
                {
                    ("GET", "/testbed/health"): self.testbed_health,
                    ("GET", "/testbed/defects"): self.testbed_defects,
                    ("GET", "/testbed/dump"): self.testbed_dump,
                    ("POST", "/testbed/reset"): self.testbed_reset,
                    ("GET", "/testbed/reset"): self.testbed_reset,
                }
            )

    # -- plumbing -----------------------------------------------------------

    def __call__(self, environ, start_response):
        try:
            length = int(environ.get("CONTENT_LENGTH") or 0)
        except ValueError:
            length = 0
        body = environ["wsgi.input"].read(length) if length else b""
        headers = {
            key[5:].replace("_", "-").title(): value for key, value in environ.items() if key.startswith("HTTP_")
        }
        if environ.get("CONTENT_TYPE"):
            headers["Content-Type"] = environ["CONTENT_TYPE"]
        path = environ.get("PATH_INFO") or "/"
        if environ.get("QUERY_STRING"):
            path = f"{path}?{environ['QUERY_STRING']}"
        response = self.handle_request(environ["REQUEST_METHOD"], path, headers, body)
        status = HTTPStatus(response.status)
        start_response(f"{status.value} {status.phrase}", response.headers + [("Content-Length", str(len(response.body)))])
        return [response.body]

    def handle_request(self, method: str, path: str, headers: dict | None = None, body: bytes = b"") -> Response:
        headers = {k.lower(): v for k, v in (headers or {}).items()}
        parts = urlsplit(path)
        token = None
        if "cookie" in headers:
            cookie = SimpleCookie()
            cookie.load(headers["cookie"])
            if SESSION_COOKIE in cookie:
                token = cookie[SESSION_COOKIE].value
        with self._sessions_lock:
            session = self._sessions.get(token) if token else None
        form = {}
        if method == "POST" and body:
            form = {k: v[0] for k, v in parse_qs(body.decode("utf-8"), keep_blank_values=True).items()}
        request = Request(
            method=method,
            path=parts.path,
            query={k: v[0] for k, v in parse_qs(parts.query).items()},
            form=form,
            headers=headers,
            session=session,
            session_token=token,
        )
        tokens = [
            context.current_run_id.set(headers.get("x-run-id", "")),
            context.current_path.set(parts.path),
            context.current_actor.set(session.user_id if session else "anonymous"),
        ]
        try:
            self.logger.debug({"event": "request_start", "method": method})
            handler = self.routes.get((method, parts.path))
            if handler is None:
                response = self._page(request, "not-found", {"message": f"No route for {method} {parts.path}"}, 404)
            else:
                response = handler(request)
            self.logger.info({"event": "request", "method": method, "status": response.status, "view": response.view_id or ""})
            return response
        finally:
            for var, tok in zip((context.current_run_id, context.current_path, context.current_actor), tokens):
                var.reset(tok)

    def _actor_name(self, session):
        if session is None:
            return None
        try:
            return self.store.user(session.user_id).display_name
        except core.NotFound:
            return None

    def _page(self, request: Request, view_id: str, data=None, status=200) -> Response:
        session = request.session
        page = render_page(
            view_id, data, actor_name=self._actor_name(session), role=session.role if session else None
        )
        return Response(status, page.html.encode("utf-8"), [("Content-Type", "text/html; charset=utf-8")], view_id)

    @staticmethod
    def _redirect(location: str, extra_headers=()) -> Response:
        return Response(303, b"", [("Location", location), *extra_headers])

    def _guard(self, request: Request, role: str | None):
        """Return a response that stops the request, or None to continue."""
        if request.session is None:
            return self._redirect("/login")
        if role is not None and request.session.role != role:
            return self._page(request, "forbidden", {"message": f"This page is for {role}s only."}, 403)
        return None

    def _action_error(self, request: Request, exc: core.DomainError) -> Response:
        status = 404 if isinstance(exc, core.NotFound) else 409
        back = f"/{request.session.role}" if request.session else "/"
        self.logger.info({"event": "action_rejected", "error": exc.code})
        return self._page(request, "action-error", {"error": exc.code, "message": exc.message, "back": back}, status)

    # -- public pages -------------------------------------------------------

    def home(self, request):
        return self._page(request, "home")

    def public_view(self, view_id):
        def handler(request):
            data = self.store.query_view(request.session, view_id)
            return self._page(request, view_id, data.rows)

        return handler

    def login_form(self, request):
        return self._page(request, "login")

    def login(self, request):
        username = request.form.get("username", "")
        try:
            session = self.store.authenticate(username, request.form.get("password", ""))
        except core.InvalidCredentials:
            self.logger.info({"event": "login_failed"})
            return self._page(request, "login", {"error": "Invalid username or password.", "username": username})
        token = secrets.token_hex(16)
        with self._sessions_lock:
            self._sessions[token] = session
        cookie = f"{SESSION_COOKIE}={token}; Path=/; HttpOnly"
        _tb_activate("D19", "login-redirect")
        return self._redirect("/student", [("Set-Cookie", cookie)])

    def logout(self, request):
        if request.session_token:
            with self._sessions_lock:
                self._sessions.pop(request.session_token, None)
        return self._redirect("/", [("Set-Cookie", f"{SESSION_COOKIE}=; Path=/; Max-Age=0")])

    def profile(self, request):
        stop = self._guard(request, None)
        if stop:
            return stop
        data = self.store.query_view(request.session, "profile")
        return self._page(request, "profile", {"rows": data.rows})

    # -- role pages ---------------------------------------------------------

    def role_home(self, role):
        def handler(request):
            return self._guard(request, role) or self._page(request, f"{role}-home")

        return handler

    def role_view(self, role, view_id):
        def handler(request):
            stop = self._guard(request, role)
            if stop:
                return stop
            data = self.store.query_view(request.session, view_id)
            return self._page(request, view_id, data.rows)

        return handler

    def enroll(self, request):
        stop = self._guard(request, "student")
        if stop:
            return stop
        try:
            self.store.enroll_subject(request.session.user_id, request.form.get("subject_id", ""))
        except core.DomainError as exc:
            return self._action_error(request, exc)
        return self._redirect("/student/my-subjects")

    def cancel(self, request):
        stop = self._guard(request, "student")
        if stop:
            return stop
        try:
            self.store.cancel_enrollment(request.session.user_id, request.form.get("subject_id", ""))
        except core.DomainError as exc:
            return self._action_error(request, exc)
        return self._redirect("/student/my-subjects")

    def register_term(self, request):
        stop = self._guard(request, "student")
        if stop:
            return stop
        try:
            self.store.register_exam_term(request.session.user_id, request.form.get("term_id", ""))
        except core.DomainError as exc:
            return self._action_error(request, exc)
        return self._redirect("/student/my-terms")

    def _new_term_page(self, request, form=None, error=None, status=200):
        subjects = self.store.query_view(request.session, "taught-subjects").rows
        return self._page(request, "new-term-form", {"subjects": subjects, "form": form or {}, "error": error}, status)

    def new_term_form(self, request):
        return self._guard(request, "lecturer") or self._new_term_page(request)

    def create_term(self, request):
        stop = self._guard(request, "lecturer")
        if stop:
            return stop
        form = request.form
        try:
            self.store.create_exam_term(
                request.session.user_id, form.get("subject_id", ""), form.get("starts_at", ""), form.get("max_participants", "")
            )
        except core.DomainError as exc:
            self.logger.info({"event": "action_rejected", "error": exc.code})
            return self._new_term_page(request, form, exc.code, 400)
        return self._redirect("/lecturer/terms")

    def grade(self, request):
        stop = self._guard(request, "lecturer")
        if stop:
            return stop
        form = request.form
        try:
            self.store.set_grade(
                request.session.user_id, form.get("term_id", ""), form.get("student_id", ""), form.get("value", "")
            )
        except core.DomainError as exc:
            return self._action_error(request, exc)
        return self._redirect("/lecturer/participants")

    # -- testbed ------------------------------------------------------------

    @staticmethod
    def _json(payload, status=200) -> Response:
        body = json.dumps(payload, indent=2, sort_keys=True).encode("utf-8")
        return Response(status, body, [("Content-Type", "application/json")])

    def testbed_health(self, request):
        return self._json({"status": "ok"})

    def testbed_defects(self, request):
        return self._json(read_manifest())

    def testbed_dump(self, request):
        return self._json(self.store.dump())

    def testbed_reset(self, request):
        ref = request.query.get("fixture") or request.form.get("fixture")
        if not ref:
            return self._json({"error": "missing fixture parameter"}, 400)
        try:
            dataset = core.load_fixture(ref)
            self.store.reset_fixture(dataset)
        except core.NotFound as exc:
            return self._json({"error": str(exc)}, 404)
        except core.InconsistentFixture as exc:
            return self._json({"error": str(exc)}, 422)
        with self._sessions_lock:
            self._sessions.clear()
        return self._json({"fixture_id": dataset.fixture_id})

    def close(self) -> None:
        kvlog.close_logger(self.logger)
