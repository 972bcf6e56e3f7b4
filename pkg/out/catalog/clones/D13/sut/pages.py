"""Server-rendered pages.

Element id scheme (a stable contract for page objects):

* singletons: ``<view>-<element>`` (``login-username``, ``lecturer-terms-new``)
* tables: ``<entity>-table``; rows: ``<entity>-row-<id>``;
  cells: ``<entity>-row-<id>-<field>``; row controls:
  ``<entity>-row-<id>-<action>``
* navigation: ``nav-<target>``

Every element carrying an id also carries ``data-kind="active"`` (controls
and fields bound to data) or ``data-kind="passive"`` (static structure).
Pages are emitted as well-formed XHTML so they parse with a strict XML parser.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from html import escape

from .core import GRADE_VALUES, UnknownView


class DuplicateElementId(AssertionError):
    pass


@dataclass
class Page:
    view_id: str
    html: str
    element_index: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Table:
    entity: str
    title: str
    columns: tuple[tuple[str, str], ...]
    empty_text: str


TABLES = {
    "subject-list": Table(
        "subject",
        "Subjects",
        (("name", "Name"), ("credits", "Credits"), ("capacity", "Capacity"), ("enrolled", "Enrolled"), ("lecturers", "Lecturers")),
        "No subjects are offered.",
    ),
    "lecturer-list": Table(
        "lecturer", "Lecturers", (("name", "Name"), ("email", "E-mail"), ("subjects", "Subjects")), "No lecturers are listed."
    ),
    "term-list": Table(
        "term",
        "Exam schedule",
        (("subject", "Subject"), ("starts_at", "Starts at"), ("capacity", "Capacity"), ("registered", "Registered")),
        "No exam terms are scheduled.",
    ),
    "my-subjects": Table(
        "enrollment",
        "My subjects",
        (("name", "Name"), ("credits", "Credits"), ("lecturers", "Lecturers")),
        "You are not enrolled in any subject.",
    ),
    "available-subjects": Table(
        "subject",
        "Available subjects",
        (("name", "Name"), ("credits", "Credits"), ("free", "Free places")),
        "There are no subjects left to enroll in.",
    ),
    "my-terms": Table(
        "registration",
        "My exam terms",
        (("subject", "Subject"), ("starts_at", "Starts at"), ("grade", "Grade")),
        "You are not registered on any exam term.",
    ),
    "available-terms": Table(
        "term",
        "Available exam terms",
        (("subject", "Subject"), ("starts_at", "Starts at"), ("free", "Free seats")),
        "No exam terms are open to you.",
    ),
    "my-grades": Table(
        "grade",
        "My grades",
        (("subject", "Subject"), ("value", "Grade"), ("graded_by", "Graded by")),
        "You have no grades yet.",
    ),
    "taught-subjects": Table(
        "subject",
        "Subjects I teach",
        (("name", "Name"), ("credits", "Credits"), ("capacity", "Capacity"), ("enrolled", "Enrolled")),
        "You do not teach any subject.",
    ),
    "lecturer-terms": Table(
        "term",
        "My exam terms",
        (("subject", "Subject"), ("starts_at", "Starts at"), ("capacity", "Capacity"), ("registered", "Registered")),
        "You have no exam terms.",
    ),
    "term-participants": Table(
        "participant",
        "Exam participants",
        (("term", "Term"), ("student", "Student"), ("grade", "Grade")),
        "Nobody is registered on your exam terms.",
    ),
}

PROFILE_FIELDS = (("username", "Username"), ("name", "Name"), ("email", "E-mail"), ("role", "Role"))

STUDENT_HOME_LINKS = (
    ("my-subjects", "/student/my-subjects", "My subjects"),
    ("available-subjects", "/student/available-subjects", "Enroll in a subject"),
    ("my-terms", "/student/my-terms", "My exam terms"),
    ("available-terms", "/student/available-terms", "Register for an exam"),
    ("my-grades", "/student/my-grades", "My grades"),
)
LECTURER_HOME_LINKS = (
    ("subjects", "/lecturer/subjects", "Subjects I teach"),
    ("terms", "/lecturer/terms", "My exam terms"),
    ("participants", "/lecturer/participants", "Exam participants"),
)
PUBLIC_HOME_LINKS = (
    ("subjects", "/subjects", "Subjects"),
    ("lecturers", "/lecturers", "Lecturers"),
    ("terms", "/terms", "Exam schedule"),
    ("login", "/login", "Log in"),
)

PAGE_VIEWS = frozenset(TABLES) | {
    "home",
    "login",
    "student-home",
    "lecturer-home",
    "profile",
    "new-term-form",
    "action-error",
    "forbidden",
    "not-found",
}


class _Builder:
    def __init__(self, view_id: str):
        self.view_id = view_id
        self.parts: list[str] = []
        self.index: dict[str, str] = {}

    def _claim(self, element_id: str, kind: str) -> str:
        if element_id in self.index:
            raise DuplicateElementId(f"duplicate element id {element_id!r} on view {self.view_id!r}")
        self.index[element_id] = kind
        return f' id="{escape(element_id)}" data-kind="{kind}"'

    def open(self, tag: str, element_id: str | None = None, kind: str = "passive", **attrs) -> None:
        ident = self._claim(element_id, kind) if element_id else ""
        self.parts.append(f"<{tag}{ident}{_attrs(attrs)}>")

    def close(self, tag: str) -> None:
        self.parts.append(f"</{tag}>")

    def leaf(self, tag: str, element_id: str | None, text="", kind: str = "active", **attrs) -> None:
        ident = self._claim(element_id, kind) if element_id else ""
        self.parts.append(f"<{tag}{ident}{_attrs(attrs)}>{escape(str(text))}</{tag}>")

    def void(self, tag: str, element_id: str, kind: str = "active", **attrs) -> None:
        self.parts.append(f"<{tag}{self._claim(element_id, kind)}{_attrs(attrs)}/>")

    def post_button(self, element_id: str, action: str, label: str, **hidden) -> None:
        self.open("form", f"{element_id}-form", "active", method="post", action=action)
        for name, value in hidden.items():
            self.void("input", f"{element_id}-{name.replace('_', '-')}", type="hidden", name=name, value=value)
        self.leaf("button", element_id, label, type="submit")
        self.close("form")


def _attrs(attrs: dict) -> str:
    out = []
    for key, value in attrs.items():
        if value is None:
            continue
        out.append(f' {key.rstrip("_").replace("_", "-")}="{escape(str(value))}"')
    return "".join(out)


def _nav(b: _Builder, actor_name: str | None, role: str | None) -> None:
    b.open("nav", "nav", "passive")
    b.leaf("a", "nav-home", "Home", href="/")
    b.leaf("a", "nav-subjects", "Subjects", href="/subjects")
    b.leaf("a", "nav-lecturers", "Lecturers", href="/lecturers")
    b.leaf("a", "nav-terms", "Exam schedule", href="/terms")
    if role is None:
        b.leaf("a", "nav-login", "Log in", href="/login")
    else:
        b.leaf("span", "nav-user", actor_name)
        b.leaf("a", "nav-role-home", "My desk", href=f"/{role}")
        b.leaf("a", "nav-profile", "Profile", href="/profile")
        b.post_button("nav-logout", "/logout", "Log out")
    b.close("nav")


def _table(b: _Builder, view_id: str, rows: list[dict], controls=None) -> None:
    spec = TABLES[view_id]
    b.leaf("h1", f"{view_id}-title", spec.title, kind="passive")
    if not rows:
        b.leaf("p", f"{view_id}-empty", spec.empty_text, kind="passive")
        return
    b.open("table", f"{spec.entity}-table", "passive")
    b.parts.append("<thead><tr>")
    for _, label in spec.columns:
        b.parts.append(f"<th>{escape(label)}</th>")
    if controls:
        b.parts.append("<th>Action</th>")
    b.parts.append("</tr></thead><tbody>")
    for row in rows:
        row_id = f"{spec.entity}-row-{row['id']}"
        b.open("tr", row_id, "active")
        for column, _ in spec.columns:
            b.leaf("td", f"{row_id}-{column}", row[column])
        if controls:
            b.parts.append("<td>")
            controls(b, row_id, row)
            b.parts.append("</td>")
        b.close("tr")
    b.parts.append("</tbody>")
    b.close("table")


def _enroll_control(b, row_id, row):
    b.post_button(f"{row_id}-enroll", "/student/enroll", "Enroll", subject_id=row["id"])


def _cancel_control(b, row_id, row):
    b.post_button(f"{row_id}-cancel", "/student/cancel", "Cancel enrollment", subject_id=row["id"])


def _register_control(b, row_id, row):
    b.post_button(f"{row_id}-register", "/student/register", "Register", term_id=row["id"])


def _grade_control(b, row_id, row):
    if row["grade"] != "-":
        return
    b.open("form", f"{row_id}-grade-form", "active", method="post", action="/lecturer/grade")
    b.void("input", f"{row_id}-grade-term-id", type="hidden", name="term_id", value=row["term"])
    b.void("input", f"{row_id}-grade-student-id", type="hidden", name="student_id", value=row["student_id"])
    b.open("select", f"{row_id}-value", "active", name="value")
    for value in GRADE_VALUES:
        b.leaf("option", None, value, value=value)
    b.close("select")
    b.leaf("button", f"{row_id}-grade-submit", "Grade", type="submit")
    b.close("form")


ROW_CONTROLS = {
    "my-subjects": _cancel_control,
    "available-subjects": _enroll_control,
    "available-terms": _register_control,
    "term-participants": _grade_control,
}


def render_page(view_id: str, view_data=None, *, actor_name: str | None = None, role: str | None = None) -> Page:
    """Render one page.

    ``view_data`` is the view's row list for table views, and a dict of
    page parameters for the remaining pages (``error``, ``message``,
    ``subjects``, ``form``).
    """
    if view_id not in PAGE_VIEWS:
        raise UnknownView(f"unknown view {view_id!r}")
    b = _Builder(view_id)
    _nav(b, actor_name, role)
    b.open("main", f"{view_id}-main", "passive")
    params = view_data if isinstance(view_data, dict) else {}
    if view_id in TABLES:
        _table(b, view_id, list(view_data or []), ROW_CONTROLS.get(view_id))
        if view_id == "lecturer-terms":
            b.leaf("a", "lecturer-terms-new", "Schedule a new exam term", href="/lecturer/terms/new")
    elif view_id == "home":
        b.leaf("h1", "home-title", "University information system", kind="passive")
        for name, href, label in PUBLIC_HOME_LINKS:
            b.leaf("a", f"home-{name}", label, href=href)
    elif view_id == "login":
        _login(b, params)
    elif view_id == "student-home":
        b.leaf("h1", "student-home-title", "Student desk", kind="passive")
        b.leaf("p", "student-home-welcome", f"Welcome, {actor_name}")
        for name, href, label in STUDENT_HOME_LINKS:
            b.leaf("a", f"student-home-{name}", label, href=href)
    elif view_id == "lecturer-home":
        b.leaf("h1", "lecturer-home-title", "Lecturer desk", kind="passive")
        b.leaf("p", "lecturer-home-welcome", f"Welcome, {actor_name}")
        for name, href, label in LECTURER_HOME_LINKS:
            b.leaf("a", f"lecturer-home-{name}", label, href=href)
    elif view_id == "profile":
        b.leaf("h1", "profile-title", "Profile", kind="passive")
        rows = params.get("rows") or []
        row = rows[0] if rows else {}
        b.open("dl", "profile-details", "passive")
        for name, label in PROFILE_FIELDS:
            b.parts.append(f"<dt>{escape(label)}</dt>")
            b.leaf("dd", f"profile-{name}", row.get(name, ""))
        b.close("dl")
    elif view_id == "new-term-form":
        _new_term_form(b, params)
    elif view_id == "action-error":
        b.leaf("h1", "action-error-title", "The action could not be completed", kind="passive")
        b.leaf("p", "action-error-code", params.get("error", ""))
        b.leaf("p", "action-error-message", params.get("message", ""))
        b.leaf("a", "action-error-back", "Back", href=params.get("back", "/"))
    elif view_id == "forbidden":
        b.leaf("h1", "forbidden-title", "Forbidden", kind="passive")
        b.leaf("p", "forbidden-message", params.get("message", "You may not open this page."))
    elif view_id == "not-found":
        b.leaf("h1", "not-found-title", "Not found", kind="passive")
        b.leaf("p", "not-found-message", params.get("message", "No such page."))
    b.close("main")
    body = "".join(b.parts)
    title = escape(TABLES[view_id].title if view_id in TABLES else view_id)
    html = (
        '<!DOCTYPE html>\n<html xmlns="http://www.w3.org/1999/xhtml" lang="en">'
        f'<head><meta charset="utf-8"/><title>{title}</title></head>'
        f'<body data-view="{escape(view_id)}">{body}</body></html>\n'
    )
    return Page(view_id, html, dict(b.index))


def _login(b: _Builder, params: dict) -> None:
    b.leaf("h1", "login-title", "Log in", kind="passive")
    if params.get("error"):
        b.leaf("p", "login-error", params["error"])
    b.open("form", "login-form", "active", method="post", action="/login")
    b.void("input", "login-username", type="text", name="username", value=params.get("username", ""))
    b.void("input", "login-password", type="password", name="password", value="")
    b.leaf("button", "login-submit", "Log in", type="submit")
    b.close("form")


def _new_term_form(b: _Builder, params: dict) -> None:
    form = params.get("form", {})
    b.leaf("h1", "new-term-form-title", "Schedule an exam term", kind="passive")
    if params.get("error"):
        b.leaf("p", "new-term-form-error", params["error"])
    b.open("form", "new-term-form-form", "active", method="post", action="/lecturer/terms/new")
    b.open("select", "new-term-form-subject", "active", name="subject_id")
    for subject in params.get("subjects", []):
        selected = "selected" if subject["id"] == form.get("subject_id") else None
        b.leaf("option", f"subject-option-{subject['id']}", subject["name"], value=subject["id"], selected=selected)
    b.close("select")
    b.void("input", "new-term-form-starts-at", type="text", name="starts_at", value=form.get("starts_at", ""))
    b.void("input", "new-term-form-capacity", type="text", name="max_participants", value=form.get("max_participants", ""))
    b.leaf("button", "new-term-form-submit", "Create", type="submit")
    b.close("form")
    b.leaf("a", "new-term-form-cancel", "Cancel", href="/lecturer/terms")
