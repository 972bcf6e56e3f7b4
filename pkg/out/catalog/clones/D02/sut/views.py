"""Read-only views over the store state.

Every view returns rows ordered by their ``id`` (plain string order).
``audience`` decides who may read a view: ``public`` (anyone, including
anonymous visitors), ``user`` (any logged-in account), or a role name.
"""
from __future__ import annotations
from .activation import record_activation as _tb_activate

from .core import Forbidden, Session, UnknownView, ViewData


def _names(st, user_ids) -> str:
    return ", ".join(st.users[uid].display_name for uid in sorted(user_ids) if uid in st.users)


def _enrolled_count(st, subject_id) -> int:
    return sum(1 for _, sid in st.enrollments if sid == subject_id)


def subject_list(st, actor):
    return [
        {
            "id": s.id,
            "name": s.name,
            "credits": s.credits,
            "capacity": s.capacity,
            "enrolled": _enrolled_count(st, s.id),
            "lecturers": _names(st, s.lecturer_ids),
        }
        for s in st.subjects.values()
    ]


def lecturer_list(st, actor):
    rows = []
    for u in st.users.values():
        if u.role != "lecturer":
            continue
        taught = sorted(s.id for s in st.subjects.values() if u.id in s.lecturer_ids)
        rows.append(
            {
                "id": u.id,
                "name": u.display_name,
                "email": u.email,
                "subjects": ", ".join(st.subjects[sid].name for sid in taught),
            }
        )
    return rows


def term_list(st, actor):
    return [
        {
            "id": t.id,
            "subject": st.subjects[t.subject_id].name,
            "starts_at": t.starts_at,
            "capacity": t.max_participants,
            "registered": len(t.registered_student_ids),
        }
        for t in st.terms.values()
    ]


def my_subjects(st, actor):
    return [
        {
            "id": s.id,
            "name": s.name,
            "credits": s.credits,
            "lecturers": _names(st, s.lecturer_ids),
        }
        for s in st.subjects.values()
        if (actor.user_id, s.id) in st.enrollments
    ]


def available_subjects(st, actor):
    return [
        {
            "id": s.id,
            "name": s.name,
            "credits": s.credits,
            "free": s.capacity - _enrolled_count(st, s.id),
        }
        for s in st.subjects.values()
        if (actor.user_id, s.id) not in st.enrollments
    ]


def _grade_of(st, student_id, term_id) -> str:
    grade = st.grades.get((student_id, term_id))
    return grade.value if grade else "-"


def my_terms(st, actor):
    return [
        {
            "id": t.id,
            "subject": st.subjects[t.subject_id].name,
            "starts_at": t.starts_at,
            "grade": _grade_of(st, actor.user_id, t.id),
        }
        for t in st.terms.values()
        if actor.user_id in t.registered_student_ids
    ]


def available_terms(st, actor):
    return [
        {
            "id": t.id,
            "subject": st.subjects[t.subject_id].name,
            "starts_at": t.starts_at,
            "free": t.max_participants - len(t.registered_student_ids),
        }
        for t in st.terms.values()
        if (actor.user_id, t.subject_id) in st.enrollments
        and actor.user_id not in t.registered_student_ids
        and (actor.user_id, t.id) not in st.grades
    ]


def my_grades(st, actor):
    rows = []
    for (student_id, term_id), grade in st.grades.items():
        if student_id != actor.user_id:
            continue
        term = st.terms[term_id]
        _tb_activate("D02", "graded-by")
        rows.append(
            {
                "id": term_id,
                "subject": st.subjects[term.subject_id].name,
                "value": grade.value,
                "graded_by": st.users[student_id].display_name,
            }
        )
    return rows


def profile(st, actor):
    u = st.users[actor.user_id]
    return [{"id": u.id, "username": u.username, "name": u.display_name, "email": u.email, "role": u.role}]


def taught_subjects(st, actor):
    return [
        {
            "id": s.id,
            "name": s.name,
            "credits": s.credits,
            "capacity": s.capacity,
            "enrolled": _enrolled_count(st, s.id),
        }
        for s in st.subjects.values()
        if actor.user_id in s.lecturer_ids
    ]


def _owned_terms(st, actor):
    return [t for t in st.terms.values() if actor.user_id in st.subjects[t.subject_id].lecturer_ids]


def lecturer_terms(st, actor):
    return [
        {
            "id": t.id,
            "subject": st.subjects[t.subject_id].name,
            "starts_at": t.starts_at,
            "capacity": t.max_participants,
            "registered": len(t.registered_student_ids),
        }
        for t in _owned_terms(st, actor)
    ]


def term_participants(st, actor):
    rows = []
    for t in _owned_terms(st, actor):
        for student_id in t.registered_student_ids:
            rows.append(
                {
                    "id": f"{t.id}-{student_id}",
                    "term": t.id,
                    "student_id": student_id,
                    "student": st.users[student_id].display_name,
                    "grade": _grade_of(st, student_id, t.id),
                }
            )
    return rows


VIEWS = {
    "subject-list": ("public", subject_list),
    "lecturer-list": ("public", lecturer_list),
    "term-list": ("public", term_list),
    "my-subjects": ("student", my_subjects),
    "available-subjects": ("student", available_subjects),
    "my-terms": ("student", my_terms),
    "available-terms": ("student", available_terms),
    "my-grades": ("student", my_grades),
    "profile": ("user", profile),
    "taught-subjects": ("lecturer", taught_subjects),
    "lecturer-terms": ("lecturer", lecturer_terms),
    "term-participants": ("lecturer", term_participants),
}


def audience_allows(audience: str, actor: Session | None) -> bool:
    if audience == "public":
        return True
    if actor is None:
        return False
    return audience == "user" or audience == actor.role


def build_view(st, actor: Session | None, view_id: str) -> ViewData:
    try:
        audience, builder = VIEWS[view_id]
    except KeyError:
        raise UnknownView(f"unknown view {view_id!r}") from None
    if not audience_allows(audience, actor):
        raise Forbidden(f"view {view_id!r} is not available to this actor")
    if actor is not None and actor.user_id not in st.users:
        raise Forbidden(f"session user {actor.user_id!r} no longer exists")
    rows = builder(st, actor)
    rows.sort(key=lambda row: row["id"])
    return ViewData(view_id, rows)
