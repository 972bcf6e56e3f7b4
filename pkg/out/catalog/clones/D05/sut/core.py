"""Domain model, business rules and persistence of the university system.

The store is an in-memory snapshot guarded by a single re-entrant lock;
every public operation runs as one transaction and either commits all of
its changes or none of them. Fixture datasets are plain dictionaries in
the documented JSON schema (see ``fixtures/``).
"""
from __future__ import annotations
from .activation import record_activation as _tb_activate

import copy
import hashlib
import json
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"
ROLES = ("student", "lecturer")
GRADE_VALUES = ("A", "B", "C", "D", "E", "F")
TIME_FORMAT = "%Y-%m-%dT%H:%M"
DEFAULT_NOW = "2026-03-01T08:00"


class DomainError(Exception):
    """Base class for rule violations; ``code`` is the stable error name."""

    code = "DomainError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


def _error(name: str) -> type[DomainError]:
    return type(name, (DomainError,), {"code": name})


InvalidCredentials = _error("InvalidCredentials")
AlreadyEnrolled = _error("AlreadyEnrolled")
CapacityExceeded = _error("CapacityExceeded")
NotAStudent = _error("NotAStudent")
NotEnrolled = _error("NotEnrolled")
HasGrade = _error("HasGrade")
NotEnrolledInSubject = _error("NotEnrolledInSubject")
TermFull = _error("TermFull")
AlreadyRegistered = _error("AlreadyRegistered")
AlreadyGraded = _error("AlreadyGraded")
NotOwner = _error("NotOwner")
InvalidCapacity = _error("InvalidCapacity")
InvalidDate = _error("InvalidDate")
PastDate = _error("PastDate")
NotRegisteredOnTerm = _error("NotRegisteredOnTerm")
InvalidGrade = _error("InvalidGrade")
UnknownView = _error("UnknownView")
Forbidden = _error("Forbidden")
NotFound = _error("NotFound")
InconsistentFixture = _error("InconsistentFixture")


def password_digest(password: str) -> str:
    # Documented stub, not a hardened password hash.
    return hashlib.sha256(f"uis:{password}".encode()).hexdigest()


@dataclass
class UserAccount:
    id: str
    username: str
    password_digest: str
    role: str
    display_name: str
    email: str


@dataclass
class Subject:
    id: str
    name: str
    credits: int
    capacity: int
    lecturer_ids: list[str] = field(default_factory=list)


@dataclass
class ExamTerm:
    id: str
    subject_id: str
    starts_at: str
    max_participants: int
    registered_student_ids: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class Enrollment:
    student_id: str
    subject_id: str


@dataclass(frozen=True)
class Grade:
    student_id: str
    exam_term_id: str
    value: str
    graded_by: str


@dataclass(frozen=True)
class Session:
    user_id: str
    role: str


@dataclass
class FixtureDataset:
    fixture_id: str
    users: list[UserAccount]
    subjects: list[Subject]
    exam_terms: list[ExamTerm]
    enrollments: list[Enrollment]
    grades: list[Grade]
    now: str = DEFAULT_NOW

    @classmethod
    def from_dict(cls, doc: dict) -> "FixtureDataset":
        try:
            return cls(
                fixture_id=doc["fixture_id"],
                now=doc.get("now", DEFAULT_NOW),
                users=[UserAccount(**u) for u in doc.get("users", [])],
                subjects=[Subject(**{**s, "lecturer_ids": list(s.get("lecturer_ids", []))}) for s in doc.get("subjects", [])],
                exam_terms=[
                    ExamTerm(**{**t, "registered_student_ids": list(t.get("registered_student_ids", []))})
                    for t in doc.get("exam_terms", [])
                ],
                enrollments=[Enrollment(**e) for e in doc.get("enrollments", [])],
                grades=[Grade(**g) for g in doc.get("grades", [])],
            )
        except (KeyError, TypeError) as exc:
            raise InconsistentFixture(f"malformed fixture document: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "fixture_id": self.fixture_id,
            "now": self.now,
            "users": [vars(u).copy() for u in self.users],
            "subjects": [{**vars(s), "lecturer_ids": list(s.lecturer_ids)} for s in self.subjects],
            "exam_terms": [
                {**vars(t), "registered_student_ids": list(t.registered_student_ids)} for t in self.exam_terms
            ],
            "enrollments": [{"student_id": e.student_id, "subject_id": e.subject_id} for e in self.enrollments],
            "grades": [
                {"student_id": g.student_id, "exam_term_id": g.exam_term_id, "value": g.value, "graded_by": g.graded_by}
                for g in self.grades
            ],
        }


def load_fixture(ref: str | Path) -> FixtureDataset:
    """Load a fixture by shipped id (``baseline-small``) or by file path."""
    path = Path(ref)
    if not path.suffix:
        path = FIXTURE_DIR / f"{ref}.json"
    if not path.is_file():
        raise NotFound(f"unknown fixture {ref!r}")
    with open(path, encoding="utf-8") as fh:
        return FixtureDataset.from_dict(json.load(fh))


def shipped_fixture_ids() -> list[str]:
    return sorted(p.stem for p in FIXTURE_DIR.glob("*.json"))


def parse_time(text: str) -> datetime:
    try:
        return datetime.strptime(text, TIME_FORMAT)
    except (TypeError, ValueError) as exc:
        raise InvalidDate(f"expected YYYY-MM-DDTHH:MM, got {text!r}") from exc


class _State:
    def __init__(self, dataset: FixtureDataset):
        self.fixture_id = dataset.fixture_id
        self.now = dataset.now
        self.users = {u.id: copy.copy(u) for u in dataset.users}
        self.subjects = {s.id: copy.deepcopy(s) for s in dataset.subjects}
        self.terms = {t.id: copy.deepcopy(t) for t in dataset.exam_terms}
        self.enrollments = {(e.student_id, e.subject_id) for e in dataset.enrollments}
        self.grades = {(g.student_id, g.exam_term_id): g for g in dataset.grades}


def audit(dataset: FixtureDataset) -> list[str]:
    """Return every referential-integrity or invariant violation in ``dataset``."""
    problems = []
    users = {}
    usernames = set()
    for u in dataset.users:
        if u.id in users:
            problems.append(f"duplicate user id {u.id}")
        if u.username in usernames:
            problems.append(f"duplicate username {u.username}")
        if u.role not in ROLES:
            problems.append(f"user {u.id}: unknown role {u.role!r}")
        users[u.id] = u
        usernames.add(u.username)
    subjects = {}
    for s in dataset.subjects:
        if s.id in subjects:
            problems.append(f"duplicate subject id {s.id}")
        subjects[s.id] = s
        if not isinstance(s.credits, int) or s.credits <= 0:
            problems.append(f"subject {s.id}: credits must be positive")
        if not isinstance(s.capacity, int) or s.capacity <= 0:
            problems.append(f"subject {s.id}: capacity must be positive")
        for lid in s.lecturer_ids:
            if lid not in users or users[lid].role != "lecturer":
                problems.append(f"subject {s.id}: lecturer_id {lid} does not resolve to a lecturer")
    pairs = set()
    for e in dataset.enrollments:
        if (e.student_id, e.subject_id) in pairs:
            problems.append(f"duplicate enrollment {e.student_id}/{e.subject_id}")
        pairs.add((e.student_id, e.subject_id))
        if e.subject_id not in subjects:
            problems.append(f"enrollment {e.student_id}/{e.subject_id}: subject_id {e.subject_id} does not resolve")
        if e.student_id not in users or users[e.student_id].role != "student":
            problems.append(f"enrollment {e.student_id}/{e.subject_id}: student_id {e.student_id} does not resolve to a student")
    for s in subjects.values():
        count = sum(1 for _, sid in pairs if sid == s.id)
        if isinstance(s.capacity, int) and count > s.capacity:
            problems.append(f"subject {s.id}: {count} enrollments exceed capacity {s.capacity}")
    terms = {}
    for t in dataset.exam_terms:
        if t.id in terms:
            problems.append(f"duplicate exam term id {t.id}")
        terms[t.id] = t
        if t.subject_id not in subjects:
            problems.append(f"exam term {t.id}: subject_id {t.subject_id} does not resolve")
        if not isinstance(t.max_participants, int) or t.max_participants <= 0:
            problems.append(f"exam term {t.id}: max_participants must be positive")
        elif len(t.registered_student_ids) > t.max_participants:
            problems.append(f"exam term {t.id}: registrations exceed max_participants")
        if len(set(t.registered_student_ids)) != len(t.registered_student_ids):
            problems.append(f"exam term {t.id}: duplicate registration")
        for sid in t.registered_student_ids:
            if (sid, t.subject_id) not in pairs:
                problems.append(f"exam term {t.id}: registered student {sid} is not enrolled in {t.subject_id}")
        try:
            parse_time(t.starts_at)
        except InvalidDate:
            problems.append(f"exam term {t.id}: bad starts_at {t.starts_at!r}")
    seen = set()
    for g in dataset.grades:
        key = (g.student_id, g.exam_term_id)
        if key in seen:
            problems.append(f"duplicate grade {g.student_id}/{g.exam_term_id}")
        seen.add(key)
        if g.value not in GRADE_VALUES:
            problems.append(f"grade {g.student_id}/{g.exam_term_id}: bad value {g.value!r}")
        term = terms.get(g.exam_term_id)
        if term is None:
            problems.append(f"grade {g.student_id}/{g.exam_term_id}: exam_term_id {g.exam_term_id} does not resolve")
        elif g.student_id not in term.registered_student_ids:
            problems.append(f"grade {g.student_id}/{g.exam_term_id}: student was not registered on the term")
        if g.graded_by not in users or users[g.graded_by].role != "lecturer":
            problems.append(f"grade {g.student_id}/{g.exam_term_id}: graded_by {g.graded_by} is not a lecturer")
    return problems


class Store:
    """Transactional in-memory store of the system state."""

    def __init__(self, dataset: FixtureDataset | None = None, logger=None):
        self._lock = threading.RLock()
        self._logger = logger
        self._state = _State(dataset or FixtureDataset("empty", [], [], [], [], []))

    # -- transactions -------------------------------------------------------

    def _event(self, event: str, **detail) -> None:
        if self._logger is not None:
            self._logger.info({"event": event, **{f"detail.{k}": v for k, v in detail.items()}})

    def _transaction(self, fn):
        with self._lock:
            working = copy.deepcopy(self._state)
            result = fn(working)
            self._state = working
            return result

    def reset_fixture(self, dataset: FixtureDataset) -> None:
        problems = audit(dataset)
        if problems:
            raise InconsistentFixture("; ".join(problems))
        with self._lock:
            self._state = _State(dataset)
        self._event("fixture_reset", fixture=dataset.fixture_id)

    def dump(self) -> dict:
        with self._lock:
            st = self._state
            dataset = FixtureDataset(
                fixture_id=st.fixture_id,
                now=st.now,
                users=[st.users[k] for k in sorted(st.users)],
                subjects=[st.subjects[k] for k in sorted(st.subjects)],
                exam_terms=[st.terms[k] for k in sorted(st.terms)],
                enrollments=[Enrollment(a, b) for a, b in sorted(st.enrollments)],
                grades=[st.grades[k] for k in sorted(st.grades)],
            )
            return copy.deepcopy(dataset.to_dict())

    def audit(self) -> list[str]:
        return audit(FixtureDataset.from_dict(self.dump()))

    # -- lookups ------------------------------------------------------------

    @staticmethod
    def _user(st: _State, user_id: str) -> UserAccount:
        try:
            return st.users[user_id]
        except KeyError:
            raise NotFound(f"unknown user {user_id!r}") from None

    @staticmethod
    def _subject(st: _State, subject_id: str) -> Subject:
        try:
            return st.subjects[subject_id]
        except KeyError:
            raise NotFound(f"unknown subject {subject_id!r}") from None

    @staticmethod
    def _term(st: _State, term_id: str) -> ExamTerm:
        try:
            return st.terms[term_id]
        except KeyError:
            raise NotFound(f"unknown exam term {term_id!r}") from None

    def user(self, user_id: str) -> UserAccount:
        with self._lock:
            return copy.copy(self._user(self._state, user_id))

    # -- operations ---------------------------------------------------------

    def authenticate(self, username: str, password: str) -> Session:
        with self._lock:
            account = next((u for u in self._state.users.values() if u.username == username), None)
            if account is None or account.password_digest != password_digest(password):
                raise InvalidCredentials("invalid username or password")
        self._event("login", user=account.id)
        return Session(account.id, account.role)

    def enroll_subject(self, student_id: str, subject_id: str) -> Enrollment:
        def tx(st: _State) -> Enrollment:
            student = self._user(st, student_id)
            subject = self._subject(st, subject_id)
            if student.role != "student":
                raise NotAStudent(f"{student_id} is not a student")
            if (student_id, subject_id) in st.enrollments:
                raise AlreadyEnrolled(f"{student_id} is already enrolled in {subject_id}")
            enrolled = sum(1 for _, sid in st.enrollments if sid == subject_id)
            # [seam:enroll-capacity]
            if enrolled >= subject.capacity:
                raise CapacityExceeded(f"subject {subject_id} is full")
            # [/seam:enroll-capacity]
            st.enrollments.add((student_id, subject_id))
            return Enrollment(student_id, subject_id)

        result = self._transaction(tx)
        self._event("enroll", student=student_id, subject=subject_id)
        return result

    def cancel_enrollment(self, student_id: str, subject_id: str) -> None:
        def tx(st: _State) -> None:
            if (student_id, subject_id) not in st.enrollments:
                raise NotEnrolled(f"{student_id} is not enrolled in {subject_id}")
            term_ids = [t.id for t in st.terms.values() if t.subject_id == subject_id]
            # [seam:cancel-grade-guard]
            _tb_activate("D05", "grade-guard")
            # [/seam:cancel-grade-guard]
            st.enrollments.discard((student_id, subject_id))
            for tid in term_ids:
                registered = st.terms[tid].registered_student_ids
                if student_id in registered:
                    registered.remove(student_id)

        self._transaction(tx)
        self._event("cancel_enrollment", student=student_id, subject=subject_id)

    def register_exam_term(self, student_id: str, term_id: str) -> None:
        def tx(st: _State) -> None:
            self._user(st, student_id)
            term = self._term(st, term_id)
            if (student_id, term.subject_id) not in st.enrollments:
                raise NotEnrolledInSubject(f"{student_id} is not enrolled in {term.subject_id}")
            if (student_id, term_id) in st.grades:
                raise AlreadyGraded(f"{student_id} is already graded on {term_id}")
            if student_id in term.registered_student_ids:
                raise AlreadyRegistered(f"{student_id} is already registered on {term_id}")
            # [seam:term-capacity]
            if len(term.registered_student_ids) >= term.max_participants:
                raise TermFull(f"exam term {term_id} is full")
            # [/seam:term-capacity]
            term.registered_student_ids.append(student_id)

        self._transaction(tx)
        self._event("register_exam_term", student=student_id, term=term_id)

    def create_exam_term(self, lecturer_id: str, subject_id: str, starts_at: str, max_participants) -> ExamTerm:
        def tx(st: _State) -> ExamTerm:
            lecturer = self._user(st, lecturer_id)
            subject = self._subject(st, subject_id)
            if lecturer.role != "lecturer" or lecturer_id not in subject.lecturer_ids:
                raise NotOwner(f"{lecturer_id} does not teach {subject_id}")
            try:
                capacity = int(max_participants)
            except (TypeError, ValueError):
                raise InvalidCapacity(f"capacity {max_participants!r} is not a number") from None
            if capacity <= 0:
                raise InvalidCapacity(f"capacity must be positive, got {capacity}")
            when = parse_time(starts_at)
            if when <= parse_time(st.now):
                raise PastDate(f"{starts_at} is not in the future")
            term = ExamTerm(_next_id("t", st.terms), subject_id, when.strftime(TIME_FORMAT), capacity, [])
            st.terms[term.id] = term
            return copy.deepcopy(term)

        result = self._transaction(tx)
        self._event("create_exam_term", lecturer=lecturer_id, term=result.id)
        return result

    def set_grade(self, lecturer_id: str, term_id: str, student_id: str, value: str) -> Grade:
        def tx(st: _State) -> Grade:
            lecturer = self._user(st, lecturer_id)
            term = self._term(st, term_id)
            subject = self._subject(st, term.subject_id)
            if lecturer.role != "lecturer" or lecturer_id not in subject.lecturer_ids:
                raise NotOwner(f"{lecturer_id} does not teach {subject.id}")
            if value not in GRADE_VALUES:
                raise InvalidGrade(f"grade must be one of {', '.join(GRADE_VALUES)}")
            if student_id not in term.registered_student_ids:
                raise NotRegisteredOnTerm(f"{student_id} is not registered on {term_id}")
            if (student_id, term_id) in st.grades:
                raise AlreadyGraded(f"{student_id} is already graded on {term_id}")
            grade = Grade(student_id, term_id, value, lecturer_id)
            # [seam:grade-persist]
            st.grades[(student_id, term_id)] = grade
            # [/seam:grade-persist]
            return grade

        result = self._transaction(tx)
        self._event("set_grade", lecturer=lecturer_id, term=term_id, student=student_id)
        return result

    def query_view(self, actor: Session | None, view_id: str) -> "ViewData":
        from . import views

        with self._lock:
            return views.build_view(self._state, actor, view_id)


def _next_id(prefix: str, existing) -> str:
    numbers = [int(k[len(prefix):]) for k in existing if k.startswith(prefix) and k[len(prefix):].isdigit()]
    return f"{prefix}{max(numbers, default=0) + 1}"


@dataclass
class ViewData:
    view_id: str
    rows: list[dict]
