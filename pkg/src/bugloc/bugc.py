"""Loader for BugC-style bug metadata exported as JSON."""

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .errors import BadTimestamp, IoFailure, SchemaViolation
from .features import BugReport

# canonical field -> accepted spellings, first match wins
FIELDS = {
    "id": ("issue_id", "id", "bug_id"),
    "summary": ("issue_summary", "summary", "title"),
    "description": ("issue_description", "description", "body"),
    "reported_at": ("issue_reporting_time", "reported_at", "reporting_time", "created_at"),
    "status": ("issue_status", "status"),
    "fixed_by": ("fixed_by", "pull_request_id", "pr_id"),
    "pr_status": ("pull_request_status", "pr_status"),
    "files": ("files_changed", "fixed_files"),
    "lines": ("lines_changed",),
}
MANDATORY = ("id", "summary", "reported_at")


@dataclass
class BugSet:
    project: str
    bugs: list
    provenance: dict = field(default_factory=dict)
    non_trainable: frozenset = frozenset()

    def __len__(self):
        return len(self.bugs)

    def trainable(self):
        return [b for b in self.bugs if b.trainable]

    def by_id(self):
        return {b.id: b for b in self.bugs}


def _lookup(record, name):
    for key in FIELDS[name]:
        if key in record:
            return record[key]
    return None


def parse_timestamp(value, where=""):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return datetime.fromtimestamp(value, tz=timezone.utc)
    if not isinstance(value, str) or not value.strip():
        raise BadTimestamp(f"{where}unparseable timestamp {value!r}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        return datetime.fromisoformat(text)
    except ValueError as exc:
        raise BadTimestamp(f"{where}unparseable timestamp {value!r}") from exc


def _files(value, where):
    if value is None or value == "":
        return frozenset()
    if isinstance(value, str):
        parts = value.replace(";", ",").split(",")
        return frozenset(p.strip() for p in parts if p.strip())
    if isinstance(value, (list, tuple)):
        out = set()
        for item in value:
            if isinstance(item, dict):
                item = item.get("path") or item.get("filename") or item.get("file")
            if not isinstance(item, str):
                raise SchemaViolation(f"{where}files_changed entries must be paths")
            out.add(item.replace("\\", "/"))
        return frozenset(out)
    raise SchemaViolation(f"{where}files_changed must be a list of paths")


def bug_from_record(record, index=0):
    where = f"record {index}: "
    if not isinstance(record, dict):
        raise SchemaViolation(f"{where}expected an object, got {type(record).__name__}")
    for name in MANDATORY:
        if _lookup(record, name) in (None, ""):
            raise SchemaViolation(f"{where}missing mandatory field {FIELDS[name][0]!r}")
    return BugReport(
        id=str(_lookup(record, "id")),
        summary=str(_lookup(record, "summary")),
        description=str(_lookup(record, "description") or ""),
        reported_at=parse_timestamp(_lookup(record, "reported_at"), where),
        fixed_files=_files(_lookup(record, "files"), where),
        status=str(_lookup(record, "status") or ""),
    )


def load_bugc(path):
    """Read a BugC JSON export: ``{"project", "bugs": [...]}`` or a bare record list."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read bug file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path} is not valid JSON: {exc}") from exc
    return bugset_from_document(doc, default_project=str(path))


def bugset_from_document(doc, default_project=""):
    if isinstance(doc, list):
        project, records, provenance = default_project, doc, {}
    elif isinstance(doc, dict) and isinstance(doc.get("bugs"), list):
        project = str(doc.get("project") or default_project)
        records = doc["bugs"]
        provenance = {k: v for k, v in doc.items() if k not in ("bugs", "project")}
    else:
        raise SchemaViolation("expected a list of bug records or an object with a 'bugs' list")
    bugs, seen = [], set()
    for i, record in enumerate(records):
        bug = bug_from_record(record, i)
        if bug.id in seen:
            raise SchemaViolation(f"record {i}: duplicate issue id {bug.id!r}")
        seen.add(bug.id)
        bugs.append(bug)
    flagged = frozenset(b.id for b in bugs if not b.trainable)
    return BugSet(project, bugs, provenance, flagged)


def bug_to_record(bug):
    return {
        "issue_id": bug.id,
        "issue_summary": bug.summary,
        "issue_description": bug.description,
        "issue_reporting_time": bug.reported_at.isoformat(),
        "issue_status": bug.status,
        "files_changed": sorted(bug.fixed_files),
    }


def dump_bugc(path, project, bugs, provenance=None):
    doc = {"project": project, **(provenance or {}), "bugs": [bug_to_record(b) for b in bugs]}
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
    except OSError as exc:
        raise IoFailure(f"cannot write bug file {path}: {exc}") from exc
