"""Editable clinical lookup tables: note keywords, diagnosis-code prefixes,
and drug lists per task.

All three ship as plain-text config files (``data/*.cfg``) in a simple
``TASK: entry, entry, ...`` format so the clinical content stays auditable
and swappable without touching code.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

from xlabel.errors import InvalidInput
from xlabel.ncd.tasks import Task


def parse_task_lists(text: str) -> dict[Task, tuple[str, ...]]:
    """Parse ``TASK: a, b, c`` lines; '#' starts a comment."""
    out: dict[Task, tuple[str, ...]] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise InvalidInput(f"line {lineno}: expected 'TASK: entries', got {raw_line!r}")
        head, _, tail = line.partition(":")
        try:
            task = Task(head.strip())
        except ValueError:
            raise InvalidInput(f"line {lineno}: unknown task {head.strip()!r}") from None
        entries = tuple(e.strip() for e in tail.split(",") if e.strip())
        if not entries:
            raise InvalidInput(f"line {lineno}: empty entry list for {task}")
        out[task] = entries
    return out


def _load_default(filename: str) -> dict[Task, tuple[str, ...]]:
    text = resources.files("xlabel.ncd").joinpath("data", filename).read_text("utf-8")
    return parse_task_lists(text)


@dataclass(frozen=True)
class TaskLists:
    """A per-task list of strings loaded from one config file."""

    entries: Mapping[Task, tuple[str, ...]]

    def __post_init__(self):
        for task in Task:
            if not self.entries.get(task):
                raise InvalidInput(f"no entries configured for task {task}")

    def for_task(self, task: Task) -> tuple[str, ...]:
        return self.entries[task]

    @classmethod
    def from_file(cls, path) -> "TaskLists":
        with open(path, encoding="utf-8") as fh:
            return cls(parse_task_lists(fh.read()))


@dataclass(frozen=True)
class ClinicalTables:
    """Keyword, diagnosis-prefix and drug tables bundled together."""

    keywords: TaskLists
    icd10_prefixes: TaskLists
    drugs: TaskLists

    @classmethod
    def defaults(cls) -> "ClinicalTables":
        return cls(
            keywords=TaskLists(_load_default("keywords.cfg")),
            icd10_prefixes=TaskLists(_load_default("icd10_prefixes.cfg")),
            drugs=TaskLists(_load_default("drug_lists.cfg")),
        )

    @classmethod
    def from_dir(cls, directory) -> "ClinicalTables":
        from pathlib import Path
        d = Path(directory)
        return cls(
            keywords=TaskLists.from_file(d / "keywords.cfg"),
            icd10_prefixes=TaskLists.from_file(d / "icd10_prefixes.cfg"),
            drugs=TaskLists.from_file(d / "drug_lists.cfg"),
        )


DEFAULT_TABLES = ClinicalTables.defaults()


def match_any_prefix(codes: Iterable[str], prefixes: Iterable[str]) -> bool:
    ups = tuple(p.upper() for p in prefixes)
    return any(str(code).strip().upper().startswith(ups) for code in codes)


def match_any_substring(items: Iterable[str], needles: Iterable[str]) -> bool:
    lows = tuple(n.lower() for n in needles)
    return any(any(n in str(item).lower() for n in lows) for item in items)
