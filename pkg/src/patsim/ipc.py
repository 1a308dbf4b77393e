"""IPC code parsing, hierarchy keys, Jaccard profiles, within-level citation counts.

An IPC code such as ``A01C 3/04`` nests five levels: section ``A``, class
``A01``, subclass ``A01C``, main group ``A01C 3/00``, subgroup ``A01C 3/04``.
All functions here are pure and safe for parallel use.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .dates import year_of_days
from .errors import ValidationError


class IpcLevel(enum.Enum):
    SECTION = "section"
    CLASS = "class"
    SUBCLASS = "subclass"
    MAIN_GROUP = "maingroup"
    SUB_GROUP = "subgroup"


LEVELS = (
    IpcLevel.SECTION,
    IpcLevel.CLASS,
    IpcLevel.SUBCLASS,
    IpcLevel.MAIN_GROUP,
    IpcLevel.SUB_GROUP,
)

_IPC_RE = re.compile(r"([A-H])([0-9]{2})([A-Z])([0-9]{1,4})/([0-9]{1,6})")


@dataclass(frozen=True)
class IpcCode:
    section: str
    class_num: int
    subclass_letter: str
    main_group: int
    sub_group: int

    def render(self, level: IpcLevel) -> str:
        stem = f"{self.section}{self.class_num:02d}"
        if level is IpcLevel.SECTION:
            return self.section
        if level is IpcLevel.CLASS:
            return stem
        if level is IpcLevel.SUBCLASS:
            return stem + self.subclass_letter
        if level is IpcLevel.MAIN_GROUP:
            return f"{stem}{self.subclass_letter} {self.main_group}/00"
        return f"{stem}{self.subclass_letter} {self.main_group}/{self.sub_group:02d}"

    def canonical(self) -> str:
        return self.render(IpcLevel.SUB_GROUP)


def parse_ipc(raw: str) -> IpcCode:
    """Parse an IPC string, tolerating internal whitespace and lowercase.

    Raises ValidationError naming the failing component.
    """
    compact = "".join(raw.split()).upper()
    if not compact:
        raise ValidationError("empty IPC code")
    m = _IPC_RE.fullmatch(compact)
    if m is None:
        raise ValidationError(f"malformed IPC code {raw!r}: {_diagnose(compact)}")
    section, class_digits, subclass_letter, group, subgroup = m.groups()
    main_group = int(group)
    if main_group == 0:
        raise ValidationError(f"malformed IPC code {raw!r}: main group must be positive")
    return IpcCode(section, int(class_digits), subclass_letter, main_group, int(subgroup))


def _diagnose(compact: str) -> str:
    if compact[0] not in "ABCDEFGH":
        return f"invalid section {compact[0]!r}"
    if len(compact) < 3 or not compact[1:3].isdigit():
        return "class must be two digits"
    if len(compact) < 4 or not compact[3].isalpha():
        return "missing subclass letter"
    if "/" not in compact[4:]:
        return "missing group"
    return "invalid group/subgroup digits"


def level_keys(codes: Iterable[IpcCode], level: IpcLevel) -> set[str]:
    """Distinct rendered keys of ``codes`` at ``level`` (duplicates collapse)."""
    return {c.render(level) for c in codes}


@dataclass(frozen=True)
class JaccardProfile:
    j_section: float
    j_class: float
    j_subclass: float
    j_maingroup: float
    j_subgroup: float
    defined: bool

    def value(self, level: IpcLevel) -> float:
        return getattr(self, "j_" + level.value)

    def as_dict(self) -> dict[str, float]:
        return {"j_" + lv.value: self.value(lv) for lv in LEVELS}


def _codes_of(patent_or_codes) -> Sequence[IpcCode]:
    return getattr(patent_or_codes, "ipc_codes", patent_or_codes)


def jaccard_counts(sender, receiver, level: IpcLevel) -> tuple[int, int]:
    """(|A∩B|, |A∪B|) of the two key sets at ``level``; exact integers."""
    a = level_keys(_codes_of(sender), level)
    b = level_keys(_codes_of(receiver), level)
    return len(a & b), len(a | b)


def jaccard_profile(sender, receiver) -> JaccardProfile:
    """Per-level Jaccard indices between two patents (or raw code lists).

    A level with an empty union scores 0; the profile is undefined when
    either side carries no IPC codes at all.
    """
    a_codes = _codes_of(sender)
    b_codes = _codes_of(receiver)
    values = []
    for level in LEVELS:
        inter, union = jaccard_counts(a_codes, b_codes, level)
        values.append(inter / union if union else 0.0)
    defined = bool(a_codes) and bool(b_codes)
    return JaccardProfile(*values, defined=defined)


def within_level_citation_counts(corpus, level: IpcLevel) -> list[tuple[int, int, int, int]]:
    """Per-sender-grant-year counts of citations whose endpoints share a key
    at ``level``.

    Returns rows ``(year, within, outside, excluded)`` sorted by year; an edge
    is excluded when either endpoint has no IPC codes.
    """
    per_year: dict[int, list[int]] = {}
    for edge in corpus.edges:
        sender = corpus.patents[edge.sender_id]
        receiver = corpus.patents[edge.receiver_id]
        year = year_of_days(sender.grant_date)
        row = per_year.setdefault(year, [0, 0, 0])
        if not sender.ipc_codes or not receiver.ipc_codes:
            row[2] += 1
            continue
        a = level_keys(sender.ipc_codes, level)
        b = level_keys(receiver.ipc_codes, level)
        if a & b:
            row[0] += 1
        else:
            row[1] += 1
    return [(y, w, o, e) for y, (w, o, e) in sorted(per_year.items())]
