"""Diachronic dataset parsing, validation and target-word localisation.

The dataset is a UTF-8 TSV with one header row naming the columns
``word, usage_id, period, text, start, end, sense_id, gloss``.  Rows with a
usage_id describe one usage of a target word in one period; rows with an
empty usage_id declare a sense of the word (id + gloss) without attaching a
usage, which is how senses that have no recorded usages are represented.
Literal tabs/newlines inside text fields are escaped (``\\t``, ``\\n``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional

PERIODS = ("old", "new")

COLUMNS = ("word", "usage_id", "period", "text", "start", "end", "sense_id", "gloss")


class DatasetFormatError(ValueError):
    """Raised for malformed dataset / word-form files; message carries the line number."""


@dataclass(frozen=True)
class Usage:
    usage_id: str
    word: str
    period: str
    text: str
    span: Optional[tuple[int, int]] = None
    gold_sense: Optional[str] = None


@dataclass(frozen=True)
class SenseEntry:
    sense_id: str
    word: str
    gloss: str
    period_of_record: str


@dataclass
class TargetWordRecord:
    word: str
    old_usages: list[Usage] = field(default_factory=list)
    new_usages: list[Usage] = field(default_factory=list)
    old_senses: list[SenseEntry] = field(default_factory=list)
    new_senses: list[SenseEntry] = field(default_factory=list)

    @property
    def n_old_usages(self) -> int:
        return len(self.old_usages)

    @property
    def n_old_senses(self) -> int:
        return len(self.old_senses)

    @property
    def n_new_usages(self) -> int:
        return len(self.new_usages)

    @property
    def counts(self) -> tuple[int, int, int]:
        return (self.n_old_usages, self.n_old_senses, self.n_new_usages)

    def old_sense_ids(self) -> list[str]:
        return [s.sense_id for s in self.old_senses]


@dataclass
class Dataset:
    records: dict[str, TargetWordRecord] = field(default_factory=dict)

    @property
    def words(self) -> list[str]:
        return list(self.records)

    def record(self, word: str) -> TargetWordRecord:
        return self.records[word]

    def usages(self) -> Iterable[Usage]:
        for rec in self.records.values():
            yield from rec.old_usages
            yield from rec.new_usages


@dataclass(frozen=True)
class WordFormList:
    word: str
    forms: tuple[str, ...]


# --- field escaping -------------------------------------------------------

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\\\": "\\", "\\t": "\t", "\\n": "\n", "\\r": "\r"}
_UNESCAPE_RE = re.compile(r"\\[\\tnr]")


def escape_field(value: str) -> str:
    return re.sub(r"[\\\t\n\r]", lambda m: _ESCAPES[m.group(0)], value)


def unescape_field(value: str) -> str:
    return _UNESCAPE_RE.sub(lambda m: _UNESCAPES[m.group(0)], value)


# --- parsing --------------------------------------------------------------


def _err(lineno: int, message: str) -> DatasetFormatError:
    return DatasetFormatError(f"line {lineno}: {message}")


def _parse_span(start: str, end: str, text: str, lineno: int) -> Optional[tuple[int, int]]:
    if start == "" and end == "":
        return None
    if start == "" or end == "":
        raise _err(lineno, "start and end must both be present or both be empty")
    try:
        s, e = int(start), int(end)
    except ValueError:
        raise _err(lineno, f"malformed integer span ({start!r}, {end!r})") from None
    if not (0 <= s < e <= len(text)):
        raise _err(lineno, f"span ({s}, {e}) out of bounds for text of length {len(text)}")
    return (s, e)


class _SenseCollector:
    """Accumulates sense ids / glosses per word while rows stream by."""

    def __init__(self, word: str):
        self.word = word
        self.order: list[str] = []
        self.gloss: dict[str, str] = {}
        self.is_old: dict[str, bool] = {}
        self.first_line: dict[str, int] = {}

    def touch(self, sense_id: str, gloss: str, period: str, lineno: int) -> None:
        if sense_id not in self.first_line:
            self.order.append(sense_id)
            self.first_line[sense_id] = lineno
            self.is_old[sense_id] = False
        if period == "old":
            self.is_old[sense_id] = True
        if gloss and sense_id not in self.gloss:
            self.gloss[sense_id] = gloss

    def entries(self) -> tuple[list[SenseEntry], list[SenseEntry]]:
        old, new = [], []
        for sid in self.order:
            gloss = self.gloss.get(sid, "")
            if self.is_old[sid]:
                if not gloss:
                    raise _err(
                        self.first_line[sid],
                        f"old sense {sid!r} of word {self.word!r} has no gloss",
                    )
                old.append(SenseEntry(sid, self.word, gloss, "old"))
            elif gloss:
                new.append(SenseEntry(sid, self.word, gloss, "new"))
        return old, new


def parse_dataset(lines: Iterable[str]) -> Dataset:
    """Parse dataset TSV lines into a Dataset grouped by target word.

    Raises DatasetFormatError (with the offending line number) for a missing
    or incomplete header, an unknown period, a duplicate usage_id, an old
    usage without a sense_id, a malformed or out-of-bounds span, or an old
    sense that never receives a gloss.
    """
    it = iter(lines)
    try:
        header = next(it).rstrip("\n").rstrip("\r")
    except StopIteration:
        raise DatasetFormatError("line 1: empty input, expected header row") from None
    names = header.split("\t")
    try:
        col = {name: names.index(name) for name in COLUMNS}
    except ValueError:
        missing = [name for name in COLUMNS if name not in names]
        raise _err(1, f"header missing columns {missing}") from None

    records: dict[str, TargetWordRecord] = {}
    senses: dict[str, _SenseCollector] = {}
    seen_usage_ids: dict[str, int] = {}

    for lineno, raw in enumerate(it, start=2):
        line = raw.rstrip("\n").rstrip("\r")
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != len(names):
            raise _err(lineno, f"expected {len(names)} fields, got {len(cells)}")
        row = {name: unescape_field(cells[col[name]]) for name in COLUMNS}

        word = row["word"]
        if not word:
            raise _err(lineno, "empty word")
        period = row["period"]
        if period not in PERIODS:
            raise _err(lineno, f"unknown period {period!r}")
        rec = records.setdefault(word, TargetWordRecord(word))
        coll = senses.setdefault(word, _SenseCollector(word))

        usage_id = row["usage_id"]
        if not usage_id:
            # sense declaration row
            if not row["sense_id"]:
                raise _err(lineno, "sense row (empty usage_id) requires a sense_id")
            if not row["gloss"]:
                raise _err(lineno, f"sense row for {row['sense_id']!r} requires a gloss")
            coll.touch(row["sense_id"], row["gloss"], period, lineno)
            continue

        if usage_id in seen_usage_ids:
            raise _err(
                lineno,
                f"duplicate usage_id {usage_id!r} (first seen on line {seen_usage_ids[usage_id]})",
            )
        seen_usage_ids[usage_id] = lineno

        sense_id = row["sense_id"]
        if period == "old" and not sense_id:
            raise _err(lineno, f"old usage {usage_id!r} has empty sense_id")
        span = _parse_span(row["start"], row["end"], row["text"], lineno)
        usage = Usage(
            usage_id=usage_id,
            word=word,
            period=period,
            text=row["text"],
            span=span,
            gold_sense=sense_id or None,
        )
        if sense_id:
            coll.touch(sense_id, row["gloss"], period, lineno)
        if period == "old":
            rec.old_usages.append(usage)
        else:
            rec.new_usages.append(usage)

    for word, rec in records.items():
        rec.old_senses, rec.new_senses = senses[word].entries()
    return Dataset(records)


def write_dataset(dataset: Dataset, fp: IO[str]) -> None:
    """Write a Dataset in canonical TSV form (re-parseable to an equal Dataset).

    Per word: sense declaration rows first (old then new inventory order),
    then old usages, then new usages.  Usage rows leave the gloss cell empty
    because glosses live on the declaration rows.
    """
    fp.write("\t".join(COLUMNS) + "\n")
    for rec in dataset.records.values():
        for sense in list(rec.old_senses) + list(rec.new_senses):
            _write_row(
                fp,
                word=rec.word,
                period=sense.period_of_record,
                sense_id=sense.sense_id,
                gloss=sense.gloss,
            )
        for usage in list(rec.old_usages) + list(rec.new_usages):
            start = str(usage.span[0]) if usage.span else ""
            end = str(usage.span[1]) if usage.span else ""
            _write_row(
                fp,
                word=usage.word,
                usage_id=usage.usage_id,
                period=usage.period,
                text=usage.text,
                start=start,
                end=end,
                sense_id=usage.gold_sense or "",
            )


def _write_row(fp: IO[str], **cells: str) -> None:
    fp.write("\t".join(escape_field(cells.get(name, "")) for name in COLUMNS) + "\n")


def serialize_dataset(dataset: Dataset) -> str:
    import io

    buf = io.StringIO()
    write_dataset(dataset, buf)
    return buf.getvalue()


# --- target word positions ------------------------------------------------

# A token boundary is a transition between alphabetic and non-alphabetic
# code points; [^\W\d_] matches exactly the alphabetic class.
_ALPHA = r"[^\W\d_]"


def _forms_pattern(forms: Iterable[str]) -> re.Pattern:
    cleaned = sorted({f for f in forms if f}, key=len, reverse=True)
    if not cleaned:
        raise ValueError("form list contains no usable forms")
    body = "|".join(re.escape(f) for f in cleaned)
    return re.compile(f"(?<!{_ALPHA})(?:{body})(?!{_ALPHA})", re.IGNORECASE)


def find_target_position(text: str, forms: WordFormList | Iterable[str]) -> Optional[tuple[int, int]]:
    """Locate the occurrence of any surface form to use as the target span.

    Matching is case-insensitive on whole tokens.  With one occurrence it is
    returned; with exactly two, the one with the larger min(left context,
    right context) wins (ties go to the earlier one); with more than two,
    the second-to-last is taken; with none, None.
    """
    if isinstance(forms, WordFormList):
        forms = forms.forms
    pattern = _forms_pattern(forms)
    occurrences = [(m.start(), m.end()) for m in pattern.finditer(text)]
    if not occurrences:
        return None
    if len(occurrences) == 1:
        return occurrences[0]
    if len(occurrences) == 2:
        best = occurrences[0]
        best_score = min(best[0], len(text) - best[1])
        other = occurrences[1]
        if min(other[0], len(text) - other[1]) > best_score:
            best = other
        return best
    return occurrences[-2]


def parse_word_forms(lines: Iterable[str]) -> dict[str, WordFormList]:
    """Parse a word-form file: one `lemma<TAB>form1,form2,...` per line.

    The lemma is added to its own form list if absent.
    """
    out: dict[str, WordFormList] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise _err(lineno, "expected `lemma<TAB>form1,form2,...`")
        lemma, forms_cell = parts
        if not lemma:
            raise _err(lineno, "empty lemma")
        if lemma in out:
            raise _err(lineno, f"duplicate lemma {lemma!r}")
        forms = [f for f in (p.strip() for p in forms_cell.split(",")) if f]
        if lemma not in forms:
            forms.insert(0, lemma)
        out[lemma] = WordFormList(lemma, tuple(forms))
    return out
