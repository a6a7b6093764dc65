"""Rewrite-rule templates and the language configuration file format.

A language pack is an INI-like file of sections holding `key = value`
entries. Each value is a template: literal text interspersed with `$name`
variables. `$$` escapes a literal dollar sign, and variable scanning resumes
immediately after the escape, so `$$left` renders as a literal `$` followed
by the binding of `left`. Variable names are matched longest-first against a
fixed vocabulary; a `$word` that matches nothing stays literal (pipeline
dialects are full of `$match`, `$group`, ... operator names).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

# ---------------------------------------------------------------------------
# Errors and diagnostics
# ---------------------------------------------------------------------------


class ConfigError(Exception):
    """Config file grammar violation. Carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class RenderError(Exception):
    """A template was rendered without a binding for one of its variables."""

    def __init__(self, variable: str, section: str | None = None, key: str | None = None):
        self.variable = variable
        self.section = section
        self.key = key
        where = f" in [{section}] {key}" if section else ""
        super().__init__(f"no binding for ${variable}{where}")


@dataclass(frozen=True)
class Diagnostic:
    section: str
    key: str
    message: str
    variable: str | None = None

    def __str__(self) -> str:
        return f"[{self.section}] {self.key}: {self.message}"


# ---------------------------------------------------------------------------
# Template tokens
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    text: str


@dataclass(frozen=True)
class Var:
    name: str


#: Every variable name the frame API may bind. Longest-first matching makes
#: `$left_on` win over `$left`.
VOCABULARY = frozenset(
    {
        "agg_expr",
        "agg_func",
        "alias",
        "attribute",
        "attribute_alias",
        "collection",
        "group_attr",
        "group_key",
        "left",
        "left_collection",
        "left_on",
        "left_subquery",
        "namespace",
        "num",
        "operand",
        "qualified_collection",
        "right",
        "right_collection",
        "right_on",
        "right_stages",
        "right_subquery",
        "sort_asc_attr",
        "sort_desc_attr",
        "statement",
        "subquery",
    }
)

#: Dollar-words that are legitimate literal text in pipeline templates:
#: aggregation stage and operator names, plus the `_id` system field.
PIPELINE_LITERAL_TOKENS = frozenset(
    {
        "match", "project", "group", "sum", "min", "max", "avg", "stdDevPop",
        "addFields", "sort", "limit", "count", "lookup", "unwind", "out",
        "expr", "eq", "ne", "gt", "lt", "gte", "lte", "and", "or", "not",
        "add", "subtract", "multiply", "divide", "mod",
        "toUpper", "toLower", "toInt", "toString", "abs", "_id",
    }
)

_WORD_RE = re.compile(r"[A-Za-z0-9_]+")


@dataclass
class Template:
    tokens: list[Lit | Var]
    source: str = ""
    #: dollar-words that matched no vocabulary entry (kept literal)
    unknown_tokens: list[str] = field(default_factory=list)

    def variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for t in self.tokens:
            if isinstance(t, Var):
                seen.setdefault(t.name)
        return list(seen)


def _word_at(text: str, pos: int) -> str:
    m = _WORD_RE.match(text, pos)
    return m.group(0) if m else ""


def _vocab_prefix(word: str, vocabulary: frozenset[str]) -> str:
    """Longest prefix of `word` that is a vocabulary name, or ''."""
    for end in range(len(word), 0, -1):
        if word[:end] in vocabulary:
            return word[:end]
    return ""


def parse_template(text: str, vocabulary: frozenset[str] = VOCABULARY) -> Template:
    tokens: list[Lit | Var] = []
    unknown: list[str] = []
    buf: list[str] = []

    def flush():
        if buf:
            tokens.append(Lit("".join(buf)))
            buf.clear()

    def try_var(pos: int) -> int:
        """Emit a Var for the longest vocabulary word at `pos`; return the
        new position (== pos when nothing matched)."""
        name = _vocab_prefix(_word_at(text, pos), vocabulary)
        if name:
            flush()
            tokens.append(Var(name))
            return pos + len(name)
        return pos

    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c != "$":
            buf.append(c)
            i += 1
            continue
        if i + 1 < n and text[i + 1] == "$":
            # Escaped dollar: emit one literal `$`, then variable scanning
            # resumes right away (`$$left` -> `$` + value-of(left)).
            buf.append("$")
            i = try_var(i + 2)
            continue
        j = try_var(i + 1)
        if j > i + 1:
            i = j
        else:
            word = _word_at(text, i + 1)
            if word:
                unknown.append(word)
            buf.append("$")
            i += 1
    flush()
    # Merge never needed: flush() batches literals already.
    return Template(tokens=tokens, source=text, unknown_tokens=unknown)


def substitute(template: Template, bindings: dict[str, str]) -> str:
    """Single-pass rendering. Bound values are final text; nothing inside
    them is re-scanned for variables."""
    out: list[str] = []
    for t in template.tokens:
        if isinstance(t, Lit):
            out.append(t.text)
        else:
            if t.name not in bindings:
                raise RenderError(t.name)
            out.append(str(bindings[t.name]))
    return "".join(out)


# ---------------------------------------------------------------------------
# Config file parsing
# ---------------------------------------------------------------------------

_SECTION_RE = re.compile(r"^\[(.+)\]\s*$")
_ENTRY_RE = re.compile(r"^(\S+)\s*=(.*)$")


def parse_config_sections(text: str) -> dict[str, dict[str, str]]:
    """Parse the raw section/key/value structure.

    Grammar: `[NAME]` opens a section; `key = value` adds an entry; indented
    lines continue the previous value; lines starting with `;` or `#` are
    comments; blank lines are ignored.
    """
    sections: dict[str, dict[str, str]] = {}
    current: dict[str, str] | None = None
    current_key: str | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith(";") or stripped.startswith("#"):
            continue
        if raw[0] in " \t":
            if current is None or current_key is None:
                raise ConfigError("continuation line outside any entry", lineno)
            current[current_key] += "\n" + stripped
            continue
        m = _SECTION_RE.match(stripped)
        if m:
            name = m.group(1).strip()
            current = sections.setdefault(name, {})
            current_key = None
            continue
        m = _ENTRY_RE.match(raw)
        if m:
            if current is None:
                raise ConfigError("entry before any [SECTION]", lineno)
            key, value = m.group(1), m.group(2).strip()
            if key in current:
                raise ConfigError(f"duplicate key {key!r} in section", lineno)
            current[key] = value
            current_key = key
            continue
        raise ConfigError(f"unparseable line: {stripped!r}", lineno)
    return sections


class DialectKind(enum.Enum):
    TEXT = "text"
    PIPELINE = "pipeline"


@dataclass
class LanguagePack:
    name: str
    dialect_kind: DialectKind
    sections: dict[str, dict[str, Template]]

    def template(self, section: str, key: str) -> Template:
        try:
            return self.sections[section][key]
        except KeyError:
            raise KeyError(f"pack {self.name!r} has no [{section}] {key}") from None

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    def render(self, section: str, key: str, bindings: dict[str, str]) -> str:
        t = self.template(section, key)
        try:
            return substitute(t, bindings)
        except RenderError as e:
            raise RenderError(e.variable, section, key) from None


def parse_config(
    text: str,
    name: str = "custom",
    dialect_kind: DialectKind = DialectKind.TEXT,
    vocabulary: frozenset[str] = VOCABULARY,
) -> LanguagePack:
    raw = parse_config_sections(text)
    sections = {
        sec: {key: parse_template(value, vocabulary) for key, value in entries.items()}
        for sec, entries in raw.items()
    }
    return LanguagePack(name=name, dialect_kind=dialect_kind, sections=sections)


# ---------------------------------------------------------------------------
# Canonical rule registry
# ---------------------------------------------------------------------------

#: Every pack must define all of these. The frame API renders queries
#: exclusively through this registry.
CANONICAL_REGISTRY: dict[str, tuple[str, ...]] = {
    "QUERIES": ("q1", "q2", "q3", "q4", "q5", "q6", "q7", "q8", "q9", "q10"),
    "ATTRIBUTE ALIAS": (
        "single_attribute",
        "attribute_alias",
        "project_attribute",
        "expr_attribute",
        "sort_asc_attr",
        "sort_desc_attr",
        "attribute_separator",
    ),
    "ARITHMETIC STATEMENTS": ("add", "sub", "mul", "div", "mod"),
    "LOGICAL STATEMENTS": ("and", "or", "not"),
    "COMPARISON STATEMENTS": ("eq", "ne", "gt", "lt", "ge", "le"),
    "TYPE CONVERSION": ("to_int", "to_str"),
    "LIMIT": ("limit", "return_all", "scalar"),
    "FUNCTIONS": (
        "min", "max", "avg", "std", "count",
        "min_alias", "max_alias", "avg_alias", "std_alias", "count_alias",
        "agg_item",
    ),
    "SCALAR FUNCTIONS": ("upper", "upper_alias"),
    "NULL CHECK": ("isna", "notna"),
    "LITERALS": ("string_quote", "null_literal", "true_literal", "false_literal"),
    "SAVE RESULTS": ("to_collection",),
}

#: Keys a pack may define beyond the registry without complaint.
OPTIONAL_KEYS: dict[str, tuple[str, ...]] = {
    "QUERIES": ("q3_scan",),
    "FUNCTIONS": ("abs",),
    "SAVE RESULTS": ("to_view",),
}


def validate_pack(pack: LanguagePack) -> list[Diagnostic]:
    """Check registry completeness and that every dollar-word is accounted
    for. Returns diagnostics instead of raising."""
    out: list[Diagnostic] = []
    for section, keys in CANONICAL_REGISTRY.items():
        entries = pack.sections.get(section)
        if entries is None:
            out.append(Diagnostic(section, "*", "missing section"))
            continue
        for key in keys:
            if key not in entries:
                out.append(Diagnostic(section, key, "missing required key"))
    allowed = PIPELINE_LITERAL_TOKENS if pack.dialect_kind is DialectKind.PIPELINE else frozenset()
    for section, entries in pack.sections.items():
        for key, tmpl in entries.items():
            for word in tmpl.unknown_tokens:
                if word not in allowed:
                    out.append(
                        Diagnostic(section, key, f"unknown variable ${word}", variable=word)
                    )
    return out


def build_rule(pack: LanguagePack, section: str, key: str, bindings: dict[str, str]) -> str:
    return pack.render(section, key, bindings)


def chain_attributes(items: list[str], pack: LanguagePack) -> str:
    """Fold rendered fragments through the pack's attribute_separator,
    right to left: [a, b, c] -> sep(a, sep(b, c))."""
    if not items:
        raise ValueError("chain_attributes requires at least one item")
    acc = items[-1]
    for item in reversed(items[:-1]):
        acc = pack.render("ATTRIBUTE ALIAS", "attribute_separator", {"left": item, "right": acc})
    return acc


# ---------------------------------------------------------------------------
# Whitespace normalization used by golden comparisons
# ---------------------------------------------------------------------------

_WS_RUN = re.compile(r"\s+")


def normalize_text_query(s: str) -> str:
    """Collapse whitespace runs to single spaces and trim."""
    return _WS_RUN.sub(" ", s).strip()


def normalize_pipeline_text(s: str) -> str:
    """Normalize a JSON-ish stage text: collapse whitespace runs, then drop
    spaces adjacent to structural punctuation outside string literals."""
    s = normalize_text_query(s)
    out: list[str] = []
    in_str = False
    i = 0
    while i < len(s):
        c = s[i]
        if in_str:
            out.append(c)
            if c == "\\" and i + 1 < len(s):
                out.append(s[i + 1])
                i += 2
                continue
            if c == '"':
                in_str = False
            i += 1
            continue
        if c == '"':
            in_str = True
            out.append(c)
            i += 1
            continue
        if c == " ":
            prev = out[-1] if out else ""
            nxt = s[i + 1] if i + 1 < len(s) else ""
            if prev in "{}[]:," or nxt in "{}[]:,":
                i += 1
                continue
        out.append(c)
        i += 1
    return "".join(out)
