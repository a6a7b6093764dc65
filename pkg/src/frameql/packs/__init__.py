"""Built-in language packs, loaded from the bundled .conf files."""

from __future__ import annotations

from importlib import resources

from ..templates import DialectKind, LanguagePack, parse_config

#: name -> (resource file, dialect kind)
BUILTIN_PACKS: dict[str, tuple[str, DialectKind]] = {
    "sqlpp": ("sqlpp.conf", DialectKind.TEXT),
    "sql": ("sql.conf", DialectKind.TEXT),
    "cypher": ("cypher.conf", DialectKind.TEXT),
    "mongo": ("mongo.conf", DialectKind.PIPELINE),
}


def load_builtin(name: str) -> LanguagePack:
    try:
        filename, kind = BUILTIN_PACKS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_PACKS))
        raise ValueError(f"unknown language pack {name!r} (built-ins: {known})") from None
    text = resources.files("frameql.packs").joinpath(filename).read_text(encoding="utf-8")
    return parse_config(text, name=name, dialect_kind=kind)


def builtin_names() -> list[str]:
    return sorted(BUILTIN_PACKS)
