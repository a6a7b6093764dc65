"""frameql: lazy dataframe operations compiled to database queries.

A Frame never touches data until an action runs; every transformation
rewrites the underlying query text through a language pack's rule
templates. Built-in packs cover SQL, SQL++, Cypher, and the MongoDB
aggregation pipeline.
"""

from .values import MISSING, NULL, Table, is_absent, read_jsonl, write_jsonl
from .templates import (
    ConfigError,
    DialectKind,
    Diagnostic,
    LanguagePack,
    RenderError,
    Template,
    build_rule,
    chain_attributes,
    parse_config,
    substitute,
    validate_pack,
)
from .packs import builtin_names, load_builtin
from .frame import (
    CardinalityError,
    Frame,
    FrameError,
    LineageError,
    QueryText,
    ShapeError,
    Sym,
    column_expr,
    project,
    scan,
)
from .connectors import (
    ConnectorError,
    DryRunConnector,
    HttpConnector,
    HttpEndpointConfig,
    LocalConnector,
    UnsupportedDialectError,
)

__version__ = "0.1.0"

__all__ = [
    "MISSING",
    "NULL",
    "Table",
    "is_absent",
    "read_jsonl",
    "write_jsonl",
    "ConfigError",
    "DialectKind",
    "Diagnostic",
    "LanguagePack",
    "RenderError",
    "Template",
    "build_rule",
    "chain_attributes",
    "parse_config",
    "substitute",
    "validate_pack",
    "builtin_names",
    "load_builtin",
    "CardinalityError",
    "Frame",
    "FrameError",
    "LineageError",
    "QueryText",
    "ShapeError",
    "Sym",
    "column_expr",
    "project",
    "scan",
    "ConnectorError",
    "DryRunConnector",
    "HttpConnector",
    "HttpEndpointConfig",
    "LocalConnector",
    "UnsupportedDialectError",
    "__version__",
]
