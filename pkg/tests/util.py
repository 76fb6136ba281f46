"""Shared test helpers: paths and a small JSON-Schema subset checker."""

from __future__ import annotations

import json
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
CORPUS = REPO / "corpus"
SCHEMAS = REPO / "schemas"


def load_schema(name: str) -> dict:
    return json.loads((SCHEMAS / name).read_text())


def fixture_bytes(app_id: str, name: str) -> bytes:
    return (CORPUS / app_id / name).read_bytes()


_TYPES = {
    "object": dict,
    "array": list,
    "string": str,
    "integer": int,
    "number": (int, float),
    "boolean": bool,
    "null": type(None),
}


def schema_check(doc, schema: dict, root: dict | None = None, path: str = "$") -> list[str]:
    """Validate against the subset of JSON Schema our published schemas use.

    Supports type, required, properties, items, enum, $ref (local),
    minItems, minLength, minimum, additionalProperties-as-schema. Returns a
    list of violation strings; empty means valid.
    """
    root = root if root is not None else schema
    errors: list[str] = []

    if "$ref" in schema:
        target = root
        for part in schema["$ref"].lstrip("#/").split("/"):
            target = target[part]
        return schema_check(doc, target, root, path)

    if "enum" in schema and doc not in schema["enum"]:
        errors.append(f"{path}: {doc!r} not in {schema['enum']}")
        return errors

    declared = schema.get("type")
    if declared is not None:
        allowed = declared if isinstance(declared, list) else [declared]
        python_types = tuple(t for name in allowed for t in (
            _TYPES[name] if isinstance(_TYPES[name], tuple) else (_TYPES[name],)
        ))
        if isinstance(doc, bool) and "boolean" not in allowed:
            errors.append(f"{path}: expected {allowed}, got bool")
            return errors
        if not isinstance(doc, python_types):
            errors.append(f"{path}: expected {allowed}, got {type(doc).__name__}")
            return errors

    if isinstance(doc, dict):
        for key in schema.get("required", []):
            if key not in doc:
                errors.append(f"{path}: missing required {key!r}")
        for key, sub in schema.get("properties", {}).items():
            if key in doc:
                errors.extend(schema_check(doc[key], sub, root, f"{path}.{key}"))
        extra = schema.get("additionalProperties")
        if isinstance(extra, dict):
            for key, value in doc.items():
                if key not in schema.get("properties", {}):
                    errors.extend(schema_check(value, extra, root, f"{path}.{key}"))
    if isinstance(doc, list):
        if "minItems" in schema and len(doc) < schema["minItems"]:
            errors.append(f"{path}: fewer than {schema['minItems']} items")
        if "items" in schema:
            for i, item in enumerate(doc):
                errors.extend(schema_check(item, schema["items"], root, f"{path}[{i}]"))
    if isinstance(doc, str) and "minLength" in schema and len(doc) < schema["minLength"]:
        errors.append(f"{path}: shorter than {schema['minLength']}")
    if isinstance(doc, (int, float)) and not isinstance(doc, bool):
        if "minimum" in schema and doc < schema["minimum"]:
            errors.append(f"{path}: {doc} below minimum {schema['minimum']}")
    return errors
