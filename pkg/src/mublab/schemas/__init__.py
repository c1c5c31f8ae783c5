"""Versioned JSON schemas for every serialized output."""
import json
from functools import lru_cache
from importlib import resources

import jsonschema

SCHEMAS = ("matrix", "mu-enumeration", "pattern-certificates", "family-witness", "search-report",
           "bundle", "verify", "trio", "acceptance")


@lru_cache(maxsize=None)
def load_schema(name):
    if name not in SCHEMAS:
        raise KeyError(f"unknown schema {name!r}")
    text = resources.files(__name__).joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(obj, name):
    """Raise ``jsonschema.ValidationError`` unless ``obj`` matches schema ``name``."""
    jsonschema.validate(obj, load_schema(name))
    return obj
