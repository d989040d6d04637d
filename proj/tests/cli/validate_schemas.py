"""Validate scenario files and CLI output documents against docs/schemas."""

import json
import pathlib
import sys

import jsonschema
from referencing import Registry, Resource


def main(schema_dir, scenario_dir, out_dir):
    schemas = {}
    registry = Registry()
    for path in pathlib.Path(schema_dir).glob("*.schema.json"):
        doc = json.loads(path.read_text())
        schemas[doc["title"]] = doc
        registry = registry.with_resource(doc["$id"], Resource.from_contents(doc))

    def check(path, doc, name):
        validator = jsonschema.Draft202012Validator(schemas[name], registry=registry)
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
        for e in errors:
            print(f"{path}: {'/'.join(map(str, e.path))}: {e.message}")
        return not errors

    ok = True
    checked = 0
    for path in sorted(pathlib.Path(scenario_dir).glob("*.json")):
        ok &= check(path, json.loads(path.read_text()), "pdmpv.scenario/1")
        checked += 1
    for path in sorted(pathlib.Path(out_dir).rglob("*.json")):
        doc = json.loads(path.read_text())
        tag = doc.get("schema")
        if tag not in schemas:
            print(f"{path}: unknown schema tag {tag!r}")
            ok = False
            continue
        ok &= check(path, doc, tag)
        checked += 1
    print(f"{checked} documents checked")
    return 0 if ok and checked > 0 else 1


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:4]))
