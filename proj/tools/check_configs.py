"""Validate the sample configurations against the published schema."""

import glob
import json
import os
import sys

import jsonschema

root = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
schema = json.load(open(os.path.join(root, "docs", "config.schema.json")))
jsonschema.Draft202012Validator.check_schema(schema)
files = sorted(glob.glob(os.path.join(root, "configs", "*.json")))
if not files:
    sys.exit("no sample configs found")
for f in files:
    jsonschema.validate(json.load(open(f)), schema)
    print("valid", os.path.relpath(f, root))

# The schema must reject what the parser rejects.
bad = [
    {"command": "solve", "geometry": {"alpha1_deg": 90, "alpha2_deg": 90}},
    {"command": "sweep", "solver": {"mesh": {"ordr": 8}}},
    {"command": "singular"},
]
for doc in bad:
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError:
        continue
    sys.exit("schema accepted an invalid config: " + json.dumps(doc))
print("schema rejects", len(bad), "invalid configs")
