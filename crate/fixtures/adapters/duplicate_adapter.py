#!/usr/bin/env python3
"""Misbehaving adapter fixture: returns duplicate item ids.

The harness must reject these responses as protocol violations.
"""
import json
import sys

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    request = json.loads(line)
    print(json.dumps({"id": request["id"], "items": ["101", "101", "102"]}), flush=True)
