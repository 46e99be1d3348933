#!/usr/bin/env python3
"""Reference adapter: answers every request with a fixed item list.

Speaks the crsbench line protocol on stdin/stdout: one JSON request per
line in, one JSON response per line out. Useful as a smoke-test adapter
and as a template for wrapping real recommenders.

Usage: echo_adapter.py [item1,item2,...]
"""
import json
import sys

ITEMS = sys.argv[1].split(",") if len(sys.argv) > 1 else ["101", "102", "103"]

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    request = json.loads(line)
    response = {"id": request["id"], "items": ITEMS[: request.get("k", 50)]}
    print(json.dumps(response), flush=True)
