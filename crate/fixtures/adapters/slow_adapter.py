#!/usr/bin/env python3
"""Misbehaving adapter fixture: sleeps past any reasonable timeout.

Usage: slow_adapter.py [seconds]
"""
import json
import sys
import time

DELAY = float(sys.argv[1]) if len(sys.argv) > 1 else 60.0

for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    request = json.loads(line)
    time.sleep(DELAY)
    print(json.dumps({"id": request["id"], "items": ["101"]}), flush=True)
