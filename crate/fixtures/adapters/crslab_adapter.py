#!/usr/bin/env python3
"""Template for wrapping a CRSLab-trained recommender as a crsbench adapter.

CRSLab (https://github.com/RUCAIBox/CRSLab) trains conversational
recommenders such as ReDial, KBRD and KGSF. This script shows the shape of
an adapter around one of those models: read a JSON request per line, run
the model's recommendation step, answer with a ranked id list.

The model-loading details depend on your CRSLab checkout, config and
checkpoint, so the `recommend` function below is a stub you fill in. The
only hard requirements are the line protocol and that returned ids match
the knowledge-base/corpus item ids used on the crsbench side.

Usage: crslab_adapter.py --config <crslab config> --checkpoint <path>
"""
import argparse
import json
import sys


def load_model(config_path, checkpoint_path):
    # e.g.:
    #   from crslab.config import Config
    #   from crslab.system import get_system
    #   config = Config(config_path)
    #   system = get_system(config, restore_system=True, ...)
    #   return system
    raise NotImplementedError("wire up your CRSLab system here")


def recommend(model, context_turns, answer, k):
    # Feed the dialogue history plus the (possibly perturbed) last answer to
    # the model's recommendation module and return up to k item ids, best
    # first, as strings.
    raise NotImplementedError


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", required=True)
    parser.add_argument("--checkpoint", required=True)
    args = parser.parse_args()

    model = load_model(args.config, args.checkpoint)
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        items = recommend(
            model,
            request["context"],
            request["answer"],
            request.get("k", 50),
        )
        print(json.dumps({"id": request["id"], "items": items}), flush=True)


if __name__ == "__main__":
    main()
