#!/usr/bin/env python3
"""Apply a mutation script to a session archive through the library (no HTTP)
and print the state after every step as JSON, for comparison against a
scripted client driving the same archive over the wire.

Usage: headless_replay.py <archive-dir> <script.json>
"""

import json
import sys

from salp.pipeline import finalize_and_train
from salp.session import apply_manual_labels, load_archive, set_threshold, undo


def state_of(session):
    return {
        "auto": len(session.auto_ids),
        "residue": len(session.residue_ids),
        "manual": len(session.manual_labels),
        "manual_map": {str(k): v for k, v in sorted(session.manual_labels.items())},
        "tau": session.tau,
    }


def main():
    archive, script_path = sys.argv[1], sys.argv[2]
    bundle = load_archive(archive)
    session = bundle.session
    with open(script_path) as fh:
        script = json.load(fh)
    steps = []
    for op in script:
        kind = op["op"]
        if kind == "threshold":
            set_threshold(session, op["tau"])
        elif kind == "labels":
            batch = [(a["id"], a["label"]) for a in op["assignments"]]
            apply_manual_labels(session, batch, bundle.dataset.n_classes)
        elif kind == "undo":
            undo(session)
        elif kind == "finalize":
            report = finalize_and_train(bundle)
            steps.append({"after": kind, "report": {
                "protocol": report.protocol,
                "kappa": report.kappa,
                "propagation_accuracy": report.propagation_accuracy,
                "counts": {"supervised": report.n_supervised,
                           "unsupervised": report.n_unsupervised,
                           "auto": report.n_auto,
                           "manual": report.n_manual,
                           "test": report.n_test},
            }})
            continue
        else:
            raise ValueError(f"unknown op {kind!r}")
        steps.append({"after": kind, **state_of(session)})
    print(json.dumps(steps))


if __name__ == "__main__":
    main()
