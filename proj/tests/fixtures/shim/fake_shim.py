# Copyright (c) 2026, The leti-engine Authors
# SPDX-License-Identifier: Apache-2.0
"""Test double for the runner shim: runs the script named on the command
line in a fresh namespace and prints one JSON report line."""

import contextlib
import io
import json
import sys
import traceback


def main():
    path = sys.argv[1]
    with open(path, encoding="utf-8") as f:
        source = f.read()
    out = io.StringIO()
    report = {"status": "pass", "exc_type": None, "traceback": None, "stdout": ""}
    try:
        with contextlib.redirect_stdout(out):
            exec(compile(source, path, "exec"), {"__name__": "__main__"})
    except BaseException as e:  # noqa: BLE001
        report["status"] = "fail"
        report["exc_type"] = type(e).__name__
        report["traceback"] = "".join(traceback.format_exception(type(e), e, e.__traceback__))
    report["stdout"] = out.getvalue()
    sys.stdout.write(json.dumps(report) + "\n")


if __name__ == "__main__":
    main()
