"""The command-line driver is bitwise reproducible.

Same config + seed => byte-identical report and CSV files; the thread
count parallelizes the work without touching a single byte of output.
"""

import filecmp
import json
import tempfile
from pathlib import Path

from sbmlab.cli import main

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    cfg = tmp / "config.json"
    cfg.write_text(json.dumps(
        {"d": 2, "n_init": 60, "dt": 1e-3, "t": 0.25, "replicas": 24}
    ))

    runs = {
        "first": ["--threads", "1"],
        "again": ["--threads", "1"],
        "pooled": ["--threads", "2"],
    }
    for name, extra in runs.items():
        argv = ["simulate", "--config", str(cfg), "--seed", "99",
                "--out", str(tmp / name)] + extra
        code = main(argv)
        print(f"run {name!r}: exit {code}")

    names = sorted(p.name for p in (tmp / "first").iterdir())
    print("\nfiles:", ", ".join(names))
    for other in ("again", "pooled"):
        match, mismatch, errors = filecmp.cmpfiles(
            tmp / "first", tmp / other, names, shallow=False
        )
        verdict = "byte-identical" if match == names else f"MISMATCH {mismatch}"
        print(f"first vs {other}: {verdict}")

    report = json.loads((tmp / "first" / "simulate_report.json").read_text())
    print(f"\nconfig digest: {report['config_sha256'][:16]}...  seed: {report['seed']}")
    print(f"mass summary: {report['report']['mass']}")
