"""Drive the command line front end and read back its run records."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

out = Path(tempfile.mkdtemp(prefix="ratio-lab-"))


def cli(*args):
    cmd = [sys.executable, "-m", "ratio_lab.cli", "--out-dir", str(out), *args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    print("$ ratio-lab", " ".join(args), f"  (exit {proc.returncode})")
    print(proc.stdout + proc.stderr)
    return proc


cli("solve", "--n", "2", "--eps", "0.1")
cli("solve", "--n", "2", "--eps", "1.5")
sweep = cli("sweep", "--n", "2", "--log-range", "0.01,0.2,5", "--threads", "4")
cli("verify", "--suite", "sub", "--n", "2", "--c1", "0.4", "--c2", "0.9")
record = Path(sweep.stdout.strip().splitlines()[-1].split()[-1])
print("record fields:", sorted(json.loads(record.read_text())))
cli("plotdata", "--record", str(record.parent), "--kind", "scaling")
