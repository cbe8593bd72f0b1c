"""
Ensemble files and the command line
===================================

Ensembles are stored as JSON. This writes the nine-state ensemble to a
temporary file, reloads it, and runs the verifier through the CLI entry
point.
"""

import io
import json
import tempfile
from pathlib import Path

from prodlocc import nine_state
from prodlocc.cli import main
from prodlocc.ensembles import load_ensemble, save_ensemble

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "nine.json"
    save_ensemble(nine_state(), path)
    back = load_ensemble(path)
    print("reloaded", len(back), "states, residual", back.max_orthogonality_residual())

    out = io.StringIO()
    code = main(["verify", str(path), "--party", "bob", "--oracle-trials", "10"], stdout=out)
    report = json.loads(out.getvalue())
    print("exit code", code)
    print("verdict", report["results"]["verdict"])
