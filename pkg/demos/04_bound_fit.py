# Run a config through the batch front-end, then fit the growth majorant
# q(t) = q0 / (1 - t C q0^p)^(1/p) to the recorded H3 + sup F series.
# The majorant is nearly flat until close to its expiry, so a run whose
# observable climbs steadily from the start can admit no fit at all.
import json
import tempfile
from pathlib import Path

from alphapatch.cli import analyze_dir, execute
from alphapatch.config import load_config
from dataclasses import replace

cfg = load_config(Path(__file__).with_name("trefoil.yaml"))
with tempfile.TemporaryDirectory() as tmp:
    for alpha in (0.5, 1.0):
        run_cfg = replace(cfg, alpha=alpha, scheme="qg_with_lambda" if alpha == 1.0 else "alpha_lt1")
        out = Path(tmp) / f"alpha{alpha}"
        verdict = execute(run_cfg, out)
        res = analyze_dir(out)
        print(f"alpha {alpha}: {verdict.reason}, exponent {res['exponent']}, q0 {res['q0']:.4f}")
        if res["C"] is None:
            print("  no fit:", res["fit_note"])
        else:
            print(f"  C {res['C']:.3e}, bound expires at t = {res['expiry']:.3g}")
        print("  first record:", (out / "series.ndjson").read_text().splitlines()[0][:100], "...")
        print("  analysis keys:", list(json.loads((out / "analysis.ndjson").read_text())))
