"""Exit codes and output handling of the twg command line tool."""

import json
import os
import subprocess
import sys
import tempfile
from pathlib import Path

TWG = sys.argv[1]
CONFIGS = Path(sys.argv[2])


def twg(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("TWG_OUTPUT_DIR", None)
    if env:
        full_env.update(env)
    return subprocess.run([TWG, *args], capture_output=True, text=True, env=full_env)


def expect(cond, message):
    if not cond:
        print("FAILED:", message)
        sys.exit(1)


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)

    bad = tmp / "bad.json"
    bad.write_text('{"schema": "twistguide-config/1", "cross_section": ')
    r = twg("bands", str(bad))
    expect(r.returncode == 2, f"syntax error should exit 2, got {r.returncode}")
    expect("ConfigError" in r.stderr, "message names the error kind")

    wrong = tmp / "wrong.json"
    wrong.write_text(json.dumps({"schema": "twistguide-config/99"}))
    expect(twg("bands", str(wrong)).returncode == 2, "schema mismatch should exit 2")

    unknown = tmp / "unknown.json"
    unknown.write_text(json.dumps({"schema": "twistguide-config/1", "colour": "red"}))
    expect(twg("bands", str(unknown)).returncode == 2, "unknown key should exit 2")

    expect(twg("verify", str(unknown)).returncode == 2, "verify without checks should exit 2")
    expect(twg("bands", str(tmp / "missing.json")).returncode == 2, "missing file should exit 2")
    expect(twg("frobnicate").returncode == 2, "unknown subcommand should exit 2")

    # count needs a perturbation block: a config error raised by the stage chain
    r = twg("count", str(CONFIGS / "straight_tube.json"), "--out", str(tmp / "x"))
    expect(r.returncode == 2, f"count without perturbation should exit 2, got {r.returncode}")

    small = json.loads((CONFIGS / "straight_tube.json").read_text())
    small["cross_section"]["h"] = 0.1
    cfg = tmp / "small.json"
    cfg.write_text(json.dumps(small))

    r = twg("edges", str(cfg), "--quiet", env={"TWG_OUTPUT_DIR": str(tmp / "env")})
    expect(r.returncode == 0, f"edges run failed: {r.stderr}")
    report = json.loads((tmp / "env" / "report.json").read_text())
    expect(report["schema"] == "twistguide-report/1", "report schema")
    expect(report["stages"] == ["bands", "edges"], "stage gating")
    expect((tmp / "env" / "edges.txt").exists(), "edge table written")

    r = twg("bands", str(cfg), "-q", "--out", str(tmp / "flag"), env={"TWG_OUTPUT_DIR": str(tmp / "env2")})
    expect(r.returncode == 0 and (tmp / "flag" / "bands.txt").exists(), "--out wins over the environment")
    expect(not (tmp / "env2").exists(), "environment directory unused")

    lines = (tmp / "flag" / "bands.txt").read_text().splitlines()
    row = lines[1].split()
    expect(any(len(x.replace("-", "").replace(".", "").lstrip("0")) >= 15 for x in row[1:]), "17 digit numbers")

    checks = {"schema": "twistguide-config/1", "output_dir": str(tmp / "verify"),
              "verify": {"checks": [{"type": "inertia_vs_dense", "id": "3", "instances": 50, "max_dimension": 100}]}}
    vcfg = tmp / "verify.json"
    vcfg.write_text(json.dumps(checks))
    r = twg("verify", str(vcfg), "-q")
    expect(r.returncode == 0, f"verify failed: {r.stdout} {r.stderr}")
    expect("exact counting" in r.stdout and "pass" in r.stdout, "pass/fail matrix printed")
    expect(json.loads((tmp / "verify" / "verify.json").read_text())["passed"], "verify.json written")

    checks["verify"]["checks"][0] = {"type": "straight_tube", "id": "1", "lambda_tol": 1e-9,
                                     "cross_section": {"shape": "rectangle", "width": 1, "height": 1, "h": 0.1}}
    vcfg.write_text(json.dumps(checks))
    r = twg("verify", str(vcfg), "-q")
    expect(r.returncode == 1, f"failing check should exit 1, got {r.returncode}")

print("cli tests passed")
