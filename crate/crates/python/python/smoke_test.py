"""Smoke test for the ooc_verify extension module.

Uses an installed `ooc_verify` when available (e.g. after
`pip install -e crates/python --no-build-isolation`); otherwise loads the
library that `cargo build -p ooc-verify-py` left in target/.

    python3 crates/python/python/smoke_test.py
"""

import importlib.machinery
import importlib.util
import json
import shutil
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).resolve().parent
ROOT = HERE.parents[2]
SUITE = ROOT / "crates" / "core" / "tests" / "fixtures" / "suite"


def load_module():
    try:
        import ooc_verify  # noqa: F401

        return sys.modules["ooc_verify"]
    except ImportError:
        pass
    for profile in ("debug", "release"):
        for name in ("libooc_verify_py.so", "libooc_verify_py.dylib", "ooc_verify_py.dll"):
            built = ROOT / "target" / profile / name
            if built.exists():
                staged = Path(tempfile.mkdtemp()) / ("ooc_verify" + importlib.machinery.EXTENSION_SUFFIXES[0])
                shutil.copy(built, staged)
                spec = importlib.util.spec_from_file_location("ooc_verify", staged)
                module = importlib.util.module_from_spec(spec)
                spec.loader.exec_module(module)
                return module
    sys.exit("ooc_verify not installed and no built library found; run `cargo build -p ooc-verify-py`")


def main():
    ov = load_module()
    records = [json.loads(line) for line in (SUITE / "dataset.jsonl").read_text().splitlines() if line.strip()]
    golden = json.loads((SUITE / "golden" / "report.json").read_text())
    expected = {s["id"]: s["predicted"] for s in golden["per_sample"]}

    with tempfile.TemporaryDirectory() as tmp:
        verifier = ov.Verifier(str(SUITE / "config.toml"), cache_dir=str(Path(tmp) / "cache"))
        assert verifier.fingerprint == golden["config_fingerprint"], verifier.fingerprint
        assert verifier.fingerprint == ov.config_fingerprint(str(SUITE / "config.toml"))

        for record in records[:6]:
            verdict = verifier.verify(str(SUITE / record["image_path"]), record["caption"])
            assert verdict["label"] == expected[record["id"]], (record["id"], verdict)
            assert 0 <= verdict["confidence"] <= 10
            assert set(verdict) == {"label", "confidence", "explanation", "evidence_ids"}

        traced = verifier.verify(str(SUITE / records[0]["image_path"]), records[0]["caption"], with_trace=True)
        assert traced["trace"]["config_fingerprint"] == golden["config_fingerprint"]

        try:
            verifier.verify(str(Path(tmp) / "missing.img"), "A caption")
        except ov.OocError as e:
            assert e.code == "EImageUnreadable", e.code
        else:
            raise AssertionError("missing image did not raise")

        try:
            ov.Verifier(str(SUITE / "config.toml"), cache_dir=str(Path(tmp) / "cold"), offline=True).verify(
                str(SUITE / records[0]["image_path"]), records[0]["caption"]
            )
        except ov.OocError as e:
            assert e.code == "EProviderUnavailable", e.code
        else:
            raise AssertionError("offline cold cache did not raise")

        report_dir = Path(tmp) / "report"
        report = ov.benchmark(str(SUITE / "dataset.jsonl"), str(report_dir), config=str(SUITE / "config.toml"))
        assert (report_dir / "report.json").read_bytes() == (SUITE / "golden" / "report.json").read_bytes()
        assert report["exact"]["acc_all"] == golden["exact"]["acc_all"]

    print("smoke test passed: %d verdicts, benchmark %s" % (7, report["exact"]["acc_all"]))


if __name__ == "__main__":
    main()
