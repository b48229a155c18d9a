import json
import subprocess
import sys
from pathlib import Path

import pytest

from maskron.cli import main
from maskron.masking import load_keyring

FIXTURE = str(Path(__file__).parent / "fixtures" / "five_docs.ndjson")


def test_mask_file_to_file(tmp_path):
    src = tmp_path / "in.txt"
    src.write_text("My phone number is 111-111-1111\n")
    out, metrics = tmp_path / "out.txt", tmp_path / "m.json"
    assert main(["mask", "--input", str(src), "--output", str(out), "--metrics", str(metrics)]) == 0
    assert out.read_text() == "My phone number is <PHONE_NUMBER>\n"
    assert json.loads(metrics.read_text())["records_out"] == 1


def test_mask_dead_letter_exit_code(tmp_path):
    src = tmp_path / "in.txt"
    src.write_bytes(b"fine\n\xff\n")
    dead = tmp_path / "dead.ndjson"
    code = main(["mask", "--input", str(src), "--output", str(tmp_path / "o"), "--dead-letter", str(dead)])
    assert code == 2
    assert json.loads(dead.read_text())["record_index"] == 1


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[runtime]\nparallelism = 0\n")
    assert main(["mask", "--config", str(cfg), "--input", str(cfg)]) == 1
    assert "parallelism" in capsys.readouterr().err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["mask", "--no-such-flag"])
    assert exc.value.code == 1


def test_keygen_encrypt_unmask_roundtrip(tmp_path, monkeypatch):
    ring = tmp_path / "ring.json"
    assert main(["keygen", "--keyring", str(ring)]) == 0
    key_id = next(iter(load_keyring(ring).keys))
    cfg = tmp_path / "c.toml"
    cfg.write_text(f'[runtime]\nkeyring = "ring.json"\n'
                   f'[policy.types.SSN]\nstrategy = "ENCRYPT"\nkey_id = "{key_id}"\n')
    src = tmp_path / "in.txt"
    src.write_text("ssn 123-45-6789 [[x]]\n")
    masked, restored = tmp_path / "masked.txt", tmp_path / "restored.txt"
    assert main(["mask", "--config", str(cfg), "--input", str(src), "--output", str(masked)]) == 0
    assert "123-45-6789" not in masked.read_text()
    monkeypatch.setenv("MASKRON_KEYRING", str(ring))
    assert main(["unmask", "--input", str(masked), "--output", str(restored)]) == 0
    assert restored.read_text() == src.read_text()


def test_dict_build_and_probe(tmp_path):
    names = tmp_path / "names.txt"
    names.write_text("Alice\nBob\n")
    filt = tmp_path / "names.blm"
    proc = subprocess.run([sys.executable, "-m", "maskron", "dict", "build", "--input", str(names),
                           "--output", str(filt), "--fpr", "0.001"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["n_inserted"] == 2
    proc = subprocess.run([sys.executable, "-m", "maskron", "dict", "probe", "--filter", str(filt)],
                          input="alice\nzed\n", capture_output=True, text=True)
    assert proc.stdout.splitlines() == ["alice\tmaybe", "zed\tno"]


def test_eval_report(tmp_path, capsys):
    report = tmp_path / "r.json"
    assert main(["eval", "--corpus", FIXTURE, "--report", str(report)]) == 0
    micro = json.loads(report.read_text())["micro"]
    assert (micro["tp"], micro["fp"], micro["fn"]) == (3, 1, 2)


def test_detect_stdout(tmp_path, capsys):
    src = tmp_path / "in.txt"
    src.write_text("call 111-111-1111\n")
    assert main(["detect", "--input", str(src), "--output", str(tmp_path / "d.ndjson")]) == 0
    rec = json.loads((tmp_path / "d.ndjson").read_text())
    assert (rec["start"], rec["end"], rec["type"]) == (5, 17, "PHONE_NUMBER")
