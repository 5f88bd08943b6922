from __future__ import annotations

import subprocess
import sys

from vtbound.cli import main


def _strip_elapsed(text: str) -> str:
    return "\n".join(l for l in text.splitlines() if not l.startswith("elapsed-seconds"))


def test_explore_bug_exit_code(tmp_path, capsys):
    out = tmp_path / "r.txt"
    code = main(["explore", "fig3", "--c", "2", "--v", "1", "--t", "2", "--out", str(out)])
    assert code == 1
    text = out.read_text()
    assert "signature: (2,1,2)" in text
    assert text == capsys.readouterr().out


def test_explore_no_bug_exit_code(capsys):
    assert main(["explore", "fig3", "--c", "1", "--v", "1"]) == 0
    assert "bugs: 0" in capsys.readouterr().out


def test_unknown_program_is_usage_error(capsys):
    assert main(["explore", "no-such-program"]) == 2
    assert "unknown program" in capsys.readouterr().err


def test_bad_arguments_exit_two(capsys):
    assert main(["explore", "fig3", "--c", "notanumber"]) == 2
    assert main(["classify", "fig3", "--limits", "1,2"]) == 2
    assert main(["explore", "fig3", "--t", "1"]) == 2


def test_report_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["explore", "fig9", "--c", "2", "--v", "2", "--t", "3", "--seed", "5", "--out", str(a)])
    main(["explore", "fig9", "--c", "2", "--v", "2", "--t", "3", "--seed", "5", "--out", str(b)])
    assert _strip_elapsed(a.read_text()) == _strip_elapsed(b.read_text())


def test_replay_from_report(tmp_path, capsys):
    rep = tmp_path / "r.txt"
    main(["explore", "fig3", "--c", "2", "--v", "1", "--out", str(rep)])
    capsys.readouterr()
    assert main(["replay", str(rep)]) == 1
    out = capsys.readouterr().out
    assert "bug: assert:T0" in out and "signature: (2,1,2)" in out


def test_replay_missing_file(tmp_path):
    assert main(["replay", str(tmp_path / "missing")]) == 2


def test_classify_prints_signature(capsys):
    assert main(["classify", "fig8", "--limits", "3,3,4"]) == 1
    assert "signature: (1,1,3)" in capsys.readouterr().out


def test_classify_bug_free(capsys):
    assert main(["classify", "locked-increment", "--limits", "1,1,2"]) == 0
    assert "signature: not-found" in capsys.readouterr().out


def test_random_csv_rows(capsys):
    assert main(["random", "fig2", "--strategy", "pctvb", "--vars", "a", "--trials", "3"]) == 1
    out = capsys.readouterr().out
    assert "trial,executions,found" in out and "found: 3" in out


def test_permcover_output(capsys):
    assert main(["permcover", "--n", "5", "--t", "2", "--trials", "2"]) == 0
    out = capsys.readouterr().out
    assert "required: " in out and out.count("\n1,") == 1


def test_profile_and_catalog(capsys):
    assert main(["profile", "fig4", "--runs", "3"]) == 0
    assert "site,mean,max" in capsys.readouterr().out
    assert main(["catalog"]) == 0
    assert "abba,(1,1,2)" in capsys.readouterr().out


def test_module_entry_point():
    r = subprocess.run(
        [sys.executable, "-m", "vtbound", "explore", "fig1", "--c", "0"],
        capture_output=True, text=True,
    )
    assert r.returncode == 1 and "bugs: 1" in r.stdout
