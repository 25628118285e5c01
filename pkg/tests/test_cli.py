import json
import subprocess
import sys

import pytest

from edgestream.cli import build_parser, main


def kv(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


@pytest.fixture
def stream_file(tmp_path):
    path = tmp_path / "g.txt"
    assert main(["gen", "--kind", "multigraph", "--n", "128", "--delta", "16", "--seed", "4",
                 "--out", str(path)]) == 0
    return path


def test_color_then_verify(tmp_path, stream_file, capsys):
    out = tmp_path / "o.txt"
    summary = tmp_path / "s.json"
    code = main(["color", "--input", str(stream_file), "--output", str(out), "--multigraph",
                 "--epsilon", "1/3", "--seed", "2", "--instrument", "--memory-factor", "0.5",
                 "--summary", str(summary)])
    assert code == 0
    stats = kv(capsys.readouterr().out)
    assert int(stats["edges"]) == int(stream_file.read_text().split()[1])
    data = json.loads(summary.read_text())
    assert data["budget"] == int(stats["budget"])
    assert main(["verify", "--input", str(stream_file), "--output", str(out), "--summary", str(summary)]) == 0
    report = kv(capsys.readouterr().out)
    assert report["proper"] == "ok"
    assert report["budget_ok"] == "ok"
    assert report["pairs_ok"] == "ok"


def test_verify_flags_tampering(tmp_path, stream_file, capsys):
    out = tmp_path / "o.txt"
    main(["color", "--input", str(stream_file), "--output", str(out)])
    finals = [ln for ln in out.read_text().splitlines() if not ln.endswith("BOT")]
    color = finals[0].split()[1]
    # recolor every edge with the same color: guaranteed collisions
    same = [f"{ln.split()[0]} {color}" for ln in finals]
    out.write_text("\n".join(same) + "\n")
    capsys.readouterr()
    assert main(["verify", "--input", str(stream_file), "--output", str(out)]) == 1
    assert kv(capsys.readouterr().out)["proper"] == "FAIL"


def test_bench_reports_fractions(capsys):
    assert main(["bench", "--kind", "unbalanced-stars", "--n", "128", "--delta", "32", "--seeds", "3",
                 "--epsilon", "1/3", "--memory-factor", "0.5"]) == 0
    report = kv(capsys.readouterr().out)
    assert report["runs"] == "3"
    assert any(k.startswith("fraction.") for k in report)


def test_epsilon_parsing():
    parser = build_parser()
    assert str(parser.parse_args(["color", "--epsilon", "1/3"]).epsilon) == "1/3"
    with pytest.raises(SystemExit):
        parser.parse_args(["color", "--epsilon", "2"])


def test_console_entry_point(tmp_path):
    path = tmp_path / "g.txt"
    subprocess.run([sys.executable, "-m", "edgestream.cli", "gen", "--kind", "random-bipartite", "--n", "16",
                    "--delta", "4", "--out", str(path)], check=True)
    res = subprocess.run([sys.executable, "-m", "edgestream.cli", "color", "--input", str(path)],
                         check=True, capture_output=True, text=True)
    assert len(res.stdout.splitlines()) >= int(path.read_text().split()[1])
    assert "edges=" in res.stderr
