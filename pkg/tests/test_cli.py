import filecmp
import os

import numpy as np
import pytest

from wayfinding import cli
from wayfinding.cli import EXIT_INVALID, EXIT_IO, EXIT_OK, RunConfig, build_config, main, parse_config
from wayfinding.entropy import read_pgm
from wayfinding.params import ModelParams


@pytest.fixture(scope="module")
def bench_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("scn") / "benchmark.txt"
    assert main(["generate-benchmark", str(path)]) == EXIT_OK
    return path


def _artifacts(directory):
    return sorted(f for f in os.listdir(directory) if f.startswith("entropy_"))


def test_generated_benchmark_validates(bench_file, capsys):
    assert main(["validate", str(bench_file)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "ok"
    text = bench_file.read_text()
    assert text.startswith("#") and "[grid]" in text and "[legend]" in text


def test_generate_benchmark_io_error(tmp_path):
    assert main(["generate-benchmark", str(tmp_path / "missing" / "b.txt")]) == EXIT_IO


def test_validate_reports_problems(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("[grid]\n#####\n#S..#\n#####\n#..1#\n#####\n")
    assert main(["validate", str(bad)]) == EXIT_INVALID
    assert "unreachable destination" in capsys.readouterr().out
    assert main(["validate", str(tmp_path / "nope.txt")]) == EXIT_IO
    broken = tmp_path / "broken.txt"
    broken.write_text("[grid]\nS?1\n")
    assert main(["validate", str(broken)]) == EXIT_INVALID


def test_dump_topology(bench_file, tmp_path, capsys):
    assert main(["dump-topology", str(bench_file)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "regions: 4" in out and "openings: 7" in out
    target = tmp_path / "topo.txt"
    assert main(["dump-topology", str(bench_file), "--output", str(target)]) == EXIT_OK
    assert target.read_text() == out


def test_help_flags_mark_defaults_uncalibrated(capsys):
    with pytest.raises(SystemExit):
        main(["run", "--help"])
    text = capsys.readouterr().out
    assert "--k_tt" in text and "--plausibility_factor" in text
    assert text.count("UNCALIBRATED") >= len(ModelParams.field_types())


def test_config_parsing():
    values = parse_config("# demo\nseed = 4\nsteps=10  # short\nsnapshot_steps = 0, 5,10\ngamma = inf\nk_q = -2\n")
    cfg = build_config(values)
    assert cfg.seed == 4 and cfg.steps == 10 and cfg.snapshot_steps == [0, 5, 10]
    assert cfg.params.gamma == float("inf") and cfg.params.k_q == -2.0
    with pytest.raises(ValueError, match="unknown key"):
        parse_config("colour = red\n")
    with pytest.raises(ValueError, match="line 2"):
        parse_config("seed = 1\nsteps = many\n")


def test_config_invariants():
    assert RunConfig(scenario="x", steps=5, snapshot_steps=[6]).validate() == ["snapshot steps [6] outside [0, 5]"]
    assert "steps must be >= 0" in RunConfig(scenario="x", steps=-1, snapshot_steps=[]).validate()


def test_run_rejects_out_of_range_snapshot(bench_file, tmp_path):
    code = main(["run", "--scenario", str(bench_file), "--steps", "3", "--snapshot_steps", "5", "--output", str(tmp_path)])
    assert code == EXIT_INVALID


def test_run_rejects_unknown_config_key(bench_file, tmp_path):
    conf = tmp_path / "c.txt"
    conf.write_text("speed_of_light = 3\n")
    assert main(["run", "--config", str(conf), "--scenario", str(bench_file)]) == EXIT_INVALID
    assert main(["run", "--config", str(tmp_path / "absent.txt")]) == EXIT_IO


def test_run_invalid_scenario(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("[grid]\n#####\n#S..#\n#####\n#..1#\n#####\n")
    assert main(["run", "--scenario", str(bad), "--output", str(tmp_path / "o")]) == EXIT_INVALID


def test_step_zero_only(bench_file, tmp_path):
    out = tmp_path / "zero"
    assert main(["run", "--scenario", str(bench_file), "--steps", "0", "--snapshot_steps", "0", "--output", str(out)]) == EXIT_OK
    assert _artifacts(out) == [
        "entropy_step00000_dest1.csv",
        "entropy_step00000_dest1.pgm",
        "entropy_step00000_dest1_mask.pgm",
    ]
    summary = (out / "summary.txt").read_text()
    assert "spawned = 0" in summary and "in_world = 0" in summary


def test_figure_steps_produce_four_maps(bench_file, tmp_path):
    out = tmp_path / "fig"
    code = main(
        ["run", "--scenario", str(bench_file), "--steps", "650", "--snapshot_steps", "0,325,625,650", "--output", str(out), "--seed", "3"]
    )
    assert code == EXIT_OK
    files = _artifacts(out)
    csvs = [f for f in files if f.endswith(".csv")]
    images = [f for f in files if f.endswith(".pgm") and not f.endswith("_mask.pgm")]
    assert len(csvs) == 4 and len(images) == 4
    assert [f[12:17] for f in csvs] == ["00000", "00325", "00625", "00650"]
    pixels, comments = read_pgm(out / images[1])
    assert "step=325" in comments[0] and pixels.shape == (77, 32)
    summary = dict(line.split(" = ") for line in (out / "summary.txt").read_text().splitlines())
    assert int(summary["spawned"]) >= int(summary["despawned"]) > 0
    assert int(summary["in_world"]) == int(summary["spawned"]) - int(summary["despawned"])
    assert {f"crossings.{o}" for o in "abcdefg"} <= set(summary)


def _run(bench_file, out, *extra):
    args = ["run", "--scenario", str(bench_file), "--steps", "80", "--snapshot_steps", "0,40,80", "--output", str(out), "--seed", "11"]
    assert main(args + list(extra)) == EXIT_OK


def _same_artifacts(a, b):
    names = _artifacts(a)
    assert names == _artifacts(b) and names
    match, mismatch, errors = filecmp.cmpfiles(a, b, names + ["summary.txt"], shallow=False)
    assert not mismatch and not errors


def test_reruns_are_byte_identical(bench_file, tmp_path):
    _run(bench_file, tmp_path / "one")
    _run(bench_file, tmp_path / "two")
    _same_artifacts(tmp_path / "one", tmp_path / "two")


def test_dumped_config_reproduces_the_run(bench_file, tmp_path):
    _run(bench_file, tmp_path / "orig", "--k_q", "15", "--gamma", "inf")
    dumped = tmp_path / "orig" / "config.txt"
    cfg = build_config(parse_config(dumped.read_text()))
    assert cfg.params.k_q == 15 and cfg.params.gamma == float("inf")
    assert main(["run", "--config", str(dumped), "--output", str(tmp_path / "again")]) == EXIT_OK
    _same_artifacts(tmp_path / "orig", tmp_path / "again")


def test_flags_override_config(bench_file, tmp_path):
    conf = tmp_path / "c.txt"
    conf.write_text(f"scenario = {bench_file}\nseed = 1\nsteps = 2\nk_f = 1.5\n")
    args = cli.make_parser().parse_args(["run", "--config", str(conf), "--seed", "9"])
    cfg = cli.resolve_run_config(args)
    assert cfg.seed == 9 and cfg.steps == 2 and cfg.params.k_f == 1.5


def test_verbose_run_log(bench_file, tmp_path, capsys):
    assert main(["run", "--scenario", str(bench_file), "--steps", "3", "--output", str(tmp_path), "-v"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "step,agents,reevaluations,changes"
    assert [line.split(",")[0] for line in lines[1:4]] == ["0", "1", "2"]


def test_unwritable_output_is_an_io_error(bench_file, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--scenario", str(bench_file), "--output", str(blocker / "sub")]) == EXIT_IO


def test_csv_values_match_library(bench_file, tmp_path):
    out = tmp_path / "lib"
    assert main(["run", "--scenario", str(bench_file), "--output", str(out), "--images", "false"]) == EXIT_OK
    assert _artifacts(out) == ["entropy_step00000_dest1.csv"]
    body = np.loadtxt(out / "entropy_step00000_dest1.csv", delimiter=",", comments="#")
    assert body.shape == (77, 32)
    assert body.max() == pytest.approx(np.log2(3), abs=1e-6)
