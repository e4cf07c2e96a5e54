import pytest

from conftest import fixture_text
from surfalg.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, Report, build_parser, load_surface, main
from surfalg.surface import parse_surface, validate


def output(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def run_with_errors(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_quasi_on_fixture_passes(capsys):
    code, out = output(capsys, "quasi", "disk3")
    assert code == EXIT_OK
    assert "failures: 0" in out
    assert "#machine" in out


def test_output_is_deterministic(capsys):
    _, first = output(capsys, "quasi", "disk4", "--seed", "2")
    _, second = output(capsys, "quasi", "disk4", "--seed", "2")
    assert first == second


def test_bracket_verb(capsys):
    code, out = output(capsys, "bracket", "disk3", "a1", "a2")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "1/2 * (a2^1 a1^1) (x) (1)"


def test_triple_verb(capsys):
    code, out = output(capsys, "triple", "threearcs", "a1", "a2", "a3")
    assert code == EXIT_OK
    assert "equal: yes" in out


def test_missing_file_is_usage_error(capsys):
    code, out, err = run_with_errors(capsys, "validate", "no-such-surface.surf")
    assert code == EXIT_USAGE
    assert out == ""
    assert "error: no such surface file" in err


def test_bad_expression_is_usage_error(capsys):
    code, _ = output(capsys, "bracket", "disk3", "a1 +", "a2")
    assert code == EXIT_USAGE


def test_malformed_sizes_rejected_by_parser():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["evaluate", "disk3", "a1", "--sizes", "5,x"])
    assert info.value.code == 2


def test_validate_reports_failure(tmp_path, capsys):
    broken = tmp_path / "broken.surf"
    broken.write_text(fixture_text("disk3").replace("fan 1: a1.t a3.h", "fan 1: a1.t"))
    code, out = output(capsys, "validate", str(broken))
    assert code == EXIT_FAILED
    assert "status\tfail" in out


def test_cover_writes_surface_and_sidecar(tmp_path, capsys):
    target = tmp_path / "triangle3.surf"
    code, out = output(capsys, "cover", "--n", "3", "triangle", "--out", str(target))
    assert code == EXIT_OK
    assert "triangle t: 6/3/9 (white/interior black/zigzags), 9 edge black" in out
    assert "euler characteristic 0 = 0" in out
    cover = parse_surface(target.read_text())
    assert validate(cover).passed
    assert len(cover.punctures) == 9
    assert target.with_suffix(".sidecar").read_text().startswith("# cover of triangle, n = 3")


def test_flip_lists_substitutions(capsys):
    code, out = output(capsys, "flip", "disk4", "d13")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "flip d13 -> d13'"
    assert any(line.startswith("a24 -> ") for line in lines)


def test_dropped_term_fails_the_round_trip(capsys):
    code, out = output(capsys, "equivariance", "disk4", "d13", "--corrupt", "--sizes", "2", "--samples", "1")
    assert code == EXIT_FAILED
    assert "round trip: fail" in out


def test_shifted_image_fails_a_pair(capsys):
    code, out = output(
        capsys, "equivariance", "disk4", "d13", "--corrupt", "shift", "--sizes", "2", "--samples", "1"
    )
    assert code == EXIT_FAILED
    assert "symbolic a42 a41: fail" in out


def test_evaluate_face_relation(capsys):
    code, out = output(capsys, "evaluate", "disk3", "a3 a2 a1", "--sizes", "2", "--seed", "1")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "N = 2: -1/1 0/1; 0/1 -1/1"


def test_untwisted_evaluation(capsys):
    _, out = output(capsys, "evaluate", "disk3", "a3 a2 a1", "--sizes", "1", "--twist", "off")
    assert out.splitlines()[0] == "N = 1: 1/1"


def test_explore_with_depth(capsys):
    code, out = output(capsys, "explore", "disk5", "--depth", "1")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "nodes 3, flips 2"


def test_load_surface_accepts_fixture_names():
    assert load_surface("disk4").name == load_surface("disk4.surf").name == "disk4"


def test_report_render():
    report = Report()
    report.add("checked", "count", 3)
    report.add("no record")
    assert report.render() == "checked\nno record\n#machine\ncount\t3\n"
