import json
import logging
import pathlib

import pytest

from sepgraph.cli import main
from sepgraph.orientation import read_orientation

sgr_dir = pathlib.Path(__file__).parent.parent.parent / "data" / "sgr"
running_example = str(sgr_dir / "running_example.sgr")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out) if out else None


def test_validate(capsys):
    code, report = run(capsys, "validate", running_example)
    assert code == 0
    assert report["command"] == "validate"
    assert report["graph"] == {"vertices": 13, "edges": 24, "groups": 9}
    assert report["verdict"] is True
    assert "version" in report


def test_validate_broken_graph(capsys):
    code = main(["validate", str(sgr_dir / "broken.sgr")])
    captured = capsys.readouterr()
    assert code == 2
    assert captured.out == ""
    assert "line 2" in captured.err


def test_missing_file(capsys, tmp_path):
    code = main(["validate", str(tmp_path / "missing.sgr")])
    assert code == 2
    assert "sepgraph: error:" in capsys.readouterr().err


def test_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["frobnicate", running_example])
    assert excinfo.value.code == 2


def test_analyze(capsys):
    code, report = run(capsys, "analyze", sgr_dir / "emn22.sgr")
    assert code == 0
    assert report["verdict"] is False
    rows = {row["vertex"]: row for row in report["branching"]}
    assert rows["u"]["return_count"] == 4
    assert rows["u"]["branching"] is True
    assert rows["u"]["witness"] is True
    assert rows["w"]["branching"] is False


def test_check_n_holds(capsys):
    code, report = run(capsys, "check-n", running_example)
    assert code == 0
    assert report["verdict"] is True
    assert report["branching"] == ["u11", "u2", "u3", "u7"]


@pytest.mark.parametrize("strict", [[], ["--strict-returns"]])
def test_check_n_fails_with_witness(capsys, strict):
    code, report = run(
        capsys, "check-n", sgr_dir / "emn23.sgr", "--witness", *strict
    )
    assert code == 1
    assert report["verdict"] is False
    witness = report["witness"]
    assert witness["vertex"] == "u"
    assert witness["verified"] is True


def test_decompose(capsys):
    code, report = run(capsys, "decompose", running_example)
    assert code == 0
    subgraphs = report["subgraphs"]
    assert subgraphs["branch_free"] == ["u13", "u4", "u5", "u9"]
    assert subgraphs["acyclic"] == []
    assert subgraphs["critical_edges"] == ["b2_3", "b4_3"]
    assert subgraphs["edge_types"]["b2_3"] == "2"
    assert subgraphs["edge_types"]["g1_10"] == "3a"
    assert subgraphs["edge_types"]["b6_1"] == "3b"
    assert report["strata"] == [["u13", "u4", "u9"], ["u5"]]


def test_orient_synthesize(capsys, tmp_path):
    output = tmp_path / "running.orient"
    code, report = run(
        capsys, "orient", running_example, "--synthesize", "--output", output
    )
    assert code == 0
    orientation = report["orientation"]
    assert orientation["kind"] == "proper"
    assert len(orientation["subgraph"]) == 9
    positive = {e for e, s in orientation["signs"].items() if s > 0}
    assert positive == {"r7_3", "g11_3", "b2_1", "g12_3", "r8_3", "b6_1"}
    assert read_orientation(output) == orientation["signs"]


def test_orient_verify(capsys, tmp_path):
    signs = tmp_path / "source.orient"
    signs.write_text("orient a -1\norient b -1\norient c -1\n")
    code, report = run(
        capsys, "orient", sgr_dir / "source.sgr", "--verify", signs
    )
    assert code == 0
    assert report["verdict"] is True
    assert report["orientation"]["kind"] == "weak"
    assert report["orientation"]["cases"]["s"] == "no-out"


def test_orient_fails_without_condition_n(capsys):
    code = main(["orient", str(sgr_dir / "emn22.sgr")])
    assert code == 2
    assert "Condition (N)" in capsys.readouterr().err


def test_dynamics_patterns(capsys):
    code, report = run(
        capsys,
        "dynamics",
        sgr_dir / "emn22.sgr",
        "--at",
        "w",
        "--depth",
        "1",
        "--act",
        "e0^-1",
        "--limit",
        "4",
    )
    assert code == 0
    patterns = report["patterns"]
    assert patterns["count"] == 4
    assert len(patterns["dumps"]) == 4
    assert patterns["dumps"][0].startswith("pattern base=w depth=1\n")
    assert patterns["act"]["result"] == "pattern base=u depth=0\n1 @ u\n"


def test_dynamics_folner_on_loop(capsys):
    code, report = run(
        capsys,
        "dynamics",
        sgr_dir / "loop.sgr",
        "--depth",
        "2",
        "--act",
        "e^-1",
        "--folner",
        "4",
        "--orientation",
        sgr_dir / "loop_negative.orient",
    )
    assert code == 0
    folner = report["folner"]
    assert folner["members"] == [
        "e^-1",
        "e^-1.e^-1",
        "e^-1.e^-1.e^-1",
        "e^-1.e^-1.e^-1.e^-1",
    ]
    (translate,) = folner["translates"]
    assert translate["ratio"] == pytest.approx(0.25)
    assert translate["bound"] == pytest.approx(0.25)
    assert translate["mean_distance"] == pytest.approx(0.5)
    assert translate["mean_bound"] == pytest.approx(1.0)


def test_dynamics_folner_bound_is_relative_to_set_size(capsys):
    code, report = run(
        capsys,
        "dynamics",
        sgr_dir / "loop.sgr",
        "--depth",
        "2",
        "--act",
        "e^-1.e^-1",
        "--folner",
        "6",
        "--orientation",
        sgr_dir / "loop_negative.orient",
    )
    assert code == 0
    (translate,) = report["folner"]["translates"]
    assert translate["offset"] == 4
    assert translate["bound"] == pytest.approx(2 / (2 + 4))
    assert translate["ratio"] == pytest.approx(1 / 3)
    assert translate["ratio"] <= translate["bound"] + 1e-12


def test_dynamics_stabilizer_witness(capsys):
    code, report = run(
        capsys,
        "dynamics",
        sgr_dir / "emn22.sgr",
        "--at",
        "w",
        "--depth",
        "4",
        "--stabilizer-witness",
    )
    assert code == 0
    witness = report["witness"]
    assert witness["vertex"] == "u"
    assert witness["stabilized"] is True
    assert witness["free"] is True


def test_dynamics_rejects_inadmissible_word(capsys):
    code = main(
        ["dynamics", str(sgr_dir / "emn22.sgr"), "--act", "e1^-1.e0"]
    )
    assert code == 2
    assert capsys.readouterr().out == ""


def test_monoid_unperforation(capsys):
    code, report = run(
        capsys,
        "monoid",
        sgr_dir / "ex95.sgr",
        "--check",
        "unperforation",
        "--bound",
        "8",
        "--equal",
        "2*u",
        "2*v",
        "--leq",
        "u",
        "v",
    )
    assert code == 0
    result = report["monoid"]
    assert result["generators"] == ["u", "v", "w"]
    assert result["relations"] == ["w = 2*v", "w = 2*u"]
    check = result["checks"]["unperforation"]
    assert check["verdict"] == "false"
    assert check["counterexample"] == {"a": "u", "b": "v", "n": "2"}
    assert result["equal"] == "true"
    assert result["leq"] == "false"


def test_monoid_rejects_unknown_generator(capsys):
    code = main(
        [
            "monoid",
            str(sgr_dir / "ex95.sgr"),
            "--check",
            "separation",
            "--leq",
            "x",
            "u",
        ]
    )
    assert code == 2


def test_os_errors_exit_with_2(mocker, capsys):
    mocker.patch("sepgraph.cli.read_sgr", side_effect=PermissionError("no"))
    assert main(["validate", running_example]) == 2
    assert "sepgraph: error: no" in capsys.readouterr().err


def test_verbose_logs_to_stderr(capsys, mocker):
    config = mocker.patch("sepgraph.cli.logging.basicConfig")
    code, _ = run(capsys, "-v", "validate", running_example)
    assert code == 0
    assert config.call_args.kwargs["level"] == logging.DEBUG


def test_reports_are_reproducible(capsys):
    argv = ["decompose", running_example]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first
