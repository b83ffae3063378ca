"""End-to-end runs of the command line against the fixture files."""

import json

import pytest

from mapforge import parse_mapping
from mapforge.cli import main

from conftest import FIXTURES


@pytest.fixture(autouse=True)
def plain_output(monkeypatch):
    monkeypatch.setenv("MAPFORGE_COLOR", "0")


def fx(name):
    return str(FIXTURES / name)


def run(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def test_validate_reports_the_mapping_kind(capsys):
    rc, out, _ = run(capsys, "validate", fx("copy_with_key.map"))
    assert rc == 0
    assert out == "ok: standard mapping\n"


def test_validate_json_payload(capsys):
    rc, out, _ = run(capsys, "validate", "--json", fx("braided_functions.map"))
    assert rc == 0
    payload = json.loads(out)
    assert payload["ok"] is True
    assert payload["kind"] == "st-so"


def test_parse_errors_point_at_the_spot(capsys, tmp_path):
    bad = tmp_path / "bad.map"
    bad.write_text("source { P/2 }\ntarget { R/2 }\nst {\n  P(x y) -> R(x, y).\n}\n")
    rc, _, err = run(capsys, "validate", str(bad))
    assert rc == 2
    assert f"{bad}:4:" in err
    assert "parse error" in err


def test_validation_failures_exit_three(capsys, tmp_path):
    bad = tmp_path / "unbound.map"
    bad.write_text(
        "source { P/2 }\ntarget { R/2 }\n"
        "st {\n  P(x, y) -> R(x, y).\n}\n"
        "tegd {\n  R(x, y) -> x = w.\n}\n"
    )
    rc, _, err = run(capsys, "validate", str(bad))
    assert rc == 3
    assert "unbound variable w" in err


def test_missing_file_is_reported_as_a_tool_error(capsys, tmp_path):
    rc, _, err = run(capsys, "validate", str(tmp_path / "absent.map"))
    assert rc == 2
    assert "absent.map" in err


def test_chase_renders_the_target_instance(capsys):
    rc, out, _ = run(
        capsys, "chase", "-m", fx("copy_with_key.map"), "-i", fx("single_pair.inst")
    )
    assert rc == 0
    assert out == "R(1, 2).\n"


def test_chase_failure_names_the_witness(capsys):
    rc, out, err = run(
        capsys, "chase", "-m", fx("copy_with_key.map"), "-i", fx("key_clash.inst")
    )
    assert rc == 1
    assert out == ""
    assert "chase failed: constants 2 and 3 forced equal" in err


def test_chase_json_and_output_file(capsys, tmp_path):
    rc, out, _ = run(
        capsys, "chase", "--json",
        "-m", fx("copy_with_key.map"), "-i", fx("single_pair.inst"),
    )
    assert rc == 0
    payload = json.loads(out)
    assert payload["ok"] is True
    assert payload["instance"] == {
        "facts": [{"rel": "R", "args": [{"c": "1"}, {"c": "2"}]}]
    }
    assert payload["stats"]["facts"] == 1

    target = tmp_path / "chased.inst"
    rc, _, _ = run(
        capsys, "chase",
        "-m", fx("copy_with_key.map"), "-i", fx("single_pair.inst"),
        "-o", str(target),
    )
    assert rc == 0
    assert target.read_text() == "R(1, 2).\n"


def test_compose_emits_one_second_order_mapping(capsys):
    rc, out, _ = run(capsys, "compose", fx("closure_head.map"), fx("closure_tail.map"))
    assert rc == 0
    composed = parse_mapping(out)
    assert composed.kind() == "st-so"
    rc, again, _ = run(capsys, "compose", fx("closure_head.map"), fx("closure_tail.map"))
    assert again == out


def test_compose_refuses_a_cyclic_intermediate(capsys, tmp_path):
    head = tmp_path / "head.map"
    head.write_text(
        "source { A/1 }\ntarget { B/2 }\n"
        "st {\n  A(x) -> exists y: B(x, y).\n}\n"
        "ttgd {\n  B(x, y) -> exists z: B(y, z).\n}\n"
    )
    tail = tmp_path / "tail.map"
    tail.write_text("source { B/2 }\ntarget { C/1 }\nst {\n  B(x, y) -> C(x).\n}\n")
    rc, _, err = run(capsys, "compose", str(head), str(tail))
    assert rc == 3
    assert "not weakly acyclic" in err
    assert "B.1" in err


def test_decompose_prints_numbered_stages(capsys, tmp_path):
    rc, out, _ = run(capsys, "decompose", fx("braided_functions.map"))
    assert rc == 0
    assert out.count("# stage") == 3

    prefix = tmp_path / "stage"
    rc, out, _ = run(capsys, "decompose", fx("braided_functions.map"), "-o", str(prefix))
    assert rc == 0
    assert "wrote 3 mappings" in out
    for i in (1, 2, 3):
        parse_mapping((tmp_path / f"stage.{i}.map").read_text())


def test_decompose_needs_a_second_order_part(capsys):
    rc, _, err = run(capsys, "decompose", fx("copy_with_key.map"))
    assert rc == 3
    assert "second-order" in err


def test_denest_lists_four_selector_symbols(capsys):
    rc, out, _ = run(capsys, "denest", fx("aliased_functions.map"))
    assert rc == 0
    flat = parse_mapping(out)
    assert len(flat.stso.functions) == 4
    rc, again, _ = run(capsys, "denest", fx("aliased_functions.map"))
    assert again == out


def test_denest_json_stats(capsys):
    rc, out, _ = run(capsys, "denest", "--json", fx("aliased_functions.map"))
    assert rc == 0
    payload = json.loads(out)
    assert payload["stats"] == {
        "clauses": 26,
        "rewritten_clauses": 2,
        "congruence_pairs": 6,
        "symbols": 4,
    }


def test_certain_prints_sorted_tuples(capsys):
    rc, out, _ = run(
        capsys, "certain",
        "-m", fx("copy_with_key.map"), "-q", fx("project_pair.q"),
        "-i", fx("single_pair.inst"),
    )
    assert rc == 0
    assert out == "1, 2\n"


def test_certain_reports_top_when_no_solution_exists(capsys):
    rc, out, _ = run(
        capsys, "certain",
        "-m", fx("copy_with_key.map"), "-q", fx("project_pair.q"),
        "-i", fx("key_clash.inst"),
    )
    assert rc == 0
    assert out == "top\n"


def test_certain_json_payload(capsys):
    rc, out, _ = run(
        capsys, "certain", "--json",
        "-m", fx("copy_with_key.map"), "-q", fx("project_pair.q"),
        "-i", fx("single_pair.inst"),
    )
    assert rc == 0
    assert json.loads(out) == {"top": False, "tuples": [["1", "2"]]}


def test_check_solutions_minimal(capsys):
    rc, out, _ = run(
        capsys, "check", "solutions", "--minimal",
        "-m", fx("merge_classes.map"), "-i", fx("merge_edges.inst"),
    )
    assert rc == 0
    assert out.count("# solution") == 3


def test_check_solutions_reports_emptiness(capsys):
    rc, out, _ = run(
        capsys, "check", "solutions",
        "-m", fx("copy_with_key.map"), "-i", fx("key_clash.inst"),
    )
    assert rc == 1
    assert "no solutions" in out


def test_check_equiv_of_a_mapping_with_itself(capsys):
    rc, out, _ = run(
        capsys, "check", "equiv", "--trials", "60",
        fx("copy_with_key.map"), fx("copy_with_key.map"),
    )
    assert rc == 0
    assert out.startswith("true")


def test_check_equiv_finds_a_counterexample(capsys, tmp_path):
    swapped = tmp_path / "swap.map"
    swapped.write_text("source { P/2 }\ntarget { R/2 }\nst {\n  P(x, y) -> R(y, x).\n}\n")
    rc, out, _ = run(
        capsys, "check", "equiv", "--trials", "60",
        fx("copy_with_key.map"), str(swapped),
    )
    assert rc == 1
    assert out.startswith("false")
    assert "# counterexample source" in out

    prefix = tmp_path / "cex"
    rc, out, _ = run(
        capsys, "check", "equiv", "--trials", "60",
        fx("copy_with_key.map"), str(swapped), "-o", str(prefix),
    )
    assert rc == 1
    assert (tmp_path / "cex.source.inst").exists()
    assert (tmp_path / "cex.target.inst").exists()


def test_check_member_walks_a_chain(capsys, tmp_path):
    good = tmp_path / "good.inst"
    good.write_text("T(1, 2).\n")
    rc, out, _ = run(
        capsys, "check", "member",
        fx("copy_with_key.map"), fx("copy_to_final.map"),
        "-i", fx("single_pair.inst"), "-j", str(good),
    )
    assert rc == 0
    assert out.startswith("true")

    bad = tmp_path / "bad.inst"
    bad.write_text("T(2, 1).\n")
    rc, out, _ = run(
        capsys, "check", "member",
        fx("copy_with_key.map"), fx("copy_to_final.map"),
        "-i", fx("single_pair.inst"), "-j", str(bad),
    )
    assert rc == 1
    assert out.startswith("false")


def test_exhausted_budget_exits_four(capsys, tmp_path):
    src = tmp_path / "one.inst"
    src.write_text("S(a).\n")
    empty = tmp_path / "none.inst"
    empty.write_text("")
    rc, out, _ = run(
        capsys, "check", "member", fx("braided_functions.map"),
        "-i", str(src), "-j", str(empty), "--budget-nulls", "0",
    )
    assert rc == 4
    assert out.startswith("unknown")
