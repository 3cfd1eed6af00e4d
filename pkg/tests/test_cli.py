import json

import pytest

from storage_automata.cli import main
from storage_automata.fileformat import FormatError, automaton_to_dict, load_automaton, loads, save_automaton


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_recognize_accept_with_witness(capsys):
    code, out, _ = run(capsys, "recognize", "examples/tss-anbncn.json", "--word", "aabbcc")
    assert code == 0
    assert out.startswith("ACCEPT")
    assert "t1 t1 t2 t3 t4 t4 t5 t6 t6 t7" in out


def test_recognize_reject(capsys):
    code, out, _ = run(capsys, "recognize", "tss-anbncn", "--word", "aabc")
    assert code == 1 and out.strip() == "REJECT"


def test_recognize_tokens_and_json(capsys):
    code, out, _ = run(capsys, "--format", "json", "recognize", "pd2-equal-length", "--tokens", "--word", "a b # a' b'")
    assert code == 0
    assert json.loads(out)["verdict"] == "ACCEPT"


def test_nbest_worked_example(capsys):
    code, out, _ = run(capsys, "nbest", "examples/pd-viterbi.json", "--word", "a#ca", "-n", "1", "--strategy", "count")
    assert code == 0
    assert out.strip() == "1\t6\tt1 t3 t4 t7 t5 t8"


def test_nbest_json(capsys):
    code, out, _ = run(capsys, "nbest", "pd-viterbi", "--word", "a#a", "--strategy", "top", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["certified"] and d["runs"][0]["transitions"] == ["t1", "t4", "t5", "t8"]


def test_weight_and_runs(capsys):
    code, out, _ = run(capsys, "weight", "pd-viterbi", "--word", "a#a")
    assert code == 0 and out.strip() == "4"
    code, out, _ = run(capsys, "runs", "count-anbn", "--word", "aabb", "--trace")
    assert code == 0 and "t1 t1 t2 t3 t4" in out and "(3, 1, ε)" in out


def test_validate_and_examples(capsys):
    code, out, _ = run(capsys, "validate", "tss-anbncn")
    assert code == 0 and "7 transitions" in out
    code, out, _ = run(capsys, "examples")
    assert code == 0 and "pd-viterbi" in out


def test_transform_and_approx_round_trip(capsys, tmp_path):
    out_file = tmp_path / "eo.json"
    code, _, _ = run(capsys, "approx", "count-anbn", "--strategy", "eo", "-o", str(out_file))
    assert code == 0
    code, out, _ = run(capsys, "recognize", str(out_file), "--word", "bb")
    assert code == 0
    fsa_file = tmp_path / "fsa.json"
    code, _, _ = run(capsys, "transform", "to-fsa", str(out_file), "-o", str(fsa_file))
    assert code == 0
    code, out, _ = run(capsys, "recognize", str(fsa_file), "--word", "abbb")
    assert code == 0
    code, _, err = run(capsys, "transform", "to-fsa", "count-anbn", "--cap", "40")
    assert code == 3 and "cap" in err


def test_det_bounded_needs_bound(capsys):
    code, _, err = run(capsys, "transform", "det-bounded", "pd-dagger-even")
    assert code == 3 and "--bound" in err
    code, out, _ = run(capsys, "transform", "det-bounded", "pd-dagger-even", "--bound", "2")
    assert code == 0 and json.loads(out)["storage"]["kind"] == "bounded-split"


def test_errors_exit_3(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"alphabet": ["a"], "storage": {"kind": "weird"}, "states": [1], "initial": [1], "final": [1], "transitions": []}')
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 3 and "unknown storage kind" in err
    broken = tmp_path / "broken.json"
    broken.write_text("{\n  nope")
    code, _, err = run(capsys, "validate", str(broken))
    assert code == 3 and ":2:" in err
    code, _, err = run(capsys, "nbest", "pd2-equal-length", "--word", "#", "--strategy", "top")
    assert code == 3 and "weighted" in err


def test_check_command(capsys):
    code, out, _ = run(capsys, "check", "--samples", "200")
    assert code == 0 and "violations" in out


@pytest.mark.parametrize(
    "name", ["count-anbn", "pd2-equal-length", "pd-dagger-palindrome", "pd-dagger-even", "tss-anbncn", "pd-viterbi"]
)
def test_save_load_round_trip(name, tmp_path):
    m = load_automaton(name)
    path = tmp_path / f"{name}.json"
    save_automaton(m, path)
    again = load_automaton(path)
    assert automaton_to_dict(again) == automaton_to_dict(m)


def test_generated_ids_and_missing_fields():
    m = loads(
        '{"alphabet": ["a"], "storage": {"kind": "count"}, "states": [1], "initial": [1], "final": [1],'
        ' "transitions": [{"from": 1, "read": "a", "pred": "N", "instr": "inc", "to": 1}, {"id": "t1", "from": 1, "pred": "N", "instr": "dec", "to": 1}]}'
    )
    assert [t.id for t in m.transitions] == ["t2", "t1"]
    assert m.by_id["t1"].read is None
    with pytest.raises(FormatError, match="missing field 'states'"):
        loads('{"alphabet": [], "storage": {"kind": "count"}, "initial": [], "final": [], "transitions": []}')
    with pytest.raises(FormatError, match="without a 'semiring'"):
        loads(
            '{"alphabet": ["a"], "storage": {"kind": "count"}, "states": [1], "initial": [1], "final": [1],'
            ' "transitions": [{"from": 1, "read": "a", "pred": "N", "instr": "inc", "to": 1, "weight": 2}]}'
        )


def test_derived_storages_round_trip(tmp_path):
    from storage_automata import approx, transform
    from storage_automata.automaton import language

    vit = load_automaton("pd-viterbi")
    for m in (
        approx.approximate_automaton(vit, approx.parse_chain(["count", "eo"], vit.storage)),
        transform.determinize_powerset(load_automaton("pd2-equal-length")),
        transform.predicate_free(load_automaton("count-anbn")),
    ):
        path = tmp_path / "m.json"
        save_automaton(m, path)
        again = load_automaton(path)
        assert language(again, 4).words == language(m, 4).words
