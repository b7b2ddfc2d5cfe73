import io
import json

import pytest

from papp_lab.cli import main
from papp_lab.constructions import build_thiele_counterexample
from papp_lab.core import Profile, profile_to_json
from papp_lab.rules import WeightVector


@pytest.fixture
def write(tmp_path):
    def make(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return make


def run(capsys, argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin))
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestEval:
    def test_thm3_profile(self, capsys, write):
        bundle = build_thiele_counterexample(WeightVector.pav())
        path = write("thm3_profile.json", profile_to_json(bundle.profile, bundle.names))
        code, out, _ = run(capsys, ["eval", "--rule", "pav", "--k", "2", path])
        assert code == 0 and out.strip() == "[a1,a2] score 19/2"

    def test_av_stdin(self, capsys, monkeypatch):
        text = profile_to_json(Profile.from_counts(4, {"a": 4, "d": 2}))
        code, out, _ = run(capsys, ["eval", "--rule", "av", "--k", "3", "-"], text, monkeypatch)
        assert code == 0 and out.strip() == "[a,a,a] score 12"

    def test_empty_committee(self, capsys, write):
        path = write("p.json", profile_to_json(Profile.from_counts(2, {"a": 1})))
        code, out, _ = run(capsys, ["eval", "--rule", "mp-jefferson", "--k", "0", path])
        assert code == 0 and out.strip() == "[]"

    def test_json_and_tie_order(self, capsys, write):
        path = write("p.json", profile_to_json(Profile.from_counts(2, {"a": 1, "b": 1})))
        code, out, _ = run(capsys, ["eval", "--rule", "av", "--k", "1", "--tie-order", "b,a", "--json", path])
        assert code == 0 and json.loads(out) == {"rule": "av", "k": 1, "committee": ["b"], "score": "1"}

    def test_parse_error_has_position(self, capsys, write):
        path = write("bad.json", '{"m": 2,\n "ballots": [}')
        code, _, err = run(capsys, ["eval", "--rule", "av", "--k", "1", path])
        assert code == 2 and "line 2" in err

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, ["eval", "--rule", "av", "--k", "1", "/nonexistent.json"])
        assert code == 2 and "cannot read" in err

    def test_unknown_rule(self, capsys, write):
        path = write("p.json", profile_to_json(Profile.from_counts(2, {"a": 1})))
        assert run(capsys, ["eval", "--rule", "phragmen", "--k", "1", path])[0] == 2

    def test_argparse_usage(self):
        with pytest.raises(SystemExit) as exc:
            main(["eval"])
        assert exc.value.code == 2


class TestCheck:
    def test_ccav_spu_passes(self, capsys):
        code, out, _ = run(capsys, ["check", "--rule", "ccav", "--axiom", "sp-unrepresented", "--n", "4", "--m", "4", "--k", "3"])
        assert code == 0 and out.startswith("PASS")

    def test_seq_pav_bundle_witness(self, capsys):
        code, out, _ = run(capsys, ["check", "--rule", "seq-pav", "--axiom", "sp-unrepresented", "--bundle", "thm4-seq"])
        assert code == 1 and out.startswith("FAIL")
        witness = json.loads(out.strip().splitlines()[-1])
        assert witness["committee"] == ["b", "c"] and witness["deviation"]["committee"] == ["a", "d"]

    def test_av_variant(self, capsys):
        code, out, _ = run(capsys, ["check", "--rule", "av-variant-k2", "--axiom", "wr", "--n", "4", "--m", "4", "--k", "2"])
        assert code == 0

    def test_json(self, capsys):
        code, out, _ = run(capsys, ["check", "--rule", "av", "--axiom", "wr", "--n", "4", "--m", "2", "--k", "2",
                                    "--unrestricted", "--json", "--collect-all"])
        data = json.loads(out)
        assert code == 1 and not data["passed"] and len(data["witnesses"]) >= 1

    def test_size_guard(self, capsys):
        code, _, err = run(capsys, ["check", "--rule", "av", "--axiom", "wr", "--n", "30", "--m", "5", "--k", "3",
                                    "--unrestricted"])
        assert code == 2 and "above the cap" in err

    def test_needs_domain(self, capsys):
        assert run(capsys, ["check", "--rule", "av", "--axiom", "wr"])[0] == 2


class TestEncodeSolve:
    def test_encode_to_file_and_solve(self, capsys, tmp_path, solver_cmd):
        cnf = tmp_path / "small.cnf"
        varmap = tmp_path / "small.json"
        code, out, _ = run(capsys, ["encode", "--n", "2", "--m", "3", "--k", "2", "--unrestricted",
                                    "-o", str(cnf), "--varmap", str(varmap), "--json"])
        assert code == 0
        stats = json.loads(out)
        assert cnf.read_text().startswith(f"p cnf {stats['variables']} {stats['clauses']}\n")
        assert json.loads(varmap.read_text())["num_vars"] == stats["variables"]
        code, out, _ = run(capsys, ["solve", str(cnf), "--expect", "sat", "--model"])
        assert code == 0 and out.startswith("SAT")
        assert run(capsys, ["solve", str(cnf), "--expect", "unsat"])[0] == 1

    def test_appendix_c_pipe(self, capsys, monkeypatch, solver_cmd):
        code, out, err = run(capsys, ["encode", "--appendix-c"])
        assert code == 0 and "3,634 clauses" in err
        code, out, _ = run(capsys, ["solve", "-", "--expect", "unsat", "--json"], out, monkeypatch)
        assert code == 0 and json.loads(out)["status"] == "unsat"

    def test_gcnf(self, capsys):
        code, out, _ = run(capsys, ["encode", "--n", "2", "--m", "2", "--k", "1", "--unrestricted", "--gcnf"])
        assert code == 0 and out.startswith("p gcnf")

    def test_symmetry_breaking_needs_designated_profile(self, capsys):
        assert run(capsys, ["encode", "--n", "4", "--m", "4", "--k", "3", "--symmetry-breaking", "-o", "/dev/null"])[0] == 2

    def test_solver_failure(self, capsys, tmp_path, fake_solver):
        cnf = tmp_path / "x.cnf"
        cnf.write_text("p cnf 1 1\n1 0\n")
        assert run(capsys, ["solve", str(cnf), "--solver-cmd", "/nonexistent {cnf}"])[0] == 3
        assert run(capsys, ["solve", str(cnf), "--solver-cmd", fake_solver("exit 1")])[0] == 3
        assert run(capsys, ["solve", str(cnf), "--solver-cmd", fake_solver("exit 20"), "--expect", "unsat"])[0] == 0


class TestDemo:
    def test_thm3(self, capsys):
        code, out, _ = run(capsys, ["demo", "thm3", "--rule", "pav"])
        assert code == 0
        assert "score 19/2" in out and "sp-unrepresented fails" in out

    def test_thm4_seq(self, capsys):
        code, out, _ = run(capsys, ["demo", "thm4-seq", "--rule", "seq-pav"])
        assert code == 0 and "f(A) = [b,c]" in out and "f(A') = [a,d]" in out

    def test_thm4_divisor(self, capsys):
        code, out, _ = run(capsys, ["demo", "thm4-divisor", "--method", "jefferson"])
        assert code == 0
        assert "weights (0, 6, 8, 2)" in out and "weights (8, 0, 2, 6)" in out
        assert "[b,c]" in out and "f(A') = [a,d]" in out

    def test_wrong_rule_kind(self, capsys):
        assert run(capsys, ["demo", "thm3", "--rule", "seq-pav"])[0] == 2
        assert run(capsys, ["demo", "thm3", "--rule", "av"])[0] == 2

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
