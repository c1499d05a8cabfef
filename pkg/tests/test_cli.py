"""End-to-end tests for the command line driver, run in process via main()."""
from __future__ import annotations

import json

import pytest

from rpsp.cli import instance_digest, main
from rpsp.core import (
    ObjectiveMode,
    brute_force,
    dump_instance,
    load_instance,
    make_instance,
)
from rpsp.laminar import is_laminar
from rpsp.relax import build_ip, parse_lp_dimensions
from rpsp.treedp import build_reduced_graph, exact_decomposition, format_pace_decomposition

HIT = ObjectiveMode.HIT_REWARD_COVER_PENALTY
COVER = ObjectiveMode.COVER_REWARD_HIT_PENALTY


def hit_instance(n, rewards, penalties):
    return make_instance(n, rewards, penalties, HIT)


def write_instance(tmp_path, instance, name="inst.json"):
    path = tmp_path / name
    dump_instance(instance, str(path))
    return str(path)


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# A small instance whose set family is not laminar and whose rewards are not
# all singletons, so auto dispatch must fall through to brute force.
def generic_instance():
    return hit_instance(
        4,
        [({1, 2}, 5), ({2, 3}, 4)],
        [({1, 3}, 3), ({4}, 2)],
    )


class TestSolve:
    def test_auto_brute_record(self, tmp_path, capsys):
        inst = generic_instance()
        path = write_instance(tmp_path, inst)
        code, out, err = run(capsys, ["solve", path])
        assert code == 0 and err == ""
        record = json.loads(out)
        best = brute_force(inst)
        assert record["algorithm"] == "brute"
        assert record["value"] == pytest.approx(best.value)
        assert record["selection"] == sorted(best.members)
        assert record["digest"] == instance_digest(inst)
        assert len(record["digest"]) == 16
        assert record["wall_time"] >= 0
        assert record["seed"] is None

    def test_auto_cover_uses_mincut(self, tmp_path, capsys):
        inst = make_instance(3, [({1, 2}, 4)], [({3}, 1)], COVER)
        path = write_instance(tmp_path, inst)
        code, out, _ = run(capsys, ["solve", path])
        record = json.loads(out)
        assert code == 0
        assert record["algorithm"] == "mincut"
        assert record["value"] == pytest.approx(brute_force(inst).value)

    def test_auto_laminar(self, tmp_path, capsys):
        inst = hit_instance(4, [({1}, 3), ({1, 2}, 2)], [({1, 2, 3}, 4)])
        path = write_instance(tmp_path, inst)
        code, out, _ = run(capsys, ["solve", path])
        record = json.loads(out)
        assert code == 0
        assert record["algorithm"] == "laminar"
        assert record["value"] == pytest.approx(brute_force(inst).value)

    def test_auto_treedp_with_decomposition(self, tmp_path, capsys):
        inst = hit_instance(
            3,
            [({1}, 2), ({2}, 5), ({3}, 2)],
            [({1, 2}, 4), ({2, 3}, 4)],
        )
        graph = build_reduced_graph(inst)
        decomp = exact_decomposition(graph.nodes, graph.edges)
        td = tmp_path / "inst.td"
        td.write_text(format_pace_decomposition(decomp, num_nodes=len(graph.nodes)))
        path = write_instance(tmp_path, inst)
        code, out, _ = run(capsys, ["solve", path, "--decomposition", str(td)])
        record = json.loads(out)
        assert code == 0
        assert record["algorithm"] == "treedp"
        assert record["value"] == pytest.approx(brute_force(inst).value)

    def test_auto_uniform(self, tmp_path, capsys):
        inst = hit_instance(
            3,
            [({1}, 2), ({2}, 2), ({3}, 2)],
            [({1, 2}, 3), ({2, 3}, 3)],
        )
        path = write_instance(tmp_path, inst)
        code, out, _ = run(capsys, ["solve", path])
        record = json.loads(out)
        assert code == 0
        assert record["algorithm"] == "uniform"
        assert record["value"] == pytest.approx(4.0)

    def test_explicit_algorithm_overrides_auto(self, tmp_path, capsys):
        inst = hit_instance(4, [({1}, 3), ({1, 2}, 2)], [({1, 2, 3}, 4)])
        path = write_instance(tmp_path, inst)
        code, out, _ = run(capsys, ["solve", path, "--algorithm", "brute"])
        assert code == 0
        assert json.loads(out)["algorithm"] == "brute"

    def test_mincut_rejects_hit_mode(self, tmp_path, capsys):
        path = write_instance(tmp_path, generic_instance())
        code, out, err = run(capsys, ["solve", path, "--algorithm", "mincut"])
        assert code == 2
        assert out == "" and "error:" in err

    def test_treedp_needs_decomposition(self, tmp_path, capsys):
        path = write_instance(tmp_path, generic_instance())
        code, _, err = run(capsys, ["solve", path, "--algorithm", "treedp"])
        assert code == 2
        assert "--decomposition" in err

    def test_uniform_not_applicable(self, tmp_path, capsys):
        path = write_instance(tmp_path, generic_instance())
        code, _, err = run(capsys, ["solve", path, "--algorithm", "uniform"])
        assert code == 3

    def test_no_algorithm_exit_3(self, tmp_path, capsys):
        inst = hit_instance(25, [({1, 2}, 5), ({2, 3}, 4)], [({1, 25}, 3)])
        path = write_instance(tmp_path, inst)
        code, out, err = run(capsys, ["solve", path])
        assert code == 3
        assert out == ""
        assert "export-lp" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(capsys, ["solve", str(tmp_path / "nope.json")])
        assert code == 2
        assert "error:" in err

    def test_malformed_instance(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, err = run(capsys, ["solve", str(bad)])
        assert code == 2


class TestGen:
    def test_writes_count_files(self, tmp_path, capsys):
        out_dir = tmp_path / "batch"
        code, out, _ = run(
            capsys,
            ["gen", "--n", "6", "--r", "4", "--p", "3", "--beta", "0.5",
             "--count", "3", "--seed", "11", "--out", str(out_dir)],
        )
        assert code == 0
        paths = out.splitlines()
        assert len(paths) == 3
        for p in paths:
            inst = load_instance(p)
            assert inst.n == 6
            assert len(inst.reward_sets) == 4 and len(inst.penalty_sets) == 3

    def test_deterministic(self, tmp_path, capsys):
        argv = ["gen", "--n", "5", "--r", "3", "--p", "2", "--beta", "1.0",
                "--count", "2", "--seed", "7"]
        a, b = tmp_path / "a", tmp_path / "b"
        run(capsys, argv + ["--out", str(a)])
        run(capsys, argv + ["--out", str(b)])
        for name in ("rpsp_n5_0000.json", "rpsp_n5_0001.json"):
            assert (a / name).read_text() == (b / name).read_text()

    def test_env_seed_overrides_flag(self, tmp_path, capsys, monkeypatch):
        base = ["gen", "--n", "5", "--r", "3", "--p", "2", "--count", "1"]
        plain = tmp_path / "plain"
        run(capsys, base + ["--seed", "7", "--out", str(plain)])
        monkeypatch.setenv("RPSP_SEED", "7")
        env_dir = tmp_path / "env"
        run(capsys, base + ["--seed", "99", "--out", str(env_dir)])
        name = "rpsp_n5_0000.json"
        assert (plain / name).read_text() == (env_dir / name).read_text()

    def test_bad_env_seed(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("RPSP_SEED", "pi")
        code, _, err = run(capsys, ["gen", "--n", "4", "--out", str(tmp_path)])
        assert code == 2
        assert "RPSP_SEED" in err

    def test_laminar_flag(self, tmp_path, capsys):
        code, out, _ = run(
            capsys,
            ["gen", "--n", "8", "--laminar", "--count", "2", "--seed", "3",
             "--out", str(tmp_path)],
        )
        assert code == 0
        for p in out.splitlines():
            inst = load_instance(p)
            sets = [ws.members for ws in inst.reward_sets + inst.penalty_sets]
            assert is_laminar(sets)

    def test_mode_flag(self, tmp_path, capsys):
        _, out, _ = run(
            capsys,
            ["gen", "--n", "4", "--r", "2", "--p", "2", "--mode", "cover-reward",
             "--out", str(tmp_path)],
        )
        inst = load_instance(out.strip())
        assert inst.mode is COVER


class TestBench:
    def test_zero_trials_header_only(self, capsys):
        code, out, _ = run(capsys, ["bench", "--config", "6,4,4,1.0", "--trials", "0"])
        assert code == 0
        assert out == "n,r,p,beta,delta_avg,delta_max,alpha_avg,alpha_min\n"

    def test_small_run(self, capsys):
        code, out, _ = run(capsys, ["bench", "--config", "6,4,4,1.0", "--trials", "5"])
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "n,r,p,beta,delta_avg,delta_max,alpha_avg,alpha_min"
        assert any(line.startswith("# published reference rows") for line in lines)
        assert any(line.startswith("6,4,4,1,") for line in lines)

    def test_out_of_scale_config(self, capsys):
        code, out, _ = run(
            capsys, ["bench", "--config", "100,100,100,0.25", "--trials", "2"]
        )
        assert code == 0
        row = [l for l in out.splitlines() if l.startswith("100,100,100,0.25")]
        assert len(row) == 1
        assert "not reproducible at desk scale" in row[0]

    def test_repeatable_config_flag(self, capsys):
        code, out, _ = run(
            capsys,
            ["bench", "--config", "5,3,3,1.0", "--config", "6,3,3,1.0",
             "--trials", "3"],
        )
        assert code == 0
        data = [l for l in out.splitlines() if l and not l.startswith(("#", "n,"))]
        assert len(data) == 2

    def test_bad_config(self, capsys):
        code, _, err = run(capsys, ["bench", "--config", "5,3,3", "--trials", "1"])
        assert code == 2
        assert "n,r,p,beta" in err


class TestCheck:
    def test_solve_output_pipes_into_check(self, tmp_path, capsys):
        inst = generic_instance()
        path = write_instance(tmp_path, inst)
        _, out, _ = run(capsys, ["solve", path])
        sel_path = tmp_path / "sel.json"
        sel_path.write_text(out)
        code, out2, _ = run(capsys, ["check", path, str(sel_path)])
        assert code == 0
        assert "verdict: ok" in out2

    def test_reports_counted_sets(self, tmp_path, capsys):
        inst = hit_instance(3, [({1}, 2), ({3}, 4)], [({1, 2}, 1)])
        path = write_instance(tmp_path, inst)
        sel = tmp_path / "sel.json"
        sel.write_text(json.dumps({"selection": [1, 2], "value": 1.0}))
        code, out, _ = run(capsys, ["check", path, str(sel)])
        assert code == 0
        assert "rewards counted: [0]" in out
        assert "penalties counted: [0]" in out

    def test_mismatch_exit_1(self, tmp_path, capsys):
        inst = generic_instance()
        path = write_instance(tmp_path, inst)
        sel = tmp_path / "sel.json"
        sel.write_text(json.dumps({"selection": [1, 2], "value": 99.0}))
        code, out, _ = run(capsys, ["check", path, str(sel)])
        assert code == 1
        assert "claimed value: 99.0" in out
        assert "recomputed value:" in out
        assert "verdict: mismatch" in out

    def test_out_of_range_selection(self, tmp_path, capsys):
        path = write_instance(tmp_path, generic_instance())
        sel = tmp_path / "sel.json"
        sel.write_text(json.dumps({"selection": [1, 40], "value": 0.0}))
        code, _, err = run(capsys, ["check", path, str(sel)])
        assert code == 2

    def test_missing_keys(self, tmp_path, capsys):
        path = write_instance(tmp_path, generic_instance())
        sel = tmp_path / "sel.json"
        sel.write_text(json.dumps({"selection": [1]}))
        code, _, err = run(capsys, ["check", path, str(sel)])
        assert code == 2
        assert "value" in err

    def test_non_integer_selection(self, tmp_path, capsys):
        path = write_instance(tmp_path, generic_instance())
        sel = tmp_path / "sel.json"
        sel.write_text(json.dumps({"selection": [1, "two"], "value": 0.0}))
        code, _, _ = run(capsys, ["check", path, str(sel)])
        assert code == 2


class TestExportLp:
    def test_dimensions_roundtrip(self, tmp_path, capsys):
        inst = generic_instance()
        path = write_instance(tmp_path, inst)
        code, out, _ = run(capsys, ["export-lp", path])
        assert code == 0
        model = build_ip(inst)
        assert parse_lp_dimensions(out) == (
            model.num_variables,
            len(model.constraints),
        )
        assert "Binary" in out

    def test_relaxation_flag(self, tmp_path, capsys):
        path = write_instance(tmp_path, generic_instance())
        code, out, _ = run(capsys, ["export-lp", path, "--relaxation"])
        assert code == 0
        assert "Binary" not in out
        assert "Bounds" in out

    def test_out_file(self, tmp_path, capsys):
        path = write_instance(tmp_path, generic_instance())
        target = tmp_path / "model.lp"
        code, out, _ = run(capsys, ["export-lp", path, "--out", str(target)])
        assert code == 0
        assert out == ""
        assert target.read_text().startswith("Maximize")

    def test_no_sets_gives_objective_only(self, tmp_path, capsys):
        inst = hit_instance(3, [], [])
        path = write_instance(tmp_path, inst)
        code, out, _ = run(capsys, ["export-lp", path])
        assert code == 0
        assert "c1:" not in out
        assert parse_lp_dimensions(out) == (3, 0)


class TestParser:
    def test_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["unheard-of"])
        assert exc.value.code == 2

    def test_help_mentions_dispatch(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "auto dispatch order" in out
        assert "exit codes" in out
