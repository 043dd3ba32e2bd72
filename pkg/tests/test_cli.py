"""Exit codes, artifacts, and reproducibility of the experiment runner."""

import itertools
import json

import pytest

from vertexlab import events, sixvertex as sv
from vertexlab.cli import main, resolve_config
from vertexlab.lattice import box, torus


def run_cli(*args):
    return main(list(args))


def load_json(out_dir, sub):
    return json.loads((out_dir / f"{sub}.json").read_text())


def csv_data_rows(out_dir, sub):
    lines = (out_dir / f"{sub}.csv").read_text().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    return body[0].split(","), body[1:]


# -- artifacts and schema ----------------------------------------------------


def test_fkg_check_example_exits_zero_with_slack_summary(tmp_path):
    rc = run_cli("fkg-check", "--set", "model.c=1.5", "--out", str(tmp_path))
    assert rc == 0
    payload = load_json(tmp_path, "fkg-check")
    assert payload["numbers"]["lattice_worst_slack"] >= -1e-12
    assert payload["numbers"]["events_worst_slack"] >= -1e-12
    assert all(c["passed"] for c in payload["checks"])
    assert payload["config"]["model.c"] == 1.5
    assert payload["config"]["domain.width"] == 3


def test_csv_leads_with_schema_tag_and_documents_every_column(tmp_path):
    run_cli("fkg-check", "--out", str(tmp_path))
    lines = (tmp_path / "fkg-check.csv").read_text().splitlines()
    assert lines[0] == "# schema=v1"
    assert lines[1] == "# subcommand=fkg-check"
    cols = [ln for ln in lines if not ln.startswith("#")][0].split(",")
    doc_names = [ln.split(" ", 2)[2].split(":")[0] for ln in lines if ln.startswith("# col ")]
    assert doc_names == cols


def test_json_summary_carries_build_seed_and_wall_time(tmp_path):
    run_cli("es-check", "--seed", "3", "--out", str(tmp_path))
    payload = load_json(tmp_path, "es-check")
    assert payload["schema"] == "v1"
    assert payload["seed"] == 3
    assert payload["build"]
    assert payload["wall_time_s"] >= 0
    assert payload["config"]["run.seed"] == 3


def test_format_flag_restricts_artifacts(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    run_cli("es-check", "--format", "csv", "--out", str(a))
    run_cli("es-check", "--format", "json", "--out", str(b))
    assert (a / "es-check.csv").exists() and not (a / "es-check.json").exists()
    assert (b / "es-check.json").exists() and not (b / "es-check.csv").exists()


# -- enumerate ---------------------------------------------------------------


def brute_force_ice_count(domain):
    n = len(domain.interior_edges)
    count = 0
    for bits in itertools.product((0, 1), repeat=n):
        try:
            sv.classify_all(sv.ArrowConfig(domain, bits))
        except ValueError:
            continue
        count += 1
    return count


def test_enumerate_torus_rows_match_brute_force_count(tmp_path):
    rc = run_cli(
        "enumerate",
        "--set", "domain.shape=torus",
        "--set", "domain.width=2",
        "--set", "domain.height=2",
        "--out", str(tmp_path),
    )
    assert rc == 0
    _, rows = csv_data_rows(tmp_path, "enumerate")
    expected = brute_force_ice_count(torus(2, 2))
    assert len(rows) == expected
    assert load_json(tmp_path, "enumerate")["numbers"]["n_rows"] == expected


def test_enumerate_uniform_probabilities_sum_to_one(tmp_path):
    run_cli(
        "enumerate",
        "--set", "domain.shape=torus",
        "--set", "domain.width=2",
        "--set", "domain.height=2",
        "--out", str(tmp_path),
    )
    cols, rows = csv_data_rows(tmp_path, "enumerate")
    probs = [float(r.split(",")[cols.index("prob")]) for r in rows]
    assert sum(probs) == pytest.approx(1.0, abs=1e-12)
    assert max(probs) == pytest.approx(min(probs))  # uniform weights


def test_enumerate_box_heights_match_library_count(tmp_path):
    rc = run_cli(
        "enumerate",
        "--set", "domain.shape=box",
        "--set", "domain.width=3",
        "--set", "domain.height=3",
        "--out", str(tmp_path),
    )
    assert rc == 0
    _, rows = csv_data_rows(tmp_path, "enumerate")
    domain = box(3, 3)
    assert len(rows) == len(sv.enumerate_heights(domain, sv.flat01(domain)))


# -- exit codes --------------------------------------------------------------


def test_missing_required_key_exits_one_without_artifacts(tmp_path):
    target = tmp_path / "next"
    rc = run_cli("variance", "--out", str(target))
    assert rc == 1
    assert not target.exists()


def test_unknown_config_key_exits_one(tmp_path, capsys):
    rc = run_cli("fkg-check", "--set", "model.zeta=2", "--out", str(tmp_path))
    assert rc == 1
    assert "model.zeta" in capsys.readouterr().err
    assert not (tmp_path / "fkg-check.json").exists()


def test_unknown_subcommand_exits_one():
    assert run_cli("does-not-exist") == 1


def test_library_guard_violations_exit_one(tmp_path):
    # odd boundary shift breaks the height parity class
    assert run_cli("cbc-check", "--set", "bc.delta=3", "--out", str(tmp_path)) == 1
    # couplings outside the nonnegative-channel regime
    rc = run_cli(
        "es-check",
        "--set", "model.j_sigma=0.1",
        "--set", "model.j_tau=0.5",
        "--set", "model.j_sigmatau=0.4",
        "--out", str(tmp_path),
    )
    assert rc == 1


def test_check_failure_exits_two_and_names_witness(tmp_path):
    # hypothesis chain holds but domination genuinely fails at one bond
    rc = run_cli(
        "compare",
        "--set", "model.a0=2",
        "--set", "run.bonds=1",
        "--out", str(tmp_path),
    )
    assert rc == 2
    payload = load_json(tmp_path, "compare")
    assert payload["failures"], "a failed assertion must be named"
    assert "witness" in payload["failures"][0]
    assert (tmp_path / "compare.csv").exists()  # artifacts still written
    names = {c["name"]: c["passed"] for c in payload["checks"]}
    assert names["comparison hypothesis chain"] is True
    assert any(not ok for ok in names.values())


def test_compare_hypothesis_failure_reports_without_asserting(tmp_path):
    # q_sigma > q_sigma~ violates the first hypothesis link outright
    rc = run_cli(
        "compare",
        "--set", "model.q_sigma=3",
        "--set", "tilde.q_sigma=2",
        "--out", str(tmp_path),
    )
    assert rc == 0
    payload = load_json(tmp_path, "compare")
    assert payload["checks"][0]["passed"] is False
    assert "skipped" in payload["details"]["conclusion"]
    assert payload["failures"] == []


# -- config handling ---------------------------------------------------------


def test_config_file_with_set_and_seed_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# crossing on a small box\n"
        "domain.width = 3\n"
        "domain.height = 3\n"
        "event.orientation = horizontal\n"
        "run.method = exact\n"
        "model.c = 1.5\n"
    )
    rc = run_cli(
        "crossing",
        "--config", str(cfg),
        "--set", "model.c=2.0",
        "--seed", "11",
        "--out", str(tmp_path),
    )
    assert rc == 0
    resolved = load_json(tmp_path, "crossing")["config"]
    assert resolved["model.c"] == 2.0  # --set beats the file
    assert resolved["domain.width"] == 3  # file beats the default
    assert resolved["run.seed"] == 11  # flag beats everything


def test_duplicate_config_key_rejected(tmp_path):
    cfg = tmp_path / "dup.cfg"
    cfg.write_text("model.c = 1.5\nmodel.c = 2.0\n")
    assert run_cli("fkg-check", "--config", str(cfg), "--out", str(tmp_path)) == 1


def test_malformed_set_rejected(tmp_path):
    assert run_cli("fkg-check", "--set", "model.c", "--out", str(tmp_path)) == 1


def test_resolve_config_fills_documented_defaults():
    cfg = resolve_config("fkg-check", None, (), None, None, None)
    assert cfg["model.a"] == 1.0
    assert cfg["domain.width"] == 3
    assert cfg["output.format"] == "both"
    assert cfg["run.seed"] == 0


def test_numbers_reproducible_from_embedded_config(tmp_path):
    first = tmp_path / "first"
    rc = run_cli(
        "crossing",
        "--set", "domain.width=3",
        "--set", "domain.height=3",
        "--set", "event.orientation=vertical",
        "--set", "run.method=exact",
        "--set", "model.c=1.5",
        "--out", str(first),
    )
    assert rc == 0
    payload = load_json(first, "crossing")
    replay = tmp_path / "replay.cfg"
    replay.write_text(
        "".join(f"{k} = {v}\n" for k, v in payload["config"].items() if k != "output.dir")
    )
    second = tmp_path / "second"
    rc = run_cli("crossing", "--config", str(replay), "--out", str(second))
    assert rc == 0
    assert load_json(second, "crossing")["numbers"] == payload["numbers"]


def test_byte_identical_rerun_modulo_wall_time(tmp_path):
    args = (
        "enumerate",
        "--set", "domain.shape=torus",
        "--set", "domain.width=2",
        "--set", "domain.height=2",
        "--set", "model.c=1.3",
        "--out", str(tmp_path),
    )
    assert run_cli(*args) == 0
    csv_first = (tmp_path / "enumerate.csv").read_bytes()
    json_first = load_json(tmp_path, "enumerate")
    assert run_cli(*args) == 0
    assert (tmp_path / "enumerate.csv").read_bytes() == csv_first
    json_second = load_json(tmp_path, "enumerate")
    json_first.pop("wall_time_s")
    json_second.pop("wall_time_s")
    assert json_first == json_second


def test_threads_env_is_recorded_and_validated(tmp_path, monkeypatch):
    monkeypatch.setenv("VERTEXLAB_THREADS", "2")
    assert run_cli("es-check", "--out", str(tmp_path)) == 0
    assert load_json(tmp_path, "es-check")["threads"] == 2
    monkeypatch.setenv("VERTEXLAB_THREADS", "zero")
    assert run_cli("es-check", "--out", str(tmp_path)) == 1


# -- subcommand results against the library ----------------------------------


def test_crossing_exact_matches_direct_evaluation(tmp_path):
    rc = run_cli(
        "crossing",
        "--set", "domain.width=3",
        "--set", "domain.height=3",
        "--set", "event.orientation=horizontal",
        "--set", "event.k=1",
        "--set", "run.method=exact",
        "--set", "model.c=1.5",
        "--out", str(tmp_path),
    )
    assert rc == 0
    domain = box(3, 3)
    query = events.box_crossing_query(domain, "horizontal", k=1)
    expected = events.exact_height_event_prob(
        domain, sv.flat01(domain), sv.Weights(1, 1, 1.5), query
    )
    payload = load_json(tmp_path, "crossing")
    assert payload["numbers"]["p_hat"] == pytest.approx(expected, abs=1e-12)
    assert payload["numbers"]["half_width"] == 0.0


def test_sample_records_requested_rows(tmp_path):
    rc = run_cli(
        "sample",
        "--set", "run.samples=150",
        "--set", "run.engine=python",
        "--seed", "4",
        "--out", str(tmp_path),
    )
    assert rc == 0
    cols, rows = csv_data_rows(tmp_path, "sample")
    assert cols == ["sample", "center_height", "mean_height"]
    assert len(rows) == 150
    numbers = load_json(tmp_path, "sample")["numbers"]
    assert numbers["n_samples"] == 150
    assert numbers["center_stderr"] >= 0


def test_variance_exact_profile_with_fit(tmp_path):
    rc = run_cli(
        "variance",
        "--set", "domain.sizes=2,3,4",
        "--set", "model.c=1.5",
        "--out", str(tmp_path),
    )
    assert rc == 0
    _, rows = csv_data_rows(tmp_path, "variance")
    assert len(rows) == 3
    numbers = load_json(tmp_path, "variance")["numbers"]
    assert {"slope", "intercept", "r_squared"} <= set(numbers)


def test_free_energy_reports_evenness_and_concavity(tmp_path):
    rc = run_cli(
        "free-energy",
        "--set", "domain.width=8",
        "--set", "model.c=1.5",
        "--out", str(tmp_path),
    )
    assert rc == 0
    payload = load_json(tmp_path, "free-energy")
    names = [c["name"] for c in payload["checks"]]
    assert any("even" in n for n in names)
    assert any("concavity" in n for n in names)
    assert all(c["passed"] for c in payload["checks"])
    assert payload["numbers"]["argmax_alpha"] == 0.0
    _, rows = csv_data_rows(tmp_path, "free-energy")
    assert len(rows) == 9  # alpha grid of a circumference-8 cylinder


def test_loops_subcommand_checks_pass(tmp_path):
    rc = run_cli(
        "loops",
        "--set", "run.samples=40",
        "--set", "model.c=1.5",
        "--seed", "2",
        "--out", str(tmp_path),
    )
    assert rc == 0
    cols, rows = csv_data_rows(tmp_path, "loops")
    ok = [r.split(",")[cols.index("ok")] for r in rows]
    assert set(ok) == {"true"}
    assert load_json(tmp_path, "loops")["numbers"]["n_failures"] == 0


def test_cubic_check_runs_both_identities_at_q_two(tmp_path):
    rc = run_cli("cubic-check", "--out", str(tmp_path))
    assert rc == 0
    payload = load_json(tmp_path, "cubic-check")
    assert len(payload["checks"]) == 2
    assert payload["numbers"]["oracle_worst_gap"] <= 1e-10
    assert payload["numbers"]["pm_spin_worst_gap"] <= 1e-10


def test_cbc_check_passes_on_default_shift(tmp_path):
    rc = run_cli("cbc-check", "--set", "model.c=2", "--out", str(tmp_path))
    assert rc == 0
    payload = load_json(tmp_path, "cbc-check")
    assert payload["checks"][0]["passed"]
