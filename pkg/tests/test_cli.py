import json
import sys
from pathlib import Path

import pytest

import app.main as main_module
from app.main import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_RUNTIME_ERROR, build_parser, main


REPO_ROOT = Path(__file__).resolve().parents[1]
SAMPLE_CONFIG = REPO_ROOT / "config" / "pipeline.json"
FAST = [
    "--set", "bayes.chains=2",
    "--set", "bayes.iterations=300",
    "--set", "bayes.burn_in=100",
    "--set", "qlearn.episodes=20",
    "--set", "graph.layout_iterations=50",
]


@pytest.fixture(autouse=True)
def _keep_excepthook(monkeypatch):
    monkeypatch.setattr(sys, "excepthook", sys.excepthook)


def _run_all(out_dir: Path) -> int:
    return main([
        "--config", str(SAMPLE_CONFIG),
        "--set", f"output_dir={out_dir}",
        *FAST,
        "all",
    ])


def test_run_all_writes_every_artifact_and_is_reproducible(tmp_path, capsys):
    first_dir = tmp_path / "first"
    second_dir = tmp_path / "second"

    assert _run_all(first_dir) == EXIT_OK
    printed = capsys.readouterr().out.splitlines()
    assert _run_all(second_dir) == EXIT_OK

    manifest = json.loads((first_dir / "manifest.json").read_text(encoding="utf-8"))
    names = {entry["name"] for entry in manifest["artifacts"]}
    assert {
        "ingest_summary.json",
        "graph_edges.csv",
        "centrality.csv",
        "communities.csv",
        "dendrogram.csv",
        "layout.csv",
        "keyword_frequencies.csv",
        "itemsets.csv",
        "rules.csv",
        "keyword_series.csv",
        "feature_matrix.csv",
        "returns.csv",
        "lasso_model.json",
        "posterior_summary.csv",
        "q_model.json",
        "episode_log.csv",
    } <= names
    assert printed[-1] == str(first_dir / "manifest.json")
    assert (first_dir / "manifest.json").read_bytes() == (second_dir / "manifest.json").read_bytes()


def test_single_stage_matches_the_same_stage_inside_all(tmp_path):
    assert _run_all(tmp_path / "all") == EXIT_OK

    code = main([
        "--config", str(SAMPLE_CONFIG),
        "--set", f"output_dir={tmp_path / 'single'}",
        *FAST,
        "fit-lasso",
    ])

    assert code == EXIT_OK
    for name in ("lasso_model.json", "lasso_cv.csv"):
        assert (tmp_path / "single" / name).read_bytes() == (tmp_path / "all" / name).read_bytes()


def test_missing_price_csv_is_a_config_error(tmp_path, capsys):
    code = main([
        "--config", str(SAMPLE_CONFIG),
        "--set", f"output_dir={tmp_path}",
        "--set", "price_csv=null",
        "fit-lasso",
    ])

    assert code == EXIT_CONFIG_ERROR
    assert "price_csv" in capsys.readouterr().err


def test_invalid_override_is_a_config_error(tmp_path, capsys):
    code = main(["--set", "lasso.folds=1", "--set", f"output_dir={tmp_path}", "ingest"])

    assert code == EXIT_CONFIG_ERROR
    assert "config error: lasso.folds" in capsys.readouterr().err


def test_domain_failure_maps_to_runtime_exit_code(tmp_path, capsys):
    corpus = tmp_path / "broken.jsonl"
    corpus.write_text('{"id": "x"}\n', encoding="utf-8")

    code = main(["--set", f"corpus_path={corpus}", "--set", f"output_dir={tmp_path / 'out'}", "ingest"])

    assert code == EXIT_RUNTIME_ERROR
    assert capsys.readouterr().err.startswith("error:")


def test_unexpected_exception_maps_to_runtime_exit_code(tmp_path, monkeypatch, capsys):
    def boom(command, ctx):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(main_module, "run_pipeline", boom)

    code = main(["--set", f"output_dir={tmp_path}", "graph"])

    assert code == EXIT_RUNTIME_ERROR
    assert "disk on fire" in capsys.readouterr().err


def test_synth_writes_inputs_that_the_pipeline_accepts(tmp_path, capsys):
    assert main(["synth", "--out-dir", str(tmp_path), "--seed", "3"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == [
        str(tmp_path / "tweets.jsonl"),
        str(tmp_path / "prices.csv"),
        str(tmp_path / "pipeline.json"),
    ]

    code = main(["--config", str(tmp_path / "pipeline.json"), *FAST, "returns"])

    assert code == EXIT_OK
    assert (tmp_path / "out" / "returns.csv").is_file()
    assert (tmp_path / "out" / "manifest.json").is_file()


def test_parser_requires_a_known_command():
    parser = build_parser()

    with pytest.raises(SystemExit):
        parser.parse_args([])
    with pytest.raises(SystemExit):
        parser.parse_args(["deploy"])
    assert parser.parse_args(["--log-level", "debug", "qlearn"]).log_level == "DEBUG"


@pytest.mark.parametrize(
    ("override", "command", "key"),
    [
        ('thematic_field=["solar panel","tesla"]', "freq", "thematic_field"),
        ('series.keywords=["#"]', "series", "series.keywords"),
    ],
)
def test_invalid_thematic_terms_are_config_errors(tmp_path, capsys, override, command, key):
    code = main([
        "--config", str(SAMPLE_CONFIG),
        "--set", f"output_dir={tmp_path}",
        "--set", override,
        command,
    ])

    assert code == EXIT_CONFIG_ERROR
    assert f"config error: {key}:" in capsys.readouterr().err


def test_usage_errors_exit_with_the_config_error_code(capsys):
    assert main(["deploy"]) == EXIT_CONFIG_ERROR
    assert main(["synth"]) == EXIT_CONFIG_ERROR
    assert main(["--log-level", "loud", "ingest"]) == EXIT_CONFIG_ERROR
    assert "usage:" in capsys.readouterr().err


def test_version_flag_exits_cleanly(capsys):
    assert main(["--version"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("TweetSignal ")
