import re
from pathlib import Path

import pytest

from app.main import build_parser, run
from app.version import APP_NAME, APP_VERSION

PYPROJECT = Path(__file__).resolve().parents[1] / "pyproject.toml"


def _project_field(name: str) -> str | None:
    text = PYPROJECT.read_text(encoding="utf-8")
    match = re.search(rf'^{name}\s*=\s*"([^"]+)"$', text, re.MULTILINE)
    return match.group(1) if match else None


def test_pyproject_version_matches_application_version():
    assert _project_field("version") == APP_VERSION


def test_console_script_points_at_the_cli_entry_point():
    assert _project_field("tweet-signal") == "app.main:run"
    assert callable(run)


def test_version_flag_prints_application_name_and_version(capsys):
    parser = build_parser()

    with pytest.raises(SystemExit) as exc:
        parser.parse_args(["--version"])

    assert exc.value.code == 0
    assert parser.prog == "tweet-signal"
    assert capsys.readouterr().out.strip() == f"{APP_NAME} {APP_VERSION}"
