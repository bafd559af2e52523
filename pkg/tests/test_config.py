import pytest

from mmfactcheck.config import RunConfig, load_config
from mmfactcheck.errors import ConfigError
from mmfactcheck.providers.replay import ProviderMode

INI = """
[providers]
mode = replay-strict
fixture_dir = from-file
chat_model = file-model

[workflow]
confidence_threshold = 5
max_reasoning_steps = 8
count_temporary_steps = yes

[run]
output_dir = file-out
concurrency = 2
"""


@pytest.fixture
def ini(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(INI, encoding="utf-8")
    return str(path)


def test_defaults_need_fixtures():
    with pytest.raises(ConfigError, match="fixture"):
        load_config(env={})
    cfg = load_config({"fixture_dir": "fx"}, env={})
    assert cfg.mode is ProviderMode.REPLAY_STRICT
    wf = cfg.workflow
    assert (wf.evidence_batch_threshold, wf.confidence_threshold, wf.max_reasoning_steps) == (3, 4, 12)
    assert wf.confidence_comparison == "ge" and not wf.count_temporary_steps


def test_file_values_are_typed(ini):
    cfg = load_config(env={}, config_path=ini)
    assert cfg.fixture_dir == "from-file" and cfg.chat_model == "file-model"
    assert cfg.workflow.confidence_threshold == 5 and cfg.workflow.max_reasoning_steps == 8
    assert cfg.workflow.count_temporary_steps is True
    assert cfg.concurrency == 2 and cfg.output_dir == "file-out"


def test_precedence_flags_over_env_over_file(ini):
    env = {"MMFC_CONFIG": ini, "MMFC_MAX_REASONING_STEPS": "6", "MMFC_CHAT_MODEL": "env-model"}
    cfg = load_config(env=env)
    assert cfg.workflow.max_reasoning_steps == 6 and cfg.chat_model == "env-model"
    assert cfg.workflow.confidence_threshold == 5
    cfg = load_config({"max_reasoning_steps": 4, "chat_model": None}, env=env)
    assert cfg.workflow.max_reasoning_steps == 4 and cfg.chat_model == "env-model"


def test_explicit_path_beats_env_path(ini, tmp_path):
    other = tmp_path / "other.ini"
    other.write_text("[run]\noutput_dir = other\n[providers]\nfixture_dir = x\n", encoding="utf-8")
    assert load_config(env={"MMFC_CONFIG": ini}, config_path=str(other)).output_dir == "other"


@pytest.mark.parametrize(
    "text,match",
    [
        ("[nope]\na = 1\n", "unknown section"),
        ("[run]\ncolour = red\n", "unknown key"),
        ("[workflow]\nmax_replans = many\n", "max_replans"),
        ("[workflow]\ncount_temporary_steps = perhaps\n", "count_temporary_steps"),
        ("[workflow]\nconfidence_threshold = 9\n", "confidence_threshold"),
        ("not ini at all", "cannot read"),
    ],
)
def test_bad_files(tmp_path, text, match):
    path = tmp_path / "bad.ini"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError, match=match):
        load_config({"fixture_dir": "fx"}, env={}, config_path=str(path))


def test_missing_file_and_unknown_flag():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(env={}, config_path="/nonexistent/run.ini")
    with pytest.raises(ConfigError, match="unknown settings"):
        load_config({"fixture_dir": "fx", "turbo": True}, env={})


def test_run_config_checks():
    with pytest.raises(ConfigError):
        RunConfig(fixture_dir="fx", concurrency=0)
    with pytest.raises(ConfigError):
        RunConfig(fixture_dir="fx", deepfake_constant=1.5)
    with pytest.raises(ValueError):
        RunConfig(mode="offline")
    assert RunConfig(mode="live").fixture_dir is None
