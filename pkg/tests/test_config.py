from pathlib import Path

import pytest

from segword.config import ConfigError, load_config, parse_config


def test_parse_types_and_sections():
    cfg = parse_config(["lr = 0.01  # comment", "epochs=3", "stack = yes", "dropout = none", "pretrain.margin = 0.3", "", "# only a comment"])
    assert cfg.train.lr == 0.01 and cfg.train.epochs == 3 and cfg.train.stack is True
    assert cfg.train.dropout is None and cfg.pretrain.margin == 0.3


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key 'learning_rate'"):
        parse_config(["learning_rate = 0.1"], source="run.conf")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(["pretrain.bogus = 1"])


def test_bad_values():
    with pytest.raises(ConfigError, match="epochs"):
        parse_config(["epochs = many"])
    with pytest.raises(ConfigError, match="expected"):
        parse_config(["just words"])
    with pytest.raises(ConfigError, match="agwe_lambda"):
        parse_config(["agwe_lambda = 2"])


def test_overrides_win():
    cfg = parse_config(["lr = 0.01"], overrides=["lr=0.5", "seed=4"])
    assert cfg.train.lr == 0.5 and cfg.train.seed == 4


def test_paths_resolve_relative_to_config(tmp_path):
    conf = tmp_path / "sub" / "run.conf"
    conf.parent.mkdir()
    conf.write_text("train = data/train.manifest\nvocab = /abs/vocab.txt\nalphabet = abc\n")
    cfg = load_config(str(conf), overrides=["out=model.sgw"])
    assert cfg.path("train") == conf.parent / "data" / "train.manifest"
    assert cfg.path("vocab") == Path("/abs/vocab.txt")
    assert cfg.paths["alphabet"] == "abc"
    assert cfg.path("out") == Path("model.sgw")
    assert cfg.path("log", required=False) is None
    with pytest.raises(ConfigError, match="missing"):
        cfg.path("dev")
    with pytest.raises(ConfigError, match="does not exist"):
        cfg.require_existing("train")


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/run.conf")
