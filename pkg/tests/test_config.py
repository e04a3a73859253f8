import pytest

from t3cen.config import ConfigFileError, format_value, normalize_key, parse_config, read_config, write_config


def test_parse_flat_file():
    text = "# run\nlr = 0.01\nbatch-size=64  # trailing comment\n\n--orders = 4,1,1\n"
    assert parse_config(text) == {"lr": "0.01", "batch_size": "64", "orders": "4,1,1"}


@pytest.mark.parametrize("text, match", [("lr 0.1", "expected"), ("= 3", "empty key"), ("a = 1\na = 2", "duplicate")])
def test_parse_errors(text, match):
    with pytest.raises(ConfigFileError, match=match):
        parse_config(text, "x.cfg")


def test_round_trip(tmp_path):
    values = {"orders": (4, 1, 1), "lr": 0.001, "test": None, "name": "a"}
    write_config(tmp_path / "c.txt", values)
    assert (tmp_path / "c.txt").read_text() == "lr = 0.001\nname = a\norders = 4,1,1\ntest = \n"
    assert read_config(tmp_path / "c.txt")["orders"] == "4,1,1"


def test_key_normalization():
    assert normalize_key(" --batch-size ") == "batch_size"
    assert format_value([1, 2]) == "1,2"
