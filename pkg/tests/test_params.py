"""Tests for support.params: flattening, typed getters, runtime set, overrides."""

import threading

import pytest
import yaml

from graphbus.core.config import load_settings
from graphbus.core.errors import ConfigParseError, InvalidParam, ParamNotFound, TypeMismatch
from graphbus.support.params import ParameterStore, load_params


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_nested_yaml_reads_as_dotted_keys(tmp_path):
    store = load_params(_write(tmp_path / "params.yaml", "a:\n  b: 3\n  c: [1, 2]\nname: lidar\n"))
    assert store.get("a.b") == 3
    assert store.get_int("a.b") == 3
    assert store.get_list("a.c") == [1, 2]
    assert store.get("a") == {"b": 3, "c": [1, 2]}
    assert store.keys() == ["a.b", "a.c", "name"]
    assert "a" in store and "a.b" in store and "a.z" not in store


def test_empty_file_gives_empty_store(tmp_path):
    store = load_params(_write(tmp_path / "params.yaml", ""))
    assert len(store) == 0


def test_non_mapping_file_rejected(tmp_path):
    with pytest.raises(ConfigParseError):
        load_params(_write(tmp_path / "params.yaml", "- 1\n- 2\n"))


def test_malformed_yaml_reports_line(tmp_path):
    with pytest.raises(ConfigParseError) as err:
        load_params(_write(tmp_path / "params.yaml", "a: 1\nb: [\n"))
    assert err.value.line is not None
    assert "params.yaml" in str(err.value)


def test_null_values_are_skipped(tmp_path, caplog):
    store = load_params(_write(tmp_path / "params.yaml", "a: ~\nb: 1\n"))
    assert "a" not in store
    assert store.get("b") == 1
    assert "null" in caplog.text


def test_missing_key():
    store = ParameterStore({"a": 1})
    with pytest.raises(ParamNotFound):
        store.get("b")
    assert store.get_or("b", 5) == 5
    assert store.get_int("b", 7) == 7


def test_typed_getters_reject_mismatch():
    store = ParameterStore({"flag": True, "n": 3, "x": 1.5, "s": "hi"})
    assert store.get_bool("flag") is True
    assert store.get_float("x") == 1.5
    assert store.get_str("s") == "hi"
    with pytest.raises(TypeMismatch):
        store.get_int("flag")
    with pytest.raises(TypeMismatch):
        store.get_float("n")
    with pytest.raises(TypeMismatch):
        store.get_str("n")
    with pytest.raises(TypeMismatch):
        store.get_map("s")


def test_set_is_visible_and_bumps_generation():
    store = ParameterStore({"robot": {"speed": 1.0}})
    gen = store.generation
    store.set("robot.speed", 2.5)
    assert store.get_float("robot.speed") == 2.5
    assert store.generation == gen + 1


def test_set_replaces_overlapping_entries():
    store = ParameterStore({"a": {"b": 1, "c": 2}})
    store.set("a", 5)
    assert store.get("a") == 5
    assert "a.b" not in store
    store.set("a.d", {"e": 1})
    assert store.get("a") == {"d": {"e": 1}}


def test_returned_values_are_copies():
    store = ParameterStore({"xs": [1, 2]})
    store.get("xs").append(3)
    assert store.get("xs") == [1, 2]


@pytest.mark.parametrize("key", ["", "a..b", ".a", "a. b"])
def test_invalid_keys(key):
    with pytest.raises(InvalidParam):
        ParameterStore().set(key, 1)


def test_invalid_values():
    store = ParameterStore()
    with pytest.raises(InvalidParam):
        store.set("big", 2 ** 64)
    with pytest.raises(InvalidParam):
        store.set("obj", object())


def test_apply_overrides_parses_yaml_values():
    store = ParameterStore({"a": {"b": 1}})
    store.apply_overrides(["a.b=2", "flag=true", "xs=[1, 2]", "name=robot"])
    assert store.get("a.b") == 2
    assert store.get_bool("flag") is True
    assert store.get_list("xs") == [1, 2]
    assert store.get_str("name") == "robot"


@pytest.mark.parametrize("override", ["nokey", "=3", "a=", "a=[1"])
def test_bad_overrides(override):
    with pytest.raises(InvalidParam):
        ParameterStore().apply_overrides([override])


def test_save_round_trips(tmp_path):
    store = ParameterStore({"a": {"b": 1}, "name": "x"})
    store.set("a.c", [1.5])
    path = tmp_path / "out" / "params.yaml"
    store.save(path)
    assert yaml.safe_load(path.read_text(encoding="utf-8")) == {"a": {"b": 1, "c": [1.5]}, "name": "x"}
    assert load_params(path).to_dict() == store.to_dict()


def test_concurrent_readers_see_consistent_values():
    store = ParameterStore({"v": 0})
    errors = []

    def reader():
        for _ in range(2000):
            if not isinstance(store.get("v"), int):
                errors.append("torn read")

    threads = [threading.Thread(target=reader) for _ in range(4)]
    for t in threads:
        t.start()
    for i in range(500):
        store.set("v", i)
    for t in threads:
        t.join()
    assert not errors
    assert store.get("v") == 499


def test_duplicate_yaml_key_last_value_wins(tmp_path, caplog):
    store = load_params(_write(tmp_path / "params.yaml", "rate: 10\nname: a\nrate: 20\n"))
    assert store.get_int("rate") == 20
    assert "duplicate key 'rate'" in caplog.text


def test_concurrent_setters_are_linearizable():
    store = ParameterStore({"v": -1})
    start = store.generation
    writers, sets_each = 4, 250
    written = {w * 1000 + i for w in range(writers) for i in range(sets_each)}

    def writer(w):
        for i in range(sets_each):
            store.set("v", w * 1000 + i)

    threads = [threading.Thread(target=writer, args=(w,)) for w in range(writers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert store.get("v") in written
    assert store.generation == start + writers * sets_each


@pytest.mark.parametrize("value", ["2.7", "true", "'four'"])
def test_non_integer_worker_count_is_a_config_error(value, monkeypatch):
    monkeypatch.delenv("GRAPHBUS_WORKERS", raising=False)
    store = ParameterStore()
    store.apply_overrides([f"data_graph.workers={value}"])
    with pytest.raises(ConfigParseError) as exc:
        load_settings(store)
    assert exc.value.field == "data_graph.workers"


def test_integer_settings_are_read_from_params(monkeypatch):
    monkeypatch.delenv("GRAPHBUS_WORKERS", raising=False)
    settings = load_settings(ParameterStore({"data_graph": {"workers": 3, "high_watermark": 50}}))
    assert settings.workers == 3
    assert settings.high_watermark == 50
