"""Tests for support.clock."""

import pytest

from graphbus.support.clock import TimeSystem


class FakeSource:
    def __init__(self, start=1_000):
        self.now = start

    def __call__(self):
        return self.now


def test_now_is_relative_to_epoch():
    source = FakeSource(5_000_000_000)
    clock = TimeSystem(source=source)
    assert clock.now_ns() == 0
    source.now += 250_000_000
    assert clock.now_ns() == 250_000_000
    assert clock.now() == pytest.approx(0.25)


def test_set_epoch_resets_reference():
    source = FakeSource()
    clock = TimeSystem(source=source)
    source.now += 100
    clock.set_epoch()
    assert clock.now_ns() == 0
    clock.set_epoch(0)
    assert clock.now_ns() == source.now


def test_real_clock_is_monotonic():
    clock = TimeSystem()
    readings = [clock.now_ns() for _ in range(10_000)]
    assert readings == sorted(readings)
    stamps = [clock.now() for _ in range(10_000)]
    assert stamps == sorted(stamps)


def test_virtual_time_advances_only_on_request():
    clock = TimeSystem(virtual=True)
    assert clock.now_ns() == 0
    clock.advance(10)
    clock.set_time(50)
    assert clock.now_ns() == 50
    with pytest.raises(ValueError):
        clock.advance(-1)
    with pytest.raises(ValueError):
        clock.set_time(49)


def test_virtual_controls_rejected_in_real_mode():
    clock = TimeSystem()
    with pytest.raises(RuntimeError):
        clock.advance(1)
    with pytest.raises(RuntimeError):
        clock.set_time(1)
