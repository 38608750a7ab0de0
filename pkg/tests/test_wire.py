"""Unit tests for messaging.wire."""

import random
import string

import pytest

from graphbus.core.errors import ChannelTooLong, InvalidChannel, PayloadTooLarge
from graphbus.core.types import ChannelId, DiscardReason
from graphbus.messaging.wire import (
    HEAD_SIZE,
    MAX_PAYLOAD,
    STREAM_PREFIX,
    frame_for_stream,
    pack,
    unpack,
)

_NAME_CHARS = string.ascii_letters + string.digits + "/_-.:" + "éß漢"


def _random_channel(rng: random.Random) -> ChannelId:
    while True:
        name = "".join(rng.choice(_NAME_CHARS) for _ in range(rng.randint(1, 40)))
        if len(name.encode("utf-8")) <= 255:
            return ChannelId(name)


def test_pack_matches_hand_built_bytes():
    frame = pack("pre_channel", b"\x01\x02")
    assert frame == b"\x0b\x00\x00\x00" + b"\x52\x48" + b"pre_channel" + b"\x01\x02"


def test_pack_empty_payload():
    frame = pack("a", b"")
    assert len(frame) == HEAD_SIZE + 1
    assert unpack(frame) == (ChannelId("a"), b"")


def test_pack_rejects_bad_channels():
    with pytest.raises(InvalidChannel):
        pack("", b"x")
    with pytest.raises(InvalidChannel):
        pack("has space", b"x")
    with pytest.raises(ChannelTooLong):
        pack("x" * 256, b"x")


def test_channel_of_exactly_255_bytes():
    name = "é" * 127 + "x"  # 255 bytes
    assert unpack(pack(name, b"ok")) == (ChannelId(name), b"ok")


def test_pack_rejects_oversized_payload():
    class Huge(bytes):
        def __len__(self):
            return MAX_PAYLOAD + 1

    with pytest.raises(PayloadTooLarge):
        pack("a", Huge(b"x"))


def test_round_trip_randomized():
    rng = random.Random(1234)
    for _ in range(100_000):
        channel = _random_channel(rng)
        data = rng.randbytes(rng.randint(0, 64))
        assert unpack(pack(channel, data)) == (channel, data)


def test_unpack_discard_reasons():
    good = pack("chan", b"payload")
    assert unpack(good[:5]) is DiscardReason.TRUNCATED_HEADER
    assert unpack(b"") is DiscardReason.TRUNCATED_HEADER
    assert unpack(good[:4] + b"\x00\x00" + good[6:]) is DiscardReason.BAD_SEPARATOR
    # header_length beyond the frame
    assert unpack(b"\xff\x00\x00\x00\x52\x48abc") is DiscardReason.TRUNCATED_HEADER
    assert unpack(b"\x02\x00\x00\x00\x52\x48\xff\xfe") is DiscardReason.BAD_UTF8
    assert unpack(b"\x02\x00\x00\x00\x52\x48a b") is DiscardReason.INVALID_CHANNEL
    assert unpack(b"\x00\x00\x00\x00\x52\x48data") is DiscardReason.INVALID_CHANNEL


def test_unpack_fuzz_never_raises():
    rng = random.Random(99)
    valid = [pack(_random_channel(rng), rng.randbytes(8)) for _ in range(64)]
    outcomes = set()
    for i in range(1_000_000):
        if i % 2:
            frame = rng.randbytes(rng.randint(0, 24))
        else:
            frame = bytearray(rng.choice(valid))
            frame[rng.randrange(len(frame))] = rng.randrange(256)
            if i % 3 == 0:
                frame = frame[: rng.randrange(len(frame) + 1)]
        result = unpack(frame)
        if isinstance(result, DiscardReason):
            outcomes.add(result)
        else:
            channel, data = result
            assert isinstance(channel, ChannelId)
            assert isinstance(data, bytes)
    assert DiscardReason.BAD_SEPARATOR in outcomes
    assert DiscardReason.TRUNCATED_HEADER in outcomes


def test_frame_for_stream_prefix():
    frame = pack("a", b"xyz")
    streamed = frame_for_stream(frame)
    assert STREAM_PREFIX.unpack(streamed[:4])[0] == len(frame)
    assert streamed[4:] == frame
