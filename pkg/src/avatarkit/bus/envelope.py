"""Bus envelope and its length-prefixed binary wire format.

Layout, all little-endian:

    u32 length   (bytes after this field)
    u64 seq
    u64 send_time_us
    u16 topic length, topic bytes (utf-8)
    u16 type-tag length, tag bytes (utf-8)
    payload bytes (length implied by the outer length)
"""

import struct
from dataclasses import dataclass

from .errors import WireFormatError

_HEAD = struct.Struct("<QQ")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")


@dataclass(frozen=True)
class Envelope:
    seq: int
    send_time_us: int
    topic: str
    type_tag: str
    payload: bytes

    def encode(self) -> bytes:
        topic = self.topic.encode()
        tag = self.type_tag.encode()
        if len(topic) > 0xFFFF or len(tag) > 0xFFFF:
            raise WireFormatError("topic or tag too long")
        body = (
            _HEAD.pack(self.seq, self.send_time_us)
            + _U16.pack(len(topic))
            + topic
            + _U16.pack(len(tag))
            + tag
            + self.payload
        )
        return _U32.pack(len(body)) + body


def decode(buf: bytes, offset: int = 0) -> tuple[Envelope, int]:
    """Decode one envelope, returning it and the offset past it."""
    if len(buf) - offset < 4:
        raise WireFormatError("truncated length prefix")
    (length,) = _U32.unpack_from(buf, offset)
    offset += 4
    end = offset + length
    if length < _HEAD.size + 4 or end > len(buf):
        raise WireFormatError("bad envelope length")
    seq, send_time_us = _HEAD.unpack_from(buf, offset)
    offset += _HEAD.size
    (tlen,) = _U16.unpack_from(buf, offset)
    offset += 2
    if offset + tlen + 2 > end:
        raise WireFormatError("topic overruns envelope")
    topic = buf[offset : offset + tlen].decode()
    offset += tlen
    (glen,) = _U16.unpack_from(buf, offset)
    offset += 2
    if offset + glen > end:
        raise WireFormatError("type tag overruns envelope")
    tag = buf[offset : offset + glen].decode()
    offset += glen
    payload = bytes(buf[offset:end])
    return Envelope(seq, send_time_us, topic, tag, payload), end
