"""Payload to URL registry.

A registry is a tab-separated text file, one ``HEX<TAB>URL`` pair per
line. Blank lines and lines starting with ``#`` are ignored. Resolving a
payload returns its URL; nothing is ever fetched.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Mapping, Optional

from . import codec
from .errors import InvalidArgument, InvalidPayload, LoadError, NotFound


@dataclass(frozen=True)
class Registry:
    entries: Mapping[int, str] = field(default_factory=dict)
    source: Optional[str] = None

    def __post_init__(self):
        for key, url in self.entries.items():
            if not codec.is_valid_byte(key):
                raise InvalidPayload(f"invalid payload {key!r}")
            if not url:
                raise InvalidArgument(f"empty URL for {codec.to_hex(key)}")

    def __len__(self):
        return len(self.entries)

    def to_tsv(self) -> str:
        return "".join(f"{codec.to_hex(k)}\t{self.entries[k]}\n" for k in sorted(self.entries))

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_tsv())


def parse_registry(text: str, source: Optional[str] = None) -> Registry:
    entries: dict[int, str] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[1].strip():
            raise LoadError("expected <hex payload><TAB><url>", n)
        key_text, url = parts[0].strip(), parts[1].strip()
        try:
            key = codec.parse_hex(key_text)
        except InvalidArgument:
            raise LoadError(f"malformed payload hex {key_text!r}", n) from None
        if not codec.is_valid_byte(key):
            raise LoadError(f"invalid payload {key_text} (zero run of 3 or more)", n)
        if key in entries:
            raise LoadError(f"duplicate payload {codec.to_hex(key)}", n)
        entries[key] = url
    return Registry(entries, source)


def load_registry(path: str | os.PathLike) -> Registry:
    with open(path, encoding="utf-8") as fh:
        return parse_registry(fh.read(), os.fspath(path))


def resolve(reg: Registry, p: int) -> str:
    if not codec.is_valid_byte(p):
        raise InvalidPayload(f"invalid payload {p!r}")
    try:
        return reg.entries[p]
    except KeyError:
        raise NotFound(f"payload {codec.to_hex(p)} not in registry") from None
