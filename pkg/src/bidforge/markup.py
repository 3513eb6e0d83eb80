"""Marker-token blocks: ``[Tag]content[/Tag]`` wrapping and strict parsing.

Classifier inputs and generator completions are sequences of flat,
non-overlapping blocks. Parsing is strict: stray text between blocks,
nesting, duplicate tags, or unclosed tags all raise MalformedMarkup.
"""

from __future__ import annotations

import re

from .errors import MalformedMarkup

_TAG_TOKEN = re.compile(r"\[(/?)([A-Za-z0-9]+)\]")


def mark(text: str, tag: str) -> str:
    """Wrap ``text`` in a marker block: ``[Tag]text[/Tag]``."""
    if not tag or not tag.isalnum():
        raise ValueError(f"tag must be a nonempty alphanumeric token, got {tag!r}")
    return f"[{tag}]{text}[/{tag}]"


def parse_marked(text: str) -> dict[str, str]:
    """Parse a flat sequence of marker blocks into ``{tag: content}``.

    Content is recovered byte-exactly. Whitespace between blocks is
    tolerated (completions carry a leading space); anything else outside a
    block is an error.
    """
    blocks: dict[str, str] = {}
    open_tag: str | None = None
    content_start = 0
    pos = 0
    for match in _TAG_TOKEN.finditer(text):
        closing = match.group(1) == "/"
        tag = match.group(2)
        if open_tag is None:
            gap = text[pos : match.start()]
            if gap.strip():
                raise MalformedMarkup(f"stray text {gap.strip()[:40]!r} outside blocks")
            if closing:
                raise MalformedMarkup(f"[/{tag}] has no matching opening tag")
            if tag in blocks:
                raise MalformedMarkup(f"duplicate [{tag}] block")
            open_tag = tag
            content_start = match.end()
        else:
            if not closing:
                raise MalformedMarkup(f"[{tag}] opened inside [{open_tag}]")
            if tag != open_tag:
                raise MalformedMarkup(f"[/{tag}] does not close [{open_tag}]")
            blocks[open_tag] = text[content_start : match.start()]
            open_tag = None
        pos = match.end()
    if open_tag is not None:
        raise MalformedMarkup(f"unclosed [{open_tag}] block")
    if text[pos:].strip():
        raise MalformedMarkup(f"stray text {text[pos:].strip()[:40]!r} after last block")
    if not blocks:
        raise MalformedMarkup("no marker blocks found")
    return blocks
