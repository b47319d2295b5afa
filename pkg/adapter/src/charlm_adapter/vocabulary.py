"""The published token-index contract this adapter serves.

Ids 0..94 are printable ASCII (codepoint - 0x20), then START, END, UNK,
BLANK in the four highest slots. Engines driving this adapter send prefixes
in exactly this order, so the constants are fixed here rather than imported
from any engine implementation.
"""

VOCAB_SIZE = 99
START = 95
END = 96
UNK = 97
BLANK = 98


def encode_char(ch: str) -> int:
    cp = ord(ch)
    return cp - 0x20 if 0x20 <= cp <= 0x7E else UNK


def encode_password(pw: str) -> list[int]:
    return [encode_char(c) for c in pw]
