"""Labeled seed streams derived from one master seed."""

import zlib

import numpy as np


def derive_seed(master: int, label: str) -> int:
    """Return a non-negative 63-bit seed for the stage called ``label``.

    Changing ``master`` changes every stage; two labels never share a stream.
    """
    sequence = np.random.SeedSequence([master, zlib.crc32(label.encode("utf-8"))])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
