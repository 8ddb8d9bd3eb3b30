"""Named, independently seeded random streams.

Every run derives all randomness from a single master seed. Each consumer asks
for a stream by name (plus optional integer qualifiers, e.g. a node id), so
changing how one subsystem draws numbers never perturbs any other subsystem.

The split is documented and stable: the stream name is hashed with SHA-256 and
the first 16 digest bytes are appended, as four 32-bit words, to the master
seed to form a numpy SeedSequence for a PCG64 generator.
"""

import hashlib

import numpy as np


def stream(master_seed: int, *path) -> np.random.Generator:
    """Return the generator for the named stream, e.g. stream(seed, "decide", 7)."""
    tag = "/".join(str(p) for p in path)
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(master_seed)] + words))
