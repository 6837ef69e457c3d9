from __future__ import annotations

import math
from typing import Mapping, Sequence


def corpus_aggregate(per_sample: Sequence[Mapping[str, float | None]]) -> dict[str, float]:
    """Arithmetic mean of each metric over samples.

    Samples are summed in input order with ``math.fsum`` so the result does not
    depend on how scoring was parallelised. Failed generations should already
    carry 0 for every metric.
    """
    if not per_sample:
        raise ValueError("cannot aggregate an empty sample list")
    names: list[str] = []
    for sample in per_sample:
        for name in sample:
            if name not in names:
                names.append(name)
    means = {}
    for name in names:
        values = [s[name] for s in per_sample if s.get(name) is not None]
        if values:
            means[name] = math.fsum(values) / len(values)
    return means
