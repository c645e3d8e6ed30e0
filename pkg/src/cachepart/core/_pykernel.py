"""Pure-Python batch replay kernel.

Same contract as the compiled kernel in ``_ckernel.pyx``; used as the
import-time fallback and as the reference side of the backend-equivalence
tests. Works on plain lists internally to keep the per-access loop cheap.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure-python"


def simulate(addrs, entities, base_sets, size_masks, line_bits, num_sets, assoc,
             counts, attribution, codes):
    """Replay ``addrs`` through the cache, filling the output arrays.

    addrs:       uint64[n] byte addresses
    entities:    int32[n] pre-classified entity index per access
    base_sets:   int64[E] partition base per entity, -1 = conventional indexing
    size_masks:  int64[E] partition size minus one (ignored when base is -1)
    counts:      int64[E, 3] hits / cold misses / replacement misses
    attribution: int64[E, E] evictor x victim eviction counts
    codes:       uint8[n] per-access outcome, 0 hit / 1 cold / 2 replacement
    """
    n = len(addrs)
    num_entities = len(base_sets)
    addr_list = addrs.tolist()
    ent_list = entities.tolist()
    base_list = base_sets.tolist()
    mask_list = size_masks.tolist()
    set_mask = num_sets - 1

    tags = [0] * (num_sets * assoc)
    owners = [-1] * (num_sets * assoc)
    valid = [0] * num_sets
    seen = [set() for _ in range(num_entities)]
    cnt = [[0, 0, 0] for _ in range(num_entities)]
    attr = [[0] * num_entities for _ in range(num_entities)]
    out_codes = bytearray(n)

    for i in range(n):
        line = addr_list[i] >> line_bits
        ent = ent_list[i]
        conv = line & set_mask
        base = base_list[ent]
        if base >= 0:
            phys = base + (conv & mask_list[ent])
        else:
            phys = conv
        row = phys * assoc
        nval = valid[phys]

        hit_way = -1
        for way in range(nval):
            if owners[row + way] == ent and tags[row + way] == line:
                hit_way = way
                break
        if hit_way >= 0:
            if hit_way:
                for way in range(hit_way, 0, -1):
                    tags[row + way] = tags[row + way - 1]
                    owners[row + way] = owners[row + way - 1]
                tags[row] = line
                owners[row] = ent
            cnt[ent][0] += 1
            continue

        entity_seen = seen[ent]
        if line in entity_seen:
            cnt[ent][2] += 1
            out_codes[i] = 2
        else:
            entity_seen.add(line)
            cnt[ent][1] += 1
            out_codes[i] = 1

        if nval >= assoc:
            victim = owners[row + assoc - 1]
            attr[ent][victim] += 1
            last = assoc - 1
        else:
            last = nval
            valid[phys] = nval + 1
        for way in range(last, 0, -1):
            tags[row + way] = tags[row + way - 1]
            owners[row + way] = owners[row + way - 1]
        tags[row] = line
        owners[row] = ent

    counts[:, :] = np.asarray(cnt, dtype=np.int64).reshape(num_entities, 3)
    attribution[:, :] = np.asarray(attr, dtype=np.int64).reshape(num_entities, num_entities)
    codes[:] = np.frombuffer(bytes(out_codes), dtype=np.uint8)
