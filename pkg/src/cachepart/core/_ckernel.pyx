# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled batch replay kernel. Contract identical to ``_pykernel.simulate``."""

from libcpp.unordered_set cimport unordered_set
from libcpp.vector cimport vector

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"


def simulate(addrs, entities, base_sets, size_masks, int line_bits, int num_sets,
             int assoc, counts, attribution, codes):
    cdef cnp.uint64_t[::1] addr_v = np.ascontiguousarray(addrs, dtype=np.uint64)
    cdef cnp.int32_t[::1] ent_v = np.ascontiguousarray(entities, dtype=np.int32)
    cdef cnp.int64_t[::1] base_v = np.ascontiguousarray(base_sets, dtype=np.int64)
    cdef cnp.int64_t[::1] mask_v = np.ascontiguousarray(size_masks, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] counts_v = counts
    cdef cnp.int64_t[:, ::1] attr_v = attribution
    cdef cnp.uint8_t[::1] codes_v = codes

    cdef Py_ssize_t n = addr_v.shape[0]
    cdef int num_entities = <int>base_v.shape[0]
    cdef cnp.uint64_t set_mask = <cnp.uint64_t>(num_sets - 1)

    cdef vector[cnp.uint64_t] tags
    cdef vector[cnp.int32_t] owners
    cdef vector[cnp.int32_t] valid
    cdef vector[unordered_set[cnp.uint64_t]] seen
    tags.resize(num_sets * assoc, 0)
    owners.resize(num_sets * assoc, -1)
    valid.resize(num_sets, 0)
    seen.resize(num_entities)

    cdef Py_ssize_t i
    cdef cnp.uint64_t line
    cdef cnp.int32_t ent, victim
    cdef cnp.int64_t base
    cdef long phys, row
    cdef int nval, way, hit_way, last

    for i in range(n):
        line = addr_v[i] >> line_bits
        ent = ent_v[i]
        base = base_v[ent]
        if base >= 0:
            phys = <long>base + <long>((line & set_mask) & <cnp.uint64_t>mask_v[ent])
        else:
            phys = <long>(line & set_mask)
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
            counts_v[ent, 0] += 1
            codes_v[i] = 0
            continue

        if seen[ent].count(line):
            counts_v[ent, 2] += 1
            codes_v[i] = 2
        else:
            seen[ent].insert(line)
            counts_v[ent, 1] += 1
            codes_v[i] = 1

        if nval >= assoc:
            victim = owners[row + assoc - 1]
            attr_v[ent, victim] += 1
            last = assoc - 1
        else:
            last = nval
            valid[phys] = nval + 1
        for way in range(last, 0, -1):
            tags[row + way] = tags[row + way - 1]
            owners[row + way] = owners[row + way - 1]
        tags[row] = line
        owners[row] = ent
