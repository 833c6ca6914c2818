# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled partition refinement; same contract as ``_refine_py.refine_partition``."""

from libc.stdlib cimport malloc, free


cdef int _cmp(int a, int b, int* cls, int* indptr, int* sig) noexcept nogil:
    cdef int i, la, lb, m
    if cls[a] != cls[b]:
        return -1 if cls[a] < cls[b] else 1
    la = indptr[a + 1] - indptr[a]
    lb = indptr[b + 1] - indptr[b]
    m = la if la < lb else lb
    for i in range(m):
        if sig[indptr[a] + i] != sig[indptr[b] + i]:
            return -1 if sig[indptr[a] + i] < sig[indptr[b] + i] else 1
    if la != lb:
        return -1 if la < lb else 1
    return 0


cdef void _merge_sort(int* order, int* tmp, int n, int* cls, int* indptr, int* sig) noexcept nogil:
    cdef int width = 1
    cdef int lo, mid, hi, i, j, k
    cdef int* src = order
    cdef int* dst = tmp
    cdef int* swap
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width
            if mid > n:
                mid = n
            hi = lo + 2 * width
            if hi > n:
                hi = n
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if _cmp(src[j], src[i], cls, indptr, sig) < 0:
                    dst[k] = src[j]
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
            lo += 2 * width
        swap = src
        src = dst
        dst = swap
        width *= 2
    if src != order:
        for i in range(n):
            order[i] = src[i]


cdef void _sort_segment(int* sig, int lo, int hi) noexcept nogil:
    cdef int i, j, v
    for i in range(lo + 1, hi):
        v = sig[i]
        j = i - 1
        while j >= lo and sig[j] > v:
            sig[j + 1] = sig[j]
            j -= 1
        sig[j + 1] = v


def refine_partition(indptr, indices, codes, classes):
    cdef int n = len(classes)
    cdef int m = len(indices)
    cdef int a, k, count, new_count, i
    if n == 0:
        return []
    cdef int* c_indptr = <int*> malloc((n + 1) * sizeof(int))
    cdef int* c_indices = <int*> malloc((m + 1) * sizeof(int))
    cdef int* c_codes = <int*> malloc((m + 1) * sizeof(int))
    cdef int* cls = <int*> malloc(n * sizeof(int))
    cdef int* new = <int*> malloc(n * sizeof(int))
    cdef int* order = <int*> malloc(n * sizeof(int))
    cdef int* tmp = <int*> malloc(n * sizeof(int))
    cdef int* sig = <int*> malloc((m + 1) * sizeof(int))
    try:
        for a in range(n + 1):
            c_indptr[a] = indptr[a]
        for k in range(m):
            c_indices[k] = indices[k]
            c_codes[k] = codes[k]
        # dense relabel of the initial classes
        values = sorted(set(classes))
        lookup = {v: i for i, v in enumerate(values)}
        for a in range(n):
            cls[a] = lookup[classes[a]]
        count = len(values)
        with nogil:
            while True:
                for a in range(n):
                    for k in range(c_indptr[a], c_indptr[a + 1]):
                        sig[k] = cls[c_indices[k]] * 8 + c_codes[k]
                    _sort_segment(sig, c_indptr[a], c_indptr[a + 1])
                    order[a] = a
                _merge_sort(order, tmp, n, cls, c_indptr, sig)
                new_count = 0
                new[order[0]] = 0
                for i in range(1, n):
                    if _cmp(order[i - 1], order[i], cls, c_indptr, sig) != 0:
                        new_count += 1
                    new[order[i]] = new_count
                new_count += 1
                for a in range(n):
                    cls[a] = new[a]
                if new_count == count:
                    break
                count = new_count
        return [cls[a] for a in range(n)]
    finally:
        free(c_indptr)
        free(c_indices)
        free(c_codes)
        free(cls)
        free(new)
        free(order)
        free(tmp)
        free(sig)
