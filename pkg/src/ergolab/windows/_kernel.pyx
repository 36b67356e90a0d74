# cython: language_level=3
"""Per-atom two-cursor window sweep (compiled core).

One call processes the chunk of start positions [p0, p0 + count); the
wrapper supplies the initial window sum w0 = w_eff(p0) and both cursor
states (run index + in-run offset): the start cursor at atom p0 and the
head cursor at atom (p0 + 1 + n_eff) mod L.  Per step the window sum is
updated by the entering head atom and the leaving start atom, and the
deviation value V = qc*w + b0 is accumulated for starts inside the
restriction.  All operands fit int64 by the wrapper's guards; the L1
accumulator is 128-bit and returned split into (hi, lo) words.
"""

cdef extern from *:
    ctypedef long long int128 "__int128"


def sweep_chunk(const long long[::1] runlen,
                const unsigned char[::1] f_run,
                const unsigned char[::1] r_run,
                long long count, long long w0,
                long long qc, long long b0,
                long long t_le, long long t_lt,
                long long si, long long soff,
                long long hi, long long hoff):
    cdef Py_ssize_t nr = runlen.shape[0]
    cdef long long count_r = 0, count_le = 0, count_lt = 0
    cdef int128 sum_abs = 0
    cdef long long min_abs = 0x7fffffffffffffff
    cdef long long max_abs = -1
    cdef bint has = 0
    cdef long long w = w0
    cdef long long v, av, step

    with nogil:
        for step in range(count):
            if step > 0:
                soff += 1
                if soff == runlen[si]:
                    si += 1
                    if si == nr:
                        si = 0
                    soff = 0
                w += f_run[hi] - f_run[si]
                hoff += 1
                if hoff == runlen[hi]:
                    hi += 1
                    if hi == nr:
                        hi = 0
                    hoff = 0
            if r_run[si]:
                v = qc * w + b0
                av = -v if v < 0 else v
                count_r += 1
                if av <= t_le:
                    count_le += 1
                if av <= t_lt:
                    count_lt += 1
                sum_abs += av
                has = 1
                if av < min_abs:
                    min_abs = av
                if av > max_abs:
                    max_abs = av

    cdef long long hi_word = <long long> (sum_abs >> 64)
    cdef unsigned long long lo_word = <unsigned long long> sum_abs
    return (count_r, count_le, count_lt, hi_word, lo_word,
            has, min_abs, max_abs)
