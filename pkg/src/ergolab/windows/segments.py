"""Pure-Python window sweep over run-length segments.

Exact integer statistics of the deviation values

    V(p) = q_c * w_total(p) - p_c * N,      dev(p) = |V(p)| / (N*q_c)

for every start position p, aggregated over starts whose label lies in
the restriction set.  Between run boundaries of the two cursors (the
start/trailing cursor and the head cursor N_eff ahead) the window sum is
affine in p with slope delta in {-1, 0, +1}, so each segment contributes
closed-form counts (threshold crossings of an arithmetic progression),
an arithmetic-series L1 sum, and min/max candidates at the endpoints and
next to the zero crossing.  Cost is O(#segments), independent of how
many atoms a run spans.
"""


class _Cursor:
    """Run-aligned cursor; `rem` counts atoms left in the current run
    including the one the cursor is on."""

    __slots__ = ("gen", "label", "rem")

    def __init__(self, ir, start):
        self.gen = ir.runs_from(start)
        self.label, self.rem = next(self.gen)

    def advance(self, m):
        while m >= self.rem:
            m -= self.rem
            self.label, self.rem = next(self.gen)
        self.rem -= m


def _series(v0, vd, a, b):
    """sum_{k=a..b} (v0 + k*vd); caller guarantees a <= b."""
    n = b - a + 1
    return n * v0 + vd * (a + b) * n // 2


class _Acc:
    __slots__ = ("count_r", "count_le", "count_lt", "sum_abs", "min_abs", "max_abs",
                 "t_le", "t_lt")

    def __init__(self, t_le, t_lt):
        self.count_r = 0
        self.count_le = 0
        self.count_lt = 0
        self.sum_abs = 0
        self.min_abs = None
        self.max_abs = None
        self.t_le = t_le
        self.t_lt = t_lt

    def add_constant(self, v, m):
        """m starts sharing the same deviation value v."""
        av = -v if v < 0 else v
        self.count_r += m
        if av <= self.t_le:
            self.count_le += m
        if av <= self.t_lt:
            self.count_lt += m
        self.sum_abs += m * av
        if self.min_abs is None or av < self.min_abs:
            self.min_abs = av
        if self.max_abs is None or av > self.max_abs:
            self.max_abs = av

    def add_progression(self, v0, vd, m):
        """Starts k = 1..m with values v_k = v0 + k*vd, vd != 0."""
        if vd < 0:  # |v| is invariant under global sign flip
            v0, vd = -v0, -vd
        self.count_r += m
        # threshold counts: -t <= v0 + k*vd <= t
        for t, attr in ((self.t_le, "count_le"), (self.t_lt, "count_lt")):
            if t >= 0:
                k_min = -((t + v0) // vd)        # ceil((-t - v0)/vd)
                k_max = (t - v0) // vd
                lo = 1 if k_min < 1 else k_min
                hi = m if k_max > m else k_max
                if hi >= lo:
                    setattr(self, attr, getattr(self, attr) + hi - lo + 1)
        # L1: split at the sign change; v_k < 0 iff k < -v0/vd
        kneg = -(v0 // vd) - 1                   # last k with v_k < 0
        if kneg >= 1:
            b = m if kneg > m else kneg
            self.sum_abs -= _series(v0, vd, 1, b)
        if kneg + 1 <= m:
            a = 1 if kneg + 1 < 1 else kneg + 1
            self.sum_abs += _series(v0, vd, a, m)
        # extrema: |affine| is convex -> max at the ends, min at the ends or
        # beside the zero crossing
        cands = [v0 + vd, v0 + m * vd]
        for k in (kneg, kneg + 1):
            if 1 <= k <= m:
                cands.append(v0 + k * vd)
        for v in cands:
            av = -v if v < 0 else v
            if self.min_abs is None or av < self.min_abs:
                self.min_abs = av
        hi = max(abs(cands[0]), abs(cands[1]))
        if self.max_abs is None or hi > self.max_abs:
            self.max_abs = hi


def sweep(ir, n_eff, f_set, r_set, qc, b0, t_le, t_lt):
    """Aggregate deviation statistics over all L start positions.

    Requires 1 <= n_eff < L (the dispatcher handles n_eff == 0 in closed
    form).  Returns (count_r, count_le, count_lt, sum_abs, min_abs, max_abs)
    as plain integers (min/max None when the restriction set is empty).
    """
    L = ir.length
    if not 1 <= n_eff < L:
        raise ValueError(f"segment sweep needs 1 <= n_eff < L, got {n_eff}, L={L}")
    acc = _Acc(t_le, t_lt)

    w = 0
    need = n_eff
    for label, run in ir.runs_from(1):
        take = run if run < need else need
        if label in f_set:
            w += take
        need -= take
        if need == 0:
            break

    cur_s = _Cursor(ir, 0)
    if cur_s.label in r_set:
        acc.add_constant(qc * w + b0, 1)
    cur_s.advance(1)
    cur_h = _Cursor(ir, (1 + n_eff) % L)

    done = 1
    while done < L:
        m = min(cur_s.rem, cur_h.rem, L - done)
        in_f_s = cur_s.label in f_set
        in_f_h = cur_h.label in f_set
        delta = (1 if in_f_h else 0) - (1 if in_f_s else 0)
        if cur_s.label in r_set:
            if delta == 0:
                acc.add_constant(qc * w + b0, m)
            else:
                acc.add_progression(qc * w + b0, qc * delta, m)
        w += m * delta
        cur_s.advance(m)
        cur_h.advance(m)
        done += m
    return (acc.count_r, acc.count_le, acc.count_lt, acc.sum_abs,
            acc.min_abs, acc.max_abs)
