# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch evaluator: per-trial lattice facts for every strategy.

Mirrors cfmarc._kernel_py step for step. Exact rank decisions use
division-free minors in int64; a trial whose coefficients exceed
ENTRY_BOUND is reported back so the caller can redo it in Python.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor, log2, INFINITY, NAN
from libc.stdlib cimport malloc, realloc, free, qsort
from libc.string cimport memcpy, memset

cnp.import_array()

cdef enum:
    MAXM = 4
    MAXN = 8
    OK = 0
    ERR_BOUND = -2
    ERR_MEM = -3
    ERR_INTERNAL = -4
    CERTIFIED = 1

# |Re|, |Im| of any coefficient entry handled exactly by the int64 minors
cdef long ENTRY_BOUND = 1000
cdef double LLL_DELTA = 0.99
cdef double RADIUS_SLACK = 1e-9


cdef struct Cand:
    double norm
    long v[MAXN]          # interleaved (re_0, im_0, re_1, im_1, ...)


cdef struct Buf:
    Cand* data
    int size
    int cap


cdef struct Link:
    int M
    double Bre[MAXM][MAXM]
    double Bim[MAXM][MAXM]
    double b[MAXN][MAXN]      # b[j] = j-th basis column
    long u[MAXN][MAXN]        # u[j] = j-th column of the unimodular transform
    double mu[MAXN][MAXN]
    double bn[MAXN]
    long z[MAXN]
    double radius_sq


cdef inline int buf_push(Buf* buf, Cand* c) noexcept nogil:
    cdef Cand* p
    if buf.size == buf.cap:
        p = <Cand*> realloc(buf.data, 2 * buf.cap * sizeof(Cand))
        if p == NULL:
            return ERR_MEM
        buf.data = p
        buf.cap *= 2
    buf.data[buf.size] = c[0]
    buf.size += 1
    return OK


cdef int cand_cmp(const void* pa, const void* pb) noexcept nogil:
    cdef const Cand* a = <const Cand*> pa
    cdef const Cand* b = <const Cand*> pb
    cdef int i
    if a.norm < b.norm:
        return -1
    if a.norm > b.norm:
        return 1
    for i in range(MAXN):
        if a.v[i] < b.v[i]:
            return -1
        if a.v[i] > b.v[i]:
            return 1
    return 0


cdef void build_factor(Link* L, const double* hre, const double* him, int M, double snr) noexcept nogil:
    cdef double Mre[MAXM][MAXM]
    cdef double Mim[MAXM][MAXM]
    cdef double Lre[MAXM][MAXM]
    cdef double Lim[MAXM][MAXM]
    cdef double hh = 0.0, c, sre, sim, d
    cdef int i, j, k
    for i in range(M):
        hh += hre[i] * hre[i] + him[i] * him[i]
    c = snr / (1.0 + snr * hh)
    for i in range(M):
        for j in range(M):
            # (h h^H)_{ij} = h_i conj(h_j)
            Mre[i][j] = -c * (hre[i] * hre[j] + him[i] * him[j])
            Mim[i][j] = -c * (him[i] * hre[j] - hre[i] * him[j])
        Mre[i][i] += 1.0
    memset(Lre, 0, sizeof(Lre))
    memset(Lim, 0, sizeof(Lim))
    for j in range(M):
        d = Mre[j][j]
        for k in range(j):
            d -= Lre[j][k] * Lre[j][k] + Lim[j][k] * Lim[j][k]
        d = sqrt(d)
        Lre[j][j] = d
        for i in range(j + 1, M):
            sre = Mre[i][j]
            sim = Mim[i][j]
            for k in range(j):
                # L_ik conj(L_jk)
                sre -= Lre[i][k] * Lre[j][k] + Lim[i][k] * Lim[j][k]
                sim -= Lim[i][k] * Lre[j][k] - Lre[i][k] * Lim[j][k]
            Lre[i][j] = sre / d
            Lim[i][j] = sim / d
    L.M = M
    for i in range(M):
        for j in range(M):
            # B = L^H
            L.Bre[i][j] = Lre[j][i]
            L.Bim[i][j] = -Lim[j][i]


cdef void gram_schmidt(Link* L, int n) noexcept nogil:
    cdef double bs[MAXN][MAXN]
    cdef int i, j, t
    cdef double s, m
    for i in range(n):
        for t in range(n):
            bs[i][t] = L.b[i][t]
        for j in range(i):
            s = 0.0
            for t in range(n):
                s += L.b[i][t] * bs[j][t]
            m = s / L.bn[j]
            L.mu[i][j] = m
            for t in range(n):
                bs[i][t] -= m * bs[j][t]
        s = 0.0
        for t in range(n):
            s += bs[i][t] * bs[i][t]
        L.bn[i] = s


cdef void lll(Link* L) noexcept nogil:
    cdef int M = L.M, n = 2 * L.M
    cdef int i, j, k, t
    cdef long q
    cdef double tmpd[MAXN]
    cdef long tmpl[MAXN]
    for i in range(M):
        for j in range(M):
            L.b[j][i] = L.Bre[i][j]
            L.b[j + M][i] = -L.Bim[i][j]
            L.b[j][i + M] = L.Bim[i][j]
            L.b[j + M][i + M] = L.Bre[i][j]
    for i in range(n):
        for j in range(n):
            L.u[i][j] = 1 if i == j else 0
    gram_schmidt(L, n)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round_nearest_even(L.mu[k][j])
            if q != 0:
                for t in range(n):
                    L.b[k][t] -= q * L.b[j][t]
                    L.u[k][t] -= q * L.u[j][t]
                for t in range(j):
                    L.mu[k][t] -= q * L.mu[j][t]
                L.mu[k][j] -= q
        if L.bn[k] >= (LLL_DELTA - L.mu[k][k - 1] * L.mu[k][k - 1]) * L.bn[k - 1]:
            k += 1
        else:
            memcpy(tmpd, L.b[k], sizeof(tmpd))
            memcpy(L.b[k], L.b[k - 1], sizeof(tmpd))
            memcpy(L.b[k - 1], tmpd, sizeof(tmpd))
            memcpy(tmpl, L.u[k], sizeof(tmpl))
            memcpy(L.u[k], L.u[k - 1], sizeof(tmpl))
            memcpy(L.u[k - 1], tmpl, sizeof(tmpl))
            gram_schmidt(L, n)
            if k > 1:
                k -= 1


cdef inline long round_nearest_even(double x) noexcept nogil:
    # matches python's round()
    cdef double f = floor(x)
    cdef double d = x - f
    if d > 0.5:
        return <long> f + 1
    if d < 0.5:
        return <long> f
    if (<long> f) % 2 == 0:
        return <long> f
    return <long> f + 1


cdef int canon_norm(Link* L, const long* x, Cand* out) noexcept nogil:
    """Gaussian vector from real stacking x, canonicalised, with ||B a||^2."""
    cdef int M = L.M, m, i, first = -1
    cdef long re, im, ur = 1, ui = 0, ar, ai
    cdef double sre, sim, nrm = 0.0
    for m in range(M):
        if x[m] != 0 or x[m + M] != 0:
            first = m
            break
    if first < 0:
        return ERR_INTERNAL
    re = x[first]
    im = x[first + M]
    if re > 0 and im >= 0:
        ur = 1; ui = 0
    elif re <= 0 and im > 0:
        ur = 0; ui = -1
    elif re < 0 and im <= 0:
        ur = -1; ui = 0
    else:
        ur = 0; ui = 1
    for i in range(MAXN):
        out.v[i] = 0
    for m in range(M):
        ar = x[m]
        ai = x[m + M]
        out.v[2 * m] = ur * ar - ui * ai
        out.v[2 * m + 1] = ur * ai + ui * ar
        if out.v[2 * m] > ENTRY_BOUND or out.v[2 * m] < -ENTRY_BOUND:
            return ERR_BOUND
        if out.v[2 * m + 1] > ENTRY_BOUND or out.v[2 * m + 1] < -ENTRY_BOUND:
            return ERR_BOUND
    for i in range(M):
        sre = 0.0
        sim = 0.0
        for m in range(i, M):
            sre += L.Bre[i][m] * out.v[2 * m] - L.Bim[i][m] * out.v[2 * m + 1]
            sim += L.Bre[i][m] * out.v[2 * m + 1] + L.Bim[i][m] * out.v[2 * m]
        nrm += sre * sre + sim * sim
    out.norm = nrm
    return OK


cdef void det_small(long* are, long* aim, int k, int stride, int* cols, long* ore, long* oim) noexcept nogil:
    """Determinant of the k x k matrix a[r][cols[c]] (rows 0..k-1), Laplace expansion."""
    cdef long sre = 0, sim = 0, cre, cim, xre, xim
    cdef int c, j, sign = 1, idx
    cdef int sub_cols[MAXM]
    if k == 1:
        ore[0] = are[cols[0]]
        oim[0] = aim[cols[0]]
        return
    for c in range(k):
        idx = 0
        for j in range(k):
            if j != c:
                sub_cols[idx] = cols[j]
                idx += 1
        det_small(are + stride, aim + stride, k - 1, stride, sub_cols, &cre, &cim)
        xre = are[cols[c]]
        xim = aim[cols[c]]
        sre += sign * (xre * cre - xim * cim)
        sim += sign * (xre * cim + xim * cre)
        sign = -sign
    ore[0] = sre
    oim[0] = sim


cdef bint rows_independent(long* rows, int k, int M) noexcept nogil:
    """Exact test that k interleaved Gaussian rows (length M) are independent over C."""
    cdef long are[MAXM * MAXM]
    cdef long aim[MAXM * MAXM]
    cdef int r, m, i
    cdef int cols[MAXM]
    cdef long dre, dim
    if k > M:
        return False
    for r in range(k):
        for m in range(M):
            are[r * M + m] = rows[r * MAXN + 2 * m]
            aim[r * M + m] = rows[r * MAXN + 2 * m + 1]
    # iterate over k-subsets of columns in lexicographic order
    for i in range(k):
        cols[i] = i
    while True:
        det_small(are, aim, k, M, cols, &dre, &dim)
        if dre != 0 or dim != 0:
            return True
        i = k - 1
        while i >= 0 and cols[i] == M - k + i:
            i -= 1
        if i < 0:
            return False
        cols[i] += 1
        for m in range(i + 1, k):
            cols[m] = cols[m - 1] + 1


cdef int greedy(Cand* cands, int ncand, int L, const long* given, int ngiven, int M,
                Cand* out, int* nout) noexcept nogil:
    cdef long rows[MAXM * MAXN]
    cdef int k = ngiven, i, t
    memset(rows, 0, sizeof(rows))
    for i in range(ngiven):
        for t in range(MAXN):
            rows[i * MAXN + t] = given[i * MAXN + t]
    nout[0] = 0
    for i in range(ncand):
        if nout[0] == L:
            break
        if i > 0 and cand_cmp(&cands[i], &cands[i - 1]) == 0:
            continue
        for t in range(MAXN):
            rows[k * MAXN + t] = cands[i].v[t]
        if rows_independent(rows, k + 1, M):
            out[nout[0]] = cands[i]
            nout[0] += 1
            k += 1
    return OK


cdef int enum_rec(Link* L, int k, double dist_above, Buf* buf) noexcept nogil:
    cdef int n = 2 * L.M, j, t, rc
    cdef double c = 0.0
    cdef long base, first, step
    cdef bint near, far
    for j in range(k + 1, n):
        c -= L.mu[j][k] * L.z[j]
    base = <long> floor(c + 0.5)
    first = 1 if c >= base else -1
    rc = enum_visit(L, k, base, c, dist_above, buf)
    if rc < 0:
        return rc
    if rc == 1:
        near = True
        far = True
        step = 1
        while near or far:
            if near:
                rc = enum_visit(L, k, base + first * step, c, dist_above, buf)
                if rc < 0:
                    return rc
                near = rc == 1
            if far:
                rc = enum_visit(L, k, base - first * step, c, dist_above, buf)
                if rc < 0:
                    return rc
                far = rc == 1
            step += 1
    L.z[k] = 0
    return OK


cdef int enum_visit(Link* L, int k, long zk, double c, double dist_above, Buf* buf) noexcept nogil:
    cdef double d = zk - c
    cdef double dist = dist_above + L.bn[k] * d * d
    cdef int n = 2 * L.M, i, j, rc
    cdef bint nonzero = False
    cdef long x[MAXN]
    cdef Cand cand
    if dist > L.radius_sq:
        return 0
    L.z[k] = zk
    if k == 0:
        for i in range(n):
            if L.z[i] != 0:
                nonzero = True
                break
        if nonzero:
            for i in range(n):
                x[i] = 0
                for j in range(n):
                    x[i] += L.u[j][i] * L.z[j]
            rc = canon_norm(L, x, &cand)
            if rc < 0:
                return rc
            rc = buf_push(buf, &cand)
            if rc < 0:
                return rc
    else:
        rc = enum_rec(L, k - 1, dist, buf)
        if rc < 0:
            return rc
    return 1


cdef int link_minima(const double* hre, const double* him, int M, double snr, int L,
                     const long* given, int ngiven, Cand* out, Buf* buf,
                     double cert_norm=0.0) noexcept nogil:
    """L best vectors of one link; returns CERTIFIED instead of searching when the
    reduced basis alone proves every one of them has norm below ``cert_norm``."""
    cdef Link lk
    cdef Cand seeds[MAXN]
    cdef Cand chosen[MAXM]
    cdef int n = 2 * M, j, rc, nch
    cdef double r2 = 0.0
    build_factor(&lk, hre, him, M, snr)
    lll(&lk)
    for j in range(n):
        rc = canon_norm(&lk, lk.u[j], &seeds[j])
        if rc < 0:
            return rc
    qsort(seeds, n, sizeof(Cand), cand_cmp)
    greedy(seeds, n, L, given, ngiven, M, chosen, &nch)
    if nch < L:
        return ERR_INTERNAL
    for j in range(nch):
        if chosen[j].norm > r2:
            r2 = chosen[j].norm
    if r2 < cert_norm:
        # successive minima are bounded by these independent vectors
        for j in range(L):
            out[j] = chosen[j]
        return CERTIFIED
    lk.radius_sq = r2 * (1.0 + RADIUS_SLACK)
    while True:
        for j in range(n):
            lk.z[j] = 0
        buf.size = 0
        rc = enum_rec(&lk, n - 1, 0.0, buf)
        if rc < 0:
            return rc
        qsort(buf.data, buf.size, sizeof(Cand), cand_cmp)
        greedy(buf.data, buf.size, L, given, ngiven, M, out, &nch)
        if nch == L:
            return OK
        lk.radius_sq *= 2.0


cdef inline double rate_of(double q) noexcept nogil:
    cdef double r = -log2(q)
    return r if r > 0.0 else 0.0


cdef struct Facts:
    double rates_d[MAXM]
    double rates_r[MAXM]
    double rate_rd
    double rate_r_star
    int rank_def
    double ins_rates_d[MAXM]
    double soussi
    int certified
    int relay_skipped


cdef int trial_facts(const double* sd_re, const double* sd_im, const double* sr_re,
                     const double* sr_im, double rd_abs2, int M, double snr_sd,
                     double snr_sr, double snr_rd, bint perfect_rd, double cert_norm,
                     double target, bint need_relay, Facts* f, Buf* buf) noexcept nogil:
    cdef Cand dvec[MAXM]
    cdef Cand rvec[MAXM]
    cdef Cand ivec[MAXM]
    cdef long rows[MAXM * MAXN]
    cdef int m, l, j, i, k, rc_d, rc_r, rc, found
    cdef double best, val

    if perfect_rd:
        f.rate_rd = INFINITY
    else:
        f.rate_rd = log2(1.0 + rd_abs2 * snr_rd)
    f.certified = 0
    f.relay_skipped = 0

    rc_d = link_minima(sd_re, sd_im, M, snr_sd, M, NULL, 0, dvec, buf, cert_norm)
    if rc_d < 0:
        return rc_d
    if not need_relay and (rc_d == CERTIFIED or rate_of(dvec[M - 1].norm) >= target):
        # direct decoding succeeds; nothing on the relay side can matter
        f.certified = 1 if rc_d == CERTIFIED else 0
        f.relay_skipped = 1
        for m in range(M):
            f.rates_d[m] = rate_of(dvec[m].norm)
            f.rates_r[m] = NAN
        for m in range(M - 1):
            f.ins_rates_d[m] = f.rates_d[m]
        f.rate_r_star = NAN
        f.rank_def = 0
        f.soussi = NAN
        return OK
    rc_r = link_minima(sr_re, sr_im, M, snr_sr, M, NULL, 0, rvec, buf, cert_norm)
    if rc_r < 0:
        return rc_r
    if rc_d == CERTIFIED and rc_r == CERTIFIED:
        # every rate on both links clears the target; only lower bounds are kept
        f.certified = 1
        best = INFINITY
        for m in range(M):
            f.rates_d[m] = rate_of(dvec[m].norm)
            f.rates_r[m] = rate_of(rvec[m].norm)
            best = f.rates_d[m] if f.rates_d[m] < best else best
            best = f.rates_r[m] if f.rates_r[m] < best else best
        for m in range(M - 1):
            f.ins_rates_d[m] = f.rates_d[m]
        f.rate_r_star = f.rates_r[0]
        f.rank_def = 0
        f.soussi = best
        return OK
    if rc_d == CERTIFIED:
        rc_d = link_minima(sd_re, sd_im, M, snr_sd, M, NULL, 0, dvec, buf, 0.0)
        if rc_d < 0:
            return rc_d
    if rc_r == CERTIFIED:
        rc_r = link_minima(sr_re, sr_im, M, snr_sr, M, NULL, 0, rvec, buf, 0.0)
        if rc_r < 0:
            return rc_r

    for m in range(M):
        f.rates_d[m] = rate_of(dvec[m].norm)
        f.rates_r[m] = rate_of(rvec[m].norm)

    # rows 1..M-1 hold the destination's M-1 best vectors
    memset(rows, 0, sizeof(rows))
    for m in range(M - 1):
        memcpy(&rows[(m + 1) * MAXN], dvec[m].v, MAXN * sizeof(long))

    # lim-FB cooperative matrix [a_r1; a_d1..a_d(M-1)]
    memcpy(&rows[0], rvec[0].v, MAXN * sizeof(long))
    f.rank_def = 0 if rows_independent(rows, M, M) else 1

    # suf-FB: best relay vector completing the rank
    found = -1
    for l in range(M):
        memcpy(&rows[0], rvec[l].v, MAXN * sizeof(long))
        if rows_independent(rows, M, M):
            found = l
            break
    if found < 0:
        return ERR_INTERNAL
    f.rate_r_star = f.rates_r[found]

    # Insausti: destination completes its matrix around a_r1
    if M > 1:
        if f.rank_def == 0:
            for m in range(M - 1):
                f.ins_rates_d[m] = f.rates_d[m]
        else:
            rc = link_minima(sd_re, sd_im, M, snr_sd, M - 1, rvec[0].v, 1, ivec, buf, 0.0)
            if rc < 0:
                return rc
            for m in range(M - 1):
                f.ins_rates_d[m] = rate_of(ivec[m].norm)

    # Soussi: joint max-min over relay vector x (M-1)-subset of A_d
    best = -1.0
    for l in range(M):
        for j in range(M):
            memcpy(&rows[0], rvec[l].v, MAXN * sizeof(long))
            k = 1
            val = f.rates_r[l]
            for i in range(M):
                if i == j:
                    continue
                memcpy(&rows[k * MAXN], dvec[i].v, MAXN * sizeof(long))
                if f.rates_d[i] < val:
                    val = f.rates_d[i]
                k += 1
            if rows_independent(rows, M, M) and val > best:
                best = val
    if best < 0.0:
        return ERR_INTERNAL
    f.soussi = best
    return OK


def evaluate_batch(h_sd, h_sr, h_rd, double snr_sd, double snr_sr, double snr_rd,
                   bint perfect_rd=False, target_rate=None, bint need_relay=True):
    """Lattice facts for a batch of realizations.

    With ``target_rate`` set, trials whose reduced bases certify that every
    rate on both links exceeds it skip enumeration; their rates are then
    lower bounds and ``rank_def`` is not evaluated (flagged in
    ``certified``). Threshold events at that rate stay exact. With
    ``need_relay=False`` as well, the relay link is skipped altogether on
    trials whose direct decoding succeeds (flagged in ``relay_skipped``;
    relay facts are NaN there).

    Returns ``(facts, failed)`` where ``failed`` lists trial indices the
    compiled path could not handle (coefficients beyond the int64 range).
    """
    cdef cnp.ndarray[double, ndim=2, mode="c"] sd_re = np.ascontiguousarray(np.real(h_sd), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] sd_im = np.ascontiguousarray(np.imag(h_sd), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] sr_re = np.ascontiguousarray(np.real(h_sr), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] sr_im = np.ascontiguousarray(np.imag(h_sr), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] rd_abs2 = np.ascontiguousarray(np.abs(h_rd) ** 2, dtype=np.float64)
    cdef int ntr = sd_re.shape[0], M = sd_re.shape[1]
    if M < 1 or M > MAXM:
        raise ValueError(f"compiled kernel supports 1 <= M <= {MAXM}")
    if sr_re.shape[0] != ntr or sr_re.shape[1] != M or rd_abs2.shape[0] != ntr:
        raise ValueError("channel arrays disagree in shape")
    cdef double cert_norm = 0.0
    cdef double target = INFINITY
    if not need_relay and target_rate is None:
        raise ValueError("need_relay=False requires target_rate")
    if target_rate is not None:
        target = float(target_rate)
        # strict margin so a certified rate can never round onto the threshold
        cert_norm = 2.0 ** (-float(target_rate)) * (1.0 - 1e-9)
    cdef int Mi = max(M - 1, 1)
    cdef cnp.ndarray[double, ndim=2, mode="c"] rates_d = np.zeros((ntr, M))
    cdef cnp.ndarray[double, ndim=2, mode="c"] rates_r = np.zeros((ntr, M))
    cdef cnp.ndarray[double, ndim=1, mode="c"] rate_rd = np.zeros(ntr)
    cdef cnp.ndarray[double, ndim=1, mode="c"] rate_r_star = np.zeros(ntr)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c"] rank_def = np.zeros(ntr, dtype=np.uint8)
    cdef cnp.ndarray[double, ndim=2, mode="c"] ins_rates_d = np.zeros((ntr, Mi))
    cdef cnp.ndarray[double, ndim=1, mode="c"] soussi = np.zeros(ntr)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c"] certified = np.zeros(ntr, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c"] skipped = np.zeros(ntr, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c"] bad = np.zeros(ntr, dtype=np.uint8)

    cdef Buf buf
    cdef Facts f
    cdef int t, m
    cdef int rc = OK

    buf.cap = 256
    buf.size = 0
    buf.data = <Cand*> malloc(buf.cap * sizeof(Cand))
    if buf.data == NULL:
        raise MemoryError()
    try:
        with nogil:
            for t in range(ntr):
                rc = trial_facts(&sd_re[t, 0], &sd_im[t, 0], &sr_re[t, 0], &sr_im[t, 0],
                                 rd_abs2[t], M, snr_sd, snr_sr, snr_rd, perfect_rd,
                                 cert_norm, target, need_relay, &f, &buf)
                if rc == ERR_MEM:
                    break
                if rc != OK:
                    bad[t] = 1
                    rc = OK
                    continue
                for m in range(M):
                    rates_d[t, m] = f.rates_d[m]
                    rates_r[t, m] = f.rates_r[m]
                for m in range(M - 1):
                    ins_rates_d[t, m] = f.ins_rates_d[m]
                rate_rd[t] = f.rate_rd
                rate_r_star[t] = f.rate_r_star
                rank_def[t] = f.rank_def
                soussi[t] = f.soussi
                certified[t] = f.certified
                skipped[t] = f.relay_skipped
        if rc == ERR_MEM:
            raise MemoryError()
    finally:
        free(buf.data)

    facts = {
        "rates_d": rates_d,
        "rates_r": rates_r,
        "rate_rd": rate_rd,
        "rate_r_star": rate_r_star,
        "rank_def": rank_def.astype(bool),
        "ins_rates_d": ins_rates_d[:, : M - 1],
        "soussi": soussi,
        "certified": certified.astype(bool),
        "relay_skipped": skipped.astype(bool),
    }
    return facts, np.flatnonzero(bad)


def link_rates_batch(h, double snr, target_rate=None):
    """Rates of the M best equations for each row of ``h`` (one receiver).

    With ``target_rate`` set, rows certified to clear it keep lower bounds,
    which leaves every threshold comparison at that rate exact. Returns
    ``(rates, failed)``.
    """
    cdef cnp.ndarray[double, ndim=2, mode="c"] hre = np.ascontiguousarray(np.real(h), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] him = np.ascontiguousarray(np.imag(h), dtype=np.float64)
    cdef int ntr = hre.shape[0], M = hre.shape[1], t, m, rc = OK
    if M < 1 or M > MAXM:
        raise ValueError(f"compiled kernel supports 1 <= M <= {MAXM}")
    cdef double cert_norm = 0.0
    if target_rate is not None:
        cert_norm = 2.0 ** (-float(target_rate)) * (1.0 - 1e-9)
    cdef cnp.ndarray[double, ndim=2, mode="c"] rates = np.zeros((ntr, M))
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c"] bad = np.zeros(ntr, dtype=np.uint8)
    cdef Cand out[MAXM]
    cdef Buf buf
    buf.cap = 256
    buf.size = 0
    buf.data = <Cand*> malloc(buf.cap * sizeof(Cand))
    if buf.data == NULL:
        raise MemoryError()
    try:
        with nogil:
            for t in range(ntr):
                rc = link_minima(&hre[t, 0], &him[t, 0], M, snr, M, NULL, 0, out, &buf, cert_norm)
                if rc == ERR_MEM:
                    break
                if rc < 0:
                    bad[t] = 1
                    rc = OK
                    continue
                for m in range(M):
                    rates[t, m] = rate_of(out[m].norm)
        if rc == ERR_MEM:
            raise MemoryError()
    finally:
        free(buf.data)
    return rates, np.flatnonzero(bad)


def rank_def_batch(h_sd, h_sr, double snr_sd, double snr_sr):
    """Whether the relay's best vector is dependent on the destination's M-1 best.

    Only the vectors that enter the test are searched for (one at the relay,
    M-1 at the destination), which keeps high-SNR relay links cheap. The
    flag does not depend on the target rate. Returns ``(flags, failed)``.
    """
    cdef cnp.ndarray[double, ndim=2, mode="c"] sd_re = np.ascontiguousarray(np.real(h_sd), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] sd_im = np.ascontiguousarray(np.imag(h_sd), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] sr_re = np.ascontiguousarray(np.real(h_sr), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] sr_im = np.ascontiguousarray(np.imag(h_sr), dtype=np.float64)
    cdef int ntr = sd_re.shape[0], M = sd_re.shape[1], t, m, rc = OK
    if M < 2 or M > MAXM:
        raise ValueError(f"rank test needs 2 <= M <= {MAXM}")
    if sr_re.shape[0] != ntr or sr_re.shape[1] != M:
        raise ValueError("channel arrays disagree in shape")
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c"] flags = np.zeros(ntr, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c"] bad = np.zeros(ntr, dtype=np.uint8)
    cdef Cand dvec[MAXM]
    cdef Cand rvec[MAXM]
    cdef long rows[MAXM * MAXN]
    cdef Buf buf
    buf.cap = 256
    buf.size = 0
    buf.data = <Cand*> malloc(buf.cap * sizeof(Cand))
    if buf.data == NULL:
        raise MemoryError()
    try:
        with nogil:
            for t in range(ntr):
                rc = link_minima(&sd_re[t, 0], &sd_im[t, 0], M, snr_sd, M - 1, NULL, 0, dvec, &buf, 0.0)
                if rc >= 0:
                    rc = link_minima(&sr_re[t, 0], &sr_im[t, 0], M, snr_sr, 1, NULL, 0, rvec, &buf, 0.0)
                if rc == ERR_MEM:
                    break
                if rc < 0:
                    bad[t] = 1
                    rc = OK
                    continue
                memset(rows, 0, sizeof(rows))
                memcpy(&rows[0], rvec[0].v, MAXN * sizeof(long))
                for m in range(M - 1):
                    memcpy(&rows[(m + 1) * MAXN], dvec[m].v, MAXN * sizeof(long))
                flags[t] = 0 if rows_independent(rows, M, M) else 1
        if rc == ERR_MEM:
            raise MemoryError()
    finally:
        free(buf.data)
    return flags.astype(bool), np.flatnonzero(bad)


def link_minima_py(h, double snr, int L, given=None):
    """Single-link successive minima through the compiled path (for testing)."""
    cdef cnp.ndarray[double, ndim=1, mode="c"] hre = np.ascontiguousarray(np.real(h), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1, mode="c"] him = np.ascontiguousarray(np.imag(h), dtype=np.float64)
    cdef int M = hre.shape[0], i, m, rc, ng = 0
    cdef Cand out[MAXM]
    cdef long gv[MAXM * MAXN]
    cdef Buf buf
    if M < 1 or M > MAXM:
        raise ValueError(f"compiled kernel supports 1 <= M <= {MAXM}")
    memset(gv, 0, sizeof(gv))
    if given:
        ng = len(given)
        for i in range(ng):
            for m in range(M):
                gv[i * MAXN + 2 * m] = given[i][m][0]
                gv[i * MAXN + 2 * m + 1] = given[i][m][1]
    buf.cap = 256
    buf.size = 0
    buf.data = <Cand*> malloc(buf.cap * sizeof(Cand))
    if buf.data == NULL:
        raise MemoryError()
    try:
        rc = link_minima(&hre[0], &him[0], M, snr, L, gv, ng, out, &buf, 0.0)
    finally:
        free(buf.data)
    if rc == ERR_BOUND:
        raise OverflowError("coefficient entries exceed the exact int64 range")
    if rc != OK:
        raise RuntimeError(f"compiled search failed ({rc})")
    vecs = [tuple((out[i].v[2 * m], out[i].v[2 * m + 1]) for m in range(M)) for i in range(L)]
    norms = [out[i].norm for i in range(L)]
    return vecs, norms
