"""Numba kernels shared by the detector/decoder APIs and the trial engine.

Everything here operates on plain arrays so the same compiled code backs
both the public per-operation functions and the Monte Carlo sweep loop.
Messages that the algorithms define as log-zero are kept as literal -inf;
sums mixing -inf and +inf resolve to 0 (no information) so no NaN can
reach a decision rule.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

NB_OPTS = dict(cache=True)

# detector ids
DET_COVER = 0
DET_MPA = 1
DET_TL_MPA = 2
DET_OMP = 3
DET_AMP = 4
DET_ORACLE = 5

# trial modes
MODE_INITIAL = 0
MODE_PIPELINE = 1
MODE_BASELINE = 2

NEG_INF = -np.inf


def graph_arrays(entries: np.ndarray):
    """Padded adjacency arrays for a 0/1 signature matrix.

    Returns (sub_users, sub_slot, sub_deg, user_subs): the users on each
    sub-carrier, the position of that sub-carrier within each such user's
    own list, per-sub-carrier degrees, and each user's sub-carrier list.
    """
    n_sub, n_users = entries.shape
    col_w = int(entries[:, 0].sum())
    user_subs = np.zeros((n_users, col_w), dtype=np.int64)
    for u in range(n_users):
        user_subs[u] = np.flatnonzero(entries[:, u])
    deg = entries.sum(axis=1).astype(np.int64)
    dmax = max(1, int(deg.max()))
    sub_users = np.full((n_sub, dmax), -1, dtype=np.int64)
    sub_slot = np.full((n_sub, dmax), -1, dtype=np.int64)
    for l in range(n_sub):
        for i, u in enumerate(np.flatnonzero(entries[l])):
            sub_users[l, i] = u
            sub_slot[l, i] = int(np.flatnonzero(user_subs[u] == l)[0])
    return sub_users, sub_slot, deg, user_subs


@njit(**NB_OPTS)
def log_i0(x):
    """log of the modified Bessel function I0, stable for large arguments."""
    ax = abs(x)
    if ax < 3.75:
        t = (ax / 3.75) ** 2
        poly = 1.0 + t * (3.5156229 + t * (3.0899424 + t * (1.2067492
                + t * (0.2659732 + t * (0.0360768 + t * 0.0045813)))))
        return math.log(poly)
    t = 3.75 / ax
    poly = 0.39894228 + t * (0.01328592 + t * (0.00225319 + t * (-0.00157565
            + t * (0.00916281 + t * (-0.02057706 + t * (0.02635537
            + t * (-0.01647633 + t * 0.00392377)))))))
    return ax - 0.5 * math.log(ax) + math.log(poly)


@njit(**NB_OPTS)
def rice_logpdf(x, a, s):
    """Log density of Rice(a, s) at x; -inf for x <= 0."""
    if x <= 0.0:
        return NEG_INF
    s2 = s * s
    return math.log(x / s2) - (x * x + a * a) / (2.0 * s2) + log_i0(x * a / s2)


@njit(**NB_OPTS)
def rice_logshape(x, a, s):
    """Rice log likelihood as a function of the noncentrality only.

    Drops the log(x/s^2) factor, which is constant across load hypotheses
    and cancels under message normalization; unlike the density proper it
    stays well defined in the limit x -> 0, where it still separates the
    hypotheses (exp(-a^2 / 2 s^2))."""
    if x < 0.0:
        return NEG_INF
    s2 = s * s
    return -(x * x + a * a) / (2.0 * s2) + log_i0(x * a / s2)


@njit(**NB_OPTS)
def correlate_kernel(y_p, shifts_conj, col_weight):
    n_sub, length = shifts_conj.shape
    out = np.empty(n_sub)
    scale = math.sqrt(col_weight) / length
    for l in range(n_sub):
        acc = 0.0 + 0.0j
        for n in range(length):
            acc += shifts_conj[l, n] * y_p[n]
        out[l] = scale * abs(acc)
    return out


@njit(**NB_OPTS)
def loads_kernel(values, tau_zc, degrees):
    n = values.shape[0]
    out = np.empty(n, dtype=np.int64)
    for l in range(n):
        f = math.floor(values[l])
        load = int(f) if values[l] - f < tau_zc else int(f) + 1
        if load < 0:
            load = 0
        if load > degrees[l]:
            load = degrees[l]
        out[l] = load
    return out


@njit(**NB_OPTS)
def cover_kernel(busy, user_subs):
    n_users, col_w = user_subs.shape
    flags = np.empty(n_users, dtype=np.uint8)
    for u in range(n_users):
        keep = 1
        for j in range(col_w):
            if busy[user_subs[u, j]] == 0:
                keep = 0
                break
        flags[u] = keep
    return flags


@njit(**NB_OPTS)
def mpa_aud_kernel(R, sub_users, sub_slot, sub_deg, user_subs,
                   s_rice, lam, iters, post_thresh, include_prior):
    """Activity-posterior message passing with Rice check likelihoods.

    Check messages sum the Rice likelihood of the observed correlation over
    activity combinations of the other neighbors, weighted by their current
    messages; each pair is normalized to sum to one.  Returns (posterior of
    activity, active flags).
    """
    n_sub, dmax = sub_users.shape
    n_users, col_w = user_subs.shape

    vc = np.empty((n_users, col_w, 2))
    cv = np.empty((n_users, col_w, 2))
    for u in range(n_users):
        for j in range(col_w):
            vc[u, j, 0] = 1.0 - lam
            vc[u, j, 1] = lam
            cv[u, j, 0] = 0.5
            cv[u, j, 1] = 0.5

    # Rice log-likelihood of R[l] under each feasible integer load
    rice_cache = np.full((n_sub, dmax + 2), NEG_INF)
    for l in range(n_sub):
        for a in range(sub_deg[l] + 1):
            rice_cache[l, a] = rice_logshape(R[l], float(a), s_rice)

    W = np.empty(dmax + 1)
    for _ in range(iters):
        # check -> variable
        for l in range(n_sub):
            d = sub_deg[l]
            if d == 0:
                continue
            for i in range(d):
                u = sub_users[l, i]
                j = sub_slot[l, i]
                # load spectrum of the other neighbors
                W[0] = 1.0
                wlen = 1
                for i2 in range(d):
                    if i2 == i:
                        continue
                    u2 = sub_users[l, i2]
                    j2 = sub_slot[l, i2]
                    q0 = vc[u2, j2, 0]
                    q1 = vc[u2, j2, 1]
                    W[wlen] = W[wlen - 1] * q1
                    for m in range(wlen - 1, 0, -1):
                        W[m] = W[m] * q0 + W[m - 1] * q1
                    W[0] *= q0
                    wlen += 1
                e0 = NEG_INF
                e1 = NEG_INF
                acc0 = 0.0
                acc1 = 0.0
                for m in range(wlen):
                    if W[m] <= 0.0:
                        continue
                    lw = math.log(W[m])
                    v = lw + rice_cache[l, m]
                    if v > e0:
                        acc0 = acc0 * math.exp(e0 - v) + 1.0 if e0 > NEG_INF else 1.0
                        e0 = v
                    elif v > NEG_INF:
                        acc0 += math.exp(v - e0)
                    v = lw + rice_cache[l, m + 1]
                    if v > e1:
                        acc1 = acc1 * math.exp(e1 - v) + 1.0 if e1 > NEG_INF else 1.0
                        e1 = v
                    elif v > NEG_INF:
                        acc1 += math.exp(v - e1)
                if e0 == NEG_INF and e1 == NEG_INF:
                    cv[u, j, 0] = 0.5
                    cv[u, j, 1] = 0.5
                else:
                    top = e0 if e0 > e1 else e1
                    p0 = math.exp(e0 - top) * acc0 if e0 > NEG_INF else 0.0
                    p1 = math.exp(e1 - top) * acc1 if e1 > NEG_INF else 0.0
                    c0 = p0 / (p0 + p1)
                    cv[u, j, 0] = c0
                    cv[u, j, 1] = 1.0 - c0
        # variable -> check
        for u in range(n_users):
            for j in range(col_w):
                m0 = 1.0 - lam if include_prior else 1.0
                m1 = lam if include_prior else 1.0
                for j2 in range(col_w):
                    if j2 == j:
                        continue
                    m0 *= cv[u, j2, 0]
                    m1 *= cv[u, j2, 1]
                tot = m0 + m1
                if tot <= 0.0:
                    vc[u, j, 0] = 0.5
                    vc[u, j, 1] = 0.5
                else:
                    vc[u, j, 0] = m0 / tot
                    vc[u, j, 1] = 1.0 - m0 / tot

    post1 = np.empty(n_users)
    flags = np.empty(n_users, dtype=np.uint8)
    for u in range(n_users):
        m0 = 1.0 - lam if include_prior else 1.0
        m1 = lam if include_prior else 1.0
        for j in range(col_w):
            m0 *= cv[u, j, 0]
            m1 *= cv[u, j, 1]
        tot = m0 + m1
        if tot <= 0.0:
            p0 = 0.5
        else:
            p0 = m0 / tot
        post1[u] = 1.0 - p0
        flags[u] = 0 if p0 > post_thresh else 1
    return post1, flags


@njit(**NB_OPTS)
def _safe_sum3(finite, n_pos, n_neg):
    if n_pos > 0 and n_neg > 0:
        return 0.0
    if n_neg > 0:
        return NEG_INF
    if n_pos > 0:
        return np.inf
    return finite


@njit(**NB_OPTS)
def tl_mpa_kernel(loads, sub_users, sub_slot, sub_deg, user_subs,
                  lam, iters, llr_thresh, ratio_form, include_prior):
    """Load-constrained message passing in the log domain.

    Check nodes enumerate only the neighbor activity combinations whose
    total equals the estimated load; the message to a neighbor is the
    log-ratio of the combination mass consistent with it being active
    versus inactive (ratio form) or just the active-side mass (literal
    form).  A zero estimated load sends -inf.  Returns (per-user LLR,
    active flags, combinations enumerated per check pass).
    """
    n_sub, dmax = sub_users.shape
    n_users, col_w = user_subs.shape
    prior = math.log(lam / (1.0 - lam))

    vc = np.full((n_users, col_w), prior)
    cv = np.zeros((n_users, col_w))

    p = np.empty(dmax)
    num = np.empty(dmax)
    den = np.empty(dmax)
    comb_idx = np.empty(dmax, dtype=np.int64)
    in_set = np.empty(dmax, dtype=np.uint8)
    enum_count = 0

    for it in range(iters):
        # check -> variable
        for l in range(n_sub):
            d = sub_deg[l]
            if d == 0:
                continue
            T = loads[l]
            if T > d:
                T = d
            if T == 0:
                for i in range(d):
                    cv[sub_users[l, i], sub_slot[l, i]] = NEG_INF
                if it == 0:
                    enum_count += 1
                continue
            for i in range(d):
                v = vc[sub_users[l, i], sub_slot[l, i]]
                p[i] = 1.0 / (1.0 + math.exp(-v))
                num[i] = 0.0
                den[i] = 0.0
            # enumerate the size-T activity patterns on this sub-carrier
            for i in range(T):
                comb_idx[i] = i
            while True:
                for i in range(d):
                    in_set[i] = 0
                for i in range(T):
                    in_set[comb_idx[i]] = 1
                if it == 0:
                    enum_count += 1
                for t in range(d):
                    prod = 1.0
                    for i in range(d):
                        if i == t:
                            continue
                        prod *= p[i] if in_set[i] else 1.0 - p[i]
                    if in_set[t]:
                        num[t] += prod
                    else:
                        den[t] += prod
                i = T - 1
                while i >= 0 and comb_idx[i] == d - T + i:
                    i -= 1
                if i < 0:
                    break
                comb_idx[i] += 1
                for j in range(i + 1, T):
                    comb_idx[j] = comb_idx[j - 1] + 1
            for i in range(d):
                if ratio_form:
                    if num[i] == 0.0 and den[i] == 0.0:
                        msg = 0.0
                    elif num[i] == 0.0:
                        msg = NEG_INF
                    elif den[i] == 0.0:
                        msg = np.inf
                    else:
                        msg = math.log(num[i]) - math.log(den[i])
                else:
                    msg = math.log(num[i]) if num[i] > 0.0 else NEG_INF
                cv[sub_users[l, i], sub_slot[l, i]] = msg
        # variable -> check
        for u in range(n_users):
            for j in range(col_w):
                finite = prior if include_prior else 0.0
                n_pos = 0
                n_neg = 0
                for j2 in range(col_w):
                    if j2 == j:
                        continue
                    m = cv[u, j2]
                    if m == np.inf:
                        n_pos += 1
                    elif m == NEG_INF:
                        n_neg += 1
                    else:
                        finite += m
                vc[u, j] = _safe_sum3(finite, n_pos, n_neg)

    llr = np.empty(n_users)
    flags = np.empty(n_users, dtype=np.uint8)
    for u in range(n_users):
        finite = 0.0
        n_pos = 0
        n_neg = 0
        for j in range(col_w):
            m = cv[u, j]
            if m == np.inf:
                n_pos += 1
            elif m == NEG_INF:
                n_neg += 1
            else:
                finite += m
        r = _safe_sum3(finite, n_pos, n_neg)
        llr[u] = r
        flags[u] = 0 if r < llr_thresh else 1
    return llr, flags, enum_count


@njit(**NB_OPTS)
def decode_kernel(Y, cand, sub_users, sub_slot, sub_deg, user_subs,
                  const_pts, sigma2, iters):
    """Payload MPA over the factor graph restricted to candidate users.

    Log-domain sum-product per data slot: check nodes marginalize the
    Gaussian likelihood over the other candidates' alphabet combinations,
    variable nodes combine extrinsics under a uniform prior over the
    extended alphabet.  Returns (posteriors, hard decisions, zero counts,
    error flag); the error flag is 1 when a sub-carrier's candidate degree
    exceeds the enumeration guard of 8.
    """
    n_sub = sub_users.shape[0]
    n_users, col_w = user_subs.shape
    n_slots = Y.shape[1]
    nc = cand.shape[0]
    mp1 = const_pts.shape[1]

    post = np.zeros((nc, n_slots, mp1))
    hard = np.zeros((nc, n_slots), dtype=np.int64)
    zero_cnt = np.zeros(nc, dtype=np.int64)
    if nc == 0:
        return post, hard, zero_cnt, 0

    cpos = np.full(n_users, -1, dtype=np.int64)
    for i in range(nc):
        cpos[cand[i]] = i
    dmax_r = 0
    r_users = np.full((n_sub, sub_users.shape[1]), -1, dtype=np.int64)
    r_slots = np.full((n_sub, sub_users.shape[1]), -1, dtype=np.int64)
    r_deg = np.zeros(n_sub, dtype=np.int64)
    for l in range(n_sub):
        cnt = 0
        for i in range(sub_deg[l]):
            u = sub_users[l, i]
            if cpos[u] >= 0:
                r_users[l, cnt] = cpos[u]
                r_slots[l, cnt] = sub_slot[l, i]
                cnt += 1
        r_deg[l] = cnt
        if cnt > dmax_r:
            dmax_r = cnt
    if dmax_r > 8:
        return post, hard, zero_cnt, 1

    log_vc = np.zeros((nc, col_w, mp1))
    log_cv = np.zeros((nc, col_w, mp1))
    opos = np.empty(8, dtype=np.int64)
    oj = np.empty(8, dtype=np.int64)
    dig = np.empty(8, dtype=np.int64)
    mx = np.empty(mp1)
    sm = np.empty(mp1)
    msg = np.empty(mp1)

    for k in range(n_slots):
        for i in range(nc):
            for j in range(col_w):
                for x in range(mp1):
                    log_vc[i, j, x] = 0.0
                    log_cv[i, j, x] = 0.0
        for _ in range(iters):
            # check -> variable
            for l in range(n_sub):
                d = r_deg[l]
                if d == 0:
                    continue
                y = Y[l, k]
                for t in range(d):
                    tpos = r_users[l, t]
                    tj = r_slots[l, t]
                    tu = cand[tpos]
                    no = 0
                    for i in range(d):
                        if i == t:
                            continue
                        opos[no] = r_users[l, i]
                        oj[no] = r_slots[l, i]
                        no += 1
                    for x in range(mp1):
                        mx[x] = NEG_INF
                        sm[x] = 0.0
                    if no == 0:
                        for x in range(mp1):
                            diff = y - const_pts[tu, x]
                            mx[x] = -(diff.real * diff.real + diff.imag * diff.imag) / sigma2
                            sm[x] = 1.0
                    else:
                        for ii in range(no):
                            dig[ii] = 0
                        while True:
                            s_pts = 0.0 + 0.0j
                            base = 0.0
                            for ii in range(no):
                                up = opos[ii]
                                s_pts += const_pts[cand[up], dig[ii]]
                                base += log_vc[up, oj[ii], dig[ii]]
                            if base > NEG_INF:
                                for x in range(mp1):
                                    diff = y - s_pts - const_pts[tu, x]
                                    arg = base - (diff.real * diff.real + diff.imag * diff.imag) / sigma2
                                    if arg > mx[x]:
                                        if mx[x] > NEG_INF:
                                            sm[x] = sm[x] * math.exp(mx[x] - arg) + 1.0
                                        else:
                                            sm[x] = 1.0
                                        mx[x] = arg
                                    elif arg > NEG_INF:
                                        sm[x] += math.exp(arg - mx[x])
                            ii = 0
                            while ii < no:
                                dig[ii] += 1
                                if dig[ii] < mp1:
                                    break
                                dig[ii] = 0
                                ii += 1
                            if ii == no:
                                break
                    top = NEG_INF
                    for x in range(mp1):
                        msg[x] = mx[x] + math.log(sm[x]) if mx[x] > NEG_INF else NEG_INF
                        if msg[x] > top:
                            top = msg[x]
                    if top == NEG_INF:
                        for x in range(mp1):
                            log_cv[tpos, tj, x] = -math.log(mp1)
                    else:
                        tot = 0.0
                        for x in range(mp1):
                            tot += math.exp(msg[x] - top)
                        lse = top + math.log(tot)
                        for x in range(mp1):
                            log_cv[tpos, tj, x] = msg[x] - lse
            # variable -> check
            for i in range(nc):
                for j in range(col_w):
                    top = NEG_INF
                    for x in range(mp1):
                        acc = 0.0
                        for j2 in range(col_w):
                            if j2 == j:
                                continue
                            acc += log_cv[i, j2, x]
                        msg[x] = acc
                        if acc > top:
                            top = acc
                    if top == NEG_INF:
                        for x in range(mp1):
                            log_vc[i, j, x] = -math.log(mp1)
                    else:
                        tot = 0.0
                        for x in range(mp1):
                            tot += math.exp(msg[x] - top)
                        lse = top + math.log(tot)
                        for x in range(mp1):
                            log_vc[i, j, x] = msg[x] - lse
        # posteriors and hard decisions
        for i in range(nc):
            top = NEG_INF
            for x in range(mp1):
                acc = 0.0
                for j in range(col_w):
                    acc += log_cv[i, j, x]
                msg[x] = acc
                if acc > top:
                    top = acc
            if top == NEG_INF:
                for x in range(mp1):
                    post[i, k, x] = 1.0 / mp1
            else:
                tot = 0.0
                for x in range(mp1):
                    tot += math.exp(msg[x] - top)
                for x in range(mp1):
                    post[i, k, x] = math.exp(msg[x] - top) / tot
            best = 0
            for x in range(1, mp1):
                if post[i, k, x] > post[i, k, best]:
                    best = x
            hard[i, k] = best
            if best == mp1 - 1:
                zero_cnt[i] += 1
    return post, hard, zero_cnt, 0


@njit(**NB_OPTS)
def _solve_gram(G, b):
    """Solve G x = b for a small complex Hermitian system, ridge-stabilized."""
    n = G.shape[0]
    A = G.copy()
    x = b.copy()
    for i in range(n):
        A[i, i] += 1e-10
    for col in range(n):
        piv = col
        best = abs(A[col, col])
        for r in range(col + 1, n):
            if abs(A[r, col]) > best:
                best = abs(A[r, col])
                piv = r
        if piv != col:
            for c2 in range(n):
                tmp = A[col, c2]
                A[col, c2] = A[piv, c2]
                A[piv, c2] = tmp
            tmp = x[col]
            x[col] = x[piv]
            x[piv] = tmp
        inv = 1.0 / A[col, col]
        for r in range(col + 1, n):
            f = A[r, col] * inv
            if f != 0:
                for c2 in range(col, n):
                    A[r, c2] -= f * A[col, c2]
                x[r] -= f * x[col]
    for col in range(n - 1, -1, -1):
        acc = x[col]
        for c2 in range(col + 1, n):
            acc -= A[col, c2] * x[c2]
        x[col] = acc / A[col, col]
    return x


@njit(**NB_OPTS)
def omp_kernel(y_p, S, k_max, tol_abs):
    """Greedy support recovery on the preamble dictionary.

    Selects the column best correlated with the residual, least-squares
    refits on the selected set, and stops at ``k_max`` atoms or when the
    residual norm drops to ``tol_abs``.
    """
    length, n_users = S.shape
    flags = np.zeros(n_users, dtype=np.uint8)
    score = np.zeros(n_users)
    sel = np.empty(k_max, dtype=np.int64)
    nsel = 0

    r = y_p.copy()
    G = np.zeros((k_max, k_max), dtype=np.complex128)
    b = np.zeros(k_max, dtype=np.complex128)
    coef = np.zeros(k_max, dtype=np.complex128)
    while nsel < k_max:
        rnorm = 0.0
        for n in range(length):
            rnorm += r[n].real ** 2 + r[n].imag ** 2
        if math.sqrt(rnorm) <= tol_abs:
            break
        best = -1
        best_c = 0.0
        for u in range(n_users):
            if flags[u]:
                continue
            acc = 0.0 + 0.0j
            for n in range(length):
                acc += np.conj(S[n, u]) * r[n]
            c = abs(acc)
            if c > best_c:
                best_c = c
                best = u
        if best < 0 or best_c <= 1e-12:
            break
        sel[nsel] = best
        flags[best] = 1
        # grow the Gram system by the new atom only
        acc = 0.0 + 0.0j
        for n in range(length):
            acc += np.conj(S[n, best]) * y_p[n]
        b[nsel] = acc
        for i in range(nsel + 1):
            acc2 = 0.0 + 0.0j
            for n in range(length):
                acc2 += np.conj(S[n, sel[i]]) * S[n, best]
            G[i, nsel] = acc2
            G[nsel, i] = np.conj(acc2)
        nsel += 1
        coef = _solve_gram(G[:nsel, :nsel].copy(), b[:nsel])
        for n in range(length):
            acc = y_p[n]
            for i in range(nsel):
                acc -= S[n, sel[i]] * coef[i]
            r[n] = acc
    for i in range(nsel):
        score[sel[i]] = abs(coef[i])
    return flags, score, nsel


@njit(**NB_OPTS)
def amp_kernel(y_scaled, S_unit, lam, iters, damp):
    """Approximate message passing with a Bernoulli activity denoiser.

    ``S_unit`` must have unit-norm columns and ``y_scaled`` must be the
    received preamble divided by the common column norm, so active users
    contribute unit amplitude.  ``damp`` blends each estimate with the
    previous one; the shift-pair dictionary is coherent enough that the
    undamped iteration oscillates.  Tracks the empirical residual
    variance; if it diverges the best iterate is returned with the
    converged flag cleared.  Activity decided by posterior >= 0.5.
    """
    length, n_users = S_unit.shape
    x = np.zeros(n_users)
    p1 = np.full(n_users, lam)
    z = y_scaled.copy()
    tau2 = 0.0
    for n in range(length):
        tau2 += z[n].real ** 2 + z[n].imag ** 2
    tau2 /= length
    if lam >= 1.0:
        kappa = NEG_INF
    elif lam <= 0.0:
        kappa = np.inf
    else:
        kappa = math.log((1.0 - lam) / lam)

    best_tau2 = np.inf
    best_p1 = p1.copy()
    converged = 1
    for _ in range(iters):
        if tau2 <= 0.0:
            break
        var_sum = 0.0
        new_x = np.empty(n_users)
        for u in range(n_users):
            acc = 0.0 + 0.0j
            for n in range(length):
                acc += np.conj(S_unit[n, u]) * z[n]
            v = x[u] + acc.real  # activity is real; the imaginary part is noise
            c = kappa + (1.0 - 2.0 * v) / tau2
            if c > 700.0:
                pu = 0.0
            elif c < -700.0:
                pu = 1.0
            else:
                pu = 1.0 / (1.0 + math.exp(c))
            p1[u] = pu
            new_x[u] = damp * pu + (1.0 - damp) * x[u]
            var_sum += pu * (1.0 - pu)
        onsager = var_sum / (length * tau2)
        new_z = np.empty(length, dtype=np.complex128)
        for n in range(length):
            acc = y_scaled[n]
            for u in range(n_users):
                if new_x[u] != 0.0:
                    acc -= S_unit[n, u] * new_x[u]
            new_z[n] = acc + z[n] * onsager
        new_tau2 = 0.0
        for n in range(length):
            new_tau2 += new_z[n].real ** 2 + new_z[n].imag ** 2
        new_tau2 /= length
        if not math.isfinite(new_tau2) or (best_tau2 < np.inf and new_tau2 > 10.0 * best_tau2):
            converged = 0
            break
        if new_tau2 < best_tau2:
            best_tau2 = new_tau2
            for u in range(n_users):
                best_p1[u] = p1[u]
        x = new_x
        z = new_z
        tau2 = new_tau2
    use = p1 if converged else best_p1
    flags = np.empty(n_users, dtype=np.uint8)
    for u in range(n_users):
        flags[u] = 1 if use[u] >= 0.5 else 0
    return use, flags, converged


@njit(**NB_OPTS)
def draw_scenario_kernel(seed, n_users, n_active, n_slots, order,
                         preambles, const_pts, user_subs, n_sub, sigma):
    """Seeded scenario + received frame used by the trial engine.

    Draw order is fixed: activity subset, payload symbols, preamble noise
    (re/im per sample), data noise (re/im per entry).
    """
    np.random.seed(seed & 0x7FFFFFFF)
    length = preambles.shape[1]
    col_w = user_subs.shape[1]

    perm = np.arange(n_users)
    for i in range(n_active):
        j = i + np.random.randint(0, n_users - i)
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    activity = np.zeros(n_users, dtype=np.uint8)
    for i in range(n_active):
        activity[perm[i]] = 1

    sym_idx = np.full((n_users, n_slots), -1, dtype=np.int64)
    for u in range(n_users):
        if activity[u]:
            for k in range(n_slots):
                sym_idx[u, k] = np.random.randint(0, order)

    y_p = np.zeros(length, dtype=np.complex128)
    for u in range(n_users):
        if activity[u]:
            for n in range(length):
                y_p[n] += preambles[u, n]
    ns = sigma / math.sqrt(2.0)
    if sigma > 0.0:
        for n in range(length):
            y_p[n] += complex(ns * np.random.standard_normal(),
                              ns * np.random.standard_normal())

    Y = np.zeros((n_sub, n_slots), dtype=np.complex128)
    for u in range(n_users):
        if activity[u]:
            for j in range(col_w):
                l = user_subs[u, j]
                for k in range(n_slots):
                    Y[l, k] += const_pts[u, sym_idx[u, k]]
    if sigma > 0.0:
        for l in range(n_sub):
            for k in range(n_slots):
                Y[l, k] += complex(ns * np.random.standard_normal(),
                                   ns * np.random.standard_normal())
    return activity, sym_idx, y_p, Y


@njit(**NB_OPTS)
def pipeline_kernel(y_p, Y, activity, sym_idx,
                    detector_id, mode,
                    sub_users, sub_slot, sub_deg, user_subs,
                    shifts_conj, pre_matrix, amp_matrix, amp_scale, col_weight,
                    const_pts, sigma, s_rice, lam,
                    tau_zc, tau_zs, det_iters, post_thresh, llr_thresh,
                    ratio_form, include_prior, dec_iters,
                    omp_kmax, omp_tol_abs, amp_iters):
    """One trial's detection (+ optional decoding) and error counts.

    Returns int64 [missed_initial, false_initial, missed_final,
    false_final, symbol_errors, subset_violations]; symbol_errors is -1
    when no decoding stage ran.
    """
    n_users = user_subs.shape[0]
    n_slots = Y.shape[1]

    if detector_id == DET_ORACLE:
        flags = activity.copy()
    elif detector_id == DET_OMP:
        flags, _, _ = omp_kernel(y_p, pre_matrix, omp_kmax, omp_tol_abs)
    elif detector_id == DET_AMP:
        _, flags, _ = amp_kernel(y_p / amp_scale, amp_matrix, lam, amp_iters, 0.5)
    else:
        R = correlate_kernel(y_p, shifts_conj, col_weight)
        if detector_id == DET_COVER:
            busy = np.empty(R.shape[0], dtype=np.uint8)
            for l in range(R.shape[0]):
                busy[l] = 1 if R[l] >= tau_zc else 0
            flags = cover_kernel(busy, user_subs)
        elif detector_id == DET_MPA:
            _, flags = mpa_aud_kernel(R, sub_users, sub_slot, sub_deg, user_subs,
                                      s_rice, lam, det_iters, post_thresh,
                                      include_prior)
        else:
            loads = loads_kernel(R, tau_zc, sub_deg)
            _, flags, _ = tl_mpa_kernel(loads, sub_users, sub_slot, sub_deg,
                                        user_subs, lam, det_iters, llr_thresh,
                                        ratio_form, include_prior)

    counts = np.zeros(6, dtype=np.int64)
    for u in range(n_users):
        if activity[u] and not flags[u]:
            counts[0] += 1
        if not activity[u] and flags[u]:
            counts[1] += 1

    if mode == MODE_INITIAL:
        counts[2] = counts[0]
        counts[3] = counts[1]
        counts[4] = -1
        return counts

    nc = 0
    for u in range(n_users):
        if flags[u]:
            nc += 1
    cand = np.empty(nc, dtype=np.int64)
    i = 0
    for u in range(n_users):
        if flags[u]:
            cand[i] = u
            i += 1

    sigma2 = sigma * sigma
    if sigma2 <= 0.0:
        sigma2 = 1e-12

    if mode == MODE_BASELINE:
        _, hard, _, err = decode_kernel(Y, cand, sub_users, sub_slot, sub_deg,
                                        user_subs, const_pts, sigma2, dec_iters)
        counts[2] = counts[0]
        counts[3] = counts[1]
        sym_err = 0
        cpos = np.full(n_users, -1, dtype=np.int64)
        for ii in range(nc):
            cpos[cand[ii]] = ii
        for u in range(n_users):
            if activity[u]:
                if cpos[u] < 0:
                    sym_err += n_slots
                else:
                    for k in range(n_slots):
                        if hard[cpos[u], k] != sym_idx[u, k]:
                            sym_err += 1
        counts[4] = sym_err
        return counts

    # full pipeline: decode, drop zero-heavy packets, re-decode
    _, hard1, zero_cnt, err = decode_kernel(Y, cand, sub_users, sub_slot, sub_deg,
                                            user_subs, const_pts, sigma2, dec_iters)
    final = np.zeros(n_users, dtype=np.uint8)
    nc2 = 0
    for ii in range(nc):
        if zero_cnt[ii] < tau_zs:
            final[cand[ii]] = 1
            nc2 += 1
    cand2 = np.empty(nc2, dtype=np.int64)
    i = 0
    for u in range(n_users):
        if final[u]:
            cand2[i] = u
            i += 1
    _, hard2, _, err2 = decode_kernel(Y, cand2, sub_users, sub_slot, sub_deg,
                                      user_subs, const_pts, sigma2, dec_iters)

    cpos2 = np.full(n_users, -1, dtype=np.int64)
    for ii in range(nc2):
        cpos2[cand2[ii]] = ii
    sym_err = 0
    for u in range(n_users):
        if final[u] and not flags[u]:
            counts[5] += 1
        if activity[u] and not final[u]:
            counts[2] += 1
            sym_err += n_slots
        if not activity[u] and final[u]:
            counts[3] += 1
        if activity[u] and final[u]:
            for k in range(n_slots):
                if hard2[cpos2[u], k] != sym_idx[u, k]:
                    sym_err += 1
    counts[4] = sym_err
    return counts


@njit(parallel=True, cache=True)
def sweep_point_kernel(base_seed, n_trials, n_active, n_slots, order,
                       detector_id, mode,
                       sub_users, sub_slot, sub_deg, user_subs,
                       shifts_conj, pre_matrix, amp_matrix, amp_scale, preambles,
                       col_weight, const_pts, sigma, s_rice, lam,
                       tau_zc, tau_zs, det_iters, post_thresh, llr_thresh,
                       ratio_form, include_prior, dec_iters,
                       omp_kmax, omp_tol_abs, amp_iters):
    """Aggregate trial counts for one (detector, sparsity, SNR) grid point.

    Trial t uses seed ``base_seed + t``, so results do not depend on the
    execution order or the number of threads.
    """
    n_users = user_subs.shape[0]
    n_sub = sub_users.shape[0]
    miss_i = 0
    false_i = 0
    miss_f = 0
    false_f = 0
    sym_err = 0
    subset_viol = 0
    for t in prange(n_trials):
        activity, sym_idx, y_p, Y = draw_scenario_kernel(
            base_seed + t, n_users, n_active, n_slots, order,
            preambles, const_pts, user_subs, n_sub, sigma)
        counts = pipeline_kernel(
            y_p, Y, activity, sym_idx, detector_id, mode,
            sub_users, sub_slot, sub_deg, user_subs,
            shifts_conj, pre_matrix, amp_matrix, amp_scale, col_weight,
            const_pts, sigma, s_rice, lam,
            tau_zc, tau_zs, det_iters, post_thresh, llr_thresh,
            ratio_form, include_prior, dec_iters,
            omp_kmax, omp_tol_abs, amp_iters)
        miss_i += counts[0]
        false_i += counts[1]
        miss_f += counts[2]
        false_f += counts[3]
        sym_err += counts[4] if counts[4] >= 0 else 0
        subset_viol += counts[5]
    out = np.empty(6, dtype=np.int64)
    out[0] = miss_i
    out[1] = false_i
    out[2] = miss_f
    out[3] = false_f
    out[4] = sym_err if mode != MODE_INITIAL else -1
    out[5] = subset_viol
    return out
