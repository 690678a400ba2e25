"""
Compiled inner loops.

Everything here is a plain-array numba kernel; argument validation and result
packaging live in the calling modules.
"""

import numpy as np
from numba import njit

# Gray-code enumeration recomputes the running product every 4096 flips
_REFRESH_MASK = 4095


@njit(cache=True, nogil=True)
def jacobi_sweeps(G, V, tol, max_sweeps, cutoff):
    """One-sided (Hestenes) Jacobi on the rows of G.

    G holds the working columns as rows (n x m, contiguous), V the accumulated
    right rotations in the same row layout. Both are updated in place.
    Columns with norm at or below cutoff times the largest column norm are
    left alone. Returns (sweeps_used, converged).
    """
    n = G.shape[0]
    m = G.shape[1]
    for sweep in range(max_sweeps):
        rotated = False
        largest = 0.0
        for i in range(n):
            norm2 = 0.0
            for k in range(m):
                norm2 += G[i, k] * G[i, k]
            if norm2 > largest:
                largest = norm2
        floor = cutoff * cutoff * largest
        for i in range(n - 1):
            for j in range(i + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for k in range(m):
                    gi = G[i, k]
                    gj = G[j, k]
                    alpha += gi * gi
                    beta += gj * gj
                    gamma += gi * gj
                if alpha <= floor or beta <= floor:
                    continue
                if abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                sign = 1.0 if zeta >= 0.0 else -1.0
                t = sign / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for k in range(m):
                    gi = G[i, k]
                    gj = G[j, k]
                    G[i, k] = c * gi - s * gj
                    G[j, k] = s * gi + c * gj
                for k in range(V.shape[1]):
                    vi = V[i, k]
                    vj = V[j, k]
                    V[i, k] = c * vi - s * vj
                    V[j, k] = s * vi + c * vj
        if not rotated:
            return sweep + 1, True
    return max_sweeps, False


@njit(cache=True, nogil=True)
def gray_cut_enum(A):
    """Maximize sum_j |(x^T A)_j| over sign vectors x with x[0] = +1.

    Walks the 2^(d-1) sign vectors in Gray-code order so each step flips one
    row. Returns (best_value, best_x).
    """
    d = A.shape[0]
    n = A.shape[1]
    x = np.ones(d)
    s = np.zeros(n)
    for i in range(d):
        for j in range(n):
            s[j] += A[i, j]
    best = 0.0
    for j in range(n):
        best += abs(s[j])
    best_x = x.copy()
    total = 1 << (d - 1)
    for g in range(1, total):
        h = g
        b = 0
        while (h & 1) == 0:
            h >>= 1
            b += 1
        r = b + 1
        xr = x[r]
        x[r] = -xr
        if (g & _REFRESH_MASK) == 0:
            for j in range(n):
                acc = 0.0
                for i in range(d):
                    acc += x[i] * A[i, j]
                s[j] = acc
        else:
            for j in range(n):
                s[j] -= 2.0 * xr * A[r, j]
        val = 0.0
        for j in range(n):
            val += abs(s[j])
        if val > best:
            best = val
            best_x[:] = x
    return best, best_x


@njit(cache=True, nogil=True)
def cut_distance_search(A, B, row_perms, col_perms, signs):
    """Exhaustive min over (pi, tau) of max over sign vectors, with pruning.

    A and B are d x n with the sign vectors (rows of `signs`) living on the
    d side. A candidate pair is abandoned as soon as one sign vector reaches
    the best value found so far. Returns (best_raw, best_row, best_col) where
    best_raw = max_x sum_j |(x^T (A^{pi,tau} - B))_j|.
    """
    n_signs = signs.shape[0]
    d = A.shape[0]
    n = A.shape[1]
    DB = np.zeros((n_signs, n))
    for s in range(n_signs):
        for j in range(n):
            acc = 0.0
            for i in range(d):
                acc += signs[s, i] * B[i, j]
            DB[s, j] = acc
    C = np.zeros((n_signs, n))
    best = np.inf
    best_r = 0
    best_c = 0
    for r in range(row_perms.shape[0]):
        for s in range(n_signs):
            for col in range(n):
                acc = 0.0
                for i in range(d):
                    acc += signs[s, i] * A[row_perms[r, i], col]
                C[s, col] = acc
        for c in range(col_perms.shape[0]):
            worst = 0.0
            pruned = False
            for s in range(n_signs):
                val = 0.0
                for j in range(n):
                    val += abs(C[s, col_perms[c, j]] - DB[s, j])
                if val >= best:
                    pruned = True
                    break
                if val > worst:
                    worst = val
            if not pruned:
                best = worst
                best_r = r
                best_c = c
    return best, best_r, best_c


@njit(cache=True, nogil=True)
def _proxy_score(row_abs, col_abs, total, mn):
    max_row = 0.0
    for i in range(row_abs.shape[0]):
        if row_abs[i] > max_row:
            max_row = row_abs[i]
    max_col = 0.0
    for j in range(col_abs.shape[0]):
        if col_abs[j] > max_col:
            max_col = col_abs[j]
    spectral = np.sqrt(max_row * max_col) / np.sqrt(mn)
    l1 = total / mn
    return min(spectral, l1)


@njit(cache=True, nogil=True)
def _residual_state(A, B, rp, cp):
    m = B.shape[0]
    n = B.shape[1]
    D = np.empty((m, n))
    row_abs = np.zeros(m)
    col_abs = np.zeros(n)
    total = 0.0
    for i in range(m):
        for j in range(n):
            v = A[rp[i], cp[j]] - B[i, j]
            D[i, j] = v
            a = abs(v)
            row_abs[i] += a
            col_abs[j] += a
            total += a
    return D, row_abs, col_abs, total


@njit(cache=True, nogil=True)
def anneal_permutations(A, B, rp0, cp0, levels, decay, proposals, seed):
    """Simulated annealing over (pi, tau) for min ||A^{pi,tau} - B||.

    The score is the certified bound min(sqrt(||D||_1 ||D||_inf)/sqrt(mn),
    mean |D|) on the cut norm of D = A^{pi,tau} - B, updated incrementally
    per pairwise row or column swap. Returns (best_score, best_rp, best_cp).
    """
    np.random.seed(seed)
    m = B.shape[0]
    n = B.shape[1]
    mn = float(m * n)
    rp = rp0.copy()
    cp = cp0.copy()
    D, row_abs, col_abs, total = _residual_state(A, B, rp, cp)
    score = _proxy_score(row_abs, col_abs, total, mn)
    best = score
    best_rp = rp.copy()
    best_cp = cp.copy()
    if best <= 0.0:
        return best, best_rp, best_cp
    temperature = score
    new_a = np.empty(max(m, n))
    new_b = np.empty(max(m, n))
    new_lines = np.empty(max(m, n))
    for level in range(levels):
        # resynchronise the incremental sums once per level
        D, row_abs, col_abs, total = _residual_state(A, B, rp, cp)
        score = _proxy_score(row_abs, col_abs, total, mn)
        for _ in range(proposals):
            swap_rows = (m > 1) and (n == 1 or np.random.random() < m / (m + n))
            if swap_rows:
                a = np.random.randint(0, m)
                b = np.random.randint(0, m - 1)
                if b >= a:
                    b += 1
                ra = 0.0
                rb = 0.0
                delta_total = 0.0
                for j in range(n):
                    va = A[rp[b], cp[j]] - B[a, j]
                    vb = A[rp[a], cp[j]] - B[b, j]
                    new_a[j] = va
                    new_b[j] = vb
                    ra += abs(va)
                    rb += abs(vb)
                    new_lines[j] = col_abs[j] - abs(D[a, j]) - abs(D[b, j]) + abs(va) + abs(vb)
                    delta_total += abs(va) + abs(vb) - abs(D[a, j]) - abs(D[b, j])
                old_ra = row_abs[a]
                old_rb = row_abs[b]
                row_abs[a] = ra
                row_abs[b] = rb
                cand = _proxy_score(row_abs, new_lines[:n], total + delta_total, mn)
                accept = cand <= score or np.random.random() < np.exp((score - cand) / temperature)
                if accept:
                    for j in range(n):
                        D[a, j] = new_a[j]
                        D[b, j] = new_b[j]
                        col_abs[j] = new_lines[j]
                    tmp = rp[a]
                    rp[a] = rp[b]
                    rp[b] = tmp
                    total += delta_total
                    score = cand
                else:
                    row_abs[a] = old_ra
                    row_abs[b] = old_rb
            elif n > 1:
                a = np.random.randint(0, n)
                b = np.random.randint(0, n - 1)
                if b >= a:
                    b += 1
                ca = 0.0
                cb = 0.0
                delta_total = 0.0
                for i in range(m):
                    va = A[rp[i], cp[b]] - B[i, a]
                    vb = A[rp[i], cp[a]] - B[i, b]
                    new_a[i] = va
                    new_b[i] = vb
                    ca += abs(va)
                    cb += abs(vb)
                    new_lines[i] = row_abs[i] - abs(D[i, a]) - abs(D[i, b]) + abs(va) + abs(vb)
                    delta_total += abs(va) + abs(vb) - abs(D[i, a]) - abs(D[i, b])
                old_ca = col_abs[a]
                old_cb = col_abs[b]
                col_abs[a] = ca
                col_abs[b] = cb
                cand = _proxy_score(new_lines[:m], col_abs, total + delta_total, mn)
                accept = cand <= score or np.random.random() < np.exp((score - cand) / temperature)
                if accept:
                    for i in range(m):
                        D[i, a] = new_a[i]
                        D[i, b] = new_b[i]
                        row_abs[i] = new_lines[i]
                    tmp = cp[a]
                    cp[a] = cp[b]
                    cp[b] = tmp
                    total += delta_total
                    score = cand
                else:
                    col_abs[a] = old_ca
                    col_abs[b] = old_cb
            else:
                break
            if score < best:
                best = score
                best_rp[:] = rp
                best_cp[:] = cp
                if best <= 0.0:
                    return best, best_rp, best_cp
        temperature *= decay
    return best, best_rp, best_cp
