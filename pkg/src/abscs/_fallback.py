"""Pure-numpy kernels. Same call signatures as the compiled ``_kernels`` module."""

import numpy as np
from scipy.linalg import solve_triangular

EARLY_EXIT_RTOL = 1e-12
RANK_RTOL = 1e-10


def omp(phi, y, k):
    """Orthogonal matching pursuit for at most ``min(k, n)`` iterations.

    Returns ``(x, support, residual_norms, rank_deficient)``. The
    least-squares fit is redone from a fresh QR of the selected columns on
    every iteration.
    """
    n, m = phi.shape
    x = np.zeros(m)
    ynorm = np.sqrt(y @ y)
    norms = [ynorm]
    support = []
    if ynorm == 0.0:
        return x, np.array(support, dtype=np.intp), np.array(norms), 0
    selected = np.zeros(m, dtype=bool)
    r = y
    coef = np.empty(0)
    deficient = 0
    for _ in range(min(k, n)):
        if norms[-1] < EARLY_EXIT_RTOL * ynorm:
            break
        c = np.abs(phi.T @ r)
        c[selected] = -1.0
        j = int(np.argmax(c))
        cols = support + [j]
        q, rr = np.linalg.qr(phi[:, cols])
        if abs(rr[-1, -1]) <= RANK_RTOL * np.sqrt(phi[:, j] @ phi[:, j]):
            deficient = 1
            break
        coef = solve_triangular(rr, q.T @ y)
        support = cols
        selected[j] = True
        r = y - phi[:, support] @ coef
        norms.append(np.sqrt(r @ r))
    x[support] = coef
    return x, np.array(support, dtype=np.intp), np.array(norms), deficient


def abs_sweep_omp(phi, codepoints, offsets, x_tilde, z, indexes, k):
    """One sequential AbS pass over all entries with OMP as the decoder.

    ``codepoints`` holds every codebook back to back; entry ``n`` owns
    ``codepoints[offsets[n]:offsets[n + 1]]``. ``z`` and ``indexes`` are
    updated in place. Returns ``(incumbent, winner, calls, deficient)`` where
    ``incumbent[n]`` is the objective of the codepoint held before entry ``n``
    was revisited and ``winner[n]`` the objective after.
    """
    n_entries = z.size
    incumbent = np.empty(n_entries)
    winner = np.empty(n_entries)
    calls = 0
    deficient = 0
    for n in range(n_entries):
        lo, hi = offsets[n], offsets[n + 1]
        held = indexes[n]
        best, best_val = 0, np.inf
        for i in range(hi - lo):
            z[n] = codepoints[lo + i]
            xh, _, _, flag = omp(phi, z, k)
            calls += 1
            deficient += flag
            val = xh @ xh - 2.0 * (x_tilde @ xh)
            if i == held:
                incumbent[n] = val
            if val < best_val:
                best, best_val = i, val
        z[n] = codepoints[lo + best]
        indexes[n] = best
        winner[n] = best_val
    return incumbent, winner, calls, deficient
