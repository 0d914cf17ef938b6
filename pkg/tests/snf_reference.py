"""Independent dense Smith normal form used as a test oracle.

Textbook elimination: move the entry of least absolute value to the
corner, clear its row and column by Euclidean division, and restart
whenever a remainder (or a non-divisible entry) appears.
"""


def naive_invariant_factors(rows):
    A = [list(map(int, r)) for r in rows]
    m = len(A)
    n = len(A[0]) if m else 0
    out = []
    t = 0
    while t < min(m, n):
        entries = [(abs(A[i][j]), i, j) for i in range(t, m) for j in range(t, n) if A[i][j]]
        if not entries:
            break
        _, i, j = min(entries)
        A[t], A[i] = A[i], A[t]
        for r in A:
            r[t], r[j] = r[j], r[t]
        done = False
        while not done:
            done = True
            p = A[t][t]
            for i in range(t + 1, m):
                q = A[i][t] // p
                if q:
                    A[i] = [a - q * b for a, b in zip(A[i], A[t])]
                if A[i][t]:
                    done = False
            for j in range(t + 1, n):
                q = A[t][j] // p
                if q:
                    for r in A:
                        r[j] -= q * r[t]
                if A[t][j]:
                    done = False
            if not done:
                entries = [(abs(A[i][t]), i, t) for i in range(t, m) if A[i][t]]
                entries += [(abs(A[t][j]), t, j) for j in range(t, n) if A[t][j]]
                _, i, j = min(entries)
                A[t], A[i] = A[i], A[t]
                for r in A:
                    r[t], r[j] = r[j], r[t]
                continue
            bad = [(i, j) for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % p]
            if bad:
                i, _ = bad[0]
                A[t] = [a + b for a, b in zip(A[t], A[i])]
                done = False
        out.append(abs(A[t][t]))
        t += 1
    return out
