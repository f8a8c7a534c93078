"""Regenerate the surrogate system's coefficient matrices.

Draws candidate (A, B) pairs from a seeded generator and keeps the first one
where: the spectral radius of A is in [0.85, 0.92] with a real dominant
eigenvalue, the dominant eigenvector singles out one coordinate by a clear
margin, and standardized PCA on long noisy trajectories picks the same
coordinate for every probe seed. Prints literals for systems/surrogate.py.
"""

import numpy as np

NOISE_VAR = 0.01
PROBE_SEEDS = range(10)


def simulate(A, B, rng, steps=4000):
    x = np.zeros(4)
    out = np.empty((4, steps))
    for t in range(steps):
        w = rng.normal(0.0, np.sqrt(NOISE_VAR), size=2)
        x = A @ np.tanh(x) + B @ w
        out[:, t] = x
    return out


def pca_index(data):
    z = data - data.mean(axis=1, keepdims=True)
    z /= z.std(axis=1, ddof=1, keepdims=True)
    u, s, _ = np.linalg.svd(z, full_matrices=False)
    load = np.abs(u[:, 0])
    order = np.argsort(load)[::-1]
    return order[0], load[order[0]] - load[order[1]]


def main():
    rng = np.random.default_rng(20240417)
    for attempt in range(10000):
        A = rng.normal(0.0, 0.4, size=(4, 4))
        lam, V = np.linalg.eig(A)
        i = np.argmax(np.abs(lam))
        if abs(lam[i].imag) > 0 or not 0.85 <= abs(lam[i]) <= 0.92:
            continue
        if np.sum(np.isclose(np.abs(lam), abs(lam[i]))) > 1:
            continue
        v = np.abs(V[:, i].real)
        order = np.argsort(v)[::-1]
        if v[order[0]] - v[order[1]] < 0.2:
            continue
        B = rng.normal(0.0, 1.0, size=(4, 2))
        ok = True
        for s in PROBE_SEEDS:
            idx, margin = pca_index(simulate(A, B, np.random.default_rng(s)))
            if idx != order[0] or margin < 0.05:
                ok = False
                break
        if ok:
            np.set_printoptions(precision=17, floatmode="unique")
            print("attempt", attempt, "dominant", lam[i].real, "index", order[0])
            print("A =", repr(A))
            print("B =", repr(B))
            return
    raise SystemExit("no candidate found")


if __name__ == "__main__":
    main()
