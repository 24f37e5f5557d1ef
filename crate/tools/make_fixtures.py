#!/usr/bin/env python3
"""Generate the STO-6G FCIDUMP fixtures used by the test suite.

Pipeline: contracted s/p Gaussian integrals (McMurchie-Davidson scheme),
restricted Hartree-Fock converged to 1e-11 on the DIIS error norm, canonical
MO transformation, FCIDUMP output in chemists' notation with 8-fold unique
indices. `--check` additionally runs a dense determinant-basis FCI on the
small systems and compares against reference values where available.

The STO-6G tables are the published ones (exponents for hydrogen and
beryllium, shared-exponent 2sp shell for Be); tools/sto_ng_fit.py re-derives
them from the underlying Slater-fit optimization as a cross-check.

Usage:
    python3 tools/make_fixtures.py [--check] [--only NAME] [--outdir DIR]
"""

import argparse
import itertools
import os
import sys

import numpy as np
from scipy.special import gamma, gammainc

BOHR_PER_ANGSTROM = 1.0 / 0.52917720859

# ---------------------------------------------------------------------------
# STO-6G basis data: exponents and contraction coefficients over normalized
# primitives. Be uses a shared-exponent 2s/2p shell.
# ---------------------------------------------------------------------------

STO6G = {
    "H": [
        ("s", [35.52322122, 6.513143725, 1.822142904,
               0.625955266, 0.243076747, 0.100112428],
         [0.009163596281, 0.04936149294, 0.1685383049,
          0.3705627997, 0.4164915298, 0.1303340841]),
    ],
    "Be": [
        ("s", [312.8704937, 57.36446253, 16.04850940,
               5.513096119, 2.140896553, 0.8817394283],
         [0.009163596281, 0.04936149294, 0.1685383049,
          0.3705627997, 0.4164915298, 0.1303340841]),
        ("s", [13.63324744, 2.698375464, 0.8386530829,
               0.3226600698, 0.1401314882, 0.0642325139],
         [-0.01325278809, -0.04699171014, -0.03378537151,
          0.2502417861, 0.5951172526, 0.2407061763]),
        ("p", [13.63324744, 2.698375464, 0.8386530829,
               0.3226600698, 0.1401314882, 0.0642325139],
         [0.003760696500, 0.03767936984, 0.1738967435,
          0.4180364347, 0.4258595477, 0.1017082955]),
    ],
}

CHARGE = {"H": 1, "Be": 4}


class BasisFunction:
    """One contracted Cartesian Gaussian: sum_k c_k N(a_k) x^i y^j z^k exp(-a_k r^2)."""

    def __init__(self, center, lmn, exps, coefs):
        self.center = np.asarray(center, dtype=float)
        self.lmn = lmn
        self.exps = np.asarray(exps, dtype=float)
        norms = primitive_norm(self.exps, lmn)
        self.coefs = np.asarray(coefs, dtype=float) * norms
        # Renormalize the contraction so <AO|AO> = 1 exactly.
        s = 0.0
        for ca, aa in zip(self.coefs, self.exps):
            for cb, ab in zip(self.coefs, self.exps):
                s += ca * cb * primitive_overlap(aa, self.center, lmn,
                                                 ab, self.center, lmn)
        self.coefs /= np.sqrt(s)


def primitive_norm(a, lmn):
    i, j, k = lmn
    df = lambda n: float(np.prod(np.arange(2 * n - 1, 0, -2))) if n > 0 else 1.0
    return (2.0 * a / np.pi) ** 0.75 * np.sqrt(
        (4.0 * a) ** (i + j + k) / (df(i) * df(j) * df(k)))


# --- McMurchie-Davidson Hermite machinery ---------------------------------

def hermite_e(i, j, t, qx, a, b):
    """Hermite expansion coefficient E_t^{ij} for a 1D Gaussian product."""
    p = a + b
    q = a * b / p
    if t < 0 or t > i + j:
        return 0.0
    if i == j == t == 0:
        return np.exp(-q * qx * qx)
    if j == 0:
        return (hermite_e(i - 1, j, t - 1, qx, a, b) / (2.0 * p)
                - q * qx / a * hermite_e(i - 1, j, t, qx, a, b)
                + (t + 1) * hermite_e(i - 1, j, t + 1, qx, a, b))
    return (hermite_e(i, j - 1, t - 1, qx, a, b) / (2.0 * p)
            + q * qx / b * hermite_e(i, j - 1, t, qx, a, b)
            + (t + 1) * hermite_e(i, j - 1, t + 1, qx, a, b))


def boys(m, t):
    if t < 1e-13:
        return 1.0 / (2.0 * m + 1.0) - t / (2.0 * m + 3.0)
    g = m + 0.5
    return gamma(g) * gammainc(g, t) / (2.0 * t ** g)


def hermite_r(t, u, v, n, p, pc, pc2):
    """Auxiliary Hermite Coulomb integral R^n_{tuv}."""
    if t < 0 or u < 0 or v < 0:
        return 0.0
    if t == u == v == 0:
        return (-2.0 * p) ** n * boys(n, p * pc2)
    if t > 0:
        return ((t - 1) * hermite_r(t - 2, u, v, n + 1, p, pc, pc2)
                + pc[0] * hermite_r(t - 1, u, v, n + 1, p, pc, pc2))
    if u > 0:
        return ((u - 1) * hermite_r(t, u - 2, v, n + 1, p, pc, pc2)
                + pc[1] * hermite_r(t, u - 1, v, n + 1, p, pc, pc2))
    return ((v - 1) * hermite_r(t, u, v - 2, n + 1, p, pc, pc2)
            + pc[2] * hermite_r(t, u, v - 1, n + 1, p, pc, pc2))


def primitive_overlap(a, ra, la, b, rb, lb):
    ab = ra - rb
    p = a + b
    s = (np.pi / p) ** 1.5
    for x in range(3):
        s *= hermite_e(la[x], lb[x], 0, ab[x], a, b)
    return s


def primitive_kinetic(a, ra, la, b, rb, lb):
    def s1d(i, j, x):
        return hermite_e(i, j, 0, (ra - rb)[x], a, b)

    p = a + b
    pre = (np.pi / p) ** 1.5
    term = np.zeros(3)
    for x in range(3):
        i, j = la[x], lb[x]
        k = b * (2 * j + 1) * s1d(i, j, x) - 2.0 * b * b * s1d(i, j + 2, x)
        if j >= 2:
            k -= 0.5 * j * (j - 1) * s1d(i, j - 2, x)
        term[x] = k
    out = 0.0
    for x in range(3):
        val = term[x]
        for y in range(3):
            if y != x:
                val *= s1d(la[y], lb[y], y)
        out += val
    return pre * out


def primitive_nuclear(a, ra, la, b, rb, lb, rc):
    p = a + b
    rp = (a * ra + b * rb) / p
    pc = rp - rc
    pc2 = float(pc @ pc)
    ab = ra - rb
    val = 0.0
    for t in range(la[0] + lb[0] + 1):
        et = hermite_e(la[0], lb[0], t, ab[0], a, b)
        for u in range(la[1] + lb[1] + 1):
            eu = hermite_e(la[1], lb[1], u, ab[1], a, b)
            for v in range(la[2] + lb[2] + 1):
                ev = hermite_e(la[2], lb[2], v, ab[2], a, b)
                val += et * eu * ev * hermite_r(t, u, v, 0, p, pc, pc2)
    return 2.0 * np.pi / p * val


def primitive_eri(a, ra, la, b, rb, lb, c, rc, lc, d, rd, ld):
    p = a + b
    q = c + d
    alpha = p * q / (p + q)
    rp = (a * ra + b * rb) / p
    rq = (c * rc + d * rd) / q
    pq = rp - rq
    pq2 = float(pq @ pq)
    ab = ra - rb
    cd = rc - rd

    e1 = [[hermite_e(la[x], lb[x], t, ab[x], a, b)
           for t in range(la[x] + lb[x] + 1)] for x in range(3)]
    e2 = [[hermite_e(lc[x], ld[x], t, cd[x], c, d)
           for t in range(lc[x] + ld[x] + 1)] for x in range(3)]

    val = 0.0
    for t, et in enumerate(e1[0]):
        for u, eu in enumerate(e1[1]):
            for v, ev in enumerate(e1[2]):
                f1 = et * eu * ev
                if f1 == 0.0:
                    continue
                for tt, ett in enumerate(e2[0]):
                    for uu, euu in enumerate(e2[1]):
                        for vv, evv in enumerate(e2[2]):
                            f2 = ett * euu * evv
                            if f2 == 0.0:
                                continue
                            sign = -1.0 if (tt + uu + vv) % 2 else 1.0
                            val += f1 * f2 * sign * hermite_r(
                                t + tt, u + uu, v + vv, 0, alpha, pq, pq2)
    return val * 2.0 * np.pi ** 2.5 / (p * q * np.sqrt(p + q))


# --- contracted integrals ---------------------------------------------------

def contracted(fn, *bfs):
    total = 0.0
    idx = [range(len(bf.exps)) for bf in bfs]
    for combo in itertools.product(*idx):
        coef = 1.0
        args = []
        for bf, k in zip(bfs, combo):
            coef *= bf.coefs[k]
            args.extend([bf.exps[k], bf.center, bf.lmn])
        total += coef * fn(*args)
    return total


def build_basis(atoms):
    bfs = []
    for sym, xyz in atoms:
        for shell, exps, coefs in STO6G[sym]:
            if shell == "s":
                bfs.append(BasisFunction(xyz, (0, 0, 0), exps, coefs))
            else:
                for lmn in [(1, 0, 0), (0, 1, 0), (0, 0, 1)]:
                    bfs.append(BasisFunction(xyz, lmn, exps, coefs))
    return bfs


def integrals(atoms):
    bfs = build_basis(atoms)
    n = len(bfs)
    S = np.zeros((n, n))
    T = np.zeros((n, n))
    V = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            S[i, j] = S[j, i] = contracted(primitive_overlap, bfs[i], bfs[j])
            T[i, j] = T[j, i] = contracted(primitive_kinetic, bfs[i], bfs[j])
            v = 0.0
            for sym, xyz in atoms:
                v -= CHARGE[sym] * contracted(
                    lambda a, ra, la, b, rb, lb: primitive_nuclear(
                        a, ra, la, b, rb, lb, np.asarray(xyz, dtype=float)),
                    bfs[i], bfs[j])
            V[i, j] = V[j, i] = v
    eri = np.zeros((n, n, n, n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1)]
    for pi, (i, j) in enumerate(pairs):
        for (k, l) in pairs[:pi + 1]:
            val = contracted(primitive_eri, bfs[i], bfs[j], bfs[k], bfs[l])
            for (a, b) in {(i, j), (j, i)}:
                for (c, d) in {(k, l), (l, k)}:
                    eri[a, b, c, d] = val
                    eri[c, d, a, b] = val
    enuc = 0.0
    for (s1, r1), (s2, r2) in itertools.combinations(atoms, 2):
        enuc += CHARGE[s1] * CHARGE[s2] / np.linalg.norm(
            np.asarray(r1, dtype=float) - np.asarray(r2, dtype=float))
    return S, T + V, eri, enuc


# --- restricted Hartree-Fock ------------------------------------------------

def rhf(S, hcore, eri, enuc, nelec, max_iter=200):
    nocc = nelec // 2
    sval, svec = np.linalg.eigh(S)
    X = svec @ np.diag(sval ** -0.5) @ svec.T

    def fock(D):
        J = np.einsum("pqrs,rs->pq", eri, D)
        K = np.einsum("prqs,rs->pq", eri, D)
        return hcore + J - 0.5 * K

    F = hcore
    D = np.zeros_like(S)
    energy = 0.0
    diis_f, diis_e = [], []
    for it in range(max_iter):
        Fp = X.T @ F @ X
        eps, Cp = np.linalg.eigh(Fp)
        C = X @ Cp
        Cocc = C[:, :nocc]
        D = 2.0 * Cocc @ Cocc.T
        F = fock(D)
        energy = 0.5 * np.sum(D * (hcore + F)) + enuc
        err = X.T @ (F @ D @ S - S @ D @ F) @ X
        if np.max(np.abs(err)) < 1e-11 and it > 1:
            break
        diis_f.append(F.copy())
        diis_e.append(err.copy())
        if len(diis_f) > 8:
            diis_f.pop(0)
            diis_e.pop(0)
        if len(diis_f) >= 2:
            m = len(diis_f)
            B = -np.ones((m + 1, m + 1))
            B[m, m] = 0.0
            for i in range(m):
                for j in range(m):
                    B[i, j] = np.sum(diis_e[i] * diis_e[j])
            rhs = np.zeros(m + 1)
            rhs[m] = -1.0
            try:
                w = np.linalg.solve(B, rhs)[:m]
                F = sum(wi * fi for wi, fi in zip(w, diis_f))
            except np.linalg.LinAlgError:
                pass
    else:
        raise RuntimeError("SCF did not converge")

    # Final canonical orbitals from the converged Fock matrix.
    Fp = X.T @ F @ X
    eps, Cp = np.linalg.eigh(Fp)
    C = X @ Cp
    # Deterministic sign convention.
    for k in range(C.shape[1]):
        m = np.argmax(np.abs(C[:, k]))
        if C[m, k] < 0:
            C[:, k] = -C[:, k]
    Cocc = C[:, :nocc]
    D = 2.0 * Cocc @ Cocc.T
    F = fock(D)
    energy = 0.5 * np.sum(D * (hcore + F)) + enuc
    return energy, eps, C


def mo_integrals(hcore, eri, C):
    h = C.T @ hcore @ C
    v = np.einsum("pqrs,pi->iqrs", eri, C, optimize=True)
    v = np.einsum("iqrs,qj->ijrs", v, C, optimize=True)
    v = np.einsum("ijrs,rk->ijks", v, C, optimize=True)
    v = np.einsum("ijks,sl->ijkl", v, C, optimize=True)
    return h, v


# --- FCIDUMP ----------------------------------------------------------------

def write_fcidump(path, h, v, ecore, nelec, ms2=0, thresh=1e-16):
    n = h.shape[0]
    lines = [f"&FCI NORB={n},NELEC={nelec},MS2={ms2},"]
    lines.append("  ORBSYM=" + "1," * n)
    lines.append("  ISYM=1,")
    lines.append("&END")

    def rec(val, i, j, k, l):
        lines.append(f"{val: .16E} {i:3d} {j:3d} {k:3d} {l:3d}")

    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(n):
                for l in range(k + 1):
                    kl = k * (k + 1) // 2 + l
                    if ij < kl:
                        continue
                    val = v[i, j, k, l]
                    if abs(val) > thresh:
                        rec(val, i + 1, j + 1, k + 1, l + 1)
    for i in range(n):
        for j in range(i + 1):
            if abs(h[i, j]) > thresh:
                rec(h[i, j], i + 1, j + 1, 0, 0)
    rec(ecore, 0, 0, 0, 0)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# --- dense determinant FCI (checker) ----------------------------------------

def spin_orbital_integrals(h, v):
    """Interleaved spin orbitals (alpha on even, beta on odd indices)."""
    n = h.shape[0]
    ns = 2 * n
    hso = np.zeros((ns, ns))
    for p in range(ns):
        for q in range(ns):
            if p % 2 == q % 2:
                hso[p, q] = h[p // 2, q // 2]
    # <pq||rs> = (pr|qs)d(sp,sr)d(sq,ss) - (ps|qr)d(sp,ss)d(sq,sr)
    anti = np.zeros((ns, ns, ns, ns))
    for p in range(ns):
        for q in range(ns):
            for r in range(ns):
                for s in range(ns):
                    t1 = v[p // 2, r // 2, q // 2, s // 2] \
                        if (p % 2 == r % 2 and q % 2 == s % 2) else 0.0
                    t2 = v[p // 2, s // 2, q // 2, r // 2] \
                        if (p % 2 == s % 2 and q % 2 == r % 2) else 0.0
                    anti[p, q, r, s] = t1 - t2
    return hso, anti


def fci_dense(h, v, ecore, nelec, ms2=0):
    n = h.shape[0]
    na = (nelec + ms2) // 2
    nb = (nelec - ms2) // 2
    hso, anti = spin_orbital_integrals(h, v)

    dets = []
    for occ_a in itertools.combinations(range(n), na):
        for occ_b in itertools.combinations(range(n), nb):
            bits = 0
            for p in occ_a:
                bits |= 1 << (2 * p)
            for p in occ_b:
                bits |= 1 << (2 * p + 1)
            dets.append(bits)
    dets.sort()
    ndet = len(dets)

    def occ_list(bits):
        return [p for p in range(2 * n) if bits >> p & 1]

    def phase(bits, p):
        """Sign from annihilating orbital p in |bits> (orbitals below p)."""
        mask = (1 << p) - 1
        return -1.0 if bin(bits & mask).count("1") % 2 else 1.0

    H = np.zeros((ndet, ndet))
    for a in range(ndet):
        da = dets[a]
        occ_a_list = occ_list(da)
        e = 0.0
        for p in occ_a_list:
            e += hso[p, p]
        for p, q in itertools.combinations(occ_a_list, 2):
            e += anti[p, q, p, q]
        H[a, a] = e
        for b in range(a):
            db = dets[b]
            diff = da ^ db
            nd = bin(diff).count("1")
            if nd == 2:
                p = (da & diff).bit_length() - 1
                q = (db & diff).bit_length() - 1
                sign = phase(da, p) * phase(db, q)
                val = hso[p, q]
                common = da & db
                for r in occ_list(common):
                    val += anti[p, r, q, r]
                H[a, b] = H[b, a] = sign * val
            elif nd == 4:
                ps = occ_list(da & diff)
                qs = occ_list(db & diff)
                p1, p2 = ps
                q1, q2 = qs
                s = phase(da, p2) * phase(da ^ (1 << p2), p1)
                s *= phase(db, q2) * phase(db ^ (1 << q2), q1)
                H[a, b] = H[b, a] = s * anti[p1, p2, q1, q2]
    evals = np.linalg.eigvalsh(H)
    return evals[0] + ecore, ndet


# --- systems ----------------------------------------------------------------

def chain(symbols, spacing_angstrom):
    r = spacing_angstrom * BOHR_PER_ANGSTROM
    return [(s, (0.0, 0.0, i * r)) for i, s in enumerate(symbols)]


def beh2(r_angstrom):
    r = r_angstrom * BOHR_PER_ANGSTROM
    return [("Be", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, -r)), ("H", (0.0, 0.0, r))]


def run_system(atoms, nelec):
    S, hcore, eri, enuc = integrals(atoms)
    e_hf, eps, C = rhf(S, hcore, eri, enuc, nelec)
    h, v = mo_integrals(hcore, eri, C)
    return e_hf, eps, h, v, enuc


def composite(frag1, frag2):
    """Direct sum of two fragment MO-integral sets (non-interacting blocks)."""
    h1, v1, e1 = frag1
    h2, v2, e2 = frag2
    n1, n2 = h1.shape[0], h2.shape[0]
    n = n1 + n2
    h = np.zeros((n, n))
    h[:n1, :n1] = h1
    h[n1:, n1:] = h2
    v = np.zeros((n, n, n, n))
    v[:n1, :n1, :n1, :n1] = v1
    v[n1:, n1:, n1:, n1:] = v2
    return h, v, e1 + e2


SYSTEMS = {
    "h2_0.75": (lambda: chain("HH", 0.75), 2),
    "h4_0.75": (lambda: chain("HHHH", 0.75), 4),
    "h4_1.00": (lambda: chain("HHHH", 1.00), 4),
    "h4_1.50": (lambda: chain("HHHH", 1.50), 4),
    "h6_0.50": (lambda: chain("HHHHHH", 0.50), 6),
    "h6_1.00": (lambda: chain("HHHHHH", 1.00), 6),
    "h6_1.50": (lambda: chain("HHHHHH", 1.50), 6),
    "h6_2.00": (lambda: chain("HHHHHH", 2.00), 6),
    "beh2_1.00": (lambda: beh2(1.00), 6),
    "beh2_2.00": (lambda: beh2(2.00), 6),
    "h10_1.50": (lambda: chain("H" * 10, 1.50), 10),
}

FCI_REFERENCE = {
    # Independent reference values for the dense checker (Hartree).
    "beh2_1.00": -15.65068726,
    "beh2_2.00": -15.60861964,
}

CHECK_SKIP = {"h10_1.50"}  # determinant space too large for the dense checker


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", action="store_true",
                    help="run the dense FCI checker on each generated system")
    ap.add_argument("--only", default=None, help="generate a single system")
    ap.add_argument("--outdir", default=os.path.join(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "fixtures"))
    args = ap.parse_args()

    os.makedirs(args.outdir, exist_ok=True)
    names = [args.only] if args.only else list(SYSTEMS) + ["h4h2_composite"]
    frag_cache = {}
    failures = []

    for name in names:
        if name == "h4h2_composite":
            for frag in ("h4_0.75", "h2_0.75"):
                if frag not in frag_cache:
                    atoms, nelec = SYSTEMS[frag]
                    frag_cache[frag] = run_system(atoms(), nelec)
            e4, _, h4, v4, enuc4 = frag_cache["h4_0.75"]
            e2, _, h2, v2, enuc2 = frag_cache["h2_0.75"]
            h, v, ecore = composite((h4, v4, enuc4), (h2, v2, enuc2))
            nelec = 6
            e_hf = e4 + e2
        else:
            atoms, nelec = SYSTEMS[name]
            result = run_system(atoms(), nelec)
            frag_cache[name] = result
            e_hf, eps, h, v, ecore = result

        path = os.path.join(args.outdir, f"{name}.fcidump")
        write_fcidump(path, h, v, ecore, nelec)
        line = f"{name:16s} E_HF = {e_hf:.10f}"

        if args.check and name not in CHECK_SKIP:
            e_fci, ndet = fci_dense(h, v, ecore, nelec)
            line += f"  E_FCI = {e_fci:.10f} ({ndet} dets)"
            ref = FCI_REFERENCE.get(name)
            if ref is not None:
                delta = abs(e_fci - ref)
                line += f"  |dE vs ref| = {delta:.2e}"
                if delta > 5e-7:
                    failures.append(name)
        print(line, flush=True)

    if failures:
        print("REFERENCE MISMATCH: " + ", ".join(failures))
        sys.exit(1)


if __name__ == "__main__":
    main()
