"""Generate bundled molecular Pauli Hamiltonians (STO-3G, Jordan-Wigner).

Spin orbitals are interleaved (mode 2p = spatial orbital p spin-up, mode 2p+1 =
spin-down). Qubit 0 is the leftmost Pauli character. Output follows the
Hamiltonian JSON schema read by `vqelab::models::load_hamiltonian`.

    python3 tools/gen_molecules.py crates/core/data/hamiltonians
"""
import json
import sys
from itertools import product

import numpy as np
from pyscf import ao2mo, fci, gto, mcscf, scf

# Pauli string as (x_mask, z_mask) over n qubits; bit (n-1-q) is qubit q.


def _bit(n, q):
    return 1 << (n - 1 - q)


def _mul(a, b):
    """Product of two Pauli strings in X^x Z^z * i^{|x&z|} form."""
    (x1, z1), (x2, z2) = a, b
    ny1 = bin(x1 & z1).count("1")
    ny2 = bin(x2 & z2).count("1")
    x, z = x1 ^ x2, z1 ^ z2
    ny = bin(x & z).count("1")
    sign = -1 if bin(z1 & x2).count("1") % 2 else 1
    phase = (1j) ** ((ny1 + ny2 - ny) % 4) * sign
    return phase, (x, z)


def ladder(n, j, dagger):
    zs = 0
    for k in range(j):
        zs |= _bit(n, k)
    xj = _bit(n, j)
    # (X - iY)/2 for creation, (X + iY)/2 for annihilation; Y = i X Z.
    s = -1j if dagger else 1j
    return {(xj, zs): 0.5, (xj, zs | xj): 0.5 * s}


def op_product(n, ops):
    acc = {(0, 0): 1.0 + 0j}
    for j, d in ops:
        nxt = {}
        for pa, ca in acc.items():
            for pb, cb in ladder(n, j, d).items():
                ph, p = _mul(pa, pb)
                nxt[p] = nxt.get(p, 0) + ca * cb * ph
        acc = nxt
    return acc


def pauli_label(n, p):
    x, z = p
    out = []
    for q in range(n):
        b = _bit(n, q)
        xb, zb = bool(x & b), bool(z & b)
        out.append("Y" if xb and zb else "X" if xb else "Z" if zb else "I")
    return "".join(out)


def qubit_hamiltonian(h1, eri, ecore):
    norb = h1.shape[0]
    n = 2 * norb
    total = {(0, 0): complex(ecore)}

    def add(coeff, ops):
        if abs(coeff) < 1e-14:
            return
        for p, c in op_product(n, ops).items():
            total[p] = total.get(p, 0) + coeff * c

    for p, q in product(range(norb), repeat=2):
        for s in range(2):
            add(h1[p, q], [(2 * p + s, True), (2 * q + s, False)])
    # 1/2 sum (pq|rs) a+_P a+_R a_S a_Q
    for p, q, r, s in product(range(norb), repeat=4):
        g = eri[p, q, r, s]
        if abs(g) < 1e-14:
            continue
        for sa, sb in product(range(2), repeat=2):
            P, Q, R, S = 2 * p + sa, 2 * q + sa, 2 * r + sb, 2 * s + sb
            if P == R or Q == S:
                continue
            add(0.5 * g, [(P, True), (R, True), (S, False), (Q, False)])
    offset = total.pop((0, 0)).real
    terms = []
    for p, c in total.items():
        assert abs(c.imag) < 1e-10, (pauli_label(n, p), c)
        if abs(c.real) > 1e-12:
            terms.append({"pauli": pauli_label(n, p), "coeff": c.real})
    return n, offset, terms


def write(path, name, n, offset, terms, e0, nelec, note):
    doc = {
        "n_qubits": n,
        "identity_offset": offset,
        "terms": terms,
        "metadata": {"name": name, "e0_reference": e0, "n_electrons": nelec, "source": note},
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
    print(f"{path}: {n} qubits, {len(terms) + 1} terms, e0_reference {e0:.10f}")


def full_space(atom, name, out):
    mol = gto.M(atom=atom, basis="sto-3g", unit="Angstrom", verbose=0)
    mf = scf.RHF(mol).run()
    c = mf.mo_coeff
    h1 = c.T @ mf.get_hcore() @ c
    eri = ao2mo.restore(1, ao2mo.kernel(mol, c), c.shape[1])
    e_fci = fci.FCI(mf).kernel()[0]
    n, off, terms = qubit_hamiltonian(h1, eri, mol.energy_nuc())
    write(out, name, n, off, terms, e_fci, mol.nelectron, "pyscf RHF/STO-3G, FCI reference, JW interleaved")


def active_space(atom, name, ncas, nelecas, out):
    mol = gto.M(atom=atom, basis="sto-3g", unit="Angstrom", verbose=0)
    mf = scf.RHF(mol).run()
    mc = mcscf.CASCI(mf, ncas, nelecas)
    h1, ecore = mc.get_h1eff()
    eri = ao2mo.restore(1, mc.get_h2eff(), ncas)
    e_cas = mc.kernel()[0]
    n, off, terms = qubit_hamiltonian(h1, eri, ecore)
    write(out, name, n, off, terms, e_cas, nelecas,
          f"pyscf RHF/STO-3G CASCI({nelecas}e,{ncas}o), JW interleaved")


if __name__ == "__main__":
    d = sys.argv[1] if len(sys.argv) > 1 else "."
    full_space("H 0 0 0; H 0 0 0.735", "H2 STO-3G R=0.735 A", f"{d}/h2_sto3g_0.735.json")
    full_space("H 0 0 0; H 0 0 1.0; H 0 0 2.0; H 0 0 3.0", "H4 chain STO-3G spacing 1.0 A",
               f"{d}/h4_chain_sto3g_1.0.json")
    active_space("Li 0 0 0; H 0 0 1.595", "LiH STO-3G R=1.595 A active (2e,3o)", 3, 2,
                 f"{d}/lih_sto3g_1.595_cas2e3o.json")
    full_space("Li 0 0 0; H 0 0 1.595", "LiH STO-3G R=1.595 A full", f"{d}/lih_sto3g_1.595.json")
