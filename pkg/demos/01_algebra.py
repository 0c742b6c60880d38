"""Classify the two bundled tables and recover the affine form of the 12-symbol one."""
from algca import classify_table, find_psi, load_fixture, toyoda_decompose
from algca.factor import permutation_cycles

latin = load_fixture("paper-latin-12")
rep = classify_table(latin)
print("12-symbol table: quasigroup", rep.quasigroup, "medial", rep.medial)

dec = toyoda_decompose(latin)
rebuilt = dec.reconstruct()
agree = sum(rebuilt(a, b) == latin(a, b) for a in latin.symbols for b in latin.symbols)
print(f"affine form rebuilds {agree} of {latin.size ** 2} entries, zero = {dec.zero}")

t8 = load_fixture("paper-table-8")
rep = classify_table(t8)
psi = find_psi(t8)
print("8-symbol table: right cancellable", rep.right_cancellable,
      "left cancellable", rep.left_cancellable)
print("Psi cycles:", [c for c in permutation_cycles(psi) if len(c) > 1])
