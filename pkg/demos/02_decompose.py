"""Split the 8-symbol automaton into a Klein-group factor and a swap translation."""
from algca import build_ca, decompose, full_shift, load_fixture
from algca.factor import step3_walk

t8 = load_fixture("paper-table-8")
ca = build_ca(full_shift(t8.symbols), t8)
cert = decompose(ca)

print("u:", cert.u)
print("K:", cert.K_shift.symbols, "B:", cert.B_shift.symbols, "s_B:", cert.translation)
print("M =", cert.period_M, "L =", cert.exponent_L, "product verified:", cert.product_verified)
print("conjugacy verified to depth", cert.conjugacy.depth, ":", cert.conjugacy.verified)

k = cert.K_shift.symbols
print("walk from", (k[1], "b"), "by", (k[2], "a"), ":", step3_walk(cert, (k[1], "b"), (k[2], "a")))
