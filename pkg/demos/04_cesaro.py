"""Cesaro means of Bernoulli(0.3) under x0 + x1, exact and sampled; writes cesaro.csv."""
from pathlib import Path

from algca import bernoulli, build_ca, cyclic_group, full_shift
from algca.cesaro import all_words, cesaro_exact, cesaro_monte_carlo, compare_to_parry

full2 = full_shift([0, 1])
ca = build_ca(full2, cyclic_group(2))
mu = bernoulli(full2, {0: 0.7, 1: 0.3})
words = all_words(full2, 1)

exact = cesaro_exact(mu, ca, words, 64)
mc = cesaro_monte_carlo(mu, ca, words, 64, samples=10**5, seed=7)
for n in (0, 1, 3, 7, 15, 31, 63):
    v, m, h = exact.values[(1,)][n], mc.values[(1,)][n], mc.half_widths[(1,)][n]
    print(f"n={n:2d}  exact {v:.6f}  sampled {m:.6f} +/- {h:.6f}  mean {exact.cesaro[(1,)][n]:.6f}")

verdict = compare_to_parry(exact, full2, tol=0.02)
print(verdict.verdict, f"final deviation {verdict.final_deviation:.6f}")
out = Path(__file__).with_name("cesaro.csv")
out.write_text(exact.to_csv())
print("series written to", out.name)
