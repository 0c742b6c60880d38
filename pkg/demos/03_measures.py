"""Parry measure of the golden-mean shift and invariance under x0 + x1."""
import math

from algca import bernoulli, build_ca, build_shift, cyclic_group, full_shift, parry_measure
from algca.ca import shift_map
from algca.measure import check_invariance, entropy_rate, sample_path

golden = build_shift([0, 1], [(0, 0), (0, 1), (1, 0)])
p = parry_measure(golden)
print("kernel:", p.kernel_dict())
print(f"entropy {entropy_rate(p):.9f}  log(phi) {math.log((1 + 5 ** 0.5) / 2):.9f}")
print("sigma-invariant on words up to 5:", bool(check_invariance(p, shift_map(golden), 5)))
print("sample:", "".join(map(str, sample_path(p, 40, seed=1))))

full2 = full_shift([0, 1])
xor = build_ca(full2, cyclic_group(2))
for probs in ({0: 0.5, 1: 0.5}, {0: 0.7, 1: 0.3}):
    res = check_invariance(bernoulli(full2, probs), xor, 4)
    print(f"Bernoulli{probs}: invariant {res.invariant}, max deviation {res.max_deviation:.3g}")
