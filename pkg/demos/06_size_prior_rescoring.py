"""
Rescoring detections with the ship-length prior
===============================================

On GSD-normalized imagery a class has a characteristic physical length.
Modeling the detected length as normal around the class mean (standard
deviation proportional to the mean), the two-sided tail probability of
the observed deviation multiplies into the confidence: on-prior lengths
keep their score, implausible ones shrink.
"""

from centerhead import ChpBox, ClassLengthTable, refine_scores, size_prior_probability

# a Ticonderoga-class cruiser is 172.8 m long
mean = 172.8
print("detected length ->: prior probability (coeff 0.2)")
for length in (172.8, 160, 140, 120, 100, 220, 300):
    p = size_prior_probability(length, mean, 0.2)
    print(f"  {length:>6.1f} m -> {p:.4f}")

# a larger coefficient flattens the prior
print("\n140 m detection under different coefficients:")
for coeff in (0.1, 0.2, 0.4, 0.8):
    print(f"  coeff {coeff:.1f} -> {size_prior_probability(140, mean, coeff):.4f}")

# rescoring a detection list: scores only ever shrink
table = ClassLengthTable(
    names=("cruiser", "patrol"),
    mean_lengths_m=(172.8, 60.0),
    coeff=0.2,
    gsd=1.0,
)
dets = [
    ChpBox(100, 100, 20, 170.0, 100, 15, class_id=0, score=0.90),  # plausible cruiser
    ChpBox(300, 100, 20, 170.0, 300, 15, class_id=1, score=0.90),  # 170 m "patrol boat"?
    ChpBox(500, 100, 10, 58.0, 500, 71, class_id=1, score=0.60),   # plausible patrol
]
print("\nbefore/after rescoring:")
for before, after in zip(dets, refine_scores(dets, table)):
    print(f"  {table.names[before.class_id]:<8} {before.h:5.1f} m  {before.score:.2f} -> {after.score:.4f}")
