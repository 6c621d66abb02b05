#!/usr/bin/env python3
"""Regenerates data/heart_synthetic.csv, the 1190-row synthetic fixture.

The file mimics the combined heart-disease table's schema and marginals:
eleven features (five numeric, six integer-coded nominal) plus a binary
target. The generative model draws a latent disease state, samples each
feature from class-conditional distributions with realistic overlap, flips a
small fraction of labels as irreducible noise, and plants a handful of
extreme-value rows that a |z| > 3 outlier filter should remove.

Deterministic: python3 generate_fixture.py always writes the same bytes.
"""
import numpy as np

N = 1190
rng = np.random.default_rng(20240817)

def clipped_int(mean, sd, lo, hi, size):
    return np.clip(np.rint(rng.normal(mean, sd, size)), lo, hi).astype(int)

# latent disease state (the combined table is ~53% positive)
disease = (rng.random(N) < 0.53).astype(int)

age = clipped_int(50 + 6.0 * disease, 9, 29, 77, N)
sex = (rng.random(N) < (0.63 + 0.21 * disease)).astype(int)

# chest pain type: 1 typical, 2 atypical, 3 non-anginal, 4 asymptomatic
cp = np.empty(N, dtype=int)
for i in range(N):
    if disease[i]:
        cp[i] = rng.choice([1, 2, 3, 4], p=[0.04, 0.05, 0.13, 0.78])
    else:
        cp[i] = rng.choice([1, 2, 3, 4], p=[0.09, 0.38, 0.34, 0.19])

resting_bp = clipped_int(129 + 5 * disease, 16, 94, 200, N)
cholesterol = clipped_int(236 + 10 * disease, 48, 126, 420, N)
fbs = (rng.random(N) < (0.15 + 0.12 * disease)).astype(int)

ecg = np.empty(N, dtype=int)
for i in range(N):
    if disease[i]:
        ecg[i] = rng.choice([0, 1, 2], p=[0.52, 0.30, 0.18])
    else:
        ecg[i] = rng.choice([0, 1, 2], p=[0.66, 0.20, 0.14])

max_hr = clipped_int(157 - 23 * disease, 19, 71, 202, N)
exang = (rng.random(N) < (0.13 + 0.52 * disease)).astype(int)

oldpeak = np.maximum(0.0, rng.normal(0.22 + 1.15 * disease, 0.72, N))
oldpeak = np.round(np.clip(oldpeak, 0.0, 6.0), 1)

slope = np.empty(N, dtype=int)
for i in range(N):
    if disease[i]:
        slope[i] = rng.choice([0, 1, 2, 3], p=[0.01, 0.22, 0.66, 0.11])
    else:
        slope[i] = rng.choice([0, 1, 2, 3], p=[0.03, 0.72, 0.22, 0.03])

# irreducible label noise
target = disease.copy()
flip = rng.random(N) < 0.04
target[flip] = 1 - target[flip]

# planted outliers: extreme cholesterol or blood pressure, spread over both
# classes, far past |z| = 3 for their columns
outlier_rows = rng.choice(N, size=14, replace=False)
for j, i in enumerate(outlier_rows):
    if j % 2 == 0:
        cholesterol[i] = int(rng.integers(560, 660))
    else:
        resting_bp[i] = int(rng.integers(215, 245))

header = ("age,sex,chest pain type,resting bp s,cholesterol,"
          "fasting blood sugar,resting ecg,max heart rate,exercise angina,"
          "oldpeak,ST slope,target")
lines = [header]
for i in range(N):
    op = oldpeak[i]
    op_str = str(int(op)) if op == int(op) else f"{op:.1f}"
    lines.append(
        f"{age[i]},{sex[i]},{cp[i]},{resting_bp[i]},{cholesterol[i]},"
        f"{fbs[i]},{ecg[i]},{max_hr[i]},{exang[i]},{op_str},{slope[i]},{target[i]}"
    )

with open("heart_synthetic.csv", "w") as f:
    f.write("\n".join(lines) + "\n")
print(f"wrote {N} rows, positives: {target.sum()}, planted outliers: {len(outlier_rows)}")
