"""Digit classification with few training samples.

For each training size a seeded, class-balanced subset of the MNIST training
set is drawn; the scale J and the penalty beta are chosen by 5-fold
cross-validation on that subset alone; the per-class affine models are then
refitted on the whole subset and evaluated on the 10 000 test digits.

Run:  python demos/03_mnist_classification.py /path/to/mnist [sizes...]

The directory must contain the four standard IDX files (optionally .gz).
"""

import logging
import sys
import time

import numpy as np

from scatpca.datasets import load_mnist
from scatpca.pipeline import run_protocol

logging.basicConfig(level=logging.INFO, format="  %(message)s")

root = sys.argv[1] if len(sys.argv) > 1 else "/root/data/mnist"
sizes = [int(s) for s in sys.argv[2:]] or [300, 1000]

train, test = load_mnist(root)
print(f"{len(train)} training and {len(test)} test digits")

cache = {}
print("\nsize   J*  beta_rel   mean k  test error")
for n in sizes:
    t0 = time.perf_counter()
    r = run_protocol(train, test, train_size=n, seed=0, folds=5, test_features=cache)
    print(f"{n:5d}  {r.J:2d}  {r.beta_rel:8.2e}  {r.mean_k:6.1f}  {100 * r.test_error:6.2f}%"
          f"   ({time.perf_counter() - t0:.0f}s)")
    # the confusion matrix shows which digits are confused with which
    off = r.confusion.copy()
    np.fill_diagonal(off, 0)
    worst = off.max()
    print(f"       most frequent single confusion: {worst} test digits")
