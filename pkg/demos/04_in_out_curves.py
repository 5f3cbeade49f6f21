"""How well does each class's affine space approximate its own digits?

For every digit class i the relative error In(i, k) of projecting held-out
digits of class i onto the k-dimensional affine space of class i is compared
with the error Out(i, k) of projecting the other digits onto it.  A small
In / Out ratio means the space is specific to its class.  Digits with little
variability (such as 1) reach a small ratio with few dimensions; digits with
more variability (such as 4) need more.

Run:  python demos/04_in_out_curves.py /path/to/mnist [train size]
"""

import sys

import numpy as np

from scatpca.datasets import load_mnist, subsample_train
from scatpca.models import fit_class_models, in_out_curves
from scatpca.pipeline import compute_features

root = sys.argv[1] if len(sys.argv) > 1 else "/root/data/mnist"
size = int(sys.argv[2]) if len(sys.argv) > 2 else 1000

train, test = load_mnist(root)
train = subsample_train(train, size, seed=0)
held = test.subset(np.arange(2000))

models = fit_class_models(compute_features(train.images, J=3), train.labels, K=140)
curves = in_out_curves(models, compute_features(held.images, J=3), held.labels, k_max=40)

print("digit  In(k=0)  In(k=10)  Out(k=10)  In/Out(k=10)  In/Out(k=40)")
for i in range(10):
    print(f"  {i}    {curves.intra[i, 0]:.4f}   {curves.intra[i, 10]:.4f}    "
          f"{curves.outer[i, 10]:.4f}     {curves.ratio(10)[i]:.3f}         "
          f"{curves.ratio(40)[i]:.3f}")
