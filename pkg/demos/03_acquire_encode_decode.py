"""Full pipeline: learn a package from samples, then compress and restore images."""
import time

import numpy as np

from magic_codec import AcquisitionParams, EncodeParams, Roi, acquire, decode, encode
from magic_codec.analysis import dataset_stats
from magic_codec.synth import synthetic_image

params = AcquisitionParams(bdim=64, cb=8, pw=8, th=5, iter_limit=10)
samples = [synthetic_image(480, 640, seed=s) for s in range(3)]
t0 = time.perf_counter()
kp = acquire(samples, params)
print(f"acquired in {time.perf_counter() - t0:.1f}s, package {len(kp.to_bytes())} bytes")

img = synthetic_image(480, 640, seed=99)
for d in (1, 2, 4, 8, 12):
    enc = encode(img, kp, EncodeParams(d=d))
    out = decode(enc.to_bytes(), kp)
    mae = np.abs(out.astype(int) - img).mean()
    print(f"d={d:2d}: {enc.byte_length:6d} bytes  {enc.bpp:.4f} bpp  "
          f"{enc.n_triangles:5d} triangles  MAE {mae:.1f}")

# Keep the centre sharp while the rest is coarse.
roi = EncodeParams(d=12, roi=[Roi(160, 200, 320, 440, 1)])
enc = encode(img, kp, roi)
print(f"d=12 with full-quality ROI: {enc.byte_length} bytes")

# Smoothing at decode time softens triangle edges.
flat, soft = decode(enc, kp), decode(enc, kp, smooth_depth=2)
print("pixels changed by smoothing:", int((flat != soft).any(axis=2).sum()))

bpps = [encode(synthetic_image(480, 640, seed=200 + i), kp, EncodeParams(d=8)).bpp
        for i in range(5)]
print(dataset_stats(bpps).to_json())
