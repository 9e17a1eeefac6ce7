"""The shared knowledge: patterns, palette and the block predictor."""
import numpy as np

from magic_codec.dictionaries import gen_pattern_dict, kmeans_palette, quantize_colors
from magic_codec.features import all_block_features, local_entropy
from magic_codec.imageio import to_gray
from magic_codec.predictor import init_model, predict_labels, train
from magic_codec.synth import synthetic_image

# Patterns are prefixes of one seeded permutation of the block's cells:
# entry i has exactly i points and contains entry i - 1.
pd = gen_pattern_dict(bdim=64, size=4096, seed=7)
print("entry 3:", pd.entry(3).tolist())
print("entry 4:", pd.entry(4).tolist())
print("label bits:", pd.label_bits)

# Palette from weighted k-means over the colors of an image.
img = synthetic_image(240, 320, seed=3)
colors, counts = np.unique(img.reshape(-1, 3), axis=0, return_counts=True)
cd = kmeans_palette(colors, cb=4, seed=0, weights=counts)
print("SSE per iteration:", [round(v) for v in cd.sse_history])
idx = quantize_colors(cd, img.reshape(-1, 3))
err = np.abs(cd.entries[idx].astype(int) - img.reshape(-1, 3)).mean()
print(f"16-color mean abs error: {err:.1f}")

# Entropy features per 32x32 block and a tiny regressor on toy labels.
em = local_entropy(to_gray(img), 5)
x = all_block_features(em, 32)
y = np.rint(x.mean(axis=1) * 60)            # busier blocks want more points
model = train(init_model((32 * 32, 16, 1), seed=0), x, y, epochs=60, lr=0.05)
print("loss first/last epoch:", model.losses[0], model.losses[-1])
for d in (1, 4, 12):
    print(f"d={d:2d} labels:", predict_labels(model, x[:8], d, 4096).tolist())
