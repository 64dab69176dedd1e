"""
Keeping the informative windows
===============================

Walk one layer's window selection by hand: partition a feature map into
windows, score them with attention over window means, keep the top half per
frame, and pack the survivors into half-resolution groups.
"""

import numpy as np

from raformer.config import RaformerConfig
from raformer.raa import (reverse_pack, select_topk_windows, window_attention,
                          window_importance, window_partition)
from raformer.weights import init_layer_weights

# 2 frames of 16x16 features in 4x4 windows: 16 windows per frame.
cfg = RaformerConfig(T=2, H=64, W=64, C=8, h=4, w=4, heads=2)
lw = init_layer_weights(cfg)
rng = np.random.default_rng(0)
f = rng.standard_normal(cfg.feature_shape).astype(np.float32)

ws = window_partition(f, cfg.h, cfg.w)
print("windows:", ws.windows.shape, "(T, n, h*w, C)")

# %%
# Every window attends to every window of every frame.  Rows of the
# attention matrix sum to one, so the total "attention received" is T*n.
aw = window_attention(ws, lw)
scores = window_importance(ws, lw)
print("attention:", aw.shape, "row sums ~", aw.sum(-1).min().round(6), aw.sum(-1).max().round(6))
print("total importance:", scores.sum().round(4), "=", cfg.T * cfg.n)
print("frame 0 scores:", np.round(scores[0], 3))

# %%
# Keep k = n/2 windows per frame.  Indices come back in ascending order.
sel = select_topk_windows(ws, scores, cfg.kept)
for t in range(cfg.T):
    print(f"frame {t} keeps", sel.kept[t].tolist())

# %%
# The k*h*w kept pixels per frame fill exactly g groups of (H/8)x(W/8).
packed = reverse_pack(sel)
print("packed:", packed.shape, "(g, T, H/8, W/8, C)")
print("g*(H/8)*(W/8) =", cfg.groups * (cfg.H // 8) * (cfg.W // 8),
      " k*h*w =", cfg.kept * cfg.h * cfg.w)

# %%
# With a quarter of the windows or fewer the kept pixels are tiled
# cyclically to fill one group.
few = reverse_pack(select_topk_windows(ws, scores, 2))
print("k=2 packed:", few.shape)
