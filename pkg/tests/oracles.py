"""Independent brute-force oracles shared by tests."""

from collections import deque

import numpy as np


def flood_fill_components(mask):
    """8-connected components as lists of (r, c), via BFS."""
    mask = np.asarray(mask) != 0
    H, W = mask.shape
    seen = np.zeros_like(mask)
    comps = []
    for r in range(H):
        for c in range(W):
            if mask[r, c] and not seen[r, c]:
                comp, queue = [], deque([(r, c)])
                seen[r, c] = True
                while queue:
                    y, x = queue.popleft()
                    comp.append((y, x))
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            ny, nx = y + dy, x + dx
                            if 0 <= ny < H and 0 <= nx < W and mask[ny, nx] and not seen[ny, nx]:
                                seen[ny, nx] = True
                                queue.append((ny, nx))
                comps.append(comp)
    return comps


def boxes_from_components(comps):
    boxes = []
    for comp in comps:
        rs = [p[0] for p in comp]
        cs = [p[1] for p in comp]
        boxes.append((min(rs), min(cs), max(rs) - min(rs) + 1, max(cs) - min(cs) + 1))
    return sorted(boxes)


def dilate_once(mask, k):
    mask = np.asarray(mask) != 0
    H, W = mask.shape
    h = k // 2
    out = np.zeros_like(mask)
    for r in range(H):
        for c in range(W):
            out[r, c] = mask[max(0, r - h):r + h + 1, max(0, c - h):c + h + 1].any()
    return out


def fits_square(mask, side):
    """True if some side x side all-foreground square exists."""
    m = np.asarray(mask) != 0
    H, W = m.shape
    for r in range(H - side + 1):
        for c in range(W - side + 1):
            if m[r:r + side, c:c + side].all():
                return True
    return False
