"""Slow, direct reference implementations used as test oracles."""
from collections import deque

import numpy as np


def median3(img):
    """3x3 median with mirrored borders (edge pixel repeated), by explicit loops."""
    rows, cols = img.shape
    out = np.empty_like(img, dtype=float)

    def at(r, c):
        r = -r - 1 if r < 0 else (2 * rows - r - 1 if r >= rows else r)
        c = -c - 1 if c < 0 else (2 * cols - c - 1 if c >= cols else c)
        return img[r, c]

    for r in range(rows):
        for c in range(cols):
            vals = sorted(at(r + dr, c + dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1))
            out[r, c] = vals[4]
    return out


def groups8(mask):
    """Flood fill over 8-neighbours; groups ordered by first pixel in row-major order."""
    rows, cols = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    groups = []
    for r in range(rows):
        for c in range(cols):
            if not mask[r, c] or seen[r, c]:
                continue
            group, queue = set(), deque([(r, c)])
            seen[r, c] = True
            while queue:
                i, j = queue.popleft()
                group.add((i, j))
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        a, b = i + di, j + dj
                        if 0 <= a < rows and 0 <= b < cols and mask[a, b] and not seen[a, b]:
                            seen[a, b] = True
                            queue.append((a, b))
            groups.append(frozenset(group))
    return groups


def detect_reference(pixels, ratio=4.0, offset=6):
    """Pixel groups selected by the sixth-neighbour brightness rule."""
    s = median3(np.asarray(pixels, float))
    rows, cols = s.shape
    mask = np.zeros(s.shape, dtype=bool)
    for r in range(rows):
        for c in range(cols):
            if s[r, c] <= 0:
                continue
            ok = True
            for dr, dc in ((-offset, 0), (offset, 0), (0, -offset), (0, offset)):
                a, b = r + dr, c + dc
                if 0 <= a < rows and 0 <= b < cols and not s[r, c] >= ratio * s[a, b]:
                    ok = False
            mask[r, c] = ok
    return groups8(mask)


def flakes_reference(heights, threshold=2.0):
    h = np.asarray(heights, float)
    mask = np.zeros(h.shape, dtype=bool)
    for r in range(h.shape[0]):
        for c in range(h.shape[1]):
            mask[r, c] = h[r, c] >= threshold
    return groups8(mask)
