"""Independent piecewise-linear grid warp used to freeze tests/golden/grid_checker.txt.

Each axis is cut into equal source cells; cell k is stretched by scale[k].
Output pixel centers are mapped back linearly inside their cell, then sampled
bilinearly in premultiplied alpha with transparent out-of-image taps.
"""
import math
import sys


def axis(size, scales):
    n = len(scales)
    src = [size * k / n for k in range(n + 1)]
    out = [0.0]
    for k in range(n):
        out.append(out[-1] + (src[k + 1] - src[k]) * scales[k])
    out_size = max(1, int(math.floor(out[-1] + 0.5)))
    coords = []
    for i in range(out_size):
        o = i + 0.5
        k = n - 1
        for j in range(n):
            if o < out[j + 1]:
                k = j
                break
        coords.append(src[k] + (o - out[k]) / scales[k] - 0.5)
    return coords


def checker(w, h):
    px = {}
    for y in range(h):
        for x in range(w):
            red = ((x // 2) + (y // 2)) % 2 == 0
            px[(x, y)] = (1.0, 0.0, 0.0, 1.0) if red else (0.0, 0.0, 1.0, 1.0)
    px[(0, 0)] = (0.0, 0.0, 0.0, 0.0)
    return px


def sample(px, w, h, sx, sy):
    x0, y0 = math.floor(sx), math.floor(sy)
    ax, ay = sx - x0, sy - y0
    acc = [0.0, 0.0, 0.0, 0.0]
    for dx, dy, wt in ((0, 0, (1 - ax) * (1 - ay)), (1, 0, ax * (1 - ay)), (0, 1, (1 - ax) * ay), (1, 1, ax * ay)):
        x, y = x0 + dx, y0 + dy
        if wt == 0 or not (0 <= x < w and 0 <= y < h):
            continue
        r, g, b, a = px[(x, y)]
        acc[0] += r * a * wt
        acc[1] += g * a * wt
        acc[2] += b * a * wt
        acc[3] += a * wt
    if acc[3] <= 0:
        return (0.0, 0.0, 0.0, 0.0)
    return (acc[0] / acc[3], acc[1] / acc[3], acc[2] / acc[3], min(acc[3], 1.0))


def main():
    w = h = 8
    xs = axis(w, [1.25, 0.75])
    ys = axis(h, [0.8, 1.5])
    px = checker(w, h)
    print(len(xs), len(ys))
    for sy in ys:
        row = []
        for sx in xs:
            row.extend("%.6f" % min(max(v, 0.0), 1.0) for v in sample(px, w, h, sx, sy))
        print(" ".join(row))


if __name__ == "__main__":
    sys.exit(main())
