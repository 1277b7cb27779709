"""QR symbol generation: byte mode, error-correction level M, versions 1-10.

Covers payloads up to 213 bytes, which is ample for visualizer links.
"""

from __future__ import annotations

# (data codewords per symbol, ec codewords per block, [(block count, data cw per block), ...])
_VERSION_M = {
    1: (16, 10, [(1, 16)]),
    2: (28, 16, [(1, 28)]),
    3: (44, 26, [(1, 44)]),
    4: (64, 18, [(2, 32)]),
    5: (86, 24, [(2, 43)]),
    6: (108, 16, [(4, 27)]),
    7: (124, 18, [(4, 31)]),
    8: (154, 22, [(2, 38), (2, 39)]),
    9: (182, 22, [(3, 36), (2, 37)]),
    10: (216, 26, [(4, 43), (1, 44)]),
}

_ALIGNMENT = {
    1: [], 2: [6, 18], 3: [6, 22], 4: [6, 26], 5: [6, 30],
    6: [6, 34], 7: [6, 22, 38], 8: [6, 24, 42], 9: [6, 26, 46], 10: [6, 28, 50],
}


class PayloadTooLong(ValueError):
    pass


# ----------------------------------------------------------------- GF(256)

_EXP = [0] * 512
_LOG = [0] * 256
_x = 1
for _i in range(255):
    _EXP[_i] = _x
    _LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= 0x11D
for _i in range(255, 512):
    _EXP[_i] = _EXP[_i - 255]


def _gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def _rs_generator(n: int) -> list[int]:
    g = [1]
    for i in range(n):
        g2 = [0] * (len(g) + 1)
        for j, c in enumerate(g):
            g2[j] ^= _gf_mul(c, _EXP[i])
            g2[j + 1] ^= c
        g = g2
    return g


def _rs_encode(data: list[int], n_ec: int) -> list[int]:
    gen = _rs_generator(n_ec)[::-1]  # decreasing power order, gen[0] = 1
    rem = [0] * n_ec
    for d in data:
        factor = d ^ rem[0]
        rem = rem[1:] + [0]
        if factor:
            for i in range(n_ec):
                rem[i] ^= _gf_mul(gen[i + 1], factor)
    return rem


# ----------------------------------------------------------------- data layer

def _pick_version(n: int) -> int:
    for v in sorted(_VERSION_M):
        header = 2 if v <= 9 else 3  # 4-bit mode + 8- or 16-bit count, rounded up
        if _VERSION_M[v][0] - header >= n:
            return v
    raise PayloadTooLong(f"payload of {n} bytes exceeds version 10-M capacity")


def _data_codewords(payload: bytes, version: int) -> list[int]:
    total_data = _VERSION_M[version][0]
    bits = []

    def push(value: int, width: int):
        for i in range(width - 1, -1, -1):
            bits.append((value >> i) & 1)

    push(0b0100, 4)            # byte mode
    push(len(payload), 8 if version <= 9 else 16)
    for b in payload:
        push(b, 8)
    # terminator, then pad to a byte boundary
    for _ in range(min(4, total_data * 8 - len(bits))):
        bits.append(0)
    while len(bits) % 8:
        bits.append(0)
    codewords = [int("".join(map(str, bits[i:i + 8])), 2) for i in range(0, len(bits), 8)]
    pad = (0xEC, 0x11)
    i = 0
    while len(codewords) < total_data:
        codewords.append(pad[i % 2])
        i += 1
    return codewords


def _interleave(codewords: list[int], version: int) -> list[int]:
    _, n_ec, groups = _VERSION_M[version]
    blocks = []
    pos = 0
    for count, size in groups:
        for _ in range(count):
            blocks.append(codewords[pos:pos + size])
            pos += size
    ec_blocks = [_rs_encode(b, n_ec) for b in blocks]
    out = []
    for i in range(max(len(b) for b in blocks)):
        for b in blocks:
            if i < len(b):
                out.append(b[i])
    for i in range(n_ec):
        for eb in ec_blocks:
            out.append(eb[i])
    return out


# ----------------------------------------------------------------- matrix layer

def _size(version: int) -> int:
    return 17 + 4 * version


def _build_patterns(version: int):
    n = _size(version)
    grid = [[None] * n for _ in range(n)]  # None = unset data cell

    def set_square(r, c, dark):
        if 0 <= r < n and 0 <= c < n:
            grid[r][c] = dark

    def finder(r0, c0):
        for dr in range(-1, 8):
            for dc in range(-1, 8):
                r, c = r0 + dr, c0 + dc
                if not (0 <= r < n and 0 <= c < n):
                    continue
                dark = (0 <= dr <= 6 and dc in (0, 6)) or \
                       (0 <= dc <= 6 and dr in (0, 6)) or \
                       (2 <= dr <= 4 and 2 <= dc <= 4)
                grid[r][c] = dark

    finder(0, 0)
    finder(0, n - 7)
    finder(n - 7, 0)

    for r0 in _ALIGNMENT[version]:
        for c0 in _ALIGNMENT[version]:
            if grid[r0][c0] is not None:
                continue  # overlaps a finder
            for dr in range(-2, 3):
                for dc in range(-2, 3):
                    set_square(r0 + dr, c0 + dc,
                               max(abs(dr), abs(dc)) != 1)

    for i in range(8, n - 8):
        if grid[6][i] is None:
            grid[6][i] = (i % 2 == 0)
        if grid[i][6] is None:
            grid[i][6] = (i % 2 == 0)

    # format info areas (filled later) reserved as light
    for i in range(9):
        if grid[8][i] is None:
            grid[8][i] = False
        if grid[i][8] is None:
            grid[i][8] = False
    for i in range(8):
        if grid[8][n - 1 - i] is None:
            grid[8][n - 1 - i] = False
        if grid[n - 1 - i][8] is None:
            grid[n - 1 - i][8] = False
    grid[n - 8][8] = True  # fixed dark module

    if version >= 7:
        vinfo = _version_bits(version)
        for i in range(18):
            bit = (vinfo >> i) & 1 == 1
            grid[i // 3][n - 11 + i % 3] = bit
            grid[n - 11 + i % 3][i // 3] = bit

    reserved = [[grid[r][c] is not None for c in range(n)] for r in range(n)]
    return grid, reserved


def _place_data(grid, reserved, bits):
    n = len(grid)
    idx = 0
    col = n - 1
    upward = True
    while col > 0:
        if col == 6:
            col -= 1
        rows = range(n - 1, -1, -1) if upward else range(n)
        for r in rows:
            for c in (col, col - 1):
                if reserved[r][c]:
                    continue
                bit = bits[idx] if idx < len(bits) else 0
                grid[r][c] = bit == 1
                idx += 1
        upward = not upward
        col -= 2


_MASKS = [
    lambda r, c: (r + c) % 2 == 0,
    lambda r, c: r % 2 == 0,
    lambda r, c: c % 3 == 0,
    lambda r, c: (r + c) % 3 == 0,
    lambda r, c: (r // 2 + c // 3) % 2 == 0,
    lambda r, c: (r * c) % 2 + (r * c) % 3 == 0,
    lambda r, c: ((r * c) % 2 + (r * c) % 3) % 2 == 0,
    lambda r, c: ((r + c) % 2 + (r * c) % 3) % 2 == 0,
]


def _format_bits(mask: int) -> int:
    data = (0b00 << 3) | mask  # EC level M = 00
    rem = data << 10
    for i in range(14, 9, -1):
        if rem & (1 << i):
            rem ^= 0x537 << (i - 10)
    return ((data << 10) | rem) ^ 0x5412


def _version_bits(version: int) -> int:
    rem = version << 12
    for i in range(17, 11, -1):
        if rem & (1 << i):
            rem ^= 0x1F25 << (i - 12)
    return (version << 12) | rem


def _write_format(grid, mask: int):
    n = len(grid)
    f = _format_bits(mask)
    bits = [(f >> i) & 1 == 1 for i in range(14, -1, -1)]
    coords_a = [(8, 0), (8, 1), (8, 2), (8, 3), (8, 4), (8, 5), (8, 7), (8, 8),
                (7, 8), (5, 8), (4, 8), (3, 8), (2, 8), (1, 8), (0, 8)]
    coords_b = [(n - 1, 8), (n - 2, 8), (n - 3, 8), (n - 4, 8), (n - 5, 8),
                (n - 6, 8), (n - 7, 8), (8, n - 8), (8, n - 7), (8, n - 6),
                (8, n - 5), (8, n - 4), (8, n - 3), (8, n - 2), (8, n - 1)]
    for (r, c), b in zip(coords_a, bits):
        grid[r][c] = b
    for (r, c), b in zip(coords_b, bits):
        grid[r][c] = b


def _penalty(grid) -> int:
    n = len(grid)
    score = 0
    # rule 1: runs of five or more same-colored modules
    for lines in (grid, list(zip(*grid))):
        for line in lines:
            run = 1
            for i in range(1, n):
                if line[i] == line[i - 1]:
                    run += 1
                else:
                    if run >= 5:
                        score += 3 + run - 5
                    run = 1
            if run >= 5:
                score += 3 + run - 5
    # rule 2: 2x2 blocks
    for r in range(n - 1):
        for c in range(n - 1):
            if grid[r][c] == grid[r][c + 1] == grid[r + 1][c] == grid[r + 1][c + 1]:
                score += 3
    # rule 3: finder-like patterns
    pat1 = [True, False, True, True, True, False, True, False, False, False, False]
    pat2 = pat1[::-1]
    for lines in (grid, [list(col) for col in zip(*grid)]):
        for line in lines:
            for i in range(n - 10):
                window = list(line[i:i + 11])
                if window == pat1 or window == pat2:
                    score += 40
    # rule 4: dark module proportion
    dark = sum(sum(1 for v in row if v) for row in grid)
    pct = dark * 100 // (n * n)
    score += 10 * (abs(pct - 50) // 5)
    return score


def encode_matrix(payload: bytes) -> list[list[bool]]:
    """Encode payload into a QR module matrix (True = dark), EC level M."""
    version = _pick_version(len(payload))
    codewords = _interleave(_data_codewords(payload, version), version)
    bits = []
    for cw in codewords:
        for i in range(7, -1, -1):
            bits.append((cw >> i) & 1)

    base, reserved = _build_patterns(version)
    _place_data(base, reserved, bits)

    best = None
    best_score = None
    for mask in range(8):
        grid = [row[:] for row in base]
        for r in range(len(grid)):
            for c in range(len(grid)):
                if not reserved[r][c] and _MASKS[mask](r, c):
                    grid[r][c] = not grid[r][c]
        _write_format(grid, mask)
        score = _penalty(grid)
        if best_score is None or score < best_score:
            best, best_score = grid, score
    return best


def render_png(matrix: list[list[bool]], path: str, scale: int = 8, border: int = 4) -> None:
    """Write the matrix as a PNG with a quiet zone."""
    from PIL import Image

    n = len(matrix)
    size = (n + 2 * border) * scale
    img = Image.new("L", (size, size), 255)
    px = img.load()
    for r in range(n):
        for c in range(n):
            if matrix[r][c]:
                for dr in range(scale):
                    for dc in range(scale):
                        px[(c + border) * scale + dc, (r + border) * scale + dr] = 0
    img.save(path, "PNG")


def render_png_bytes(matrix: list[list[bool]], scale: int = 8, border: int = 4) -> bytes:
    import io
    from PIL import Image

    n = len(matrix)
    size = (n + 2 * border) * scale
    img = Image.new("L", (size, size), 255)
    px = img.load()
    for r in range(n):
        for c in range(n):
            if matrix[r][c]:
                for dr in range(scale):
                    for dc in range(scale):
                        px[(c + border) * scale + dc, (r + border) * scale + dr] = 0
    buf = io.BytesIO()
    img.save(buf, "PNG")
    return buf.getvalue()


def make_qr_png(text: str, path: str | None = None) -> bytes:
    """Encode text (UTF-8) as a QR PNG; writes to path when given, returns PNG bytes."""
    matrix = encode_matrix(text.encode("utf-8"))
    data = render_png_bytes(matrix)
    if path is not None:
        with open(path, "wb") as f:
            f.write(data)
    return data
