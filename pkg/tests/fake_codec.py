"""Toy lossy codec used to exercise the harness without real encoders.

    python fake_codec.py enc INPUT.y4m OUTPUT QP
    python fake_codec.py dec INPUT OUTPUT.y4m [--drop N] [--rate F]

Encoding quantizes every sample with step ``1 + qp // 4`` and zlib-compresses
the result, so higher QP gives fewer bytes and lower quality.
"""

import sys
import zlib

import numpy as np


def main(argv):
    mode, src, dst = argv[:3]
    with open(src, "rb") as fh:
        data = fh.read()
    if mode == "enc":
        qp = int(argv[3])
        nl = data.index(b"\n")
        header, body = data[:nl + 1], data[nl + 1:]
        step = 1 + qp // 4
        arr = np.frombuffer(body, dtype=np.uint8).copy()
        marker = np.frombuffer(b"FRAME\n", dtype=np.uint8)
        # Quantize payload bytes only; FRAME markers are rebuilt by position.
        w = int(next(t for t in header.split() if t.startswith(b"W"))[1:])
        h = int(next(t for t in header.split() if t.startswith(b"H"))[1:])
        fsize = w * h * 3 // 2 + marker.size
        frames = arr.reshape(-1, fsize)[:, marker.size:]
        q = (np.round(frames.astype(np.int32) / step) * step).clip(0, 255).astype(np.uint8)
        blob = header + bytes([step]) + zlib.compress(q.tobytes(), 9)
        with open(dst, "wb") as fh:
            fh.write(blob)
    elif mode == "dec":
        drop = int(argv[argv.index("--drop") + 1]) if "--drop" in argv else 0
        nl = data.index(b"\n")
        header = data[:nl + 1]
        if "--rate" in argv:
            rate = argv[argv.index("--rate") + 1].encode()
            header = b" ".join(t if not t.startswith(b"F") else b"F" + rate
                               for t in header.strip().split()) + b"\n"
        payload = zlib.decompress(data[nl + 2:])
        w = int(next(t for t in header.split() if t.startswith(b"W"))[1:])
        h = int(next(t for t in header.split() if t.startswith(b"H"))[1:])
        fsize = w * h * 3 // 2
        frames = [payload[i:i + fsize] for i in range(0, len(payload), fsize)]
        frames = frames[:len(frames) - drop]
        with open(dst, "wb") as fh:
            fh.write(header)
            for f in frames:
                fh.write(b"FRAME\n" + f)
    else:
        raise SystemExit(f"unknown mode {mode}")


if __name__ == "__main__":
    main(sys.argv[1:])
