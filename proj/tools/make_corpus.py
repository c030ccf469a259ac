#!/usr/bin/env python3
# Copyright 2026 The clexkit Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Builds a deterministic byte corpus from the Python standard library sources.

Files are visited in sorted order and concatenated until the requested size
is reached, so the same interpreter installation always yields the same bytes.
"""

import argparse
import pathlib
import sysconfig


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", type=pathlib.Path)
    parser.add_argument("--bytes", type=int, default=4 * 1024 * 1024)
    parser.add_argument("--root", type=pathlib.Path,
                        default=pathlib.Path(sysconfig.get_paths()["stdlib"]))
    args = parser.parse_args()

    skip = {"site-packages", "dist-packages", "__pycache__", "test", "tests",
            "idle_test", "lib2to3"}
    files = sorted(p for p in args.root.rglob("*.py")
                   if not skip.intersection(p.relative_to(args.root).parts))
    out = bytearray()
    for path in files:
        data = path.read_bytes()
        # Byte-level models see raw bytes; keep the corpus ASCII-clean.
        data = bytes(b for b in data if b < 128)
        out += data
        if len(out) >= args.bytes:
            break
    if len(out) < args.bytes:
        raise SystemExit(f"only {len(out)} bytes available under {args.root}")
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_bytes(bytes(out[: args.bytes]))


if __name__ == "__main__":
    main()
