#!/usr/bin/env python3
"""Export a fixed set of four-part Bach chorales from the music21 corpus as
Standard MIDI Files for the test suite.

Usage: python3 make_chorale_fixtures.py <output-dir>

Writes <output-dir>/train/*.mid (10 pieces) and <output-dir>/test/*.mid
(4 pieces). The selection is fixed so the bundled fixtures are reproducible.
"""
import pathlib
import sys

from music21 import corpus

TRAIN = [
    "bwv101.7", "bwv102.7", "bwv103.6", "bwv104.6", "bwv110.7",
    "bwv113.8", "bwv114.7", "bwv115.6", "bwv117.4", "bwv122.6",
]
TEST = ["bwv125.6", "bwv127.5", "bwv13.6", "bwv133.6"]


def export(name, out_dir):
    score = corpus.parse("bach/" + name)
    if len(score.parts) != 4:
        raise SystemExit(f"{name}: expected 4 parts, got {len(score.parts)}")
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / (name + ".mid")
    score.write("midi", fp=str(target))
    print(f"{target}  {score.highestTime} quarters")


def main():
    if len(sys.argv) != 2:
        raise SystemExit(__doc__)
    root = pathlib.Path(sys.argv[1])
    for name in TRAIN:
        export(name, root / "train")
    for name in TEST:
        export(name, root / "test")


if __name__ == "__main__":
    main()
