#!/usr/bin/env python3
"""Writes startpos_features.txt: the 353-slot encoding of the initial position.

Built from hand-listed attack maps, independent of the Rust encoder.
Squares are a1=0 .. h8=63; values are written with repr() so they parse back
to the same doubles.
"""

from fractions import Fraction
from pathlib import Path

FILES = "abcdefgh"


def sq(name):
    return FILES.index(name[0]) + 8 * (int(name[1]) - 1)


# Lowest-value White attacker of each square (P=1 N=B=3 R=5 Q=9 K=10), read off
# the board by hand. Rank 3 is covered by pawns; ranks 4-8 are not attacked.
WHITE_ATTACK = {
    "a1": 0, "b1": 5, "c1": 9, "d1": 10, "e1": 9, "f1": 10, "g1": 5, "h1": 0,
    "a2": 5, "b2": 3, "c2": 9, "d2": 3, "e2": 3, "f2": 10, "g2": 3, "h2": 5,
}
for f in FILES:
    WHITE_ATTACK[f + "3"] = 1


def mirror(name):
    return name[0] + str(9 - int(name[1]))


BLACK_ATTACK = {mirror(k): v for k, v in WHITE_ATTACK.items()}


def attack(color, name):
    table = WHITE_ATTACK if color == "w" else BLACK_ATTACK
    return table.get(name, 0)


BACK = {"R": "ah", "N": "bg", "B": "cf", "Q": "d", "K": "e"}
# Roster order and capacity per side.
ROSTER = [("K", 1), ("Q", 1), ("R", 2), ("B", 2), ("N", 2), ("P", 8)]


def squares_of(color, kind):
    rank = {"w": ("1", "2"), "b": ("8", "7")}[color]
    if kind == "P":
        return [f + rank[1] for f in FILES]
    return [f + rank[0] for f in BACK[kind]]


def main():
    v = [Fraction(0)] * 353
    # Side to move, castling WQ WK BQ BK.
    for i in range(5):
        v[i] = Fraction(1)
    # Counts, White then Black in roster order, each at its starting value.
    for i in range(12):
        v[5 + i] = Fraction(1)
    # Piece records: exists, file/7, rank/7, enemy attacker/10, own defender/10.
    slot = 17
    for color, enemy in (("w", "b"), ("b", "w")):
        for kind, cap in ROSTER:
            names = sorted(squares_of(color, kind), key=sq)
            assert len(names) == cap
            for name in names:
                v[slot] = Fraction(1)
                v[slot + 1] = Fraction(FILES.index(name[0]), 7)
                v[slot + 2] = Fraction(int(name[1]) - 1, 7)
                v[slot + 3] = Fraction(attack(enemy, name), 10)
                v[slot + 4] = Fraction(attack(color, name), 10)
                slot += 5
    assert slot == 177
    # Slider rays 177..224: every queen, rook and bishop is boxed in, all zero.
    # Squares: occupied -> (enemy of occupant, occupant); empty -> (White to move, Black).
    occupant = {}
    for color in "wb":
        for kind, _ in ROSTER:
            for name in squares_of(color, kind):
                occupant[name] = color
    for i in range(64):
        name = FILES[i % 8] + str(i // 8 + 1)
        owner = occupant.get(name, "b")
        enemy = "b" if owner == "w" else "w"
        v[225 + 2 * i] = Fraction(attack(enemy, name), 10)
        v[225 + 2 * i + 1] = Fraction(attack(owner, name), 10)

    out = Path(__file__).with_name("startpos_features.txt")
    with out.open("w") as fh:
        for i, x in enumerate(v):
            fh.write(f"{i} {float(x.numerator) / float(x.denominator)!r}\n")


if __name__ == "__main__":
    main()
