#!/usr/bin/env python3
"""Regenerates src/unicode_tables.inc from Python's unicodedata."""
import sys
import unicodedata

MAX_CP = 0x10FFFF


def ranges(pred):
    out, start = [], None
    for cp in range(MAX_CP + 2):
        hit = cp <= MAX_CP and pred(cp)
        if hit and start is None:
            start = cp
        elif not hit and start is not None:
            out.append((start, cp - 1))
            start = None
    return out


def is_punct_or_symbol(cp):
    return unicodedata.category(chr(cp))[0] in "PS"


def lower_pairs():
    pairs = []
    for cp in range(MAX_CP + 1):
        if 0xD800 <= cp <= 0xDFFF:
            continue
        low = chr(cp).lower()
        if len(low) == 1 and ord(low) != cp:
            pairs.append((cp, ord(low)))
    return pairs


def main(path):
    ps = ranges(is_punct_or_symbol)
    lp = lower_pairs()
    with open(path, "w", encoding="utf-8") as f:
        f.write("// Generated by tools/gen_unicode_tables.py (Unicode %s). Do not edit.\n"
                % unicodedata.unidata_version)
        f.write("// clang-format off\n")
        f.write("constexpr CodeRange kPunctSymbolRanges[] = {\n")
        for lo, hi in ps:
            f.write("  {0x%X, 0x%X},\n" % (lo, hi))
        f.write("};\n\n")
        f.write("constexpr CaseMapping kLowercaseMap[] = {\n")
        for a, b in lp:
            f.write("  {0x%X, 0x%X},\n" % (a, b))
        f.write("};\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/unicode_tables.inc")
