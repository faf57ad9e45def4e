#!/usr/bin/env python3
"""Regenerates include/sentinel/detail/unicode_tables.hpp from Python's UCD."""
import sys
import unicodedata


def simple_fold(cp):
    ch = chr(cp)
    folded = ch.casefold()
    if len(folded) == 1:
        return ord(folded)
    lowered = ch.lower()
    if len(lowered) == 1:
        return ord(lowered)
    return cp


def main(out_path):
    folds = []
    alnum = []
    start = None
    for cp in range(0x110000):
        if 0xD800 <= cp <= 0xDFFF:
            is_alnum = False
        else:
            is_alnum = unicodedata.category(chr(cp))[0] in "LN"
            f = simple_fold(cp)
            if f != cp:
                folds.append((cp, f))
        if is_alnum and start is None:
            start = cp
        elif not is_alnum and start is not None:
            alnum.append((start, cp - 1))
            start = None
    if start is not None:
        alnum.append((start, 0x10FFFF))

    with open(out_path, "w", encoding="utf-8") as out:
        out.write("// Generated by scripts/gen_unicode_tables.py (Unicode %s). Do not edit.\n"
                  % unicodedata.unidata_version)
        out.write("#pragma once\n\n#include <array>\n#include <cstdint>\n\n")
        out.write("namespace sentinel::detail {\n\n")
        out.write("struct CaseFoldEntry {\n  char32_t from;\n  char32_t to;\n};\n\n")
        out.write("struct CodepointRange {\n  char32_t first;\n  char32_t last;\n};\n\n")
        out.write("// Simple case folding, sorted by source codepoint.\n")
        out.write("inline constexpr std::array<CaseFoldEntry, %d> kCaseFold{{\n" % len(folds))
        for a, b in folds:
            out.write("    {0x%04X, 0x%04X},\n" % (a, b))
        out.write("}};\n\n")
        out.write("// General categories L* and N*, as inclusive sorted ranges.\n")
        out.write("inline constexpr std::array<CodepointRange, %d> kAlnumRanges{{\n" % len(alnum))
        for a, b in alnum:
            out.write("    {0x%04X, 0x%04X},\n" % (a, b))
        out.write("}};\n\n}  // namespace sentinel::detail\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "include/sentinel/detail/unicode_tables.hpp")
