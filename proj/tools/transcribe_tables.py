#!/usr/bin/env python3
"""Extract the population-value and power tables from a LaTeX source into a
C++ header of reference values. Usage: transcribe_tables.py SOURCE OUT."""
import re
import sys
from fractions import Fraction


def spec_of(label):
    label = label.strip()
    if label.startswith("Normal"):
        return "normal"
    if "Exp(1)" in label:
        return "indep_exp"
    m = re.search(r"LogN\(0,([\d.]+)\)", label)
    if m:
        # Row label L is matched by marginal log-variance L^4 / 8: each
        # factor's printed parameter is taken as the square root of its sdlog.
        return f"lognormal:v={float(m.group(1)) ** 4 / 8:g}"
    if "type II" in label:
        return "laplace2"
    if "type I" in label:
        return "laplace1"
    m = re.search(r"Beta\((\d),(\d)\)", label)
    if m:
        return f"beta:a={m.group(1)},b={m.group(2)}"
    m = re.search(r"chi_(\d)\^2", label)
    if m:
        return f"chisq:df={m.group(1)}"
    if "t(2)" in label:
        return "t2"
    m = re.search(r"AL\(\\mathbf\{(\d)\},\\bfm\{\\Sigma_\{([\d.]+)\}\}\)", label)
    if m:
        return f"al:m={m.group(1)},r={m.group(2)}"
    m = re.search(r"\\frac\{(\d+)\}\{(\d+)\}N.*\+\\frac\{\d+\}\{\d+\}N\(\\bfm\{(\d)\},\\bfm\{\\Sigma_\{([\d.]+)\}\}\)", label)
    if m:
        w = Fraction(int(m.group(1)), int(m.group(2)))
        return f"mix:w={float(w):g},m={m.group(3)},r={m.group(4)}"
    raise ValueError(f"unrecognized row label: {label!r}")


def cell(text):
    text = text.replace("\\bf", "").replace(" ", "").replace("\\\\", "").replace("\\hline", "")
    if text in ("--", "X"):
        return "kMissing"
    return repr(float(text))


def table_rows(src, label):
    start = src.index(f"\\label{{{label}}}")
    body = src[start:src.index("\\end{tabular}", start)]
    rows, current = [], None
    for line in body.splitlines():
        if "&" not in line or "Distribution" in line:
            continue
        parts = [p for p in line.split("&")]
        head = parts[0].strip()
        if head:
            current = spec_of(head)
        key = int(re.search(r"[pn]=(\d+)", parts[1]).group(1))
        values = [cell(p) for p in parts[2:]]
        rows.append((current, key, values))
    return rows


def main():
    src = open(sys.argv[1], encoding="utf-8").read()
    out = ["#pragma once", "", "// Generated by tools/transcribe_tables.py. Do not edit by hand.", "",
           "#include <array>", "#include <limits>", "", "namespace ccmvn::reference {", "",
           "inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();", "",
           "/// Columns follow kAllStatistics: b1p, b2p, then the Z2 and Z3 functionals.",
           "struct Row {", "    const char* spec;", "    int key;  ///< p for population rows, n for power rows",
           "    std::array<double, 12> values;", "};", ""]
    pop = table_rows(src, "altpop")
    out.append(f"inline constexpr std::array<Row, {len(pop)}> kPopulation = {{{{")
    for spec, key, vals in pop:
        assert len(vals) == 12, (spec, vals)
        out.append(f'    {{"{spec}", {key}, {{{", ".join(vals)}}}}},')
    out.append("}};")
    for name, label in (("kPowerP2", "tab2"), ("kPowerP3", "tab4")):
        rows = table_rows(src, label)
        out.append("")
        out.append(f"/// alpha = 0.05; the omnibus T column is dropped.")
        out.append(f"inline constexpr std::array<Row, {len(rows)}> {name} = {{{{")
        for spec, key, vals in rows:
            assert len(vals) == 13, (spec, vals)
            vals = vals[:2] + vals[3:]
            out.append(f'    {{"{spec}", {key}, {{{", ".join(vals)}}}}},')
        out.append("}};")
    out += ["", "}  // namespace ccmvn::reference", ""]
    open(sys.argv[2], "w", encoding="utf-8").write("\n".join(out))


if __name__ == "__main__":
    main()
