"""Audit of the multiplicative-blinding countermeasure and its repairs.

Reproduces the headline results end to end:
  * the original version has a single point of failure (the modulus
    recomputation), everything else is caught by its checks;
  * the repaired, simplified version resists all single faults;
  * each of its seven remaining verifications is necessary;
  * with fault-proof conditions, one two-fault combination still works.

Run from the repository root (takes ~1 minute):
  python demos/03_audit_countermeasure.py
"""

import os
from pathlib import Path

from modfault import FaultConfig, ZEROING, analyze, parse
from modfault.analyzer import removed_check_variants

original = parse(Path("corpus/vigilant-original.fj").read_text())
fixed = parse(Path("corpus/vigilant-fixed.fj").read_text())
jobs = os.cpu_count() or 1

print("== original version, single faults ==")
report = analyze(original, FaultConfig(max_faults=1), jobs=jobs)
print(f"summary: {report.summary}")
for vector, outcome in report.attacks():
    print(f"  ATTACK {vector[0].site.describe()} [{vector[0].kind}] "
          f"-> {outcome.branch}")

print("\n== fixed and simplified version, single faults ==")
report = analyze(fixed, FaultConfig(max_faults=1), jobs=jobs)
print(f"summary: {report.summary}")

print("\n== minimality: drop one verification at a time ==")
for k, variant in removed_check_variants(fixed):
    report = analyze(variant, FaultConfig(max_faults=1), jobs=jobs)
    print(f"  without check {k}: {report.summary['attacks']} attack(s)")

print("\n== two zeroing faults, conditions protected ==")
cfg = FaultConfig(max_faults=2, kinds=(ZEROING,), protect_conditions=True)
report = analyze(fixed, cfg, jobs=jobs)
print(f"summary: {report.summary}")
for vector, outcome in report.attacks():
    sites = " + ".join(f.site.describe() for f in vector)
    print(f"  ATTACK {sites} -> {outcome.branch}")
