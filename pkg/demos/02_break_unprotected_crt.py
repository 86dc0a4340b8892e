"""The classic gcd attack on unprotected CRT signatures, twice over.

First symbolically: every single fault on either exponentiation half is
classified as a working attack.  Then numerically: a faulted signature and
gcd arithmetic recover a prime factor at toy scale.

Run from the repository root:  python demos/02_break_unprotected_crt.py
"""

import math
from pathlib import Path

from modfault import FaultConfig, analyze, parse
from modfault.oracle import crt_signature, eval_program, instantiate

program = parse(Path("corpus/unprotected.fj").read_text())

print("== symbolic analysis, single faults ==")
report = analyze(program, FaultConfig(max_faults=1), path="corpus/unprotected.fj")
print(f"{report.summary['total']} injections, "
      f"{report.summary['attacks']} working attacks")
for vector, outcome in report.attacks()[:4]:
    fault = vector[0]
    print(f"  {fault.site.describe()} [{fault.kind}] satisfies {outcome.branch}")
print("  ...")

print("\n== the same attack with numbers ==")
env = instantiate(program, seed=42)
n = env.p * env.q
_, s = eval_program(program, env)
print(f"p={env.p} q={env.q} M={env.values['M']}  ->  signature S={s}")

# corrupt the half computed modulo q and recombine
sp = s % env.p
bad_sq = (s + 1) % env.q
s_hat = crt_signature(env, sp, bad_sq)
factor = math.gcd(n, s - s_hat)
print(f"faulted signature S^={s_hat}, gcd(N, S - S^) = {factor}  "
      f"({'the secret p!' if factor == env.p else 'no luck'})")
