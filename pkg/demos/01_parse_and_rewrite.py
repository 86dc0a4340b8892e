"""Tour of the term language and the rewriter.

Run from the repository root:  python demos/01_parse_and_rewrite.py
"""

from modfault import Rewriter, parse_expr, pretty

rw = Rewriter(primes={"p", "q"})

examples = [
    # ring axioms
    "x * 1 + 0",
    "x + (-x)",
    "a * (b * c) * 0 + y",
    # modular identities
    "(a mod N) mod N",
    "(N * k) mod N",
    "(a mod (N * m)) mod N",
    "q * (q^-1 mod p) mod p",
    # the binomial identity behind multiplicative blinding checks
    "(1 + r)^d mod (r * r)",
    # Fermat: exponent blinding by a multiple of p-1 changes nothing mod p
    "M^(dp + R1 * (p - 1)) mod p",
    # Chinese remainder theorem
    "(p * q * x) mod (p * q)",
]

width = max(len(e) for e in examples)
for source in examples:
    term = parse_expr(source)
    print(f"{source:<{width}}  ->  {pretty(rw.normalize(term))}")
