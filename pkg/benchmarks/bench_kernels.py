"""Compare the compiled and pure-Python scanning kernels.

    python3 benchmarks/bench_kernels.py [--cases N] [--repeat R]

Both kernels run over the same synthetic corpus; their outputs are checked
for equality before timing.
"""
import argparse
import sys
import timeit

from sqltokopt import _scan as pure
from sqltokopt.pipeline import generate_synthetic_corpus

try:
    from sqltokopt import _scan_c as compiled
except ImportError:
    compiled = None


def _corpus(n):
    cases = generate_synthetic_corpus(1, n)
    return [c.input_db_query for c in cases] + [c.output_db_query for c in cases]


def _bench(label, fn, texts, repeat):
    best = min(timeit.repeat(lambda: [fn(t) for t in texts], number=1, repeat=repeat))
    size = sum(len(t) for t in texts)
    print(f"{label:<28} {best * 1000:9.2f} ms   {size / best / 1e6:7.2f} MB/s")
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled kernel not built; run: python3 setup.py build_ext --inplace", file=sys.stderr)
        return 1
    texts = _corpus(args.cases)
    ora, pg = pure.ORACLE, pure.POSTGRES
    for t in texts:
        assert pure.scan(t, ora) == compiled.scan(t, ora)
        assert pure.count_tokens(t) == compiled.count_tokens(t)
    print(f"{len(texts)} texts, {sum(map(len, texts))} chars, best of {args.repeat}")
    results = {}
    for name, mod in (("python", pure), ("cython", compiled)):
        results[name, "scan"] = _bench(f"{name} scan (oracle)", lambda t, m=mod: m.scan(t, ora), texts, args.repeat)
        _bench(f"{name} scan (postgres)", lambda t, m=mod: m.scan(t, pg), texts, args.repeat)
        results[name, "count"] = _bench(f"{name} count_tokens", mod.count_tokens, texts, args.repeat)
    print(f"speed-up scan: {results['python', 'scan'] / results['cython', 'scan']:.1f}x, "
          f"count_tokens: {results['python', 'count'] / results['cython', 'count']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
