#!/usr/bin/env python3
"""Write a synthetic corpus (corpus_raw.tsv, queries.tsv, word_labels.tsv)
for exercising the CLI lifecycle by hand.

    python3 scripts/make_synthetic_corpus.py --out-dir /tmp/stc-data --seed 0
"""

import argparse
import os
import sys

from stc.synth import (SynthConfig, generate, write_corpus_file,
                       write_queries_file, write_word_labels_file)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n-posts", type=int, default=625)
    parser.add_argument("--comments-per-post", type=int, default=8)
    parser.add_argument("--n-queries", type=int, default=50)
    args = parser.parse_args()

    data = generate(SynthConfig(seed=args.seed, n_posts=args.n_posts,
                                comments_per_post=args.comments_per_post,
                                n_queries=args.n_queries))
    os.makedirs(args.out_dir, exist_ok=True)
    write_corpus_file(data, os.path.join(args.out_dir, "corpus_raw.tsv"))
    write_queries_file(data.queries, os.path.join(args.out_dir, "queries.tsv"))
    write_word_labels_file(data.word_labels,
                           os.path.join(args.out_dir, "word_labels.tsv"))
    print(f"{len(data.corpus_lines)} pairs, {len(data.queries)} queries "
          f"-> {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
