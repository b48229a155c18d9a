"""Score regex rules and the bundled-name dictionary on a synthetic corpus.

The corpus plants values drawn from the rule languages, so formatted types
score near 1.0.  Names come from the same bundled list the dictionary uses;
the interesting number is how often ordinary words collide with it.

Run: python demos/evaluate_detectors.py [n_docs]
"""

from __future__ import annotations

import sys

from maskron import Config, DictionaryConfig, generate_synthetic_corpus, score
from maskron.pipeline import DictionarySource


def main(n_docs: int = 2000) -> None:
    docs = generate_synthetic_corpus(seed=42, n_docs=n_docs)
    names = DictionarySource(DictionaryConfig(), "bundled:names", target_fpr=0.001)
    engine = Config(dictionaries=(names,)).build_engine()
    predictions = [engine.detect(doc.text) for doc in docs]

    for mode in ("EXACT", "OVERLAP"):
        metrics = score(predictions, docs, mode)
        print(f"{mode}")
        for pii_type, s in sorted(metrics.per_type.items()):
            print(f"  {pii_type.name:<14} p={s.precision:.3f} r={s.recall:.3f} f1={s.f1:.3f}"
                  f"  (tp={s.tp} fp={s.fp} fn={s.fn})")
        micro = metrics.micro
        print(f"  {'micro':<14} p={micro.precision:.3f} r={micro.recall:.3f} f1={micro.f1:.3f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 2000)
