"""Smoke test for the chansel_py extension.

Build it with

    cargo build -p chansel-python --features extension-module --release
    cp target/release/libchansel_py.so python/chansel_py.so

then run `python python/smoke_test.py` from the repository root.
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import chansel_py as cs


def main():
    with tempfile.TemporaryDirectory() as tmp:
        corpus = os.path.join(tmp, "corpus")
        n = cs.generate_corpus(corpus, count=60, seed=3)
        assert n == 60

        img = cs.Image.load(os.path.join(corpus, "images", "00000.png"))
        assert img.height == 40 and img.width > 0
        raw = img.to_bytes()
        again = cs.Image.from_bytes(img.width, img.height, raw)
        assert again.to_bytes() == raw

        d = cs.selection_descriptor(img, "wavelet")
        assert abs(math.sqrt(sum(v * v for v in d)) - 1.0) < 1e-9

        seq, chosen = cs.extract_sequence(img, "fixed:G")
        assert len(seq) == len(chosen) and all(len(v) == 168 for v in seq)
        assert set(chosen) == {"G"}

        selector = cs.train_selector(corpus, "wavelet")
        sel_path = os.path.join(tmp, "sel.model")
        selector.save(sel_path)
        selector = cs.Selector.load(sel_path)
        labels, scores = selector.predict(img)
        assert len(scores) == 8
        assert selector.select(img) in {"R", "G", "B", "Y", "Cr", "Cb", "S", "V"}

        models = cs.train_hmm(corpus, "per-window", selector, iters=2)
        hmm_path = os.path.join(tmp, "pw.hmm")
        models.save(hmm_path)
        models = cs.Models.load(hmm_path)
        lexicon = cs.Lexicon.load(os.path.join(corpus, "lexicon.txt"))
        ranked = models.recognize(img, lexicon, "per-window", selector)
        assert len(ranked) == len(lexicon)
        assert ranked[0][0] in lexicon.entries()

        try:
            models.recognize(img, lexicon, "per-window")
        except ValueError:
            pass
        else:
            raise AssertionError("per-window without a selector must fail")

    acc, prec, rec = cs.multilabel_metrics(["+1 -1 -1 -1 -1 -1 -1 -1"], ["+1 +1 -1 -1 -1 -1 -1 -1"])
    assert (acc, prec, rec) == (0.5, 0.5, 1.0)
    assert cs.levenshtein("kitten", "sitting") == 3
    assert cs.word_char_accuracy(["CAB"], ["CAD"])[0] == 0.0
    print("smoke test ok")


if __name__ == "__main__":
    main()
