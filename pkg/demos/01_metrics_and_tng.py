"""Walk through the lexical primitives: tokenization, sentence BLEU, and
the top-n-gram repetition profile that powers the oscillation detector.

Run with: python3 demos/01_metrics_and_tng.py
"""

from halluscan import TngParams, detect_oscillatory, spbleu, tokenize, top_ngram

# The built-in tokenizer splits on whitespace and peels edge punctuation.
print(tokenize("Hello, world!"))
# -> ('Hello', ',', 'world', '!')

# Sentence BLEU on the 0-100 scale, with exponential smoothing and an
# effective-order geometric mean, so even short or partially matching
# hypotheses get a finite, comparable score.
ref = tokenize("the cat sat on the mat")
for hyp_text in (
    "the cat sat on the mat",
    "the cat sat on a mat",
    "a dog stood under a table",
):
    hyp = tokenize(hyp_text)
    print(f"{hyp_text!r:40} spBLEU = {spbleu(hyp, ref):6.2f}")

# Oscillatory hallucinations repeat phrases. The top-n-gram profile counts
# the most repeated contiguous n-gram (overlaps included).
loop = tokenize("x y z w x y z w x y z w")
print("top 4-gram of the loop:", top_ngram(loop, 4))

# The detector compares translation repetition against source repetition
# and only fires on low-quality translations (spBLEU at or under the gate).
src = tokenize("a perfectly ordinary source sentence")
flagged, evidence = detect_oscillatory(src, loop, TngParams(), spbleu_score=2.0)
print("flagged:", flagged)
print("evidence:", evidence)

# A reasonable-quality translation is excluded even if repetitive.
flagged, _ = detect_oscillatory(src, loop, TngParams(), spbleu_score=35.0)
print("flagged at spBLEU 35:", flagged)
