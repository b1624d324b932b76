"""
Scoring predictions
===================

Small worked examples for every metric, including the edge behaviours
worth remembering: the ANLS threshold, the 5% numeric tolerance of
relaxed accuracy, micro-averaged pair F1, and BLEU's clipping.
"""

from vistext import KVRecord, QARecord, anls, bleu, exact_accuracy, kv_f1, relaxed_accuracy

qa = [
    QARecord("q1", "mitchell bros.", ("Mitchell Bros.",)),   # exact after normalizing
    QARecord("q2", "mitchel bros", ("Mitchell Bros.",)),     # close: small edit distance
    QARecord("q3", "smith co", ("Mitchell Bros.",)),         # far: zeroed by the threshold
]
report = anls(qa)
print(f"ANLS over {report.count} answers: {report.value:.4f}")
for item_id, score in report.per_item:
    print(f"  {item_id}: {score:.4f}")

chart = [
    QARecord("c1", "104", ("100",)),   # within 5% of the gold number
    QARecord("c2", "106", ("100",)),   # 6% off: wrong
    QARecord("c3", "14.5%", ("14.5",)),
]
print(f"\nrelaxed accuracy: {relaxed_accuracy(chart).value:.4f}")

print(f"exact accuracy:   {exact_accuracy([QARecord('e1', ' Paris ', ('paris',))]).value:.4f}")

kv = [
    KVRecord("doc1",
             predicted_pairs=frozenset({("advertiser", "NBC"), ("amount", "500")}),
             gold_pairs=frozenset({("advertiser", "NBC"), ("amount", "550")})),
]
print(f"key-value F1:     {kv_f1(kv).value:.4f}")

candidates = ["the cat sat on the mat", "the the the"]
references = ["the cat sat on a mat", "the cat"]
print("\ncorpus BLEU (note the clipped 'the the the'):")
for r in bleu(candidates, references, max_n=4):
    print(f"  {r.metric}: {r.value:.4f}")
