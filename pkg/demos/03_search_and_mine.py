"""Similarity search and unique-behavior mining over a labeled corpus.

Distance between labels is the summed edit distance of the two action
sequences (durations ignored); radius zero means exact behavioral match, and
a record whose exact-match set is empty is unique in the corpus.

Run:  python demos/03_search_and_mine.py
"""

from tap import (
    DOMAIN_THRESHOLDS,
    LabeledCorpus,
    PipelineConfig,
    ScriptMix,
    SearchQuery,
    distance,
    find_unique,
    generate_corpus,
    label_stats,
    label_trajectory,
    search,
)

print("=" * 64)
print(" 1. Synthesize and label 400 vehicles (2 engineered uniques)")
print("=" * 64)

corpus, truths = generate_corpus(
    400,
    ScriptMix(merge_fraction=0.03, stop_fraction=0.12, turn_fraction=0.35, n_unique=2),
    thresholds=DOMAIN_THRESHOLDS,
    seed=14,
)
config = PipelineConfig(thresholds=DOMAIN_THRESHOLDS)
labeled = LabeledCorpus(label_trajectory(t, config, level="action") for t in corpus)
print(f"  {len(labeled)} labeled records at level {labeled.level!r}")

print()
print("=" * 64)
print(" 2. Who behaves exactly like s00000/v0?")
print("=" * 64)

reference = labeled.get("s00000", "v0")
print("  reference lateral:     ", list(reference.lateral_labels()))
print("  reference longitudinal:", list(reference.longitudinal_labels()))
exact = search(labeled, SearchQuery(reference=reference, d_sim=0))
print(f"  exact matches: {len(exact)}")
for sid, vid, _ in exact[:5]:
    print(f"    {sid}/{vid}")

print()
print("=" * 64)
print(" 3. Widen the radius: behaviors within edit distance 3")
print("=" * 64)

near = search(labeled, SearchQuery(reference=reference, d_sim=3))
print(f"  records with distance < 3: {len(near)}")
for sid, vid, d in near[:5]:
    other = labeled.get(sid, vid)
    print(f"    d={d}  {sid}/{vid}  lateral={list(other.lateral_labels())}")

print()
print("=" * 64)
print(" 4. Mine unique behaviors (empty exact-match set)")
print("=" * 64)

unique = sorted(find_unique(labeled))
print(f"  {len(unique)} unique records")
for sid, vid in unique[:6]:
    label = labeled.get(sid, vid)
    print(f"    {sid}/{vid}  lateral={list(label.lateral_labels())} "
          f"longitudinal={list(label.longitudinal_labels())}")

# cross-check one of them the slow way
sid, vid = unique[0]
others = [distance(labeled.get(sid, vid), lab) for lab in labeled if lab.key != (sid, vid)]
print(f"  nearest other behavior for {sid}/{vid}: distance {min(others)}")

print()
print("=" * 64)
print(" 5. Corpus statistics")
print("=" * 64)

stats = label_stats(labeled)
merge_vehicles = sum(
    1 for label in labeled if any("Merge" in name for name in label.lateral_labels())
)
print(f"  records: {stats['n_records']}")
print(f"  distinct signatures: {len(stats['signature_counts'])}")
print(f"  vehicles with a merge: {merge_vehicles} ({merge_vehicles / len(labeled):.1%})")
print("  most common actions:")
for name, count in sorted(stats["segment_label_counts"].items(), key=lambda kv: -kv[1])[:6]:
    print(f"    {name:24s} {count}")
