"""
Dictionary segmentation
=======================

Maximal matching picks the cut with the fewest unknown characters,
then the fewest tokens.
"""

from pathlib import Path

from thaiseq.segment import build_lexicon, load_lexicon, segment_maximal_matching

lex = load_lexicon(Path(__file__).parent / "data" / "lexicon.txt")

seg = segment_maximal_matching("ฉันชอบกินข้าวที่ร้านอาหาร", lex)
print(seg.tokens)
print(seg.spans)

# out-of-lexicon runs stay together as one token
seg = segment_maximal_matching("ฉันชอบpizzaมาก", lex)
print(list(zip(seg.tokens, seg.unknown)))

# longer entries win only when they lower the token count
toy = build_lexicon(["ab", "a", "b", "abc", "cd"])
for text in ["abcd", "abab", "xab"]:
    print(text, segment_maximal_matching(text, toy).tokens)
