"""
Reading treebanks and mining LVC candidates
===========================================

Parse a small CoNLL-U document, look at what the reader keeps and drops,
then run both extraction rules and the review round trip.
"""

import tempfile
from pathlib import Path

from turklvc.conllu import parse_conllu, serialize_conllu
from turklvc.mock import mock_treebank
from turklvc.supervision import (
    apply_review, assemble_dataset, export_review_sheet, extract_candidates,
    read_review_sheet,
)

# a sentence with a multiword range, an empty node and an explicit LVC arc
DOC = """# sent_id = demo-1
# text = Ali'ye karar verdi
1-2\tAli'ye\t_\t_\t_\t_\t_\t_\t_\t_
1\tAli\tAli\tPROPN\t_\tCase=Nom\t4\tnsubj\t_\t_
2\t'ye\te\tADP\t_\t_\t1\tcase\t_\t_
3\tkarar\tkarar\tNOUN\t_\tCase=Nom|Number=Sing\t4\tcompound:lvc\t_\t_
3.1\tx\tx\tX\t_\t_\t_\t_\t3:dep\t_
4\tverdi\tver\tVERB\t_\tTense=Past\t0\troot\t_\t_

"""

tb = parse_conllu(DOC, name="demo")
s = tb.sentences[0]
print("tokens :", [t.form for t in s.tokens])
print("ranges :", s.ranges)
print("stats  :", tb.stats.as_dict())

# serialization drops the empty node and is otherwise faithful
print(serialize_conllu(tb))

# explicit compound:lvc arcs win whenever a treebank has any
cands, rule = extract_candidates(tb)
print(rule, [(c.dep_lemma, c.head_lemma) for c in cands])

# a treebank without them falls back to noun-verb compounds
plain = mock_treebank(20, seed=4, name="plain", explicit=False, positive_rate=0.4)
cands, rule = extract_candidates(plain)
print(rule, len(cands), "candidates")

# review: write the sheet, strike the first candidate, read it back
work = Path(tempfile.mkdtemp())
sheet = work / "review.tsv"
export_review_sheet(cands, sheet)
lines = sheet.read_text(encoding="utf-8").splitlines()
lines[1] = lines[1].rsplit("\t", 1)[0] + "\tremove"
sheet.write_text("\n".join(lines) + "\n", encoding="utf-8")

kept, removed = apply_review(cands, read_review_sheet(sheet))
dataset, stats = assemble_dataset([plain], kept, removed)
print(stats.as_dict())
