"""Lexicon sentiment: map each document to counts, reduce per firm, keep positive firms."""

# %%
from portfolio_engine.core_data import Document
from portfolio_engine.sentiment import count_corpus, default_lexicon, positive_firms, score_firm

docs = [
    Document("ACME", "2024-01-02T09:00:00Z", "Record profit and strong growth, analysts upgrade."),
    Document("ACME", "2024-01-05T09:00:00Z", "A minor lawsuit was settled."),
    Document("BOLT", "2024-01-03T09:00:00Z", "Weak quarter: revenue decline and layoffs."),
    Document("CORE", "2024-01-04T09:00:00Z", "The board meeting is scheduled for March."),
]
lexicon = default_lexicon()

# %%
# Counting is a pure map plus an integer sum, so any sharding gives identical totals.
for workers in (1, 4):
    counts = count_corpus(docs, lexicon, ["ACME", "BOLT", "CORE"], workers=workers)
    print(f"workers={workers}:", [(c.firm_id, c.pos, c.neg) for c in counts])

scores = [score_firm(c) for c in counts]
for s in scores:
    print(f"{s.firm_id}: score={s.score:+.3f} from {s.total_tokens_matched} matched words")
# Firms with no evidence score exactly 0 and are dropped by the strict gate.
print("passes the gate:", positive_firms(scores))
