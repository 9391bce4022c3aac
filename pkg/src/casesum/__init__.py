"""Summary-guided legal case retrieval.

A retrieval pipeline for "given a query case, find the prior cases that
support its decision".  It combines two signal families:

* a neural phrase scoring model, trained so that summary-like phrases
  score higher than ordinary body phrases, from which each document gets
  a score-weighted latent vector and an extractive text summary;
* a battery of lexical overlap measures (n-gram, skip-bigram, LCS and
  weighted LCS) computed between several query/candidate document parts.

Both feature blocks feed a pairwise linear-SVM ranker whose top-k output
is scored with MRR / MAP / per-query P, R and F1.
"""

__version__ = "0.1.0"
