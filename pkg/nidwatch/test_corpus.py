"""
Unit tests for corpus ingestion and normalization.
"""

import json
import random
from datetime import date

import pytest

from nidwatch.corpus import (
    Document, TokenizedDoc, Vocabulary, NormalizeOpts,
    ingest, emit, sources, tokenize, is_numeral, normalize, normalize_all,
    build_vocabulary, load_stopwords, load_lemma_map, lemmatizer_from_map,
)
from nidwatch.errors import CorpusError, VocabularyError


def write_lines(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


def record(doc_id, day, text="Corona lukker landet", source="politiken"):
    return {"id": doc_id, "date": day, "source": source, "text": text}


def tokdoc(doc_id, tokens):
    return TokenizedDoc(id=doc_id, date=date(2020, 3, 1), source="s", tokens=tuple(tokens))


class TestIngest:
    """Test JSONL ingestion."""

    def test_sorted_by_date(self, tmp_path):
        """Test documents come back sorted by date."""
        path = write_lines(tmp_path / "c.jsonl", [
            record("x", "2020-03-02"), record("y", "2019-12-01"), record("z", "2020-01-15"),
        ])
        docs = ingest(path)
        assert [d.date for d in docs] == [date(2019, 12, 1), date(2020, 1, 15), date(2020, 3, 2)]

    def test_ties_broken_by_id(self, tmp_path):
        """Test same-day documents are ordered by id."""
        path = write_lines(tmp_path / "c.jsonl", [record("b", "2020-03-01"), record("a", "2020-03-01")])
        assert [d.id for d in ingest(path)] == ["a", "b"]

    def test_empty_file(self, tmp_path):
        """Test an empty file yields no documents."""
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        assert ingest(path) == []

    def test_blank_lines_skipped(self, tmp_path):
        """Test blank lines are skipped."""
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(record("a", "2020-01-01")) + "\n\n" + json.dumps(record("b", "2020-01-02")) + "\n")
        assert len(ingest(path)) == 2

    def test_duplicate_id(self, tmp_path):
        """Test a duplicate id names both lines."""
        path = write_lines(tmp_path / "c.jsonl", [
            record("a0", "2020-01-01"), record("a1", "2020-01-02"), record("a2", "2020-01-03"),
            record("a3", "2020-01-04"), record("a1", "2020-01-05"),
        ])
        with pytest.raises(CorpusError, match="a1") as excinfo:
            ingest(path)
        assert "lines 2 and 5" in str(excinfo.value)

    def test_malformed_line_names_line(self, tmp_path):
        """Test malformed JSON names its line."""
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(record("a", "2020-01-01")) + "\n{not json\n")
        with pytest.raises(CorpusError, match="line 2"):
            ingest(path)

    def test_missing_field(self, tmp_path):
        """Test a record without a source is rejected."""
        path = write_lines(tmp_path / "c.jsonl", [{"id": "a", "date": "2020-01-01", "text": "x"}])
        with pytest.raises(CorpusError, match="source"):
            ingest(path)

    def test_unparseable_date_names_record(self, tmp_path):
        """Test an unparseable date names the record."""
        path = write_lines(tmp_path / "c.jsonl", [record("bad-doc", "1. marts 2020")])
        with pytest.raises(CorpusError, match="bad-doc"):
            ingest(path)

    def test_missing_file(self, tmp_path):
        """Test a missing corpus file."""
        with pytest.raises(FileNotFoundError):
            ingest(tmp_path / "nope.jsonl")

    def test_permutation_invariant(self, tmp_path):
        """Test shuffled input lines give the same corpus."""
        records = [record(f"d{i}", f"2020-01-{1 + i % 5:02d}") for i in range(12)]
        first = ingest(write_lines(tmp_path / "a.jsonl", records))
        shuffled = list(records)
        random.Random(3).shuffle(shuffled)
        second = ingest(write_lines(tmp_path / "b.jsonl", shuffled))
        assert first == second

    def test_emit_round_trip(self, tmp_path):
        """Test emitting and re-ingesting a corpus."""
        docs = [
            Document("b", date(2020, 3, 12), "berlingske", "Statsministeren: Danmark lukker ned"),
            Document("a", date(2020, 3, 11), "politiken", "Første smittede i æøå-land"),
        ]
        path = emit(sorted(docs, key=Document.sort_key), tmp_path / "out.jsonl")
        assert ingest(path) == sorted(docs, key=Document.sort_key)

    def test_sources(self):
        """Test listing sources."""
        docs = [Document("a", date(2020, 1, 1), "s2", "x"), Document("b", date(2020, 1, 1), "s1", "y")]
        assert sources(docs) == ["s1", "s2"]


class TestNormalize:
    """Test tokenization and normalization."""

    def doc(self, text):
        return Document("d", date(2020, 3, 11), "politiken", text)

    def test_basic_rules(self):
        """Test casefolding, numeral and stopword removal."""
        result = normalize(self.doc("The 2 Viruses SPREAD fast"), {"the", "fast"})
        assert result.tokens == ("viruses", "spread")

    def test_all_numerals(self):
        """Test a numerals-only text."""
        assert normalize(self.doc("123 456"), set()).tokens == ()

    def test_only_stopwords(self, fixtures_dir):
        """Test a stopwords-only text."""
        stopwords = load_stopwords(fixtures_dir / "stopwords_da.txt")
        assert normalize(self.doc("og i at det en den"), stopwords).tokens == ()

    def test_numeral_rule(self):
        """Test the numeral pattern."""
        assert is_numeral("1.000")
        assert is_numeral("11:30")
        assert not is_numeral("covid-19")
        assert not is_numeral("-")

    def test_tokenize_keeps_inner_punctuation(self):
        """Test tokenizing keeps inner hyphens and dots."""
        assert tokenize("covid-19 ramte 1.000 personer.") == ["covid-19", "ramte", "1.000", "personer"]

    def test_lemmatizer_hook(self, fixtures_dir):
        """Test the lemma map hook."""
        lemmatize = lemmatizer_from_map(load_lemma_map(fixtures_dir / "lemmas.tsv"))
        result = normalize(self.doc("Viruses spread"), set(), NormalizeOpts(lemmatizer=lemmatize))
        assert result.tokens == ("virus", "spread")

    def test_lemma_that_is_a_stopword_dropped(self):
        """Test a lemma that is a stopword is dropped."""
        lemmatize = lemmatizer_from_map({"viruses": "the"})
        result = normalize(self.doc("Viruses spread"), {"the"}, NormalizeOpts(lemmatizer=lemmatize))
        assert result.tokens == ("spread",)

    def test_lemma_that_is_a_numeral_dropped(self):
        """Test a lemma that is a numeral is dropped."""
        lemmatize = lemmatizer_from_map({"tusind": "1000"})
        result = normalize(self.doc("tusind smittede"), set(), NormalizeOpts(lemmatizer=lemmatize))
        assert result.tokens == ("smittede",)

    def test_custom_lemmatizer_casefolded(self):
        """Test output of a custom lemmatizer is casefolded and filtered."""
        result = normalize(self.doc("Corona Viruses"), set(), NormalizeOpts(lemmatizer=str.upper))
        assert result.tokens == ("corona", "viruses")

        lemmatize = lambda token: "VIRUS" if token == "viruses" else token
        result = normalize(self.doc("Corona Viruses"), {"virus"}, NormalizeOpts(lemmatizer=lemmatize))
        assert result.tokens == ("corona",)

    def test_min_token_length(self):
        """Test the minimum token length option."""
        result = normalize(self.doc("a bb ccc"), set(), NormalizeOpts(min_token_length=2))
        assert result.tokens == ("bb", "ccc")

    def test_idempotent(self):
        """Test normalizing twice changes nothing."""
        once = normalize(self.doc("Regeringen LUKKER skolerne 16. marts, siger Regeringen"), {"siger"})
        again = normalize(self.doc(" ".join(once.tokens)), {"siger"})
        assert again.tokens == once.tokens

    def test_order_preserved(self):
        """Test token order is preserved."""
        result = normalize_all([self.doc("zebra apple mango")], set())
        assert result[0].tokens == ("zebra", "apple", "mango")


class TestVocabulary:
    """Test vocabulary construction."""

    def test_min_count(self):
        """Test terms below min_count are dropped."""
        docs = [tokdoc("1", ["a", "b", "a"]), tokdoc("2", ["a"])]
        assert build_vocabulary(docs, min_count=2).terms == ("a",)

    def test_all_terms_sorted(self):
        """Test the vocabulary is sorted and indexed."""
        docs = [tokdoc("1", ["c", "a"]), tokdoc("2", ["b"])]
        vocab = build_vocabulary(docs)
        assert vocab.terms == ("a", "b", "c")
        assert vocab.index == {"a": 0, "b": 1, "c": 2}

    def test_empty_vocabulary(self):
        """Test an empty vocabulary is an error."""
        with pytest.raises(VocabularyError, match="empty vocabulary"):
            build_vocabulary([tokdoc("1", []), tokdoc("2", [])])

    def test_invalid_min_count(self):
        """Test min_count below one."""
        with pytest.raises(ValueError):
            build_vocabulary([tokdoc("1", ["a"])], min_count=0)

    def test_file_round_trip(self, tmp_path):
        """Test writing and reading a vocabulary file."""
        vocab = Vocabulary.from_terms(["smitte", "corona", "lockdown"])
        path = tmp_path / "vocabulary.txt"
        path.write_text(vocab.to_lines(), encoding="utf-8")
        assert Vocabulary.from_file(path) == vocab


class TestResources:
    """Test stopword and lemma loaders."""

    def test_stopwords_skip_comments(self, fixtures_dir):
        """Test comment lines in stopword files."""
        stopwords = load_stopwords(fixtures_dir / "stopwords_da.txt")
        assert "og" in stopwords
        assert not any(w.startswith("#") for w in stopwords)

    def test_malformed_lemma_line(self, tmp_path):
        """Test a malformed lemma map line names its line."""
        path = tmp_path / "lemmas.tsv"
        path.write_text("ok\tok\nbroken line\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="line 2"):
            load_lemma_map(path)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
