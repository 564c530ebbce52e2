import pytest

from scholareval.documents import (
    DocumentPipeline,
    FixturePdfFetcher,
    FixtureStructureParser,
    SectionHeuristics,
    StructuredDocument,
    download_pdf,
    extract_triplet,
    parse_tei,
)
from scholareval.errors import (
    CapacityError,
    DocumentParseError,
    DownloadError,
    ValidationError,
)

TEI = """<?xml version="1.0" encoding="UTF-8"?>
<TEI xmlns="http://www.tei-c.org/ns/1.0">
  <teiHeader>
    <fileDesc><titleStmt><title>Sample Paper</title></titleStmt></fileDesc>
    <profileDesc><abstract><p>The abstract text.</p></abstract></profileDesc>
  </teiHeader>
  <text><body>
    <div><head>Introduction</head><p>Intro text.</p></div>
    <div><head>Materials and Methods</head><p>Protocol A.</p><p>Protocol B.</p></div>
    <div><head>Results</head><p>Findings.</p></div>
    <div><head>Discussion</head><p>Notes.</p></div>
    <div><head>Methods Addendum</head><p>Extra.</p></div>
  </body></text>
</TEI>
"""


def _doc(sections, abstract="abs"):
    return StructuredDocument(title="t", abstract=abstract, sections=tuple(sections))


class TestDownload:
    def test_fixture_passthrough(self):
        payload = b"%PDF-1.4 content" * 1000
        fetcher = FixturePdfFetcher({"https://x/p.pdf": payload})
        assert download_pdf("https://x/p.pdf", fetcher) == payload

    def test_missing_link_is_download_error(self):
        with pytest.raises(DownloadError):
            download_pdf("https://x/404.pdf", FixturePdfFetcher({}))

    def test_over_cap_is_capacity_error(self):
        fetcher = FixturePdfFetcher({"https://x/big.pdf": b"x" * 2048}, size_cap=1024)
        with pytest.raises(CapacityError):
            download_pdf("https://x/big.pdf", fetcher)


class TestParseTei:
    def test_sections_in_reading_order(self):
        doc = parse_tei(TEI)
        assert doc.title == "Sample Paper"
        assert doc.abstract == "The abstract text."
        assert [title for title, _ in doc.sections] == [
            "Introduction", "Materials and Methods", "Results",
            "Discussion", "Methods Addendum",
        ]
        assert doc.sections[1][1] == "Protocol A.\nProtocol B."

    def test_unparseable_xml(self):
        with pytest.raises(DocumentParseError):
            parse_tei("<<<not xml")


class TestFixtureParser:
    def test_round_trip(self):
        parser = FixtureStructureParser(
            {"p1": {"title": "T", "abstract": "A", "sections": [["Methods", "M"]]}}
        )
        doc = parser.parse(FixtureStructureParser.encode("p1"))
        assert doc.sections == (("Methods", "M"),)

    def test_non_pdf_rejected(self):
        parser = FixtureStructureParser({})
        with pytest.raises(DocumentParseError):
            parser.parse(b"plain text, definitely not a pdf")


class TestExtractTriplet:
    heuristics = SectionHeuristics()

    def test_canonical_sections(self):
        doc = _doc([
            ("Introduction", "i"),
            ("Materials and Methods", "m"),
            ("Results", "r"),
            ("Discussion", "d"),
        ])
        assert extract_triplet(doc, self.heuristics) == ("abs", "m", "r")

    def test_no_matching_titles(self):
        doc = _doc([("Prelude", "x"), ("Coda", "y")])
        assert extract_triplet(doc, self.heuristics) == ("abs", None, None)

    def test_first_match_wins_on_duplicates(self):
        doc = _doc([("Methods", "first"), ("Methodology", "second")])
        assert extract_triplet(doc, self.heuristics)[1] == "first"

    def test_case_and_whitespace_invariant(self):
        doc = _doc([("  MATERIALS AND METHODS  ", "m"), ("results", "r")])
        assert extract_triplet(doc, self.heuristics) == ("abs", "m", "r")

    def test_numbered_headings_match(self):
        doc = _doc([("2. Methods", "m"), ("4 Results", "r")])
        assert extract_triplet(doc, self.heuristics) == ("abs", "m", "r")

    def test_word_boundary_matching(self):
        # "protocol" must not match inside an unrelated compound.
        doc = _doc([("Protocols", "nope"), ("Protocol", "yes")])
        assert extract_triplet(doc, self.heuristics)[1] == "yes"

    def test_heuristics_must_be_nonempty(self):
        with pytest.raises(ValidationError):
            SectionHeuristics(methods_titles=())

    def test_heuristics_load_from_config_file(self, tmp_path):
        path = tmp_path / "h.json"
        path.write_text(
            '{"methods_titles": ["trial design"], "results_titles": ["outcomes"]}'
        )
        heuristics = SectionHeuristics.from_file(path)
        doc = _doc([("Trial Design", "m"), ("Outcomes", "r")])
        assert extract_triplet(doc, heuristics) == ("abs", "m", "r")


class TestPipelineInstrumentation:
    def test_counts_download_and_parse_calls(self):
        url = "https://x/p1.pdf"
        fetcher = FixturePdfFetcher({url: FixtureStructureParser.encode("p1")})
        parser = FixtureStructureParser(
            {"p1": {"title": "T", "abstract": "A",
                    "sections": [["Methods", "M"], ["Results", "R"]]}}
        )
        pipeline = DocumentPipeline(fetcher, parser)
        assert pipeline.full_text_triplet(url) == ("A", "M", "R")
        assert pipeline.download_calls == 1
        assert pipeline.parse_calls == 1
