import json

import pytest

from bugloc.corpus import (C_CATEGORIES, Corpus, IngestMode, Language, MalformedXml, Origin,
                           UnsupportedLanguage, extract_characteristics, ingest_tree,
                           listing_blocks_json, listing_characteristics_json, parse_srcml_unit)
from bugloc.errors import IoFailure

from conftest import FIXTURES

NS = 'xmlns="http://www.srcML.org/srcML/src" xmlns:cpp="http://www.srcML.org/srcML/cpp"'


def unit_xml(body, language="C", filename="f.c"):
    return (f'<?xml version="1.0" encoding="UTF-8"?><unit {NS} revision="1.0.0" '
            f'language="{language}" filename="{filename}">{body}</unit>')


def canonical(text):
    return json.dumps(json.loads(text))


@pytest.fixture(scope="module")
def c_unit():
    return parse_srcml_unit((FIXTURES / "test_astnn.c.xml").read_bytes())


@pytest.fixture(scope="module")
def java_unit():
    return parse_srcml_unit((FIXTURES / "test.java.xml").read_bytes())


class TestListings:
    def test_c_blocks_match_truncated_listing(self, c_unit):
        listing = (FIXTURES / "c_blocks_truncated.txt").read_text().rstrip()
        assert listing_blocks_json(c_unit).startswith(listing)

    def test_c_blocks_frozen(self, c_unit):
        assert listing_blocks_json(c_unit) == canonical((FIXTURES / "c_blocks.json").read_text())

    def test_c_characteristics(self, c_unit):
        expected = canonical((FIXTURES / "c_characteristics.json").read_text())
        assert listing_characteristics_json(c_unit) == expected

    def test_java_blocks(self, java_unit):
        expected = canonical((FIXTURES / "java_blocks.json").read_text())
        assert listing_blocks_json(java_unit) == expected
        assert [b.origin for b in java_unit.blocks] == [Origin.IMPORT, Origin.CLASS, Origin.FUNCTION]

    def test_java_characteristics(self, java_unit):
        expected = canonical((FIXTURES / "java_characteristics.json").read_text())
        assert listing_characteristics_json(java_unit) == expected

    def test_extract_characteristics_standalone(self):
        chars = extract_characteristics((FIXTURES / "test_astnn.c.xml").read_text())
        assert chars.categories["function"][:3] == ["main", "printf", "scanf"]


class TestCParsing:
    def test_empty_function_body(self):
        unit = parse_srcml_unit(unit_xml(
            "<function><type><name>void</name></type> <name>f</name>"
            "<parameter_list>()</parameter_list><block>{<block_content/>}</block></function>"))
        assert unit.characteristics.categories["function"] == ["f"]
        assert all(unit.characteristics.categories[c] == [] for c in C_CATEGORIES if c != "function")

    def test_no_functions_means_no_blocks(self):
        unit = parse_srcml_unit(unit_xml('<decl_stmt><decl><type><name>int</name></type> '
                                         '<name>g</name></decl>;</decl_stmt>'))
        assert unit.blocks == []
        assert set(unit.characteristics.categories) == set(C_CATEGORIES)

    def test_block_per_function(self):
        fn = ("<function><type><name>int</name></type> <name>{0}</name><parameter_list>()"
              "</parameter_list><block>{{<block_content><return>return <expr><literal "
              'type="number">1</literal></expr>;</return></block_content>}}</block></function>')
        unit = parse_srcml_unit(unit_xml(fn.format("a") + fn.format("b") + fn.format("c")))
        assert len(unit.blocks) == 3
        assert all(tok for b in unit.blocks for tok in b.tokens)

    def test_malformed(self):
        with pytest.raises(MalformedXml):
            parse_srcml_unit("<unit><function>")

    def test_unsupported_language(self):
        with pytest.raises(UnsupportedLanguage):
            parse_srcml_unit(unit_xml("", language="Python"))


class TestIngest:
    def _tree(self, tmp_path):
        src = tmp_path / "src"
        (src / "sub").mkdir(parents=True)
        xml = (FIXTURES / "test_astnn.c.xml").read_bytes()
        for rel in ("a.c", "sub/b.c"):
            (src / rel).write_text("int main() { return 0; }\n")
            (src / f"{rel}.xml").write_bytes(xml)
        (src / "a.h").write_text("#define X 1\n")
        return src

    def test_extension_filter(self, tmp_path):
        corpus = ingest_tree(self._tree(tmp_path), "c")
        assert corpus.paths() == ["a.c", "sub/b.c"]
        assert corpus.problems == []

    def test_empty_directory(self, tmp_path):
        assert len(ingest_tree(tmp_path, Language.C)) == 0

    def test_missing_xml_is_collected(self, tmp_path):
        src = self._tree(tmp_path)
        (src / "c.c").write_text("int x;")
        corpus = ingest_tree(src, "c")
        assert "c.c" not in corpus.units
        assert corpus.problems == [{"path": "c.c", "error": "MissingXml",
                                    "message": "no srcML XML next to c.c"}]

    def test_plain_mode_matches_whitespace_split(self, tmp_path):
        (tmp_path / "only.c").write_text("int  main ( ) {\n\treturn 0; }\n")
        corpus = ingest_tree(tmp_path, "c", IngestMode.PLAIN)
        unit = corpus.units["only.c"]
        assert len(unit.blocks) == 1 and unit.blocks[0].origin is Origin.FILE_LEVEL
        assert list(unit.blocks[0].tokens) == (tmp_path / "only.c").read_text().split()
        assert unit.characteristics.is_empty()

    def test_deterministic_and_round_trips(self, tmp_path):
        src = self._tree(tmp_path)
        a, b = ingest_tree(src, "c"), ingest_tree(src, "c")
        assert a.to_dict() == b.to_dict()
        a.save(tmp_path / "corpus.json")
        assert Corpus.load(tmp_path / "corpus.json").to_dict() == a.to_dict()

    def test_root_must_exist(self, tmp_path):
        with pytest.raises(IoFailure):
            ingest_tree(tmp_path / "nope", "c")
