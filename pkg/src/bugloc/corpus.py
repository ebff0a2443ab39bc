"""srcML consumption: code blocks, code characteristics and project corpora.

A source file is reduced to an ordered list of code blocks (token lists) plus
a bag of categorized names.  The XML is produced by the external ``srcml``
tool; this module only reads it.

Token emission rules
--------------------
C blocks hold the contents of one function body.  Declarations emit
``Decl`` (followed by ``ArryDecl`` when the declared name is indexed), the
full type text (``"FILE *"``), names and literals; calls emit ``FuncCall``
and their argument lists ``ExprList``.  Statement wrappers (``decl_stmt``,
``expr_stmt``, ``expr``, ...) are silent and any other markup passes through
under its raw srcML name (``if_stmt``, ``return``, ...).

Java blocks are one per import, class and function.  Markup tokens are the
lowercase element names with four renames (``parameters``, ``declaration``,
``expression``, ``arguments``); literals and declaration initializers are
not emitted.  A nested class or function becomes its own block.
"""

import enum
import json
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IoFailure, MalformedXml, MissingXml, UnsupportedLanguage

SRC_NS = "http://www.srcML.org/srcML/src"
CPP_NS = "http://www.srcML.org/srcML/cpp"

CORPUS_FORMAT_VERSION = 1

C_CATEGORIES = ("function", "struct", "cpp", "macro", "identifier", "typedef", "union")


class Language(str, enum.Enum):
    C = "C"
    JAVA = "Java"

    @property
    def extension(self):
        return ".c" if self is Language.C else ".java"

    @classmethod
    def parse(cls, value):
        if isinstance(value, Language):
            return value
        key = str(value).strip().lower()
        for lang in cls:
            if lang.value.lower() == key:
                return lang
        raise UnsupportedLanguage(f"unsupported language {value!r} (expected C or Java)")


class Origin(str, enum.Enum):
    FUNCTION = "Function"
    CLASS = "Class"
    IMPORT = "Import"
    FILE_LEVEL = "FileLevel"


class IngestMode(str, enum.Enum):
    SRCML = "srcml"
    PLAIN = "plain"

    @classmethod
    def parse(cls, value):
        if isinstance(value, IngestMode):
            return value
        key = str(value).strip().lower()
        aliases = {"srcml": cls.SRCML, "srcmlxml": cls.SRCML, "plain": cls.PLAIN, "plaintext": cls.PLAIN}
        if key not in aliases:
            raise ValueError(f"unknown ingest mode {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class CodeBlock:
    tokens: tuple
    origin: Origin


@dataclass
class CodeCharacteristics:
    """Categorized name bags.

    C units carry the seven categories of ``C_CATEGORIES``; Java units carry a
    single ``names`` list.
    """

    categories: dict

    @classmethod
    def empty(cls, language):
        if Language.parse(language) is Language.C:
            return cls({name: [] for name in C_CATEGORIES})
        return cls({"names": []})

    def all_tokens(self):
        out = []
        for values in self.categories.values():
            out.extend(values)
        return out

    def is_empty(self):
        return not any(self.categories.values())


@dataclass
class SourceUnit:
    path: str
    language: Language
    blocks: list
    characteristics: CodeCharacteristics

    def to_dict(self):
        return {
            "language": self.language.value,
            "blocks": [list(b.tokens) for b in self.blocks],
            "origins": [b.origin.value for b in self.blocks],
            "characteristics": {k: list(v) for k, v in self.characteristics.categories.items()},
        }

    @classmethod
    def from_dict(cls, path, data):
        origins = data.get("origins") or [Origin.FILE_LEVEL.value] * len(data["blocks"])
        blocks = [CodeBlock(tuple(toks), Origin(o)) for toks, o in zip(data["blocks"], origins)]
        chars = CodeCharacteristics({k: list(v) for k, v in data["characteristics"].items()})
        return cls(path, Language.parse(data["language"]), blocks, chars)


@dataclass
class Corpus:
    language: Language
    mode: IngestMode
    units: dict = field(default_factory=dict)
    problems: list = field(default_factory=list)
    root: str = ""

    def __len__(self):
        return len(self.units)

    def __iter__(self):
        return iter(self.units.values())

    def paths(self):
        return list(self.units)

    def to_dict(self, config=None):
        return {
            "format_version": CORPUS_FORMAT_VERSION,
            "language": self.language.value,
            "mode": self.mode.value,
            "root": self.root,
            "config": config or {},
            "problems": list(self.problems),
            "units": {p: u.to_dict() for p, u in self.units.items()},
        }

    @classmethod
    def from_dict(cls, data):
        units = {p: SourceUnit.from_dict(p, d) for p, d in data["units"].items()}
        return cls(
            Language.parse(data["language"]),
            IngestMode.parse(data.get("mode", "srcml")),
            units,
            list(data.get("problems", [])),
            data.get("root", ""),
        )

    def save(self, path, config=None):
        try:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(self.to_dict(config), fh, indent=1)
        except OSError as exc:
            raise IoFailure(f"cannot write corpus to {path}: {exc}") from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise IoFailure(f"cannot read corpus {path}: {exc}") from exc
        except ValueError as exc:
            raise MalformedXml(f"corpus file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


# ---------------------------------------------------------------------------
# XML helpers


def _local(el):
    tag = el.tag
    if not isinstance(tag, str):
        return ""
    if tag.startswith("{"):
        ns, _, name = tag[1:].partition("}")
        if ns == CPP_NS:
            return "cpp:" + name
        return name
    return tag


def _children(el):
    return [c for c in el if isinstance(c.tag, str)]


def _is_leaf(el):
    return not _children(el)


def _text(el):
    return (el.text or "").strip()


def _leaf_names(el):
    """Leaf ``name`` texts under ``el`` (inclusive), in document order."""
    if _local(el) == "name" and _is_leaf(el):
        t = _text(el)
        return [t] if t else []
    out = []
    for c in _children(el):
        if _local(c) in ("name",):
            out.extend(_leaf_names(c))
    return out


def _direct_name(el):
    for c in _children(el):
        if _local(c) == "name":
            return c
    return None


def _parse_root(xml_document):
    try:
        if isinstance(xml_document, bytes):
            root = ET.fromstring(xml_document)
        else:
            # ET refuses str input that carries an encoding declaration
            root = ET.fromstring(xml_document.encode("utf-8"))
    except ET.ParseError as exc:
        raise MalformedXml(f"not well-formed XML: {exc}") from exc
    if _local(root) != "unit":
        raise MalformedXml(f"top-level element is <{_local(root)}>, expected <unit>")
    # srcML archives wrap one unit per file inside an outer unit
    inner = [c for c in _children(root) if _local(c) == "unit"]
    if len(inner) == 1 and len(_children(root)) == 1:
        root = inner[0]
    return root


def _unit_language(root, language):
    attr = root.get("language")
    if attr is None:
        if language is None:
            raise UnsupportedLanguage("unit has no language attribute and none was given")
        return Language.parse(language)
    lang = Language.parse(attr)
    if language is not None and Language.parse(language) is not lang:
        raise UnsupportedLanguage(f"unit language {attr!r} does not match requested {language!r}")
    return lang


# ---------------------------------------------------------------------------
# C


_C_RENAMES = {"call": "FuncCall", "argument_list": "ExprList"}
_C_SILENT = {
    "decl_stmt", "expr_stmt", "expr", "argument", "block_content", "init",
    "index", "parameter", "name",
}
_C_SKIP = {"comment", "operator", "modifier"}


def _type_text(el):
    parts = []
    for node in el.iter():
        if node is el:
            continue
        if _local(node) in ("name", "modifier", "specifier") and _is_leaf(node):
            t = _text(node)
            if t:
                parts.append(t)
    return " ".join(parts)


def _decl_is_array(decl):
    name = _direct_name(decl)
    return name is not None and any(_local(c) == "index" for c in _children(name))


def _c_emit(el, out):
    tag = _local(el)
    if tag in _C_SKIP or tag.startswith("cpp:"):
        return
    if tag == "name" and _is_leaf(el):
        t = _text(el)
        if t:
            out.append(t)
        return
    if tag == "literal":
        t = _text(el)
        if t:
            out.append(t)
        return
    if tag == "type":
        t = _type_text(el)
        if t:
            out.append(t)
        return
    if tag == "decl":
        out.append("Decl")
        if _decl_is_array(el):
            out.append("ArryDecl")
    elif tag in _C_RENAMES:
        out.append(_C_RENAMES[tag])
    elif tag not in _C_SILENT:
        out.append(tag)
    for c in _children(el):
        _c_emit(c, out)


def _c_function_body(fn):
    body = None
    for c in _children(fn):
        if _local(c) == "block":
            body = c
    if body is None:
        return []
    content = [c for c in _children(body) if _local(c) == "block_content"]
    return _children(content[0]) if content else _children(body)


def _c_blocks(root):
    blocks = []

    def visit(el):
        for c in _children(el):
            if _local(c) == "function":
                tokens = []
                for stmt in _c_function_body(c):
                    _c_emit(stmt, tokens)
                blocks.append(CodeBlock(tuple(tokens), Origin.FUNCTION))
            else:
                visit(c)

    visit(root)
    return blocks


def _c_characteristics(root):
    cats = {name: [] for name in C_CATEGORIES}

    def add_direct_name(el, category):
        name = _direct_name(el)
        if name is not None:
            cats[category].extend(_leaf_names(name))
        return name

    def cpp(el):
        for node in el.iter():
            tag = _local(node)
            if tag == "cpp:file":
                t = "".join(node.itertext()).strip().strip('<>"')
                if t:
                    cats["cpp"].append(t)
            elif tag == "name" and _is_leaf(node):
                t = _text(node)
                if t:
                    cats["cpp"].append(t)

    def visit(el):
        tag = _local(el)
        if tag in ("comment", "literal", "operator"):
            return
        if tag.startswith("cpp:"):
            cpp(el)
            return
        if tag == "name":
            if _is_leaf(el):
                t = _text(el)
                if t:
                    cats["identifier"].append(t)
            else:
                for c in _children(el):
                    visit(c)
            return
        if tag == "type":
            # type names are not identifiers, but inline struct/union
            # definitions inside a type still count
            for c in _children(el):
                if _local(c) not in ("name", "modifier", "specifier"):
                    visit(c)
            return
        skip = None
        if tag in ("function", "function_decl", "call"):
            skip = add_direct_name(el, "function")
        elif tag in ("struct", "struct_decl"):
            skip = add_direct_name(el, "struct")
        elif tag in ("union", "union_decl"):
            skip = add_direct_name(el, "union")
        elif tag == "typedef":
            skip = add_direct_name(el, "typedef")
        elif tag == "macro":
            skip = add_direct_name(el, "macro")
        for c in _children(el):
            if c is not skip:
                visit(c)

    visit(root)
    return CodeCharacteristics(cats)


# ---------------------------------------------------------------------------
# Java


_JAVA_RENAMES = {
    "parameter_list": "parameters",
    "decl_stmt": "declaration",
    "expr": "expression",
    "argument_list": "arguments",
}
_JAVA_SILENT = {"parameter", "decl", "argument", "block_content", "expr_stmt", "index", "name"}
_JAVA_SKIP = {"comment", "operator", "literal"}
_JAVA_CONSTRUCTS = {
    "class": Origin.CLASS,
    "interface": Origin.CLASS,
    "enum": Origin.CLASS,
    "annotation_defn": Origin.CLASS,
    "function": Origin.FUNCTION,
    "function_decl": Origin.FUNCTION,
    "constructor": Origin.FUNCTION,
    "constructor_decl": Origin.FUNCTION,
    "import": Origin.IMPORT,
}


def _is_decl_init(el, parent):
    return _local(el) == "init" and parent is not None and _local(parent) == "decl"


def _java_blocks(root):
    blocks = []

    def emit(el, parent, out):
        tag = _local(el)
        if tag in _JAVA_SKIP or _is_decl_init(el, parent):
            return
        if tag in _JAVA_CONSTRUCTS:
            construct(el)
            return
        if tag == "name" and _is_leaf(el):
            t = _text(el)
            if t:
                out.append(t)
            return
        if tag == "specifier":
            t = _text(el)
            if t:
                out.append(t)
            return
        if tag in _JAVA_RENAMES:
            out.append(_JAVA_RENAMES[tag])
        elif tag not in _JAVA_SILENT:
            out.append(tag)
        for c in _children(el):
            emit(c, el, out)

    def construct(el):
        tokens = [_local(el)]
        index = len(blocks)
        blocks.append(None)
        for c in _children(el):
            emit(c, el, tokens)
        blocks[index] = CodeBlock(tuple(tokens), _JAVA_CONSTRUCTS[_local(el)])

    def visit(el):
        for c in _children(el):
            if _local(c) in _JAVA_CONSTRUCTS:
                construct(c)
            else:
                visit(c)

    visit(root)
    return blocks


def _java_characteristics(root):
    names = []

    def visit(el, parent):
        tag = _local(el)
        if tag == "comment" or _is_decl_init(el, parent):
            return
        if tag == "name" and _is_leaf(el):
            t = _text(el)
            if t:
                names.append(t)
            return
        for c in _children(el):
            visit(c, el)

    visit(root, None)
    return CodeCharacteristics({"names": names})


# ---------------------------------------------------------------------------
# Public operations


def parse_srcml_unit(xml_document, language=None, path=None):
    """Parse one srcML ``unit`` document into a :class:`SourceUnit`.

    ``language`` may be omitted when the unit carries a ``language``
    attribute.  ``path`` defaults to the unit's ``filename`` attribute.
    """
    root = _parse_root(xml_document)
    lang = _unit_language(root, language)
    if lang is Language.C:
        blocks, chars = _c_blocks(root), _c_characteristics(root)
    else:
        blocks, chars = _java_blocks(root), _java_characteristics(root)
    if path is None:
        path = root.get("filename", "")
    return SourceUnit(path, lang, blocks, chars)


def extract_characteristics(unit_xml, language=None):
    root = _parse_root(unit_xml)
    lang = _unit_language(root, language)
    if lang is Language.C:
        return _c_characteristics(root)
    return _java_characteristics(root)


def plain_unit(path, text, language):
    tokens = tuple(text.split())
    return SourceUnit(path, Language.parse(language), [CodeBlock(tokens, Origin.FILE_LEVEL)],
                      CodeCharacteristics.empty(language))


def _sibling_xml(source):
    for candidate in (source.with_name(source.name + ".xml"), source.with_suffix(".xml")):
        if candidate.is_file():
            return candidate
    return None


def ingest_tree(root, language, mode=IngestMode.SRCML):
    """Build a :class:`Corpus` from every ``.c``/``.java`` file under ``root``.

    Per-file failures (missing or malformed XML) are collected in
    ``Corpus.problems`` and the file is skipped.
    """
    lang = Language.parse(language)
    mode = IngestMode.parse(mode)
    root = Path(root)
    if not root.is_dir():
        raise IoFailure(f"source root {root} is not a directory")

    corpus = Corpus(lang, mode, root=str(root.resolve()))
    sources = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            if name.endswith(lang.extension):
                sources.append(Path(dirpath) / name)
    sources.sort(key=lambda p: p.relative_to(root).as_posix())

    for source in sources:
        rel = source.relative_to(root).as_posix()
        try:
            if mode is IngestMode.PLAIN:
                text = source.read_text(encoding="utf-8", errors="replace")
                corpus.units[rel] = plain_unit(rel, text, lang)
                continue
            xml_path = _sibling_xml(source)
            if xml_path is None:
                raise MissingXml(f"no srcML XML next to {rel}")
            unit = parse_srcml_unit(xml_path.read_bytes(), lang, path=rel)
            corpus.units[rel] = unit
        except (MissingXml, MalformedXml, UnsupportedLanguage) as exc:
            corpus.problems.append({"path": rel, "error": exc.code, "message": str(exc)})
        except OSError as exc:
            raise IoFailure(f"cannot read {source}: {exc}") from exc
    return corpus


def listing_blocks_json(unit):
    """Blocks in the ``{path: [[token, ...], ...]}`` listing layout."""
    return json.dumps({unit.path: [list(b.tokens) for b in unit.blocks]})


def listing_characteristics_json(unit):
    """Characteristics in the listing layout: categories for C, a flat list for Java."""
    if unit.language is Language.C:
        cats = unit.characteristics.categories
        payload = {name: list(cats.get(name, [])) for name in C_CATEGORIES}
    else:
        payload = unit.characteristics.all_tokens()
    return json.dumps({unit.path: payload})
