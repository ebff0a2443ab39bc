"""Generated C projects with planted bug/file links, for smoke and end-to-end runs.

Every file owns one made-up word used as an identifier in its code; every
bug report names the word of the file its fix touched.  A small pool of
shared words appears in both code and reports so that unrelated files still
clear the textual-similarity threshold.
"""

from datetime import datetime, timedelta, timezone
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .bugc import dump_bugc
from .features import BugReport
from .textpipe import STOPWORDS, preprocess

SHARED = ("buffer", "socket", "parser", "config", "stream", "cursor", "packet", "window",
          "thread", "record")
_CONS = "bcdfghjklmnpqrstvwxz"
_VOWELS = "aeiou"

_HEAD = ('<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'
         '<unit xmlns="http://www.srcML.org/srcML/src" xmlns:cpp="http://www.srcML.org/srcML/cpp" '
         'revision="1.0.0" language="C" filename="{name}">')


def invented_words(count, rng):
    """Distinct pronounceable words whose stems are distinct too."""
    words, stems = [], set()
    while len(words) < count:
        w = "".join(rng.choice(list(_CONS if i % 2 == 0 else _VOWELS)) for i in range(7))
        toks = preprocess(w)
        if w in STOPWORDS or len(toks) != 1 or toks[0] in stems or w in SHARED:
            continue
        stems.add(toks[0])
        words.append(w)
    return words


def _name(text):
    return f"<name>{escape(text)}</name>"


def _decl(var, value):
    return (f'<decl_stmt><decl><type>{_name("int")}</type> {_name(var)} <init>= <expr>'
            f'<literal type="number">{value}</literal></expr></init></decl>;</decl_stmt>')


def _call(fn, arg):
    return (f"<expr_stmt><expr><call>{_name(fn)}<argument_list>(<argument><expr>{_name(arg)}"
            f"</expr></argument>)</argument_list></call></expr>;</expr_stmt>")


def _function(fn, locals_, callee):
    body = [_decl(v, i) for i, v in enumerate(locals_)]
    body.append(_call(callee, locals_[0]))
    body.append(f"<return>return <expr>{_name(locals_[0])}</expr>;</return>")
    return (f'<function><type>{_name("int")}</type> {_name(fn)}<parameter_list>()</parameter_list> '
            f'<block>{{<block_content>\n    ' + "\n    ".join(body) + "\n</block_content>}</block>"
            "</function>")


def _c_function(fn, locals_, callee):
    lines = [f"int {fn}() {{"]
    lines += [f"    int {v} = {i};" for i, v in enumerate(locals_)]
    lines += [f"    {callee}({locals_[0]});", f"    return {locals_[0]};", "}"]
    return "\n".join(lines)


def file_spec(word, rng):
    shared = [str(s) for s in rng.choice(SHARED, size=3, replace=False)]
    return [
        (f"{word}_open", [word, shared[0]], "log_event"),
        (f"{shared[1]}_update", [shared[1], shared[2]], f"{word}_open"),
    ]


def write_source(directory, name, functions):
    c_text = "\n\n".join(_c_function(*f) for f in functions) + "\n"
    xml = _HEAD.format(name=name) + "\n".join(_function(*f) for f in functions) + "</unit>\n"
    (directory / name).write_text(c_text, encoding="utf-8")
    (directory / f"{name}.xml").write_text(xml, encoding="utf-8")


def generate_project(root, n_files=30, n_bugs=40, seed=0, start=None):
    """Write ``root/src`` (C plus srcML XML) and ``root/bugs.json``.

    Bug ``j`` is fixed in file ``j mod n_files``.  Returns the bug reports.
    """
    rng = np.random.default_rng(seed)
    root = Path(root)
    src = root / "src"
    src.mkdir(parents=True, exist_ok=True)
    words = invented_words(n_files, rng)
    names = [f"mod{i:03d}.c" for i in range(n_files)]
    for name, word in zip(names, words):
        write_source(src, name, file_spec(word, rng))

    start = start or datetime(2020, 1, 1, tzinfo=timezone.utc)
    bugs = []
    for j in range(n_bugs):
        target = j % n_files
        noise = [str(s) for s in rng.choice(SHARED, size=2, replace=False)]
        bugs.append(BugReport(
            id=f"BUG-{j + 1:04d}",
            summary=f"{words[target]} returns wrong value",
            description=f"After the {noise[0]} is reset the {words[target]} path corrupts "
                        f"the {noise[1]} state.",
            reported_at=start + timedelta(days=7 * j, hours=int(rng.integers(0, 24))),
            fixed_files=frozenset({names[target]}),
            status="closed",
        ))
    dump_bugc(root / "bugs.json", "synthetic", bugs,
              {"repository": "synthetic://generated", "seed": seed})
    return bugs
