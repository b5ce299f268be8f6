"""Plain-text scenario files: tokenizer, recursive-descent parser, canonical
serializer, and dotted-path overrides.

A scenario describes one two-regime system and an ordered list of tasks:

    name = relay_demo
    dimension = 2
    X = 0.2*x1 - x2 + 1, x1 + 0.2*x2 - 0.2
    Y = 0, 1
    h = x2
    domain = (-4, -2) .. (4, 4)

    [tolerances]
    rk_rtol = 1e-9

    [task simulate]
    start = (0, 2.5)
    time = 30

Comments run from `#` to the end of the line.  Polynomial components use
terms `c * x1^a * x2^b * x3^d` joined by `+`/`-`; the exponent defaults to 1
when omitted, the coefficient to 1, and whitespace is insignificant.
Coefficients are decimal literals (scientific notation allowed) or exact
fractions `p/q`; both are stored exactly.  Every parse and semantic error
carries the source line and column.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, fields as dc_fields
from fractions import Fraction

from .errors import ParseError, SemanticError
from .system import Box, PiecewiseSystem, SmoothField, Tolerances
from .polynomial import Polynomial

__all__ = ["Scenario", "parse_scenario", "serialize_scenario",
           "apply_overrides"]


# ---------------------------------------------------------------------------
# tokens

_PUNCT = ("..", "(", ")", "[", "]", ",", "=", "+", "-", "*", "^", "/")


@dataclass(frozen=True)
class _Token:
    kind: str          # NUM | IDENT | NEWLINE | EOF | one of _PUNCT
    text: str
    line: int
    col: int


def _tokenize(text):
    toks = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            toks.append(_Token("NEWLINE", "\n", line, col))
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "." and text[i:i + 2] == "..":
            toks.append(_Token("..", "..", line, col))
            i += 2
            col += 2
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                if text[j] == "." and text[j:j + 2] == "..":
                    break
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lexeme = text[i:j]
            if lexeme.count(".") > 1:
                raise ParseError("malformed number %r" % lexeme, line, col)
            toks.append(_Token("NUM", lexeme, line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Token("IDENT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in "()[],=+-*^/":
            toks.append(_Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError("unexpected character %r" % ch, line, col)
    toks.append(_Token("EOF", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# scenario object

_TASK_PARAMS = {
    "validate": {},
    "classify": {"samples": ("int", 2000)},
    "simulate": {"start": ("point", None), "time": ("num", None)},
    "detect": {"anchor": ("point", None), "normal": ("point", None),
               "radius": ("num", None), "sense": ("sense", "both"),
               "xi_window": ("num", 1.0), "seed": ("point", None),
               "settle": ("num", 0.0), "max_iter": ("int", 50),
               "region": ("box", None), "t_cap": ("num", 200.0)},
    "conley": {"box": ("box", None), "resolution": ("int", 64),
               "bloat": ("int", 1), "tau": ("num", None),
               "samples": ("int", 2), "pad": ("int", 4)},
    "regularize": {"eps": ("numlist", None), "t_cap": ("num", 200.0)},
}

_REQUIRED = {
    "simulate": ("start", "time"),
    "detect": ("anchor", "normal", "radius", "seed"),
    "regularize": ("eps",),
}

_TOL_FIELDS = {f.name for f in dc_fields(Tolerances)}


@dataclass
class Scenario:
    """A parsed scenario: system definition plus an ordered task list."""

    name: str
    dimension: int
    x_components: tuple
    y_components: tuple
    h: Polynomial
    domain: Box
    tolerance_overrides: dict = dc_field(default_factory=dict)
    tasks: tuple = ()

    def tolerances(self):
        return Tolerances().with_overrides(**self.tolerance_overrides)

    def system(self) -> PiecewiseSystem:
        return PiecewiseSystem(SmoothField(self.x_components),
                               SmoothField(self.y_components),
                               self.h, self.domain,
                               tol=self.tolerances(), name=self.name)

    def task(self, kind):
        """Parameters of the first task of the given kind, or None."""
        for name, params in self.tasks:
            if name == kind:
                return params
        return None


# ---------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.pos = 0

    # -- token plumbing ------------------------------------------------------

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def expect(self, kind):
        t = self.peek()
        if t.kind != kind:
            raise ParseError("expected %s, found %r" % (kind, t.text or "end of file"),
                             t.line, t.col)
        return self.next()

    def skip_newlines(self):
        while self.peek().kind == "NEWLINE":
            self.next()

    def end_of_line(self):
        t = self.peek()
        if t.kind not in ("NEWLINE", "EOF"):
            raise ParseError("unexpected %r after value" % t.text, t.line, t.col)
        if t.kind == "NEWLINE":
            self.next()

    # -- value grammar -------------------------------------------------------

    def number(self):
        sign = 1.0
        t = self.peek()
        if t.kind in ("+", "-"):
            sign = -1.0 if t.kind == "-" else 1.0
            self.next()
        t = self.expect("NUM")
        return sign * float(t.text)

    def integer(self):
        t = self.peek()
        v = self.number()
        if v != int(v):
            raise SemanticError("expected an integer, found %s" % t.text,
                                t.line, t.col)
        return int(v)

    def point(self):
        self.expect("(")
        vals = [self.number()]
        while self.peek().kind == ",":
            self.next()
            vals.append(self.number())
        self.expect(")")
        return tuple(vals)

    def box(self):
        t = self.peek()
        lo = self.point()
        self.expect("..")
        hi = self.point()
        if len(lo) != len(hi):
            raise SemanticError("box corners differ in dimension", t.line, t.col)
        return (lo, hi)

    def numlist(self):
        vals = [self.number()]
        while self.peek().kind == ",":
            self.next()
            vals.append(self.number())
        return tuple(vals)

    def sense(self):
        t = self.peek()
        if t.kind == "IDENT":
            if t.text not in ("positive", "negative", "both"):
                raise SemanticError("crossing sense must be positive, negative,"
                                    " both, or -1/0/1", t.line, t.col)
            self.next()
            return t.text
        v = self.integer()
        if v not in (-1, 0, 1):
            raise SemanticError("crossing sense must be positive, negative, "
                                "both, or -1/0/1", t.line, t.col)
        return v

    # -- polynomial grammar ----------------------------------------------------

    def coefficient(self):
        t = self.expect("NUM")
        c = Fraction(t.text)
        if self.peek().kind == "/":
            self.next()
            d = self.expect("NUM")
            den = Fraction(d.text)
            if den == 0:
                raise SemanticError("zero denominator in coefficient",
                                    d.line, d.col)
            c /= den
        return c

    def variable(self, nvars):
        t = self.expect("IDENT")
        name = t.text
        if not (len(name) >= 2 and name[0] == "x" and name[1:].isdigit()):
            raise SemanticError("unknown symbol %r (variables are x1..x%d)"
                                % (name, nvars), t.line, t.col)
        idx = int(name[1:])
        if not 1 <= idx <= nvars:
            raise SemanticError("variable %s out of range for dimension %d"
                                % (name, nvars), t.line, t.col)
        return idx - 1

    def poly_term(self, nvars):
        """One product of an optional coefficient and powered variables."""
        coeff = Fraction(1)
        expo = [0] * nvars
        saw_factor = False
        if self.peek().kind == "NUM":
            coeff = self.coefficient()
            saw_factor = True
            if self.peek().kind == "*":
                self.next()
            else:
                return coeff, tuple(expo)
        while True:
            if self.peek().kind != "IDENT":
                t = self.peek()
                if saw_factor:
                    raise ParseError("expected a variable, found %r" % t.text,
                                     t.line, t.col)
                raise ParseError("expected a term, found %r"
                                 % (t.text or "end of file"), t.line, t.col)
            i = self.variable(nvars)
            power = 1
            if self.peek().kind == "^":
                self.next()
                p = self.expect("NUM")
                if not p.text.isdigit() or int(p.text) == 0:
                    raise SemanticError("exponent must be a positive integer",
                                        p.line, p.col)
                power = int(p.text)
            expo[i] += power
            saw_factor = True
            if self.peek().kind == "*":
                self.next()
                continue
            return coeff, tuple(expo)

    def polynomial(self, nvars):
        terms = {}

        def add(c, e):
            terms[e] = terms.get(e, Fraction(0)) + c
            if terms[e] == 0:
                del terms[e]

        negate = False
        t = self.peek()
        if t.kind in ("+", "-"):
            negate = t.kind == "-"
            self.next()
        c, e = self.poly_term(nvars)
        add(-c if negate else c, e)
        while self.peek().kind in ("+", "-"):
            negate = self.next().kind == "-"
            c, e = self.poly_term(nvars)
            add(-c if negate else c, e)
        return Polynomial(nvars, terms)

    def poly_list(self, nvars):
        polys = [self.polynomial(nvars)]
        while self.peek().kind == ",":
            self.next()
            polys.append(self.polynomial(nvars))
        return tuple(polys)

    # -- file structure --------------------------------------------------------

    def parse(self) -> Scenario:
        top = {}
        top_locs = {}
        tol = {}
        tasks = []
        current = None        # None = top level, "tolerances", or task params
        current_task = None

        self.skip_newlines()
        while self.peek().kind != "EOF":
            t = self.peek()
            if t.kind == "[":
                self.next()
                head = self.expect("IDENT")
                if head.text == "tolerances":
                    self.expect("]")
                    current, current_task = "tolerances", None
                elif head.text == "task":
                    kind_tok = self.expect("IDENT")
                    self.expect("]")
                    if kind_tok.text not in _TASK_PARAMS:
                        raise SemanticError(
                            "unknown task %r (one of %s)"
                            % (kind_tok.text, ", ".join(sorted(_TASK_PARAMS))),
                            kind_tok.line, kind_tok.col)
                    params = {}
                    tasks.append((kind_tok.text, params, kind_tok))
                    current, current_task = "task", (kind_tok.text, params)
                else:
                    raise ParseError("unknown section %r" % head.text,
                                     head.line, head.col)
                self.end_of_line()
                self.skip_newlines()
                continue
            key_tok = self.expect("IDENT")
            self.expect("=")
            if current is None:
                self._top_value(key_tok, top, top_locs)
            elif current == "tolerances":
                self._tol_value(key_tok, tol)
            else:
                self._task_value(key_tok, current_task)
            self.end_of_line()
            self.skip_newlines()
        return self._assemble(top, top_locs, tol, tasks)

    def _top_value(self, key_tok, top, top_locs):
        key = key_tok.text
        if key in top:
            raise SemanticError("duplicate key %r" % key,
                                key_tok.line, key_tok.col)
        top_locs[key] = key_tok
        if key == "name":
            t = self.expect("IDENT")
            top[key] = t.text
        elif key == "dimension":
            top[key] = self.integer()
        elif key in ("X", "Y", "h"):
            # polynomial parsing needs the dimension; defer via token slice
            start = self.pos
            depth_guard = 0
            while self.peek().kind not in ("NEWLINE", "EOF"):
                self.next()
                depth_guard += 1
                if depth_guard > 10000:
                    break
            top[key] = (start, self.pos)
        elif key == "domain":
            top[key] = self.box()
        else:
            raise SemanticError("unknown key %r (top level takes name, "
                                "dimension, X, Y, h, domain)" % key,
                                key_tok.line, key_tok.col)

    def _tol_value(self, key_tok, tol):
        key = key_tok.text
        if key not in _TOL_FIELDS:
            raise SemanticError("unknown tolerance %r" % key,
                                key_tok.line, key_tok.col)
        if key in tol:
            raise SemanticError("duplicate tolerance %r" % key,
                                key_tok.line, key_tok.col)
        v = self.number()
        tol[key] = int(v) if key == "max_switches" else v

    def _task_value(self, key_tok, current_task):
        kind, params = current_task
        table = _TASK_PARAMS[kind]
        key = key_tok.text
        if key not in table:
            raise SemanticError("task %s takes no parameter %r (allowed: %s)"
                                % (kind, key,
                                   ", ".join(sorted(table)) or "none"),
                                key_tok.line, key_tok.col)
        if key in params:
            raise SemanticError("duplicate parameter %r" % key,
                                key_tok.line, key_tok.col)
        params[key] = self._typed_value(table[key][0])

    def _typed_value(self, typ):
        if typ == "num":
            return self.number()
        if typ == "int":
            return self.integer()
        if typ == "point":
            return self.point()
        if typ == "box":
            return self.box()
        if typ == "numlist":
            return self.numlist()
        if typ == "sense":
            return self.sense()
        raise AssertionError("unhandled value type %r" % typ)

    def _reparse_poly(self, span, nvars, want_list):
        saved = self.pos
        self.pos = span[0]
        try:
            out = self.poly_list(nvars) if want_list else self.polynomial(nvars)
            if self.pos != span[1]:
                t = self.peek()
                raise ParseError("unexpected %r in expression" % t.text,
                                 t.line, t.col)
        finally:
            self.pos = saved
        return out

    def _assemble(self, top, top_locs, tol, tasks):
        for key in ("dimension", "X", "Y", "h", "domain"):
            if key not in top:
                t = self.toks[-1]
                raise SemanticError("scenario is missing %r" % key,
                                    t.line, t.col)
        nvars = top["dimension"]
        if nvars not in (2, 3):
            t = top_locs["dimension"]
            raise SemanticError("dimension must be 2 or 3", t.line, t.col)
        x_comp = self._reparse_poly(top["X"], nvars, want_list=True)
        y_comp = self._reparse_poly(top["Y"], nvars, want_list=True)
        h_polys = self._reparse_poly(top["h"], nvars, want_list=True)
        if len(h_polys) != 1:
            t = top_locs["h"]
            raise SemanticError("h must be a single polynomial", t.line, t.col)
        for label, comp in (("X", x_comp), ("Y", y_comp)):
            if len(comp) != nvars:
                t = top_locs[label]
                raise SemanticError(
                    "%s has %d components for dimension %d"
                    % (label, len(comp), nvars), t.line, t.col)
        lo, hi = top["domain"]
        if len(lo) != nvars:
            t = top_locs["domain"]
            raise SemanticError("domain box dimension mismatch", t.line, t.col)
        if not tasks:
            t = self.toks[-1]
            raise SemanticError("scenario declares no tasks", t.line, t.col)
        done = []
        for kind, params, head_tok in tasks:
            table = _TASK_PARAMS[kind]
            for param in _REQUIRED.get(kind, ()):
                if param not in params:
                    raise SemanticError("task %s requires %r" % (kind, param),
                                        head_tok.line, head_tok.col)
            for param, (typ, default) in table.items():
                if param not in params and default is not None:
                    params[param] = default
            if kind == "detect":
                for param in ("anchor", "normal", "seed"):
                    if len(params[param]) != nvars:
                        raise SemanticError(
                            "detect %s has dimension %d, expected %d"
                            % (param, len(params[param]), nvars),
                            head_tok.line, head_tok.col)
            done.append((kind, params))
        return Scenario(
            name=top.get("name", "unnamed"),
            dimension=nvars,
            x_components=x_comp,
            y_components=y_comp,
            h=h_polys[0],
            domain=Box(tuple(float(v) for v in lo),
                       tuple(float(v) for v in hi)),
            tolerance_overrides=tol,
            tasks=tuple((k, dict(p)) for k, p in done),
        )


def parse_scenario(text: str) -> Scenario:
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# serialization

def _fraction_text(c: Fraction) -> str:
    """Decimal form when exact (denominator 2^a * 5^b), else `p/q`."""
    num, den = c.numerator, c.denominator
    if den == 1:
        return str(num)
    d = den
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return "%d/%d" % (num, den)
    k = max(twos, fives)
    scaled = abs(num) * (2 ** (k - twos)) * (5 ** (k - fives))
    digits = str(scaled).rjust(k + 1, "0")
    text = "%s.%s" % (digits[:-k], digits[-k:])
    return "-" + text if num < 0 else text


def _poly_text(p: Polynomial) -> str:
    if not p.terms:
        return "0"
    parts = []
    for expo, c in p.term_list():
        factors = []
        if c < 0:
            sign = "-"
            c = -c
        else:
            sign = "+"
        if c != 1 or not any(expo):
            factors.append(_fraction_text(c))
        for i, e in enumerate(expo):
            if e == 1:
                factors.append("x%d" % (i + 1))
            elif e > 1:
                factors.append("x%d^%d" % (i + 1, e))
        parts.append((sign, "*".join(factors)))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, chunk in parts[1:]:
        out += " %s %s" % (sign, chunk)
    return out


def _num_text(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, int) or (isinstance(v, float) and v == int(v)
                              and abs(v) < 1e15):
        return str(int(v))
    return repr(float(v))


def _point_text(p) -> str:
    return "(%s)" % ", ".join(_num_text(v) for v in p)


def serialize_scenario(sc: Scenario) -> str:
    """Canonical text form; parsing it back yields an equal Scenario."""
    lines = ["name = %s" % sc.name,
             "dimension = %d" % sc.dimension,
             "X = %s" % ", ".join(_poly_text(p) for p in sc.x_components),
             "Y = %s" % ", ".join(_poly_text(p) for p in sc.y_components),
             "h = %s" % _poly_text(sc.h),
             "domain = %s .. %s" % (_point_text(sc.domain.lo),
                                    _point_text(sc.domain.hi))]
    if sc.tolerance_overrides:
        lines.append("")
        lines.append("[tolerances]")
        for key in sorted(sc.tolerance_overrides):
            lines.append("%s = %s" % (key,
                                      _num_text(sc.tolerance_overrides[key])))
    for kind, params in sc.tasks:
        lines.append("")
        lines.append("[task %s]" % kind)
        for key in sorted(params):
            val = params[key]
            if val is None:
                continue
            typ = _TASK_PARAMS[kind][key][0]
            if typ == "point":
                text = _point_text(val)
            elif typ == "box":
                text = "%s .. %s" % (_point_text(val[0]), _point_text(val[1]))
            elif typ == "numlist":
                text = ", ".join(_num_text(v) for v in val)
            else:
                text = _num_text(val)
            lines.append("%s = %s" % (key, text))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# overrides

def apply_overrides(sc: Scenario, assignments) -> Scenario:
    """Apply `section.key=value` strings (CLI --set) onto a scenario.

    Sections are `tolerances`, a task kind, or the top-level keys name /
    dimension / X / Y / h / domain addressed directly.  Values are parsed
    with the same grammar as scenario files.
    """
    for item in assignments:
        if "=" not in item:
            raise SemanticError("override %r is not of the form key=value"
                                % item)
        path, _, raw = item.partition("=")
        path = path.strip()
        raw = raw.strip()
        parts = path.split(".")
        parser = _Parser(raw + "\n")
        try:
            if len(parts) == 1 and parts[0] in ("name", "dimension", "X", "Y",
                                                "h", "domain"):
                sc = _override_top(sc, parts[0], parser)
            elif len(parts) == 2 and parts[0] == "tolerances":
                if parts[1] not in _TOL_FIELDS:
                    raise SemanticError("unknown tolerance %r" % parts[1])
                v = parser.number()
                tol = dict(sc.tolerance_overrides)
                tol[parts[1]] = int(v) if parts[1] == "max_switches" else v
                sc = Scenario(sc.name, sc.dimension, sc.x_components,
                              sc.y_components, sc.h, sc.domain, tol, sc.tasks)
            elif len(parts) == 2 and parts[0] in _TASK_PARAMS:
                sc = _override_task(sc, parts[0], parts[1], parser)
            else:
                raise SemanticError("override path %r not recognized" % path)
        except (ParseError, SemanticError) as exc:
            raise type(exc)("in override %r: %s" % (item, exc.args[0]))
    # re-validate the assembled scenario via a round trip
    parse_scenario(serialize_scenario(sc))
    return sc


def _override_top(sc, key, parser):
    if key == "name":
        val = parser.expect("IDENT").text
        return Scenario(val, sc.dimension, sc.x_components, sc.y_components,
                        sc.h, sc.domain, sc.tolerance_overrides, sc.tasks)
    if key == "dimension":
        raise SemanticError("dimension cannot be overridden; edit the "
                            "scenario file")
    if key == "domain":
        lo, hi = parser.box()
        return Scenario(sc.name, sc.dimension, sc.x_components,
                        sc.y_components, sc.h,
                        Box(tuple(float(v) for v in lo),
                            tuple(float(v) for v in hi)),
                        sc.tolerance_overrides, sc.tasks)
    n = sc.dimension
    if key == "h":
        poly = parser.polynomial(n)
        return Scenario(sc.name, sc.dimension, sc.x_components,
                        sc.y_components, poly, sc.domain,
                        sc.tolerance_overrides, sc.tasks)
    comps = parser.poly_list(n)
    if len(comps) != n:
        raise SemanticError("%s needs %d components" % (key, n))
    if key == "X":
        return Scenario(sc.name, sc.dimension, comps, sc.y_components, sc.h,
                        sc.domain, sc.tolerance_overrides, sc.tasks)
    return Scenario(sc.name, sc.dimension, sc.x_components, comps, sc.h,
                    sc.domain, sc.tolerance_overrides, sc.tasks)


def _override_task(sc, kind, param, parser):
    table = _TASK_PARAMS[kind]
    if param not in table:
        raise SemanticError("task %s takes no parameter %r" % (kind, param))
    value = parser._typed_value(table[param][0])
    tasks = []
    hit = False
    for name, params in sc.tasks:
        if name == kind and not hit:
            params = dict(params)
            params[param] = value
            hit = True
        tasks.append((name, params))
    if not hit:
        tasks.append((kind, {param: value}))
        for p in _REQUIRED.get(kind, ()):
            if p != param:
                raise SemanticError("task %s added by override is missing "
                                    "required %r" % (kind, p))
    return Scenario(sc.name, sc.dimension, sc.x_components, sc.y_components,
                    sc.h, sc.domain, sc.tolerance_overrides, tuple(tasks))
