"""Line-oriented ``.nvs`` sequence files.

One directive per line, ``#`` starts a comment, blank lines are ignored::

    init ideal|paper
    mode ideal|full
    seed <int>
    shots <int>
    delay <float>us          | delay tau
    mw t=0,-1|0,+1 amp=<float>MHz ang=<float> ph=<float>
    u180e
    cleanup U|V
    laser <float>us
    swap
    measure fluor|populations|tomo
    sweep tau <start>us <stop>us <points>

Every problem in a file is reported (not just the first) as a
:class:`ParseDiagnostic` with 1-based line and column.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .engine import (
    CleanupU,
    CleanupV,
    Delay,
    Laser,
    Measure,
    MwPulse,
    Sequence,
    SwapEN,
    U180e,
)

_FLOAT = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_INT = re.compile(r"[+-]?\d+")
_TOKEN = re.compile(r"\S+")

SINGLETONS = ("init", "mode", "seed", "shots", "measure", "sweep")


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    token: str = ""

    def __str__(self):
        tok = f" (at {self.token!r})" if self.token else ""
        return f"{self.line}:{self.column}: {self.message}{tok}"


class ParseError(ValueError):
    def __init__(self, diagnostics: list[ParseDiagnostic], filename: str = "<nvs>"):
        self.diagnostics = diagnostics
        self.filename = filename
        super().__init__("\n".join(f"{filename}:{d}" for d in diagnostics))


@dataclass(frozen=True)
class Sweep:
    start: float
    stop: float
    points: int

    def grid(self):
        import numpy as np

        return np.linspace(self.start, self.stop, self.points)


@dataclass
class Program:
    """A parsed file: the sequence, option overrides and an optional sweep."""

    sequence: Sequence
    options: dict = field(default_factory=dict)
    sweep: Sweep | None = None

    @property
    def measurement(self) -> str:
        return self.sequence.measurement or "fluor"


@dataclass
class _Tok:
    text: str
    col: int


class _LineParser:
    def __init__(self, lineno: int, toks: list[_Tok], diags: list[ParseDiagnostic]):
        self.lineno = lineno
        self.toks = toks
        self.diags = diags

    def error(self, tok: _Tok | None, msg: str, col: int | None = None, text: str | None = None):
        if tok is None:
            tok = self.toks[-1]
            col = tok.col + len(tok.text)
            text = ""
        self.diags.append(ParseDiagnostic(self.lineno, col or tok.col, msg,
                                          tok.text if text is None else text))

    def arity(self, n: int, usage: str) -> bool:
        got = len(self.toks) - 1
        if got < n:
            self.error(None, f"missing argument; usage: {usage}")
            return False
        if got > n:
            self.error(self.toks[n + 1], f"unexpected extra argument; usage: {usage}")
            return False
        return True

    def number(self, tok: _Tok, text: str, col: int, what: str, *, unit: str | None = None,
               integer: bool = False, minimum: float | None = None):
        body = text
        if unit is not None:
            if not text.endswith(unit) or len(text) == len(unit):
                self.error(tok, f"{what} needs the '{unit}' unit suffix", col, text)
                return None
            body = text[: -len(unit)]
        pat = _INT if integer else _FLOAT
        if not pat.fullmatch(body):
            kind = "integer" if integer else "number"
            self.error(tok, f"malformed {kind} for {what}", col, text)
            return None
        value = int(body) if integer else float(body)
        if minimum is not None and value < minimum:
            self.error(tok, f"{what} must be >= {minimum:g}", col, text)
            return None
        if not integer and not math.isfinite(value):
            self.error(tok, f"{what} is not finite", col, text)
            return None
        return value

    def word(self, tok: _Tok, choices: tuple[str, ...], what: str, *, fold=True):
        val = tok.text.lower() if fold else tok.text
        opts = tuple(c.lower() for c in choices) if fold else choices
        if val not in opts:
            self.error(tok, f"{what} must be one of {', '.join(choices)}")
            return None
        return choices[opts.index(val)]


def _decode(src) -> tuple[str, list[ParseDiagnostic]]:
    if isinstance(src, str):
        return src, []
    data = bytes(src)
    if data.startswith(b"\xef\xbb\xbf"):
        data = data[3:]
    try:
        return data.decode("utf-8"), []
    except UnicodeDecodeError as exc:
        head = data[: exc.start]
        line = head.count(b"\n") + 1
        col = len(head) - (head.rfind(b"\n") + 1) + 1
        bad = data[exc.start:exc.end].hex()
        return "", [ParseDiagnostic(line, col, "invalid UTF-8 byte sequence", bad)]


def parse(src, name: str = "") -> Program:
    """Parse ``.nvs`` text (``str`` or UTF-8 ``bytes``).

    Raises
    ------
    ParseError
        carrying every :class:`ParseDiagnostic` found in the file.
    """
    text, diags = _decode(src)
    if diags:
        raise ParseError(diags, name or "<nvs>")
    elements: list = []
    options: dict = {}
    sweep: Sweep | None = None
    seen: dict[str, int] = {}
    tau_line: int | None = None
    measure_line: int | None = None
    sweep_line: int | None = None

    for lineno, raw in enumerate(text.split("\n"), 1):
        raw = raw[:-1] if raw.endswith("\r") else raw
        code = raw.split("#", 1)[0]
        toks = [_Tok(m.group(), m.start() + 1) for m in _TOKEN.finditer(code)]
        if not toks:
            continue
        lp = _LineParser(lineno, toks, diags)
        head = toks[0]
        cmd = head.text.lower()
        if cmd in SINGLETONS:
            if cmd in seen:
                lp.error(head, f"duplicate '{cmd}' directive (first on line {seen[cmd]})")
                continue
            seen[cmd] = lineno
        if measure_line is not None and cmd in ("delay", "mw", "u180e", "cleanup", "laser", "swap"):
            lp.error(head, f"sequence element after 'measure' (line {measure_line})")
            continue

        if cmd == "init":
            if lp.arity(1, "init ideal|paper"):
                v = lp.word(toks[1], ("ideal", "paper"), "init")
                if v:
                    options["init"] = v
        elif cmd == "mode":
            if lp.arity(1, "mode ideal|full"):
                v = lp.word(toks[1], ("ideal", "full"), "mode")
                if v:
                    options["mode"] = v
        elif cmd in ("seed", "shots"):
            if lp.arity(1, f"{cmd} <int>"):
                v = lp.number(toks[1], toks[1].text, toks[1].col, cmd, integer=True,
                              minimum=0 if cmd == "seed" else 1)
                if v is not None:
                    options[cmd] = v
        elif cmd == "delay":
            if lp.arity(1, "delay <float>us | delay tau"):
                t = toks[1]
                if t.text.lower() == "tau":
                    if tau_line is not None:
                        lp.error(t, f"only one symbolic delay is allowed (first on line {tau_line})")
                    else:
                        tau_line = lineno
                        elements.append(Delay(None))
                else:
                    v = lp.number(t, t.text, t.col, "delay", unit="us", minimum=0.0)
                    if v is not None:
                        elements.append(Delay(v))
        elif cmd == "laser":
            if lp.arity(1, "laser <float>us"):
                t = toks[1]
                v = lp.number(t, t.text, t.col, "laser duration", unit="us", minimum=0.0)
                if v is not None:
                    elements.append(Laser(v))
        elif cmd in ("u180e", "swap"):
            if lp.arity(0, cmd):
                elements.append(U180e() if cmd == "u180e" else SwapEN())
        elif cmd == "cleanup":
            if lp.arity(1, "cleanup U|V"):
                v = lp.word(toks[1], ("U", "V"), "cleanup type")
                if v:
                    elements.append(CleanupU() if v == "U" else CleanupV())
        elif cmd == "measure":
            if lp.arity(1, "measure fluor|populations|tomo"):
                v = lp.word(toks[1], ("fluor", "populations", "tomo"), "measurement")
                if v:
                    measure_line = lineno
                    elements.append(Measure(v))
        elif cmd == "mw":
            pulse = _parse_mw(lp)
            if pulse is not None:
                elements.append(pulse)
        elif cmd == "sweep":
            usage = "sweep tau <start>us <stop>us <points>"
            if lp.arity(4, usage):
                if toks[1].text.lower() != "tau":
                    lp.error(toks[1], "only 'tau' can be swept")
                start = lp.number(toks[2], toks[2].text, toks[2].col, "sweep start", unit="us", minimum=0.0)
                stop = lp.number(toks[3], toks[3].text, toks[3].col, "sweep stop", unit="us", minimum=0.0)
                pts = lp.number(toks[4], toks[4].text, toks[4].col, "sweep points", integer=True, minimum=1)
                if None not in (start, stop, pts) and toks[1].text.lower() == "tau":
                    sweep = Sweep(start, stop, pts)
                    sweep_line = lineno
        else:
            lp.error(head, f"unknown directive '{head.text}'")

    if sweep_line is not None and tau_line is None:
        diags.append(ParseDiagnostic(sweep_line, 1, "sweep given but no 'delay tau' in the sequence", "sweep"))
    if tau_line is not None and sweep_line is None and "sweep" not in seen:
        diags.append(ParseDiagnostic(tau_line, 1, "'delay tau' needs a 'sweep tau' directive", "delay"))
    if diags:
        diags.sort(key=lambda d: (d.line, d.column))
        raise ParseError(diags, name or "<nvs>")
    return Program(Sequence(tuple(elements), name), options, sweep)


def _parse_mw(lp: _LineParser) -> MwPulse | None:
    usage = "mw t=0,-1|0,+1 amp=<float>MHz ang=<float> ph=<float>"
    values: dict = {}
    ok = True
    for tok in lp.toks[1:]:
        key, sep, val = tok.text.partition("=")
        key = key.lower()
        vcol = tok.col + len(key) + 1
        if not sep or key not in ("t", "amp", "ang", "ph"):
            lp.error(tok, f"unexpected mw argument; usage: {usage}")
            ok = False
            continue
        if key in values:
            lp.error(tok, f"duplicate mw argument '{key}'")
            ok = False
            continue
        if key == "t":
            if val not in ("0,-1", "0,+1"):
                lp.error(tok, "transition must be 0,-1 or 0,+1", vcol, val)
                ok = False
                val = None
            values[key] = val
        elif key == "amp":
            v = lp.number(tok, val, vcol, "mw amplitude", unit="MHz")
            if v is not None and v <= 0:
                lp.error(tok, "mw amplitude must be > 0", vcol, val)
                v = None
            ok &= v is not None
            values[key] = v
        else:
            v = lp.number(tok, val, vcol, f"mw {key}")
            ok &= v is not None
            values[key] = v
    missing = [k for k in ("t", "amp", "ang", "ph") if k not in values]
    if missing:
        lp.error(None, f"mw is missing {', '.join(missing)}; usage: {usage}")
        return None
    if not ok:
        return None
    return MwPulse(values["t"], values["amp"], values["ph"], values["ang"])


# ---------------------------------------------------------------------------
# Serializer
# ---------------------------------------------------------------------------

def _time(x: float) -> str:
    return f"{x:.6g}us"


def _num(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def _element_line(e) -> str:
    if isinstance(e, Delay):
        return "delay tau" if e.symbolic else f"delay {_time(e.duration)}"
    if isinstance(e, MwPulse):
        return f"mw t={e.transition} amp={_num(e.rabi)}MHz ang={_num(e.angle)} ph={_num(e.phase)}"
    if isinstance(e, Laser):
        return f"laser {_time(e.duration)}"
    if isinstance(e, SwapEN):
        return "swap"
    if isinstance(e, U180e):
        return "u180e"
    if isinstance(e, CleanupU):
        return "cleanup U"
    if isinstance(e, CleanupV):
        return "cleanup V"
    if isinstance(e, Measure):
        return f"measure {e.kind}"
    raise TypeError(f"cannot serialize {e!r}")


def serialize(program: Program) -> str:
    """Canonical text: option lines first, then elements, then the sweep. LF line ends."""
    lines = []
    for key in ("init", "mode", "seed", "shots"):
        if key in program.options:
            lines.append(f"{key} {program.options[key]}")
    lines.extend(_element_line(e) for e in program.sequence)
    if program.sweep is not None:
        s = program.sweep
        lines.append(f"sweep tau {_time(s.start)} {_time(s.stop)} {s.points}")
    return "\n".join(lines) + "\n"
