"""Reference score programs, one per benchmark family, plus the seed program.

The programs are written in the score language with the parameter values
they shipped with.  Bounds default to [0, 1] except where a shipped value
falls outside that box.
"""

from __future__ import annotations

from .parser import ScoreProgram, parse_program

INITIAL = """spl/1
used_features: []
params: [0.5]
bounds: [[0, 1]]
score:
return param(0) * random()
"""

SETCOVER = """spl/1
used_features: [0, 7, 9, 43, 48, 67]
params: [1.0, 0.5887010792086566, 0.31746091541407373, 0.9398783973248053,
         0.6031768166959277, 0.2645470326979516, 0.6762821726601128]
bounds: [[0, 1], [0, 1], [0, 1], [0, 1], [0, 1], [0, 1], [0, 1]]
score:
let f = feature(9)
let centrality = 4.0 * f * (1.0 - f)
let activity = tanh(feature(48) * 0.4) * tanh(feature(67) * 0.06)
let synergy = tanh(abs(feature(0))) * centrality
let dual = tanh(abs(feature(7)) * 2.5)
let pc = log1p(abs(feature(43)) + 1e-8)
let importance = log1p(feature(67)) / 0.69314718055994529
let raw = (param(0) * centrality + param(1) * f + param(2) * pc
            + param(3) * activity + param(4) * synergy + param(5) * dual + param(6) * importance)
return log1p(exp(raw - 2.0))
"""

CAUCTIONS = """spl/1
used_features: [7, 9, 22, 39, 40, 43]
params: [0.0, 1.0, 1.0, 0.26450634387680155, 0.29613190117158167, 0.0]
bounds: [[0, 1], [0, 1], [0, 1], [0, 1], [0, 1], [0, 1]]
score:
let f = feature(9)
let importance = 4.0 * f * (1.0 - f)
let balance = 1.0 - abs(feature(39) - feature(40))
let combined = feature(39) + feature(40)
return (param(0) * feature(7) + param(1) * importance + param(2) * feature(22)
        + param(3) * balance + param(4) * combined + param(5) * feature(43))
"""

FACILITIES = """spl/1
used_features: [0, 7, 8, 9, 37, 39, 40, 43, 44, 45]
params: [0.04705795345254364, 0.6785051301493801, 0.2969679650822195, 0.6343660825577095,
         0.48452965740137316, 1.0, 0.33402312976578125, 0.16108144646419523,
         0.38212310014780954, 0.40656551874413094]
bounds: [[0, 1], [0, 1], [0, 1], [0, 1], [0, 1], [0, 1], [0, 1], [0, 1], [0, 1], [0, 1]]
score:
let f = feature(9)
let up = feature(39)
let down = feature(40)
let centrality = 4.0 * f * (1.0 - f)
let reliability = min(up, down) / (up + down + 1e-8)
let tightening = log1p(feature(44) + feature(45))
let scores = (param(0) * centrality + param(1) * sqrt(feature(43) + 1e-8)
            + param(2) * reliability + param(3) * feature(0) * centrality
            + param(4) * reliability * tightening + param(5) * feature(7) * centrality
            + param(6) * sqrt(feature(37) + 1e-8)
            + param(7) * tanh(feature(44) / (feature(45) + 1e-8) - 1.0)
            + param(8) * abs(feature(8)) + param(9) * (up + down))
return scores
"""

INDSET = """spl/1
used_features: [0, 7, 9, 22]
params: [1.0786976161645492, 0.23806897907821495, 1.2220001238555878, 0.9458262526360364]
bounds: [[0, 2], [0, 2], [0, 2], [0, 2]]
score:
let f = feature(9)
return (param(0) * feature(0) + param(1) * feature(7)
        + param(2) * (4.0 * f * (1.0 - f)) + param(3) * feature(22))
"""

ITEM_PLACEMENT = """spl/1
used_features: [41, 42, 43, 77]
params: [1.0, 0.9143725167306516]
bounds: [[0, 1], [0, 1]]
score:
let reliability = 1.0 / (1.0 + abs(feature(41) - 1.0))
let pseudo = feature(43) * reliability + 0.5 * feature(42)
return param(0) * pseudo + param(1) * feature(77)
"""

NNVERIFY = """spl/1
used_features: [0, 7, 9, 12, 41, 42, 90]
params: [0.09235624591252971, 0.008705701580663753, 0.38505830924832724]
bounds: [[0, 1], [0, 1], [0, 1]]
score:
let f = feature(9)
let frac_score = 4.0 * f * (1.0 - f)
let pc = param(0) * feature(42) + param(1) * feature(41)
let age_factor = 1.0 - 0.3 * feature(12)
let rc = abs(feature(7)) * (1.0 + abs(feature(0)))
return frac_score * pc * age_factor + param(2) * rc + 0.1 * feature(90)
"""

PROGRAMS = {
    "initial": INITIAL,
    "setcover": SETCOVER,
    "cauctions": CAUCTIONS,
    "facilities": FACILITIES,
    "indset": INDSET,
    "item_placement": ITEM_PLACEMENT,
    "nnverify": NNVERIFY,
}


def load(name: str) -> ScoreProgram:
    try:
        return parse_program(PROGRAMS[name])
    except KeyError:
        raise KeyError(f"no library program named {name!r}; known: {', '.join(PROGRAMS)}") from None
