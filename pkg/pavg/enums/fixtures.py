"""Fixtures transcribed from the printed quintic example.

The resolvent sextic below is stored exactly as printed, ascending degree.
The printed text lists -633810584502272 for BOTH the x^3 and the x^2 term,
which looks like a typesetting duplication. It is kept verbatim; the
integer-root check runs on the printed polynomial.
"""

SIX_AVERAGE_DATA = (1, 6, 11, 13, 19)

DEPRESSED_QUINTIC = (156, 13460, 72, 376, 0, 1)
DEPRESSED_QUINTIC_SHIFT = 10

RESOLVENT_SEXTIC_P20 = (
    7102938318637196554440048,
    -2545206831640273748008,
    -633810584502272,
    -633810584502272,
    -4167324992,
    107680,
    1,
)

P20_DUPLICATED_COEFFICIENT_NOTE = (
    "printed p20 repeats -633810584502272 for x^3 and x^2; stored verbatim"
)
