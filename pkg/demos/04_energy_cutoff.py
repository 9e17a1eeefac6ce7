"""When does spending CPU on compression save radio energy?

The cutoff is the extra encode time per byte saved, expressed in million
clock cycles.  If sending one byte costs more energy than that many cycles
of computation, the smaller output wins.
"""
from magic_codec.analysis import NoCutoffError, ct_cutoff

f = 3.7e9                               # CPU clock
print(ct_cutoff(2.0, 1.0, 1000, 5000, f))   # 1 s slower, 4000 B smaller -> 0.925

# A faster and smaller codec gives a negative cutoff: always beneficial.
print(ct_cutoff(0.5, 1.0, 1000, 5000, f))

# No cutoff exists when the output is not smaller.
try:
    ct_cutoff(2.0, 1.0, 5000, 5000, f)
except NoCutoffError as exc:
    print("no cutoff:", exc)
