
# coding: utf-8

# # Robustness to parameter spread
#
# Every circuit parameter is scaled by a random factor in [1 - p, 1 + p] and
# the whole train-then-recognise cycle is repeated.  A seed survives when all
# six clean digits are still recognised.

# In[1]:

from cmos_snn.patterns import DIGITS
from cmos_snn.tasks import PERTURBED, perturb_sweep


# Parameters drawn per seed:

# In[2]:

for group, names in PERTURBED.items():
    print("%-14s %s" % (group or "delay line", ", ".join(names)))


# In[3]:

for pct in (0.05, 0.10, 0.20, 0.30):
    res = perturb_sweep(DIGITS, pct, 20, seed=0, threads=4)
    print("+-%2d%%  survival %.2f" % (round(pct * 100), res.survival))


# Failed seeds keep their verdicts, which shows which digit broke first.

# In[4]:

res = perturb_sweep(DIGITS, 0.30, 20, seed=0, threads=4)
for o in res.outcomes:
    if not o.survived:
        print(o.seed, list(o.verdicts), o.error or "")
