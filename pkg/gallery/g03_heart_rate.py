
# coding: utf-8

# # Heart-rate classification with two rate thresholds
#
# Beats detected in an ECG become a spike train.  Two synapses tuned to about
# 1.01 Hz and 1.64 Hz report the sign of their weight change, and the pair of
# signs gives LOW, NORMAL or HIGH.

# In[1]:

from cmos_snn.ecg import (HrClassifierConfig, classify_heart_rate, detect_beats,
                          mean_rate, synthetic_ecg)


# A synthetic one-minute recording at 72 bpm, with jitter, noise and baseline wander.

# In[2]:

rec, beats_true = synthetic_ecg(72.0, 60.0, seed=0)
beats = detect_beats(rec)
print("annotated %.2f bpm, detected %.2f bpm" % (60 * (len(beats_true) - 1) / (beats_true[-1] - beats_true[0]), 60 * mean_rate(beats)))


# In[3]:

cfg = HrClassifierConfig()
print("thresholds (Hz):", ["%.5f" % th for th in cfg.thresholds])
res = classify_heart_rate(cfg, beats)
print(res.label, "dw1=%+.4f dw2=%+.4f" % (res.dw_low, res.dw_high))


# Sweep a few rates.  Rates within 2% of a threshold raise a warning.

# In[4]:

import warnings

for bpm in (45, 58, 75, 95, 110, 140):
    rec, _ = synthetic_ecg(bpm, 60.0, seed=bpm)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = classify_heart_rate(cfg, detect_beats(rec))
    flag = " (near a threshold)" if caught else ""
    print("%3d bpm -> %-6s%s" % (bpm, res.label, flag))


# The simulated mode measures the drift from seeded Poisson trains instead.

# In[5]:

sim = HrClassifierConfig(mode="simulated", events=5000)
rec, _ = synthetic_ecg(120.0, 60.0, seed=7)
print(classify_heart_rate(sim, detect_beats(rec)).label)
