
# coding: utf-8

# # Plasticity curves
#
# The synapse circuit keeps exponential pre and post traces and nudges the
# gate voltage whenever the opposite neuron fires.  Two views of the same
# rule: the pairwise STDP window, and the rate dependence that turns it into
# a BCM-like threshold.

# In[1]:

import numpy as np

from cmos_snn.synapse import (BCM_THETA1, BCM_THETA2, DEFAULT_STDP, bcm_curve,
                              delta_w_curve, find_zero_crossing, simulate_pair)


# ## STDP window
#
# Positive lags mean the post spike follows the pre spike.  The closed form
# and a stepped simulation of a single pair should agree.

# In[2]:

lags = np.linspace(-6e-6, 6e-6, 13)
closed = delta_w_curve(DEFAULT_STDP, lags)
stepped = np.array([simulate_pair(DEFAULT_STDP, None, t) for t in lags])
for t, a, b in zip(lags, closed, stepped):
    print("%+5.1f us  %+.4f V  %+.4f V" % (t * 1e6, a, b))


# ## Rate threshold
#
# With pre and post both firing as Poisson trains at rate f, the mean drift is
# negative below a threshold rate and positive above it.

# In[3]:

freqs = np.linspace(0.2, 4.0, 39)
for name, p in (("theta1", BCM_THETA1), ("theta2", BCM_THETA2)):
    drift = bcm_curve(p, freqs)
    print(name, "analytic %.4f Hz" % p.theta(), "simulated crossing %.4f Hz" % find_zero_crossing(freqs, drift))


# The drift is zero at f = 0 too, so below the threshold the curve dips
# before it turns upward.

# In[4]:

drift = bcm_curve(BCM_THETA1, freqs)
print("deepest depression near %.1f Hz" % freqs[np.argmin(drift)])
