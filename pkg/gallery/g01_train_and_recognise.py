
# coding: utf-8

# # Training the crossbar and recognising digits
#
# Six 3x5 digit bitmaps are learned by a 15x6 crossbar of STDP synapses.
# Each column sees one digit while its output neuron fires as a delayed copy
# of the input spikes, so the synapses of black pixels potentiate.

# In[1]:

import numpy as np

from cmos_snn.network import Crossbar, infer_batch, train_all
from cmos_snn.patterns import DIGITS, noisy_array, oracle_classify_many


# Start with every synapse in its high-resistance state and train all six columns.

# In[2]:

xb = train_all(Crossbar.fresh(), DIGITS.array())
print(np.round(xb.v_g, 2))


# Gate voltages sit at the two rails: 1.6 V where the pixel was black, 1.1 V elsewhere.
# The learned image of digit 3, reshaped to the 5x3 grid:

# In[3]:

print((xb.v_g[:, 3] > 1.35).astype(int).reshape(5, 3))


# Now present the clean digits.  The verdict is the column whose output neuron fires first.

# In[4]:

xb = xb.set_mode("infer")
res = infer_batch(xb, DIGITS.array())
print("verdicts:", res.verdict)
print("latency (us):", np.round(res.latency * 1e6, 3))


# # Noisy inputs
#
# Flip every pair of pixels in every digit and compare the circuit with the
# overlap oracle.  Ties count as misses.

# In[5]:

labels, _, patterns = noisy_array(DIGITS, 2)
circuit = infer_batch(xb, patterns).verdict
oracle = oracle_classify_many(DIGITS, patterns)
print("agreement:", int((circuit == oracle).sum()), "/", len(labels))
print("recognition rate: %.2f%%" % (100 * np.mean(circuit == labels)))
