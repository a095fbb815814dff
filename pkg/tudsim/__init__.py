"""
tudsim — dense-matrix simulation of the two-unitary decomposition pipeline.

Modules:
    numerics     exact decompositions, matrix functions, random ensembles
    channels     Kraus channels, density matrices, exact expectation values
    encodings    block encodings (Sz.-Nagy, LCU, Stinespring) and post-selection
    qsp          polynomial targets, phase solving, QSVT sequences
    tud          two/four-unitary decompositions, LCU addition, OAA, SVD oracle
    estimation   shot-based estimators, variance predictors, run accounting
"""
