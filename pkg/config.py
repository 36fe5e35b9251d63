'''
Configuration file for the verification stage

Running this script writes config.json to the current working directory;
verification/run_verification.py reads it.

Keys:
    - output_dir: (str) where reports (JSON + CSV) are written
    - tolerances: (dict)
        violation_tol: margins above this count as violations
        seesaw_allowance: allowance for see-saw (lower bound) based monotones;
            their margins above it are advisory, never failures
        state_tol: validation tolerance of states and operations (fixed)
        reduction_tol: deviation allowed from a maximally mixed reduction
    - seesaw: (dict) restarts, iters and tol for Bell values
    - suites: (list of dict) one randomized suite each:
        monotone: registry name, e.g. 'I', 'ef', 'pairwise:1,2',
            'bipartition:1', 'entropy:q=2', 'bell:CHSH'
        condition: '1', '2', '3' or 'oneway'
        dims: local dimensions of the sampled states
        trials: number of trials
        seed: master seed
        optional: rank, efficient, preserve_dims
    - parallelization: (dict) num_processes for the trial pool
'''

import json

# Directory to output data (i.e. where reports are saved)
output_dir = 'reports'

### Tolerances ----------------------------------------------------------------

tolerances = {
    "violation_tol": 1e-8,
    "seesaw_allowance": 1e-4,
    "state_tol": 1e-10,
    "reduction_tol": 1e-8
}

# See-saw controls for Bell monotones
seesaw = {
    "restarts": 20,
    "iters": 500,
    "tol": 1e-9
}

### Suites --------------------------------------------------------------------

# Mutual information over the three conditions on three factorizations,
# then the entanglement-of-formation and entropy suites.
suites = []
for dims in ([2, 2], [2, 3], [2, 2, 2]):
    for condition in ('1', '2', '3'):
        suites.append({
            "monotone": "I",
            "condition": condition,
            "dims": dims,
            "trials": 500,
            "seed": 7
        })

suites += [
    # two-qubit inputs and outputs keep E_f in the closed-form regime
    {"monotone": "ef", "condition": "oneway", "dims": [2, 2], "trials": 200, "seed": 7,
     "preserve_dims": True},
    {"monotone": "ef", "condition": "1", "dims": [2, 2], "trials": 200, "seed": 11,
     "preserve_dims": True},
    {"monotone": "ef", "condition": "2", "dims": [2, 2], "trials": 200, "seed": 11,
     "rank": 1, "efficient": True},
    {"monotone": "entropy:q=2", "condition": "3", "dims": [2, 3], "trials": 200, "seed": 13},
    {"monotone": "bell:CHSH", "condition": "1", "dims": [2, 2], "trials": 100, "seed": 17,
     "preserve_dims": True}
]

# Parallelization -------------------------------------------------------------

# The number of processes used for trials. Results do not depend on it.
parallelization = {
    "num_processes": 4
}

#################### DO NOT CHANGE ANYTHING BELOW ############################

config_json = {}

config_json["output_dir"] = output_dir
config_json["tolerances"] = tolerances
config_json["seesaw"] = seesaw
config_json["suites"] = suites
config_json["parallelization"] = parallelization

with open('config.json', 'w') as f:
    json.dump(config_json, f, indent=4)
