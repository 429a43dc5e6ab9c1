"""
Ignoring a known marginal break with adapted ranks
==================================================

A location shift in one margin moves every rank even when the copula
never changes, so the plain dependence test rejects for the wrong
reason.  Re-ranking each marginal segment separately (the break-adapted
statistic) removes the artefact: the adapted test stays near its
nominal level on the same data.
"""

import numpy as np

from evbreak import (
    BreakSpec,
    DgpScenario,
    GevParams,
    GumbelHougaardParams,
    NormalParams,
    Segment,
    generate_scenario,
    run_test,
)

# Constant dependence (Gumbel-Hougaard, Kendall's tau = 0.75) with a
# +15 location shift in the first margin after row 100.  The second
# margin is standard normal throughout.
copula = GumbelHougaardParams(4.0)
gev = GevParams(mu=20.0, sigma=10.0, gamma=0.25)
gev_shift = GevParams(mu=35.0, sigma=10.0, gamma=0.25)
norm = NormalParams()
scenario = DgpScenario(
    n=200,
    segments=(
        Segment(0.0, 0.5, copula, margins=(gev, norm)),
        Segment(0.5, 1.0, copula, margins=(gev_shift, norm)),
    ),
)

# One draw first: same data, two tests.  BreakSpec((0.5,), n) tells the
# adapted test where the marginal documentation says the shift happened.
rng = np.random.default_rng(11)
sample = generate_scenario(scenario, rng)
plain = run_test(sample, n_boot=1000, seed=1)
adapted = run_test(sample, n_boot=1000, seed=1, breaks=BreakSpec((0.5,), scenario.n))
print("single draw, dependence constant, margin shifts at row 100:")
print(f"  plain    p = {plain.p_value:.3f}  reject = {plain.reject}")
print(f"  adapted  p = {adapted.p_value:.3f}  reject = {adapted.reject}")

# Rejection frequency over repeated draws.  The plain test rejects most
# of the time; the adapted one should hover around alpha = 0.05.
reps = 40
hits = np.zeros(2)
for rep in range(reps):
    sample = generate_scenario(scenario, np.random.default_rng((rep, 0)))
    mult_seed = np.random.SeedSequence((rep, 1))
    hits[0] += run_test(sample, n_boot=200, seed=np.random.default_rng(mult_seed)).reject
    hits[1] += run_test(
        sample,
        n_boot=200,
        seed=np.random.default_rng(mult_seed),
        breaks=BreakSpec((0.5,), scenario.n),
    ).reject
print(f"over {reps} draws (B = 200):")
print(f"  plain    rejects {hits[0]:.0f}/{reps} = {hits[0] / reps:.2f}")
print(f"  adapted  rejects {hits[1]:.0f}/{reps} = {hits[1] / reps:.2f}  (nominal 0.05)")
