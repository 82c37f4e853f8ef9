"""SQC Smoother - robust fixed-point smoothing under sum quadratic constraints.

Run the harness via the installed console script:
    smoother run --scenario scenarios/linear_scalar.json --out results/
    smoother validate --scenario scenarios/pendulum.json
    smoother oracle --scenario scenarios/linear_scalar.json

The package estimates the set of states at an interior time k that are
consistent with measurements over [0, t] and with uncertainties bounded by a
sum quadratic constraint. The estimate combines a forward-time filter over
[0, k] with a reverse-time filter over [k, t].

Key features:
- Forward and reverse Riccati/filter/level-shift recursions with
  linearization of nonlinear dynamics, measurement and uncertainty maps
- Euler discretization of continuous-time models and their weights
- Set-valued smoother with membership tests and a point estimate
- Brute-force dynamic-programming oracles for affine instances
- Seeded, deterministic Monte Carlo harness with CSV/JSON output

Example usage:
    from sqc_smoother.harness import run_scenario
    from sqc_smoother.scenario import parse_scenario

    scenario = parse_scenario(Path("scenarios/linear_scalar.json"))
    records, summary = run_scenario(scenario)
"""

__version__ = "0.1.0"
