"""The deterministic invariant battery behind the `check` subcommand.

Every check compares a computed quantity against an independent oracle
(closed form, brute force, or a second computational route) at a stated
tolerance. The battery is seeded and pure, so repeated runs produce
byte-identical reports.
"""

from __future__ import annotations

import math

import numpy as np

from . import pressure as pr
from . import variational as vr
from .geometry import (BowenRoot, ConformalIFS, box_dimension, bowen_root,
                       ifs_dimension, moran_root)
from .potentials import (additive_sequence, birkhoff_sum, constant_potential,
                         random_potential, zero_sequence)
from .symbolic import (SubshiftOfFiniteType, count_periodic, count_words,
                       enumerate_periodic, enumerate_words,
                       first_return_horseshoe, saturate_pressure,
                       transitive_subsystems)

GOLDEN = math.log((1 + math.sqrt(5)) / 2)
LOG2 = math.log(2)


class Check:
    def __init__(self, name, measured, expected, tol, detail=""):
        self.name = name
        self.measured = float(measured)
        self.expected = float(expected)
        self.tol = float(tol)
        self.passed = abs(self.measured - self.expected) <= self.tol
        self.detail = detail


def run_checks(seed: int = 0) -> list[Check]:
    full2 = SubshiftOfFiniteType.full_shift(2)
    golden = SubshiftOfFiniteType.golden_mean()
    checks: list[Check] = []

    checks.append(Check("words/golden-n10-count",
                        len(enumerate_words(golden, 10)), 144, 0))
    agree = all(len(enumerate_words(golden, n)) == count_words(golden, n)
                for n in range(1, 13))
    checks.append(Check("words/transfer-oracle-agreement", float(agree), 1.0, 0))
    checks.append(Check("periodic/golden-N12-count",
                        len(enumerate_periodic(golden, 12)), 322, 0))
    agree = all(len(enumerate_periodic(golden, n)) == count_periodic(golden, n)
                for n in range(1, 13))
    checks.append(Check("periodic/trace-oracle-agreement", float(agree), 1.0, 0))

    zero2 = constant_potential(full2, 0.0)
    zero_g = constant_potential(golden, 0.0)
    checks.append(Check("perron/full-shift-entropy",
                        pr.perron_pressure(full2, zero2), LOG2, 1e-12))
    checks.append(Check("perron/golden-mean-entropy",
                        pr.perron_pressure(golden, zero_g), GOLDEN, 1e-12))

    phi = random_potential(full2, 2, 0.5, seed + 1)
    shift = pr.perron_pressure(full2, phi.shifted(0.7)) - \
        pr.perron_pressure(full2, phi) - 0.7
    checks.append(Check("perron/translation-covariance", shift, 0.0, 1e-10))

    mu_star, fe = vr.equilibrium_measure(full2, phi)
    p_phi = pr.perron_pressure(full2, phi)
    checks.append(Check("variational/equilibrium-attains-pressure",
                        fe - p_phi, 0.0, 1e-9))
    rng = np.random.default_rng(seed + 2)
    worst = -math.inf
    for _ in range(100):
        p = rng.random((2, 2)) + 1e-3
        p /= p.sum(axis=1, keepdims=True)
        mu = vr.MarkovMeasure.from_transition(full2, p)
        worst = max(worst, vr.free_energy(mu, phi) - p_phi)
    checks.append(Check("variational/one-sided-inequality",
                        max(worst, 0.0), 0.0, 1e-9))

    psi = random_potential(golden, 2, 1.0, seed + 3)
    brute = max(birkhoff_sum(psi, cycle) / len(cycle)
                for cycle in (golden.word([0]), golden.word([0, 1])))
    checks.append(Check("ergodic/max-mean-cycle-vs-brute",
                        vr.max_mean_cycle(golden, psi), brute, 1e-12))

    checks.append(Check("geometry/moran-half-quarter",
                        moran_root([0.5, 0.25]), 0.6942419136306174, 1e-9))
    thirds = ConformalIFS(((1 / 3, 0.0), (1 / 3, 2 / 3)))
    root = ifs_dimension(thirds)
    checks.append(Check("geometry/bowen-vs-moran-thirds",
                        root.t_star, moran_root([1 / 3, 1 / 3]), 1e-9))
    checks.append(Check("geometry/bowen-residual", root.residual, 0.0, 1e-9))
    box = box_dimension(thirds, 12)
    checks.append(Check("geometry/box-count-thirds",
                        box.estimate, math.log(2) / math.log(3), 0.02))

    bs = first_return_horseshoe(full2, full2.word([0]), 1, math.inf,
                                max_return=40)
    checks.append(Check("horseshoe/full-first-return-entropy",
                        saturate_pressure(bs), LOG2, 1e-6))

    phi_s = random_potential(full2, 2, 0.3, seed + 4)
    mu_eq, p_mu = vr.equilibrium_measure(full2, phi_s)
    rho, length = 0.05, 16
    generic = vr.generic_branches(
        first_return_horseshoe(full2, full2.word([0]), length, rho),
        mu_eq, rho=rho, depth=2)
    bound = 2 * rho + 4 * rho * phi_s.sup_norm + rho * abs(p_mu) / (1 + rho)
    checks.append(Check("horseshoe/free-energy-sandwich",
                        saturate_pressure(generic, phi_s), p_mu, bound))

    golden_in_full = SubshiftOfFiniteType(golden.transitions, (0, 1))
    est = pr.caratheodory_pressure(golden_in_full, zero_sequence(full2),
                                   depth=12, ambient=full2)
    checks.append(Check("caratheodory/golden-in-full-shift",
                        est.value, GOLDEN, 1e-3))

    span = pr.spanning_pressure(full2, phi, epsilon=1.0, n=8)
    sep = pr.separated_pressure(full2, phi, epsilon=1.0, n=8)
    margin = min(s[1] - g[1] for g, s in zip(span.diagnostics, sep.diagnostics))
    checks.append(Check("pressure/separated-dominates-spanning",
                        min(margin, 0.0), 0.0, 0.0))

    from .potentials import kingman_rate_integral
    mu_half = vr.MarkovMeasure.bernoulli(full2, [0.5, 0.5])
    rate = kingman_rate_integral(additive_sequence(phi), mu_half, 8)
    drift = max(abs(a - rate.entries[0][1]) for _, a in rate.entries)
    checks.append(Check("kingman/additive-integral-constant", drift, 0.0, 1e-12))

    fe_est = vr.spanning_free_energy(full2, mu_half, zero2, epsilon=1.0,
                                     n=10, alpha=0.5)
    checks.append(Check("free-energy/bernoulli-half-alpha-half",
                        fe_est.value, 0.9 * LOG2, 1e-12))

    sup = vr.sup_over_basic_sets(full2, zero_sequence(full2), n_max=6,
                                 include_subsystems=False)
    seq_vals = [v for kind, _, v in sup.candidates if kind == "horseshoe"]
    monotone = all(b >= a - 1e-12 for a, b in zip(seq_vals, seq_vals[1:]))
    checks.append(Check("basic-sets/horseshoe-values-monotone",
                        float(monotone), 1.0, 0))
    checks.append(Check("basic-sets/horseshoe-terminal-gap",
                        sup.gap, 0.0, 0.02))
    sup_all = vr.sup_over_basic_sets(full2, zero_sequence(full2), n_max=6)
    checks.append(Check("basic-sets/full-system-closes-gap",
                        sup_all.gap, 0.0, 1e-12))

    subsystems = transitive_subsystems(golden)
    keys = {tuple(sorted((s.labels[i], s.labels[j]) for i, j in s.edges()))
            for s in subsystems}
    has_zero = ((0, 0),) in keys
    lacks_one = ((1, 1),) not in keys
    checks.append(Check("subsystems/golden-fixed-points",
                        float(has_zero and lacks_one), 1.0, 0))

    return checks
