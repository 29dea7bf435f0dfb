import itertools
import math
import random

import numpy as np
import pytest

from recon_lab.bounds import (
    BoundParams,
    eps_prime,
    f_bound,
    injection_census,
    minimal_alpha,
    na_orbit_events_exact,
    orbit_stats,
    paley_zygmund_floor,
    subset_containment_bound,
    tuple_containment_joint,
    tuple_membership_probability,
    union_bound_failure,
    union_bound_threshold_n,
)
from recon_lab.graph_core import pair_count
from recon_lab.sampling import SeedSpec, expected_distinct


class TestFBound:
    def test_telescopes_at_c0_one(self):
        for x, y in [(0.1, 0.9), (0.3, 0.8), (0.5, 0.5)]:
            assert f_bound(x, y, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_half_half(self):
        assert f_bound(0.5, 0.5, 0.9) == pytest.approx(0.95)

    def test_symmetry_under_complement(self):
        rnd = random.Random(1)
        for _ in range(200):
            x, y, c0 = rnd.random(), rnd.random(), rnd.uniform(0.01, 1.0)
            assert f_bound(x, y, c0) == pytest.approx(f_bound(1 - x, 1 - y, c0), abs=1e-12)

    def test_grid_max_attained_at_corner(self):
        for a in (0.1, 0.3, 0.5):
            corner = f_bound(a, a, 0.9)
            pts = np.linspace(a, 1 - a, 100)
            grid_max = max(f_bound(x, y, 0.9) for x in pts for y in pts)
            assert grid_max <= corner + 1e-9

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            f_bound(-0.1, 0.5, 0.9)
        with pytest.raises(ValueError):
            f_bound(0.5, 0.5, 0.0)


class TestSubsetContainment:
    def test_k_zero(self):
        assert subset_containment_bound(9, 4, 0) == (1.0, 1.0)

    def test_enumeration_example(self):
        exact, lower = subset_containment_bound(4, 2, 1)
        # oracle: count 2-subsets of a 4-set containing one fixed element
        hits = sum(1 for s in itertools.combinations(range(4), 2) if 0 in s)
        assert exact == pytest.approx(hits / 6) == pytest.approx(0.5)
        assert lower == pytest.approx(0.25)

    def test_full_subset(self):
        assert subset_containment_bound(7, 7, 3)[0] == pytest.approx(1.0)

    def test_exact_dominates_lower_up_to_thirty(self):
        for n in range(31):
            for m in range(n + 1):
                for k in range(m + 1):
                    exact, lower = subset_containment_bound(n, m, k)
                    assert exact >= lower - 1e-12

    def test_order_violations_rejected(self):
        with pytest.raises(ValueError):
            subset_containment_bound(4, 5, 1)


class TestOrbitStats:
    def test_single_mover_closed_form(self):
        for n in range(3, 13):
            stats = orbit_stats(list(range(n)), [n] + list(range(1, n)))
            assert stats.moved == 1
            assert stats.orbit_counts.get(1, 0) == math.comb(n - 1, 2)
            assert stats.orbit_counts.get(2, 0) == n - 1
            assert not any(i >= 3 for i in stats.orbit_counts)

    def test_identity(self):
        stats = orbit_stats(range(5), range(5))
        assert stats.orbit_counts == {1: 10} and stats.moved == 0

    def test_total_covers_universe_and_proof_inequality(self):
        rnd = random.Random(10)
        for _ in range(400):
            n = rnd.randint(2, 8)
            delta = rnd.randint(0, 2)
            w_set = sorted(rnd.sample(range(n + delta), n))
            image = rnd.sample(range(n + delta), n)
            stats = orbit_stats(w_set, image)
            assert stats.total_pairs >= pair_count(n)
            if stats.moved >= 2:
                m = stats.moved
                assert stats.long_orbit_pair_sum() >= m * (n - m / 2 - 1) - 1e-9

    def test_non_injective_rejected(self):
        with pytest.raises(ValueError):
            orbit_stats([0, 1], [2, 2])


class TestInjectionCensus:
    def test_no_movers_is_identity_only(self):
        assert injection_census(5, 0, 0).exact == 1
        assert injection_census(5, 0, 2).exact == 1

    def test_brute_force_agreement(self):
        for n in range(1, 7):
            for delta in (0, 1, 2):
                counts = {m: 0 for m in range(n + 1)}
                for image in itertools.permutations(range(n + delta), n):
                    counts[sum(1 for i in range(n) if image[i] != i)] += 1
                for m in range(n + 1):
                    assert injection_census(n, m, delta).exact == counts[m], (n, m, delta)

    def test_transposition_count(self):
        assert injection_census(4, 2, 0).exact == 6  # the six transpositions

    def test_paper_cap_holds_for_movers(self):
        for n in range(1, 10):
            for delta in (0, 1, 2):
                for m in range(1, n + 1):
                    c = injection_census(n, m, delta)
                    assert c.exact <= c.bound
                    assert c.min_valid_n is not None and c.min_valid_n <= max(m, 1)

    def test_zero_mover_cap_fails_with_delta(self):
        c = injection_census(5, 0, 1)
        assert c.exact > c.bound and c.min_valid_n is None


class TestUnionBound:
    def test_first_term_matches_direct_formula(self):
        n, delta = 100, 2
        params = BoundParams(n=n, delta=delta, alpha=8.0, rho=1.0, beta=math.log(n) / n)
        t = union_bound_failure(params)
        direct = 4 * n ** (delta + 1) * math.exp(-t.rates["scale"] / 2)
        assert t.term1 == pytest.approx(direct, rel=1e-12)
        assert t.target == pytest.approx(math.exp(-1.0 * math.log(n)))

    def test_terms_positive_and_decreasing_in_alpha(self):
        prev = None
        for alpha in (1.0, 2.0, 4.0, 6.0):
            t = union_bound_failure(
                BoundParams(n=60, delta=2, alpha=alpha, rho=1.0, beta=math.log(60) / 60)
            )
            assert t.term1 > 0 and t.term2 > 0 and t.term3 > 0
            if prev is not None:
                assert t.total < prev
            prev = t.total

    def test_constant_regime_derives_its_rate(self):
        params = BoundParams(n=200, delta=2, alpha=1.0, rho=0.05, beta=0.3, c0=0.9)
        t = union_bound_failure(params, "constant-beta")
        c1 = -math.log(0.3**2 + 0.7**2 + 2 * 0.3 * 0.7 * 0.9)
        assert t.rates["c1"] == pytest.approx(c1)
        assert t.target == pytest.approx(math.exp(-0.05 * 200))

    def test_invalid_constants_are_named(self):
        with pytest.raises(ValueError, match="c0"):
            BoundParams(n=10, delta=2, alpha=1.0, rho=1.0, beta=0.2, c=0.5, c0=0.2)
        with pytest.raises(ValueError, match="c2"):
            BoundParams(n=10, delta=2, alpha=1.0, rho=1.0, beta=0.2, c2=1.5)
        with pytest.raises(ValueError, match="box"):
            BoundParams(n=10, delta=2, alpha=4.0, rho=1.0, beta=0.4)

    def test_minimal_alpha_is_max_of_three(self):
        c1, c2, delta, rho = 0.2, 0.5, 2, 1.5
        a = minimal_alpha(c1, c2, delta, rho)
        assert a == pytest.approx(
            max(
                (2 / (c1 * c2)) * (rho + delta + 1),
                (4 / (c1 * c2)) * (5 / 4 + 3 * delta / 4 + rho / 2),
                (8 / (c1 * c2)) * (3 / 2 + delta + rho / 2),
            )
        )

    @pytest.mark.slow
    def test_threshold_scan_finds_a_working_n(self):
        th = union_bound_threshold_n(
            delta=2, rho=1.0, rho_prime=1.5, beta_fn=lambda n: math.log(n) / n
        )
        assert th is not None
        beta = math.log(th) / th
        c1 = BoundParams(n=th, delta=2, alpha=1.0, rho=1.0, beta=beta).resolved_c1(
            "vanishing-beta"
        )
        alpha = minimal_alpha(c1, 0.5, 2, 1.5)
        t = union_bound_failure(
            BoundParams(n=th, delta=2, alpha=alpha, rho=1.0, beta=beta)
        )
        assert t.total <= 3 * math.exp(-1.5 * beta * th)


class TestEpsPrimeAndPZ:
    def test_zero_eps(self):
        assert eps_prime(12, 0, 0.5) == 0.0

    def test_half_density_arithmetic(self):
        n_pairs = pair_count(32)  # even
        assert eps_prime(32, n_pairs // 2, 0.5) == pytest.approx(n_pairs * math.log(4.0))

    def test_eps_above_budget_rejected(self):
        with pytest.raises(ValueError):
            eps_prime(10, 40, 0.5)

    def test_floor_examples(self):
        assert paley_zygmund_floor(0.5) == pytest.approx(1 / 18)
        for c in (0.05, 0.25, 0.5, 0.75, 0.95):
            assert 0.0 < paley_zygmund_floor(c) < 0.5

    def test_expected_distinct_dominates_gamma_eps(self):
        c = 0.5
        gamma = (1 + 1 / c) / 2
        for n in range(10, 101, 10):
            n_pairs = pair_count(n)
            eps = int(0.9 * c * n_pairs)
            ez = expected_distinct(n_pairs, math.ceil(eps_prime(n, eps, c)))
            assert ez >= gamma * eps - 1e-6

    def test_empirical_floor_small(self):
        # Z = distinct draws among an eps'-length tuple must reach eps often
        n, c = 12, 0.5
        n_pairs = pair_count(n)
        eps = int(c * n_pairs)
        draws = math.ceil(eps_prime(n, eps, c))
        gen = SeedSpec(88, 0).generator()
        samples = gen.integers(0, n_pairs, size=(2000, draws))
        z = np.array([len(np.unique(row)) for row in samples])
        rate = float(np.mean(z >= eps))
        floor = paley_zygmund_floor(c)
        sigma = math.sqrt(max(rate * (1 - rate), 1e-4) / len(z))
        assert rate >= floor - 3 * sigma

    def test_variance_subadditivity(self):
        # Var(Z) <= E(Z) for the distinct count of tuple draws
        n_pairs = pair_count(14)
        gen = SeedSpec(99, 1).generator()
        samples = gen.integers(0, n_pairs, size=(4000, 60))
        z = np.array([len(np.unique(row)) for row in samples], dtype=float)
        assert z.var() <= z.mean() * 1.1


class TestNegativeAssociation:
    def test_tuple_joint_below_product_closed_form(self):
        for n_pairs, eps in [(10, 3), (15, 8), (45, 20)]:
            single = tuple_membership_probability(n_pairs, eps)
            for k in (2, 3):
                joint = tuple_containment_joint(n_pairs, eps, k)
                assert joint <= single**k + 1e-12

    def test_exact_joint_below_product_all_tiny_instances(self):
        m = pair_count(4)
        for eps in (1, 2, 3):
            for combo in itertools.permutations(range(m), 4):
                joint, marg = na_orbit_events_exact(4, 0.5, eps, combo[:2], combo[2:])
                assert joint <= marg[0] * marg[1] + 1e-12

    def test_exact_joint_other_density(self):
        m = pair_count(4)
        for combo in [(0, 1, 2, 3), (0, 2, 4, 5), (1, 3, 0, 5)]:
            joint, marg = na_orbit_events_exact(4, 0.3, 2, combo[:2], combo[2:])
            assert joint <= marg[0] * marg[1] + 1e-12

    def test_distinct_pairs_required(self):
        with pytest.raises(ValueError):
            na_orbit_events_exact(4, 0.5, 1, [0, 1], [1, 2])
