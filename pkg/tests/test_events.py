import itertools
import math
import random

import pytest

from recon_lab.graph_core import (
    EditSet,
    Graph,
    ResourceCapError,
    enumerate_ball,
    from_graph6,
    pair_count,
    pair_of_index,
)
from recon_lab.events import (
    _check_bulk,
    _check_plain,
    check_event,
    check_event_ball,
    check_event_collection,
    check_event_radius,
    exact_event_failure_probability,
)
from recon_lab.isomorphism import is_asymmetric
from recon_lab.reconstruction import iso_class_representatives
from recon_lab.sampling import EdgeProbabilities, SeedSpec, sample_graph

from conftest import all_graphs, injection_event_oracle, random_graph

# one-deletion event: impossible on 7 vertices, this 8-vertex graph satisfies it
E1_HOLDER_8 = "G~dWpG"


class TestCheckEvent:
    def test_complete_graph_violated(self):
        res = check_event(Graph.complete(5), 2)
        assert not res.holds and res.witness.verify(Graph.complete(5))

    def test_empty_graph_violated(self):
        res = check_event(Graph.empty(4), 1)
        assert not res.holds and res.witness.verify(Graph.empty(4))

    def test_two_vertex_graphs_always_fail_delta1(self):
        # singleton subgraphs are isomorphic through the swap, which moves a vertex
        for g in (Graph.empty(2), Graph.complete(2)):
            assert not check_event(g, 1).holds

    def test_no_seven_vertex_graph_satisfies_the_one_deletion_event(self):
        # exhaustive over isomorphism classes; the smallest holders have 8 vertices
        assert not any(
            check_event(Graph.from_edge_mask(7, rep), 1).holds
            for rep in iso_class_representatives(7)
        )

    def test_eight_vertex_holder(self):
        g = from_graph6(E1_HOLDER_8)
        assert check_event(g, 1).holds
        assert injection_event_oracle(g, 1)

    def test_delta_zero_is_asymmetry(self):
        for rep in iso_class_representatives(6)[:40]:
            g = Graph.from_edge_mask(6, rep)
            assert check_event(g, 0).holds == is_asymmetric(g)

    def test_bad_delta(self):
        with pytest.raises(ValueError):
            check_event(Graph.complete(3), 3)
        with pytest.raises(ValueError):
            check_event(Graph.complete(3), 5)

    def test_equivalence_with_injection_oracle_small(self):
        for nv in (2, 3, 4, 5):
            for delta in (1, 2):
                if nv - delta < 1:
                    continue
                for g in all_graphs(nv):
                    assert check_event(g, delta).holds == injection_event_oracle(g, delta)

    def test_equivalence_random_six_vertex(self):
        rnd = random.Random(1)
        for _ in range(150):
            g = Graph.from_edge_mask(6, rnd.getrandbits(15))
            for delta in (1, 2):
                assert check_event(g, delta).holds == injection_event_oracle(g, delta)

    def test_event_one_implies_asymmetric_through_seven_vertices(self):
        for n in range(2, 8):
            for rep in iso_class_representatives(n):
                g = Graph.from_edge_mask(n, rep)
                if check_event(g, 1).holds:
                    assert is_asymmetric(g)

    def test_bulk_agrees_with_plain(self):
        rnd = random.Random(6)
        for _ in range(10):
            nv = rnd.choice([16, 18, 24])
            dens = rnd.choice([0.15, 0.5, 0.85])
            mask = sum(1 << k for k in range(pair_count(nv)) if rnd.random() < dens)
            g = Graph.from_edge_mask(nv, mask)
            for delta in (1, 2):
                a, b = _check_bulk(g, delta, 0), _check_plain(g, delta, 0)
                assert a.holds == b.holds
                if not a.holds:
                    assert a.witness.verify(g) and b.witness.verify(g)

    def test_bulk_on_structured_symmetric_inputs(self):
        for g, delta in [
            (Graph.complete(20), 2),
            (Graph.empty(18), 1),
            (Graph.from_edges(17, [(i, i + 1) for i in range(16)]), 2),
        ]:
            res = _check_bulk(g, delta, 0)
            assert not res.holds and res.witness.verify(g)

    def test_ordered_witness_is_lexicographically_least(self):
        rnd = random.Random(12)
        found = 0
        while found < 12:
            nv = rnd.choice([4, 5])
            g = Graph.from_edge_mask(nv, rnd.getrandbits(pair_count(nv)))
            delta = rnd.choice([1, 2])
            if nv - delta < 1:
                continue
            res = check_event(g, delta, ordered_witness=True)
            if res.holds:
                continue
            found += 1
            n = nv - delta
            first = None
            for w_set in itertools.combinations(range(nv), n):
                for image in itertools.permutations(range(nv), n):
                    if image == w_set:
                        continue
                    if all(
                        g.has_edge(w_set[i], w_set[j]) == g.has_edge(image[i], image[j])
                        for i in range(n)
                        for j in range(i + 1, n)
                    ):
                        first = (w_set, image)
                        break
                if first:
                    break
            assert (res.witness.W, res.witness.image) == first


class TestCollection:
    def test_singleton_agrees(self):
        g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
        assert check_event_collection([g], 1).holds == check_event(g, 1).holds

    def test_collection_with_complete_graph_violated(self):
        g = from_graph6(E1_HOLDER_8)
        res = check_event_collection([g, Graph.complete(8)], 1)
        assert not res.holds and res.witness.graph_id == 1

    def test_mixed_vertex_counts_rejected(self):
        # first member must hold so the stream reaches the mismatched one
        with pytest.raises(ValueError):
            check_event_collection([from_graph6(E1_HOLDER_8), Graph.empty(5)], 1)

    def test_empty_collection_rejected(self):
        with pytest.raises(ValueError):
            check_event_collection([], 1)

    def test_trivial_ball_matches_single_check(self):
        g = from_graph6(E1_HOLDER_8)
        es = EditSet.from_pairs(8, [])
        assert check_event_ball(g, es, 1).holds == check_event(g, 1).holds


class TestBall:
    def test_full_pair_ball_contains_complete_graph(self):
        g = Graph.empty(5)
        es = EditSet.from_pairs(5, [pair_of_index(k) for k in range(10)])
        res = check_event_ball(g, es, 2)
        assert not res.holds

    def test_agrees_with_member_enumeration(self):
        rnd = random.Random(4)
        for _ in range(30):
            g = Graph.from_edge_mask(5, rnd.getrandbits(10))
            pairs = rnd.sample([pair_of_index(k) for k in range(10)], 4)
            es = EditSet.from_pairs(5, pairs)
            direct = check_event_ball(g, es, 2)
            member_wise = check_event_collection(enumerate_ball(g, es), 2)
            assert direct.holds == member_wise.holds

    def test_monotone_members(self):
        # if the ball event holds, every member (incl. G) satisfies the event
        hits = 0
        for i in range(200):
            g = random_graph(16, 0.5, 5150, i)
            es = EditSet.from_pairs(16, [(0, 1), (4, 6)])
            if check_event_ball(g, es, 2).holds:
                hits += 1
                assert check_event(g, 2).holds
                for member in enumerate_ball(g, es):
                    assert check_event(member, 2).holds
                if hits >= 3:
                    break
        assert hits >= 3

    def test_tuple_mode_collapses_to_distinct_pairs(self):
        g = Graph.empty(4)
        dup = EditSet.from_pairs(4, [(0, 1), (1, 0), (0, 1)], mode="tuple")
        single = EditSet.from_pairs(4, [(0, 1)])
        assert check_event_ball(g, dup, 1).holds == check_event_ball(g, single, 1).holds

    def test_cap_exceeded(self):
        g = Graph.empty(25)
        es = EditSet.from_pairs(25, [pair_of_index(k) for k in range(21)])
        with pytest.raises(ResourceCapError):
            check_event_ball(g, es, 2)

    def test_radius_check_matches_events_of_all_members(self):
        g = Graph.from_edges(5, [(0, 1), (1, 2), (3, 4)])
        res = check_event_radius(g, 1, 2)
        assert not res.holds  # five-vertex graphs always violate the 2-deletion event

    def test_witnesses_verified(self):
        g = Graph.empty(5)
        es = EditSet.from_pairs(5, [(0, 1), (2, 3)])
        res = check_event_ball(g, es, 1)
        assert not res.holds
        member = list(enumerate_ball(g, es))[res.witness.graph_id]
        assert res.witness.verify(member)


class TestExactOracle:
    def test_probability_one_when_edges_forced(self):
        p = EdgeProbabilities.constant(5, 1.0)
        assert exact_event_failure_probability(3, 2, p) == 1.0

    def test_two_vertex_delta_one_is_one(self):
        p = EdgeProbabilities.constant(2, 0.5)
        assert exact_event_failure_probability(1, 1, p) == 1.0

    def test_small_subgraphs_force_failure(self):
        # subgraphs below six vertices are never asymmetric
        p = EdgeProbabilities.constant(5, 0.5)
        assert exact_event_failure_probability(3, 2, p, 2, "tuple") == pytest.approx(1.0)

    def test_delta_zero_matches_symmetric_mass(self):
        # failure with no edits = Pr[G symmetric]; 8 asymmetric classes on 6 vertices
        p = EdgeProbabilities.constant(6, 0.5)
        got = exact_event_failure_probability(6, 0, p)
        want = 1.0 - 8 * math.factorial(6) / 2 ** 15
        assert got == pytest.approx(want, abs=1e-12)

    def test_tuple_average_matches_direct_enumeration(self):
        # independent check: enumerate every graph and every eps-tuple outright
        nv, delta, pval = 4, 1, 0.35
        m = pair_count(nv)
        p = EdgeProbabilities.constant(nv, pval)
        for eps in (1, 2):
            want = 0.0
            for mask in range(1 << m):
                w = pval ** bin(mask).count("1") * (1 - pval) ** (m - bin(mask).count("1"))
                g = Graph.from_edge_mask(nv, mask)
                acc = 0
                for tup in itertools.product(range(m), repeat=eps):
                    es = EditSet.from_pairs(nv, [pair_of_index(k) for k in set(tup)])
                    acc += not check_event_ball(g, es, delta).holds
                want += w * acc / m**eps
            got = exact_event_failure_probability(nv - delta, delta, p, eps, "tuple")
            assert got == pytest.approx(want, abs=1e-12)

    def test_subset_average_matches_direct_enumeration(self):
        nv, delta, pval, eps = 4, 1, 0.5, 2
        m = pair_count(nv)
        p = EdgeProbabilities.constant(nv, pval)
        want = 0.0
        for mask in range(1 << m):
            w = 0.5 ** m
            g = Graph.from_edge_mask(nv, mask)
            acc = 0
            for combo in itertools.combinations(range(m), eps):
                es = EditSet.from_pairs(nv, [pair_of_index(k) for k in combo])
                acc += not check_event_ball(g, es, delta).holds
            want += w * acc / math.comb(m, eps)
        got = exact_event_failure_probability(nv - delta, delta, p, eps, "subset")
        assert got == pytest.approx(want, abs=1e-12)

    def test_monte_carlo_cross_check_delta_zero(self):
        # non-degenerate value: asymmetry of G(6, 0.55) under two random edits
        pval, eps, trials = 0.55, 2, 4_000
        p = EdgeProbabilities.constant(6, pval)
        exact = exact_event_failure_probability(6, 0, p, eps, "tuple")
        assert 0.0 < exact < 1.0
        fails = 0
        from recon_lab.sampling import sample_edit_tuple

        for i in range(trials):
            seed = SeedSpec(2718, i)
            gen = seed.generator()
            g = sample_graph(p, gen)
            s = sample_edit_tuple(6, eps, gen)
            fails += not check_event_ball(g, s, 0).holds
        sigma = math.sqrt(exact * (1 - exact) / trials)
        assert abs(fails / trials - exact) <= 3.5 * sigma

    def test_resource_cap(self):
        p = EdgeProbabilities.constant(7, 0.5)
        with pytest.raises(ResourceCapError):
            exact_event_failure_probability(5, 2, p)

    def test_input_validation(self):
        p = EdgeProbabilities.constant(5, 0.5)
        with pytest.raises(ValueError):
            exact_event_failure_probability(4, 2, p)  # p sized for wrong nv
        with pytest.raises(ValueError):
            exact_event_failure_probability(3, 2, p, 1, "bogus")
