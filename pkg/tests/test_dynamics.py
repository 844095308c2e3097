import numpy as np
import pytest

from lgcalab.dynamics import (
    FHP,
    HPP,
    RandomPolicy,
    build_collision_table,
    collide,
    fhp_collide_site,
    fhp_three_body_flag,
    fhp_two_body_flag,
    hpp_collide_site,
    random_state,
    run,
    step,
)
from lgcalab.lattice import HEX6, SQUARE4, LatticeState, Topology, exact_momentum_units


def bits(*dirs):
    """Site state with the given 1-based directions occupied."""
    mask = 0
    for d in dirs:
        mask |= 1 << (d - 1)
    return mask


def eval_d(state, i):
    # direct evaluation of the head-on pair indicator
    n = [(state >> ((k - 1) % 6)) & 1 for k in range(1, 13)]
    get = lambda k: n[(k - 1) % 6]
    return (
        get(i) * get(i + 3)
        * (1 - get(i + 1)) * (1 - get(i + 2)) * (1 - get(i + 4)) * (1 - get(i + 5))
    )


def eval_t(state, i):
    get = lambda k: (state >> ((k - 1) % 6)) & 1
    return (
        get(i) * get(i + 2) * get(i + 4)
        * (1 - get(i + 1)) * (1 - get(i + 3)) * (1 - get(i + 5))
    )


class TestCollisionFlags:
    def test_two_body_examples(self):
        assert fhp_two_body_flag(bits(1, 4), 1) == 1
        assert fhp_two_body_flag(bits(1, 3, 5), 1) == 0
        for i in range(1, 7):
            assert fhp_two_body_flag(0, i) == 0

    def test_two_body_exhaustive_against_direct_formula(self):
        for state in range(64):
            for i in range(1, 7):
                assert fhp_two_body_flag(state, i) == eval_d(state, i)

    def test_three_body_examples(self):
        assert fhp_three_body_flag(bits(1, 3, 5), 1) == 1
        assert fhp_three_body_flag(bits(1, 3, 5), 2) == 0
        for i in range(1, 7):
            assert fhp_three_body_flag(0b111111, i) == 0

    def test_three_body_exhaustive_against_direct_formula(self):
        for state in range(64):
            for i in range(1, 7):
                assert fhp_three_body_flag(state, i) == eval_t(state, i)


class TestSiteCollisions:
    def test_head_on_pair_deflects(self):
        assert fhp_collide_site(bits(1, 4), 1) == bits(2, 5)
        assert fhp_collide_site(bits(1, 4), 0) == bits(3, 6)

    def test_three_body_bounce_back(self):
        for q in (0, 1):
            assert fhp_collide_site(bits(1, 3, 5), q) == bits(2, 4, 6)
            assert fhp_collide_site(bits(2, 4, 6), q) == bits(1, 3, 5)

    def test_sixty_degree_pair_is_transparent(self):
        for q in (0, 1):
            assert fhp_collide_site(bits(1, 2), q) == bits(1, 2)

    def test_hpp_rules(self):
        assert hpp_collide_site(bits(1, 3)) == bits(2, 4)  # {E,W} -> {N,S}
        assert hpp_collide_site(bits(2, 4)) == bits(1, 3)
        assert hpp_collide_site(bits(1, 2, 3, 4)) == bits(1, 2, 3, 4)
        assert hpp_collide_site(bits(1)) == bits(1)


class TestCollisionTable:
    def test_fhp_table_shape(self):
        table = build_collision_table(FHP)
        assert table.entries.shape == (2, 64)

    def test_hpp_q_rows_identical(self):
        table = build_collision_table(HPP)
        assert (table.entries[0] == table.entries[1]).all()

    def test_three_states_have_nontrivial_two_body_image(self):
        table = build_collision_table(FHP)
        pair_states = [
            s
            for s in range(64)
            if any(fhp_two_body_flag(s, i) for i in range(1, 7))
        ]
        assert len(pair_states) == 3
        assert sorted(pair_states) == [bits(1, 4), bits(2, 5), bits(3, 6)]
        for s in pair_states:
            assert table.entries[0, s] != s and table.entries[1, s] != s

    def test_non_colliding_states_map_to_themselves(self):
        table = build_collision_table(FHP)
        special = {bits(1, 4), bits(2, 5), bits(3, 6), bits(1, 3, 5), bits(2, 4, 6)}
        for s in range(64):
            if s not in special:
                assert table.entries[0, s] == s and table.entries[1, s] == s

    @pytest.mark.parametrize("model", [FHP, HPP])
    def test_exhaustive_conservation(self, model):
        table = build_collision_table(model)
        z = table.z
        cx, cy = exact_momentum_units(table.kind)
        for q in (0, 1):
            for s in range(1 << z):
                out = int(table.entries[q, s])
                sin = [(s >> i) & 1 for i in range(z)]
                sout = [(out >> i) & 1 for i in range(z)]
                assert sum(sin) == sum(sout)
                assert np.dot(sin, cx) == np.dot(sout, cx)
                assert np.dot(sin, cy) == np.dot(sout, cy)

    def test_collision_term_moments_vanish(self):
        # sum_i Omega_i = 0 and sum_i v_i Omega_i = 0 for every entry
        table = build_collision_table(FHP)
        cx, cy = exact_momentum_units(HEX6)
        for q in (0, 1):
            for s in range(64):
                out = int(table.entries[q, s])
                omega = [((out >> i) & 1) - ((s >> i) & 1) for i in range(6)]
                assert sum(omega) == 0
                assert np.dot(omega, cx) == 0 and np.dot(omega, cy) == 0

    def test_q_tables_are_mirror_images(self):
        # reflecting the direction indices (i -> 8-i mod 6) swaps q=0 and q=1
        table = build_collision_table(FHP)

        def reflect(state):
            out = 0
            for i in range(1, 7):
                j = (8 - i) % 6 or 6
                out |= ((state >> (i - 1)) & 1) << (j - 1)
            return out

        for s in range(64):
            assert table.entries[0, reflect(s)] == reflect(table.entries[1, s])


class TestRandomPolicy:
    def test_q_reproducible_per_site_and_step(self):
        policy = RandomPolicy(seed=42)
        f1 = policy.q_field(17, (8, 8))
        f2 = policy.q_field(17, (8, 8))
        assert (f1 == f2).all()
        assert policy.q_at(17, (8, 8), 3, 5) == f1[5, 3]

    def test_q_differs_across_steps(self):
        policy = RandomPolicy(seed=42)
        assert (policy.q_field(0, (16, 16)) != policy.q_field(1, (16, 16))).any()

    def test_q_is_roughly_balanced(self):
        policy = RandomPolicy(seed=0)
        field = policy.q_field(0, (64, 64))
        assert abs(field.mean() - 0.5) < 3 * 0.5 / 64  # 3 sigma for 4096 bits


class TestStep:
    def test_empty_lattice_stays_empty(self):
        topo = Topology(HEX6, 8, 8)
        state = LatticeState.empty(topo)
        out = step(state, build_collision_table(FHP), RandomPolicy(1))
        assert out.particle_count() == 0 and out.time == 1

    def test_model_topology_mismatch(self):
        state = LatticeState.empty(Topology(SQUARE4, 4, 4))
        with pytest.raises(ValueError, match="does not match"):
            step(state, build_collision_table(FHP), RandomPolicy(1))

    def test_hpp_head_on_three_step_trace(self):
        # E at (2,4) and W at (4,4) meet at (3,4), rotate to N/S, separate
        topo = Topology(SQUARE4, 8, 8)
        occ = np.zeros((8, 8), dtype=np.uint8)
        occ[4, 2] = bits(1)
        occ[4, 4] = bits(3)
        state = LatticeState(topo, occ)
        table = build_collision_table(HPP)
        rng = RandomPolicy(0)

        s1 = step(state, table, rng)
        assert s1.occupations[4, 3] == bits(1, 3)
        s2 = step(s1, table, rng)
        assert s2.occupations[5, 3] == bits(2)
        assert s2.occupations[3, 3] == bits(4)
        s3 = step(s2, table, rng)
        assert s3.occupations[6, 3] == bits(2)
        assert s3.occupations[2, 3] == bits(4)

    def test_mass_and_momentum_exact_over_1000_steps(self):
        topo = Topology(HEX6, 32, 32)
        state = random_state(topo, density=3.0, seed=5)
        table = build_collision_table(FHP)
        rng = RandomPolicy(5)
        mass0, mom0 = state.particle_count(), state.momentum_units()
        state = run(state, table, rng, 1000)
        assert state.particle_count() == mass0
        assert state.momentum_units() == mom0
        assert state.time == 1000

    @pytest.mark.parametrize("model,kind", [(FHP, HEX6), (HPP, SQUARE4)])
    def test_identical_seeds_identical_trajectories(self, model, kind):
        topo = Topology(kind, 16, 16)
        table = build_collision_table(model)

        def trajectory():
            state = random_state(topo, 2.0, seed=9)
            rng = RandomPolicy(9)
            frames = []
            for _ in range(20):
                state = step(state, table, rng)
                frames.append(state.occupations)
            return np.stack(frames)

        assert (trajectory() == trajectory()).all()

    def test_collide_preserves_site_mass(self):
        topo = Topology(HEX6, 12, 12)
        state = random_state(topo, 3.0, seed=3)
        out = collide(state, build_collision_table(FHP), RandomPolicy(3))
        from lgcalab.lattice import POPCOUNT8

        assert (POPCOUNT8[out.occupations] == POPCOUNT8[state.occupations]).all()


def test_random_state_density():
    topo = Topology(HEX6, 64, 64)
    state = random_state(topo, density=3.0, seed=1)
    rho = state.particle_count() / topo.n_sites
    # binomial 3-sigma band around 3.0 for 6*64*64 draws at p = 1/2
    sigma = np.sqrt(6 * 0.25 / topo.n_sites)
    assert abs(rho - 3.0) < 3 * sigma

    with pytest.raises(ValueError, match="density"):
        random_state(topo, 7.0, seed=1)
