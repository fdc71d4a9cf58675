import numpy as np
import pytest

from nashmg.baselines import (
    MAX,
    MIN,
    BRConfig,
    PolicySet,
    approximate_exploitability,
    do_train,
    fsp_train,
    meta_nash,
    meta_payoffs,
    q_learning_best_response,
    self_play_train,
)
from nashmg.errors import DimensionMismatch
from nashmg.learners import EpsilonSchedule
from nashmg.markov_game import MarkovPolicy, TabularMG, generate_random_mg, matrix_game_mg
from nashmg.matrix_nash import is_distribution
from nashmg.oracle import (
    best_response_to_markov,
    best_response_to_markov_min,
    exact_nash_solve,
    exploitability,
    policy_value,
)

MATCHING_PENNIES = [[1.0, -1.0], [-1.0, 1.0]]
EXACT = BRConfig(exact=True)
FAST = BRConfig(episodes=300)


def pure(actions, n):
    return MarkovPolicy.deterministic(np.asarray(actions), n)


def deterministic_game(seed, S=2, A=2, B=2, H=2):
    rng = np.random.default_rng(seed)
    nxt = rng.integers(S, size=(H - 1, S, A, B))
    P = np.eye(S)[nxt]
    return TabularMG(P, rng.uniform(-1, 1, (H, S, A, B)))


def test_learned_response_in_matching_pennies():
    mg = matrix_game_mg(MATCHING_PENNIES)
    heads = pure([[0]], 2)
    nu, used = q_learning_best_response(mg, heads, MIN, BRConfig(episodes=10_000, alpha=0.1))
    assert used == 10_000
    np.testing.assert_array_equal(nu.probs[0, 0], [0.0, 1.0])
    assert policy_value(mg, heads, nu)[0, 0] == -1.0
    mu, _ = q_learning_best_response(mg, heads, MAX, BRConfig(episodes=10_000))
    np.testing.assert_array_equal(mu.probs[0, 0], [1.0, 0.0])


@pytest.mark.parametrize("seed", range(3))
def test_learned_response_close_to_exact_on_deterministic_game(seed):
    mg = deterministic_game(seed)
    rng = np.random.default_rng(seed)
    mu = MarkovPolicy(rng.dirichlet(np.ones(2), size=(2, 2)))
    cfg = BRConfig(episodes=20_000, alpha=0.01, schedule=EpsilonSchedule.constant(0.3))
    nu_learned, _ = q_learning_best_response(mg, mu, MIN, cfg, rng)
    exact = best_response_to_markov(mg, mu)[1][0, 0]
    assert policy_value(mg, mu, nu_learned)[0, 0] - exact <= 0.05
    nu = MarkovPolicy(rng.dirichlet(np.ones(2), size=(2, 2)))
    mu_learned, _ = q_learning_best_response(mg, nu, MAX, cfg, rng)
    exact = best_response_to_markov_min(mg, nu)[1][0, 0]
    assert exact - policy_value(mg, mu_learned, nu)[0, 0] <= 0.05


def test_zero_step_size_keeps_lowest_index_actions():
    mg = generate_random_mg(3, 2, 4, 3, seed=0)
    nu, _ = q_learning_best_response(mg, MarkovPolicy.uniform(3, 3, 2), MIN, BRConfig(episodes=50, alpha=0.0))
    np.testing.assert_array_equal(nu.probs.argmax(axis=-1), 0)


def test_threshold_early_stop():
    mg = matrix_game_mg(MATCHING_PENNIES)
    cfg = BRConfig(episodes=5000, threshold=0.5, window=50, schedule=EpsilonSchedule.constant(0.0))
    _, used = q_learning_best_response(mg, pure([[0]], 2), MIN, cfg)
    assert used < 5000


def test_best_response_argument_checks():
    mg = matrix_game_mg(MATCHING_PENNIES)
    with pytest.raises(ValueError):
        q_learning_best_response(mg, pure([[0]], 2), "both")
    with pytest.raises(DimensionMismatch):
        q_learning_best_response(mg, MarkovPolicy.uniform(1, 1, 3), MIN)
    with pytest.raises(ValueError):
        q_learning_best_response(mg, pure([[0]], 2), MIN, BRConfig(episodes=0))


def test_policy_set_checks():
    with pytest.raises(ValueError):
        PolicySet([], MAX)
    with pytest.raises(ValueError):
        PolicySet([MarkovPolicy.uniform(1, 1, 2)], "nobody")
    with pytest.raises(DimensionMismatch):
        PolicySet([MarkovPolicy.uniform(1, 1, 2), MarkovPolicy.uniform(1, 1, 3)], MAX)
    ps = PolicySet([pure([[0]], 2), pure([[1]], 2)], MAX)
    mix = ps.mixture([0.0, 1.0])
    assert len(mix.components) == 1
    with pytest.raises(DimensionMismatch):
        ps.mixture([1.0])


def test_singleton_meta_game():
    mg = generate_random_mg(2, 2, 2, 2, seed=0)
    rho_mu, rho_nu = meta_nash(mg, PolicySet([MarkovPolicy.uniform(2, 2, 2)], MAX),
                               PolicySet([MarkovPolicy.uniform(2, 2, 2)], MIN), 10)
    np.testing.assert_array_equal(rho_mu, [1.0])
    np.testing.assert_array_equal(rho_nu, [1.0])


def test_embedded_matching_pennies_meta_game():
    mg = matrix_game_mg(MATCHING_PENNIES)
    set_mu = PolicySet([pure([[0]], 2), pure([[1]], 2)], MAX)
    set_nu = PolicySet([pure([[0]], 2), pure([[1]], 2)], MIN)
    np.testing.assert_array_equal(meta_payoffs(mg, set_mu, set_nu, 1), MATCHING_PENNIES)
    rho_mu, rho_nu = meta_nash(mg, set_mu, set_nu, 1)
    np.testing.assert_allclose(rho_mu, [0.5, 0.5])
    np.testing.assert_allclose(rho_nu, [0.5, 0.5])


def test_duplicate_policies_do_not_change_exploitability():
    mg = generate_random_mg(2, 2, 2, 2, seed=3)
    rng = np.random.default_rng(3)
    p, q = (MarkovPolicy(rng.dirichlet(np.ones(2), size=(2, 2))) for _ in range(2))
    nu = MarkovPolicy.uniform(2, 2, 2)
    set_mu = PolicySet([p, q], MAX)
    dup = PolicySet([p, q, q], MAX)
    base = exploitability(mg, set_mu.mixture([0.4, 0.6]), nu)
    for split in ([0.4, 0.6, 0.0], [0.4, 0.3, 0.3], [0.4, 0.0, 0.6]):
        assert exploitability(mg, dup.mixture(split), nu) == pytest.approx(base, abs=1e-12)
    _, rho_nu = meta_nash(mg, dup, PolicySet([nu], MIN), 1, exact=True)
    assert rho_nu.tolist() == [1.0]


def test_self_play_first_iteration():
    mg = generate_random_mg(2, 2, 2, 2, seed=1)
    res = self_play_train(mg, 1, FAST)
    assert (len(res.set_mu), len(res.set_nu)) == (2, 1)
    assert res.episodes == FAST.episodes
    np.testing.assert_array_equal(res.meta_mu, [0.0, 1.0])
    np.testing.assert_array_equal(res.meta_nu, [1.0])


def test_fictitious_play_first_iteration_equals_self_play():
    mg = generate_random_mg(2, 2, 2, 2, seed=1)
    sp, fsp = self_play_train(mg, 1, FAST, seed=5), fsp_train(mg, 1, FAST, seed=5)
    assert sp.set_mu.policies == fsp.set_mu.policies
    assert sp.set_nu.policies == fsp.set_nu.policies
    assert sp.episodes == fsp.episodes
    np.testing.assert_allclose(fsp.meta_mu, [0.5, 0.5])


def test_double_oracle_first_iteration():
    mg = generate_random_mg(2, 2, 2, 2, seed=2)
    res = do_train(mg, 1, EXACT, exact_meta=True)
    assert (len(res.set_mu), len(res.set_nu)) == (2, 1)
    u = MarkovPolicy.uniform(2, 2, 2)
    assert res.set_mu.policies[-1] == best_response_to_markov_min(mg, u)[0]


@pytest.mark.invariant
@pytest.mark.parametrize("train", [self_play_train, fsp_train, do_train])
def test_iteration_invariants(train):
    mg = generate_random_mg(2, 2, 3, 2, seed=7)
    log = []

    def hook(t, episodes, mix_mu, mix_nu):
        log.append((t, episodes))
        for mix in (mix_mu, mix_nu):
            assert is_distribution(mix.meta)

    res = train(mg, 6, FAST, hook=hook)
    T = res.iterations
    assert T == 6 and len(log) == 7
    assert len(res.set_mu) <= T + 1 and len(res.set_nu) <= T + 1
    assert len(res.set_mu) + len(res.set_nu) == T + 2
    assert [e for _, e in log] == [FAST.episodes * t for t in range(7)]
    for meta in (res.meta_mu, res.meta_nu):
        assert is_distribution(meta)
    if train is self_play_train:
        assert res.meta_mu.max() == 1.0 and res.meta_nu.max() == 1.0
    if train is fsp_train:
        np.testing.assert_allclose(res.meta_mu, 1 / len(res.set_mu))
        np.testing.assert_allclose(res.meta_nu, 1 / len(res.set_nu))


@pytest.mark.invariant
@pytest.mark.parametrize("train", [self_play_train, fsp_train, do_train])
def test_trainers_are_bit_reproducible(train):
    mg = generate_random_mg(2, 2, 2, 3, seed=8)
    a, b = train(mg, 4, FAST, seed=3), train(mg, 4, FAST, seed=3)
    for pa, pb in zip(a.set_mu.policies + a.set_nu.policies, b.set_mu.policies + b.set_nu.policies):
        assert pa == pb
    assert np.array_equal(a.meta_mu, b.meta_mu) and np.array_equal(a.meta_nu, b.meta_nu)


def test_self_play_cycles_in_matching_pennies():
    mg = matrix_game_mg(MATCHING_PENNIES)
    res = self_play_train(mg, 8, EXACT)
    mu, nu = res.mixtures()
    assert exploitability(mg, mu, nu) == 2.0


def test_fictitious_play_approaches_nash_in_matching_pennies():
    mg = matrix_game_mg(MATCHING_PENNIES)
    gaps = [exploitability(mg, *fsp_train(mg, t, EXACT).mixtures()) for t in (10, 50)]
    assert gaps[1] < gaps[0] and gaps[1] < 0.1


@pytest.mark.parametrize("seed", range(5))
def test_double_oracle_solves_one_step_games(seed):
    mg = generate_random_mg(1, 3, 3, 1, seed)
    res = do_train(mg, 8, EXACT, exact_meta=True)
    assert exploitability(mg, *res.mixtures()) <= 1e-8


def test_approximate_exploitability_of_nash():
    mg = generate_random_mg(2, 2, 2, 2, seed=5)
    sol = exact_nash_solve(mg)
    approx = approximate_exploitability(mg, sol.mu_star, sol.nu_star, BRConfig(episodes=5000), 20_000)
    assert approx <= 0.1
    pennies = matrix_game_mg(MATCHING_PENNIES)
    heads = pure([[0]], 2)
    assert approximate_exploitability(pennies, heads, heads, BRConfig(episodes=2000), 1000) == 2.0
