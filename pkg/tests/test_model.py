import numpy as np
import pytest

from mlhmm.model import (GroupParams, ModelSpec, SubjectParams, SubjectSeries,
                         Dataset, intercepts_from_row, mnl_row,
                         stationary_distribution, validate_tpm)
from mlhmm.populations import BASELINE_TPM, SLEEP_TPM, preset_group_params


def test_mnl_row_symmetric():
    np.testing.assert_allclose(mnl_row([0.0, 0.0]), np.full(3, 1 / 3),
                               atol=1e-15)


def test_mnl_row_hand_value():
    # exp(ln 2) = 2 with baseline 1: (1, 2, 1) / 4
    np.testing.assert_allclose(mnl_row([np.log(2.0), 0.0]),
                               [0.25, 0.5, 0.25], atol=1e-15)


def test_mnl_row_rejects_nonfinite():
    with pytest.raises(ValueError):
        mnl_row([np.inf, 0.0])
    with pytest.raises(ValueError):
        mnl_row([np.nan])


def test_mnl_row_is_distribution_for_random_inputs():
    rng = np.random.default_rng(1)
    for _ in range(500):
        a = rng.normal(0, 20, size=rng.integers(1, 6))
        p = mnl_row(a)
        assert abs(p.sum() - 1.0) < 1e-12
        assert np.all(p >= 0)


def test_mnl_row_permutation_consistency():
    rng = np.random.default_rng(2)
    a = rng.normal(0, 2, 4)
    p = mnl_row(a)
    perm = rng.permutation(4)
    p_perm = mnl_row(a[perm])
    np.testing.assert_allclose(p_perm[1:], p[1:][perm], rtol=1e-12)
    assert p_perm[0] == pytest.approx(p[0], rel=1e-12)


def test_intercepts_from_row_uniform():
    np.testing.assert_allclose(intercepts_from_row([1 / 3, 1 / 3, 1 / 3]),
                               [0.0, 0.0], atol=1e-15)


def test_intercepts_from_row_log_ratios():
    row = [0.984, 0.003, 0.013]
    expected = [np.log(0.003 / 0.984), np.log(0.013 / 0.984)]
    got = intercepts_from_row(row)
    np.testing.assert_allclose(got, expected, rtol=1e-12)
    np.testing.assert_allclose(got, [-5.793, -4.327], atol=5e-4)


@pytest.mark.parametrize("tpm", [SLEEP_TPM, BASELINE_TPM])
def test_mnl_round_trip_population_tpms(tpm):
    for row in tpm:
        back = mnl_row(intercepts_from_row(row))
        np.testing.assert_allclose(back, row, atol=1e-10)


def test_intercepts_from_row_rejects_bad_rows():
    with pytest.raises(ValueError):
        intercepts_from_row([0.0, 0.5, 0.5])     # zero entry
    with pytest.raises(ValueError):
        intercepts_from_row([-0.2, 0.6, 0.6])    # negative entry
    with pytest.raises(ValueError):
        intercepts_from_row([0.5, 0.4, 0.3])     # does not sum to 1


def test_validate_tpm_pass_and_fail():
    assert validate_tpm(np.eye(3)).ok
    assert validate_tpm(SLEEP_TPM).ok
    bad = np.array([[0.5, 0.6, 0.0], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]])
    check = validate_tpm(bad)
    assert not check.ok
    assert "row 1" in check.message
    assert check.row_sums[0] == pytest.approx(1.1)
    with pytest.raises(ValueError):
        validate_tpm(np.ones((2, 3)))


def test_stationary_distribution_two_state_oracle():
    # pi solves pi = pi G: (2/3, 1/3) for this chain
    g = np.array([[0.9, 0.1], [0.2, 0.8]])
    np.testing.assert_allclose(stationary_distribution(g), [2 / 3, 1 / 3],
                               atol=1e-12)


def test_stationary_distribution_long_run_frequencies():
    rng = np.random.default_rng(3)
    g = rng.dirichlet(np.ones(3), size=3)
    pi = stationary_distribution(g)
    np.testing.assert_allclose(pi @ g, pi, atol=1e-12)


def test_stationary_distribution_reducible_falls_back_uniform():
    with pytest.warns(UserWarning):
        pi = stationary_distribution(np.eye(2))
    np.testing.assert_allclose(pi, [0.5, 0.5])


def test_model_spec_invariants():
    spec = ModelSpec(m=3, n_dep=2, state_labels=("a", "b", "c"))
    assert spec.m == 3
    with pytest.raises(ValueError):
        ModelSpec(m=1, n_dep=1)
    with pytest.raises(ValueError):
        ModelSpec(m=2, n_dep=0)
    with pytest.raises(ValueError):
        ModelSpec(m=2, n_dep=1, state_labels=("only",))


def test_group_params_validation():
    g = preset_group_params("sleep", "sleep", zeta=0.25, q_var=0.1)
    assert g.m == 3 and g.n_dep == 3
    np.testing.assert_allclose(g.group_tpm(), SLEEP_TPM, atol=1e-10)
    with pytest.raises(ValueError):
        GroupParams(emiss_mean=np.zeros((2, 3)),
                    emiss_rand_var=-np.ones((2, 3)),
                    emiss_resid_var=np.ones((2, 3)),
                    tpm_intercepts=np.zeros((3, 2)),
                    tpm_rand_var=np.ones((3, 2)))
    with pytest.raises(ValueError):
        GroupParams(emiss_mean=np.zeros((2, 3)),
                    emiss_rand_var=np.ones((2, 3)),
                    emiss_resid_var=np.ones((2, 3)),
                    tpm_intercepts=np.zeros((2, 2)),   # wrong shape
                    tpm_rand_var=np.ones((3, 2)))


def test_subject_params_requires_stochastic_tpm():
    with pytest.raises(ValueError):
        SubjectParams(subj_mean=np.zeros((2, 2)),
                      tpm=np.array([[0.7, 0.4], [0.5, 0.5]]))
    sp = SubjectParams(subj_mean=np.zeros((2, 2)),
                       tpm=np.array([[0.7, 0.3], [0.5, 0.5]]))
    assert sp.tpm.shape == (2, 2)


def test_dataset_invariants():
    s1 = SubjectSeries(obs=np.zeros((5, 2)), true_states=np.ones(5, dtype=int))
    s2 = SubjectSeries(obs=np.zeros((4, 2)))
    ds = Dataset(subjects=(s1, s2))
    assert ds.n_subjects == 2 and ds.n_dep == 2
    assert not ds.has_states()
    with pytest.raises(ValueError):
        Dataset(subjects=(s1, SubjectSeries(obs=np.zeros((4, 3)))))
    with pytest.raises(ValueError):
        SubjectSeries(obs=np.zeros((3, 1)), true_states=np.array([0, 1, 1]))
    bad = SubjectSeries(obs=np.zeros((3, 2)), true_states=np.array([1, 4, 1]))
    with pytest.raises(ValueError):
        Dataset(subjects=(bad,)).validate_states(3)
