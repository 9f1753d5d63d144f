import math

import numpy as np
import pytest

from hwrc.circuit import CNOT, CZ, validate
from hwrc.experiments import parallel_map, worker_count
from hwrc.experiments.cb import (
    ALL_PAULIS,
    DEFAULT_PAULIS,
    GATEWARE,
    SOFTWARE,
    CbConfig,
    ConfigError,
    build_cb_circuits,
    exact_cb_expectations,
    run_cb,
)
from hwrc.experiments.fitting import ExpFit, FitError, fit_exponential, process_infidelity
from hwrc.experiments.profile import (
    ProfileConfig,
    compile_ratio,
    depth_scaling,
    profile_summary,
    time_profile,
)
from hwrc.experiments.variance import BARE, FRC, SOFTWARE as VAR_SOFTWARE, VarianceConfig, exact_errors, variance_study
from hwrc.sim import CoherentTerm, GateNoise, NoiseModel, Simulator

DEPTHS = (2, 8, 32)


def depolarizing(lam, kind=CZ):
    return NoiseModel({kind: GateNoise(depolarizing=lam)})


def fits_from_exact(config):
    exact = exact_cb_expectations(config)
    return {p: fit_exponential(config.depths, [exact[(p, m)] for m in config.depths]) for p in config.paulis}


# -- fitting -------------------------------------------------------------------


def test_fit_recovers_exact_points():
    m = np.array(DEPTHS)
    fit = fit_exponential(m, 0.98 * 0.95**m)
    assert fit.amplitude == pytest.approx(0.98, abs=1e-9)
    assert fit.decay == pytest.approx(0.95, abs=1e-9)
    assert fit.decay_err >= 0 and fit.amplitude_err >= 0


def test_fit_errors():
    with pytest.raises(FitError):
        fit_exponential([8, 8, 8], [0.5, 0.5, 0.5])
    with pytest.raises(FitError):
        fit_exponential([2, 8], [1.2, 0.9])
    with pytest.raises(FitError):
        fit_exponential([2, 8, 32], [0.9, 0.8])


def test_fit_on_bernoulli_samples():
    rng = np.random.default_rng(2024)
    shots = 1000
    means, sigmas = [], []
    for m in DEPTHS:
        q = (1 + 0.98**m) / 2
        x = np.where(rng.random(shots) < q, 1.0, -1.0)
        means.append(x.mean())
        sigmas.append(x.std(ddof=1) / math.sqrt(shots))
    fit = fit_exponential(DEPTHS, means, sigmas)
    assert abs(fit.decay - 0.98) <= 3 * fit.decay_err


def test_bimodal_single_shots_fit_through_means():
    # one +-1 value per circuit still fits through the per-depth averages
    values = {2: [1, 1, 1, -1], 8: [1, 1, -1, 1, 1, -1], 32: [1, -1, 1, -1, 1, 1]}
    fit = fit_exponential(list(values), [np.mean(v) for v in values.values()])
    assert -1 <= fit.decay <= 1


def test_process_infidelity_convention():
    perfect = {p: ExpFit(1.0, 1.0, 0.0, 0.0) for p in DEFAULT_PAULIS}
    assert process_infidelity(perfect).value == 0.0
    dep = {p: ExpFit(1.0, 0.98, 0.0, 0.001) for p in DEFAULT_PAULIS}
    inf = process_infidelity(dep)
    assert inf.value == pytest.approx(0.02 * 15 / 16, abs=1e-12)
    assert inf.stderr == pytest.approx(15 / 16 * 0.001 / 3)
    with pytest.raises(FitError):
        process_infidelity({})


# -- cycle benchmarking --------------------------------------------------------


def test_circuit_counts_per_mode():
    assert build_cb_circuits(CbConfig(mode=GATEWARE)).n_compiled == 27
    assert build_cb_circuits(CbConfig(mode=SOFTWARE, n_rand=30)).n_compiled == 810
    one = CbConfig(paulis=("ZZ",), depths=(2,), mode=GATEWARE)
    assert build_cb_circuits(one).n_compiled == 1
    assert build_cb_circuits(CbConfig(paulis=("ZZ",), depths=(2,), mode=SOFTWARE)).n_compiled == 30


@pytest.mark.parametrize("kind", [CZ, CNOT])
def test_noiseless_cb_circuits_give_plus_one(kind):
    config = CbConfig(kind=kind, paulis=ALL_PAULIS, depths=(2, 4, 6), mode=SOFTWARE, n_rand=3)
    circuits = build_cb_circuits(config)
    sim = Simulator(None, 2)
    for cb, randomized in zip(circuits.bare, circuits.randomized):
        assert validate(cb.circuit).ok
        for c in (cb.circuit, *randomized):
            assert validate(c).ok
            label = "".join("Z" if q in cb.measured else "I" for q in range(2))
            assert cb.sign * sim.run(c).expectation(label) == pytest.approx(1.0, abs=1e-12)


def test_config_errors():
    with pytest.raises(ConfigError):
        CbConfig(paulis=("QQ",))
    with pytest.raises(ConfigError):
        CbConfig(paulis=("II",))
    with pytest.raises(ConfigError):
        CbConfig(depths=(3,))
    with pytest.raises(ConfigError):
        CbConfig(shots=0)
    with pytest.raises(ConfigError):
        CbConfig(mode="hardware")


def test_exact_depolarizing_decays():
    config = CbConfig(paulis=ALL_PAULIS, noise=depolarizing(0.98))
    for fit in fits_from_exact(config).values():
        assert fit.decay == pytest.approx(0.98, abs=1e-6)


def test_exact_pauli_channel_infidelity():
    probs = {"XX": 0.01, "ZI": 0.02, "YZ": 0.005}
    config = CbConfig(paulis=ALL_PAULIS, noise=NoiseModel({CZ: GateNoise(stochastic=probs)}))
    inf = process_infidelity(fits_from_exact(config))
    # the channel's process infidelity is its total error probability; CB decays are geometric
    # means of fidelities along each propagation orbit, which differ at second order
    assert inf.value == pytest.approx(sum(probs.values()), abs=1e-4)


def test_cb_run_is_deterministic():
    config = CbConfig(paulis=("ZZ", "XI"), depths=(2, 4), shots=40, mode=GATEWARE, seed=5, noise=depolarizing(0.95))
    a, b = run_cb(config), run_cb(config)
    assert a.to_json() == b.to_json()
    assert a.n_compiled == 4


def test_cb_parallel_matches_serial():
    config = CbConfig(paulis=("ZZ",), depths=(2, 4), shots=20, mode=SOFTWARE, n_rand=5, noise=depolarizing(0.95))
    assert run_cb(config, workers=1).to_json() == run_cb(config, workers=2).to_json()


def test_cb_pauli_channel_within_three_sigma():
    probs = {"XX": 0.01, "ZI": 0.02}
    noise = NoiseModel({CZ: GateNoise(stochastic=probs)})
    config = CbConfig(paulis=("ZZ", "XX", "YI"), shots=1000, mode=SOFTWARE, n_rand=20, seed=1, noise=noise)
    exact = fits_from_exact(config)
    result = run_cb(config)
    for p, fit in result.fits.items():
        assert abs(fit.decay - exact[p].decay) <= 3 * fit.decay_err + 1e-9


# -- variance study ------------------------------------------------------------


def small_variance(**kw):
    base = dict(n_circuits=6, depth=3, shots=400, n_rand=10, subsample_shots=50, subsample_repeats=20, seed=4)
    base.update(kw)
    return VarianceConfig(**base)


def test_noiseless_errors_are_shot_noise():
    config = small_variance(modes=(BARE, FRC, VAR_SOFTWARE))
    result = variance_study(config)
    bound = 1.0 / config.shots  # variance of a +-1 mean is at most 1/shots
    for mode, err in result.errors.items():
        assert err.shape == (6, 3)
        assert np.mean(err**2) <= 3 * bound
        assert np.all(np.abs(err) <= 5 * math.sqrt(bound))
    for by_mode in result.case_distributions.values():
        assert all(d.shape == (20, 3) for d in by_mode.values())


def test_coherent_bias_shrinks_under_twirling():
    config = small_variance(n_circuits=30, depth=4, noise=NoiseModel({CZ: GateNoise(coherent=CoherentTerm("ZZ", 0.15))}))
    bare = exact_errors(config, twirl=False)
    twirled = exact_errors(config, twirl=True)
    assert np.max(np.abs(bare)) > 0.01
    assert np.abs(twirled).mean() < np.abs(bare).mean()
    assert twirled.var() < bare.var()


def test_variance_study_is_deterministic():
    noise = NoiseModel({CZ: GateNoise(coherent=CoherentTerm("ZZ", 0.15))})
    config = small_variance(n_circuits=3, noise=noise)
    a, b = variance_study(config), variance_study(config)
    for mode in config.modes:
        assert np.array_equal(a.errors[mode], b.errors[mode])
        assert np.array_equal(a.sub_var[mode], b.sub_var[mode])
    assert a.to_json() == b.to_json()
    assert variance_study(config, workers=2).to_json() == a.to_json()


def test_variance_config_validation():
    with pytest.raises(ValueError):
        VarianceConfig(width=3)
    with pytest.raises(ValueError):
        VarianceConfig(modes=("nope",))
    with pytest.raises(ValueError):
        VarianceConfig(shots=10, subsample_shots=20)
    c = small_variance()
    assert VarianceConfig.from_json(c.to_json()) == c


# -- profiling -----------------------------------------------------------------


def test_profile_rows():
    config = ProfileConfig(widths=(2,), depths=(4, 8), n_rand=10, repeats=1)
    rows = time_profile(config)
    assert len(rows) == 4
    for r in rows:
        assert r.n_compiled == (1 if r.mode == "gateware-frc" else 10)
        assert all(v >= 0 for v in r.as_dict().values() if isinstance(v, float))
    sw = {r.depth: r for r in rows if r.mode == "software-rc"}
    gw = {r.depth: r for r in rows if r.mode == "gateware-frc"}
    for d in (4, 8):
        assert gw[d].total < sw[d].total
    assert compile_ratio(rows, 2, 4) > 1
    assert [d for d, _ in depth_scaling(rows, "gateware-frc", 2)] == [4, 8]
    assert len(profile_summary(rows)["rows"]) == 4


# -- helpers -------------------------------------------------------------------


def test_worker_count(monkeypatch):
    monkeypatch.delenv("HWRC_THREADS", raising=False)
    assert worker_count(None) == 1
    assert worker_count(3) == 3
    monkeypatch.setenv("HWRC_THREADS", "2")
    assert worker_count(None) == 2


def test_parallel_map_keeps_order():
    assert parallel_map(abs, [-3, 1, -2], 2) == [3, 1, 2]
