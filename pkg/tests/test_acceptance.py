"""End-to-end acceptance checks, one test per criterion.

Each check prints a single ``[PASS]``/``[FAIL]`` line; the lines are repeated
in the pytest terminal summary. Run standalone with
``python tests/test_acceptance.py``.
"""
import json
import time

import numpy as np
from scipy.integrate import quad
from scipy.stats import unitary_group

from chaoslab.channel import (
    amplitude_damping_channel,
    choi_from_unitary,
    choi_purity,
    depolarizing_channel,
    haar_averaged_output_purity,
    propagator,
    unitary_channel,
)
from chaoslab.echo import (
    averaged_subsystem_purity,
    echo_protocol,
    env_purity,
    haar_choi_echo_design,
    haar_choi_echo_exact,
    haar_choi_echo_mc,
    time_averaged_choi_echo,
)
from chaoslab.models import build_model
from chaoslab.spectra import eigh, poisson_ratios, sample_goe_mean_r, spacing_ratios, surmise_pdf
from chaoslab.spinops import haar_qubits, make_rng, random_product_state, sector_basis
from chaoslab.sweep import SweepConfig, run_disorder_scan, run_sweep

RESULTS = []


def report(number, title, ok, detail, elapsed):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail}; {elapsed:.1f}s)"
    RESULTS.append(line)
    print(line)
    return ok


def random_eig(L, rng):
    n = 2**L
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return eigh((A + A.conj().T) / 2)


def criterion_1():
    t0 = time.perf_counter()
    vals = {
        "unitary": choi_purity(unitary_channel(unitary_group.rvs(2, random_state=0))),
        "amp_damp": choi_purity(amplitude_damping_channel(1.0)),
        "depol": choi_purity(depolarizing_channel(1.0)),
    }
    target = {"unitary": 1.0, "amp_damp": 0.5, "depol": 0.25}
    err = max(abs(vals[k] - target[k]) for k in vals)
    elapsed = time.perf_counter() - t0
    return report(1, "channel fixtures", err <= 1e-12 and elapsed < 1, f"max err {err:.1e}", elapsed)


def criterion_2():
    t0 = time.perf_counter()
    worst = 0.0
    for L, count in ((3, 20), (4, 5)):
        for k in range(count):
            U = unitary_group.rvs(2**L, random_state=100 * L + k)
            psi = random_product_state(L - 1, 100 * L + k).amplitudes
            a = echo_protocol(U, psi)
            b = env_purity(U, psi)
            c = choi_purity(choi_from_unitary(U, psi))
            worst = max(worst, abs(a - b), abs(b - c), abs(a - c))
    elapsed = time.perf_counter() - t0
    return report(2, "echo identity suite", worst <= 1e-10 and elapsed < 60,
                  f"max pairwise diff {worst:.1e}", elapsed)


def criterion_3():
    t0 = time.perf_counter()
    rng = make_rng(3)
    times = np.array([0.0, 0.5, 1.3, 3.1, 10.0])
    worst, z_max = 0.0, 0.0
    for L in (3, 4):
        for k in range(10):
            eig = random_eig(L, rng)
            exact = haar_choi_echo_exact(eig, times)
            worst = max(worst, np.max(np.abs(exact - haar_choi_echo_design(eig, times))))
            mean, se = haar_choi_echo_mc(eig, times[1:], 2000, seed=[L, k])
            z_max = max(z_max, float(np.max(np.abs(mean - exact[1:]) / se)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and z_max <= 3 and elapsed < 300
    return report(3, "Haar-average oracles", ok,
                  f"exact-design {worst:.1e}, max MC deviation {z_max:.2f} SE", elapsed)


def criterion_4():
    t0 = time.perf_counter()
    rng = make_rng(4)
    z_max = 0.0
    samplers = {
        "ising": lambda: {"L": 4, "hx": rng.uniform(0.2, 2), "hz": rng.uniform(0, 2), "J": rng.uniform(0.1, 2)},
        "heisenberg": lambda: {"L": 4, "h": rng.uniform(0.1, 6), "seed": int(rng.integers(2**31))},
        "xxz_defect": lambda: {"L": 4, "Jxy": rng.uniform(0.1, 2), "Jz": 1.0, "eps": rng.uniform(0, 1.5)},
    }
    for model, draw in samplers.items():
        for _ in range(10):
            eig = eigh(build_model(model, draw()))
            U = propagator(eig, rng.uniform(0.5, 20))
            c = choi_from_unitary(U, random_product_state(3, int(rng.integers(2**31))))
            psi = haar_qubits(5000, rng)
            rho_in = np.einsum("ma,mb->mab", psi, psi.conj())
            out = 2 * np.einsum("aibj,mij->mab", c.choi.reshape(2, 2, 2, 2), rho_in)
            pur = np.real(np.einsum("mab,mba->m", out, out))
            se = pur.std(ddof=1) / np.sqrt(pur.size)
            z_max = max(z_max, abs(pur.mean() - haar_averaged_output_purity(c)) / se)
    elapsed = time.perf_counter() - t0
    return report(4, "output-purity closure", z_max <= 3 and elapsed < 300,
                  f"max deviation {z_max:.2f} SE over 30 channels", elapsed)


def criterion_5():
    t0 = time.perf_counter()
    goe = sample_goe_mean_r(1000, 10, seed=5)
    pois = poisson_ratios(100_000, seed=5).mean()
    norms = [quad(lambda r: surmise_pdf(k, r), 0, 1, epsabs=1e-12)[0] for k in ("poisson", "goe")]
    elapsed = time.perf_counter() - t0
    ok = (abs(goe - 0.5307) <= 0.01 and abs(pois - 0.386) <= 0.005
          and max(abs(n - 1) for n in norms) <= 1e-6 and elapsed < 120)
    return report(5, "spectral self-test", ok,
                  f"GOE {goe:.4f}, Poisson {pois:.4f}, surmise norms {norms[0]:.7f}/{norms[1]:.7f}", elapsed)


def _ising_mean_r(hz, J, L=12):
    B = sector_basis(L, "parity", "even")
    H = build_model("ising", {"L": L, "hx": 1.0, "hz": hz, "J": J}, sector=B)
    return spacing_ratios(eigh(H, vectors=False).eigenvalues, 0.05).mean_r


def criterion_6():
    t0 = time.perf_counter()
    chaotic = _ising_mean_r(0.48, 0.8)
    integrable = _ising_mean_r(1.446, 0.05)
    elapsed = time.perf_counter() - t0
    ok = chaotic >= 0.50 and integrable <= 0.42 and elapsed < 600
    return report(6, "scaled level statistics (Ising L=12 even)", ok,
                  f"chaotic {chaotic:.4f}, integrable {integrable:.4f}", elapsed)


def _ising_dynamics(hz, J):
    eig = eigh(build_model("ising", {"L": 7, "hx": 1.0, "hz": hz, "J": J}))
    echo = time_averaged_choi_echo(eig, T=100, dt=0.1, estimator="exact")
    p_bar, _ = averaged_subsystem_purity(eig, N=50, T=100, dt=0.1, seed=7)
    return echo, p_bar


def criterion_7():
    t0 = time.perf_counter()
    e_c, p_c = _ising_dynamics(0.48, 0.8)
    e_i, p_i = _ising_dynamics(1.446, 0.05)
    e_0, p_0 = _ising_dynamics(0.48, 0.0)
    elapsed = time.perf_counter() - t0
    ok = (e_c < e_i and p_c < p_i and abs(e_0 - 1) <= 1e-9 and abs(p_0 - 1) <= 1e-9
          and elapsed < 1800)
    return report(7, "scaled dynamical ordering (Ising L=7)", ok,
                  f"echo {e_c:.4f} < {e_i:.4f}, P {p_c:.4f} < {p_i:.4f}, J=0 echo-1 {e_0 - 1:.1e} P-1 {p_0 - 1:.1e}",
                  elapsed)


def criterion_8(tmp_path):
    t0 = time.perf_counter()
    cfg = SweepConfig(model="heisenberg", grid={"h": [0.5, 1.0, 2.0, 4.0, 6.0]}, n_realizations=10,
                      L_dynamics=7, T=100, dt=0.1, N=50, metrics=["purity", "echo"], base_seed=8)
    rows = {r["h"]: r for r in run_disorder_scan(cfg, tmp_path)}
    lo, hi = rows[0.5], rows[6.0]
    ratio = lo["echo_deviation_mean"] / hi["echo_deviation_mean"]
    elapsed = time.perf_counter() - t0
    ok = ratio >= 2 and lo["echo_std"] < lo["P_bar_std"] and elapsed < 3600
    return report(8, "scaled disorder trend (Heisenberg L=7)", ok,
                  f"1-echo ratio h=0.5/h=6 {ratio:.3f} (need >= 2), "
                  f"std echo {lo['echo_std']:.4f} vs std P {lo['P_bar_std']:.4f} at h=0.5", elapsed)


def criterion_9():
    t0 = time.perf_counter()
    L = 12
    B = sector_basis(L, "magnetization", 5)
    H = build_model("xxz_defect", {"L": L, "Jxy": 2.0, "Jz": 1.0, "eps": 0.0}, sector=B)
    r = spacing_ratios(eigh(H, vectors=False).eigenvalues, 0.05).mean_r
    echoes = []
    for Jxy, eps in ((2.0, 0.0), (1.0, 0.5)):
        eig = eigh(build_model("xxz_defect", {"L": 7, "Jxy": Jxy, "Jz": 1.0, "eps": eps, "d": 3}))
        echoes.append(time_averaged_choi_echo(eig, T=100, dt=0.1, estimator="exact"))
    rel = abs(echoes[0] - echoes[1]) / echoes[1]
    elapsed = time.perf_counter() - t0
    ok = r <= 0.42 and rel <= 0.10 and elapsed < 3600
    return report(9, "false positive (XXZ clean limit)", ok,
                  f"L=12 <r> {r:.4f}, echo {echoes[0]:.4f} vs chaotic {echoes[1]:.4f} ({100 * rel:.1f}%)",
                  elapsed)


def criterion_10(tmp_path):
    t0 = time.perf_counter()
    cfg = SweepConfig(model="xxz_defect", grid={"Jxy": [0.5, 2.0], "eps": [0.0, 0.5]},
                      L_dynamics=5, L_spectrum=8, T=10, dt=0.1, N=10, base_seed=10)
    run_sweep(cfg, tmp_path / "one", jobs=1)
    run_sweep(cfg, tmp_path / "eight", jobs=8)
    run_sweep(cfg, tmp_path / "again", jobs=1)
    ref = (tmp_path / "one" / "records.csv").read_bytes()
    same = all((tmp_path / d / "records.csv").read_bytes() == ref for d in ("eight", "again"))
    meta = json.loads((tmp_path / "one" / "run_metadata.json").read_text())
    elapsed = time.perf_counter() - t0
    return report(10, "sweep determinism (1 vs 8 workers)", same and meta["n_failed"] == 0,
                  f"{len(ref)} bytes, identical={same}", elapsed)


def test_criterion_1():
    assert criterion_1()


def test_criterion_2():
    assert criterion_2()


def test_criterion_3():
    assert criterion_3()


def test_criterion_4():
    assert criterion_4()


def test_criterion_5():
    assert criterion_5()


def test_criterion_6():
    assert criterion_6()


def test_criterion_7():
    assert criterion_7()


def test_criterion_8(tmp_path):
    assert criterion_8(tmp_path)


def test_criterion_9():
    assert criterion_9()


def test_criterion_10(tmp_path):
    assert criterion_10(tmp_path)


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
                  criterion_7, lambda: criterion_8(tmp / "c8"), criterion_9,
                  lambda: criterion_10(tmp / "c10")]
        passed = [check() for check in checks]
    print(f"{sum(passed)}/{len(passed)} criteria passed")
    sys.exit(0 if all(passed) else 1)
