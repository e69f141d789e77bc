"""Smoke test for the pyqdeconv extension.

Build with `maturin develop` from crates/python, or copy the cdylib from
target/ next to this file as pyqdeconv.so, then run `python smoke_test.py`.
"""

import pathlib

import pyqdeconv as q


DATA = pathlib.Path(__file__).resolve().parents[3] / "data"


def load(name):
    return q.Channel.from_json((DATA / name).read_text())


def main():
    phi, guess = load("qutrit-phase1.json"), load("qutrit-phase0.json")
    gp = q.GuessPair(phi, guess)
    fam = gp.family()
    assert fam.n_params == 5, fam
    assert gp.verify(fam, n_states=50) <= 1e-9

    member = fam.basis()[0]
    rho = [[0.5, 0.25, 0], [0.25, 0.25, 0.1j], [0, -0.1j, 0.25]]
    rep = gp.evaluate(member, rho)
    assert rep["delta_nd"] <= 1e-9, rep

    exact = gp.estimate(member, rho, shots=0)
    assert abs(exact["mean"] - rep["deconvolved"]) <= 1e-10
    noisy = gp.estimate(member, rho, shots=10_000, seed=3)
    assert abs(noisy["mean"] - rep["deconvolved"]) <= 5 * noisy["std_error"] + 1e-12

    x = [[0, 1], [1, 0]]
    y = [[0, -1j], [1j, 0]]
    z = [[1, 0], [0, -1]]
    i2 = [[1, 0], [0, 1]]
    assert q.ru_family([i2, x, y, z]).n_params == 1
    assert q.commutant_family([x, z]).n_params == 1
    eig, fam2 = q.two_unitary_family(x, i2)
    assert fam2.n_params == 2 and sorted(round(l.real) for l in eig) == [-1, 1]

    assert len(q.quorum_basis(3)) == 9
    assert len(q.decompose(z)) == 4

    names = q.list_scenarios()
    assert "bitflip-memory" in names
    res = q.run_scenario("bitflip-memory", {"p": 0.1}, seed=5)
    assert res["passed"] and res["family_dim"] == 12

    try:
        q.Channel([[[1, 0], [0, 0]]])
    except ValueError as e:
        assert "trace" in str(e)
    else:
        raise AssertionError("non trace-preserving channel accepted")

    print("pyqdeconv smoke test: ok", q.__version__)


if __name__ == "__main__":
    main()
