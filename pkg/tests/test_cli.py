import json

import numpy as np
import pytest

from vnlocc import io
from vnlocc.algebra import AlgElement, StdVector, left_matrix, vec
from vnlocc.cli import EXIT_CONTRACT, EXIT_INPUT, EXIT_OK, main
from vnlocc.convert import verify_protocol
from vnlocc.examples import car_fock, is_trace_vector
from vnlocc.sampling import random_positive


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write(path, obj):
    path.write_text(json.dumps(obj))
    return path


@pytest.fixture
def m2(tmp_path):
    return write(tmp_path / "alg.json", {"blocks": [{"dim": 2, "weight": 0.5}]})


def test_sv_identity(m2, tmp_path, capsys):
    one = write(tmp_path / "one.json", [[[1, 0], [0, 1]]])
    code, out, _ = run(["sv", m2, one], capsys)
    assert code == EXIT_OK
    assert out == "t,value\n0,1\n1,1\n"


def test_sv_matches_eigenvalues(tmp_path, capsys, rng):
    A = io.decode_algebra({"blocks": [{"dim": 3, "weight": 0.25}, {"dim": 1, "weight": 0.5}]})
    x = random_positive(A, rng)
    alg = write(tmp_path / "a.json", io.encode_algebra(A))
    el = write(tmp_path / "x.json", io.encode_blocks(x))
    code, out, _ = run(["sv", alg, el], capsys)
    assert code == EXIT_OK
    rows = [tuple(map(float, line.split(","))) for line in out.strip().splitlines()[1:]]
    vals = sorted(
        [(v, w) for b, (_, w) in zip(x.data, A.blocks) for v in np.linalg.eigvalsh(b)], reverse=True
    )
    t = 0.0
    for (start, value), (v, w) in zip(rows, vals):
        assert start == pytest.approx(t, abs=1e-15) and value == pytest.approx(v, rel=1e-12)
        t += w
    # terminator row at tau(1) repeats the last value
    assert len(rows) == len(vals) + 1
    assert rows[-1] == (pytest.approx(t), pytest.approx(vals[-1][0], rel=1e-12))


def test_missing_and_malformed(m2, tmp_path, capsys):
    code, _, err = run(["sv", m2, tmp_path / "nope.json"], capsys)
    assert code == EXIT_INPUT and "cannot read" in err
    bad = tmp_path / "bad.json"
    bad.write_text("[[1, 2")
    code, _, err = run(["sv", m2, bad], capsys)
    assert code == EXIT_INPUT and "malformed" in err
    assert run(["sv", m2], capsys)[0] == EXIT_INPUT
    assert run(["frobnicate"], capsys)[0] == EXIT_INPUT


def test_majorize(m2, tmp_path, capsys):
    x = write(tmp_path / "x.json", [[[1, 0], [0, 1]]])
    y = write(tmp_path / "y.json", [[[2, 0], [0, 0]]])
    code, out, _ = run(["majorize", m2, x, y], capsys)
    assert code == EXIT_OK and json.loads(out)["majorised"] is True
    assert json.loads(run(["majorize", m2, y, x], capsys)[1])["majorised"] is False


def test_convert_trace_vector(tmp_path, capsys):
    fix = tmp_path / "spin.json"
    assert run(["example", "spin-chain", "--pairs", 2, "--out", fix], capsys)[0] == EXIT_OK
    tgt = tmp_path / "tgt.json"
    run(["example", "random", "--n", 4, "--seed", 9, "--out", tgt], capsys)
    code, out, _ = run(["convert", fix, f"{fix}#vector", f"{tgt}#target", "--protocol"], capsys)
    res = json.loads(out)
    assert code == EXIT_OK and res["decision"] is True and res["residual"] <= 1e-8
    A = io.decode_algebra(json.loads(fix.read_text()))
    theta = io.decode_protocol(res["protocol"])
    psi = io.decode_blocks(A, json.loads(fix.read_text()), StdVector)
    phi = io.decode_blocks(A, json.loads(tgt.read_text())["target"], StdVector)
    assert verify_protocol(theta, psi, phi) <= 1e-8


@pytest.mark.parametrize("direction", ["right", "left"])
def test_convert_majorised_random(direction, tmp_path, capsys):
    fix = tmp_path / "r.json"
    run(["example", "random", "--n", 3, "--majorised", "--seed", 2, "--out", fix], capsys)
    code, out, _ = run(["convert", fix, f"{fix}#vector", f"{fix}#target", "--protocol", "--direction", direction], capsys)
    res = json.loads(out)
    assert code == EXIT_OK and res["residual"] <= 1e-8 and res["protocol"]["direction"] == direction


def test_convert_refusal(m2, tmp_path, capsys):
    psi = write(tmp_path / "psi.json", [[[np.sqrt(1.8), 0], [0, np.sqrt(0.2)]]])
    phi = write(tmp_path / "phi.json", [[[np.sqrt(1.4), 0], [0, np.sqrt(0.6)]]])
    code, out, _ = run(["convert", m2, psi, phi], capsys)
    assert code == EXIT_OK and json.loads(out) == {"decision": False}
    assert run(["convert", m2, psi, phi, "--protocol"], capsys)[0] == EXIT_CONTRACT
    two = write(tmp_path / "two.json", {"blocks": [[1, 0.5], [1, 0.5]]})
    v = write(tmp_path / "v.json", [[[1]], [[1]]])
    assert run(["convert", two, v, v], capsys)[0] == EXIT_INPUT


def test_entropy(m2, tmp_path, capsys):
    one = write(tmp_path / "one.json", [[[1, 0], [0, 1]]])
    res = json.loads(run(["entropy", m2, one], capsys)[1])
    assert res["H"] == 0.0
    d = write(tmp_path / "d.json", [[[2, 0], [0, 0]]])
    res = json.loads(run(["entropy", m2, d], capsys)[1])
    assert abs(res["H"] + np.log(2)) <= 1e-12
    assert res["mu"].startswith("t,value\n0,2\n")
    unnorm = write(tmp_path / "u.json", {"blocks": [{"dim": 2, "weight": 1.0}]})
    assert run(["entropy", unnorm, one], capsys)[0] == EXIT_INPUT
    vec = write(tmp_path / "vec.json", [[[1, 0], [0, 1]]])
    assert json.loads(run(["entropy", m2, vec, "--vector"], capsys)[1])["H"] == 0.0


def test_example_weyl_moments(tmp_path, capsys):
    code, out, _ = run(["example", "weyl", "--q", 5, "--p", 2], capsys)
    fix = json.loads(out)
    A = io.decode_algebra(fix["algebra"])
    u, v = (io.decode_blocks(A, g).data[0] for g in fix["generators"])
    psi = io.decode_blocks(A, fix["vector"], StdVector)
    for n in range(5):
        for m in range(5):
            word = np.linalg.matrix_power(u, n) @ np.linalg.matrix_power(v, m)
            moment = 0.2 * np.trace(psi.data[0].conj().T @ word @ psi.data[0])
            assert abs(moment - (n == m == 0)) <= 1e-12
    assert run(["example", "weyl", "--q", 4, "--p", 2], capsys)[0] == EXIT_INPUT


def test_example_car_fixture(tmp_path, capsys):
    fix = json.loads(run(["example", "car", "--modes", 3], capsys)[1])
    a = [io.decode_matrix(m) for m in fix["annihilators"]]
    for i in range(3):
        for j in range(3):
            acomm = a[i] @ a[j].conj().T + a[j].conj().T @ a[i]
            assert np.abs(acomm - (i == j) * np.eye(8)).max() == 0
    assert np.allclose(io.decode_matrix(fix["fields"][0]), car_fock(3).real_fields()[0])
    assert "algebra" not in fix
    even = json.loads(run(["example", "car", "--modes", 2], capsys)[1])
    assert even["algebra"]["blocks"][0]["dim"] == 2


@pytest.mark.parametrize(
    "argv",
    [["spin-chain", "--pairs", 2], ["weyl", "--q", 3], ["car", "--modes", 2], ["car", "--modes", 3]],
)
def test_trace_vector_verb(argv, tmp_path, capsys):
    fix = tmp_path / "f.json"
    run(["example", *argv, "--out", fix], capsys)
    res = json.loads(run(["trace-vector", fix], capsys)[1])
    assert res["trace_vector"] is True and res["saturated"] and res["defect"] <= 1e-8


def test_trace_vector_inconclusive_and_bad(tmp_path, capsys):
    fix = tmp_path / "w.json"
    run(["example", "weyl", "--q", 7, "--out", fix], capsys)
    res = json.loads(run(["trace-vector", fix, "--depth", 1], capsys)[1])
    assert res["trace_vector"] is None and res["inconclusive"] is True
    bad = write(tmp_path / "bad.json", {"kind": "x"})
    assert run(["trace-vector", bad], capsys)[0] == EXIT_INPUT


def test_lo_popescu_verb(tmp_path, capsys, rng):
    fix = tmp_path / "r.json"
    run(["example", "random", "--n", 3, "--seed", 5, "--out", fix], capsys)
    A = io.decode_algebra(json.loads(fix.read_text()))
    b = AlgElement(A, [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))])
    bf = write(tmp_path / "b.json", io.encode_blocks(b))
    code, out, _ = run(["lo-popescu", fix, f"{fix}#vector", bf], capsys)
    res = json.loads(out)
    assert code == EXIT_OK
    assert abs(res["norm_b_psi"] - res["norm_z_psi"]) <= 1e-12 and res["residual"] <= 1e-9


def test_determinism(tmp_path, capsys):
    outs = []
    for i in range(2):
        fix = tmp_path / f"r{i}.json"
        run(["example", "random", "--n", 4, "--majorised", "--seed", 17, "--out", fix], capsys)
        outs.append(fix.read_bytes())
        outs.append(run(["convert", fix, f"{fix}#vector", f"{fix}#target", "--protocol"], capsys)[1])
    assert outs[0] == outs[2] and outs[1] == outs[3]
    other = tmp_path / "other.json"
    run(["example", "random", "--n", 4, "--majorised", "--seed", 18, "--out", other], capsys)
    assert other.read_bytes() != outs[0]


@pytest.mark.parametrize(
    "argv", [["spin-chain", "--pairs", 1], ["weyl", "--q", 4, "--p", 3], ["car", "--modes", 4], ["random", "--n", 2]]
)
def test_fixtures_round_trip(argv, capsys):
    fix = json.loads(run(["example", *argv], capsys)[1])
    A = io.decode_algebra(fix["algebra"])
    psi = io.decode_blocks(A, fix["vector"], StdVector)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert io.encode_blocks(psi) == fix["vector"]
    if "generators" in fix:
        gens = [left_matrix(io.decode_blocks(A, g)) for g in fix["generators"]]
        assert is_trace_vector(gens, vec(psi)).verdict is True
