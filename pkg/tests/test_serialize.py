import csv
import json
import math

import numpy as np
import pytest

from aihs import serialize as ser
from aihs.entire import CoefficientSequence, ZeroSet, coefficients_from_norms, find_zeros
from aihs.errors import ArgumentError
from aihs.halfspace import build_entire, verify_certificate
from aihs.operators import Family, build_operator, geometric_weights


@pytest.fixture(scope="module")
def small_cert():
    op = build_operator(Family.FORWARD, 64, weights=geometric_weights(64, 0.9))
    e = np.zeros(64, dtype=np.complex128)
    e[0] = 1.0
    return op, build_entire(op, e, m=3, k_max=2)


@pytest.mark.parametrize(
    "value",
    [0.0, -0.0, 1.5, -math.pi, 1e-300, 7.2e250, math.inf, -math.inf],
)
def test_float_hex_round_trip(value):
    out = ser.decode_value(ser.encode_value(value))
    assert isinstance(out, float)
    assert out == value
    assert math.copysign(1.0, out) == math.copysign(1.0, value)


def test_nan_round_trip():
    out = ser.decode_value(ser.encode_value(float("nan")))
    assert isinstance(out, float) and math.isnan(out)


def test_complex_round_trip():
    z = complex(-1.25e-7, 3.141592653589793)
    out = ser.decode_value(ser.encode_value(z))
    assert isinstance(out, complex)
    assert out == z


def test_array_round_trip_bits():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
    b = ser.decode_array(ser.encode_array(a))
    assert b.dtype == np.complex128 and b.shape == (4, 5)
    assert np.array_equal(a.view(np.float64), b.view(np.float64))
    r = rng.standard_normal(7)
    assert np.array_equal(ser.decode_array(ser.encode_array(r)), r)


def test_empty_array_keeps_shape():
    a = np.zeros((0, 3), dtype=np.complex128)
    b = ser.decode_array(ser.encode_array(a))
    assert b.shape == (0, 3) and b.dtype == np.complex128


def test_value_walker_mixed_dict():
    src = {
        "name": "entire",
        "count": 4,
        "flag": True,
        "resid": 2.5e-13,
        "lams": [1 + 2j, -0.5j],
        "nested": {"threshold": 1e-8, "reason": "noise-floor"},
        "nothing": None,
    }
    out = ser.decode_value(ser.encode_value(src))
    assert out == src
    assert isinstance(out["count"], int) and isinstance(out["flag"], bool)
    assert all(isinstance(z, complex) for z in out["lams"])


def test_plain_strings_survive():
    # sha-256 digests and diagnostic prose must not be mistaken for numbers
    src = {"matrix_sha256": "ab03f" * 12, "reason": "eigenvalue-gap"}
    assert ser.decode_value(ser.encode_value(src)) == src


def test_dumps_canonical_sorted_and_stable():
    doc = {"b": ser.encode_value(1.5), "a": ser.encode_value(2)}
    text = ser.dumps_canonical(doc)
    assert text == ser.dumps_canonical(json.loads(text))
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")


def test_certificate_document_round_trip(small_cert):
    op, cert = small_cert
    doc = ser.certificate_to_document(cert)
    text = ser.dumps_canonical(doc)
    back = ser.certificate_from_document(doc)
    assert ser.dumps_canonical(ser.certificate_to_document(back)) == text
    assert np.array_equal(back.basis, cert.basis)
    assert np.array_equal(back.lambdas, cert.lambdas)
    assert back.metrics == cert.metrics
    assert back.checks == cert.checks
    assert back.m_achieved == cert.m_achieved
    assert back.passed == cert.passed


def test_certificate_file_round_trip_and_audit(small_cert, tmp_path):
    op, cert = small_cert
    path = ser.write_certificate(tmp_path / "cert.json", cert)
    again = ser.write_certificate(tmp_path / "cert2.json", cert)
    assert path.read_bytes() == again.read_bytes()
    back = ser.read_certificate(path)
    report = verify_certificate(op, back)
    assert report["passed"], report["failures"]
    assert report["raw_vector_drift"] == 0.0


def test_certificate_schema_checked(small_cert):
    _, cert = small_cert
    doc = ser.certificate_to_document(cert)
    doc["schema"] = "aihs-cert/0"
    with pytest.raises(ArgumentError, match="schema"):
        ser.certificate_from_document(doc)


def test_coefficients_and_zeros_round_trip():
    norms = np.array([1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0])
    cs = coefficients_from_norms(norms, k_max=2)
    back = ser.coefficients_from_document(ser.coefficients_to_document(cs))
    assert np.array_equal(back.coefficients, cs.coefficients)
    assert back.degree == cs.degree and back.k_max == cs.k_max
    zs = ZeroSet(
        lambdas=np.array([1.5 + 0j, -2.0 + 1j]), residuals=np.array([1e-16, 3e-15])
    )
    zback = ser.zeros_from_document(ser.zeros_to_document(zs))
    assert np.array_equal(zback.lambdas, zs.lambdas)
    assert np.array_equal(zback.residuals, zs.residuals)


def test_certificate_csv_row_columns(small_cert):
    _, cert = small_cert
    row = ser.certificate_csv_row(cert)
    assert set(row) == set(ser.CERT_CSV_COLUMNS)
    assert row["family"] == "forward-weighted-shift"
    assert row["dim"] == 64
    assert row["passed"] is True


def test_write_csv_formatting(tmp_path):
    rows = [
        {"a": 1.0 / 3.0, "b": 5, "c": True, "d": None, "e": "x,y"},
    ]
    path = ser.write_csv(tmp_path / "t.csv", ("a", "b", "c", "d", "e"), rows)
    with path.open(newline="") as fh:
        got = list(csv.reader(fh))
    assert got[0] == ["a", "b", "c", "d", "e"]
    assert got[1] == ["0.33333333333333331", "5", "1", "", "x,y"]
    assert float(got[1][0]) == 1.0 / 3.0


def test_fm_table_rows_cover_table():
    table = np.arange(6, dtype=np.complex128).reshape(2, 3) * (1 + 2j)
    rows = ser.fm_table_rows(table)
    assert len(rows) == 6
    assert rows[4] == {"m": 1, "n": 1, "re": 4.0, "im": 8.0}


def test_probe_rows_against_callable():
    err = np.array([[1.0, 0.5], [0.25, 0.125]])
    rows = ser.probe_rows(err, lambda k, n: err[k - 1, n - 1])
    assert all(r["diff"] == 0.0 for r in rows)
    assert rows[0]["k"] == 1 and rows[0]["n"] == 1
