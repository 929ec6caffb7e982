import csv
import json
from fractions import Fraction

from mulocal.characters import ArithChar, enumerate_self_dual
from mulocal.cli import main
from mulocal.local_field import LocalQuadExt


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_char_enumerate_round_trip(tmp_path):
    cfg = write_config(
        tmp_path,
        "char.json",
        {"action": "enumerate", "prime": 3, "kind": "inert", "max_conductor": 1, "output": "chars.json"},
    )
    assert main(["char", "--config", cfg, "--out", str(tmp_path)]) == 0
    entries = json.loads((tmp_path / "chars.json").read_text())
    assert len(entries) == 4
    # make: round-trips one character through validation
    cfg2 = write_config(tmp_path, "make.json", {"action": "make", "character": entries[1], "output": "one.json"})
    assert main(["char", "--config", cfg2, "--out", str(tmp_path)]) == 0
    back = json.loads((tmp_path / "one.json").read_text())
    assert back["generator_exponents"] == entries[1]["generator_exponents"]
    # list: summarizes the enumerated file
    cfg3 = write_config(tmp_path, "list.json", {"action": "list", "input": str(tmp_path / "chars.json")})
    assert main(["char", "--config", cfg3, "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "characters.csv").read_text().splitlines()))
    assert len(rows) == 5  # header + 4


def test_char_budget_exit_code(tmp_path):
    cfg = write_config(
        tmp_path,
        "char.json",
        {"action": "enumerate", "prime": 7, "kind": "inert", "max_conductor": 2},
    )
    assert main(["char", "--config", cfg, "--out", str(tmp_path), "--budget", "10"]) == 3


def test_unknown_keys_rejected(tmp_path):
    cfg = write_config(tmp_path, "bad.json", {"action": "enumerate", "prime": 3, "kind": "inert", "bogus": 1})
    assert main(["char", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_missing_config_is_config_error(tmp_path):
    assert main(["char", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def _one_char_json():
    ext = LocalQuadExt.inert(5)
    chi = [c for c in enumerate_self_dual(ext, 1) if c.conductor() == 1][0]
    data = ArithChar(chi, Fraction(1, 2)).to_json()
    return data


def test_gauss_table(tmp_path):
    cfg = write_config(
        tmp_path,
        "gauss.json",
        {
            "character": _one_char_json(),
            "p": 3,
            "beta_valuations": [-2, -1, 0, 1],
            "beta_units": [1, 2],
            "output": "gauss.csv",
        },
    )
    assert main(["gauss", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "gauss.csv").read_text().splitlines()))
    header, body = rows[0], rows[1:]
    assert "A_closed_repr" in header
    assert len(body) == 8
    agree_col = header.index("methods_agree")
    assert all(r[agree_col] == "True" for r in body)


def test_gauss_table_ramified_without_closed_form(tmp_path):
    ext = LocalQuadExt.ramified(5)
    chi = [c for c in enumerate_self_dual(ext, 1) if c.conductor() == 1][0]
    cfg = write_config(
        tmp_path,
        "gauss.json",
        {
            "character": ArithChar(chi, Fraction(1, 2)).to_json(),
            "beta_valuations": [-1, 0, 1],
            "beta_units": [1, 2],
            "output": "gauss_ram.csv",
        },
    )
    assert main(["gauss", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "gauss_ram.csv").read_text().splitlines()))
    header, body = rows[0], rows[1:]
    closed_col = header.index("A_closed_repr")
    assert len(body) == 6
    assert all(r[closed_col] == "" for r in body)


def test_gauss_empty_sweep_header_only(tmp_path):
    cfg = write_config(
        tmp_path,
        "gauss.json",
        {"character": _one_char_json(), "beta_valuations": [], "output": "gauss.csv"},
    )
    assert main(["gauss", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "gauss.csv").read_text().splitlines()))
    assert len(rows) == 1


def test_dichotomy_exit_codes(tmp_path):
    base = {
        "grid": [
            {"prime": 5, "kind": "inert", "max_conductor": 1},
            {"prime": 3, "kind": "ramified", "max_conductor": 1},
        ],
        "beta_valuations": [-1, 0, 1],
        "beta_units": [1, 2],
        "output": "dich.csv",
    }
    cfg = write_config(tmp_path, "d.json", base)
    assert main(["dichotomy", "--config", cfg, "--out", str(tmp_path), "--psi-sign", "both"]) == 0
    rows = list(csv.reader((tmp_path / "dich.csv").read_text().splitlines()))
    assert len(rows) > 20
    # restricted to vanishing rows: still exit 0 (vacuous pass)
    cfg_v = write_config(tmp_path, "dv.json", dict(base, beta_valuations=[-3], grid=[base["grid"][0]]))
    assert main(["dichotomy", "--config", cfg_v, "--out", str(tmp_path)]) == 0
    # injected sign flip must flip the exit code
    cfg_bad = write_config(tmp_path, "db.json", dict(base, inject_sign_flip=True))
    assert main(["dichotomy", "--config", cfg_bad, "--out", str(tmp_path)]) == 1


def test_mu_report(tmp_path):
    setup = {
        "prime": 3,
        "nonsplit_places": [
            {
                "character": _order3_char_json(),
                "sweep_valuation_range": [-2, 2],
                "sweep_unit_level": 1,
            }
        ],
        "output_report": "report.json",
        "output_csv": "sweep.csv",
    }
    cfg = write_config(tmp_path, "mu.json", setup)
    assert main(["mu", "--config", cfg, "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["verdict"] == "matches_theorem_A"
    assert report["mu_sum"] == "1/2"
    assert report["sweep_min"] == "1/2"
    assert report["lower_bound_holds"] is True
    assert "recomputed_global_witness" in report
    rows = list(csv.reader((tmp_path / "sweep.csv").read_text().splitlines()))
    assert rows[0][:4] == ["ell", "kind", "conductor", "chi_id"]
    assert len(rows) > 10


def test_mu_insufficient_window_warns(tmp_path):
    setup = {
        "prime": 3,
        "nonsplit_places": [
            {
                "character": _order3_char_json(),
                "sweep_valuation_range": [1, 1],
                "sweep_unit_level": 1,
            }
        ],
        "output_report": "report.json",
    }
    cfg = write_config(tmp_path, "mu.json", setup)
    assert main(["mu", "--config", cfg, "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["verdict"] in ("lower_bound_only", "matches_theorem_A")
    if report["verdict"] == "lower_bound_only":
        assert report["warnings"]


def _order3_char_json():
    import math

    ext = LocalQuadExt.inert(5)

    def uo(c):
        out = 1
        for e in c.unit_exponents:
            out = out * e.denominator // math.gcd(out, e.denominator)
        return out

    chi = [c for c in enumerate_self_dual(ext, 1) if uo(c) == 3][0]
    return ArithChar(chi, Fraction(1, 2)).to_json()


def test_outputs_deterministic(tmp_path):
    cfg = write_config(
        tmp_path,
        "char.json",
        {"action": "enumerate", "prime": 5, "kind": "inert", "max_conductor": 1, "output": "chars.json"},
    )
    main(["char", "--config", cfg, "--out", str(tmp_path)])
    first = (tmp_path / "chars.json").read_bytes()
    main(["char", "--config", cfg, "--out", str(tmp_path)])
    assert (tmp_path / "chars.json").read_bytes() == first
