import textwrap

import numpy as np
import pytest

from wavebem.errors import ValidationError
from wavebem.scenario import TRACE_CSV_HEADER, load_scenario, parse_scenario, read_trace_csv

BASE = """
schema = 1
[problem]
name = "t"
dim = 2
c = 1.0
bvp = "dirichlet"
[geometry]
kind = "circle"
n_elements = 24
[time]
dt = 0.05
n_steps = 20
[data]
oracle = "plane_wave"
direction = [3.0, 4.0]
offset = 1.05
[data.profile]
width = 1.5
[output]
probes = [[0.0, 0.0], [0.2, 0.1]]
field_every = 5
"""


def test_all_shipped_scenarios_parse(scenario_dir):
    names = sorted(p.name for p in scenario_dir.glob("*.toml"))
    assert names
    for p in scenario_dir.glob("*.toml"):
        if p.name == "bad_dt.toml":
            with pytest.raises(ValidationError):
                load_scenario(p)
        else:
            load_scenario(p)


def test_valid_scenario_fields():
    sc = parse_scenario(BASE)
    assert sc.dim == 2 and sc.bvp == "dirichlet" and sc.field_every == 5
    assert sc.probes.shape == (2, 2)
    assert sc.build_grid().n_steps == 20
    pw = sc.build_oracle()
    assert np.allclose(pw.direction, (0.6, 0.8))
    assert len(sc.digest) == 64


def test_t_end_alternative():
    sc = parse_scenario(BASE.replace("n_steps = 20", "t_end = 0.5"))
    assert sc.build_grid().n_steps == 10
    with pytest.raises(ValidationError, match="not both"):
        parse_scenario(BASE.replace("n_steps = 20", "n_steps = 20\nt_end = 0.5"))


@pytest.mark.parametrize("text,match", [
    ("", "empty"),
    ("schema = 1\n[problem\n", "line 2"),
    (BASE + "[extra]\nx = 1\n", r"\[extra\]"),
    (BASE.replace("bvp = ", "colour = 1\nbvp = "), "colour"),
    (BASE.replace("dim = 2", "dim = 5"), "dim"),
    (BASE.replace("schema = 1", "schema = 2"), "schema"),
    (BASE.replace('oracle = "plane_wave"', 'oracle = "standing_wave_1d"'), "dimension"),
    (BASE.replace("[[0.0, 0.0], [0.2, 0.1]]", "[[0.0, 0.0, 1.0]]"), "probes"),
    (BASE.replace("n_elements = 24", "n_elements = -3"), "n_elements"),
    (BASE.replace('bvp = "dirichlet"', 'bvp = "mixed-1d"'), "mixed"),
])
def test_validation_messages(text, match):
    with pytest.raises(ValidationError, match=match):
        parse_scenario(text)


def test_missing_section():
    text = BASE.split("[geometry]")[0]
    with pytest.raises(ValidationError, match="geometry"):
        parse_scenario(text)


def test_cfl_guard_and_override():
    big = BASE.replace("dt = 0.05", "dt = 0.5")
    with pytest.raises(ValidationError, match="allow_cfl_override"):
        parse_scenario(big)
    sc = parse_scenario(big.replace("n_steps = 20", "n_steps = 20\nallow_cfl_override = true"))
    assert sc.build_grid().dt == 0.5


def test_one_dimensional_known_ends():
    text = textwrap.dedent("""
        [problem]
        dim = 1
        bvp = "mixed-1d"
        [geometry]
        kind = "interval"
        [time]
        dt = 0.01
        n_steps = 10
        [data]
        oracle = "standing_wave_1d"
        known = ["ux", "u"]
    """)
    assert parse_scenario(text).known_ends() == ("ux", "u")
    with pytest.raises(ValidationError, match="known"):
        parse_scenario(text.replace('["ux", "u"]', '["u", "u"]'))


def test_trace_csv_reader(tmp_path):
    path = tmp_path / "tr.csv"
    rows = ["step,time,element,u,u_dot,du_dn"]
    for k in range(3):
        for e in range(2):
            rows.append(f"{k},{0.1 * k},{e},{k + e},0.0,{-k}")
    path.write_text(TRACE_CSV_HEADER + "\n" + "\n".join(rows) + "\n")
    tab = read_trace_csv(path, 2, 2)
    assert tab["u"].tolist() == [[0, 1], [1, 2], [2, 3]]
    with pytest.raises(ValidationError, match="cover"):
        read_trace_csv(path, 3, 2)
    bad = tmp_path / "bad.csv"
    bad.write_text("step,time\n")
    with pytest.raises(ValidationError, match="not a trace CSV"):
        read_trace_csv(bad, 2, 2)
