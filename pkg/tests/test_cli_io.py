import json
from dataclasses import replace

import pytest

from streams import ROOT, stream
from quadevent import formats
from quadevent.cli import main, run_detect
from quadevent.config import Config, ConfigError, load_config, parse_duration
from quadevent.metrics import TruthEvent, evaluate
from quadevent.model import BoundingBox, Event, GeoPoint, Post


def cli(*args):
    return main([str(a) for a in args])


# -- config -------------------------------------------------------------------


def test_defaults_match_parameter_table():
    c = Config()
    assert (c.theta_count, c.theta_area, c.horizon, c.dt) == (20, 0.001, 3 * 86400, 600)
    assert (c.tau1, c.tau2, c.alpha, c.theta_duration, c.theta_entity, c.k_top) == (0.01, 0.4, 0.5, 3000, 2, 5)
    assert c.detector_params().theta_duration == 50 * 60
    assert (c.suppress_warmup, c.bursts_only, c.poi_cell) == (True, False, "disk")


@pytest.mark.parametrize("text, secs", [("600", 600), ("10m", 600), ("3d", 259200), ("50 min", 3000), ("1.5h", 5400)])
def test_durations(text, secs):
    assert parse_duration(text) == secs


def test_file_then_flags(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\ntau2 = 0.5\ndt = 5m\nroot_bbox = 0,0,1,1\nbursts_only = yes\n", encoding="utf-8")
    c = load_config(f, {"tau2": "0.6"})
    assert (c.tau2, c.dt, c.root_bbox, c.bursts_only) == (0.6, 300, (0.0, 0.0, 1.0, 1.0), True)


@pytest.mark.parametrize("line", ["nope = 1", "tau1 = abc", "tau1 = 2", "poi_cell = hexagon", "root_bbox = 1,1,0,0", "justtext"])
def test_bad_config_rejected(tmp_path, line):
    f = tmp_path / "bad.cfg"
    f.write_text(line + "\n", encoding="utf-8")
    with pytest.raises((ConfigError, ValueError)):
        load_config(f)


def test_dump_parses_back(tmp_path):
    c = replace(Config(), root_bbox=(-37.9, 144.8, -37.7, 145.1), tau2=0.45)
    f = tmp_path / "c.cfg"
    f.write_text(c.dumps(), encoding="utf-8")
    assert load_config(f) == c


def test_print_config(capsys, tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("alpha = 0.3\n", encoding="utf-8")
    assert cli("--config", f, "--print-config", "--tau1", "0.02") == 0
    out = capsys.readouterr().out
    assert "alpha = 0.3" in out and "tau1 = 0.02" in out and "theta_count = 20" in out


def test_subcommand_flags_override(capsys):
    assert cli("detect", "--print-config", "--set", "k_top=3", "--theta-count", "30") == 0
    out = capsys.readouterr().out
    assert "k_top = 3" in out and "theta_count = 30" in out


# -- file formats -------------------------------------------------------------


def sample_event():
    posts = (Post("a", 10, 0.5, 0.5, ("#x",)), Post("b", 20, 0.6, 0.5, ("#x", "#y")))
    return Event(
        "0123",
        BoundingBox(-37.81234567891, 144.9612345678, -37.8012345, 144.97),
        1200,
        4800,
        3600,
        ("a", "b"),
        2,
        0.123456789123,
        (("#x", 2), ("#y", 1)),
        1.5,
        "quadtree",
        {"posts": posts},
    )


def test_events_round_trip(tmp_path):
    e = sample_event()
    f = tmp_path / "ev.jsonl"
    formats.save_events([e], f)
    (back,) = formats.load_events(f)
    assert back == formats.quantized(e)
    assert back.signal == float(f"{e.signal:.9g}")
    assert (back.region_path, back.post_ids, back.top_entities) == (e.region_path, e.post_ids, e.top_entities)
    g = tmp_path / "ev2.jsonl"
    formats.save_events([back], g)
    assert f.read_bytes() == g.read_bytes()


def test_event_record_fields(tmp_path):
    f = tmp_path / "ev.jsonl"
    formats.save_events([sample_event()], f)
    rec = json.loads(f.read_text(encoding="utf-8"))
    assert rec["detector"] == "quadtree" and rec["si"] == 1.5
    assert {"region_path", "bbox", "start_ts", "end_ts", "period_s", "post_ids", "post_count", "signal"} <= set(rec)
    assert rec["bbox"][0] == -37.8123457


def test_posts_and_truth_round_trip(tmp_path):
    posts = [Post("p1", 5, -37.8, 144.9, ("#a",)), Post("p2", 6, -37.7, 145.0, ())]
    formats.write_posts(posts, tmp_path / "p.jsonl")
    got, stats = formats.load_posts(tmp_path / "p.jsonl")
    assert got == posts and stats.invalid == 0
    truth = [TruthEvent("g", GeoPoint(-37.8, 144.9), 0, 60, ("#a",))]
    formats.save_truth(truth, tmp_path / "t.jsonl")
    assert formats.load_truth(tmp_path / "t.jsonl") == truth


def test_poi_file(tmp_path):
    f = tmp_path / "pois.csv"
    f.write_text("name,lat,lon\n# comment\n\ncbd,-37.81,144.96\nmcg,-37.82,144.98\n", encoding="utf-8")
    assert [p.name for p in formats.load_pois(f)] == ["cbd", "mcg"]
    f.write_text("cbd,-37.81\n", encoding="utf-8")
    with pytest.raises(formats.MalformedInput):
        formats.load_pois(f)


def write_posts_with_bad(path, n_good, n_bad):
    with open(path, "w", encoding="utf-8") as fh:
        for p in stream(tail_intervals=0)[:n_good]:
            fh.write(json.dumps(formats.post_to_dict(p)) + "\n")
        for i in range(n_bad):
            fh.write('{"id": "x", "ts": 1, "lat": 95, "lon": 0}\n' if i % 2 else "not json\n")


def bbox_flag():
    # "=" form: the value starts with a minus sign
    return ["--root-bbox=" + ",".join(str(v) for v in ROOT.as_tuple())]


def test_invalid_record_tolerance(tmp_path, capsys):
    ok = tmp_path / "ok.jsonl"
    write_posts_with_bad(ok, 990, 10)
    assert cli("detect", ok, "-o", tmp_path / "ev.jsonl", *bbox_flag()) == 0
    bad = tmp_path / "bad.jsonl"
    write_posts_with_bad(bad, 989, 11)
    assert cli("detect", bad, "-o", tmp_path / "ev2.jsonl", *bbox_flag()) == 1
    assert "invalid" in capsys.readouterr().err
    assert not (tmp_path / "ev2.jsonl").exists()


def test_empty_input_gives_empty_output(tmp_path):
    (tmp_path / "p.jsonl").write_text("", encoding="utf-8")
    assert cli("detect", tmp_path / "p.jsonl", "-o", tmp_path / "e.jsonl", *bbox_flag()) == 0
    assert (tmp_path / "e.jsonl").read_bytes() == b""


def test_missing_root_bbox_is_config_error(tmp_path, capsys):
    (tmp_path / "p.jsonl").write_text("", encoding="utf-8")
    assert cli("detect", tmp_path / "p.jsonl") == 2
    assert "root_bbox" in capsys.readouterr().err


# -- commands -----------------------------------------------------------------


@pytest.fixture(scope="module")
def week(tmp_path_factory):
    d = tmp_path_factory.mktemp("week")
    assert cli("generate", "-o", d / "posts.jsonl", "--truth", d / "truth.jsonl", "--config-out", d / "run.cfg", "--seed", 2, "--days", 5) == 0
    return d


def test_generate_is_deterministic(week, tmp_path):
    assert cli("generate", "-o", tmp_path / "p.jsonl", "--truth", tmp_path / "t.jsonl", "--seed", 2, "--days", 5) == 0
    assert (tmp_path / "p.jsonl").read_bytes() == (week / "posts.jsonl").read_bytes()
    assert (tmp_path / "t.jsonl").read_bytes() == (week / "truth.jsonl").read_bytes()


@pytest.mark.parametrize("n", [0, 5])
def test_generate_truth_count(tmp_path, n):
    assert cli("generate", "-o", tmp_path / "p.jsonl", "--truth", tmp_path / "t.jsonl", "--n-bursts", n, "--days", 4) == 0
    assert len(formats.load_truth(tmp_path / "t.jsonl")) == n


def test_detect_evaluate_loop(week, capsys):
    ev = week / "ev.jsonl"
    assert cli("--config", week / "run.cfg", "detect", week / "posts.jsonl", "-o", ev) == 0
    first = ev.read_bytes()
    assert cli("--config", week / "run.cfg", "detect", week / "posts.jsonl", "-o", ev) == 0
    assert ev.read_bytes() == first
    capsys.readouterr()
    assert cli("evaluate", ev, week / "truth.jsonl", "-o", week / "report.json") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["tp"] >= 1
    assert report == json.loads((week / "report.json").read_text(encoding="utf-8"))


def test_single_burst_detected(tmp_path):
    assert cli("generate", "-o", tmp_path / "p.jsonl", "--truth", tmp_path / "t.jsonl", "--config-out", tmp_path / "c.cfg", "--n-bursts", 1, "--days", 4, "--seed", 5) == 0
    assert cli("--config", tmp_path / "c.cfg", "detect", tmp_path / "p.jsonl", "-o", tmp_path / "e.jsonl") == 0
    report = evaluate(formats.load_events(tmp_path / "e.jsonl"), formats.load_truth(tmp_path / "t.jsonl"))
    assert report.tp == 1


def test_evaluate_edge_cases(tmp_path, capsys):
    (tmp_path / "none.jsonl").write_text("", encoding="utf-8")
    formats.save_truth([TruthEvent("g", GeoPoint(0.5, 0.5), 0, 60)], tmp_path / "t.jsonl")
    assert cli("evaluate", tmp_path / "none.jsonl", tmp_path / "t.jsonl") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["precision"] is None and rep["recall"] == 0.0
    formats.save_events([replace(sample_event(), bbox=BoundingBox(0, 0, 1, 1), start_ts=0, end_ts=60)], tmp_path / "e.jsonl")
    assert cli("evaluate", tmp_path / "e.jsonl", tmp_path / "t.jsonl") == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["precision"] == rep["recall"] == 1.0


def test_baselines(week, tmp_path, capsys):
    assert cli("baseline", "cluster", week / "posts.jsonl", "-o", tmp_path / "c.jsonl") == 0
    events = formats.load_events(tmp_path / "c.jsonl")
    assert events and {e.detector for e in events} == {"cluster"}
    (tmp_path / "pois.csv").write_text("name,lat,lon\n", encoding="utf-8")
    assert cli("baseline", "poi", week / "posts.jsonl", "--pois", tmp_path / "pois.csv") == 1
    assert "no POIs" in capsys.readouterr().err
    assert cli("baseline", "poi", week / "posts.jsonl") == 2


def test_sweep_table(week, tmp_path):
    small = tmp_path / "small.jsonl"
    posts, _ = formats.load_posts(week / "posts.jsonl")
    formats.write_posts(posts[:3000], small)
    assert cli("sweep", small, "-o", tmp_path / "sweep.tsv") == 0
    lines = (tmp_path / "sweep.tsv").read_text(encoding="utf-8").splitlines()
    assert lines[0].split("\t") == ["gap_min", "k", "n", "significant_unions", "unique_events", "runtime_s"]
    assert len(lines) == 1 + 21


def test_run_detect_reports_counts(tmp_path):
    formats.write_posts(stream([("0", 2, 6, 8)]), tmp_path / "p.jsonl")
    info = run_detect(replace(Config(), root_bbox=ROOT.as_tuple(), theta_count=500), tmp_path / "p.jsonl", tmp_path / "e.jsonl")
    assert info["events"] == 1 and info["invalid"] == 0 and info["outside"] == 0
