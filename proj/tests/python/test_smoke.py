import math

import numpy as np
import pytest

import treeloc


def small_config(**overrides):
    cfg = treeloc.RunConfig()
    cfg.set("sim.area_width", "80")
    cfg.set("sim.area_height", "50")
    cfg.set("exp.lane_spacing", "25")
    for k, v in overrides.items():
        cfg.set(k.replace("__", "."), str(v))
    return cfg


def test_version_and_config_roundtrip():
    assert treeloc.__version__
    cfg = treeloc.RunConfig()
    cfg.set("tdh.r_res", "5.5")
    text = cfg.to_text()
    assert "tdh.r_res = 5.5" in text
    other = treeloc.RunConfig()
    other.apply_text(text)
    assert other.to_text() == text


def test_unknown_config_key_raises():
    with pytest.raises(treeloc.TreelocError, match="ConfigError"):
        treeloc.RunConfig().set("tdh.nope", "1")


def test_svd_align_recovers_planar_motion():
    rng = np.random.default_rng(4)
    src = rng.uniform(-10, 10, size=(12, 2))
    th = 0.7
    r = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    t = np.array([3.0, -1.5])
    dst = src @ r.T + t
    rot, trans = treeloc.svd_align_2d(src, dst)
    assert np.allclose(rot, r, atol=1e-12)
    assert np.allclose(trans, t, atol=1e-12)


def test_alignment_removes_tilt():
    trees = []
    tilt = treeloc.rot_x(0.2) @ treeloc.rot_y(-0.1)
    for i in range(20):
        t = treeloc.TreeObservation()
        t.id = i
        t.axis = tilt @ np.array([0.0, 0.0, 1.0])
        t.position = tilt @ np.array([i * 1.5, (i % 4) * 2.0, 0.0])
        trees.append(t)
    res = treeloc.estimate_axis_alignment(trees)
    assert not res.degenerate
    v = res.correction @ trees[0].axis
    assert abs(v[2] - 1.0) < 1e-9


def test_database_self_query_and_storage():
    scene = treeloc.SceneInventory()
    scene.index = 0
    rng = np.random.default_rng(1)
    pts = rng.uniform(-20, 20, size=(40, 2))
    trees = []
    for i, (x, y) in enumerate(pts):
        t = treeloc.TreeObservation()
        t.id = i
        t.position = np.array([x, y, 0.0])
        t.dbh = 0.2 + 0.01 * (i % 10)
        trees.append(t)
    scene.trees = trees
    db = treeloc.SceneDatabase()
    db.add(scene)
    out = db.query(scene, seed=3)
    assert out.results and out.results[0].candidate_index == 0
    assert out.results[0].overlap == pytest.approx(1.0)

    gdb = treeloc.GlobalTreeDb()
    gdb.insert_session([scene], treeloc.Pose())
    gdb.insert_session([scene], treeloc.Pose())
    assert len(gdb) == 40
    blob = gdb.save()
    assert len(blob) <= 30 + 64 * len(gdb)
    assert treeloc.GlobalTreeDb.load(blob) == gdb


def test_pose_graph_two_nodes():
    g = treeloc.PoseGraph()
    a, b = treeloc.Pose(), treeloc.Pose(np.eye(3), np.array([1.0, 0.0, 0.0]))
    g.nodes = {0: a, 1: treeloc.Pose()}
    e = treeloc.PoseEdge()
    e.src, e.dst, e.measurement = 0, 1, b
    g.edges = [e]
    res = treeloc.optimize(g)
    assert np.allclose(res.poses[1].translation, [1.0, 0.0, 0.0], atol=1e-9)
    again = treeloc.PoseGraph.from_g2o(g.to_g2o())
    assert sorted(again.nodes) == [0, 1]


def test_experiment_and_rescoring_agree():
    cfg = small_config(exp__max_queries=20)
    out = treeloc.run_experiment(cfg)
    pr = out["place_recognition"]
    assert pr["queries"] == 20
    assert pr["recall_at_1"] == pytest.approx(1.0)
    rescored = treeloc.score_records(out["records_csv"])
    assert rescored["place_recognition"] == pr
    assert rescored["localization"] == out["localization"]
