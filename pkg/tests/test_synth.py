"""Generator geometry, determinism, and dataset plumbing."""
import numpy as np
import pytest

from pixelseg import cli, evaluate, project
from pixelseg.synth import (
    PlacementError, SceneSpec, generate_dataset, generate_scene, place_disks,
)


def clean_spec(**kw):
    """No noise, blur, or gradient: image is exactly the painted pattern."""
    base = dict(noise=0.0, blur=0.0, gradient=0.0)
    base.update(kw)
    return SceneSpec(**base)


# --- geometry ----------------------------------------------------------------

def test_zero_particles_blank_scene():
    spec = clean_spec(n_min=0, n_max=0, seed=3)
    image, labels = generate_scene(spec)
    assert not labels.any()
    assert np.all(image == 0.12)  # bare background


def test_rasterization_identity():
    # the label map is exactly the placed geometry, rasterized
    spec = clean_spec(n_min=1, n_max=1, r_min=10.0, r_max=10.0, seed=11)
    image, labels = generate_scene(spec)
    (cy, cx, r) = place_disks(spec, np.random.default_rng(11))[0]
    assert r == 10.0
    yy, xx = np.indices(labels.shape)
    disk = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
    assert np.array_equal(labels == 1, disk)
    assert labels.max() == 1


def test_later_disk_wins_contested_pixels():
    # find a seed whose two permissive disks truly overlap, then check the
    # contested pixels all carry the later id and labels stay a partition
    for seed in range(40):
        spec = clean_spec(n_min=2, n_max=2, r_min=12.0, r_max=14.0,
                          max_overlap=0.6, seed=seed)
        image, labels = generate_scene(spec)
        disks = place_disks(spec, np.random.default_rng(seed))
        yy, xx = np.indices(labels.shape)
        masks = [(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r for cy, cx, r in disks]
        contested = masks[0] & masks[1]
        if not contested.any():
            continue
        assert np.all(labels[contested] == 2)
        assert set(np.unique(labels).tolist()) == {0, 1, 2}
        assert np.array_equal(labels > 0, masks[0] | masks[1])
        return
    pytest.fail("no overlapping pair found in 40 seeds")


def test_overlap_budget_honored():
    spec = clean_spec(height=256, width=256, n_min=25, n_max=35,
                      r_min=8.0, r_max=16.0, max_overlap=0.15, seed=5)
    disks = place_disks(spec, np.random.default_rng(5))
    yy, xx = np.indices((256, 256))
    occupied = np.zeros((256, 256), bool)
    for cy, cx, r in disks:
        cand = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        overlap = (cand & occupied).sum() / cand.sum()
        assert overlap <= 0.15
        occupied |= cand


def test_placement_error_when_impossible():
    spec = clean_spec(n_min=60, n_max=60, r_min=20.0, r_max=22.0,
                      max_overlap=0.0, height=128, width=128, seed=0)
    with pytest.raises(PlacementError, match="lower the count"):
        place_disks(spec, np.random.default_rng(0))


def test_disks_stay_on_canvas():
    spec = clean_spec(n_min=12, n_max=18, seed=9)
    for cy, cx, r in place_disks(spec, np.random.default_rng(9)):
        assert r <= cy <= spec.height - 1 - r
        assert r <= cx <= spec.width - 1 - r


# --- rendering ---------------------------------------------------------------

def test_fringe_has_more_intra_disk_variance_than_flat():
    kw = dict(n_min=8, n_max=8, r_min=9.0, r_max=12.0, seed=21)
    img_fringe, lab_f = generate_scene(clean_spec(mode="fringe", **kw))
    img_flat, lab_t = generate_scene(clean_spec(mode="flat", **kw))
    assert np.array_equal(lab_f, lab_t)  # same rng draw order for geometry

    def mean_var(img, labels):
        return np.mean([img[labels == k].var() for k in range(1, labels.max() + 1)])

    assert mean_var(img_fringe, lab_f) > 10 * mean_var(img_flat, lab_t)


def test_flat_disks_are_uniform():
    spec = clean_spec(mode="flat", n_min=5, n_max=5, seed=2)
    image, labels = generate_scene(spec)
    for k in range(1, labels.max() + 1):
        vals = np.unique(image[labels == k])
        assert len(vals) == 1
        assert 0.45 <= vals[0] <= 0.85


def test_gradient_tilts_background():
    spec = clean_spec(n_min=0, n_max=0, gradient=0.3, seed=4)
    image, _ = generate_scene(spec)
    assert image.std() > 0.01  # flat 0.12 would be exactly 0
    assert abs(image.mean() - 0.12) < 0.02  # ramp is centered


def test_scene_determinism():
    spec = SceneSpec(seed=33)  # defaults include noise and blur
    a_img, a_lab = generate_scene(spec)
    b_img, b_lab = generate_scene(spec)
    assert np.array_equal(a_img, b_img)
    assert np.array_equal(a_lab, b_lab)


def test_ground_truth_self_scores_one():
    rng = np.random.default_rng(6)
    for seed in (0, 1, 2):
        _, labels = generate_scene(SceneSpec(seed=seed), rng)
        assert labels.max() >= 1
        assert evaluate.seg_score(labels, labels) == 1.0


# --- spec validation ---------------------------------------------------------

@pytest.mark.parametrize("kw,msg", [
    (dict(height=32), "64x64"),
    (dict(width=16), "64x64"),
    (dict(r_min=1.0), "at least 2"),
    (dict(r_min=9.0, r_max=8.0), "range is empty"),
    (dict(n_min=-1), "count range"),
    (dict(n_min=7, n_max=3), "count range"),
    (dict(max_overlap=1.0), "max_overlap"),
    (dict(max_overlap=-0.1), "max_overlap"),
    (dict(mode="striped"), "mode"),
    (dict(noise=-0.01), "nonnegative"),
    (dict(blur=-1.0), "nonnegative"),
])
def test_spec_validation(kw, msg):
    with pytest.raises(ValueError, match=msg):
        SceneSpec(**kw).validate()


# --- dataset writer ----------------------------------------------------------

@pytest.fixture()
def proj(tmp_path):
    root = tmp_path / "proj"
    assert cli.main(["new", str(root)]) == 0
    return project.ProjectLayout(root)


def test_dataset_split_and_manifest(proj):
    spec = SceneSpec(seed=14)
    n_train, n_test = generate_dataset(spec, 4, 0.5, proj)
    assert (n_train, n_test) == (2, 2)
    assert sorted(p.name for p in proj.train_images.iterdir()) == [
        "synth_000.png", "synth_001.png"]
    assert sorted(p.name for p in proj.test_images.iterdir()) == [
        "synth_002.png", "synth_003.png"]
    # every stem has truth where evaluation looks for it
    assert sorted(p.name for p in proj.train_masks.iterdir()) == [
        "synth_%03d.png" % i for i in range(4)]
    manifest = (proj.root / "synth_manifest.txt").read_text()
    assert "n_images = 4" in manifest
    assert "synth_000 = train" in manifest
    assert "synth_003 = test" in manifest


def test_dataset_regeneration_byte_identical(tmp_path):
    spec = SceneSpec(seed=8)
    roots = []
    for name in ("a", "b"):
        root = tmp_path / name
        assert cli.main(["new", str(root)]) == 0
        layout = project.ProjectLayout(root)
        generate_dataset(spec, 2, 0.5, layout)
        roots.append(layout)
    for sub in ("train_images", "test_images", "train_masks"):
        a_dir = getattr(roots[0], sub)
        b_dir = getattr(roots[1], sub)
        for pa in sorted(a_dir.iterdir()):
            pb = b_dir / pa.name
            assert pa.read_bytes() == pb.read_bytes()


def test_dataset_masks_roundtrip_as_labels(proj):
    generate_dataset(SceneSpec(seed=14), 2, 0.5, proj)
    labels = project.load_labels(proj.train_masks / "synth_000.png")
    rng = np.random.default_rng([14, 0])
    _, truth = generate_scene(SceneSpec(seed=14), rng)
    assert np.array_equal(labels, truth)


def test_dataset_requires_initialized_project(tmp_path):
    layout = project.ProjectLayout(tmp_path / "nope")
    with pytest.raises(RuntimeError, match="not initialized"):
        generate_dataset(SceneSpec(), 2, 0.5, layout)


def test_dataset_rejects_zero_images(proj):
    with pytest.raises(ValueError, match="n_images"):
        generate_dataset(SceneSpec(), 0, 0.5, proj)
