import copy
import importlib

import numpy as np
import pytest
import torch
import torch.nn.functional as F
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from conftest import toy_view
from scriptorium.encoder import (
    DECAY_PER_ITERATION, FEATURE_DIM, INITIAL_LR, CheckpointError, ExponentialDecay, ImageSet,
    StyleEncoder, TrainedEncoder, TrainHyperparams, accuracy, batch_indices, build_encoder,
    fine_tune, fit_canvas, holdout_split, load_checkpoint, lr_at, pretrain, save_checkpoint,
    to_tensor, train,
)
from scriptorium.encoder import gradcheck
from scriptorium.encoder.train import encoder_spec

train_module = importlib.import_module("scriptorium.encoder.train")
from scriptorium.synthgen import WordLexicon, FontSquare, load_font_pool


def tiny_images(n, seed=0):
    rng = np.random.default_rng(seed)
    return [rng.integers(0, 256, size=(64, 128, 3), dtype=np.uint8) for _ in range(n)]


# -- architecture --------------------------------------------------------------

def test_shapes():
    model = build_encoder(100).eval()
    x = to_tensor(tiny_images(4))
    with torch.no_grad():
        assert model(x).shape == (4, 100)
        assert model.features(x).shape == (4, FEATURE_DIM)


def test_num_classes_at_least_two():
    with pytest.raises(ValueError):
        build_encoder(1)


def test_duplicate_images_give_identical_logits():
    model = build_encoder(7).eval()
    img = tiny_images(1)[0]
    with torch.no_grad():
        out = model(to_tensor([img, img, tiny_images(1, 1)[0], img]))
    assert torch.equal(out[0], out[1]) and torch.equal(out[0], out[3])


def _resnet18_backbone_count():
    def conv(k, cin, cout):
        return k * k * cin * cout

    def bn(c):
        return 2 * c

    def block(cin, cout):
        n = conv(3, cin, cout) + bn(cout) + conv(3, cout, cout) + bn(cout)
        if cin != cout:
            n += conv(1, cin, cout) + bn(cout)
        return n

    total = conv(7, 3, 64) + bn(64)
    for cin, cout in ((64, 64), (64, 128), (128, 256), (256, 512)):
        total += block(cin, cout) + block(cout, cout)
    return total


def test_backbone_parameter_count():
    expected = _resnet18_backbone_count()
    assert build_encoder(10).backbone_parameters() == expected
    assert abs(expected - 11.2e6) / 11.2e6 < 0.01


def test_feature_dim_independent_of_classes():
    for k in (2, 17, 310):
        assert build_encoder(k).head.in_features == FEATURE_DIM


def test_build_encoder_seeded():
    a, b = build_encoder(5, seed=3), build_encoder(5, seed=3)
    assert all(torch.equal(a.state_dict()[k], b.state_dict()[k]) for k in a.state_dict())
    c = build_encoder(5, seed=4)
    assert not torch.equal(a.stem[0].weight, c.stem[0].weight)


def test_softmax_sums_to_one():
    model = build_encoder(12).eval()
    with torch.no_grad():
        p = torch.softmax(model(to_tensor(tiny_images(5))).double(), dim=1)
    assert torch.allclose(p.sum(dim=1), torch.ones(5, dtype=torch.float64), atol=1e-6)


def test_replace_head_shape():
    model = build_encoder(50).replace_head(310)
    assert tuple(model.head.weight.shape) == (310, 512) and model.num_classes == 310


# -- preprocessing -------------------------------------------------------------

def test_fit_canvas_pads_and_crops():
    narrow = np.zeros((32, 40), np.uint8)
    out = fit_canvas(narrow)
    assert out.shape == (64, 256, 3)
    assert (out[:, :80] == 0).all() and (out[:, 80:] == 255).all()
    wide = np.zeros((64, 600, 3), np.uint8)
    wide[:, 300] = 200
    out = fit_canvas(wide)
    assert out.shape == (64, 256, 3) and (out[:, 128] == 200).all()


def test_fit_canvas_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_canvas(np.zeros((64, 64, 4), np.uint8))
    with pytest.raises(ValueError):
        fit_canvas(np.zeros((64, 64), np.float32))


# -- schedule ------------------------------------------------------------------

def test_lr_closed_form_at_90000():
    assert lr_at(90_000) == pytest.approx(2e-6, rel=1e-9)
    assert INITIAL_LR == 2e-5


def test_scheduler_matches_closed_form():
    sched = ExponentialDecay(None)
    for k in range(1, 90_001):
        sched.step()
        if k % 15_000 == 0:
            assert sched.lr == pytest.approx(lr_at(k), rel=1e-9)
    assert sched.lr == pytest.approx(2e-6, rel=1e-9)


def test_scheduler_drives_optimizer():
    p = torch.nn.Parameter(torch.zeros(1))
    opt = torch.optim.Adam([p], lr=1.0)
    sched = ExponentialDecay(opt, 1e-3, 0.5)
    sched.step()
    sched.step()
    assert opt.param_groups[0]["lr"] == 2.5e-4


def test_hyperparams_validation():
    with pytest.raises(ValueError):
        TrainHyperparams(initial_lr=0)
    with pytest.raises(ValueError):
        TrainHyperparams(decay=1.0)
    assert TrainHyperparams().decay == DECAY_PER_ITERATION
    hp = TrainHyperparams()
    assert (hp.batch_size, hp.patience, hp.pseudo_epoch) == (32, 30, 1000)


# -- gradient check --------------------------------------------------------------

def _autograd(params, x, label):
    t = {k: torch.tensor(v, requires_grad=True) for k, v in params.items()}
    xt = torch.tensor(x, requires_grad=True)
    z = F.relu(F.conv2d(xt[None], t["conv"], stride=2, padding=3)).mean(dim=(2, 3))[0]
    logits = t["head_w"] @ z + t["head_b"]
    loss = F.cross_entropy(logits[None], torch.tensor([label]))
    loss.backward()
    grads = {k: v.grad.numpy() for k, v in t.items()}
    grads["input"] = xt.grad.numpy()
    return loss.item(), grads


def test_gradients_match_finite_differences_and_autograd():
    model = build_encoder(6, seed=2)
    params = gradcheck.truncate(model)
    x = np.random.default_rng(0).normal(size=(3, 4, 4))
    value, analytic = gradcheck.loss_and_grads(params, x, label=4)
    numeric = gradcheck.numeric_grads(params, x, label=4)
    auto_value, auto = _autograd(params, x, 4)
    assert value == pytest.approx(gradcheck.loss(params, x, 4)) == pytest.approx(auto_value)
    for name in ("conv", "head_w", "head_b", "input"):
        assert gradcheck.max_relative_error(analytic[name], numeric[name], floor=1e-6) <= 1e-3, name
        assert gradcheck.max_relative_error(analytic[name], auto[name], floor=1e-10) <= 1e-8, name


# -- data ----------------------------------------------------------------------

def test_holdout_split_keeps_groups_together():
    data = ImageSet(list(range(40)), [i // 20 for i in range(40)], [i % 20 for i in range(40)])
    tr, va = holdout_split(data, 0.1, seed=1)
    assert len(set(va.groups)) == 2 and not set(va.groups) & set(tr.groups)
    assert set(va.labels) == {0, 1}
    tr2, va2 = holdout_split(data, 0.1, seed=1)
    assert list(va2.groups) == list(va.groups)


def test_batch_indices_epochs_cover_everything():
    n, b = 10, 4
    seen = np.concatenate([batch_indices(n, b, 3, it) for it in range(5)])
    assert sorted(seen[:10]) == list(range(10)) and sorted(seen[10:20]) == list(range(10))
    assert np.array_equal(batch_indices(n, b, 3, 2), batch_indices(n, b, 3, 2))


def test_image_set_rejects_mismatched_labels():
    with pytest.raises(ValueError):
        ImageSet([1, 2], [0])


# -- checkpoints ---------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path):
    model = build_encoder(3, seed=1)
    enc = TrainedEncoder(model, encoder_spec(model, ["a", "b", "c"]), {"iterations": 0})
    enc.save(tmp_path / "m.ckpt")
    loaded = TrainedEncoder.load(tmp_path / "m.ckpt")
    assert loaded.spec["classes"] == ["a", "b", "c"] and loaded.provenance == {"iterations": 0}
    for k, v in model.state_dict().items():
        assert torch.equal(loaded.model.state_dict()[k], v), k
    imgs = tiny_images(3)
    assert np.array_equal(loaded.encode(imgs), enc.encode(imgs))


def test_checkpoint_truncation_and_magic(tmp_path):
    model = build_encoder(2)
    save_checkpoint(tmp_path / "m.ckpt", model.state_dict(), encoder_spec(model), {})
    blob = (tmp_path / "m.ckpt").read_bytes()
    for cut in (4, 12, 100, len(blob) - 1):
        (tmp_path / "t.ckpt").write_bytes(blob[:cut])
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "t.ckpt")
    (tmp_path / "x.ckpt").write_bytes(blob + b"\0")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "x.ckpt")
    (tmp_path / "y.ckpt").write_bytes(b"NOTACKPT" + blob[8:])
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "y.ckpt")


def test_encode_is_finite_512_and_deterministic():
    enc = TrainedEncoder(build_encoder(4))
    imgs = tiny_images(3)
    v = enc.encode(imgs)
    assert v.shape == (3, 512) and v.dtype == np.float32 and np.isfinite(v).all()
    assert np.array_equal(v, enc.encode(imgs))
    with pytest.raises(ValueError):
        enc.encode([np.zeros((8, 8, 5), np.uint8)])


# -- training loop -------------------------------------------------------------

def _scripted_accuracy(monkeypatch, values, snapshots):
    calls = iter(values)

    def fake(model, image_set, batch_size=64):
        snapshots.append(copy.deepcopy(model.state_dict()))
        return next(calls)

    monkeypatch.setattr(train_module, "accuracy", fake)


def _tiny_sets(n=4):
    imgs = tiny_images(n)
    return ImageSet(imgs, [i % 2 for i in range(n)]), ImageSet(imgs[:2], [0, 1])


def test_early_stopping_returns_earliest_peak(monkeypatch):
    snapshots = []
    _scripted_accuracy(monkeypatch, [0.5, 0.7, 0.7, 0.6, 0.7, 0.1, 0.9], snapshots)
    model = build_encoder(2)
    tr, va = _tiny_sets()
    hp = TrainHyperparams(batch_size=2, pseudo_epoch=1, patience=3, max_iterations=50)
    record = train(model, tr, hp, va)
    assert record["best_pseudo_epoch"] == 2 and record["iterations"] == 5
    for k, v in snapshots[1].items():
        assert torch.equal(model.state_dict()[k], v), k


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from([0.1, 0.2, 0.3]), min_size=12, max_size=12), st.integers(1, 4))
def test_never_runs_past_best_plus_patience(values, patience):
    import pytest as _pytest
    mp = _pytest.MonkeyPatch()
    try:
        _scripted_accuracy(mp, values, [])
        tr, va = _tiny_sets()
        hp = TrainHyperparams(batch_size=2, pseudo_epoch=1, patience=patience, max_iterations=12)
        record = train(build_encoder(2), tr, hp, va)
    finally:
        mp.undo()
    epochs = len(record["history"])
    assert epochs <= record["best_pseudo_epoch"] + patience
    best = max(values[:epochs])
    assert record["best_pseudo_epoch"] == values.index(best) + 1


def test_training_rejects_bad_labels():
    tr = ImageSet(tiny_images(2), [0, 5])
    with pytest.raises(ValueError, match="labels"):
        train(build_encoder(2), tr, TrainHyperparams(max_iterations=1), tr)


def test_non_finite_loss_aborts():
    model = build_encoder(2)
    with torch.no_grad():
        model.head.bias.fill_(float("nan"))
    tr, va = _tiny_sets()
    with pytest.raises(FloatingPointError, match="iteration 0"):
        train(model, tr, TrainHyperparams(batch_size=2, max_iterations=3), va)


def test_resume_matches_uninterrupted_run(tmp_path):
    tr, va = _tiny_sets(6)
    hp = TrainHyperparams(batch_size=2, pseudo_epoch=2, patience=10, max_iterations=6, seed=1)
    full = build_encoder(2, seed=0)
    ref = train(full, tr, hp, va, log_path=tmp_path / "a.log")

    part = build_encoder(2, seed=0)
    state = tmp_path / "b.state"
    train(part, tr, TrainHyperparams(**{**hp.__dict__, "max_iterations": 4}), va,
          log_path=tmp_path / "b.log", state_path=state)
    resumed = build_encoder(2, seed=5)
    rec = train(resumed, tr, hp, va, log_path=tmp_path / "b.log", state_path=state, resume=True)

    assert rec["iterations"] == ref["iterations"] == 6
    assert rec["history"] == ref["history"]
    for k, v in full.state_dict().items():
        assert torch.equal(resumed.state_dict()[k], v), k
    assert (tmp_path / "a.log").read_text() == (tmp_path / "b.log").read_text()


# -- toy jobs ------------------------------------------------------------------

@pytest.fixture(scope="module")
def toy_job(toy_font_dir):
    view = toy_view(toy_font_dir, 50)
    images = [s.image for s in view]
    data = ImageSet(images, [i // 50 for i in range(100)], [i % 50 for i in range(100)])
    hp = TrainHyperparams(batch_size=16, pseudo_epoch=25, patience=2, max_iterations=1000)
    # validating on the training split measures how well the toy problem is fit
    encoder = pretrain(data, data, hp)
    return view, data, encoder


@pytest.mark.slow
def test_toy_two_font_training_fits(toy_job):
    _, data, encoder = toy_job
    assert accuracy(encoder.model, data) >= 0.99
    assert encoder.provenance["iterations"] <= 5000


@pytest.mark.slow
def test_style_outweighs_content(toy_job, toy_font_dir):
    view, _, encoder = toy_job
    fonts = load_font_pool(toy_font_dir)
    words = WordLexicon(tuple(f"{w}" for w in toy_view(toy_font_dir, 101, seed=9).lexicon.words))
    fresh = FontSquare(fonts, words, root_seed=9)
    a = encoder.encode([fresh.sample(0, i).image for i in range(101)])
    b = encoder.encode([fresh.sample(1, i).image for i in range(101)])

    def cos(u, v):
        return np.sum(u * v, axis=1) / np.linalg.norm(u, axis=1) / np.linalg.norm(v, axis=1)

    same_word_other_font = cos(a[:100], b[:100]).mean()
    same_font_other_word = np.mean([cos(a[:100], a[1:]).mean(), cos(b[:100], b[1:]).mean()])
    assert same_word_other_font < same_font_other_word


@pytest.mark.slow
def test_fine_tune_five_writers(toy_job, writer_font_dir):
    _, _, encoder = toy_job
    view = toy_view(writer_font_dir, 16, seed=4)
    data = ImageSet([s.image for s in view], [i // 16 for i in range(80)])
    hp = TrainHyperparams(batch_size=16, pseudo_epoch=25, patience=2, max_iterations=1000)
    tuned = fine_tune(encoder, data, data, hyperparams=hp)
    assert tuple(tuned.model.head.weight.shape) == (5, 512)
    assert tuned.provenance["hyperparams"]["initial_lr"] == 2e-5
    assert accuracy(tuned.model, data) >= 0.99
    # the source encoder is left untouched
    assert encoder.model.num_classes == 2


def test_fine_tune_single_writer_rejected():
    enc = TrainedEncoder(build_encoder(3))
    one = ImageSet(tiny_images(2), [0, 0])
    with pytest.raises(ValueError, match="two writers"):
        fine_tune(enc, one, one)


# -- estimator -----------------------------------------------------------------

def test_style_encoder_estimator():
    X = tiny_images(8)
    y = np.array(["a", "b"] * 4)
    est = StyleEncoder(batch_size=4, pseudo_epoch=2, max_iterations=4, val_fraction=0.25, seed=0)
    assert clone(est).get_params() == est.get_params()
    est.fit(X, y)
    assert est.transform(X).shape == (8, 512)
    assert set(est.predict(X)) <= {"a", "b"}
    proba = est.predict_proba(X)
    assert proba.shape == (8, 2) and np.allclose(proba.sum(axis=1), 1.0, atol=1e-6)
    with pytest.raises(ValueError):
        StyleEncoder().fit(X, ["a"] * 8)
