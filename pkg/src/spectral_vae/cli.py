"""Command-line entry point: ``spectral-vae <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
from pathlib import Path

import numpy as np

from . import dsp
from .audio_io import load_wav, write_matrix
from .classifier import EvalReport, MlpTrainConfig, compare_report, train_mlp
from .config import load_config
from .errors import ConfigError, SpectralVaeError
from .features import build_feature_file, build_patch_dataset, read_manifest
from .features.patches import normalize_spectrogram, patch_array
from .nn import make_rng
from .vae import PatchDataset, VaeModel, VaeTrainConfig, latent_traversal, reconstruct, train_vae

log = logging.getLogger("spectral_vae")


class _Outputs:
    """Tracks files written by a subcommand so a failure can remove them."""

    def __init__(self):
        self.paths = []

    def add(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.paths.append(path)
        return path

    def cleanup(self):
        for p in reversed(self.paths):
            if p.is_dir():
                shutil.rmtree(p, ignore_errors=True)
            elif p.exists():
                p.unlink()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


def _stft_config(cfg):
    s = cfg.stft
    try:
        return dsp.StftConfig(s.win_length, s.hop_length, s.n_fft, s.window)
    except SpectralVaeError as exc:
        raise ConfigError(f"stft: {exc}") from None


def _image(patch):
    # frequency on the vertical axis, low frequencies at the bottom
    return np.asarray(patch).T[::-1]


def cmd_spectrogram(args, out):
    cfg = load_config(args.config)
    spec = dsp.spectrogram(load_wav(args.wav), _stft_config(cfg))
    target = out.add(args.out)
    if target.suffix == ".pgm":
        write_matrix(_image(np.log10(spec.data + dsp.LOG_FLOOR)), target, "pgm")
    elif target.suffix == ".csv":
        write_matrix(spec.data, target, "csv")
    else:
        raise ConfigError("out must end in .pgm or .csv")


def cmd_mfcc(args, out):
    coeffs = dsp.mfcc(load_wav(args.wav))
    write_matrix(coeffs, out.add(args.out), "csv")


def cmd_prepare_patches(args, out):
    cfg = load_config(args.config)
    manifest = read_manifest(args.manifest, classes=_all_labels(args.manifest))
    train = [manifest.resolve(e) for e in manifest.entries if e.split == "train"]
    test = [manifest.resolve(e) for e in manifest.entries if e.split == "test"]
    p = cfg.patches
    dataset, train_src, test_src = build_patch_dataset(
        train, test, p.patch_frames, p.stride_frames, _stft_config(cfg),
        max_train=p.max_train or None, max_test=p.max_test or None,
        rng=make_rng(cfg.seed, "patches/subsample"))
    out_dir = Path(args.out)
    save_patch_dir(out_dir, dataset, train_src, test_src, out)
    (out.add(out_dir / "effective_config.ini")).write_text(cfg.to_text())
    print(f"{len(dataset.train)} train / {len(dataset.test)} test patches, c = {dataset.norm_c!r}")


def _all_labels(manifest_path):
    # patch corpora carry arbitrary labels (speaker ids, "-"); accept whatever is listed
    labels = []
    for line in Path(manifest_path).read_text().splitlines():
        parts = line.split("\t")
        if len(parts) == 3 and not line.startswith("#") and parts[1] not in labels:
            labels.append(parts[1])
    return labels


def save_patch_dir(out_dir, dataset, train_src, test_src, out=None):
    """Write train.npy / test.npy / sources.tsv / norm.txt into `out_dir`."""
    track = out.add if out else Path
    np.save(track(out_dir / "train.npy"), dataset.train)
    np.save(track(out_dir / "test.npy"), dataset.test)
    lines = [f"train\t{f}\t{s}" for f, s in train_src] + [f"test\t{f}\t{s}" for f, s in test_src]
    track(out_dir / "sources.tsv").write_text("\n".join(lines) + "\n")
    track(out_dir / "norm.txt").write_text(f"{dataset.norm_c!r}\n")


def load_patch_dir(path):
    path = Path(path)
    if not (path / "train.npy").is_file():
        raise ConfigError(f"data.patches_dir: no train.npy in {path}")
    norm_c = float((path / "norm.txt").read_text())
    return PatchDataset(np.load(path / "train.npy"), np.load(path / "test.npy"), norm_c)


def cmd_train_vae(args, out):
    cfg = load_config(args.config)
    if not cfg.data.patches_dir:
        raise ConfigError("data.patches_dir is required for train-vae")
    patches_dir = Path(cfg.data.patches_dir)
    if not patches_dir.is_absolute():
        patches_dir = Path(args.config).parent / patches_dir
    dataset = load_patch_dir(patches_dir)
    v = cfg.vae
    model, report = train_vae(dataset, VaeTrainConfig(
        epochs=v.epochs, batch_size=v.batch_size, lr=v.lr, latent_dim=v.latent_dim,
        seed=cfg.seed, channels=v.channels))
    out_dir = Path(args.out)
    model.save(out.add(out_dir / "vae.ckpt"))
    out.add(out_dir / "train_report.csv").write_text(report.to_csv())
    out.add(out_dir / "effective_config.ini").write_text(cfg.to_text())
    print(f"trained {report.epochs} epochs, best epoch {report.best_epoch}")


def cmd_reconstruct(args, out):
    model = VaeModel.load(args.ckpt)
    if model.norm_c is None:
        raise ConfigError("ckpt has no stored normalization constant")
    spec = dsp.spectrogram(load_wav(args.wav), dsp.VAE_STFT)
    norm = normalize_spectrogram(spec.data, model.norm_c)
    frames = model.input_shape[0]
    if not 0 <= args.frame <= norm.shape[0] - frames:
        raise ConfigError(f"frame must be in [0, {norm.shape[0] - frames}]")
    patch = patch_array(norm[args.frame:args.frame + frames], frames, frames)[0]
    recon = reconstruct(model, patch)
    out_dir = Path(args.out)
    write_matrix(_image(patch), out.add(out_dir / f"original_f{args.frame}.pgm"), "pgm")
    write_matrix(_image(recon), out.add(out_dir / f"reconstruction_f{args.frame}.pgm"), "pgm")
    both = np.concatenate([_image(patch), _image(recon)], axis=1)
    write_matrix(both, out.add(out_dir / f"side_by_side_f{args.frame}.pgm"), "pgm")


def cmd_sample(args, out):
    model = VaeModel.load(args.ckpt)
    values, patches = latent_traversal(model, args.component, args.points)
    out_dir = Path(args.out)
    for i, patch in enumerate(patches):
        write_matrix(_image(patch), out.add(out_dir / f"sample_c{args.component}_{i}.pgm"), "pgm")
    print("values: " + " ".join(f"{v:.6f}" for v in values))


def cmd_featurize(args, out):
    if args.kind == "vae" and not args.ckpt:
        raise ConfigError("--ckpt is required for --kind vae")
    model = VaeModel.load(args.ckpt) if args.kind == "vae" else None
    manifest = read_manifest(args.manifest)
    summary = build_feature_file(manifest, args.kind, out.add(args.out), model=model,
                                 split=args.split, jobs=args.jobs)
    print(" ".join(f"{k}={v}" for k, v in summary.items()))


def cmd_train_classifier(args, out):
    cfg = load_config(args.config)
    c = cfg.classifier
    _, report = train_mlp(args.train, args.test, MlpTrainConfig(
        epochs=c.epochs, batch_size=c.batch_size, lr=c.lr, seed=cfg.seed,
        standardize=c.standardize))
    out_dir = Path(args.out)
    out.add(out_dir / "eval_report.json").write_text(report.to_json())
    out.add(out_dir / "history.csv").write_text(report.history_csv())
    out.add(out_dir / "effective_config.ini").write_text(cfg.to_text())
    s = report.summary()
    print(f"best epoch {s['best_epoch']}: test accuracy {s['test_accuracy']:.4f}")


def cmd_compare(args, out):
    vae = EvalReport.from_json(Path(args.report_vae).read_text())
    mfcc = EvalReport.from_json(Path(args.report_mfcc).read_text())
    text, csv = compare_report(vae, mfcc)
    sys.stdout.write(text)
    if args.out:
        out.add(args.out).write_text(csv)


def build_parser():
    parser = _Parser(prog="spectral-vae", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrogram", help="power spectrogram of a wav file")
    p.add_argument("wav")
    p.add_argument("--out", required=True, help=".pgm (log power image) or .csv (power)")
    p.add_argument("--config")
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("mfcc", help="13 MFCCs per 25 ms frame")
    p.add_argument("wav")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mfcc)

    p = sub.add_parser("prepare-patches", help="cut normalized spectrogram patches")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_prepare_patches)

    p = sub.add_parser("train-vae", help="train the VAE on a patch directory")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_train_vae)

    p = sub.add_parser("reconstruct", help="original vs reconstructed patch images")
    p.add_argument("ckpt")
    p.add_argument("wav")
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("sample", help="latent traversal images for one component")
    p.add_argument("ckpt")
    p.add_argument("--component", type=int, required=True)
    p.add_argument("--points", type=int, default=4)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("featurize", help="build an SFEA feature file from a manifest")
    p.add_argument("manifest")
    p.add_argument("--kind", choices=("vae", "mfcc"), required=True)
    p.add_argument("--ckpt")
    p.add_argument("--split", choices=("train", "test"))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train-classifier", help="train the MLP on SFEA files")
    p.add_argument("train")
    p.add_argument("test")
    p.add_argument("--config")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_train_classifier)

    p = sub.add_parser("compare", help="side-by-side comparison of a VAE and an MFCC eval report")
    p.add_argument("report_vae")
    p.add_argument("report_mfcc")
    p.add_argument("--out", help="optional CSV output")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = _Outputs()
    try:
        args.func(args, out)
    except (SpectralVaeError, OSError, ValueError, KeyError) as exc:
        out.cleanup()
        message = " ".join(str(exc).split()) or type(exc).__name__
        print(f"spectral-vae {args.command}: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
