"""Command-line surface: design, beampattern, simulate, gen-dataset, enhance,
evaluate, sir-curve."""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import beamformer as bf
from . import fusion as fu
from . import metrics, pipeline, roomsim
from .array import ArrayGeometry, FrequencyGrid
from .stft import StftConfig


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(os.environ.get("BEAMFUSION_SEED", "0"))


class _Outputs:
    """Tracks output paths so partial results are removed on failure."""

    def __init__(self):
        self.paths = []

    def claim(self, path):
        self.paths.append(path)
        return path

    def cleanup(self):
        for p in self.paths:
            if os.path.isfile(p):
                os.remove(p)


def _geometry(args) -> ArrayGeometry:
    return ArrayGeometry(args.mics, args.spacing, sample_rate=args.fs)


def cmd_design(args, out: _Outputs):
    geom = _geometry(args)
    grid = FrequencyGrid(args.nfft, args.fs)
    nulls = [float(x) for x in args.nulls.split(",")]
    bank = bf.standard_bank(geom, grid, np.radians(args.theta_s), tuple(nulls),
                            include_mwng=args.include_mwng)
    pipeline.save_filter_bank(bank, out.claim(args.out))
    print(f"wrote {len(bank.filters)} filters to {args.out}")


def cmd_beampattern(args, out: _Outputs):
    bank = pipeline.load_filter_bank(args.bank)
    thetas = np.radians(np.arange(0.0, 181.0, args.theta_step))
    freqs = [float(x) for x in args.freqs.split(",")]
    with open(out.claim(args.out), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["freq_hz", "theta_deg"] + [f.label + "_db" for f in bank.filters])
        for freq in freqs:
            cols = [bf.beampattern(f, bank.geometry, bank.grid, freq, thetas)[1]
                    for f in bank.filters]
            for i, th in enumerate(np.degrees(thetas)):
                writer.writerow([freq, th] + [f"{c[i]:.4f}" for c in cols])
    print(f"wrote beampattern CSV to {args.out}")


def cmd_simulate(args, out: _Outputs):
    with open(args.scenario) as fh:
        scn = roomsim.Scenario.from_json(json.load(fh))
    if args.seed is not None:
        scn.seed = args.seed
    fs = scn.geometry.sample_rate
    rng = np.random.default_rng(np.random.SeedSequence([_seed(args), 1]))
    target = roomsim.synthetic_speech(args.duration, fs, rng)
    interferers = [roomsim.synthetic_speech(args.duration, fs, rng)
                   for _ in scn.interferers]
    parts = roomsim.synthesize_scenario(scn, target, interferers)
    roomsim.write_wav(out.claim(args.out), parts["mixture"], fs)
    base, _ = os.path.splitext(args.out)
    roomsim.write_wav(out.claim(base + ".ref.wav"), parts["reference"], fs)
    print(f"wrote mixture to {args.out}")


def cmd_gen_dataset(args, out: _Outputs):
    cfg = roomsim.DatasetConfig(
        out_dir=args.out_dir,
        geometry=ArrayGeometry(args.mics, args.spacing, sample_rate=args.fs),
        duration=args.duration,
        t60_range=tuple(args.t60_range),
        interferer_gain_db=args.interferer_gain,
        clip_dir=args.clip_dir,
        save_components=args.save_components,
    )
    manifest = roomsim.gen_dataset(cfg, args.count, _seed(args), jobs=args.jobs)
    print(f"wrote {args.count} samples, manifest {manifest}")


def _load_bank_and_params(args):
    bank = pipeline.load_filter_bank(args.bank)
    params = None
    if args.mode == "neural":
        if not args.weights:
            raise ValueError("neural mode requires --weights")
        params = fu.load_model(args.weights)
        if params.P != bank.num_filters:
            raise ValueError("weight file P does not match the filter bank")
    return bank, params


def cmd_enhance(args, out: _Outputs):
    mix, fs = roomsim.read_wav(args.input)
    if mix.ndim != 2:
        raise ValueError("input must be multichannel")
    bank, params = _load_bank_and_params(args)
    signal, traj = pipeline.enhance(mix, bank, args.mode, params, fs=fs)
    roomsim.write_wav(out.claim(args.out), signal, fs)
    if args.dump_weights:
        from . import tensorfile
        with open(out.claim(args.dump_weights), "wb") as fh:
            fh.write(tensorfile.MAGIC)
            import struct
            fh.write(struct.pack("<I", tensorfile.VERSION))
            fh.write(struct.pack("<B", 2))  # kind: weight trajectory
            tensorfile.write_tensors(fh, {"acc/alpha" if args.mode == "acc"
                                          else "fusion/weights": traj})
    print(f"wrote enhanced signal to {args.out}")


def cmd_evaluate(args, out: _Outputs):
    est, fs = roomsim.read_wav(args.estimate)
    ref, _ = roomsim.read_wav(args.reference)
    est, ref = np.atleast_2d(est)[0], np.atleast_2d(ref)[0]
    n = min(est.size, ref.size)
    report = {"si_sdr_db": metrics.si_sdr(est[:n], ref[:n])}
    if args.mixture:
        mix, _ = roomsim.read_wav(args.mixture)
        mix = np.atleast_2d(mix)[0]
        baseline = metrics.si_sdr(mix[:n], ref[:n])
        report["delta_si_sdr_db"] = report["si_sdr_db"] - baseline
    with open(out.claim(args.out), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(report, sort_keys=True))


def cmd_sir_curve(args, out: _Outputs):
    geom = ArrayGeometry(args.mics, args.spacing, sample_rate=args.fs)
    grid = FrequencyGrid(StftConfig().nfft, args.fs)
    bank = bf.standard_bank(geom, grid)
    params = fu.load_model(args.weights) if args.weights else None
    seed = _seed(args)
    array_center = (4.0, 2.0, 1.0)

    def run_trial(angle_deg, trial):
        rng = np.random.default_rng(np.random.SeedSequence([seed, int(angle_deg), trial]))
        room = roomsim.RoomConfig((8.0, 6.0, 3.0), args.t60, args.fs)
        az = np.radians(angle_deg)
        pos = np.array(array_center) + 2.0 * np.array([np.cos(az), np.sin(az), 0.0])
        scn = roomsim.Scenario(room, array_center, geom, (6.0, 2.0, 1.0),
                               [roomsim.Static(tuple(pos))],
                               snr_db=30.0, seed=int(rng.integers(2 ** 31)))
        target = roomsim.synthetic_speech(args.duration, args.fs, rng)
        interferer = roomsim.synthetic_speech(args.duration, args.fs, rng)
        parts = roomsim.synthesize_scenario(scn, target, [interferer])
        est, _ = pipeline.enhance(parts["mixture"], bank, args.mode, params, fs=args.fs)
        return metrics.bss_sir(est, parts["reference"], parts["interf_m"][0])

    curve = metrics.sir_vs_angle(run_trial, trials=args.trials)
    with open(out.claim(args.out), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["angle_deg", "sir_db", "n_trials"])
        for row in curve:
            writer.writerow([row["angle_deg"], f"{row['sir_db']:.4f}", row["n_trials"]])
    print(f"wrote SIR curve to {args.out}")


def _add_geom_flags(p):
    p.add_argument("--mics", type=int, default=8)
    p.add_argument("--spacing", type=float, default=0.01)
    p.add_argument("--fs", type=float, default=16000.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beamfusion")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="design a DMA filter bank")
    _add_geom_flags(p)
    p.add_argument("--nfft", type=int, default=512)
    p.add_argument("--theta-s", dest="theta_s", type=float, default=0.0)
    p.add_argument("--nulls", default="90,120,150,180")
    p.add_argument("--include-mwng", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("beampattern", help="export beampattern CSV")
    p.add_argument("--bank", required=True)
    p.add_argument("--freqs", default="1000")
    p.add_argument("--theta-step", dest="theta_step", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_beampattern)

    p = sub.add_parser("simulate", help="render a scenario JSON to audio")
    p.add_argument("--scenario", required=True)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-dataset", help="generate a training/eval dataset")
    _add_geom_flags(p)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--t60-range", dest="t60_range", type=float, nargs=2,
                   default=(0.2, 0.8), metavar=("LO", "HI"))
    p.add_argument("--interferer-gain", dest="interferer_gain", type=float,
                   default=0.0, help="interferer level relative to target, dB")
    p.add_argument("--clip-dir", dest="clip_dir", default=None)
    p.add_argument("--save-components", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("enhance", help="enhance a multichannel WAV")
    p.add_argument("--input", required=True)
    p.add_argument("--bank", required=True)
    p.add_argument("--mode", required=True, help="fixed:<p> | acc | neural")
    p.add_argument("--weights", default=None)
    p.add_argument("--dump-weights", dest="dump_weights", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("evaluate", help="metric report for an estimate")
    p.add_argument("--estimate", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--mixture", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sir-curve", help="SIR vs interference angle")
    _add_geom_flags(p)
    p.add_argument("--mode", default="acc")
    p.add_argument("--weights", default=None)
    p.add_argument("--t60", type=float, default=0.24)
    p.add_argument("--duration", type=float, default=4.0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sir_curve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = _Outputs()
    try:
        args.func(args, out)
    except (ValueError, OSError) as exc:
        out.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
