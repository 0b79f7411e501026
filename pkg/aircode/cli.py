import argparse
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "aircode"
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from aircode import get_version  # noqa: E402
from aircode.codec.geometry import layout_to_geometry, write_geometry  # noqa: E402
from aircode.codec.layout import TagLayout, generate_layout  # noqa: E402
from aircode.decoder.pipeline import decode_tag  # noqa: E402
from aircode.errors import (CapacityError, ConvergenceError, FormatError, InfeasibleDesignError,  # noqa: E402
                            InvalidInputError, NonPhysicalError, StageError)
from aircode.experiments import (TagDesigner, design_curves, pose_evaluation, round_trip, scene_captures,  # noqa: E402
                                 sweep, SWEEP_AXES)
from aircode.imager.images import read_capture_stack, read_pgm, write_capture_stack, write_pgm  # noqa: E402
from aircode.imager.separation import separate  # noqa: E402
from aircode.scatter.design import max_depth_for_albedo  # noqa: E402
from aircode.scatter.kubelka_munk import KmConstants, estimate_km_constants, transmissive_albedo  # noqa: E402
from aircode.scatter.material import load_fixture_material, load_material, read_sample_csv, \
    synthesize_sample, write_sample_csv  # noqa: E402
from aircode.settings import AirCodeConfig, load_config  # noqa: E402
from aircode.utils.file_utils import file_digest, load_json, store_json  # noqa: E402
from aircode.utils.string_utils import bits_to_hex, hex_to_bits, read_query_string, to_pretty_json  # noqa: E402

logger = logging.getLogger(__name__)  # by default also logged to console

MANIFEST = "manifest.json"
EXIT_USAGE = 2
EXIT_STAGE = 3
EXIT_FORMAT = 4


@dataclass
class RunManifest:
    """What a command read and wrote; identical inputs give identical digests."""
    command: str
    seed: int
    version: str
    config_paths: List[str] = field(default_factory=list)
    overrides: Dict = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)

    def add_input(self, path: str):
        self.inputs[str(path)] = file_digest(path)

    def add_output(self, path: str, out_dir: str):
        self.outputs[os.path.relpath(path, out_dir)] = file_digest(path)

    def store(self, out_dir: str) -> str:
        return store_json(asdict(self), MANIFEST, out_dir)


class CommandContext:

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out_dir = args.out
        os.makedirs(self.out_dir, exist_ok=True)
        self.config: AirCodeConfig = load_config(args.config, args.set)
        self.manifest = RunManifest(args.command_name, args.seed, get_version(),
                                    config_paths=[args.config] if args.config else [],
                                    overrides=dict(args.set or {}))
        if args.config:
            self.manifest.add_input(args.config)

    def material(self, path: Optional[str] = None) -> KmConstants:
        freqs = self.config.grids.freqs()
        if path is None:
            return load_fixture_material(freqs, self.config.material.fixture)
        self.manifest.add_input(path)
        return load_material(path, freqs)

    def output(self, path: str) -> str:
        self.manifest.add_output(path, self.out_dir)
        return path

    def path(self, file_name: str) -> str:
        return os.path.join(self.out_dir, file_name)

    def store_json(self, data: Dict, file_name: str) -> str:
        return self.output(store_json(data, file_name, self.out_dir))

    def finish(self):
        self.manifest.store(self.out_dir)


def material_fit(ctx: CommandContext):
    args, settings = ctx.args, ctx.config.material
    thickness = args.thickness or settings.sample_thickness_mm
    ctx.manifest.add_input(args.profiles)
    sample = read_sample_csv(args.profiles, thickness)
    km = estimate_km_constants(sample, ctx.config.grids.freqs(), **settings.estimation_kwargs())
    ctx.store_json(km.to_dict(), "material.json")
    for depth in (1.0, 2.0, 3.0):
        print(f"alpha({depth:g} mm) = {transmissive_albedo(km, depth):.4f}")


def curves(ctx: CommandContext):
    km = ctx.material(ctx.args.material)
    df_albedo, df_contrast = design_curves(km, ctx.config.tag.cell_size_mm, ctx.config.grids.radii(),
                                           disc_radius_factor=ctx.config.design_targets.disc_radius_factor)
    for name, df, x in (("albedo_curve", df_albedo, "d_mm"), ("contrast_curve", df_contrast, "h_mm")):
        csv_path = ctx.path(f"{name}.csv")
        df.to_csv(csv_path, index=False, lineterminator="\n", float_format="%.10g")
        ctx.output(csv_path)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for column in df.columns.drop(x):
            ax.plot(df[x], df[column], label=column)
        ax.set_xlabel(x)
        ax.legend()
        fig.tight_layout()
        svg_path = ctx.path(f"{name}.svg")
        fig.savefig(svg_path, metadata={"Date": None})
        plt.close(fig)
        ctx.output(svg_path)
    logger.info("Wrote design curves to %s", ctx.out_dir)


def fixture(ctx: CommandContext):
    km = ctx.material()
    thickness = ctx.config.material.sample_thickness_mm
    sample = synthesize_sample(km, thickness, ctx.config.grids.radii(), name="fixture")
    ctx.output(write_sample_csv(sample, ctx.path("fixture_profiles.csv")))
    print(f"Fixture profiles of a {thickness:g} mm slab written to {ctx.out_dir}")


def _payload(args: argparse.Namespace, default_bits: int, rng: np.random.Generator) -> np.ndarray:
    if args.payload is None:
        return rng.integers(0, 2, default_bits).astype(np.uint8)
    try:
        return np.asarray(hex_to_bits(args.payload, args.payload_bits), dtype=np.uint8)
    except ValueError as e:
        raise InvalidInputError(str(e), key="payload")


def encode(ctx: CommandContext):
    args, config = ctx.args, ctx.config
    tag_config = config.tag_config(args.preset)
    payload = _payload(args, config.experiments.payload_bits, np.random.default_rng(args.seed))
    layout = generate_layout(payload, tag_config)
    designer = TagDesigner(config, ctx.material(args.material))
    params = designer.params(tag_config)
    d_max = max_depth_for_albedo(designer.km, config.design_targets.albedo_floor_tau, config.design_targets.d_tol_mm)
    ctx.output(layout.save("layout.json", ctx.out_dir))
    geometry = layout_to_geometry(layout, params, config.geometry.voxel_pitch_mm, config.geometry.base_thickness_mm)
    ctx.output(write_geometry(geometry, "geometry.airc", ctx.out_dir))
    ctx.store_json({"params": params.to_dict(), "d_max_mm": d_max, "payload_hex": bits_to_hex(payload),
                    "payload_bits": int(payload.size), "grid_dims": tag_config.grid_dims}, "design.json")
    print(f"Encoded {payload.size} bits ({bits_to_hex(payload)}) on a {tag_config.grid_dims}x{tag_config.grid_dims} "
          f"grid: d={params.depth:.3f} mm, h={params.height:.3f} mm (d_max={d_max:.3f} mm)")


def render(ctx: CommandContext):
    args, config = ctx.args, ctx.config
    ctx.manifest.add_input(args.layout)
    layout = TagLayout.load(args.layout)
    designer = TagDesigner(config, ctx.material(args.material))
    image = designer.render(layout)
    ctx.output(write_pgm(image, ctx.path("global.pgm"), config.imaging.full_scale))
    print(f"Rendered {image.width}x{image.height} px at {image.pitch_mm} mm")
    if args.captures:
        experiments = config.experiments
        camera = config.imaging.camera.camera(experiments.tilt_deg, experiments.tilt_axis)
        captures = scene_captures(image, camera, designer, designer.params(layout.config).depth,
                                  config.degradation.with_seed(args.seed))
        stack_dir = ctx.path("captures")
        os.makedirs(stack_dir, exist_ok=True)
        manifest_path = write_capture_stack(captures, stack_dir, config.imaging.checkerboard.activation_alpha,
                                            args.seed, full_scale=config.imaging.full_scale)
        for name in load_json(manifest_path)["files"]:
            ctx.output(os.path.join(stack_dir, name))
        ctx.output(manifest_path)
        print(f"Wrote {len(captures)} checkerboard captures to {stack_dir}")


def separate_captures(ctx: CommandContext):
    args, config = ctx.args, ctx.config
    captures, manifest = read_capture_stack(args.captures)
    for name in manifest["files"]:
        ctx.manifest.add_input(os.path.join(args.captures, name))
    result = separate(captures, manifest.get("activation_alpha", config.imaging.checkerboard.activation_alpha))
    full_scale = config.imaging.full_scale
    ctx.output(write_pgm(result.direct, ctx.path("direct.pgm"), full_scale))
    ctx.output(write_pgm(result.global_, ctx.path("global.pgm"), full_scale))
    print(f"Separated {len(captures)} captures")


def decode(ctx: CommandContext):
    args, config = ctx.args, ctx.config
    ctx.manifest.add_input(args.image)
    image = read_pgm(args.image)
    tag_config = config.tag_config(args.preset)
    intrinsics = None
    if args.focal is not None:
        intrinsics = np.array([[args.focal, 0.0, (image.width - 1) / 2],
                               [0.0, args.focal, (image.height - 1) / 2],
                               [0.0, 0.0, 1.0]])
    payload_bits = args.payload_bits or config.experiments.payload_bits
    try:
        result = decode_tag(image, tag_config, payload_bits, config.decoder, intrinsics)
    except StageError as e:
        ctx.store_json({"success": False, "stage": e.stage, "reason": e.reason}, "decode.json")
        ctx.finish()
        raise
    ctx.store_json({"success": True, **result.to_dict()}, "decode.json")
    print(result.payload_hex)


def roundtrip(ctx: CommandContext):
    args, config = ctx.args, ctx.config
    tag_config = config.tag_config(args.preset)
    payload = None
    if args.payload is not None:
        payload = _payload(args, config.experiments.payload_bits, np.random.default_rng(args.seed))
    report = round_trip(config, args.seed, TagDesigner(config, ctx.material(args.material)), tag_config, payload,
                        tilt_deg=args.tilt, tilt_axis=args.axis, payload_bits=args.payload_bits)
    ctx.store_json(report.to_dict(), "report.json")
    print(to_pretty_json(report.to_dict()))
    if not report.success:
        ctx.finish()
        raise StageError(report.reason, stage=report.stage)


def run_sweep(ctx: CommandContext):
    args, config = ctx.args, ctx.config
    df_trials, df_summary = sweep(config, args.axis, args.values, args.trials, args.seed,
                                  TagDesigner(config, ctx.material(args.material)))
    for name, df in (("sweep_trials.csv", df_trials), ("sweep_summary.csv", df_summary)):
        df.to_csv(ctx.path(name), index=False, lineterminator="\n", float_format="%.10g")
        ctx.output(ctx.path(name))
    print(df_summary.to_string(index=False))


def pose_eval(ctx: CommandContext):
    args, config = ctx.args, ctx.config
    angles = args.angles or config.experiments.sweep.get("angle", [])
    if not angles:
        raise InvalidInputError("No tilt angles to evaluate", key="angles")
    df = pose_evaluation(config, angles, args.seed, TagDesigner(config, ctx.material(args.material)), args.axis)
    df.to_csv(ctx.path("pose_eval.csv"), index=False, lineterminator="\n", float_format="%.10g")
    ctx.output(ctx.path("pose_eval.csv"))
    print(df.to_string(index=False))


COMMANDS = {
    "material-fit": material_fit,
    "curves": curves,
    "fixture": fixture,
    "encode": encode,
    "render": render,
    "separate": separate_captures,
    "decode": decode,
    "roundtrip": roundtrip,
    "sweep": run_sweep,
    "pose-eval": pose_eval,
}


def cli(args: argparse.Namespace):
    start = datetime.now()
    ctx = CommandContext(args)
    try:
        COMMANDS[args.command_name](ctx)
        ctx.finish()
    finally:
        logger.info("aircode %s took: %s", args.command_name, datetime.now() - start)


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"Expected a positive count, got {value}")
    return number


def _float_list(value: str) -> List[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected comma separated numbers, got '{value}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aircode")
    parser.add_argument('--version', action='version', version=f'%(prog)s {get_version()}')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="A JSON file deep-merged over the packaged default config.")
    common.add_argument("--set", type=read_query_string, default=None,
                        help="Query string style config overrides. Example: 'decoder.svm_c=5,tag.known_bits=20'.")
    common.add_argument("--seed", type=int, default=0, help="Seed of all random choices. Default: 0.")
    common.add_argument("-o", "--out", type=str, default="aircode-out",
                        help="Directory for all outputs and the manifest. Default: 'aircode-out'.")
    common.add_argument("--material", type=str, default=None,
                        help="A material JSON as written by material-fit. Default: the packaged fixture material.")
    common.add_argument("--preset", type=str, default=None, help="A named tag preset, e.g. 'large'.")
    sub_parsers = parser.add_subparsers(dest="command_name", required=True)

    fit_parser = sub_parsers.add_parser("material-fit", parents=[common],
                                        help="Estimate Kubelka-Munk constants from measured R_D(r), T_D(r).")
    fit_parser.add_argument("-i", "--profiles", type=str, required=True, help="CSV with the header 'r_mm,R,T'.")
    fit_parser.add_argument("-D", "--thickness", type=float, default=None,
                            help="Sample thickness in mm. Default: material.sample_thickness_mm.")

    sub_parsers.add_parser("curves", parents=[common], help="Albedo and contrast design curves (CSV and SVG).")
    sub_parsers.add_parser("fixture", parents=[common], help="Synthetic sample profiles of the fixture material.")

    for name, help_text in (("encode", "Layout and voxel geometry for a payload."),
                            ("roundtrip", "Encode, image, separate and decode a simulated tag.")):
        payload_parser = sub_parsers.add_parser(name, parents=[common], help=help_text)
        payload_parser.add_argument("-p", "--payload", type=str, default=None,
                                    help="Payload as hex. Default: random bits from the seed.")
        payload_parser.add_argument("-n", "--payload_bits", type=_positive_int, default=None,
                                    help="Use only the first n bits of the hex payload.")
        if name == "roundtrip":
            payload_parser.add_argument("--tilt", type=float, default=None, help="Tilt of the tag plane in degrees.")
            payload_parser.add_argument("--axis", choices=["x", "y", "z"], default=None, help="Tilt axis.")

    render_parser = sub_parsers.add_parser("render", parents=[common], help="Global component image of a layout.")
    render_parser.add_argument("-l", "--layout", type=str, required=True, help="A layout JSON written by encode.")
    render_parser.add_argument("--captures", action="store_true",
                               help="Also write simulated checkerboard captures to <out>/captures for separate.")

    separate_parser = sub_parsers.add_parser("separate", parents=[common],
                                             help="Direct and global components of a capture stack.")
    separate_parser.add_argument("-c", "--captures", type=str, required=True,
                                 help="Directory with PGM captures and captures.json.")

    decode_parser = sub_parsers.add_parser("decode", parents=[common], help="Decode a global component PGM.")
    decode_parser.add_argument("-i", "--image", type=str, required=True)
    decode_parser.add_argument("-n", "--payload_bits", type=_positive_int, default=None,
                               help="Payload length in bits. Default: experiments.payload_bits.")
    decode_parser.add_argument("-f", "--focal", type=float, default=None,
                               help="Focal length in pixels; enables pose estimation.")

    sweep_parser = sub_parsers.add_parser("sweep", parents=[common], help="Monte Carlo round trips along one axis.")
    sweep_parser.add_argument("-a", "--axis", choices=SWEEP_AXES, required=True)
    sweep_parser.add_argument("-v", "--values", type=_float_list, default=None,
                              help="Comma separated values. Default: experiments.sweep.<axis>.")
    sweep_parser.add_argument("-t", "--trials", type=_positive_int, default=None,
                              help="Trials per value. Default: experiments.trials.")

    pose_parser = sub_parsers.add_parser("pose-eval", parents=[common], help="Pose errors over tilt angles.")
    pose_parser.add_argument("--angles", type=_float_list, default=None,
                             help="Comma separated tilt angles. Default: experiments.sweep.angle.")
    pose_parser.add_argument("--axis", choices=["x", "y"], default="y")
    return parser


def main(argv: Optional[List[str]] = None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:  # catch all unexpected exceptions to ensure proper logging
        cli(args)
    except InvalidInputError as e:
        logger.error(e)
        sys.exit(EXIT_USAGE)
    except (FormatError, NonPhysicalError) as e:
        logger.error(e)
        sys.exit(EXIT_FORMAT)
    except (StageError, ConvergenceError, InfeasibleDesignError, CapacityError) as e:
        logger.error(e)
        sys.exit(EXIT_STAGE)
    except Exception as e:
        logger.exception(e)
        raise


if __name__ == "__main__":
    main()
