#!/usr/bin/env python3
"""
Metameric Varifocal Hologram Toolkit

Optimises phase-only holograms under a gaze-contingent metameric loss,
simulates their reconstructions and prepares them for a phase-only SLM.

Usage:
    python metaholo.py optimise --target scene.png --gaze 0.4,0.5 --distance 0.15
    python metaholo.py simulate --phase output/phase.yaml
    python metaholo.py compare --target scene.png --losses metameric,mse --workers 2
    python metaholo.py metamer --target scene.png --gaze center --seed 3
    python metaholo.py encode --phase output/phase.yaml --grating horizontal
    python metaholo.py average --target scene.png --count 5
    python metaholo.py optimise --config config.yaml
"""

import argparse
import hashlib
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import torch

# Add project root to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from metameric_holography import __version__
from metameric_holography.common.config import (
    RunConfig,
    add_common_arguments,
    add_display_arguments,
    add_gaze_arguments,
    add_optim_arguments,
    add_output_arguments,
)
from metameric_holography.common.error_handler import (
    ErrorContext,
    ErrorHandler,
    FormatError,
    InvalidConfigError,
    InvalidInputError,
    classify,
)
from metameric_holography.common.image_io import (
    crop,
    load_image,
    read_raw_dump,
    resize_image,
    save_image,
    side_by_side,
    write_raw_dump,
)
from metameric_holography.common.logger import Logger, TimedLogger, get_logger
from metameric_holography.common.losses import metameric_loss, region_errors
from metameric_holography.common.optimizer import (
    optimise_hologram,
    random_phase,
    simulate,
    temporal_sequence,
)
from metameric_holography.common.perception import GazeContext, synthesize_metamer
from metameric_holography.common.propagation import PhaseMap
from metameric_holography.common.report import ReportGenerator
from metameric_holography.common.slm import (
    PhaseMetadata,
    apply_horizontal_grating,
    dequantize,
    export_phase,
    import_phase,
    prepare_for_slm,
    read_sidecar,
)


COMMANDS = ("optimise", "simulate", "compare", "metamer", "encode", "average")


class HologramPipeline:
    """Main pipeline class that coordinates every command."""

    def __init__(self, config: RunConfig, logger: Optional[Logger] = None, argv: Optional[List[str]] = None):
        """
        Initialize the pipeline.

        Args:
            config: Validated run configuration
            logger: Optional logger; built from config.logging when omitted
            argv: Command line recorded in manifests
        """
        self.config = config
        self.logger = logger or get_logger(
            log_level=config.logging.level,
            log_file=config.logging.file,
            show_progress=config.logging.show_progress,
        )
        self.error_handler = ErrorHandler(logger=self.logger)
        self.report = ReportGenerator(config.output.out_dir)
        self.argv = list(argv) if argv is not None else sys.argv[1:]

    # ------------------------------------------------------------------
    # Shared helpers
    # ------------------------------------------------------------------

    def _command_line(self) -> str:
        return "metaholo.py " + " ".join(self.argv)

    def _out(self, *parts: str) -> str:
        path = os.path.join(self.config.output.out_dir, *parts)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        return path

    def load_target(self) -> torch.Tensor:
        """Load the target image and match it to the configured SLM size."""
        if not self.config.target:
            raise InvalidConfigError("Target image is required (--target or config file)")

        target = load_image(self.config.target, linear=self.config.output.linear)
        _, height, width = target.shape
        self.logger.info(f"Loaded target {self.config.target} ({width}x{height}, "
                         f"{target.shape[0]} channel(s))")

        slm_width = self.config.display.slm_width or width
        slm_height = self.config.display.slm_height or height
        if (width, height) != (slm_width, slm_height):
            if not self.config.output.resize:
                raise InvalidInputError(
                    f"Target is {width}x{height} but the SLM is {slm_width}x{slm_height}; "
                    f"pass --resize to fit it")
            self.logger.info(f"Resizing target to {slm_width}x{slm_height}")
            target = resize_image(target, slm_width, slm_height)
        return target

    def gaze_context(self) -> GazeContext:
        return self.config.gaze_context()

    def _progress(self):
        if self.config.logging.show_progress and self.config.performance.max_workers == 1:
            return self.logger.loss_progress
        return None

    def _optimise_kwargs(self, target: torch.Tensor, progress=None) -> dict:
        display = self.config.display
        return {
            "loss_cfg": self.config.loss_config(),
            "wavelengths": self.config.wavelengths_for(target.shape[0]),
            "pitch": display.pitch_m,
            "zero_pad": display.zero_pad,
            "progress": progress,
            "logger": self.logger,
        }

    def _reconstruct(self, phase: PhaseMap, target: torch.Tensor, distance: Optional[float] = None) -> torch.Tensor:
        display = self.config.display
        with torch.no_grad():
            return simulate(phase.data, target,
                            display.distance_m if distance is None else distance,
                            self.config.wavelengths_for(target.shape[0]),
                            phase.pitch, display.zero_pad)

    def export_phases(self, phase: PhaseMap, target: torch.Tensor, stem: str,
                      subdir: str = "") -> List[str]:
        """Grate, quantize and write a phase set; returns image and sidecar paths."""
        display = self.config.display
        quantized = prepare_for_slm(phase, display.grating, display.bit_depth)
        metadata = PhaseMetadata(
            pitch_m=phase.pitch,
            wavelengths_m=list(self.config.wavelengths_for(target.shape[0])),
            distance_m=display.distance_m,
            gaze_xy=list(self.config.gaze.gaze),
            grating=display.grating,
            version=__version__,
            brightness=[float(v) for v in target.mean(dim=(1, 2))],
        )
        out_dir = os.path.join(self.config.output.out_dir, subdir) if subdir else self.config.output.out_dir
        paths, sidecar = export_phase(quantized, metadata, out_dir, stem)
        return paths + [sidecar]

    def save_reconstruction(self, image: torch.Tensor, stem: str) -> List[str]:
        """Write a reconstruction as a 16-bit image plus a raw float dump."""
        png = save_image(self._out(f"{stem}.png"), image.clamp(0.0, 1.0),
                         bit_depth=self.config.output.reconstruction_bit_depth,
                         linear=self.config.output.linear)
        raw = write_raw_dump(self._out(f"{stem}.f32"), image)
        return [png, raw, f"{raw}.yaml"]

    def _foveal_radius_px(self, ctx: GazeContext, width: int, height: int) -> float:
        if ctx.alpha <= 0:
            return min(width, height) / 4.0
        return math.sqrt(ctx.fovea_threshold_px * ctx.pixels_per_degree / ctx.alpha)

    def inset_windows(self, ctx: GazeContext, width: int, height: int) -> Dict[str, Tuple[int, int, int]]:
        """Foveal and peripheral report windows as (x, y, size)."""
        inset = self.config.output.inset
        size = int(inset[2]) if inset else max(8, min(width, height) // 8)
        size = min(size, width, height)

        def around(cx: float, cy: float) -> Tuple[int, int, int]:
            x = int(round(cx - size / 2))
            y = int(round(cy - size / 2))
            return min(max(0, x), width - size), min(max(0, y), height - size), size

        gx, gy = ctx.gaze[0] * width, ctx.gaze[1] * height
        windows = {"fovea": around(gx, gy)}
        if inset:
            windows["periphery"] = (int(inset[0]), int(inset[1]), size)
        else:
            windows["periphery"] = around(gx + 2.0 * self._foveal_radius_px(ctx, width, height), gy)
        return windows

    def write_insets(self, images: List[torch.Tensor], ctx: GazeContext, stem: str) -> List[str]:
        """Side-by-side crops of every image in the foveal and peripheral windows."""
        _, height, width = images[0].shape
        paths = []
        for name, (x, y, size) in self.inset_windows(ctx, width, height).items():
            crops = [crop(image, x, y, size, size) for image in images]
            paths.append(save_image(self._out("insets", f"{stem}_{name}.png"),
                                    side_by_side(crops).clamp(0.0, 1.0),
                                    linear=self.config.output.linear))
        return paths

    def _manifest(self, command: str, outputs: List[str], results: dict,
                  inputs: Optional[List[str]] = None) -> str:
        inputs = inputs if inputs is not None else ([self.config.target] if self.config.target else [])
        return self.report.write_manifest(
            f"{command}_manifest.json",
            command=self._command_line(),
            config=self.config.to_dict(),
            inputs=inputs,
            outputs=outputs,
            extra=results,
        )

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------

    def cmd_optimise(self) -> Dict[str, object]:
        """Optimise one hologram and write phases, reconstruction, loss history and manifest."""
        self.logger.section("Hologram optimisation")
        target = self.load_target()
        ctx = self.gaze_context()
        cfg = self.config.optim_config()

        with TimedLogger(self.logger, f"{cfg.steps}-step {cfg.loss_kind} optimisation") as timer:
            phase, history = optimise_hologram(
                target, ctx, self.config.display.distance_m, cfg,
                **self._optimise_kwargs(target, self._progress()))

        reconstruction = self._reconstruct(phase, target)
        outputs = self.export_phases(phase, target, "phase")
        outputs += self.save_reconstruction(reconstruction, "reconstruction")
        outputs.append(self.report.write_table(
            [{"iteration": i + 1, "loss": value} for i, value in enumerate(history)],
            "loss_history.tsv", ["iteration", "loss"]))

        results = region_errors(reconstruction, target, ctx)
        results.update({
            "loss_kind": cfg.loss_kind,
            "initial_loss": history[0],
            "final_loss": history[-1],
            "seconds": timer.duration,
        })
        manifest = self._manifest("optimise", outputs, results)
        self.logger.metrics("Optimisation results", results)
        return {"outputs": outputs, "manifest": manifest, "results": results}

    def _load_phase_set(self, phase_path: str) -> Tuple[PhaseMap, PhaseMetadata]:
        """Read a phase set and undo its grating so it holds the optimised phase."""
        channels = read_sidecar(phase_path).channels
        quantized, metadata = import_phase(
            phase_path, expected_wavelengths=self.config.wavelengths_for(channels))
        phase = dequantize(quantized, metadata.pitch_m)
        if metadata.grating == "horizontal":
            phase = apply_horizontal_grating(phase)
        return phase, metadata

    def cmd_simulate(self, phase_path: str, distance: Optional[float] = None,
                     keep_grating: bool = False) -> Dict[str, object]:
        """Simulate the reconstruction of an exported phase set."""
        self.logger.section("Reconstruction simulation")
        phase, metadata = self._load_phase_set(phase_path)
        if keep_grating and metadata.grating == "horizontal":
            phase = apply_horizontal_grating(phase)

        distance = metadata.distance_m if distance is None else distance
        brightness = metadata.brightness or [1.0] * metadata.channels
        reference = torch.tensor(brightness, dtype=torch.float64).view(-1, 1, 1).expand(
            metadata.channels, metadata.height, metadata.width)
        with torch.no_grad():
            reconstruction = simulate(phase.data, reference, distance, metadata.wavelengths_m,
                                      metadata.pitch_m, self.config.display.zero_pad)

        outputs = self.save_reconstruction(reconstruction, "simulated")
        inputs = [phase_path] + [os.path.join(os.path.dirname(phase_path), f) for f in metadata.files]
        results = {"distance_m": distance, "grating_simulated": bool(keep_grating and metadata.grating != "none")}
        manifest = self._manifest("simulate", outputs, results, inputs=inputs)
        self.logger.info(f"Simulated {metadata.width}x{metadata.height} reconstruction at {distance} m")
        return {"outputs": outputs, "manifest": manifest, "reconstruction": reconstruction}

    def _compare_one(self, kind: str, target: torch.Tensor, ctx: GazeContext) -> Dict[str, object]:
        cfg = self.config.optim_config(loss_kind=kind)
        self.logger.info(f"Optimising with {kind} loss ({cfg.steps} steps, seed {cfg.seed})")
        phase, history = optimise_hologram(target, ctx, self.config.display.distance_m, cfg,
                                           **self._optimise_kwargs(target, self._progress()))
        reconstruction = self._reconstruct(phase, target)
        with torch.no_grad():
            metameric = float(metameric_loss(reconstruction, target, ctx, self.config.loss_config()))

        initial = random_phase(tuple(phase.data.shape), cfg.seed)
        row = {"loss": kind, "seed": cfg.seed, "steps": cfg.steps,
               "init_sha256": hashlib.sha256(initial.numpy().tobytes()).hexdigest()[:16]}
        row.update(region_errors(reconstruction, target, ctx))
        row.update({"metameric": metameric, "final_loss": history[-1]})
        return {"row": row, "phase": phase, "reconstruction": reconstruction}

    def cmd_compare(self) -> Dict[str, object]:
        """Optimise once per loss kind from the same seed and tabulate region errors."""
        self.logger.section("Loss comparison")
        target = self.load_target()
        ctx = self.gaze_context()
        kinds = list(self.config.loss.compare_kinds)
        workers = min(self.config.performance.max_workers, len(kinds))

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                runs = list(executor.map(lambda k: self._compare_one(k, target, ctx), kinds))
        else:
            runs = [self._compare_one(kind, target, ctx) for kind in kinds]

        outputs = []
        for kind, run in zip(kinds, runs):
            outputs += self.export_phases(run["phase"], target, f"phase_{kind}", subdir=kind)
            outputs += self.save_reconstruction(run["reconstruction"], f"{kind}/reconstruction")
            outputs += self.write_insets([target, run["reconstruction"]], ctx, kind)

        headers = ["loss", "seed", "steps", "init_sha256", "mse", "psnr", "foveal_mse",
                   "peripheral_mse", "metameric", "final_loss"]
        rows = [run["row"] for run in runs]
        outputs.append(self.report.write_table(rows, "compare.tsv", headers))
        manifest = self._manifest("compare", outputs, {"rows": rows})

        for row in rows:
            self.logger.info(f"{row['loss']:>15}: foveal MSE {row['foveal_mse']:.4e}, "
                             f"peripheral MSE {row['peripheral_mse']:.4e}, PSNR {row['psnr']:.2f} dB")
        return {"outputs": outputs, "manifest": manifest, "rows": rows}

    def cmd_metamer(self, passes: Optional[int] = None) -> Dict[str, object]:
        """Synthesize a metamer of the target and write it next to the target."""
        self.logger.section("Metamer synthesis")
        target = self.load_target()
        ctx = self.gaze_context()
        loss_cfg = self.config.loss_config()
        seed = self.config.optim.seed
        passes = passes or loss_cfg.metamer_passes

        with TimedLogger(self.logger, "metamer synthesis"):
            metamer = synthesize_metamer(target, ctx, seed, loss_cfg.level_count, passes)

        generator = torch.Generator().manual_seed(int(seed))
        noise = torch.rand(target.shape, generator=generator, dtype=torch.float64)
        with torch.no_grad():
            metamer_loss = float(metameric_loss(metamer, target, ctx, loss_cfg))
            noise_loss = float(metameric_loss(noise, target, ctx, loss_cfg))

        linear = self.config.output.linear
        outputs = [
            save_image(self._out("metamer.png"), metamer, linear=linear),
            save_image(self._out("metamer_side_by_side.png"), side_by_side([target, metamer]), linear=linear),
        ]
        outputs += self.write_insets([target, metamer], ctx, "metamer")

        results = {
            "seed": seed,
            "passes": passes,
            "metameric_loss": metamer_loss,
            "noise_metameric_loss": noise_loss,
            "loss_ratio": metamer_loss / noise_loss if noise_loss > 0 else 0.0,
        }
        results.update(region_errors(metamer, target, ctx))
        outputs.append(self.report.write_summary("metamer_summary.txt", "Metamer synthesis", results))
        manifest = self._manifest("metamer", outputs, results)
        self.logger.metrics("Metamer results", results)
        return {"outputs": outputs, "manifest": manifest, "results": results, "metamer": metamer}

    def cmd_encode(self, phase_path: str) -> Dict[str, object]:
        """Re-grate and re-quantize a phase set or a raw float phase dump."""
        self.logger.section("Phase encoding")
        display = self.config.display

        if phase_path.endswith((".yaml", ".yml")):
            phase, metadata = self._load_phase_set(phase_path)
            inputs = [phase_path] + [os.path.join(os.path.dirname(phase_path), f) for f in metadata.files]
            wavelengths = metadata.wavelengths_m
            distance, gaze, brightness = metadata.distance_m, metadata.gaze_xy, metadata.brightness
        else:
            phase = PhaseMap(read_raw_dump(phase_path), display.pitch_m)
            inputs = [phase_path]
            wavelengths = self.config.wavelengths_for(phase.channels)
            distance, gaze, brightness = display.distance_m, list(self.config.gaze.gaze), []

        quantized = prepare_for_slm(phase, display.grating, display.bit_depth)
        metadata = PhaseMetadata(
            pitch_m=phase.pitch, wavelengths_m=list(wavelengths), distance_m=distance,
            gaze_xy=list(gaze), grating=display.grating, version=__version__,
            brightness=list(brightness),
        )
        paths, sidecar = export_phase(quantized, metadata, self.config.output.out_dir, "encoded")
        outputs = paths + [sidecar]
        results = {"grating": display.grating, "bit_depth": display.bit_depth}
        manifest = self._manifest("encode", outputs, results, inputs=inputs)
        self.logger.info(f"Encoded {phase.channels} channel(s) at {display.bit_depth} bit, "
                         f"grating {display.grating}")
        return {"outputs": outputs, "manifest": manifest, "sidecar": sidecar}

    def cmd_average(self) -> Dict[str, object]:
        """Optimise a temporal sequence and compare its average with a single frame."""
        self.logger.section("Temporal averaging")
        target = self.load_target()
        ctx = self.gaze_context()
        cfg = self.config.optim_config()
        count = cfg.temporal_count

        with TimedLogger(self.logger, f"{count}-frame sequence"):
            phases, average = temporal_sequence(
                target, ctx, self.config.display.distance_m, cfg, count=count,
                **self._optimise_kwargs(target, self._progress()))

        frames = torch.stack([self._reconstruct(phase, target) for phase in phases])
        single = frames[0]
        variance = float(frames.var(dim=0, unbiased=False).mean()) if count > 1 else 0.0

        outputs = []
        for k, phase in enumerate(phases):
            outputs += self.export_phases(phase, target, f"frame_{k}", subdir="frames")
        outputs += self.save_reconstruction(single, "single_frame")
        outputs += self.save_reconstruction(average, "average")
        outputs += self.write_insets([target, single, average], ctx, "average")

        single_errors = region_errors(single, target, ctx)
        average_errors = region_errors(average, target, ctx)
        rows = []
        for region in ("mse", "foveal_mse", "peripheral_mse"):
            before, after = single_errors[region], average_errors[region]
            rows.append({
                "region": region.replace("_mse", "") if region != "mse" else "full",
                "count": count,
                "single_mse": before,
                "average_mse": after,
                "ratio": after / before if before and before > 0 else math.nan,
                "frame_variance": variance,
            })
        outputs.append(self.report.write_table(
            rows, "average.tsv", ["region", "count", "single_mse", "average_mse", "ratio", "frame_variance"]))
        manifest = self._manifest("average", outputs, {"mode": cfg.temporal_mode, "rows": rows})
        self.logger.info(f"Average/single MSE ratio {rows[0]['ratio']:.4f} "
                         f"over {count} {cfg.temporal_mode} frames")
        return {"outputs": outputs, "manifest": manifest, "rows": rows,
                "single": single, "average": average}

    def _input_path(self, command: str, args: argparse.Namespace) -> Optional[str]:
        """File a command reads its input from."""
        if command in ("simulate", "encode"):
            return getattr(args, "phase", None)
        return self.config.target

    def run(self, command: str, args: argparse.Namespace) -> int:
        """Run a command and map failures to exit codes."""
        try:
            if command == "optimise":
                self.cmd_optimise()
            elif command == "simulate":
                self.cmd_simulate(args.phase, getattr(args, "override_distance", None),
                                  getattr(args, "keep_grating", False))
            elif command == "compare":
                self.cmd_compare()
            elif command == "metamer":
                self.cmd_metamer(getattr(args, "passes", None))
            elif command == "encode":
                self.cmd_encode(args.phase)
            elif command == "average":
                self.cmd_average()
            else:
                raise InvalidConfigError(f"Unknown command '{command}'")
        except KeyboardInterrupt:
            self.logger.warning("Interrupted by user")
            return 1
        except (FileNotFoundError, PermissionError, IsADirectoryError, FormatError) as e:
            path = getattr(e, "filename", None) or self._input_path(command, args)
            code = self.error_handler.handle_file_error(e, path, command)
            self.logger.debug(f"Error summary: {self.error_handler.get_error_summary()}")
            return code
        except Exception as e:
            context = ErrorContext(error_type=classify(e), operation=command,
                                   iteration=getattr(e, "iteration", None))
            code = self.error_handler.handle(e, context)
            self.logger.debug(f"Error summary: {self.error_handler.get_error_summary()}")
            return code

        self.logger.info(f"{command} finished; outputs in {self.config.output.out_dir}")
        return 0


def create_argument_parser() -> argparse.ArgumentParser:
    """Create command line argument parser."""
    parser = argparse.ArgumentParser(
        description="Metameric varifocal phase-only hologram toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s optimise --target scene.png --gaze 0.4,0.5 --loss metameric
  %(prog)s simulate --phase output/phase.yaml --override-distance 0.16
  %(prog)s compare --target scene.png --losses metameric,mse,blur_match
  %(prog)s metamer --target scene.png --gaze center --seed 3
  %(prog)s encode --phase output/phase.yaml --grating horizontal
  %(prog)s average --target scene.png --count 5 --dither 0.2
        """
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help_text)
        add_common_arguments(sub)
        add_display_arguments(sub)
        add_gaze_arguments(sub)
        add_output_arguments(sub)
        return sub

    optimise = command('optimise', 'Optimise a hologram for a target image')
    add_optim_arguments(optimise)

    simulate_cmd = command('simulate', 'Simulate the reconstruction of an exported phase set')
    simulate_cmd.add_argument('--phase', required=True, help='Phase-set sidecar (.yaml)')
    simulate_cmd.add_argument('--override-distance', type=float,
                              help='Simulate at this distance instead of the sidecar distance')
    simulate_cmd.add_argument('--keep-grating', action='store_true',
                              help='Simulate the grated phase as driven on the SLM')

    compare = command('compare', 'Optimise with several losses from the same seed')
    add_optim_arguments(compare)
    compare.add_argument('--losses', type=str, help='Comma-separated loss kinds (default: all)')
    compare.add_argument('--workers', type=int, help='Parallel optimisation runs (default: 1)')

    metamer = command('metamer', 'Synthesize a metamer of the target')
    metamer.add_argument('--seed', type=int, help='Noise seed (default: 0)')
    metamer.add_argument('--passes', type=int, help='Statistic-matching passes (default: 3)')

    encode = command('encode', 'Re-grate and re-quantize a phase set or raw phase dump')
    encode.add_argument('--phase', required=True, help='Phase-set sidecar (.yaml) or raw dump (.f32)')

    average = command('average', 'Optimise a temporal sequence and average it')
    add_optim_arguments(average)
    average.add_argument('--count', type=int, help='Number of frames (default: 5)')
    average.add_argument('--dither', type=float,
                         help='Phase dither in radians for warm-mode frames (default: 0)')
    average.add_argument('--temporal-mode', choices=['independent', 'warm'],
                         help='independent: every frame from its own random phase; '
                              'warm: short runs from the previous frame (default: independent)')

    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Config file (if any) overridden by command line flags."""
    base = RunConfig.from_file(args.config) if getattr(args, 'config', None) else RunConfig()
    return RunConfig.from_args(args, base)


def main(argv: Optional[List[str]] = None) -> int:
    """Main function."""
    parser = create_argument_parser()
    args = parser.parse_args(argv)
    argv = list(argv) if argv is not None else sys.argv[1:]

    try:
        config = load_config(args)
        config.validate()
    except Exception as e:
        handler = ErrorHandler(Logger(show_progress=False))
        return handler.handle(e, ErrorContext(error_type=classify(e), operation="configuration",
                                              file_path=getattr(e, "filename", None)))

    pipeline = HologramPipeline(config, argv=argv)
    return pipeline.run(args.command, args)


if __name__ == "__main__":
    sys.exit(main())
