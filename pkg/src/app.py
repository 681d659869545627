import argparse
import json
import sys
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, TextIO, Tuple

from core.circuitio import CircuitDocument, random_circuit, read_circuit, serialize, write_circuit
from core.config import DEFAULT_CONFIG_FILE, ConfigManager, SimulatorConfig
from core.engine import Engine, EngineMode, RandomSource, op_counts
from core.errors import QSUError, UnsharpReadoutError, ValidationError
from core.histogram import TrialHistogram
from core.logger import AppLogger
from core.oracle import compare_distributions
from core.qstate import QuantumStateRegister, init_arbitrary, init_basis
from core.sampling import Backend, run_trials, stream_seed


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed {text} is not a 64-bit unsigned value")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _prn_list(text: str) -> Tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(',') if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad prn list '{text}'") from None
    if any(not 0 <= v <= 1 for v in values):
        raise argparse.ArgumentTypeError("forced prns must lie in [0, 1]")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='qsu-sim',
        description='Fixed-point quantum simulation unit with a double-precision oracle.',
    )
    parser.add_argument('--config', type=Path, default=None, help='config JSON (default ~/.qsu_sim/config.json)')
    parser.add_argument('--log-level', default=None, help='console log level (DEBUG, INFO, WARNING, ERROR)')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='simulate one trial')
    run.add_argument('circuit', type=Path)
    run.add_argument('--seed', type=_u64, default=None)
    run.add_argument('--force-prn', type=_prn_list, default=(), metavar='P[,P...]',
                     help='prns consumed in draw order before the seeded stream')
    run.add_argument('--mode', choices=[m.value for m in EngineMode], default=EngineMode.DEFERRED.value)
    run.add_argument('--dump-state', action='store_true', help='print the final register')
    run.add_argument('--trace', action='store_true', help='print one line per evaluated gate')
    run.add_argument('--dump-routing', action='store_true', help='print the switch settings of every pass')
    init = run.add_mutually_exclusive_group()
    init.add_argument('--init-basis', type=int, default=None, metavar='INDEX')
    init.add_argument('--init-amplitudes', type=Path, default=None, metavar='FILE',
                      help="one 're im' pair per line, normalized in fixed point")

    sample = sub.add_parser('sample', help='sample trials into histograms')
    sample.add_argument('circuit', type=Path)
    sample.add_argument('--trials', type=_positive, default=None)
    sample.add_argument('--seed', type=_u64, default=None)
    sample.add_argument('--backend', choices=['engine', 'oracle', 'both'], default='engine')
    sample.add_argument('--mode', choices=[m.value for m in EngineMode], default=EngineMode.DEFERRED.value)
    sample.add_argument('--jobs', type=_positive, default=None)
    sample.add_argument('--force-prn', type=_prn_list, default=())
    sample.add_argument('--out', type=Path, default=None)
    sample.add_argument('--format', choices=['csv', 'json'], default='csv')

    compare = sub.add_parser('compare', help='engine-vs-oracle distribution report')
    compare.add_argument('circuit', type=Path, nargs='?', default=None)
    compare.add_argument('--trials', type=_positive, default=None)
    compare.add_argument('--seed', type=_u64, default=None)
    compare.add_argument('--mode', choices=[m.value for m in EngineMode], default=EngineMode.DEFERRED.value)
    compare.add_argument('--jobs', type=_positive, default=None)
    compare.add_argument('--engine-hist', type=Path, default=None, help='use a sampled engine histogram')
    compare.add_argument('--oracle-hist', type=Path, default=None, help='use a sampled oracle histogram')
    compare.add_argument('--out', type=Path, default=None)
    compare.add_argument('--format', choices=['text', 'json'], default='text')

    rnd = sub.add_parser('random', help='generate a random verification circuit')
    rnd.add_argument('--qubits', '-n', type=int, required=True)
    rnd.add_argument('--iterations', type=int, default=3)
    rnd.add_argument('--seed', type=_u64, default=None)
    rnd.add_argument('--out', type=Path, default=None)

    config = sub.add_parser('config', help='show or change persistent settings')
    config_sub = config.add_subparsers(dest='action', required=True)
    config_sub.add_parser('show', help='print the effective settings as JSON')
    config_set = config_sub.add_parser('set', help='change one setting and save')
    config_set.add_argument('key')
    config_set.add_argument('value')
    config_sub.add_parser('reset', help='restore and save the defaults')

    log = sub.add_parser('log', help='show or clear the configured log file')
    log.add_argument('action', choices=['show', 'clear'])

    return parser


def read_amplitudes(path: Path) -> List[Tuple[Fraction, Fraction]]:
    """Amplitude file: one 're im' pair per line, '#' comments."""
    amps = []
    for line_number, line in enumerate(path.read_text(encoding='utf-8').splitlines(), start=1):
        body = line.split('#', 1)[0].split()
        if not body:
            continue
        if len(body) != 2:
            raise ValidationError(f"{path}: line {line_number}: expected 're im'")
        try:
            amps.append((Fraction(body[0]), Fraction(body[1])))
        except ValueError:
            raise ValidationError(f"{path}: line {line_number}: bad number") from None
    return amps


class QSUApp:
    """Command-line front end coordinating circuits, engine, oracle and sampling."""

    def __init__(self, config_file: Optional[Path] = None, log_level: Optional[str] = None,
                 out: Optional[TextIO] = None):
        self.config_manager = ConfigManager(config_file or DEFAULT_CONFIG_FILE)
        self.config: SimulatorConfig = self.config_manager.load()
        self.out = out or sys.stdout

        log_file = Path(self.config.log_file) if self.config.log_file else None
        self.logger = AppLogger(log_file, log_level or self.config.log_level)
        self.tolerances = self.config.tolerances()

    def _emit(self, text: str = "") -> None:
        print(text, file=self.out)

    def _write_or_emit(self, text: str, path: Optional[Path]) -> None:
        if path is None:
            self.out.write(text)
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        self.logger.info(f"Wrote {path}")

    def _load(self, path: Path) -> CircuitDocument:
        self.logger.debug(f"Reading circuit {path}")
        doc = read_circuit(path, self.config.n_max)
        self.logger.info(f"Loaded {doc.name or path.name}: {doc.n} qubits, {len(doc.gates)} gates")
        return doc

    def _check_measured(self, doc: CircuitDocument) -> None:
        measured = {spec.i for spec in doc.gates if spec.kind.is_measurement}
        if len(measured) != doc.n:
            self.logger.warning(
                f"{doc.n - len(measured)} qubit(s) are never measured; readouts may be unsharp"
            )

    def dispatch(self, args: argparse.Namespace) -> int:
        """
        Run the selected command.

        Returns:
            Process exit code
        """
        handlers = {
            'run': self.cmd_run,
            'sample': self.cmd_sample,
            'compare': self.cmd_compare,
            'random': self.cmd_random,
            'config': self.cmd_config,
            'log': self.cmd_log,
        }
        try:
            return handlers[args.command](args)
        except QSUError as e:
            self.logger.error(f"{args.command} failed: {e}")
            print(f"error: {e}", file=sys.stderr)
            return e.exit_code
        except OSError as e:
            self.logger.error(f"{args.command} failed: {e}")
            print(f"error: {e}", file=sys.stderr)
            return 1

    def _initial_register(self, args, n: int) -> QuantumStateRegister:
        if args.init_amplitudes is not None:
            return init_arbitrary(n, read_amplitudes(args.init_amplitudes), self.config.n_max)
        return init_basis(n, args.init_basis or 0, self.config.n_max)

    def cmd_run(self, args) -> int:
        doc = self._load(args.circuit)
        seed = self.config.default_seed if args.seed is None else args.seed
        rng = RandomSource(seed, args.force_prn)
        engine = Engine(EngineMode(args.mode), self.tolerances, self.config.n_max)

        qsr = self._initial_register(args, doc.n)
        _, outcomes = engine.evaluate_circuit(qsr, doc.circuit, rng)
        self.logger.debug(f"Evaluated {len(doc.gates)} gates with {rng.draws} prn draw(s)")

        for outcome in outcomes:
            prn = "sharp" if outcome.sharp else f"prn=0x{outcome.prn:08x}"
            self._emit(f"measure q{outcome.qubit} -> {outcome.bit} (p0={float(outcome.p0):.6f}, {prn})")

        if args.trace:
            self._emit("# seq kind qubits prn ordering_after")
            for record in engine.trace:
                self._emit(record.format())
        if args.dump_routing:
            for record in engine.trace:
                for settings in record.routing:
                    self._emit(f"# pass {record.seq} {record.kind}")
                    self.out.write(settings.dump())
        if args.dump_state:
            self.out.write(qsr.dump())

        counts = op_counts(engine.trace)
        self._emit(" ".join(f"{key}={value}" for key, value in counts.as_dict().items()))

        try:
            readout = engine.rrm_readout(qsr)
        except UnsharpReadoutError:
            self._emit("readout: unsharp")
            raise
        self._emit(f"readout: {readout.hex}")
        self.logger.success(f"Readout {readout.hex}")
        return 0

    def _sample(self, doc: CircuitDocument, backend: Backend, seed: int, args) -> TrialHistogram:
        trials = args.trials or self.config.default_trials
        jobs = args.jobs or self.config.jobs
        self.logger.info(f"Sampling {trials} trials on the {backend.value} backend ({jobs} job(s))")
        histogram = run_trials(
            doc, trials, seed, backend, jobs=jobs, mode=EngineMode(args.mode),
            tolerances=self.tolerances, forced=getattr(args, 'force_prn', ()),
        )
        if histogram.unsharp:
            self.logger.warning(f"{histogram.unsharp} {backend.value} trial(s) ended unsharp")
        return histogram

    def cmd_sample(self, args) -> int:
        doc = self._load(args.circuit)
        self._check_measured(doc)
        seed = self.config.default_seed if args.seed is None else args.seed
        backends = [Backend.ENGINE, Backend.ORACLE] if args.backend == 'both' else [Backend(args.backend)]

        unsharp = False
        for backend in backends:
            histogram = self._sample(doc, backend, seed, args)
            unsharp = unsharp or histogram.unsharp > 0
            text = histogram.to_csv() if args.format == 'csv' else histogram.to_json()
            out = args.out
            if out is not None and len(backends) > 1:
                out = out.with_name(f"{out.stem}.{backend.value}{out.suffix}")
            if out is None and len(backends) > 1:
                self._emit(f"# {backend.value}")
            self._write_or_emit(text, out)
        return UnsharpReadoutError.exit_code if unsharp else 0

    def cmd_compare(self, args) -> int:
        seed = self.config.default_seed if args.seed is None else args.seed
        doc = None
        if args.circuit is not None:
            doc = self._load(args.circuit)
            self._check_measured(doc)
        elif args.engine_hist is None or args.oracle_hist is None:
            raise ValidationError("compare needs a circuit unless both --engine-hist and --oracle-hist are given")

        if args.engine_hist is not None:
            engine_hist = TrialHistogram.load(args.engine_hist)
        else:
            engine_hist = self._sample(doc, Backend.ENGINE, stream_seed(seed, 0), args)
        if args.oracle_hist is not None:
            oracle_hist = TrialHistogram.load(args.oracle_hist)
        else:
            oracle_hist = self._sample(doc, Backend.ORACLE, stream_seed(seed, 1), args)

        n = max(engine_hist.n, oracle_hist.n, doc.n if doc else 1)
        report = compare_distributions(engine_hist.widen(n), oracle_hist.widen(n))
        self.logger.info(
            f"Euclidean distance {report.euclidean_distance:.3e}, MAE {report.mae:.3e}"
        )
        text = report.format_table() if args.format == 'text' else report.to_json()
        self._write_or_emit(text, args.out)
        return UnsharpReadoutError.exit_code if any(report.unsharp) else 0

    def cmd_random(self, args) -> int:
        seed = self.config.default_seed if args.seed is None else args.seed
        if args.qubits > self.config.n_max:
            raise ValidationError(f"qubit count {args.qubits} exceeds the {self.config.n_max}-qubit limit")
        doc = random_circuit(args.qubits, args.iterations, seed)
        self.logger.info(f"Generated {doc.name} with {len(doc.gates)} gates (seed {seed})")
        if args.out is None:
            self.out.write(serialize(doc))
        else:
            write_circuit(args.out, doc)
            self.logger.info(f"Wrote {args.out}")
        return 0

    def _save_config(self) -> bool:
        """Persist the current settings to disk."""
        success = self.config_manager.save(self.config)
        if success:
            self.logger.info(f"Saved settings to {self.config_manager.config_file}")
        else:
            self.logger.warning(f"Failed to save settings to {self.config_manager.config_file}")
            print(f"error: could not write {self.config_manager.config_file}", file=sys.stderr)
        return success

    def cmd_config(self, args) -> int:
        if args.action == 'set':
            self.config = self.config.with_value(args.key, args.value)
        elif args.action == 'reset':
            self.config = SimulatorConfig()
        if args.action != 'show' and not self._save_config():
            return 1
        self._emit(json.dumps(asdict(self.config), indent=2))
        return 0

    def cmd_log(self, args) -> int:
        if self.logger.log_file is None:
            raise ValidationError("no log file configured; set one with 'config set log_file <path>'")
        if args.action == 'clear':
            self.logger.clear_logs()
            return 0
        self.out.write(self.logger.get_log_contents())
        return 0
