#!/usr/bin/python3
# SPDX-License-Identifier: LGPL-2.1+

import argparse
import pathlib
import sys

import pandas as pd

from .cli import BoolCLI, BoolCommand
from .config import Config, ConfigError
from .data import DataError, generate_examples, iter_jsonl, parse_truth_table, read_jsonl, write_jsonl
from .encoding import EncodingError, Vocabulary
from .evaluation import (
    EPOCH_SIZE,
    PROBE_FUNCTIONS,
    SWEEP_AXES,
    evaluate_circuits,
    length_generalization_eval,
    memorization_probe,
    sweep,
)
from .formula import FormulaError, parse_text, to_text
from .generator import make_rng
from .grn import (
    GrnError,
    benchmark,
    infer_network,
    random_network,
    read_network,
    read_trajectories,
    score,
    simulate,
    write_network,
    write_trajectories,
)
from .helpers import (
    EXIT_DATA,
    EXIT_INTERRUPTED,
    EXIT_MODEL,
    EXIT_OK,
    EXIT_USAGE,
    FatalException,
    atomic_write,
    error,
    fatal,
    info,
    log_enable_color,
    open_or_stdin,
    open_output,
    warn,
)
from .inference import NoCandidateError, Predictor
from .model import FormulaModel, ModelError, latest_checkpoint, load_checkpoint
from .simplify import SimplifyError, simplify
from .synthesis import SynthesisError, compare_synthesis, write_report
from .tabular import SCORE_COLUMNS, TabularError, merge_baseline_scores, read_baseline_scores, run_dataset
from .trainer import GeneratedDataset, ReplayDataset, TrainingError, resolve_device, train

try:
    import argcomplete
except ImportError:
    warn("can't find python3-argcomplete: argument completion won't be available")
    pass

DATA_ERRORS = (FormulaError, DataError, EncodingError, GrnError, TabularError, SimplifyError, SynthesisError, OSError)
MODEL_ERRORS = (ModelError, NoCandidateError, TrainingError)


def write_csv(path, df, header=None):
    """Write ``df`` to ``path`` ("-" for stdout) after ``header`` comment lines."""
    with open_output(path, "w") as out:
        for line in header or ():
            out.write(f"# {line}\n")
        df.to_csv(out, index=False)


def int_list(s):
    try:
        return [int(v) for v in s.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def number_list(s):
    try:
        return [float(v) if "." in v or "e" in v else int(v) for v in s.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def add_seed_argument(parser):
    parser.add_argument("--seed", help="Seed for all random choices", type=int, default=None)


def add_checkpoint_argument(parser, required=True):
    parser.add_argument(
        "--ckpt",
        help="Checkpoint file, or a training directory (its newest checkpoint is used)",
        required=required,
        metavar="PATH",
    )


def add_decoding_arguments(parser):
    parser.add_argument("--candidates", help="Number of sampled candidates", type=int, default=None)
    parser.add_argument("--temperature", help="Sampling temperature (0: greedy)", type=float, default=None)
    parser.add_argument("--beam-size", help="Beam width for --mode beam", type=int, default=None, dest="beam_size")
    parser.add_argument("--mode", help="Decoding mode", choices=("sample", "beam"), default="sample")
    parser.add_argument("--device", help="Torch device", default=None)


def load_model(config, ckpt):
    """
    Model of ``ckpt``. The regime and dimension of ``config`` follow the
    model so that generated evaluation data matches what it was trained on.
    """
    path = pathlib.Path(ckpt)
    if path.is_dir():
        found = latest_checkpoint(path)
        if found is None:
            fatal(f"no checkpoint in {path}", code=EXIT_MODEL)
        path = found
    model, _ = load_checkpoint(path, resolve_device(config.device))
    config.regime = model.config.regime
    if not config.d_max or config.d_max > model.config.d_max:
        config.d_max = model.config.d_max
    return model


def make_predictor(config, args):
    model = load_model(config, args.ckpt)
    return Predictor(
        model,
        k=config.candidates,
        temperature=config.temperature,
        mode=args.mode,
        beam_size=config.beam_size,
        seed=config.seed,
        regime=model.config.regime,
    )


class GenDataCmd(BoolCommand):
    """
    Generate training examples as JSONL

    Example i only depends on --seed and i: the same arguments always give
    the same file, and --start lets independent jobs write disjoint slices.
    """

    parser_epilog = Config.help("generator", "noise")
    parser_formatter_class = argparse.RawTextHelpFormatter

    def init(self):
        self.parser.add_argument("--regime", choices=("noiseless", "noisy"), default=None)
        self.parser.add_argument("--count", help="Number of examples", type=int, required=True)
        self.parser.add_argument("--start", help="Index of the first example", type=int, default=0)
        self.parser.add_argument("--d-max", type=int, default=None, dest="d_max")
        self.parser.add_argument("--max-gates", type=int, default=None, dest="max_gates")
        self.parser.add_argument("--workers", help="Generator processes", type=int, default=1)
        self.parser.add_argument("-o", "--out", help="Output file (default: stdout)", default="-")
        add_seed_argument(self.parser)

    def run(self):
        args = self.args
        config = self.config
        if args.count < 0:
            fatal("--count must be >= 0")
        self.print_config_header()

        examples = generate_examples(
            config.generator_config(), config.noise_config(), config.seed, args.count, start=args.start, workers=args.workers
        )
        n = write_jsonl(args.out, examples, header=config.dump())
        if args.out != "-":
            info(f"wrote {n} examples to {args.out}", file=sys.stderr)
        return EXIT_OK


class TrainCmd(BoolCommand):
    """
    Train a model

    With --data on-the-fly (the default) every step draws fresh examples;
    with a JSONL file the examples are replayed in seeded random order.
    Training resumes from the newest checkpoint in --out unless
    --no-resume is given.
    """

    parser_epilog = Config.help("generator", "noise", "model", "train")
    parser_formatter_class = argparse.RawTextHelpFormatter

    def init(self):
        self.parser.add_argument("--data", help="JSONL file or 'on-the-fly'", default="on-the-fly")
        self.parser.add_argument("-o", "--out", help="Directory for checkpoints and loss.csv", required=True)
        self.parser.add_argument("--no-resume", help="Start over even if --out has checkpoints", action="store_false", dest="resume")
        self.parser.add_argument("--regime", choices=("noiseless", "noisy"), default=None)
        self.parser.add_argument("--preset", choices=("desk", "paper"), default=None)
        self.parser.add_argument("--d-max", type=int, default=None, dest="d_max")
        self.parser.add_argument("--max-gates", type=int, default=None, dest="max_gates")
        self.parser.add_argument("--total-steps", type=int, default=None, dest="total_steps")
        self.parser.add_argument("--batch-size", type=int, default=None, dest="batch_size")
        self.parser.add_argument("--num-workers", type=int, default=None, dest="num_workers")
        self.parser.add_argument("--device", default=None)
        add_seed_argument(self.parser)

    def run(self):
        args = self.args
        config = self.config
        self.print_config_header()

        model_cfg = config.model_config()
        train_cfg = config.train_config()
        vocab = Vocabulary(model_cfg.d_max)
        model = FormulaModel(model_cfg, vocab)
        info(f"model with {model.parameter_count()} parameters", file=sys.stderr)

        if args.data == "on-the-fly":
            size = train_cfg.total_steps * train_cfg.batch_size
            dataset = GeneratedDataset(config.generator_config(), config.noise_config(), vocab, config.seed, size)
            cycle = False
        else:
            dataset = ReplayDataset(read_jsonl(args.data), vocab)
            cycle = True
            if len(dataset) == 0:
                fatal(f"{args.data} holds no examples", code=EXIT_DATA)

        out = pathlib.Path(args.out)
        with atomic_write(out / "config", "w") as f:
            f.write("".join(f"{line}\n" for line in config.dump()))
        saved = train(model, dataset, train_cfg, out, resume=args.resume, cycle=cycle)
        if saved:
            info(f"last checkpoint: {saved[-1]}", file=sys.stderr)
        return EXIT_OK


def read_observations(source):
    """
    ``[(label, ObservationSet)]`` from a truth-table string, a file of
    truth tables (one per line) or a JSONL file of examples.
    """
    s = source.strip()
    if s and not s.strip("01"):
        return [("table", parse_truth_table(s))]

    with open_or_stdin(source, "r") as f:
        lines = [line.strip() for line in f]
    body = [line for line in lines if line and not line.startswith("#")]
    if body and body[0].startswith("{"):
        return [(f"example {i}", ex.observations) for i, ex in enumerate(iter_jsonl(source))]
    return [(f"table {i}", parse_truth_table(line)) for i, line in enumerate(body)]


class PredictCmd(BoolCommand):
    """
    Predict formulas for observations

    --in is a truth table written inline (e.g. 0001), a file with one truth
    table per line, or a JSONL file of examples ("-" reads stdin). For every
    input the valid candidates are printed best first: fitting accuracy,
    binary gates and the formula in prefix notation.
    """

    parser_epilog = Config.help("inference")
    parser_formatter_class = argparse.RawTextHelpFormatter

    def init(self):
        add_checkpoint_argument(self.parser)
        self.parser.add_argument("--in", help="Observations to predict", required=True, dest="input")
        self.parser.add_argument("--best", help="Only print the best candidate", action="store_true")
        add_decoding_arguments(self.parser)
        add_seed_argument(self.parser)

    def run(self):
        args = self.args
        config = self.config
        predictor = make_predictor(config, args)
        self.print_config_header()

        status = EXIT_OK
        for label, obs in read_observations(args.input):
            print(f"# {label}: D={obs.D} N={obs.N}")
            try:
                ranked = predictor.ranked(obs)
            except NoCandidateError as e:
                error(f"{label}: {e}")
                status = EXIT_MODEL
                continue
            for cand in ranked[:1] if args.best else ranked:
                print(f"{cand.fitting_accuracy:.4f}\t{cand.gate_count}\t{to_text(cand.formula)}")
        return status


class EvalCmd(BoolCommand):
    """
    Run an evaluation and write its table as CSV

    sweep:        metrics along one difficulty axis (--axis, --values)
    memorization: how often generated functions repeat within one epoch
    length-gen:   more observations (--axis N) or more active variables
                  (--axis active) than seen in training
    circuits:     reference circuits (multiplexer, comparator, majority, ...)
    """

    parser_formatter_class = argparse.RawTextHelpFormatter

    def init(self):
        self.parser.add_argument("what", choices=("sweep", "memorization", "length-gen", "circuits"))
        add_checkpoint_argument(self.parser, required=False)
        self.parser.add_argument("--axis", help=f"Sweep axis: {', '.join(SWEEP_AXES)} (length-gen: N or active)")
        self.parser.add_argument("--values", help="Comma-separated grid values", type=number_list)
        self.parser.add_argument("--samples", help="Samples per grid value", type=int, default=10000)
        self.parser.add_argument("--dims", help="Dimensions probed by memorization", type=int_list, default=None)
        self.parser.add_argument("--epoch-size", type=int, default=EPOCH_SIZE, dest="epoch_size")
        self.parser.add_argument("--probe-size", type=int, default=PROBE_FUNCTIONS, dest="probe_size")
        self.parser.add_argument("--circuit", help="Circuit name, can be repeated", action="append", dest="circuits")
        self.parser.add_argument("--regime", choices=("noiseless", "noisy"), default=None)
        self.parser.add_argument("--workers", type=int, default=1)
        self.parser.add_argument("-o", "--out", help="Output CSV (default: stdout)", default="-")
        add_decoding_arguments(self.parser)
        add_seed_argument(self.parser)

    def run(self):
        args = self.args
        config = self.config

        if args.what == "memorization":
            self.print_config_header()
            df = memorization_probe(
                config.generator_config(), args.dims, args.epoch_size, args.probe_size, config.seed, args.workers
            )
            write_csv(args.out, df, config.dump())
            return EXIT_OK

        if not args.ckpt:
            fatal(f"eval {args.what} needs --ckpt")
        predictor = make_predictor(config, args)
        self.print_config_header()

        if args.what == "circuits":
            df = evaluate_circuits(predictor, args.circuits, config.seed)
        elif args.what == "sweep":
            if args.axis not in SWEEP_AXES or not args.values:
                fatal(f"eval sweep needs --axis ({', '.join(SWEEP_AXES)}) and --values")
            df = sweep(
                predictor,
                args.axis,
                args.values,
                config.generator_config(),
                config.noise_config(),
                args.samples,
                config.seed,
                args.workers,
            )
        else:
            if args.axis not in ("N", "active") or not args.values:
                fatal("eval length-gen needs --axis (N or active) and --values")
            df = length_generalization_eval(
                predictor,
                config.generator_config(),
                config.noise_config(),
                args.values,
                args.axis,
                args.samples,
                config.seed,
                args.workers,
            )
        write_csv(args.out, df, config.dump())
        return EXIT_OK


class SynthCompareCmd(BoolCommand):
    """
    Compare predicted formulas with two-level minimization

    Noiseless targets are given to the model and to a Quine-McCluskey
    minimizer; the per-sample CSV and a JSON summary (same name, .json)
    report the lengths of both in binary gates and tokens and their run time.
    """

    parser_epilog = Config.help("generator")
    parser_formatter_class = argparse.RawTextHelpFormatter

    def init(self):
        add_checkpoint_argument(self.parser)
        self.parser.add_argument("--count", help="Number of functions", type=int, required=True)
        self.parser.add_argument("--max-gates", type=int, default=None, dest="max_gates")
        self.parser.add_argument("-o", "--out", help="Output CSV", required=True)
        add_decoding_arguments(self.parser)
        add_seed_argument(self.parser)

    def run(self):
        args = self.args
        config = self.config
        predictor = make_predictor(config, args)
        if config.regime != "noiseless":
            raise ConfigError("synth-compare needs a model trained on the noiseless regime")
        self.print_config_header()

        df, summary = compare_synthesis(predictor, config.generator_config(), args.count, config.seed)
        summary_path = write_report(df, summary, args.out, header=config.dump())
        info(f"wrote {len(df)} rows to {args.out}, summary in {summary_path}", file=sys.stderr)
        return EXIT_OK


class GrnCmd(BoolCommand):
    """
    Boolean network inference and scoring

    simulate:  trajectories of --network (or of a random network of
               --genes genes, written to --network-out)
    infer:     fit one update rule per gene from --trajectories
    score:     structural metrics of --network against --truth, plus the
               dynamic accuracy on --trajectories when given
    benchmark: infer and score random networks end to end
    """

    parser_formatter_class = argparse.RawTextHelpFormatter

    def init(self):
        self.parser.add_argument("action", choices=("infer", "simulate", "score", "benchmark"))
        add_checkpoint_argument(self.parser, required=False)
        self.parser.add_argument("--network", help="Network file")
        self.parser.add_argument("--truth", help="Ground-truth network file for score")
        self.parser.add_argument("--trajectories", help="Trajectories CSV")
        self.parser.add_argument("--genes", help="Genes of a random network", type=int)
        self.parser.add_argument("--max-regulators", type=int, default=3, dest="max_regulators")
        self.parser.add_argument("--network-out", help="Where to write the random network", dest="network_out")
        self.parser.add_argument("--count", help="Trajectories per network", type=int, default=10)
        self.parser.add_argument("--steps", help="Transitions per trajectory", type=int, default=20)
        self.parser.add_argument("--networks", help="Networks in benchmark", type=int, default=20)
        self.parser.add_argument("--min-genes", type=int, default=8, dest="min_genes")
        self.parser.add_argument("--max-genes", type=int, default=16, dest="max_genes")
        self.parser.add_argument("--test-fraction", type=float, default=0.25, dest="test_fraction")
        self.parser.add_argument("--workers", help="Genes inferred in parallel", type=int, default=1)
        self.parser.add_argument("-o", "--out", help="Output file (default: stdout)", default="-")
        add_decoding_arguments(self.parser)
        add_seed_argument(self.parser)

    def _need(self, *names):
        for name in names:
            if getattr(self.args, name) in (None, ""):
                fatal(f"grn {self.args.action} needs --{name.replace('_', '-')}")

    def run(self):
        args = self.args
        config = self.config
        return getattr(self, f"run_{args.action}")(args, config)

    def run_simulate(self, args, config):
        self.print_config_header()
        rng = make_rng(config.seed)
        if args.network:
            net = read_network(args.network)
        else:
            self._need("genes")
            net = random_network(args.genes, args.max_regulators, rng)
            if args.network_out:
                write_network(args.network_out, net, header=config.dump())
        trajs = simulate(net, args.count, args.steps, rng)
        write_trajectories(args.out, trajs, header=config.dump())
        return EXIT_OK

    def run_infer(self, args, config):
        self._need("ckpt", "trajectories")
        predictor = make_predictor(config, args)
        self.print_config_header()
        net = infer_network(read_trajectories(args.trajectories), predictor, config.seed, args.workers)
        if net.fallback:
            warn(f"no candidate for genes {', '.join(map(str, sorted(net.fallback)))}: majority constant used")
        write_network(args.out, net, header=config.dump())
        return EXIT_OK

    def run_score(self, args, config):
        self._need("network", "truth")
        self.print_config_header()
        trajs = read_trajectories(args.trajectories) if args.trajectories else None
        report = score(read_network(args.network), read_network(args.truth), trajs)
        write_csv(args.out, pd.DataFrame([report]), config.dump())
        return EXIT_OK

    def run_benchmark(self, args, config):
        self._need("ckpt")
        predictor = make_predictor(config, args)
        self.print_config_header()
        df = benchmark(
            predictor,
            networks=args.networks,
            dims=(args.min_genes, args.max_genes),
            max_regulators=args.max_regulators,
            count=args.count,
            T=args.steps,
            test_fraction=args.test_fraction,
            seed=config.seed,
            workers=args.workers,
        )
        write_csv(args.out, df, config.dump())
        return EXIT_OK


class ClassifyCmd(BoolCommand):
    """
    Binary classification of tabular datasets

    Each --data CSV needs a schema sidecar <name>.schema.json (or --schema
    for a single dataset) giving the label column and the type of every
    column. The F1 score on a held-out split is written per dataset.
    """

    parser_formatter_class = argparse.RawTextHelpFormatter

    def init(self):
        add_checkpoint_argument(self.parser)
        self.parser.add_argument("--data", help="Dataset CSV file(s)", nargs="+", required=True)
        self.parser.add_argument("--schema", help="Schema of a single dataset")
        self.parser.add_argument("--test-fraction", type=float, default=0.25, dest="test_fraction")
        self.parser.add_argument("--baselines", help="CSV of external scores to merge by dataset name")
        self.parser.add_argument("-o", "--out", help="Scores CSV (default: stdout)", default="-")
        add_decoding_arguments(self.parser)
        add_seed_argument(self.parser)

    def run(self):
        args = self.args
        config = self.config
        if args.schema and len(args.data) > 1:
            fatal("--schema can only be used with a single dataset")
        predictor = make_predictor(config, args)
        if config.regime != "noisy":
            warn("classification expects a model trained on the noisy regime")
        self.print_config_header()

        rows = []
        for n, path in enumerate(args.data):
            try:
                rows.append(run_dataset(predictor, path, args.schema, args.test_fraction, config.seed, make_rng(config.seed, n)))
            except TabularError as e:
                error(f"{path}: {e}")
        df = pd.DataFrame(rows, columns=SCORE_COLUMNS)
        if args.baselines:
            df = merge_baseline_scores(df, read_baseline_scores(args.baselines))
        write_csv(args.out, df, config.dump())
        return EXIT_OK if len(rows) == len(args.data) else EXIT_DATA


class SimplifyCmd(BoolCommand):
    """
    Simplify formulas written in prefix notation

    Give the formula as argument, or --in with one formula per line.
    """

    def init(self):
        self.parser.add_argument("formula", help='Formula, e.g. "not not x_0"', nargs="?")
        self.parser.add_argument("--in", help="File with one formula per line ('-' for stdin)", dest="input")

    def run(self):
        args = self.args
        if args.formula is not None:
            print(to_text(simplify(parse_text(args.formula))))
            return EXIT_OK
        if args.input is None:
            fatal("give a formula or --in FILE")

        with open_or_stdin(args.input, "r") as f:
            for lineno, line in enumerate(f, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    f_ = parse_text(line)
                except FormulaError as e:
                    raise DataError(str(e), lineno) from None
                print(to_text(simplify(f_)))
        return EXIT_OK


def parse_args(cli, cmd_args):
    try:
        argcomplete.autocomplete(cli.parser)
    except NameError:
        pass

    return cli.parse_args(cmd_args)


def make_cli():
    cli = BoolCLI()
    cli.add_command(GenDataCmd)
    cli.add_command(TrainCmd)
    cli.add_command(PredictCmd)
    cli.add_command(EvalCmd)
    cli.add_command(SynthCompareCmd)
    cli.add_command(GrnCmd)
    cli.add_command(ClassifyCmd)
    cli.add_command(SimplifyCmd)
    return cli


def main(*cmd_args):
    log_enable_color(sys.stdout.isatty(), sys.stderr.isatty())

    cli = make_cli()
    try:
        args = parse_args(cli, list(cmd_args) if cmd_args else sys.argv[1:])
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 after --help/--version
        return EXIT_USAGE if e.code else EXIT_OK

    try:
        return cli.run(args)
    except KeyboardInterrupt:
        return EXIT_INTERRUPTED
    except FatalException as e:
        return e.code
    except ConfigError as e:
        error(str(e))
        return EXIT_USAGE
    except DATA_ERRORS as e:
        error(str(e))
        return EXIT_DATA
    except MODEL_ERRORS as e:
        error(str(e))
        return EXIT_MODEL

