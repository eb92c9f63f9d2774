import argparse
import io
import logging
import os
import sys

import click

from bench import (
    MERGE_ALL_EPSILON,
    bench_classify,
    bench_compression_sweep,
    bench_scaling,
    write_results_csv,
    write_scaling_csv,
)
from checks import run_checks
from circuit import Circuit, Hamiltonian, build_hea
from constants import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPSILON,
    DEFAULT_ETA_CAP,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MAX_NEIGHBORS,
    DEFAULT_OPTIMIZER,
    DEFAULT_REDUCTION,
    DEFAULT_STEPS,
    EXIT_ACCEPTANCE,
    EXIT_OK,
    EXIT_USAGE,
    MAX_DENSE_QUBITS,
    THREADS_ENV,
)
from datasets import exact_ground_energy, gen_bars_and_stripes, gen_synthetic, gen_tfim, load_csv_dataset
from dualrep import FEATURE_COLUMNS, LocalityPolicy, features_table
from errors import LiePruneError
from fsdist import ReferenceBatch
from plots import PlotEngine
from pruner import MergeMode, PruneConfig, prune
from train import ClassificationObjective, GradMethod, TrainConfig, VQEObjective, finetune, write_trace
from utils import make_rng, write_csv

logger = logging.getLogger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_task(parser, required=True):
    task = parser.add_mutually_exclusive_group(required=required)
    task.add_argument("--data", type=str, help="CSV of feature rows with a trailing 0/1 label")
    task.add_argument("--hamiltonian", type=str, help="Hamiltonian text file ('coefficient PAULI' per line)")


def _add_train(parser, steps=DEFAULT_STEPS):
    parser.add_argument("--steps", type=int, default=steps)
    parser.add_argument("--lr", type=float, default=DEFAULT_LEARNING_RATE)
    parser.add_argument("--optimizer", type=str, default=DEFAULT_OPTIMIZER)
    parser.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    parser.add_argument("--grad-method", type=str, default=GradMethod.ADJOINT.value, choices=[m.value for m in GradMethod])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--trace", type=str, default=None, help="CSV of step, loss, metric")
    parser.add_argument("--progress", action="store_true", default=False)


def _add_plots(parser):
    parser.add_argument("--plot", type=str, default=None, help="Directory for PNG figures")
    parser.add_argument("--plot-data", type=str, default=None, help="Directory for gnuplot .dat files")


def get_args(argv=None):
    parser = ArgumentParser(prog="lieprune", description="Lie-group structured pruning of parameterized circuits")
    parser.add_argument("--threads", type=int, default=None, help=f"Worker threads (overrides {THREADS_ENV})")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", default=False)
    verbosity.add_argument("--quiet", action="store_true", default=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-hea", help="Write a hardware-efficient ansatz as circuit JSON")
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--layers", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, required=True)

    p = sub.add_parser("gen-bas", help="Write the bars-and-stripes dataset as CSV")
    p.add_argument("--size", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, required=True)

    p = sub.add_parser("gen-tfim", help="Write a transverse-field Ising Hamiltonian")
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--coupling", type=float, default=1.0)
    p.add_argument("--field", type=float, default=1.0)
    p.add_argument("--out", type=str, required=True)

    p = sub.add_parser("features", help="Per-gate dual-space features as CSV")
    p.add_argument("--circuit", type=str, required=True)
    _add_task(p)
    p.add_argument("--policy", type=str, default="same-layer")
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default=None)

    p = sub.add_parser("prune", help="One-shot pruning of a circuit")
    p.add_argument("--circuit", type=str, required=True)
    _add_task(p)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--eta-cap", type=float, default=DEFAULT_ETA_CAP)
    p.add_argument("--policy", type=str, default="same-layer", help="same-layer, same-qubit, global or qubit-block:B")
    p.add_argument("--mode", type=str, default=MergeMode.TIE.value, choices=[m.value for m in MergeMode])
    p.add_argument("--max-neighbors", type=int, default=DEFAULT_MAX_NEIGHBORS)
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    p.add_argument("--reduction", type=str, default=DEFAULT_REDUCTION)
    p.add_argument("--exact", action="store_true", default=False, help="Always use exact distances")
    p.add_argument(
        "--sensitivity-method",
        type=str,
        default=GradMethod.PARAM_SHIFT.value,
        choices=[m.value for m in GradMethod],
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--report", type=str, default=None)
    p.add_argument("--emit-distances", type=str, default=None, help="CSV of every evaluated pair")

    p = sub.add_parser("train", help="Train a circuit on a classification dataset")
    p.add_argument("--circuit", type=str, default=None)
    p.add_argument("--qubits", type=int, default=8)
    p.add_argument("--layers", type=int, default=12)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--out", type=str, required=True)
    _add_train(p)

    p = sub.add_parser("vqe", help="Minimize the energy of a Hamiltonian")
    p.add_argument("--hamiltonian", type=str, required=True)
    p.add_argument("--circuit", type=str, default=None)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--out", type=str, required=True)
    _add_train(p)

    p = sub.add_parser("bench-classify", help="Train, prune and fine-tune a classifier")
    p.add_argument("--dataset", type=str, default="bas", help="bas, synthetic or a CSV path")
    p.add_argument("--qubits", type=int, default=8)
    p.add_argument("--layers", type=int, default=12)
    p.add_argument("--epsilon", type=float, default=MERGE_ALL_EPSILON)
    p.add_argument("--policy", type=str, default="same-layer")
    p.add_argument("--train-steps", type=int, default=300)
    p.add_argument("--ft-steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--out", type=str, required=True)
    _add_plots(p)

    p = sub.add_parser("bench-compression", help="Compression-ratio sweep on a VQE task")
    p.add_argument("--hamiltonian", type=str, default=None, help="Defaults to a TFIM chain on --qubits")
    p.add_argument("--qubits", type=int, default=6)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--ratios", type=int, nargs="+", default=[1, 2, 3, 6])
    p.add_argument("--train-steps", type=int, default=400)
    p.add_argument("--ft-steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, required=True)
    _add_plots(p)

    p = sub.add_parser("bench-scaling", help="Prune-phase wall time against gate count")
    p.add_argument("--layers", type=int, nargs="+", default=[4, 8, 16, 32])
    p.add_argument("--qubits", type=int, default=8)
    p.add_argument("--max-neighbors", type=int, default=DEFAULT_MAX_NEIGHBORS)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, required=True)
    _add_plots(p)

    p = sub.add_parser("verify", help="Run the verification suites")
    p.add_argument("--only", type=str, nargs="+", default=None)
    p.add_argument("--quick", action="store_true", default=False)
    p.add_argument("--seed", type=int, default=0)
    return parser.parse_args(argv)


class LiePrune:
    """
    Entry point of the command-line tool.

    Parameters
    ----------
    args : argparse.Namespace
    """

    def __init__(self, args):
        self.args = args

    def run(self):
        handler = getattr(self, self.args.command.replace("-", "_"))
        return handler() or EXIT_OK

    def _objective(self, num_qubits):
        if self.args.data:
            return ClassificationObjective(load_csv_dataset(self.args.data), num_qubits)
        return VQEObjective(Hamiltonian.load(self.args.hamiltonian))

    def _train_config(self):
        return TrainConfig(
            steps=self.args.steps,
            learning_rate=self.args.lr,
            optimizer=self.args.optimizer,
            batch_size=self.args.batch_size,
            seed=self.args.seed,
            grad_method=self.args.grad_method,
            progress=self.args.progress,
        )

    def build_hea(self):
        circuit = build_hea(self.args.qubits, self.args.layers, self.args.seed)
        circuit.save(self.args.out)
        logger.info(f"Wrote {len(circuit.gates)} gates ({circuit.parameter_count()} parameters) to {self.args.out}")

    def gen_bas(self):
        dataset = gen_bars_and_stripes(self.args.size, self.args.seed)
        dataset.to_csv(self.args.out)
        logger.info(f"Wrote {len(dataset)} patterns to {self.args.out}")

    def gen_tfim(self):
        gen_tfim(self.args.qubits, self.args.coupling, self.args.field).save(self.args.out)
        logger.info(f"Wrote a {self.args.qubits}-qubit TFIM Hamiltonian to {self.args.out}")

    def features(self):
        circuit = Circuit.load(self.args.circuit)
        objective = self._objective(circuit.num_qubits)
        rng = make_rng(self.args.seed)
        refs = ReferenceBatch(objective.reference_states(self.args.batch_size, rng), circuit.num_qubits)
        rows = features_table(circuit, refs, LocalityPolicy.parse(self.args.policy))
        if self.args.out:
            write_csv(self.args.out, FEATURE_COLUMNS, rows)
        else:
            buffer = io.StringIO()
            write_csv(buffer, FEATURE_COLUMNS, rows)
            click.echo(buffer.getvalue(), nl=False)

    def prune(self):
        circuit = Circuit.load(self.args.circuit)
        config = PruneConfig(
            epsilon=self.args.epsilon,
            eta_cap=self.args.eta_cap,
            batch_size=self.args.batch_size,
            locality_policy=LocalityPolicy.parse(self.args.policy),
            merge_mode=self.args.mode,
            use_fast_distance=not self.args.exact,
            max_neighbors=self.args.max_neighbors,
            seed=self.args.seed,
            reduction=self.args.reduction,
            sensitivity_method=self.args.sensitivity_method,
            emit_distances=self.args.emit_distances is not None,
            threads=self.args.threads,
        )
        pruned, report = prune(circuit, self._objective(circuit.num_qubits), config)
        pruned.save(self.args.out)
        if self.args.report:
            report.save(self.args.report)
        if self.args.emit_distances:
            report.write_distances(self.args.emit_distances)
        click.echo(
            f"{report.params_before} -> {report.params_after} parameters "
            f"({100 * report.params_after / max(report.params_before, 1):.1f}% left, {report.compression:.2f}x)"
        )

    def _finish_training(self, circuit, objective):
        trained, trace = finetune(circuit, objective, self._train_config())
        trained.save(self.args.out)
        if self.args.trace:
            write_trace(self.args.trace, trace, objective.metric_name)
        return trained, trace

    def train(self):
        if self.args.circuit:
            circuit = Circuit.load(self.args.circuit)
        else:
            circuit = build_hea(self.args.qubits, self.args.layers, self.args.seed)
        objective = ClassificationObjective(load_csv_dataset(self.args.data), circuit.num_qubits)
        _, trace = self._finish_training(circuit, objective)
        click.echo(f"loss {trace[-1].loss:.6f}, accuracy {trace[-1].metric:.4f}")

    def vqe(self):
        hamiltonian = Hamiltonian.load(self.args.hamiltonian)
        if self.args.circuit:
            circuit = Circuit.load(self.args.circuit)
        else:
            circuit = build_hea(hamiltonian.num_qubits, self.args.layers, self.args.seed)
        _, trace = self._finish_training(circuit, VQEObjective(hamiltonian))
        message = f"energy {trace[-1].loss:.8f}"
        if hamiltonian.num_qubits <= MAX_DENSE_QUBITS:
            exact = exact_ground_energy(hamiltonian)
            message += f" (exact ground energy {exact:.8f}, gap {trace[-1].loss - exact:.3e})"
        click.echo(message)

    def _dataset(self, seed):
        name = self.args.dataset
        if name == "bas":
            return gen_bars_and_stripes(4, seed)
        if name == "synthetic":
            return gen_synthetic(64, min(16, 2**self.args.qubits), seed)
        return load_csv_dataset(name)

    def bench_classify(self):
        results = []
        traces = {}
        for seed in self.args.seeds:
            result, run_traces = bench_classify(
                self._dataset(seed),
                self.args.qubits,
                self.args.layers,
                PruneConfig(
                    epsilon=self.args.epsilon,
                    locality_policy=LocalityPolicy.parse(self.args.policy),
                    sensitivity_method=GradMethod.ADJOINT,
                    seed=seed,
                    threads=self.args.threads,
                ),
                TrainConfig(steps=self.args.train_steps, seed=seed),
                TrainConfig(steps=self.args.ft_steps, seed=seed + 1000),
                seed=seed,
            )
            results.append(result)
            traces[f"finetune_seed{seed}"] = run_traces["finetune"]
        write_results_csv(self.args.out, results)
        engine = PlotEngine(self.args.plot, self.args.plot_data)
        engine.accuracy_bars(results)
        engine.loss_traces(traces)
        for r in results:
            click.echo(
                f"{r.task} seed {r.seed}: {r.params_before} -> {r.params_after} "
                f"({r.percent_left:.1f}% / {r.compression:.1f}x), "
                f"accuracy {r.metric_before:.3f} -> {r.metric_no_ft:.3f} -> {r.metric_ft:.3f}"
            )

    def bench_compression(self):
        if self.args.hamiltonian:
            hamiltonian = Hamiltonian.load(self.args.hamiltonian)
        else:
            hamiltonian = gen_tfim(self.args.qubits)
        objective = VQEObjective(hamiltonian)
        circuit = build_hea(hamiltonian.num_qubits, self.args.layers, self.args.seed)
        trained, _ = finetune(circuit, objective, TrainConfig(steps=self.args.train_steps, seed=self.args.seed))
        results = bench_compression_sweep(
            trained,
            objective,
            self.args.ratios,
            TrainConfig(steps=self.args.ft_steps, seed=self.args.seed),
            self.args.seed,
        )
        write_results_csv(self.args.out, results)
        PlotEngine(self.args.plot, self.args.plot_data).sweep_deviation(results)
        for r in results:
            click.echo(
                f"{r.label}: {r.params_after} params, dE direct {r.deviation_direct:+.3e}, "
                f"dE fine-tuned {r.deviation_ft:+.3e}"
            )

    def bench_scaling(self):
        rows, slope = bench_scaling(
            self.args.layers,
            num_qubits=self.args.qubits,
            max_neighbors=self.args.max_neighbors,
            repeats=self.args.repeats,
            threads=self.args.threads,
            seed=self.args.seed,
        )
        write_scaling_csv(self.args.out, rows, slope)
        PlotEngine(self.args.plot, self.args.plot_data).scaling(rows, slope)
        click.echo(f"log-log slope {slope:.3f} over N = {[r.num_gates for r in rows]}")

    def verify(self):
        results = run_checks(self.args.only, self.args.quick, self.args.seed)
        for r in results:
            status = click.style("PASS", fg="green") if r.passed else click.style("FAIL", fg="red")
            click.echo(f"{status} {r.name:<12} {r.seconds:7.2f}s  {r.detail}")
        failed = [r.name for r in results if not r.passed]
        if failed:
            logger.error(f"Failed checks: {', '.join(failed)}")
            return EXIT_ACCEPTANCE
        return EXIT_OK


def main(argv=None):
    args = get_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(format="%(levelname)s:%(message)s", level=level)
    if args.threads is not None:
        os.environ[THREADS_ENV] = str(args.threads)
    try:
        return LiePrune(args).run()
    except LiePruneError as e:
        logger.error(str(e))
        return e.exit_code
    except (ValueError, OSError) as e:
        logger.error(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
