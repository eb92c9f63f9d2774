## Figures and gnuplot data files
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


class PlotEngine:
    """
    Writes benchmark figures (PNG) and gnuplot-compatible ``.dat`` files.

    Parameters
    ----------
    plot_dir : str or None
        Directory for PNG figures; figures are skipped when None.
    data_dir : str or None
        Directory for ``.dat`` files; skipped when None.
    """

    def __init__(self, plot_dir=None, data_dir=None):
        self.plot_dir = Path(plot_dir) if plot_dir else None
        self.data_dir = Path(data_dir) if data_dir else None
        for d in (self.plot_dir, self.data_dir):
            if d is not None:
                d.mkdir(parents=True, exist_ok=True)

    def _save(self, name):
        path = self.plot_dir / f"{name}.png"
        plt.tight_layout()
        plt.savefig(path, dpi=120)
        plt.close()
        return path

    def write_dat(self, name, header, rows):
        """Whitespace-separated columns with a ``#`` header line."""
        if self.data_dir is None:
            return None
        path = self.data_dir / f"{name}.dat"
        with open(path, "w") as fh:
            fh.write("# " + " ".join(header) + "\n")
            for row in rows:
                fh.write(" ".join(str(v) for v in row) + "\n")
        return path

    def accuracy_bars(self, results, name="accuracy"):
        """Original / pruned / fine-tuned metric per task."""
        rows = [(i, r.metric_before, r.metric_no_ft, r.metric_ft) for i, r in enumerate(results)]
        self.write_dat(name, ["index", "original", "pruned", "finetuned"], rows)
        if self.plot_dir is None:
            return None
        width = 0.25
        plt.figure(figsize=(6, 4))
        for k, (label, color) in enumerate((("original", "tab:blue"), ("pruned", "tab:red"), ("fine-tuned", "tab:green"))):
            plt.bar([i + (k - 1) * width for i, *_ in rows], [row[k + 1] for row in rows], width, label=label, color=color)
        plt.xticks(range(len(results)), [f"{r.task}\n{r.label}" for r in results])
        plt.ylabel("Accuracy")
        plt.ylim(0, 1)
        plt.legend()
        return self._save(name)

    def sweep_deviation(self, results, name="sweep"):
        """Deviation from the unpruned baseline per compression ratio, before and after fine-tuning."""
        rows = [(r.compression, r.deviation_direct, r.deviation_ft) for r in results]
        self.write_dat(name, ["compression", "direct", "finetuned"], rows)
        if self.plot_dir is None:
            return None
        plt.figure(figsize=(6, 4))
        plt.plot([r[0] for r in rows], [r[1] for r in rows], "o-", label="no fine-tuning")
        plt.plot([r[0] for r in rows], [r[2] for r in rows], "s-", label="fine-tuned")
        plt.xscale("log", base=2)
        plt.xlabel("Compression ratio")
        plt.ylabel("Deviation from baseline")
        plt.axhline(0.0, color="silver", lw=1)
        plt.legend()
        return self._save(name)

    def loss_traces(self, traces, name="traces"):
        """``traces`` maps a label to a list of (step, loss, metric) rows."""
        for label, trace in traces.items():
            self.write_dat(f"{name}_{label}", ["step", "loss", "metric"], trace)
        if self.plot_dir is None:
            return None
        plt.figure(figsize=(6, 4))
        for label, trace in traces.items():
            plt.plot([row[0] for row in trace], [row[1] for row in trace], label=label)
        plt.xlabel("Step")
        plt.ylabel("Loss")
        plt.legend()
        return self._save(name)

    def scaling(self, rows, slope, name="scaling"):
        self.write_dat(name, ["num_gates", "seconds"], [(r.num_gates, r.seconds) for r in rows])
        if self.plot_dir is None:
            return None
        plt.figure(figsize=(6, 4))
        plt.loglog([r.num_gates for r in rows], [r.seconds for r in rows], "o-")
        plt.xlabel("Parameterized gates N")
        plt.ylabel("Prune time (s)")
        plt.title(f"log-log slope {slope:.2f}")
        return self._save(name)
