import os

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import pandas as pd
import seaborn as sns
from loguru import logger


class Visualizer:
    """Visualizer class for kernel and run figures

    Produces PNG figures next to a run's outputs: the estimated kernel as a
    heatmap, the per-level l1/l2 diagnostic and bench defocus scores.
    """

    def __init__(self, output_dir):
        """Initialize the Visualizer

        Args:
            output_dir: Directory receiving the figures
        """
        self.output_dir = str(output_dir)
        sns.set_theme(style='whitegrid')
        os.makedirs(self.output_dir, exist_ok=True)
        logger.info("Visualizer initialized")

    def _path(self, name):
        return os.path.join(self.output_dir, f"{name}.png")

    def plot_kernel(self, kernel, name="kernel"):
        """Draw a kernel as a heatmap

        Args:
            kernel (BlurKernel): Kernel to draw
            name (str): File stem

        Returns:
            str: Path to the generated image file, None on failure
        """
        try:
            plt.figure(figsize=(6, 5))
            sns.heatmap(kernel.weights, cmap='viridis', square=True, cbar=True,
                        xticklabels=False, yticklabels=False)
            plt.title(f"Estimated kernel ({kernel.side}x{kernel.side})", fontsize=14)
            plt.tight_layout()
            output_path = self._path(name)
            plt.savefig(output_path, dpi=100)
            plt.close()
            logger.info(f"Kernel heatmap written to {output_path}")
            return output_path
        except Exception as e:
            plt.close()
            logger.error(f"Error plotting kernel: {e}")
            return None

    def plot_level_trace(self, run, name="levels"):
        """Plot the l1/l2 ratio of latent and observed stacks per pyramid level

        Args:
            run (DeblurRun): Completed run
            name (str): File stem

        Returns:
            str: Path to the generated image file, None on failure
        """
        rows = []
        for entry in run.trace:
            for source, value in (("latent", entry.ratio_latent), ("observed", entry.ratio_observed)):
                if value is not None:
                    rows.append({"kernel side": entry.kernel_side, "stack": source, "l1/l2": value})
        if not rows:
            logger.warning("No level diagnostics available to plot")
            return self._generate_empty_chart(name, "l1/l2 per level")

        try:
            df = pd.DataFrame(rows)
            plt.figure(figsize=(8, 5))
            sns.lineplot(data=df, x="kernel side", y="l1/l2", hue="stack", marker="o", linewidth=2)
            plt.title("Sparsity ratio per pyramid level", fontsize=14)
            plt.tight_layout()
            output_path = self._path(name)
            plt.savefig(output_path, dpi=100)
            plt.close()
            return output_path
        except Exception as e:
            plt.close()
            logger.error(f"Error plotting level trace: {e}")
            return None

    def plot_bench(self, table, name="bench"):
        """Bar chart of mean defocus score per filter-count variant

        Args:
            table (pd.DataFrame): Bench table from ReportGenerator.bench_table
            name (str): File stem

        Returns:
            str: Path to the generated image file, None on failure
        """
        columns = [c for c in table.columns if c.startswith("Q_B ")]
        if table.empty or not columns:
            return self._generate_empty_chart(name, "Defocus score per filter count")
        try:
            means = table[columns].mean().reset_index()
            means.columns = ["variant", "mean Q_B"]
            plt.figure(figsize=(8, 5))
            sns.barplot(data=means, x="variant", y="mean Q_B", color="#3498db")
            plt.title("Mean defocus score (lower is sharper)", fontsize=14)
            plt.tight_layout()
            output_path = self._path(name)
            plt.savefig(output_path, dpi=100)
            plt.close()
            return output_path
        except Exception as e:
            plt.close()
            logger.error(f"Error plotting bench table: {e}")
            return None

    def _generate_empty_chart(self, name, title):
        """Generate an empty chart when data is not available

        Args:
            name (str): File stem
            title (str): Chart title

        Returns:
            str: Path to the generated image file
        """
        plt.figure(figsize=(8, 5))
        plt.text(0.5, 0.5, "Insufficient data available", ha="center", va="center", fontsize=14)
        plt.title(title, fontsize=14)
        plt.axis("off")
        output_path = self._path(name)
        plt.savefig(output_path, dpi=100)
        plt.close()
        return output_path
