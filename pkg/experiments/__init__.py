"""
tudsim experiments: one module per figure, dispatched by run_experiment().
Each module exposes run(config) -> ExperimentResult.
"""

from experiments.common import ExperimentConfig, ExperimentResult


def _run_figure(config: ExperimentConfig) -> ExperimentResult:
    name = config.experiment
    if name == "fig2":
        from experiments import fig2
        return fig2.run(config)
    elif name == "fig4":
        from experiments import fig4
        return fig4.run(config)
    elif name == "fig5":
        from experiments import fig5
        return fig5.run(config)
    elif name == "fig6":
        from experiments import fig6
        return fig6.run(config)
    elif name == "fig8":
        from experiments import fig8
        return fig8.run(config)
    elif name == "custom":
        from experiments import custom
        return custom.run(config)
    raise ValueError(f"unknown experiment {name!r}")


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Validate, run, and write <out_dir>/<id>*.csv plus <out_dir>/<id>_summary.json."""
    return _run_figure(config.validate())
